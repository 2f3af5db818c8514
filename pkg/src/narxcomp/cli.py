"""Command line front end: batch experiments on NARX models, written as CSV.

Every command loads a model (a JSON file or the name of a bundled model),
runs one experiment and writes one CSV file with a header row.  Floats are
formatted with 12 significant digits, so rerunning the same configuration
produces a byte-identical file.  Exit codes: 0 success, 2 configuration
error (the message names the offending option), 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from . import benchmarks
from . import compensator as comp
from . import evaluation as ev
from . import model as narx
from .poly import DegreeMismatch, NoConvergence

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

RUN_HEADER = ("k", "r", "m", "y_c", "y_u")
TABLE_HEADER = ("f", "amplitude", "mape_comp", "mape_uncomp")

BUNDLED_MODELS = ("heater", "bouc_wen", "bouc_wen_sigma1", "valve")

#: Default sampling time per bundled model, seconds.
DEFAULT_TS = {
    "heater": ev.HEATER_TS,
    "bouc_wen": ev.BOUC_WEN_TS,
    "bouc_wen_sigma1": ev.BOUC_WEN_TS,
    "valve": 0.01,
}

DEFAULT_SEED = 20260817

REPRODUCE_TARGETS = (
    "table1", "table3", "table-bw-model", "table-bw-comp", "fig8",
)


class ConfigError(Exception):
    """Bad configuration; the message starts with the offending key."""

    def __init__(self, key, message):
        super().__init__("%s: %s" % (key, message))
        self.key = key


class NumericFailure(RuntimeError):
    """An experiment could not be completed numerically."""


#: Exceptions that mean the configuration was fine but the math failed.
NUMERIC_ERRORS = (
    NumericFailure,
    comp.NoFeasibleRoot,
    comp.IdenticallyZero,
    narx.NonFinite,
    narx.OutOfLoopRange,
    narx.LoopUnsettled,
    narx.DegenerateStatics,
    narx.NoStableFixedPoint,
    ev.DegenerateRange,
    NoConvergence,
    DegreeMismatch,
    FloatingPointError,
    OverflowError,
)

_SIGNAL_KEYS = ("amplitude", "frequency", "phase", "offset", "hold_at")
_SIGNAL_ALIASES = {
    "a": "amplitude", "amp": "amplitude", "g": "amplitude", "g0": "amplitude",
    "f": "frequency", "freq": "frequency",
    "u0": "offset", "r0": "offset", "off": "offset",
    "phi": "phase",
    "hold": "hold_at",
}


# ---------------------------------------------------------------------------
# Config parsing helpers


def resolve_model(text):
    """Load a model by bundled name or file path.  Returns (model, name)."""
    if text in BUNDLED_MODELS:
        ref = resources.files("narxcomp").joinpath("models/%s.json" % text)
        with ref.open() as fh:
            return narx.model_from_dict(json.load(fh)), text
    if not os.path.exists(text):
        raise ConfigError(
            "model",
            "%r is neither a file nor one of the bundled models %s"
            % (text, ", ".join(BUNDLED_MODELS)),
        )
    name = os.path.splitext(os.path.basename(text))[0]
    try:
        return narx.load_model(text), name
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError("model", "cannot load %r: %s" % (text, e))


def parse_signal(text):
    """Parse ``kind:key=value,...`` into a :class:`benchmarks.SignalSpec`.

    Frequencies are in Hz (converted with --ts at generation time).  Keys:
    amplitude (a, g, g0), frequency (f), phase, offset (u0, r0), hold_at
    (hold, integer sample index).
    """
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    if kind not in ("sine", "steps", "sine_then_hold"):
        raise ConfigError("signal", "unknown kind %r" % kind)
    fields = {}
    if body.strip():
        for item in body.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ConfigError("signal", "expected key=value, got %r" % item)
            key = key.strip().lower()
            key = _SIGNAL_ALIASES.get(key, key)
            if key not in _SIGNAL_KEYS:
                raise ConfigError("signal", "unknown parameter %r" % item.split("=")[0].strip())
            try:
                fields[key] = int(val) if key == "hold_at" else float(val)
            except ValueError:
                raise ConfigError("signal", "bad value in %r" % item.strip())
    return benchmarks.SignalSpec(kind, **fields)


def parse_grid(text):
    """Parse ``start:stop:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return start + step * np.arange(count)
        vals = [float(p) for p in text.split(",")]
        if not vals:
            raise ValueError
        return np.asarray(vals)
    except ValueError:
        raise ConfigError(
            "grid", "expected start:stop:step or comma-separated values, got %r" % text
        )


def pick_ts(ts_arg, model_name):
    if ts_arg is not None:
        if ts_arg <= 0:
            raise ConfigError("ts", "sampling time must be positive")
        return float(ts_arg)
    return DEFAULT_TS.get(model_name, 1.0)


def choose_n(n_arg, spec, ts):
    """Explicit --n, or five periods of a periodic signal."""
    if n_arg is not None:
        if n_arg < 2:
            raise ConfigError("n", "need at least 2 samples")
        return int(n_arg)
    if spec.frequency > 0:
        period = int(round(1.0 / (spec.frequency * ts)))
        if period >= 2:
            return 5 * period
    raise ConfigError(
        "n", "cannot infer a length from signal frequency %g at ts=%g; pass --n"
        % (spec.frequency, ts)
    )


def build_signal(spec, n, ts):
    try:
        return benchmarks.generate(spec, n, ts)
    except ValueError as e:
        raise ConfigError("signal", str(e))


def resolve_plant(text, model, seed_value, r_start):
    """Plant factory for compensation runs.

    ``heater`` and ``bouc_wen`` are the bundled simulated plants;
    ``model_as_plant`` runs the model itself (optionally
    ``model_as_plant:<path>`` for a different model file).
    """
    if text == "heater":
        return benchmarks.HammersteinHeater
    if text == "bouc_wen":
        return benchmarks.BoucWenPlant
    if text == "model_as_plant" or text.startswith("model_as_plant:"):
        _, _, path = text.partition(":")
        plant_model = model if not path else resolve_model(path)[0]
        return lambda: ev.model_as_plant(plant_model, seed_value, r_start)
    raise ConfigError(
        "plant",
        "%r is not heater, bouc_wen or model_as_plant[:<path>]" % text,
    )


def loop_params(args, model, spec, ts, n):
    """(amplitude, f_cps, center) for the seeding loop, with defaults.

    Defaults span the full input range at the signal's fundamental
    frequency (or one cycle over the whole run for aperiodic signals).
    """
    lo, hi = model.input_range
    amp = args.loop_amplitude
    center = args.loop_center
    if center is None:
        center = 0.5 * (lo + hi)
    if amp is None:
        amp = hi - center
    if amp <= 0:
        raise ConfigError("loop-amplitude", "loop amplitude must be positive")
    if args.loop_f is not None:
        if args.loop_f <= 0:
            raise ConfigError("loop-f", "loop frequency must be positive")
        f_cps = args.loop_f * ts
    elif spec is not None and spec.frequency > 0:
        f_cps = spec.frequency * ts
    else:
        f_cps = 1.0 / max(n, 64)
    if int(round(1.0 / f_cps)) < 8:
        raise ConfigError(
            "loop-f", "loop period of %g samples is too coarse" % (1.0 / f_cps)
        )
    return amp, f_cps, center


def trace_loop(model, params):
    return narx.hysteresis_loop(model, *params)


# ---------------------------------------------------------------------------
# Output


def format_value(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    return "%.12g" % v


def write_rows(path, header, rows):
    """Write one CSV; nothing is left behind if writing fails."""
    lines = [",".join(header)]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except BaseException:
        if os.path.exists(path):
            try:
                os.unlink(path)
            except OSError:
                pass
        raise


# ---------------------------------------------------------------------------
# Commands (each returns (header, rows))


def cmd_simulate(args):
    model, name = resolve_model(args.model)
    ts = pick_ts(args.ts, name)
    spec = parse_signal(args.signal)
    n = choose_n(args.n, spec, ts)
    u = build_signal(spec, n, ts)
    y = narx.simulate_free_run(model, u, [0.0] * model.n_y)
    return ("k", "u", "y"), [(k, u[k], y[k]) for k in range(n)]


def cmd_fixed_points(args):
    model, _ = resolve_model(args.model)
    try:
        levels = [float(p) for p in args.u.split(",")]
    except ValueError:
        raise ConfigError("u", "expected comma-separated input levels, got %r" % args.u)
    branch_sign = {"steady": 0, "loading": 1, "unloading": -1}[args.branch]
    n_lam = model.max_y_lag()
    header = ("u", "y") + tuple("lambda%d" % (i + 1) for i in range(n_lam)) + ("stable",)
    rows = []
    for u_bar in levels:
        for fp in narx.fixed_points(model, u_bar, branch_sign):
            rows.append(
                (fp.u_bar, fp.y_bar)
                + fp.eigen_mags
                + ("stable" if fp.stable else "unstable",)
            )
    return header, rows


def cmd_loop(args):
    model, name = resolve_model(args.model)
    if not model.is_hysteretic():
        raise ConfigError("model", "model has no phi regressors; no loop to trace")
    ts = pick_ts(args.ts, name)
    if args.f <= 0:
        raise ConfigError("f", "loop frequency must be positive")
    loop = narx.hysteresis_loop(model, args.amplitude, args.f * ts, args.center)
    rows = [(u, y, "loading") for u, y in loop.loading]
    rows += [(u, y, "unloading") for u, y in loop.unloading]
    return ("u", "y", "branch"), rows


def cmd_compensate(args):
    model, name = resolve_model(args.model)
    ts = pick_ts(args.ts, name)
    spec = parse_signal(args.signal)
    n = choose_n(args.n, spec, ts)
    r = build_signal(spec, n, ts)

    mode = args.mode
    if mode == "auto":
        mode = "hysteresis" if model.is_hysteretic() else "dynamic"
    if mode == "hysteresis" and not model.is_hysteretic():
        raise ConfigError("mode", "hysteresis mode needs phi regressors in the model")
    if mode in ("dynamic", "static") and model.is_hysteretic():
        raise ConfigError("mode", "%s mode cannot handle a hysteretic model" % mode)

    loop = None
    if mode == "hysteresis":
        loop = trace_loop(model, loop_params(args, model, spec, ts, n))
        seed = comp.init_hysteresis(model, loop, float(r[0]), float(r[1]))
    elif mode == "dynamic":
        try:
            seed = comp.init_dynamic(model, float(r[0]))
        except ValueError as e:
            raise NumericFailure(str(e))
    else:  # static: settled inversion per sample, no shared state
        m = np.empty(n)
        for i in range(n):
            try:
                m[i] = comp.solve_static(model, float(r[i]))
            except ValueError as e:
                raise NumericFailure(str(e))
        seed = [m[0]]

    factory = resolve_plant(args.plant, model, seed[0], float(r[0]))
    if mode == "static":
        y_c = factory().simulate(m)
        y_u = factory().simulate(r)
        mape_c = ev.mape(r, y_c)
        mape_u = ev.mape(r, y_u)
        holds = 0
    else:
        rep = ev.compensation_experiment(model, factory, r, loop=loop)
        m, y_c, y_u = rep.m, rep.y_comp, rep.y_uncomp
        mape_c, mape_u = rep.mape_comp, rep.mape_uncomp
        holds = int(round(rep.hold_rate * n))
    print(
        "mape_comp=%.4g%% mape_uncomp=%.4g%% holds=%d" % (mape_c, mape_u, holds),
        file=sys.stderr,
    )
    return RUN_HEADER, [(k, r[k], m[k], y_c[k], y_u[k]) for k in range(n)]


def cmd_montecarlo(args):
    model, name = resolve_model(args.model)
    if args.rel_std < 0:
        raise ConfigError("rel-std", "relative std must be >= 0")
    if args.runs < 1:
        raise ConfigError("runs", "need at least one run")
    if (args.grid is None) == (args.signal is None):
        raise ConfigError("grid", "pass exactly one of --grid or --signal")

    if args.grid is not None:
        if model.is_hysteretic():
            raise ConfigError("model", "the static sweep needs a non-hysteretic model")
        if args.plant != "model_as_plant":
            raise ConfigError(
                "plant", "the static sweep always runs against the heater plant"
            )
        grid = parse_grid(args.grid)
        band = ev.monte_carlo(
            model, args.rel_std, args.runs,
            ev.heater_static_sweep(grid), args.seed, grid=grid,
        )
        header = ("r", "mean", "std", "lo", "hi")
    else:
        ts = pick_ts(args.ts, name)
        spec = parse_signal(args.signal)
        n = choose_n(args.n, spec, ts)
        r = build_signal(spec, n, ts)
        if model.is_hysteretic():
            lp = loop_params(args, model, spec, ts, n)
            seed = comp.init_hysteresis(
                model, trace_loop(model, lp), float(r[0]), float(r[1])
            )
        else:
            lp = None
            seed = comp.init_dynamic(model, float(r[0]))
        factory = resolve_plant(args.plant, model, seed[0], float(r[0]))

        def experiment(pm):
            if lp is not None:
                s = comp.init_hysteresis(
                    pm, trace_loop(pm, lp), float(r[0]), float(r[1])
                )
            else:
                s = comp.init_dynamic(pm, float(r[0]))
            sess = comp.CompensationSession(pm, list(s))
            return factory().simulate(comp.run(sess, r))

        band = ev.monte_carlo(
            model, args.rel_std, args.runs, experiment, args.seed,
            grid=np.arange(n),
        )
        header = ("k", "mean", "std", "lo", "hi")

    if band.n_skipped:
        print(
            "skipped %d of %d runs" % (band.n_skipped, band.n_runs),
            file=sys.stderr,
        )
    rows = list(zip(band.grid, band.mean, band.std, band.lo, band.hi))
    return header, rows


def _bundled(name):
    return resolve_model(name)[0]


def cmd_reproduce(args):
    target = args.target
    if target == "table1":
        return TABLE_HEADER, ev.heater_validation_table(_bundled("heater"))
    if target == "table3":
        return TABLE_HEADER, ev.heater_compensation_table(_bundled("heater"))
    if target == "table-bw-model":
        return TABLE_HEADER, ev.bouc_wen_validation_table(_bundled("bouc_wen"))
    if target == "table-bw-comp":
        return TABLE_HEADER, ev.bouc_wen_compensation_table(_bundled("bouc_wen"))
    # fig8: response of both Bouc-Wen variants to a sine frozen mid-cycle
    u, y_free = ev.drift_hold_run(_bundled("bouc_wen"))
    _, y_cns = ev.drift_hold_run(_bundled("bouc_wen_sigma1"))
    header = ("k", "u", "y_unconstrained", "y_constrained")
    return header, [(k, u[k], y_free[k], y_cns[k]) for k in range(len(u))]


# ---------------------------------------------------------------------------
# Argument wiring


def _add_model(p):
    p.add_argument(
        "--model", "-m", required=True,
        help="model JSON file or bundled name (%s)" % ", ".join(BUNDLED_MODELS),
    )


def _add_output(p):
    p.add_argument(
        "--output", "-o", default="-",
        help="output CSV path ('-' for stdout, the default)",
    )


def _add_ts(p):
    p.add_argument(
        "--ts", type=float, default=None,
        help="sampling time in seconds (default: per bundled model, else 1)",
    )


def _add_signal(p, what):
    p.add_argument(
        "--signal", required=True,
        help="%s, e.g. sine:G0=30,f=2,phase=1.5708 (f in Hz)" % what,
    )
    p.add_argument(
        "--n", type=int, default=None,
        help="number of samples (default: five periods of the signal)",
    )


def _add_loop_flags(p):
    p.add_argument("--loop-amplitude", type=float, default=None,
                   help="seeding loop amplitude (default: half the input range)")
    p.add_argument("--loop-f", type=float, default=None,
                   help="seeding loop frequency in Hz (default: signal frequency)")
    p.add_argument("--loop-center", type=float, default=None,
                   help="seeding loop center (default: middle of the input range)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="narxcomp",
        description="NARX-model compensation experiments, as reproducible CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="free-run simulation of a model")
    _add_model(p)
    _add_signal(p, "excitation")
    _add_ts(p)
    _add_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixed-points", help="equilibria and their stability")
    _add_model(p)
    p.add_argument("--u", required=True,
                   help="constant input level(s), comma separated")
    p.add_argument("--branch", choices=("steady", "loading", "unloading"),
                   default="steady",
                   help="sign given to bare phi2 regressors (default steady)")
    _add_output(p)
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("loop", help="trace the settled hysteresis loop")
    _add_model(p)
    p.add_argument("--amplitude", type=float, required=True)
    p.add_argument("--f", type=float, required=True, help="excitation frequency, Hz")
    p.add_argument("--center", type=float, default=0.0)
    _add_ts(p)
    _add_output(p)
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("compensate", help="track a reference on a plant")
    _add_model(p)
    _add_signal(p, "reference")
    _add_ts(p)
    p.add_argument("--plant", default="model_as_plant",
                   help="heater, bouc_wen or model_as_plant[:<path>] (default)")
    p.add_argument("--mode", choices=("auto", "static", "dynamic", "hysteresis"),
                   default="auto")
    _add_loop_flags(p)
    _add_output(p)
    p.set_defaults(func=cmd_compensate)

    p = sub.add_parser("montecarlo", help="robustness band under coefficient noise")
    _add_model(p)
    p.add_argument("--rel-std", type=float, required=True,
                   help="relative coefficient std, e.g. 0.005")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--grid", default=None,
                   help="static sweep levels (start:stop:step or comma list)")
    p.add_argument("--signal", default=None,
                   help="tracking reference instead of a static sweep")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--plant", default="model_as_plant",
                   help="plant for tracking mode (default model_as_plant)")
    _add_ts(p)
    _add_loop_flags(p)
    _add_output(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("reproduce", help="regenerate a bundled benchmark grid")
    p.add_argument("target", choices=REPRODUCE_TARGETS)
    _add_output(p)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        header, rows = args.func(args)
        write_rows(args.output, header, rows)
    except ConfigError as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as e:
        print("error: %s: %s" % (type(e).__name__, e), file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print("error: output: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
