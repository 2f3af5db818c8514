"""Polynomial NARX models: representation, simulation and steady-state analysis.

A model is a sum of terms; each term is a coefficient times a product of
lagged factors.  Factors refer to the output y, the input u, or the two
hysteresis regressors

    phi1(k) = u(k) - u(k-1)        (input increment)
    phi2(k) = sign(phi1(k))        (with sign(0) = 0)

History arguments are ordered most-recent-first: ``y_hist[0]`` is y(k-1),
``u_hist[0]`` is u(k-1), and so on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import poly
from .poly import AlgebraicPolynomial


class Signal(Enum):
    OUTPUT_Y = "y"
    INPUT_U = "u"
    PHI1 = "phi1"
    PHI2 = "phi2"


class Regime(Enum):
    """Which branch of a hysteresis loop the input is traversing."""

    LOADING = 1
    UNLOADING = -1


class InsufficientHistory(ValueError):
    """Not enough past samples to evaluate the model."""


class NonFinite(ArithmeticError):
    """Simulation produced inf or NaN (unstable model or input)."""


class DegenerateStatics(ValueError):
    """The steady-state polynomial vanishes identically: every output value
    is an equilibrium and no discrete fixed-point set exists."""


class NoStableFixedPoint(ValueError):
    """No stable equilibrium inside the output range at this input level."""


class OutOfLoopRange(ValueError):
    """Requested output level is outside the traced hysteresis loop."""


class LoopUnsettled(RuntimeError):
    """Periodic excitation never converged onto a repeating loop."""


@dataclass(frozen=True)
class Factor:
    signal: Signal
    lag: int
    power: int = 1


@dataclass(frozen=True)
class Term:
    coefficient: float
    factors: tuple = ()


@dataclass(frozen=True)
class NarxModel:
    terms: tuple
    n_y: int
    n_u: int
    tau_d: int
    ell: int
    input_range: tuple
    output_range: tuple

    def is_hysteretic(self):
        return any(
            f.signal in (Signal.PHI1, Signal.PHI2)
            for t in self.terms
            for f in t.factors
        )

    def sigma_y(self):
        """Sum of the coefficients of the purely linear output terms.

        Equal to 1 exactly when constant inputs hold the output wherever it
        is (a continuum of equilibria), the signature of a well-posed
        hysteresis model.
        """
        s = 0.0
        for t in self.terms:
            if len(t.factors) == 1:
                f = t.factors[0]
                if f.signal is Signal.OUTPUT_Y and f.power == 1:
                    s += t.coefficient
        return s

    def max_y_lag(self):
        lags = [
            f.lag for t in self.terms for f in t.factors
            if f.signal is Signal.OUTPUT_Y
        ]
        return max(lags) if lags else 0

    def max_phi_lag(self):
        lags = [
            f.lag for t in self.terms for f in t.factors
            if f.signal in (Signal.PHI1, Signal.PHI2)
        ]
        return max(lags) if lags else 0


@dataclass(frozen=True)
class FixedPoint:
    u_bar: float
    y_bar: float
    eigen_mags: tuple
    stable: bool


@dataclass(frozen=True)
class HysteresisLoop:
    """One settled period of the input-output loop under a periodic input.

    ``loading`` is sorted by u ascending, ``unloading`` by u descending;
    both are arrays of (u, y) rows.  ``period`` is the period in samples.
    """

    loading: np.ndarray
    unloading: np.ndarray
    period: int

    def y_span(self):
        ys = np.concatenate([self.loading[:, 1], self.unloading[:, 1]])
        return float(ys.min()), float(ys.max())


def validate(model):
    """Structural checks.  Returns a list of violation messages (empty = ok)."""
    problems = []
    if model.tau_d < 1:
        problems.append("tau_d must be >= 1, got %d" % model.tau_d)
    if model.n_u < model.tau_d:
        problems.append("n_u (%d) must be >= tau_d (%d)" % (model.n_u, model.tau_d))
    if model.n_y < 1:
        problems.append("n_y must be >= 1, got %d" % model.n_y)
    lo, hi = model.input_range
    if not lo < hi:
        problems.append("input_range must satisfy min < max")
    lo, hi = model.output_range
    if not lo < hi:
        problems.append("output_range must satisfy min < max")
    for ti, t in enumerate(model.terms):
        total = 0
        for f in t.factors:
            if f.power < 1:
                problems.append("term %d: factor power must be >= 1" % ti)
            total += f.power
            if f.signal is Signal.OUTPUT_Y and not 1 <= f.lag <= model.n_y:
                problems.append(
                    "term %d: y lag %d outside [1, %d]" % (ti, f.lag, model.n_y)
                )
            elif f.signal is Signal.INPUT_U and not model.tau_d <= f.lag <= model.n_u:
                problems.append(
                    "term %d: u lag %d outside [%d, %d]"
                    % (ti, f.lag, model.tau_d, model.n_u)
                )
            elif f.signal in (Signal.PHI1, Signal.PHI2) and f.lag < 1:
                problems.append("term %d: phi lag must be >= 1" % ti)
        if total > model.ell:
            problems.append(
                "term %d: degree %d exceeds ell=%d" % (ti, total, model.ell)
            )
    return problems


def _sign(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def _eval_terms(model, yat, uat):
    """Sum the model terms given lag-accessor callables yat(lag), uat(lag)."""
    acc = 0.0
    for t in model.terms:
        v = t.coefficient
        for f in t.factors:
            sig = f.signal
            if sig is Signal.OUTPUT_Y:
                x = yat(f.lag)
            elif sig is Signal.INPUT_U:
                x = uat(f.lag)
            elif sig is Signal.PHI1:
                x = uat(f.lag) - uat(f.lag + 1)
            else:
                x = _sign(uat(f.lag) - uat(f.lag + 1))
            if f.power == 1:
                v *= x
            else:
                v *= x ** f.power
        acc += v
    return acc


def one_step(model, y_hist, u_hist):
    """One prediction y(k) from histories ordered most-recent-first."""
    need_u = max(model.n_u, model.max_phi_lag() + 1)
    if len(y_hist) < model.n_y:
        raise InsufficientHistory(
            "need %d output samples, got %d" % (model.n_y, len(y_hist))
        )
    if len(u_hist) < need_u:
        raise InsufficientHistory(
            "need %d input samples, got %d" % (need_u, len(u_hist))
        )
    return _eval_terms(model, lambda lag: y_hist[lag - 1], lambda lag: u_hist[lag - 1])


def simulate_free_run(model, u_series, y_init):
    """Free-run simulation: predictions feed back as the output history.

    ``y_init`` holds the pre-series outputs most-recent-first, i.e.
    ``y_init[0]`` is y(-1).  Inputs before the series start are taken equal
    to ``u_series[0]``.  Raises :class:`NonFinite` if the output blows up.
    """
    u = np.asarray(u_series, dtype=float)
    n = len(u)
    if len(y_init) < model.n_y:
        raise InsufficientHistory(
            "y_init needs %d samples, got %d" % (model.n_y, len(y_init))
        )
    y = np.empty(n)
    init = [float(v) for v in y_init]
    u0 = float(u[0]) if n else 0.0

    def uat_for(k):
        def uat(lag):
            i = k - lag
            return float(u[i]) if i >= 0 else u0
        return uat

    def yat_for(k):
        def yat(lag):
            i = k - lag
            return float(y[i]) if i >= 0 else init[-i - 1]
        return yat

    for k in range(n):
        val = _eval_terms(model, yat_for(k), uat_for(k))
        if not np.isfinite(val):
            raise NonFinite("output diverged at sample %d" % k)
        y[k] = val
    return y


def static_polynomial(model, u_bar, branch_sign=0):
    """Steady-state polynomial in y_bar for a constant input u_bar.

    Encodes f(u_bar, y_bar) - y_bar = 0.  At steady state phi1 = 0, so any
    term containing phi1 drops out; bare phi2 factors take the value
    ``branch_sign`` (0 for strict steady state, +-1 to probe the equilibria
    reached while loading or unloading).
    """
    if branch_sign not in (-1, 0, 1):
        raise ValueError("branch_sign must be -1, 0 or +1")
    coeffs = [0.0] * (model.ell + 2)
    for t in model.terms:
        scalar = t.coefficient
        xpow = 0
        for f in t.factors:
            sig = f.signal
            if sig is Signal.OUTPUT_Y:
                xpow += f.power
            elif sig is Signal.INPUT_U:
                scalar *= float(u_bar) ** f.power
            elif sig is Signal.PHI1:
                scalar = 0.0
                break
            else:  # PHI2
                scalar *= float(branch_sign) ** f.power
                if scalar == 0.0:
                    break
        if scalar != 0.0:
            coeffs[xpow] += scalar
    coeffs[1] -= 1.0
    return AlgebraicPolynomial(coeffs)


def jacobian_eigen(model, u_bar, y_bar):
    """Magnitudes of the linearization eigenvalues at (u_bar, y_bar), descending.

    The partial derivatives a_i = df/dy(k-i) evaluated at the steady state
    (where phi1 = phi2 = 0) form the characteristic polynomial
    lambda^n - a_1 lambda^(n-1) - ... - a_n, whose roots are the eigenvalues.
    Only output lags actually present in the terms count; a model with no
    output feedback returns an empty list (trivially stable).
    """
    n_eff = model.max_y_lag()
    if n_eff == 0:
        return []
    a = [0.0] * (n_eff + 1)  # a[i] = df/dy(k-i)
    u_bar = float(u_bar)
    y_bar = float(y_bar)
    for t in model.terms:
        for fi, f in enumerate(t.factors):
            if f.signal is not Signal.OUTPUT_Y:
                continue
            part = t.coefficient * f.power * y_bar ** (f.power - 1)
            for gj, g in enumerate(t.factors):
                if gj == fi:
                    continue
                sig = g.signal
                if sig is Signal.OUTPUT_Y:
                    part *= y_bar ** g.power
                elif sig is Signal.INPUT_U:
                    part *= u_bar ** g.power
                else:
                    # phi1 and phi2 both vanish at steady state
                    part = 0.0
                    break
            a[f.lag] += part
    char = [0.0] * (n_eff + 1)
    char[n_eff] = 1.0
    for i in range(1, n_eff + 1):
        char[n_eff - i] = -a[i]
    rs = poly.solve_roots(AlgebraicPolynomial(char))
    return sorted((abs(r) for r in rs.roots), reverse=True)


def fixed_points(model, u_bar, branch_sign=0):
    """Real equilibria near the output range, with their stability.

    Roots of the steady-state polynomial are kept if they fall within the
    output range widened by 10% of its span on each side.  Raises
    :class:`DegenerateStatics` when the polynomial vanishes identically.
    """
    p = static_polynomial(model, u_bar, branch_sign)
    d = p.degree()
    if d == -1:
        raise DegenerateStatics(
            "steady-state polynomial vanishes identically at u=%g" % u_bar
        )
    if d == 0:
        return []
    reals = poly.real_roots(poly.solve_roots(p))
    lo, hi = model.output_range
    band = 0.1 * (hi - lo)
    out = []
    for y_bar in sorted(reals):
        if not lo - band <= y_bar <= hi + band:
            continue
        mags = jacobian_eigen(model, u_bar, y_bar)
        stable = all(m < 1.0 for m in mags)
        out.append(FixedPoint(float(u_bar), float(y_bar), tuple(mags), stable))
    return out


def static_curve(model, u_grid):
    """Stable steady-state output for each input level in ``u_grid``.

    Picks the stable fixed point near the output range (same 10%-widened
    band as :func:`fixed_points`); ties go to the smallest magnitude.
    Raises :class:`NoStableFixedPoint` when a grid point has none.
    """
    out = []
    for u_bar in u_grid:
        fps = [fp for fp in fixed_points(model, u_bar) if fp.stable]
        if not fps:
            raise NoStableFixedPoint("no stable fixed point at u=%g" % u_bar)
        best = min(fps, key=lambda fp: (abs(fp.y_bar), fp.y_bar))
        out.append((float(u_bar), best.y_bar))
    return out


def hysteresis_loop(model, amplitude, f_min, u_center,
                    settle_tol=1e-8, max_periods=64):
    """Trace the settled input-output loop under a sinusoidal excitation.

    Drives u(k) = amplitude * sin(2 pi f_min k) + u_center (f_min in cycles
    per sample) period by period until two consecutive periods agree to
    ``settle_tol`` (relative to the period's output span), then splits the
    settled period into loading (input rising) and unloading (input falling)
    branches.  Raises :class:`LoopUnsettled` if agreement is never reached;
    models whose output-coefficient sum exceeds one carry a slowly growing
    drift mode, so a run that contracts onto its loop still stops long
    before the drift resurfaces.
    """
    if not model.is_hysteretic():
        raise ValueError("hysteresis loop requires a model with phi regressors")
    if f_min <= 0:
        raise ValueError("f_min must be positive")
    period = int(round(1.0 / f_min))
    if period < 8:
        raise ValueError("period of %d samples is too coarse to trace" % period)

    need_u = max(model.n_u, model.max_phi_lag() + 1)
    u_hist = [float(u_center)] * need_u  # u(k-1), u(k-2), ...
    y_hist = [0.0] * model.n_y
    prev_y = None
    settled = None
    settled_start = 0
    for p in range(max_periods):
        ks = np.arange(p * period, (p + 1) * period, dtype=float)
        u_p = amplitude * np.sin(2.0 * np.pi * f_min * ks) + u_center
        y_p = np.empty(period)
        for i in range(period):
            val = _eval_terms(
                model,
                lambda lag: y_hist[lag - 1],
                lambda lag: u_hist[lag - 1],
            )
            if not np.isfinite(val):
                raise NonFinite("loop trace diverged in period %d" % p)
            y_p[i] = val
            y_hist.insert(0, val)
            del y_hist[-1]
            u_hist.insert(0, float(u_p[i]))
            del u_hist[-1]
        if prev_y is not None:
            scale = max(1.0, float(np.ptp(y_p)))
            if float(np.max(np.abs(y_p - prev_y))) < settle_tol * scale:
                settled = (u_p, y_p)
                settled_start = p * period
                break
        prev_y = y_p
    if settled is None:
        raise LoopUnsettled(
            "hysteresis loop did not settle within %d periods" % max_periods
        )
    u_p, y_p = settled
    du = np.empty(period)
    prev_u = amplitude * np.sin(2.0 * np.pi * f_min * (settled_start - 1)) + u_center
    du[0] = u_p[0] - prev_u
    du[1:] = np.diff(u_p)
    regime = np.zeros(period)
    cur = 0.0
    for i in range(period):
        if du[i] > 0:
            cur = 1.0
        elif du[i] < 0:
            cur = -1.0
        regime[i] = cur
    loading = np.column_stack([u_p[regime > 0], y_p[regime > 0]])
    unloading = np.column_stack([u_p[regime < 0], y_p[regime < 0]])
    loading = loading[np.argsort(loading[:, 0], kind="stable")]
    unloading = unloading[np.argsort(unloading[:, 0], kind="stable")[::-1]]
    return HysteresisLoop(loading=loading, unloading=unloading, period=period)


def loop_inverse(loop, y_target, regime):
    """Input that produces ``y_target`` on the given loop branch.

    Linear interpolation between adjacent traced points; raises
    :class:`OutOfLoopRange` if no branch segment brackets the target.
    """
    branch = loop.loading if regime is Regime.LOADING else loop.unloading
    t = float(y_target)
    for i in range(len(branch) - 1):
        u0, y0 = branch[i]
        u1, y1 = branch[i + 1]
        if (y0 - t) * (y1 - t) <= 0.0:
            if y1 == y0:
                return float(u0)
            return float(u0 + (t - y0) * (u1 - u0) / (y1 - y0))
    raise OutOfLoopRange(
        "target %g outside the traced %s branch" % (t, regime.name.lower())
    )


# ---------------------------------------------------------------------------
# JSON serialization

_SIG_CODE = {
    Signal.OUTPUT_Y: "y",
    Signal.INPUT_U: "u",
    Signal.PHI1: "phi1",
    Signal.PHI2: "phi2",
}
_CODE_SIG = {v: k for k, v in _SIG_CODE.items()}


def model_to_dict(model):
    return {
        "n_y": model.n_y,
        "n_u": model.n_u,
        "tau_d": model.tau_d,
        "ell": model.ell,
        "input_range": list(model.input_range),
        "output_range": list(model.output_range),
        "terms": [
            {
                "coeff": t.coefficient,
                "factors": [
                    {"sig": _SIG_CODE[f.signal], "lag": f.lag, "pow": f.power}
                    for f in t.factors
                ],
            }
            for t in model.terms
        ],
    }


def model_from_dict(d):
    terms = tuple(
        Term(
            coefficient=float(t["coeff"]),
            factors=tuple(
                Factor(
                    signal=_CODE_SIG[f["sig"]],
                    lag=int(f["lag"]),
                    power=int(f.get("pow", 1)),
                )
                for f in t.get("factors", ())
            ),
        )
        for t in d["terms"]
    )
    model = NarxModel(
        terms=terms,
        n_y=int(d["n_y"]),
        n_u=int(d["n_u"]),
        tau_d=int(d["tau_d"]),
        ell=int(d["ell"]),
        input_range=tuple(float(v) for v in d["input_range"]),
        output_range=tuple(float(v) for v in d["output_range"]),
    )
    problems = validate(model)
    if problems:
        raise ValueError("invalid model: " + "; ".join(problems))
    return model


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
