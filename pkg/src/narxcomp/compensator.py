"""Compensation-input synthesis by inverting a NARX polynomial model.

Given a reference trajectory r for the output, each step solves a
polynomial in the unknown input m(k) obtained from the model by swapping
outputs for references and inputs for compensation inputs, then shifting
time forward by the model's dead time tau_d so that m(k) is the only
unknown.  Admissible roots must be real (C1) and inside the input range
(C2); hysteretic models additionally split into a loading polynomial whose
root must exceed m(k-1) (C3) and an unloading polynomial whose root must
lie below it (C4).  When no admissible root exists the previous input is
held.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import poly
from .poly import AlgebraicPolynomial, RootSet
from .model import (
    Regime,
    Signal,
    fixed_points,
    loop_inverse,
)


class IdenticallyZero(ValueError):
    """Every coefficient of the compensation polynomial vanished."""


class NoFeasibleRoot(RuntimeError):
    """No real, in-range, consistent root exists for this reference."""


class UnknownFutureInput(ValueError):
    """A factor would reference an input later than the one being solved for."""


class UnsupportedStructure(ValueError):
    """A phi regressor cannot be resolved into the branch polynomials."""


class _HoldType:
    __slots__ = ()

    def __repr__(self):
        return "HOLD"


#: Sentinel returned by :func:`select_root` when no admissible root exists.
HOLD = _HoldType()


@dataclass(frozen=True)
class BranchPolynomials:
    """Per-step loading/unloading polynomials in m(k), around pivot m(k-1)."""

    loading: AlgebraicPolynomial
    unloading: AlgebraicPolynomial
    pivot: float


@dataclass
class CompensationSession:
    """Mutable state for a step-by-step compensation run.

    ``m_hist`` holds past compensation inputs most-recent-first and must be
    seeded (see :func:`init_dynamic` / :func:`init_hysteresis`) before
    :func:`run`.  ``r`` is attached by :func:`run`; indices past either end
    of the reference clamp to the nearest sample, so r(-1) = r(0).
    """

    model: object
    m_hist: list
    bounds: tuple = None
    r: np.ndarray = None
    branch_state: Regime = None
    hold_count: int = 0
    steps: int = 0
    max_residual: float = 0.0

    def __post_init__(self):
        if self.bounds is None:
            self.bounds = tuple(self.model.input_range)
        need = hist_depth(self.model)
        if len(self.m_hist) < need:
            raise ValueError(
                "m_hist needs %d seeded values, got %d" % (need, len(self.m_hist))
            )
        self.m_hist = [float(v) for v in self.m_hist]

    def hold_rate(self):
        return self.hold_count / self.steps if self.steps else 0.0


def hist_depth(model):
    """How many past inputs the per-step polynomials can reference."""
    d = max(model.n_u - model.tau_d, 1)
    if model.max_phi_lag():
        d = max(d, model.max_phi_lag() - model.tau_d + 1)
    return d


def _r_at(session, idx):
    r = session.r
    if idx < 0:
        return float(r[0])
    if idx >= len(r):
        return float(r[-1])
    return float(r[idx])


def static_comp_poly(model, r_bar):
    """Steady-state compensation polynomial in the constant input m_bar.

    Swaps y_bar -> r_bar and u_bar -> m_bar in the steady-state relation
    f(u_bar, y_bar) - y_bar = 0 and collects powers of m_bar.
    """
    if model.is_hysteretic():
        raise ValueError(
            "static inversion is undefined for hysteretic models; "
            "use a traced loop instead"
        )
    r_bar = float(r_bar)
    coeffs = [0.0] * (model.ell + 1)
    for t in model.terms:
        scalar = t.coefficient
        xpow = 0
        for f in t.factors:
            if f.signal is Signal.OUTPUT_Y:
                scalar *= r_bar ** f.power
            else:  # INPUT_U; phi factors excluded above
                xpow += f.power
        coeffs[xpow] += scalar
    coeffs[0] -= r_bar
    p = AlgebraicPolynomial(coeffs)
    if p.degree() == -1:
        raise IdenticallyZero("compensation polynomial vanished at r=%g" % r_bar)
    return p


def solve_static(model, r_bar):
    """Constant input whose stable steady state matches ``r_bar``.

    Keeps the real roots inside the input range whose fixed point is stable
    and reproduces r_bar; among those returns the smallest magnitude.
    """
    lo, hi = model.output_range
    span = hi - lo
    if not lo - 0.1 * span <= r_bar <= hi + 0.1 * span:
        raise ValueError(
            "reference %g outside the model output range [%g, %g]"
            % (r_bar, lo, hi)
        )
    p = static_comp_poly(model, r_bar)
    if p.degree() < 1:
        raise NoFeasibleRoot("compensation polynomial has no roots at r=%g" % r_bar)
    u_lo, u_hi = model.input_range
    good = []
    for m_bar in poly.real_roots(poly.solve_roots(p)):
        if not u_lo <= m_bar <= u_hi:
            continue
        fps = fixed_points(model, m_bar)
        if any(fp.stable and abs(fp.y_bar - r_bar) < 1e-6 * span for fp in fps):
            good.append(m_bar)
    if not good:
        raise NoFeasibleRoot("no admissible static input for r=%g" % r_bar)
    return min(good, key=lambda m: (abs(m), m))


def dynamic_comp_poly(session, k):
    """Per-step compensation polynomial in m(k) for a non-hysteretic model.

    After the forward shift by tau_d, output factors evaluate to reference
    samples, input factors at lag tau_d contribute powers of the unknown,
    and deeper input lags evaluate to past compensation inputs.
    """
    model = session.model
    if model.is_hysteretic():
        raise ValueError("model has phi regressors; use hysteresis_comp_polys")
    tau = model.tau_d
    coeffs = [0.0] * (model.ell + 1)
    for t in model.terms:
        scalar = t.coefficient
        xpow = 0
        for f in t.factors:
            if f.signal is Signal.OUTPUT_Y:
                scalar *= _r_at(session, k + tau - f.lag) ** f.power
            else:  # INPUT_U
                if f.lag < tau:
                    raise UnknownFutureInput(
                        "input lag %d is ahead of the dead time %d" % (f.lag, tau)
                    )
                if f.lag == tau:
                    xpow += f.power
                else:
                    scalar *= session.m_hist[f.lag - tau - 1] ** f.power
        coeffs[xpow] += scalar
    coeffs[0] -= _r_at(session, k + tau)
    return AlgebraicPolynomial(coeffs)


def hysteresis_comp_polys(session, k):
    """Loading/unloading compensation polynomials for a hysteretic model.

    With the forward shift by tau_d, phi factors at lag tau_d become
    functions of d = m(k) - m(k-1): phi1 contributes powers of d and phi2
    contributes sign(d).  Pairs phi1*phi2 turn into |d|; a leftover bare
    sign(d) is cleared by multiplying the whole equation through by d.
    Splitting on the sign of d then yields one polynomial valid for
    m(k) > m(k-1) (loading) and one for m(k) < m(k-1) (unloading).
    """
    model = session.model
    if not model.is_hysteretic():
        raise ValueError("model has no phi regressors; use dynamic_comp_poly")
    tau = model.tau_d
    m_prev = session.m_hist[0]

    def m_at(step_back):
        # m(k - step_back), step_back >= 1
        return session.m_hist[step_back - 1]

    info = []
    mul_through = 0
    for t in model.terms:
        scalar = t.coefficient
        xpow = 0
        d_pow = 0     # powers of d = m(k) - m(k-1)
        sgn_odd = 0   # bare sign(d) left after pairing (0 or 1)
        for f in t.factors:
            sig = f.signal
            if sig is Signal.OUTPUT_Y:
                scalar *= _r_at(session, k + tau - f.lag) ** f.power
            elif sig is Signal.INPUT_U:
                if f.lag < tau:
                    raise UnknownFutureInput(
                        "input lag %d is ahead of the dead time %d" % (f.lag, tau)
                    )
                if f.lag == tau:
                    xpow += f.power
                else:
                    scalar *= m_at(f.lag - tau) ** f.power
            elif sig is Signal.PHI1:
                if f.lag < tau:
                    raise UnsupportedStructure(
                        "phi1 lag %d is ahead of the dead time %d" % (f.lag, tau)
                    )
                if f.lag == tau:
                    d_pow += f.power
                else:
                    step = f.lag - tau
                    scalar *= (m_at(step) - m_at(step + 1)) ** f.power
            else:  # PHI2
                if f.lag < tau:
                    raise UnsupportedStructure(
                        "phi2 lag %d is ahead of the dead time %d" % (f.lag, tau)
                    )
                if f.lag == tau:
                    sgn_odd = (sgn_odd + f.power) % 2
                else:
                    step = f.lag - tau
                    s = m_at(step) - m_at(step + 1)
                    scalar *= _sign(s) ** f.power
        if sgn_odd and d_pow == 0:
            mul_through = 1
        info.append((scalar, xpow, d_pow, sgn_odd))

    size = model.ell + mul_through + 2
    load = [0.0] * size
    unload = [0.0] * size

    def accumulate(dest, scalar, xpow, d_total):
        # scalar * x^xpow * (x - m_prev)^d_total
        part = [0.0] * (xpow + d_total + 1)
        part[xpow] = scalar
        for _ in range(d_total):
            nxt = [0.0] * (len(part) + 1)
            for i, c in enumerate(part):
                if c:
                    nxt[i + 1] += c
                    nxt[i] -= c * m_prev
            part = nxt
        for i, c in enumerate(part):
            dest[i] += c

    for scalar, xpow, d_pow, sgn_odd in info:
        if scalar == 0.0:
            continue
        d_total = d_pow + mul_through
        accumulate(load, scalar, xpow, d_total)
        accumulate(unload, -scalar if sgn_odd else scalar, xpow, d_total)
    # move the shifted reference sample into the constant coefficient
    accumulate(load, -_r_at(session, k + tau), 0, mul_through)
    accumulate(unload, -_r_at(session, k + tau), 0, mul_through)

    return BranchPolynomials(
        loading=AlgebraicPolynomial(load),
        unloading=AlgebraicPolynomial(unload),
        pivot=float(m_prev),
    )


def _sign(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def select_root(candidates, m_prev, bounds, branch=None, im_tol=poly.DEFAULT_IM_TOL):
    """Pick the admissible root closest to the previous input, or HOLD.

    Admissible means real (C1) and within ``bounds`` (C2); with
    ``branch=Regime.LOADING`` the root must exceed ``m_prev`` strictly (C3),
    with ``Regime.UNLOADING`` it must lie strictly below (C4).
    """
    lo, hi = bounds
    adm = []
    for x in poly.real_roots(candidates, im_tol):
        if not lo <= x <= hi:
            continue
        if branch is Regime.LOADING and not x > m_prev:
            continue
        if branch is Regime.UNLOADING and not x < m_prev:
            continue
        adm.append(x)
    if not adm:
        return HOLD
    return min(adm, key=lambda x: (abs(x - m_prev), x))


def init_dynamic(model, r_at_start):
    """Seed the input history with the static inverse of the first reference."""
    m_bar = solve_static(model, r_at_start)
    return [m_bar] * hist_depth(model)


def init_hysteresis(model, loop, r0, r1):
    """Seed the input history from a traced hysteresis loop.

    The initial regime is loading when the reference starts upward
    (r1 >= r0, ties load), unloading otherwise; the seed is the loop-branch
    input that would produce r1.
    """
    regime = Regime.LOADING if r1 >= r0 else Regime.UNLOADING
    m0 = loop_inverse(loop, r1, regime)
    return [m0] * hist_depth(model)


def _roots_or_empty(p):
    if p.degree() < 1:
        # constant polynomial: no root can be extracted from this branch
        return RootSet((), "analytic")
    return poly.solve_roots(p)


def _note_residual(session, p, m):
    res = abs(poly.evaluate(p, m)) / (1.0 + max(abs(c) for c in p.coeffs))
    if res > session.max_residual:
        session.max_residual = res


def run(session, r_series):
    """Compensate a whole reference trajectory.

    Returns the input series m, one value per reference sample; m(k) is
    solved against the reference window ending at r(k + tau_d).  Steps with
    no admissible root hold the previous input and are counted on the
    session; the run never aborts because of a hold.
    """
    session.r = np.asarray(r_series, dtype=float)
    n = len(session.r)
    m_out = np.empty(n)
    hysteretic = session.model.is_hysteretic()
    for k in range(n):
        m_prev = session.m_hist[0]
        if hysteretic:
            bp = hysteresis_comp_polys(session, k)
            m_load = select_root(
                _roots_or_empty(bp.loading), m_prev, session.bounds, Regime.LOADING
            )
            m_unload = select_root(
                _roots_or_empty(bp.unloading), m_prev, session.bounds, Regime.UNLOADING
            )
            m = HOLD
            if m_load is not HOLD and (
                m_unload is HOLD
                or (abs(m_load - m_prev), m_load)
                <= (abs(m_unload - m_prev), m_unload)
            ):
                m = m_load
                session.branch_state = Regime.LOADING
                _note_residual(session, bp.loading, m)
            elif m_unload is not HOLD:
                m = m_unload
                session.branch_state = Regime.UNLOADING
                _note_residual(session, bp.unloading, m)
        else:
            p = dynamic_comp_poly(session, k)
            m = select_root(_roots_or_empty(p), m_prev, session.bounds)
            if m is not HOLD:
                _note_residual(session, p, m)
        if m is HOLD:
            m = m_prev
            session.hold_count += 1
        session.steps += 1
        m_out[k] = m
        session.m_hist.insert(0, float(m))
        del session.m_hist[-1]
    return m_out
