"""Dense univariate polynomials with real coefficients, plus root solvers.

Coefficients are stored in ascending order, so ``coeffs[i]`` multiplies
``x**i``.  Degrees 1-3 are solved in closed form; higher degrees fall back
to a Durand-Kerner simultaneous iteration.  All solvers return every root
(with multiplicity) as complex numbers; use :func:`real_roots` to extract
the real ones.
"""

from __future__ import annotations

import cmath
import math

# A coefficient is treated as zero when it is this small relative to the
# largest coefficient of the polynomial.
LEADING_ZERO_RTOL = 1e-12

# |imag| <= DEFAULT_IM_TOL * max(1, |real|) counts as a real root.
DEFAULT_IM_TOL = 1e-9

_DK_STEP_TOL = 1e-12
_DK_MAX_ITER = 500
# Irrational angle offset so no start point sits on the real axis and the
# initial guesses never coincide with an axis of symmetry of the root set.
_DK_ANGLE_OFFSET = math.sqrt(2.0)


class DegreeMismatch(ValueError):
    """The polynomial's degree is outside what the solver handles."""


class NoConvergence(RuntimeError):
    """Iterative refinement ran out of iterations.

    The best iterate found so far is kept in ``self.best``.
    """

    def __init__(self, message, best=()):
        super().__init__(message)
        self.best = tuple(best)


class AlgebraicPolynomial:
    """Immutable dense polynomial a_0 + a_1 x + ... + a_n x^n."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = tuple(float(c) for c in coeffs)
        object.__setattr__(self, "coeffs", cs if cs else (0.0,))

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraicPolynomial is immutable")

    def __repr__(self):
        return "AlgebraicPolynomial(%r)" % (self.coeffs,)

    def __eq__(self, other):
        return isinstance(other, AlgebraicPolynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def degree(self):
        """Effective degree; -1 for the zero polynomial.

        Leading coefficients below ``LEADING_ZERO_RTOL`` times the largest
        coefficient magnitude are ignored.
        """
        biggest = max(abs(c) for c in self.coeffs)
        if biggest == 0.0:
            return -1
        for i in range(len(self.coeffs) - 1, -1, -1):
            if abs(self.coeffs[i]) > LEADING_ZERO_RTOL * biggest:
                return i
        return -1


class RootSet:
    """All roots of a polynomial, tagged with the method that produced them."""

    __slots__ = ("roots", "method_tag")

    def __init__(self, roots, method_tag):
        object.__setattr__(self, "roots", tuple(complex(r) for r in roots))
        object.__setattr__(self, "method_tag", str(method_tag))

    def __setattr__(self, name, value):
        raise AttributeError("RootSet is immutable")

    def __repr__(self):
        return "RootSet(%r, %r)" % (self.roots, self.method_tag)


def evaluate(p, x):
    """Evaluate ``p`` at ``x`` (real or complex) via Horner's scheme."""
    acc = 0.0 if not isinstance(x, complex) else 0.0 + 0.0j
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def add(p, q):
    n = max(len(p.coeffs), len(q.coeffs))
    out = [0.0] * n
    for i, c in enumerate(p.coeffs):
        out[i] += c
    for i, c in enumerate(q.coeffs):
        out[i] += c
    return AlgebraicPolynomial(out)


def mul(p, q):
    out = [0.0] * (len(p.coeffs) + len(q.coeffs) - 1)
    for i, a in enumerate(p.coeffs):
        if a == 0.0:
            continue
        for j, b in enumerate(q.coeffs):
            out[i + j] += a * b
    return AlgebraicPolynomial(out)


def scale(p, c):
    c = float(c)
    return AlgebraicPolynomial(tuple(a * c for a in p.coeffs))


def from_roots(roots, leading=1.0):
    """Polynomial with the given roots; multiplies out leading * prod(x - r).

    Intended for root multisets closed under conjugation; the tiny imaginary
    residue from complex arithmetic is dropped.
    """
    acc = [complex(leading)]
    for r in roots:
        r = complex(r)
        nxt = [0.0 + 0.0j] * (len(acc) + 1)
        for i, a in enumerate(acc):
            nxt[i + 1] += a
            nxt[i] -= a * r
        acc = nxt
    return AlgebraicPolynomial(tuple(a.real for a in acc))


def _trimmed(p):
    """Coefficients up to the effective degree (empty for the zero poly)."""
    d = p.degree()
    return [float(c) for c in p.coeffs[: d + 1]]


def solve_linear(p):
    if p.degree() != 1:
        raise DegreeMismatch("solve_linear needs degree 1, got %d" % p.degree())
    a0, a1 = _trimmed(p)
    return RootSet((complex(-a0 / a1),), "analytic")


def solve_quadratic(p):
    if p.degree() != 2:
        raise DegreeMismatch("solve_quadratic needs degree 2, got %d" % p.degree())
    a0, a1, a2 = _trimmed(p)
    s = cmath.sqrt(complex(a1 * a1 - 4.0 * a2 * a0))
    return RootSet(((-a1 + s) / (2.0 * a2), (-a1 - s) / (2.0 * a2)), "analytic")


def solve_cubic(p):
    """Closed-form cubic solution (Cardano, in determinant form).

    Uses d0 = a2^2 - 3 a3 a1 and d1 = 2 a2^3 - 9 a3 a2 a1 + 27 a3^2 a0 with
    C = cbrt((d1 +- sqrt(d1^2 - 4 d0^3)) / 2), picking the sign that gives the
    larger |C| so C never vanishes unless d0 = d1 = 0, which is the triple
    root -a2 / (3 a3).
    """
    if p.degree() != 3:
        raise DegreeMismatch("solve_cubic needs degree 3, got %d" % p.degree())
    a0, a1, a2, a3 = _trimmed(p)
    d0 = a2 * a2 - 3.0 * a3 * a1
    d1 = 2.0 * a2 ** 3 - 9.0 * a3 * a2 * a1 + 27.0 * a3 * a3 * a0
    inner = cmath.sqrt(complex(d1 * d1 - 4.0 * d0 ** 3))
    cand_plus = (d1 + inner) / 2.0
    cand_minus = (d1 - inner) / 2.0
    big = cand_plus if abs(cand_plus) >= abs(cand_minus) else cand_minus
    if big == 0:
        r = complex(-a2 / (3.0 * a3))
        return RootSet((r, r, r), "analytic")
    cube = big ** (1.0 / 3.0)  # principal complex cube root
    xi = complex(-0.5, math.sqrt(3.0) / 2.0)
    roots = []
    for i in range(3):
        ci = (xi ** i) * cube
        roots.append(-(a2 + ci + d0 / ci) / (3.0 * a3))
    return RootSet(roots, "analytic")


def durand_kerner(p):
    """All complex roots by Durand-Kerner simultaneous iteration.

    Start points sit on a circle of radius 1 + max|a_i / a_n| (a Cauchy-type
    bound on the root magnitudes) with an irrational angle offset.  Stops
    when no point moved more than ``_DK_STEP_TOL``; raises
    :class:`NoConvergence` (carrying the best iterate) after
    ``_DK_MAX_ITER`` sweeps.
    """
    d = p.degree()
    if d < 1:
        raise DegreeMismatch("root iteration needs degree >= 1, got %d" % d)
    a = _trimmed(p)
    an = a[-1]
    monic = [c / an for c in a]  # monic coefficients, ascending

    radius = 1.0 + max(abs(c) for c in monic[:-1])
    z = [
        radius * cmath.exp(1j * (2.0 * math.pi * j / d + _DK_ANGLE_OFFSET))
        for j in range(d)
    ]

    def peval(x):
        acc = 1.0 + 0.0j
        for c in reversed(monic[:-1]):
            acc = acc * x + c
        return acc

    for _ in range(_DK_MAX_ITER):
        moved = 0.0
        for j in range(d):
            denom = 1.0 + 0.0j
            for i in range(d):
                if i != j:
                    denom *= z[j] - z[i]
            if denom == 0:
                denom = complex(_DK_STEP_TOL, _DK_STEP_TOL)
            step = peval(z[j]) / denom
            z[j] = z[j] - step
            moved = max(moved, abs(step))
        if moved < _DK_STEP_TOL:
            return RootSet(z, "iterative")
    raise NoConvergence(
        "root iteration did not converge in %d sweeps" % _DK_MAX_ITER, z
    )


def solve_roots(p):
    """Dispatch to the closed-form solvers (degree <= 3) or Durand-Kerner."""
    d = p.degree()
    if d < 1:
        raise DegreeMismatch("no roots to solve for degree %d" % d)
    if d == 1:
        return solve_linear(p)
    if d == 2:
        return solve_quadratic(p)
    if d == 3:
        return solve_cubic(p)
    return durand_kerner(p)


def real_roots(rs, im_tol=DEFAULT_IM_TOL):
    """Real parts of the roots whose imaginary part is negligible.

    A root r counts as real when |Im r| <= im_tol * max(1, |Re r|).
    """
    out = []
    for r in rs.roots:
        if abs(r.imag) <= im_tol * max(1.0, abs(r.real)):
            out.append(r.real)
    return out
