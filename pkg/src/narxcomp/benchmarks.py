"""Simulated test plants and excitation signals.

Two plants are bundled: a Hammerstein model of an electric heater (static
input square nonlinearity into second-order linear dynamics) and a
Bouc-Wen hysteretic plant integrated with a fixed-step RK4 scheme.  Both
are deliberately richer than the NARX models identified from them, so the
compensation experiments see realistic model error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import poly


class HammersteinHeater:
    """Discrete Hammerstein heater: v = p1 u^2 + p2 u into 2nd-order dynamics.

    Inputs are clamped to [0, 1]; clamping events are counted on
    ``clamp_count`` instead of raising.
    """

    P1 = 4.639331e-1
    P2 = 5.435865e-2
    B1 = 1.205445
    B2 = 8.985133e-2
    B3 = -3.0877507e-1
    B4 = 9.462358e-3

    U_MIN, U_MAX = 0.0, 1.0

    def __init__(self):
        # linear part must be stable or the benchmark is meaningless
        mags = [
            abs(r)
            for r in poly.solve_roots(
                poly.AlgebraicPolynomial([-self.B3, -self.B1, 1.0])
            ).roots
        ]
        if not all(m < 1.0 for m in mags):
            raise RuntimeError("heater linear dynamics are unstable")
        self.reset()

    def reset(self):
        self._y1 = 0.0
        self._y2 = 0.0
        self._v1 = 0.0
        self._v2 = 0.0
        self.clamp_count = 0

    def step(self, u):
        u = float(u)
        if u < self.U_MIN:
            u = self.U_MIN
            self.clamp_count += 1
        elif u > self.U_MAX:
            u = self.U_MAX
            self.clamp_count += 1
        y = (
            self.B1 * self._y1
            + self.B2 * self._v1
            + self.B3 * self._y2
            + self.B4 * self._v2
        )
        v = self.P1 * u * u + self.P2 * u
        self._y2, self._y1 = self._y1, y
        self._v2, self._v1 = self._v1, v
        return y

    def simulate(self, u_series):
        return np.array([self.step(u) for u in u_series])

    @classmethod
    def static_output(cls, u):
        """Settled output for a constant input (clamped to the valid range)."""
        u = min(max(float(u), cls.U_MIN), cls.U_MAX)
        v = cls.P1 * u * u + cls.P2 * u
        return v * (cls.B2 + cls.B4) / (1.0 - cls.B1 - cls.B3)


class BoucWenPlant:
    """Bouc-Wen hysteresis: h' = a u' - b |u'| h - g u' |h|, y = nu_y u - h.

    Integrated with classic RK4 at a fixed 5 ms step; the input derivative
    is estimated by finite differences (forward / central / backward).
    ``substeps`` subdivides each sampling interval, interpolating the input
    derivative linearly, which serves as a refinement check.
    """

    ALPHA = 0.9
    BETA = 0.008
    GAMMA = 0.008
    NU_Y = 1.6
    DT = 0.005

    def __init__(self):
        self.reset()

    def reset(self):
        self.h = 0.0

    def _hdot(self, h, udot):
        return (
            self.ALPHA * udot
            - self.BETA * abs(udot) * h
            - self.GAMMA * udot * abs(h)
        )

    def simulate(self, u_series, substeps=1):
        u = np.asarray(u_series, dtype=float)
        n = len(u)
        y = np.empty(n)
        if n == 0:
            return y
        du = np.zeros(n)
        if n > 1:
            du[0] = (u[1] - u[0]) / self.DT
            du[-1] = (u[-1] - u[-2]) / self.DT
        if n > 2:
            du[1:-1] = (u[2:] - u[:-2]) / (2.0 * self.DT)
        h = self.h
        step = self.DT / substeps
        for k in range(n):
            y[k] = self.NU_Y * u[k] - h
            if k == n - 1:
                break
            for s in range(substeps):
                v0 = du[k] + (du[k + 1] - du[k]) * (s / substeps)
                v1 = du[k] + (du[k + 1] - du[k]) * ((s + 1) / substeps)
                vm = 0.5 * (v0 + v1)
                k1 = self._hdot(h, v0)
                k2 = self._hdot(h + 0.5 * step * k1, vm)
                k3 = self._hdot(h + 0.5 * step * k2, vm)
                k4 = self._hdot(h + step * k3, v1)
                h += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        self.h = h
        return y


def bouc_wen_inverse(r_series, nu_y=None, plant=None):
    """Hysteresis feedforward by inverting the output map: m = (r + h) / nu_y.

    The internal state h is advanced by the same RK4 scheme the plant uses,
    driven by the generated input itself (the per-step input derivative uses
    the latest two computed samples).  ``nu_y`` defaults to the plant gain.
    """
    if plant is None:
        plant = BoucWenPlant()
    if nu_y is None:
        nu_y = plant.NU_Y
    r = np.asarray(r_series, dtype=float)
    n = len(r)
    m = np.empty(n)
    h = plant.h
    for k in range(n):
        m[k] = (r[k] + h) / nu_y
        if k == n - 1:
            break
        udot = 0.0 if k == 0 else (m[k] - m[k - 1]) / plant.DT
        k1 = plant._hdot(h, udot)
        k2 = plant._hdot(h + 0.5 * plant.DT * k1, udot)
        k3 = plant._hdot(h + 0.5 * plant.DT * k2, udot)
        k4 = plant._hdot(h + plant.DT * k3, udot)
        h += plant.DT / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return m


@dataclass(frozen=True)
class SignalSpec:
    """Excitation description for :func:`generate`.

    kinds:
      * ``sine``: offset + amplitude * sin(2 pi f k Ts + phase)
      * ``steps``: a ladder from offset to offset + amplitude; each level
        lasts round(1 / (f Ts)) samples
      * ``sine_then_hold``: sine frozen at its value at sample ``hold_at``
    """

    kind: str
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    offset: float = 0.0
    hold_at: int = None


def generate(spec, n, ts=1.0):
    """Realize a :class:`SignalSpec` as ``n`` samples at sample time ``ts``."""
    n = int(n)
    kind = spec.kind.lower()
    if kind in ("sine", "sine_then_hold"):
        if spec.frequency <= 0:
            raise ValueError("frequency must be positive for sine signals")
        k = np.arange(n, dtype=float)
        s = spec.offset + spec.amplitude * np.sin(
            2.0 * np.pi * spec.frequency * k * ts + spec.phase
        )
        if kind == "sine_then_hold":
            if spec.hold_at is None:
                raise ValueError("sine_then_hold needs hold_at")
            hold = int(spec.hold_at)
            if 0 <= hold < n:
                s[hold:] = s[hold]
        return s
    if kind == "steps":
        if spec.frequency <= 0:
            raise ValueError("frequency must be positive for step ladders")
        per = max(1, int(round(1.0 / (spec.frequency * ts))))
        levels = max(1, -(-n // per))  # ceil
        s = np.empty(n)
        for i in range(levels):
            frac = i / (levels - 1) if levels > 1 else 0.0
            s[i * per:(i + 1) * per] = spec.offset + spec.amplitude * frac
        return s
    raise ValueError("unknown signal kind %r" % spec.kind)
