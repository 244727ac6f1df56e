"""Averaged inverter model with a Volt-VAr characteristic.

The model has three states: a first-order filtered voltage magnitude
(standing in for the PLL measurement) and two output-current components
that follow their references through first-order lags.  Reactive power
comes from the piecewise-linear Volt-VAr curve, capped so the operating
point stays on the apparent-power circle.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import kernels
from .errors import DomainError, InfeasibleOperatingPoint, NumericError, StepSizeError
from .signalgen import Signal

OUTPUT_HEADER = ("time_s", "i_out_A")
CHANNELS = ("iq", "mag")


@dataclass(frozen=True)
class VoltVarCurve:
    """Breakpoints in p.u. and reactive setpoints in kVAr (positive = injection)."""

    v_L: float = 0.88
    v1: float = 0.92
    v2: float = 0.98
    v3: float = 1.02
    v4: float = 1.08
    v_H: float = 1.10
    q1: float = 6.25
    q2: float = 0.0
    q3: float = 0.0
    q4: float = -6.25

    def __post_init__(self):
        vs = self.voltages
        if not all(math.isfinite(x) for x in vs + self.setpoints):
            raise DomainError("curve values must be finite")
        if any(b <= a for a, b in zip(vs, vs[1:])):
            raise DomainError(f"curve voltages must be strictly increasing, got {vs}")
        qs = self.setpoints
        if any(b > a for a, b in zip(qs, qs[1:])):
            raise DomainError(f"curve setpoints must be non-increasing, got {qs}")

    @property
    def voltages(self):
        return (self.v_L, self.v1, self.v2, self.v3, self.v4, self.v_H)

    @property
    def setpoints(self):
        return (self.q1, self.q2, self.q3, self.q4)

    def as_tuple(self):
        """Flat layout used by the kernels."""
        return self.voltages + self.setpoints


def volt_var_q_flagged(v, curve):
    """``(q_kvar, flagged)``; ``flagged`` is set outside ``[v_L, v_H)``.

    Outside the band the endpoint setpoint is held (saturate, no trip).
    """
    v = float(v)
    if not math.isfinite(v):
        raise NumericError(f"non-finite voltage {v!r}")
    return kernels.volt_var(v, curve.as_tuple()), not (curve.v_L <= v < curve.v_H)


def volt_var_q(v, curve):
    return volt_var_q_flagged(v, curve)[0]


def q_reference(q_curve, p_inv, s):
    """Cap a curve setpoint by the reactive headroom left beside ``p_inv``."""
    if not s > 0:
        raise DomainError("apparent power rating must be positive")
    if abs(p_inv) > s:
        raise InfeasibleOperatingPoint(f"|P|={abs(p_inv)} kW exceeds rating {s} kVA")
    head = math.sqrt(s * s - p_inv * p_inv)
    return math.copysign(min(abs(q_curve), head), q_curve)


@dataclass(frozen=True)
class PlantParams:
    s_rating: float = 8.4
    pll_bandwidth: float = 2.0 * math.pi * 10.0
    current_loop_tau: float = 0.02
    curve: VoltVarCurve = field(default_factory=VoltVarCurve)
    p_mppt_source: float = 0.0
    v_base: float = 240.0

    def __post_init__(self):
        if not self.s_rating > 0:
            raise DomainError("s_rating must be positive")
        if not self.pll_bandwidth > 0:
            raise DomainError("pll_bandwidth must be positive")
        if not self.current_loop_tau > 0:
            raise DomainError("current_loop_tau must be positive")
        if not self.v_base > 0:
            raise DomainError("v_base must be positive")

    def kernel_params(self):
        return (self.pll_bandwidth, self.current_loop_tau, self.s_rating, self.v_base)

    def current_limit(self, v_filt=1.0):
        """Largest current magnitude in A at filtered voltage ``v_filt``."""
        return self.s_rating * 1000.0 / (v_filt * self.v_base)


@dataclass(frozen=True)
class PlantState:
    v_filt: float = 1.0
    i_d: float = 0.0
    i_q: float = 0.0

    def as_array(self):
        return np.array([self.v_filt, self.i_d, self.i_q])


def _check_dt(dt, params):
    if not dt > 0:
        raise StepSizeError("dt must be positive")
    if dt > params.current_loop_tau / 5.0 * (1 + 1e-12):
        raise StepSizeError(
            f"dt={dt} s exceeds current_loop_tau/5 = {params.current_loop_tau / 5.0} s"
        )


def plant_equilibrium(v, p_avail, params, gsf=True):
    """Steady state for a constant terminal voltage and available power."""
    pstar = min(p_avail, params.s_rating)
    q = q_reference(volt_var_q(v, params.curve), pstar, params.s_rating) if gsf else 0.0
    k = 1000.0 / (v * params.v_base)
    return PlantState(float(v), pstar * k, q * k)


def plant_step(state, v_terminal, p_avail, dt, params, gsf=True):
    """Advance one RK4 step of ``dt`` seconds."""
    _check_dt(dt, params)
    vals = (state.v_filt, state.i_d, state.i_q, v_terminal, p_avail)
    if not all(math.isfinite(x) for x in vals):
        raise NumericError(f"non-finite plant input {vals}")
    _, x = kernels.plant_run(
        state.as_array(), np.array([float(v_terminal)]), np.array([float(p_avail)]),
        float(dt), 1, params.kernel_params(), params.curve.as_tuple(), bool(gsf),
    )
    return PlantState(float(x[0]), float(x[1]), float(x[2]))


def _as_profile(p_avail, n):
    if p_avail is None:
        return None
    if isinstance(p_avail, Signal):
        arr = np.asarray(p_avail.values, dtype=float)
    else:
        arr = np.asarray(p_avail, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if len(arr) != n:
        raise ValueError(f"p_avail profile has {len(arr)} samples, input has {n}")
    return arr


def simulate_plant(input, p_avail_profile=None, params=None, dt=1e-3, *, channel="iq",
                   gsf=True, noise=0.0, seed=None, state=None, return_states=False):
    """Drive the plant with a voltage Signal and record the output current.

    Sample ``k`` of the output is the state at the start of input sample
    ``k`` (the plant has no direct feedthrough).  ``channel`` selects the
    reactive current ``"iq"`` or the magnitude ``"mag"``.  ``noise`` adds
    seeded zero-mean uniform noise of that half-width in A.  The initial
    state defaults to the equilibrium at the first input sample.
    """
    params = params or PlantParams()
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}")
    _check_dt(dt, params)
    spacing = input.dt
    sub = round(spacing / dt)
    if sub < 1 or abs(sub * dt - spacing) > 1e-9 * spacing:
        raise StepSizeError(f"dt={dt} does not divide the sample spacing {spacing}")
    n = len(input)
    p = _as_profile(p_avail_profile, n)
    if p is None:
        p = np.full(n, float(params.p_mppt_source))
    v = np.asarray(input.values, dtype=float)
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(p))):
        raise NumericError("non-finite plant input")
    if state is None:
        state = plant_equilibrium(v[0], p[0], params, gsf)
    states, _ = kernels.plant_run(
        state.as_array(), v, p, float(dt), int(sub),
        params.kernel_params(), params.curve.as_tuple(), bool(gsf),
    )
    if channel == "iq":
        y = states[:, 2].copy()
    else:
        y = np.hypot(states[:, 1], states[:, 2])
    if noise:
        rng = np.random.default_rng(seed)
        y = y + rng.uniform(-noise, noise, size=n)
    out = Signal(input.timestamps, y, input.sample_rate)
    return (out, states) if return_states else out


def with_curve(params, **changes):
    """Copy of ``params`` with curve fields replaced."""
    return replace(params, curve=replace(params.curve, **changes))
