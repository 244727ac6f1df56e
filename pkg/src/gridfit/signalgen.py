"""Probing and validation signals.

The probing signal is a logarithmic square chirp whose two amplitude
levels step through the voltage window one partition at a time.  Each
partition gets a fresh sweep from ``f0`` to ``f1``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import csvio
from .errors import DomainError

SIGNAL_HEADER = ("time_s", "value_pu")


@dataclass(frozen=True)
class ChirpSpec:
    f0: float = 1.0
    f1: float = 32.0
    T: float = 6.0
    phi0: float = 0.0
    sample_rate: float = 1000.0

    def __post_init__(self):
        if not (self.f0 > 0 and self.f1 > 0):
            raise DomainError("chirp frequencies must be positive")
        if not self.T > 0:
            raise DomainError("sweep duration T must be positive")
        if not self.sample_rate > 2.0 * max(self.f0, self.f1):
            raise DomainError(
                f"sample_rate {self.sample_rate} Hz violates Nyquist for "
                f"{max(self.f0, self.f1)} Hz content"
            )


@dataclass(frozen=True)
class PartitionPlan:
    v_low: float = 0.88
    v_max: float = 1.10
    n_partitions: int = 22
    dwell_time: float = 6.0

    def __post_init__(self):
        if not self.v_low < self.v_max:
            raise DomainError("v_low must be below v_max")
        if int(self.n_partitions) != self.n_partitions or self.n_partitions < 1:
            raise DomainError("n_partitions must be a positive integer")
        if not self.dwell_time > 0:
            raise DomainError("dwell_time must be positive")

    @property
    def dv(self):
        return (self.v_max - self.v_low) / self.n_partitions

    @property
    def run_time(self):
        return self.dwell_time * self.n_partitions

    def bounds(self, k):
        """(v1, v2) of partition ``k``, with the top-end clamp."""
        dv = self.dv
        v1 = self.v_low + k * dv
        v2 = v1 + dv
        if v2 > self.v_max:
            v1 = self.v_max - dv
            v2 = self.v_max
        return v1, v2

    def ranges(self):
        return [self.bounds(k) for k in range(self.n_partitions)]


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled series. Arrays are stored read-only."""

    timestamps: np.ndarray
    values: np.ndarray
    sample_rate: float = field(default=None)

    def __post_init__(self):
        t = np.array(self.timestamps, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("timestamps and values must be 1-D and equal length")
        if len(t) > 1:
            d = np.diff(t)
            if np.any(d <= 0):
                raise ValueError("timestamps must be strictly increasing")
            rate = self.sample_rate or 1.0 / float(np.mean(d))
            if np.max(np.abs(d - 1.0 / rate)) > 1e-6 / rate:
                raise ValueError("timestamps are not uniformly spaced")
            object.__setattr__(self, "sample_rate", float(rate))
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return (np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.values, other.values))

    @property
    def dt(self):
        return 1.0 / self.sample_rate

    def to_csv(self, path, header=SIGNAL_HEADER):
        return csvio.write_columns(path, header, [self.timestamps, self.values])

    @classmethod
    def from_csv(cls, path):
        _, arr = csvio.read_columns(path, expect=2)
        return cls(arr[:, 0], arr[:, 1])


def chirp_frequency(t, spec):
    if not 0.0 <= t <= spec.T:
        raise DomainError(f"t={t} outside sweep [0, {spec.T}]")
    if t == spec.T:
        return float(spec.f1)
    return spec.f0 * (spec.f1 / spec.f0) ** (t / spec.T)


def chirp_phase(t, spec):
    """Integrated phase 2*pi*int_0^t f + phi0, in radians (vectorised)."""
    t = np.asarray(t, dtype=float)
    r = spec.f1 / spec.f0
    if r == 1.0:
        return 2.0 * math.pi * spec.f0 * t + spec.phi0
    lr = math.log(r)
    return 2.0 * math.pi * spec.f0 * spec.T * np.expm1(lr * t / spec.T) / lr + spec.phi0


def square_chirp_sample(t, spec, v1, v2):
    if not v1 < v2:
        raise DomainError(f"invalid range: v1={v1} must be below v2={v2}")
    if not 0.0 <= t <= spec.T:
        raise DomainError(f"t={t} outside sweep [0, {spec.T}]")
    return v2 if math.cos(float(chirp_phase(t, spec))) >= 0.0 else v1


def partition_bounds(t, plan):
    if t < 0 or t >= plan.run_time:
        raise DomainError(f"t={t} outside run [0, {plan.run_time})")
    return plan.bounds(math.floor(t / plan.dwell_time))


def _samples_per(duration, rate):
    n = duration * rate
    k = round(n)
    if abs(n - k) > 1e-9 * max(1.0, n) or k < 1:
        raise DomainError(f"duration {duration} s is not a whole number of samples at {rate} Hz")
    return int(k)


def generate_probing_signal(plan, spec):
    """Square chirp over every partition of ``plan``.

    ``spec.T`` is the sweep length; it must match ``plan.dwell_time``.
    """
    if abs(plan.dwell_time - spec.T) > 1e-12 * spec.T:
        raise DomainError("plan.dwell_time and spec.T must agree")
    spp = _samples_per(spec.T, spec.sample_rate)
    local_t = np.arange(spp) / spec.sample_rate
    high = np.cos(chirp_phase(local_t, spec)) >= 0.0
    values = np.empty(spp * plan.n_partitions)
    for k in range(plan.n_partitions):
        v1, v2 = plan.bounds(k)
        values[k * spp:(k + 1) * spp] = np.where(high, v2, v1)
    t = np.arange(len(values)) / spec.sample_rate
    return Signal(t, values, spec.sample_rate)


def generate_step_signal(levels, sample_rate):
    """Piecewise-constant signal from ``[(value, duration_s), ...]``."""
    levels = list(levels)
    if len(levels) < 2:
        raise DomainError("need at least two levels")
    chunks = []
    for value, duration in levels:
        if not duration > 0:
            raise DomainError("level durations must be positive")
        chunks.append(np.full(_samples_per(duration, sample_rate), float(value)))
    values = np.concatenate(chunks)
    return Signal(np.arange(len(values)) / sample_rate, values, sample_rate)


def step_suite(curve_points=(0.88, 0.92, 0.98, 1.02, 1.08, 1.10), hold=1.0, sample_rate=1000.0):
    """One two-level step per Volt-VAr region, low level then high level."""
    return [
        generate_step_signal([(lo, hold), (hi, hold)], sample_rate)
        for lo, hi in zip(curve_points[:-1], curve_points[1:])
    ]
