"""ARX identification, free-run simulation, fit metrics and order selection.

Models are discrete transfer functions

    y(k) + a1 y(k-1) + ... + an y(k-n) = b0 u(k) + ... + bm u(k-m)

written around an operating point ``(u_offset, y_offset)``.  Coefficients
are estimated by ordinary least squares on the equation error; every fit
that gets reported is scored on a free-run simulation.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import csvio, kernels
from .errors import (
    InsufficientDataError,
    NoModelError,
    NumericBlowupError,
    UndefinedMetricError,
    UnidentifiableError,
)


def _frozen_array(x):
    a = np.array(x, dtype=float).reshape(-1)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    u: np.ndarray
    y: np.ndarray
    ts: float

    def __post_init__(self):
        u = _frozen_array(self.u)
        y = _frozen_array(self.y)
        if len(u) != len(y):
            raise ValueError("u and y differ in length")
        if len(u) < 10:
            raise InsufficientDataError(f"need at least 10 samples, got {len(u)}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        if not self.ts > 0:
            raise ValueError("ts must be positive")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.u)

    def split(self, fraction):
        """Chronological split into (train, test) at ``floor(fraction * N)``."""
        if not 0 < fraction < 1:
            raise ValueError("split fraction must lie in (0, 1)")
        k = split_index(len(self), fraction)
        return self.u[:k], self.y[:k], self.u[k:], self.y[k:]

    @classmethod
    def from_csv(cls, u_path, y_path):
        """Input and output series from two ``time, value`` CSV files."""
        _, ua = csvio.read_columns(u_path, expect=2)
        _, ya = csvio.read_columns(y_path, expect=2)
        if len(ua) != len(ya) or not np.allclose(ua[:, 0], ya[:, 0], rtol=0, atol=1e-9):
            raise ValueError("input and output files have different time bases")
        ts = float(np.mean(np.diff(ua[:, 0])))
        return cls(ua[:, 1], ya[:, 1], ts)


def split_index(n, fraction):
    return int(math.floor(fraction * n + 1e-9))


@dataclass(frozen=True, eq=False)
class DiscreteTransferFunction:
    b: np.ndarray
    a: np.ndarray
    ts: float
    u_offset: float = 0.0
    y_offset: float = 0.0

    def __post_init__(self):
        b = _frozen_array(self.b)
        a = _frozen_array(self.a)
        if len(b) < 1:
            raise ValueError("numerator needs at least b0")
        if len(b) - 1 > len(a) and len(a) > 0:
            raise ValueError("numerator order m must not exceed denominator order n")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(a))):
            raise ValueError("coefficients must be finite")
        if not self.ts > 0:
            raise ValueError("ts must be positive")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "u_offset", float(self.u_offset))
        object.__setattr__(self, "y_offset", float(self.y_offset))

    def __eq__(self, other):
        if not isinstance(other, DiscreteTransferFunction):
            return NotImplemented
        return (np.array_equal(self.b, other.b) and np.array_equal(self.a, other.a)
                and self.ts == other.ts and self.u_offset == other.u_offset
                and self.y_offset == other.y_offset)

    @property
    def n(self):
        return len(self.a)

    @property
    def m(self):
        return len(self.b) - 1

    @property
    def n_params(self):
        return self.n + self.m + 1

    @property
    def poles(self):
        if self.n == 0:
            return np.zeros(0, dtype=complex)
        return np.roots(np.concatenate(([1.0], self.a)))

    @property
    def pole_radius(self):
        p = self.poles
        return float(np.max(np.abs(p))) if len(p) else 0.0

    @property
    def is_stable(self):
        return self.pole_radius < 1.0

    @property
    def dc_gain(self):
        den = 1.0 + float(np.sum(self.a))
        if den == 0.0:
            return math.inf
        return float(np.sum(self.b)) / den

    def steady_state(self, u):
        """Output settled under constant input ``u``."""
        g = self.dc_gain
        if not math.isfinite(g):
            return self.y_offset
        return self.y_offset + g * (u - self.u_offset)


@dataclass(frozen=True)
class FitReport:
    fit_percent: float
    nrmse: float
    adj_r2: float
    aicc: float
    bic: float
    n_params: int
    n_points: int


def _regressors(u, y, n, m):
    N = len(y)
    rows = N - n
    phi = np.empty((rows, n + m + 1))
    for i in range(1, n + 1):
        phi[:, i - 1] = -y[n - i:N - i]
    for j in range(m + 1):
        phi[:, n + j] = u[n - j:N - j]
    return phi, y[n:]


def fit_arx(data, n, m, offset=False):
    """Least-squares ARX fit of orders ``(n, m)``.

    With ``offset=True`` the model is fitted around the data means with an
    extra intercept, which is folded into ``y_offset``; the intercept is
    not counted in ``n_params``.
    """
    if n < 1 or m < 0 or m > n:
        raise ValueError(f"orders must satisfy 0 <= m <= n and n >= 1, got n={n}, m={m}")
    d = n + m + 1
    N = len(data)
    if N <= 10 * d:
        raise InsufficientDataError(f"{N} samples is too few for {d} parameters")
    u = np.asarray(data.u)
    y = np.asarray(data.y)
    u0 = y0 = 0.0
    if offset:
        u0 = float(np.mean(u))
        y0 = float(np.mean(y))
        u = u - u0
        y = y - y0
    phi, target = _regressors(u, y, n, m)
    if offset:
        phi = np.hstack([phi, np.ones((len(target), 1))])
    # column scaling keeps the rank test meaningful when u and y differ in size
    scale = np.linalg.norm(phi, axis=0)
    if np.any(scale == 0):
        raise UnidentifiableError("regressor has an all-zero column (no excitation)")
    phis = phi / scale
    if np.linalg.matrix_rank(phis) < phis.shape[1]:
        raise UnidentifiableError(f"regressor is rank deficient for n={n}, m={m}")
    theta, *_ = np.linalg.lstsq(phis, target, rcond=None)
    theta = theta / scale
    a = theta[:n]
    b = theta[n:n + m + 1]
    y_off = y0
    if offset:
        den = 1.0 + float(np.sum(a))
        if abs(den) < 1e-12:
            raise UnidentifiableError("integrating model cannot carry an operating-point offset")
        y_off = y0 + float(theta[-1]) / den
    return DiscreteTransferFunction(b, a, data.ts, u0, y_off)


def simulate_tf(tf, u, y_init=None, u_init=None):
    """Free-run simulation in absolute units.

    ``y_init`` (length ``n``) and ``u_init`` (length ``m``) are the outputs
    and inputs preceding ``u[0]`` in chronological order; they default to
    the model's operating point.
    """
    u = np.ascontiguousarray(u, dtype=float)
    n, m = tf.n, tf.m
    yh = np.full(max(n, 1), tf.y_offset)
    uh = np.full(max(m, 1), tf.u_offset)
    if y_init is not None:
        y_init = np.asarray(y_init, dtype=float)
        if len(y_init) != n:
            raise ValueError(f"y_init must have length n={n}")
        yh[:n] = y_init[::-1]
    if u_init is not None:
        u_init = np.asarray(u_init, dtype=float)
        if len(u_init) != m:
            raise ValueError(f"u_init must have length m={m}")
        uh[:m] = u_init[::-1]
    y = kernels.tf_run(np.ascontiguousarray(tf.b), np.ascontiguousarray(tf.a),
                       tf.u_offset, tf.y_offset, u, yh, uh)
    y = np.asarray(y)
    if not np.all(np.isfinite(y)):
        r = tf.pole_radius
        raise NumericBlowupError(f"simulation diverged, largest pole radius {r:.6g}", pole_radius=r)
    return y


def score(y, y_hat, n_params=1, denom_floor=0.0):
    """Free-run fit metrics of ``y_hat`` against ``y``.

    ``denom_floor`` bounds the NRMSE denominator from below so a nearly
    flat segment can still be scored; by default a constant ``y`` is an
    error.
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise ValueError("y and y_hat must be 1-D and of equal length")
    N = len(y)
    d = int(n_params)
    if N < 2:
        raise UndefinedMetricError("need at least two points")
    if N <= d + 1:
        raise UndefinedMetricError(f"AICc undefined for N={N}, d={d}")
    e = y - y_hat
    sse = float(np.dot(e, e))
    dev = y - np.mean(y)
    sst = float(np.dot(dev, dev))
    den = max(math.sqrt(sst), denom_floor)
    if den == 0.0:
        raise UndefinedMetricError("constant measured output, NRMSE undefined")
    nrmse = math.sqrt(sse) / den
    fit = 100.0 - 100.0 * nrmse
    adj_r2 = 1.0 - (N - 1) / (N - d) * (sse / (den * den))
    m2l = N * math.log(max(sse / N, 1e-300))
    aicc = m2l + 2 * d + 2 * d * (d + 1) / (N - d - 1)
    bic = m2l + d * math.log(N)
    return FitReport(fit, nrmse, adj_r2, aicc, bic, d, N)


@dataclass(frozen=True)
class Candidate:
    n: int
    m: int
    tf: DiscreteTransferFunction = field(compare=False)
    report: FitReport
    y_hat: np.ndarray = field(compare=False, repr=False)


def rank_candidates(candidates, fit_tol=1e-9):
    """Order candidates best first.

    Best fit_percent wins; fits within ``fit_tol`` of the current best are
    tied and ordered by AICc, then BIC, then ``n + m``.
    """
    rest = list(candidates)
    ordered = []
    while rest:
        best = max(c.report.fit_percent for c in rest)
        tied = [c for c in rest if c.report.fit_percent >= best - fit_tol]
        tied.sort(key=lambda c: (c.report.aicc, c.report.bic, c.n + c.m, c.n))
        ordered.append(tied[0])
        rest.remove(tied[0])
    return ordered


def static_model(data, ts=None):
    """Constant-output model for a segment whose output does not move."""
    return DiscreteTransferFunction([0.0], [], ts or data.ts, float(np.mean(data.u)),
                                    float(np.mean(data.y)))


def select_order(data, max_n=4, max_m=4, split=0.7, *, offset=False, fit_tol=1e-9,
                 denom_floor=0.0, flat_tol=0.0, return_all=False):
    """Fit every ``(n, m)`` with ``m <= n <= max_n`` and keep the best.

    Training uses the first ``split`` of the samples, scoring the free-run
    simulation of the rest.  The held-out run starts from the measured
    samples just before the split.  Unstable and unidentifiable candidates
    are dropped.  A training output whose spread is at most ``flat_tol``
    yields a static model.
    """
    if not 0 < split < 1:
        raise ValueError("split must lie in (0, 1)")
    if max_n < 1 or max_m < 0:
        raise ValueError("max_n must be >= 1 and max_m >= 0")
    k = split_index(len(data), split)
    u = np.asarray(data.u)
    y = np.asarray(data.y)
    if k < 10 or len(data) - k < 2:
        raise InsufficientDataError("split leaves too few training or test samples")
    train = Dataset(u[:k], y[:k], data.ts)
    y_test = y[k:]
    u_test = u[k:]

    if np.ptp(train.y) <= flat_tol:
        tf = static_model(train)
        y_hat = simulate_tf(tf, u_test)
        rep = score(y_test, y_hat, 1, denom_floor)
        cand = Candidate(0, 0, tf, rep, y_hat)
        return (tf, rep, [cand]) if return_all else (tf, rep)

    cands = []
    for n in range(1, max_n + 1):
        for m in range(0, min(n, max_m) + 1):
            try:
                tf = fit_arx(train, n, m, offset=offset)
            except (UnidentifiableError, InsufficientDataError):
                continue
            if not tf.is_stable:
                continue
            try:
                y_hat = simulate_tf(tf, u_test, y[k - n:k], u[k - m:k] if m else None)
                rep = score(y_test, y_hat, tf.n_params, denom_floor)
            except (NumericBlowupError, UndefinedMetricError):
                continue
            cands.append(Candidate(n, m, tf, rep, y_hat))
    if not cands:
        raise NoModelError("every candidate order was unstable or unidentifiable")
    ranked = rank_candidates(cands, fit_tol)
    best = ranked[0]
    return (best.tf, best.report, ranked) if return_all else (best.tf, best.report)
