"""Voltage-partitioned local models and the search over partition count.

A :class:`PartitionedModel` holds one transfer function per voltage range
and switches between them on the instantaneous input.  All local models
share one output/input history in absolute units, so an incoming model
continues from the trajectory its predecessor left behind.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math
import os
import time
import warnings

import numpy as np

from . import csvio, kernels
from .errors import DomainError, NoModelError, PartitionFailure, SearchWarning
from .plant import PlantParams, simulate_plant
from .signalgen import ChirpSpec, PartitionPlan, Signal, generate_probing_signal
from .sysid import Dataset, FitReport, score, select_order, split_index

log = logging.getLogger(__name__)

TRACE_HEADER = ("n", "overall_fit_percent", "wall_time_s")


@dataclass(frozen=True)
class SearchConfig:
    n_min: int = 1
    n_max: int = 22
    fit_req: float = 97.0
    v_limits: tuple = (0.88, 1.10)
    order_limits: tuple = (4, 4)
    split: float = 0.7
    chirp: ChirpSpec = field(default_factory=ChirpSpec)
    plant_dt: float = 1e-3
    channel: str = "iq"
    p_avail: float = 0.0
    noise: float = 0.0
    seed: int = None
    fit_tol: float = 1e-9

    def __post_init__(self):
        if not (1 <= self.n_min < self.n_max):
            raise DomainError(f"need 1 <= n_min < n_max, got {self.n_min}, {self.n_max}")
        if not 0 < self.fit_req <= 100:
            raise DomainError("fit_req must lie in (0, 100]")
        if not self.v_limits[0] < self.v_limits[1]:
            raise DomainError("v_limits must be increasing")
        if not 0 < self.split < 1:
            raise DomainError("split must lie in (0, 1)")
        max_n, max_m = self.order_limits
        if max_n < 1 or max_m < 0:
            raise DomainError("order_limits need max_n >= 1 and max_m >= 0")


@dataclass(frozen=True)
class RangeModel:
    v_lo: float
    v_hi: float
    tf: object
    report: FitReport


@dataclass(frozen=True, eq=False)
class PartitionedModel:
    ranges: tuple
    models: tuple
    reports: tuple
    overall_fit: float

    def __post_init__(self):
        object.__setattr__(self, "ranges", tuple((float(a), float(b)) for a, b in self.ranges))
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "reports", tuple(self.reports))
        if not self.ranges:
            raise ValueError("a partitioned model needs at least one range")
        if not len(self.ranges) == len(self.models) == len(self.reports):
            raise ValueError("ranges, models and reports must have equal length")
        for (a, b), (c, _) in zip(self.ranges, self.ranges[1:]):
            if abs(b - c) > 1e-9:
                raise ValueError("ranges must tile the voltage window contiguously")
        if len({tf.ts for tf in self.models}) != 1:
            raise ValueError("all local models must share one sampling time")

    @property
    def n_partitions(self):
        return len(self.ranges)

    @property
    def v_limits(self):
        return self.ranges[0][0], self.ranges[-1][1]

    @property
    def ts(self):
        return self.models[0].ts

    def range_models(self):
        return [RangeModel(lo, hi, tf, rep)
                for (lo, hi), tf, rep in zip(self.ranges, self.models, self.reports)]

    def index(self, v):
        """Range that owns ``v``; shared boundaries go to the lower range."""
        return int(kernels.range_index(float(v), self.packed()["hi"]))

    def packed(self):
        """Coefficient tables laid out for the kernels (cached)."""
        cache = self.__dict__.get("_packed")
        if cache is not None:
            return cache
        R = len(self.models)
        H = max(1, max(tf.n for tf in self.models))
        Hu = max(1, max(tf.m for tf in self.models))
        B = np.zeros((R, Hu + 1))
        A = np.zeros((R, H))
        for r, tf in enumerate(self.models):
            B[r, :tf.m + 1] = tf.b
            A[r, :tf.n] = tf.a
        cache = {
            "hi": np.array([hi for _, hi in self.ranges]),
            "B": B,
            "A": A,
            "nord": np.array([tf.n for tf in self.models], dtype=np.int64),
            "mord": np.array([tf.m for tf in self.models], dtype=np.int64),
            "uoff": np.array([tf.u_offset for tf in self.models]),
            "yoff": np.array([tf.y_offset for tf in self.models]),
            "H": H,
            "Hu": Hu,
        }
        object.__setattr__(self, "_packed", cache)
        return cache

    def initial_history(self, v0):
        """Histories for a start in steady state at input ``v0``."""
        pk = self.packed()
        y0 = self.models[self.index(v0)].steady_state(v0)
        return np.full(pk["H"], y0), np.full(pk["Hu"], float(v0))


def simulate_partitioned(model, v_input, y_hist=None, u_hist=None):
    """Run the switched local models over ``v_input`` (Signal or array).

    Histories are most-recent-first in absolute units; by default the run
    starts in steady state at the first input sample.  Inputs outside the
    voltage window use the end ranges.
    """
    if isinstance(v_input, Signal):
        v = np.ascontiguousarray(v_input.values, dtype=float)
    else:
        v = np.ascontiguousarray(v_input, dtype=float)
    pk = model.packed()
    yh0, uh0 = model.initial_history(v[0])
    yh = yh0 if y_hist is None else _history(y_hist, pk["H"])
    uh = uh0 if u_hist is None else _history(u_hist, pk["Hu"])
    y = kernels.partitioned_run(v, pk["hi"], pk["B"], pk["A"], pk["nord"], pk["mord"],
                                pk["uoff"], pk["yoff"], yh, uh)
    y = np.asarray(y)
    if isinstance(v_input, Signal):
        return Signal(v_input.timestamps, y, v_input.sample_rate)
    return y


def _history(h, size):
    h = np.array(h, dtype=float).reshape(-1)
    out = np.empty(size)
    k = min(size, len(h))
    out[:k] = h[:k]
    out[k:] = h[-1] if len(h) else 0.0
    return out


def probe_plant(n, cfg, plant):
    """Probing signal for ``n`` partitions and the plant's response to it."""
    plan = PartitionPlan(cfg.v_limits[0], cfg.v_limits[1], n, cfg.chirp.T)
    u = generate_probing_signal(plan, cfg.chirp)
    y = simulate_plant(u, cfg.p_avail, plant, cfg.plant_dt, channel=cfg.channel,
                       noise=cfg.noise, seed=cfg.seed)
    return plan, u, y


def fit_partitions(plan, u, y, cfg):
    """Identify one local model per dwell interval of a probing record."""
    spp = len(u) // plan.n_partitions
    uv = np.asarray(u.values)
    yv = np.asarray(y.values)
    # flat-segment scale relative to the whole experiment
    spread = float(np.ptp(yv)) or 1.0
    floor = 1e-6 * spread
    max_n, max_m = cfg.order_limits
    models, reports, held_y, held_hat = [], [], [], []
    for k in range(plan.n_partitions):
        seg = slice(k * spp, (k + 1) * spp)
        data = Dataset(uv[seg], yv[seg], u.dt)
        try:
            tf, rep, ranked = select_order(
                data, max_n, max_m, cfg.split, offset=True, fit_tol=cfg.fit_tol,
                denom_floor=floor, flat_tol=floor, return_all=True,
            )
        except NoModelError as exc:
            raise PartitionFailure(
                f"no usable model for range {plan.bounds(k)}: {exc}", v_range=plan.bounds(k)
            ) from exc
        models.append(tf)
        reports.append(rep)
        cut = split_index(len(data), cfg.split)
        held_y.append(data.y[cut:])
        held_hat.append(ranked[0].y_hat)
    yh = np.concatenate(held_y)
    overall = score(yh, np.concatenate(held_hat), 1).fit_percent
    return PartitionedModel(plan.ranges(), models, reports, overall)


def evaluate_partition_count(n, cfg, plant=None):
    """Probe, simulate and identify with ``n`` partitions.

    Returns ``(model, overall_fit)`` where the overall fit is computed on
    the concatenated held-out segments of every range.
    """
    if not cfg.n_min <= n <= cfg.n_max:
        raise DomainError(f"n={n} outside [{cfg.n_min}, {cfg.n_max}]")
    plant = plant or PlantParams()
    plan, u, y = probe_plant(n, cfg, plant)
    model = fit_partitions(plan, u, y, cfg)
    return model, model.overall_fit


def _threads():
    try:
        return max(1, int(os.environ.get("GRIDFIT_THREADS", "2")))
    except ValueError:
        return 1


@dataclass
class SearchResult:
    n: int
    model: object
    fit: float
    check: bool
    trace: list

    def write_trace(self, path):
        cols = list(zip(*self.trace)) if self.trace else ([], [], [])
        return csvio.write_columns(path, TRACE_HEADER, cols)


def binary_search_partitions(cfg, plant=None, evaluate=None, return_result=False):
    """Bisection over the partition count.

    Both ends are evaluated first.  While the gap exceeds one and the upper
    end fits better than the lower end and exceeds the requirement, the
    midpoint replaces the upper end if it meets the requirement and the
    lower end otherwise.  If the upper end stops qualifying the search
    stops and returns the lower end.  ``evaluate(n)`` may be injected; it
    must return ``(model, fit)``.
    """
    plant = plant or PlantParams()
    if evaluate is None:
        def evaluate(n):
            return evaluate_partition_count(n, cfg, plant)

    cache = {}
    trace = []

    def run(n):
        if n not in cache:
            t0 = time.perf_counter()
            cache[n] = evaluate(n)
            trace.append((n, float(cache[n][1]), time.perf_counter() - t0))
            log.info("partitions=%d fit=%.4f%%", n, cache[n][1])
        return cache[n]

    n_min, n_max = cfg.n_min, cfg.n_max
    if _threads() >= 2:
        with ThreadPoolExecutor(max_workers=2) as pool:
            futs = {n: pool.submit(evaluate, n) for n in (n_min, n_max)}
            t0 = time.perf_counter()
            for n in (n_min, n_max):
                cache[n] = futs[n].result()
                trace.append((n, float(cache[n][1]), time.perf_counter() - t0))
    fit_min = run(n_min)[1]
    fit_max = run(n_max)[1]

    check = True
    while n_max - n_min > 1:
        if fit_max > fit_min and fit_max > cfg.fit_req:
            n_mid = n_min + (n_max - n_min) // 2
            fit_mid = run(n_mid)[1]
            if fit_mid >= cfg.fit_req:
                n_max, fit_max = n_mid, fit_mid
            else:
                n_min, fit_min = n_mid, fit_mid
        else:
            check = False
            break

    n_star = n_max if check else n_min
    fit = fit_max if check else fit_min
    if not check or fit < cfg.fit_req:
        pairs = ", ".join(f"({n}, {f:.4f})" for n, f, _ in sorted(trace))
        warnings.warn(
            f"search returned n={n_star} with fit {fit:.4f}% "
            f"({'lower end' if not check else 'below requirement'} {cfg.fit_req}%); "
            f"evaluated: {pairs}",
            SearchWarning, stacklevel=2,
        )
    res = SearchResult(n_star, cache[n_star][0], fit, check, trace)
    return res if return_result else (n_star, res.model)


def max_evaluations(n_min, n_max):
    return 2 + math.ceil(math.log2(n_max - n_min)) if n_max - n_min > 1 else 2
