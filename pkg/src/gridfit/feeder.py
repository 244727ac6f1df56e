"""Quasi-static time series on a 12-house radial low-voltage feeder.

The network is solved as a single-phase 240 V equivalent in per-unit on
the transformer rating.  Houses hang in pairs off six taps: tap 0 is the
transformer secondary bus, taps 1 to 5 follow along the backbone.  Each
house has a ZIP load and a PV inverter that is either the averaged plant
ODE ("detailed") or a partitioned transfer-function model.
"""
from dataclasses import dataclass, field, replace
import logging
import math
from pathlib import Path
import time
import warnings

import numpy as np

from . import csvio, kernels
from .errors import (
    ConfigError,
    CoverageError,
    DivergenceError,
    DomainError,
    ThresholdWarning,
)
from .plant import PlantParams, plant_equilibrium

log = logging.getLogger(__name__)

N_HOUSES = 12
N_TAPS = 6
MODES = ("no_gsf", "volt_var")
BINDINGS = ("detailed", "partitioned")
HOUSE_NAMES = tuple(f"H{i + 1}" for i in range(N_HOUSES))
NODE_NAMES = ("secondary",) + tuple(f"tap{i}" for i in range(1, N_TAPS)) + HOUSE_NAMES


@dataclass(frozen=True)
class LineSegment:
    """Overhead line section; ``length`` in km, ``r`` Ohm/km, ``l`` mH/km, ``c`` uF/km."""

    length: float
    r: float
    l: float
    c: float = 0.0
    kind: str = "backbone"

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError("line length must be positive")
        if self.r < 0 or self.l < 0 or self.c < 0:
            raise DomainError("line constants must be non-negative")
        if self.kind not in ("backbone", "drop"):
            raise DomainError(f"unknown line kind {self.kind!r}")

    def impedance(self, freq=60.0):
        """Series impedance in Ohm (shunt capacitance is not modelled)."""
        return complex(self.r * self.length, 2.0 * math.pi * freq * self.l * 1e-3 * self.length)


def backbone_span(length=0.020):
    return LineSegment(length, 0.346, 0.24, 0.072, "backbone")


def drop_line(length=0.020):
    return LineSegment(length, 0.549, 0.23, 0.055, "drop")


@dataclass(frozen=True)
class TransformerModel:
    rating: float = 75.0
    v_primary: float = 14.4
    v_secondary: float = 240.0
    r1: float = 0.06
    x1: float = 0.020
    r2: float = 0.0264
    x2: float = 0.0550
    rm: float = 500.0
    xm: float = 500.0
    include_primary_winding: bool = False

    def __post_init__(self):
        if not self.rating > 0:
            raise DomainError("transformer rating must be positive")
        if min(self.r1, self.x1, self.r2, self.x2, self.rm, self.xm) < 0:
            raise DomainError("transformer impedances must be non-negative")

    def series_impedance(self):
        """Series impedance in p.u. on the transformer rating.

        The source is held at the secondary side, so only the secondary
        winding sits in series unless ``include_primary_winding`` is set.
        The magnetising branch is neglected.
        """
        z = complex(self.r2, self.x2)
        if self.include_primary_winding:
            z += complex(self.r1, self.x1)
        return z


# (zp, ip, pp, zq, iq, pq) for residential strata
ZIP_STRATA = {
    "A": (1.5, -2.31, 1.81, 7.41, -11.97, 5.55),
    "B": (1.57, -2.48, 1.91, 9.28, -15.29, 7.01),
    "C": (1.56, -2.49, 1.93, 10.1, -16.75, 7.65),
    "D": (1.31, -1.94, 1.63, 9.20, -15.27, 7.07),
    "E": (0.96, -1.17, 1.21, 6.28, -10.16, 4.88),
    "F": (1.18, -1.64, 1.47, 8.29, -13.67, 6.38),
}


# tabulated coefficients carry two decimals, so a row may miss 1 by up to 0.015
ZIP_SUM_TOL = 0.015


@dataclass(frozen=True)
class ZipLoad:
    p0: float = 0.0
    q0: float = 0.0
    zp: float = 1.31
    ip: float = -1.94
    pp: float = 1.63
    zq: float = 9.20
    iq: float = -15.27
    pq: float = 7.07
    v0: float = 1.0

    def __post_init__(self):
        if abs(self.zp + self.ip + self.pp - 1.0) > ZIP_SUM_TOL:
            raise DomainError("active ZIP coefficients must sum to 1")
        if abs(self.zq + self.iq + self.pq - 1.0) > ZIP_SUM_TOL:
            raise DomainError("reactive ZIP coefficients must sum to 1")
        if not self.v0 > 0:
            raise DomainError("v0 must be positive")

    @classmethod
    def from_stratum(cls, stratum="D", p0=0.0, q0=0.0, v0=1.0):
        try:
            c = ZIP_STRATA[stratum]
        except KeyError:
            raise ConfigError(f"unknown ZIP stratum {stratum!r}") from None
        return cls(p0, q0, *c, v0=v0)

    @property
    def coefficients(self):
        return (self.zp, self.ip, self.pp, self.zq, self.iq, self.pq)


def zip_power(load, v):
    """``(P kW, Q kVAr)`` drawn by ``load`` at voltage ``v`` p.u."""
    if not v > 0:
        raise DomainError("voltage must be positive")
    x = v / load.v0
    p = load.p0 * (load.zp * x * x + load.ip * x + load.pp)
    q = load.q0 * (load.zq * x * x + load.iq * x + load.pq)
    return p, q


def pv_available_power(irradiance, mu=0.167, area=50.2605):
    """Maximum PV power in kW for irradiance in W/m^2."""
    if irradiance < 0:
        raise DomainError("irradiance must be non-negative")
    return mu * irradiance * area / 1000.0


@dataclass(frozen=True)
class House:
    name: str
    tap: int
    drop: LineSegment = field(default_factory=drop_line)
    stratum: str = "D"
    pv_area: float = 50.2605
    efficiency: float = 0.167

    def zip_load(self, p0=0.0, q0=0.0):
        return ZipLoad.from_stratum(self.stratum, p0, q0)


@dataclass(frozen=True, eq=False)
class Profiles:
    """Irradiance (W/m^2), house loads p (kW) and q (kVAr) on a uniform grid."""

    dt: float
    irradiance: np.ndarray
    p: np.ndarray
    q: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        irr = np.ascontiguousarray(self.irradiance, dtype=float)
        p = np.ascontiguousarray(self.p, dtype=float)
        q = np.ascontiguousarray(self.q, dtype=float)
        if p.ndim != 2 or p.shape != q.shape or p.shape[0] != len(irr):
            raise ValueError("profile arrays have inconsistent shapes")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for a in (irr, p, q):
            a.flags.writeable = False
        object.__setattr__(self, "irradiance", irr)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __len__(self):
        return len(self.irradiance)

    @property
    def time(self):
        return self.t0 + self.dt * np.arange(len(self))

    def window(self, start=0, steps=None):
        stop = len(self) if steps is None else start + steps
        if start < 0 or stop > len(self):
            raise CoverageError(f"profiles cover {len(self)} steps, asked for [{start}, {stop})")
        return Profiles(self.dt, self.irradiance[start:stop], self.p[start:stop],
                        self.q[start:stop], self.t0 + start * self.dt)


@dataclass(frozen=True, eq=False)
class FeederCase:
    transformer: TransformerModel = field(default_factory=TransformerModel)
    houses: tuple = None
    backbone: tuple = None
    source_v: float = 1.02
    profiles: Profiles = None
    timestep: float = 1.0
    plant: PlantParams = field(default_factory=PlantParams)
    frequency: float = 60.0

    def __post_init__(self):
        houses = self.houses
        if houses is None:
            houses = tuple(House(HOUSE_NAMES[i], i // 2) for i in range(N_HOUSES))
        backbone = self.backbone
        if backbone is None:
            backbone = tuple(backbone_span() for _ in range(N_TAPS - 1))
        object.__setattr__(self, "houses", tuple(houses))
        object.__setattr__(self, "backbone", tuple(backbone))
        if len(self.houses) != N_HOUSES:
            raise ConfigError(f"the feeder has {N_HOUSES} houses, got {len(self.houses)}")
        if len(self.backbone) != N_TAPS - 1:
            raise ConfigError(f"need {N_TAPS - 1} backbone spans, got {len(self.backbone)}")
        for h in self.houses:
            if not 0 <= h.tap < N_TAPS:
                raise ConfigError(f"house {h.name} on unknown tap {h.tap}")
        if not self.source_v > 0 or not self.timestep > 0:
            raise ConfigError("source_v and timestep must be positive")

    @property
    def s_base(self):
        return self.transformer.rating

    @property
    def v_base(self):
        return self.transformer.v_secondary

    @property
    def z_base(self):
        return self.v_base ** 2 / (self.s_base * 1000.0)

    @property
    def i_base(self):
        return self.s_base * 1000.0 / self.v_base

    def network(self):
        """Arrays describing the radial ladder for the sweep kernels."""
        nn = N_TAPS + N_HOUSES
        parent = np.empty(nn, dtype=np.int64)
        z = np.empty(nn, dtype=complex)
        parent[0] = -1
        z[0] = self.transformer.series_impedance()
        for k in range(1, N_TAPS):
            parent[k] = k - 1
            z[k] = self.backbone[k - 1].impedance(self.frequency) / self.z_base
        hn = np.empty(N_HOUSES, dtype=np.int64)
        zc = np.empty((N_HOUSES, 6))
        for h, house in enumerate(self.houses):
            node = N_TAPS + h
            parent[node] = house.tap
            z[node] = house.drop.impedance(self.frequency) / self.z_base
            hn[h] = node
            zc[h] = ZIP_STRATA[house.stratum]
        return {
            "parent": parent,
            "zr": np.ascontiguousarray(z.real),
            "zi": np.ascontiguousarray(z.imag),
            "e_src": float(self.source_v),
            "house_node": hn,
            "zip": zc,
            "i_base": self.i_base,
            "s_base_kva": float(self.s_base),
        }

    def mu_area(self):
        return np.array([h.efficiency * h.pv_area for h in self.houses])


@dataclass
class NetworkSolution:
    v: np.ndarray
    sweeps: int
    branch_current: np.ndarray
    source_power_kva: complex
    losses_kw: float

    @property
    def v_mag(self):
        return np.abs(self.v)

    @property
    def houses(self):
        return self.v_mag[N_TAPS:]

    @property
    def secondary(self):
        return float(self.v_mag[0])


def solve_network(case, injections, loads=None, v_init=None, tol=1e-8, maxit=100):
    """Backward/forward sweep for one operating point.

    ``injections`` is ``(P, Q)`` per house in kW/kVAr as constant power
    (positive = generation).  ``loads`` optionally adds ``(p0, q0)`` per
    house drawn through each house's ZIP characteristic.
    """
    net = case.network()
    p_inj, q_inj = (np.asarray(x, dtype=float).reshape(N_HOUSES) for x in injections)
    if not (np.all(np.isfinite(p_inj)) and np.all(np.isfinite(q_inj))):
        raise DomainError("injections must be finite")
    sb = case.s_base
    if loads is None:
        p0 = q0 = np.zeros(N_HOUSES)
    else:
        p0, q0 = (np.asarray(x, dtype=float).reshape(N_HOUSES) / sb for x in loads)
    nn = len(net["parent"])
    if v_init is None:
        v_re = np.full(nn, case.source_v)
        v_im = np.zeros(nn)
    else:
        v_re = np.array(np.real(v_init), dtype=float)
        v_im = np.array(np.imag(v_init), dtype=float)
    zero = np.zeros(N_HOUSES)
    status, sweeps, worst = kernels.bfs_solve(
        net["parent"], net["zr"], net["zi"], net["e_src"], net["house_node"],
        p_inj / sb, q_inj / sb, p0, q0, net["zip"], zero, zero, v_re, v_im, tol, maxit,
    )
    if status != kernels.OK:
        raise DivergenceError(f"sweep did not converge in {maxit} iterations "
                              f"(worst mismatch {worst:.3e} p.u.)", worst=worst)
    v = v_re + 1j * v_im
    ibr = kernels.branch_currents(net["parent"], net["house_node"], p_inj / sb, q_inj / sb,
                                  p0, q0, net["zip"], zero, zero, v_re, v_im)
    z = net["zr"] + 1j * net["zi"]
    losses = float(np.sum(np.abs(ibr) ** 2 * z.real)) * sb
    # the source delivers the current that the secondary bus pushes back toward it
    s_src = net["e_src"] * np.conj(-ibr[0]) * sb
    return NetworkSolution(v, sweeps, ibr, complex(s_src), losses)


def load_sweep(case, p_range=(-75.0, 75.0), steps=31):
    """House voltages against total net load (kW, positive = consumption).

    The net load is shared equally by the houses at unity power factor
    and inverter controls are off.  Returns ``(net_load, v)`` with ``v``
    of shape ``(steps, 12)``.
    """
    if steps < 2:
        raise DomainError("steps must be at least 2")
    loads = np.linspace(p_range[0], p_range[1], int(steps))
    out = np.empty((len(loads), N_HOUSES))
    v_prev = None
    for i, total in enumerate(loads):
        inj = np.full(N_HOUSES, -total / N_HOUSES)
        sol = solve_network(case, (inj, np.zeros(N_HOUSES)), v_init=v_prev)
        out[i] = sol.houses
        v_prev = sol.v
    return loads, out


@dataclass
class TimeseriesResult:
    time: np.ndarray
    v: np.ndarray
    i_d: np.ndarray
    i_q: np.ndarray
    q: np.ndarray
    p: np.ndarray
    iters: np.ndarray
    mode: str
    binding: str
    wall_time: float

    @property
    def v_houses(self):
        return self.v[:, N_TAPS:]

    @property
    def i_mag(self):
        return np.hypot(self.i_d, self.i_q)

    def write_csv(self, out_dir, prefix=""):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        tag = f"{prefix}{self.mode}_{self.binding}"
        for name, arr, unit in (("voltages", self.v, "v_pu"), ("currents", self.i_mag, "i_A"),
                                ("reactive", self.q, "q_kvar")):
            names = NODE_NAMES if arr.shape[1] == len(NODE_NAMES) else HOUSE_NAMES
            header = ("time_s",) + tuple(f"{n}_{unit}" for n in names)
            path = out_dir / f"{tag}_{name}.csv"
            csvio.write_columns(path, header, [self.time] + [arr[:, j] for j in range(arr.shape[1])])
            paths.append(path)
        return paths


def _device_state(case, profiles, mode, binding, model):
    plant = case.plant
    dev = {
        "prm": np.array(plant.kernel_params()),
        "curve": np.array(plant.curve.as_tuple()),
        "mu_area": case.mu_area(),
    }
    gsf = mode == "volt_var"
    state = np.empty((N_HOUSES, 3))
    p_av = case.mu_area() * profiles.irradiance[0] / 1000.0
    for h in range(N_HOUSES):
        st = plant_equilibrium(case.source_v, p_av[h], plant, gsf)
        state[h] = (st.v_filt, st.i_d, st.i_q)
    dev["state"] = state
    if binding == "partitioned":
        pk = model.packed()
        yh, uh = model.initial_history(case.source_v)
        dev.update({k: pk[k] for k in ("hi", "B", "A", "nord", "mord", "uoff", "yoff")})
        dev["hist"] = np.ascontiguousarray(np.tile(yh, (N_HOUSES, 1)))
        dev["hist_u"] = np.ascontiguousarray(np.tile(uh, (N_HOUSES, 1)))
    return dev


def run_timeseries(case, mode="volt_var", binding="detailed", model=None, *, start=0,
                   steps=None, backend=None, max_iter=10, fp_tol=1e-6):
    """Step the feeder through ``case.profiles``.

    At every coupling step each inverter is advanced by ``case.timestep``
    (plant ODE sub-stepped at ``plant_dt``, or the partitioned model at its
    sampling time) and the network is re-solved, iterating on the terminal
    voltages until they move less than ``fp_tol``.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if binding not in BINDINGS:
        raise ConfigError(f"binding must be one of {BINDINGS}, got {binding!r}")
    if case.profiles is None:
        raise ConfigError("feeder case has no profiles")
    if binding == "partitioned" and model is None:
        raise ConfigError("partitioned binding needs a PartitionedModel")
    profiles = case.profiles.window(start, steps)
    if abs(profiles.dt - case.timestep) > 1e-9 * case.timestep:
        raise CoverageError(f"profiles are sampled every {profiles.dt} s, "
                            f"case timestep is {case.timestep} s")
    dt_dev = model.ts if binding == "partitioned" else 1e-3
    sub = round(case.timestep / dt_dev)
    if sub < 1 or abs(sub * dt_dev - case.timestep) > 1e-9:
        raise ConfigError(f"device step {dt_dev} s does not divide the timestep")

    k = kernels if backend is None else kernels.get(backend)
    net = case.network()
    dev = _device_state(case, profiles, mode, binding, model)
    T = len(profiles)
    nn = len(net["parent"])
    out = {
        "v": np.zeros((T, nn)),
        "i_d": np.zeros((T, N_HOUSES)),
        "i_q": np.zeros((T, N_HOUSES)),
        "q": np.zeros((T, N_HOUSES)),
        "p": np.zeros((T, N_HOUSES)),
        "iters": np.zeros(T, dtype=np.int64),
    }
    prof = {
        "irradiance": np.ascontiguousarray(np.maximum(profiles.irradiance, 0.0)),
        "p0": np.ascontiguousarray(profiles.p),
        "q0": np.ascontiguousarray(profiles.q),
    }
    opts = {
        "binding": 1 if binding == "partitioned" else 0,
        "gsf": 1 if mode == "volt_var" else 0,
        "substeps": int(sub),
        "dt": float(dt_dev),
        "max_iter": int(max_iter),
        "fp_tol": float(fp_tol),
        "bfs_tol": 1e-8,
        "bfs_maxit": 100,
    }
    t0 = time.perf_counter()
    status, step = k.feeder_run(net, dev, prof, out, opts)
    wall = time.perf_counter() - t0
    if status != kernels.OK:
        ts = profiles.t0 + step * profiles.dt
        raise DivergenceError(f"network solve diverged at t={ts:g} s", time_s=ts)
    _check_thresholds(out["v"][:, N_TAPS:], case.plant.curve)
    return TimeseriesResult(profiles.time, out["v"], out["i_d"], out["i_q"], out["q"],
                            out["p"], out["iters"], mode, binding, wall)


def _check_thresholds(vh, curve):
    lo = int(np.sum(np.any(vh < curve.v_L, axis=1)))
    hi = int(np.sum(np.any(vh >= curve.v_H, axis=1)))
    if lo or hi:
        warnings.warn(f"terminal voltage outside [{curve.v_L}, {curve.v_H}) p.u. "
                      f"in {lo + hi} steps", ThresholdWarning, stacklevel=3)
    reconnect = int(np.sum(np.any((vh < 0.89) | (vh > 1.09), axis=1)))
    if reconnect:
        log.info("reconnection band [0.89, 1.09] p.u. left in %d steps", reconnect)


def current_nrmse(reference, other):
    """Per-house NRMSE in percent between two current-magnitude traces."""
    ref = np.asarray(reference, dtype=float)
    oth = np.asarray(other, dtype=float)
    err = np.linalg.norm(ref - oth, axis=0)
    den = np.linalg.norm(ref - ref.mean(axis=0), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, err / den, np.where(err > 0, np.inf, 0.0))
    return 100.0 * r


# profile files --------------------------------------------------------------

def _interp_grid(t, t_grid, what, path):
    if t_grid[0] < t[0] - 1e-9 or t_grid[-1] > t[-1] + 1e-9:
        raise CoverageError(f"{path}: {what} covers [{t[0]}, {t[-1]}] s, "
                            f"need [{t_grid[0]}, {t_grid[-1]}] s")


def ingest_profiles(load_csv, irradiance_csv, target_dt=1.0, horizon=None, power_factor=0.95):
    """Read load and irradiance CSVs and resample to ``target_dt``.

    The load file has ``time_s`` and one kW column per house; the
    irradiance file has ``time_s`` and W/m^2.  Reactive load follows from
    ``power_factor``.  ``horizon`` (s) defaults to the span both files
    cover; the grid starts at the later first timestamp.
    """
    _, la = csvio.read_columns(load_csv)
    _, ia = csvio.read_columns(irradiance_csv, expect=2)
    if la.shape[1] != N_HOUSES + 1:
        raise CoverageError(f"{load_csv}: expected {N_HOUSES} load columns, got {la.shape[1] - 1}")
    for arr, path in ((la, load_csv), (ia, irradiance_csv)):
        if len(arr) < 2 or np.any(np.diff(arr[:, 0]) <= 0):
            raise CoverageError(f"{path}: timestamps must be strictly increasing (2+ rows)")
    t_start = max(la[0, 0], ia[0, 0])
    t_end = min(la[-1, 0], ia[-1, 0])
    if horizon is None:
        n = int(math.floor((t_end - t_start) / target_dt + 1e-9)) + 1
    else:
        n = int(round(horizon / target_dt))
    grid = t_start + target_dt * np.arange(n)
    _interp_grid(la[:, 0], grid, "load profile", load_csv)
    _interp_grid(ia[:, 0], grid, "irradiance profile", irradiance_csv)
    irr = np.interp(grid, ia[:, 0], ia[:, 1])
    if np.any(ia[:, 1] < 0):
        warnings.warn(f"{irradiance_csv}: negative irradiance clamped to 0", UserWarning,
                      stacklevel=2)
        irr = np.maximum(irr, 0.0)
    p = np.column_stack([np.interp(grid, la[:, 0], la[:, j]) for j in range(1, N_HOUSES + 1)])
    q = p * math.tan(math.acos(power_factor))
    return Profiles(target_dt, irr, p, q, float(t_start))


def synthetic_hourly(peak_irradiance=930.0, mean_load=0.33):
    """Hourly clear-sky irradiance and 12 household load curves.

    Returns ``(hours, irradiance, loads)`` with 25 rows (0 h to 24 h).
    """
    h = np.arange(25.0)
    x = np.clip((h - 5.5) / 14.5, 0.0, 1.0)
    irr = peak_irradiance * np.sin(np.pi * x) ** 1.2
    mult = np.array([1.0, 0.8, 1.25, 0.9, 1.1, 0.7, 1.3, 0.95, 0.85, 1.15, 1.05, 0.95])
    shift = np.array([0.0, 0.5, -0.5, 1.0, -1.0, 0.25, -0.25, 0.75, -0.75, 0.0, 0.5, -0.5])
    loads = np.empty((25, N_HOUSES))
    for j in range(N_HOUSES):
        hh = h - shift[j]
        shape = (0.6 + 0.5 * np.exp(-(((hh - 7.5) / 1.5) ** 2))
                 + 0.9 * np.exp(-(((hh - 19.0) / 2.5) ** 2)))
        loads[:, j] = shape
    loads *= mean_load / loads[:24].mean() * mult
    return h, irr, loads


def write_profile_csvs(out_dir, peak_irradiance=930.0, mean_load=0.33):
    out_dir = Path(out_dir)
    h, irr, loads = synthetic_hourly(peak_irradiance, mean_load)
    t = h * 3600.0
    lp = csvio.write_columns(out_dir / "loads_hourly.csv",
                             ("time_s",) + tuple(f"{n}_kw" for n in HOUSE_NAMES),
                             [t] + [loads[:, j] for j in range(N_HOUSES)])
    ip = csvio.write_columns(out_dir / "irradiance_hourly.csv", ("time_s", "irradiance_wm2"),
                             [t, irr])
    return lp, ip


def synthetic_profiles(target_dt=1.0, hours=24.0, peak_irradiance=930.0, mean_load=0.33,
                       power_factor=0.95):
    """Synthetic day resampled to ``target_dt`` without touching the disk."""
    h, irr, loads = synthetic_hourly(peak_irradiance, mean_load)
    grid = target_dt * np.arange(int(round(hours * 3600.0 / target_dt)))
    t = h * 3600.0
    ir = np.interp(grid, t, irr)
    p = np.column_stack([np.interp(grid, t, loads[:, j]) for j in range(N_HOUSES)])
    return Profiles(target_dt, ir, p, p * math.tan(math.acos(power_factor)))


def default_case(profiles=None, **changes):
    """The 12-house feeder with default components."""
    if profiles is None:
        profiles = synthetic_profiles()
    return replace(FeederCase(profiles=profiles), **changes) if changes else FeederCase(
        profiles=profiles)
