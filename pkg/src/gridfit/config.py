"""Run configuration read from a YAML document.

Relative paths inside a configuration resolve against the file's own
directory.  ``load_config`` also accepts the name of a bundled
configuration (``paper_singlehouse``, ``paper_feeder12``).
"""
from dataclasses import dataclass, field
from importlib import resources
import math
from pathlib import Path

import yaml

from .errors import ConfigError, GridFitError
from .feeder import (
    FeederCase,
    House,
    HOUSE_NAMES,
    N_HOUSES,
    N_TAPS,
    TransformerModel,
    ZIP_STRATA,
    backbone_span,
    drop_line,
    ingest_profiles,
    synthetic_profiles,
)
from .partition import SearchConfig
from .plant import PlantParams, VoltVarCurve
from .signalgen import ChirpSpec

BUNDLED = ("paper_singlehouse", "paper_feeder12")

_SECTIONS = {
    "seed", "output_dir", "plant", "volt_var", "chirp", "search", "feeder",
}


@dataclass(frozen=True)
class ProfilePaths:
    loads: Path = None
    irradiance: Path = None
    power_factor: float = 0.95


@dataclass(frozen=True)
class RunConfig:
    plant: PlantParams = field(default_factory=PlantParams)
    search: SearchConfig = field(default_factory=SearchConfig)
    feeder: dict = field(default_factory=dict)
    profiles: ProfilePaths = field(default_factory=ProfilePaths)
    output_dir: Path = Path("out")
    seed: int = None
    source: Path = None

    @property
    def chirp(self):
        return self.search.chirp

    def build_case(self, hours=None):
        """Feeder case with profiles resampled to the coupling step."""
        f = self.feeder
        dt = float(f.get("timestep_s", 1.0))
        hours = float(f.get("hours", 24.0)) if hours is None else float(hours)
        horizon = hours * 3600.0
        if self.profiles.loads is not None:
            prof = ingest_profiles(self.profiles.loads, self.profiles.irradiance, dt, horizon,
                                   self.profiles.power_factor)
        else:
            prof = synthetic_profiles(dt, hours, power_factor=self.profiles.power_factor)
        tr = f.get("transformer", {})
        try:
            transformer = TransformerModel(**tr)
        except TypeError as exc:
            raise ConfigError(f"feeder.transformer: {exc}") from None
        spans = f.get("span_km", [0.02] * (N_TAPS - 1))
        if len(spans) != N_TAPS - 1:
            raise ConfigError(f"feeder.span_km needs {N_TAPS - 1} entries")
        drop = float(f.get("drop_km", 0.02))
        stratum = f.get("zip_stratum", "D")
        if stratum not in ZIP_STRATA:
            raise ConfigError(f"feeder.zip_stratum: unknown stratum {stratum!r}")
        area = float(f.get("pv_area_m2", 50.2605))
        eff = float(f.get("pv_efficiency", 0.167))
        houses = tuple(House(HOUSE_NAMES[i], i // 2, drop_line(drop), stratum, area, eff)
                       for i in range(N_HOUSES))
        return FeederCase(
            transformer=transformer,
            houses=houses,
            backbone=tuple(backbone_span(float(s)) for s in spans),
            source_v=float(f.get("source_v_pu", 1.02)),
            profiles=prof,
            timestep=dt,
            plant=self.plant,
            frequency=float(f.get("frequency_hz", 60.0)),
        )


def _section(doc, name):
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return sec


def _take(sec, name, key, default, kind=float):
    val = sec.get(key, default)
    try:
        return kind(val) if val is not None else None
    except (TypeError, ValueError):
        raise ConfigError(f"{name}.{key}: cannot interpret {val!r}") from None


def _check_keys(sec, name, allowed):
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")


def resolve(path_or_name):
    p = Path(path_or_name)
    if p.exists():
        return p
    name = p.stem if p.suffix in (".yaml", ".yml") else p.name
    if name in BUNDLED:
        return Path(str(resources.files("gridfit") / "configs" / f"{name}.yaml"))
    raise ConfigError(f"configuration {str(path_or_name)!r} not found")


def parse(doc, base_dir=Path("."), source=None):
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    _check_keys(doc, "config", _SECTIONS)
    pl = _section(doc, "plant")
    _check_keys(pl, "plant", {"s_rating_kva", "pll_bandwidth_rad_s", "current_loop_tau_s",
                              "v_base_v", "dt_s", "noise_a", "channel", "p_avail_kw"})
    vv = _section(doc, "volt_var")
    _check_keys(vv, "volt_var", {"v_pu", "q_kvar"})
    ch = _section(doc, "chirp")
    _check_keys(ch, "chirp", {"f0_hz", "f1_hz", "sweep_s", "phi0_rad", "sample_rate_hz"})
    se = _section(doc, "search")
    _check_keys(se, "search", {"n_min", "n_max", "fit_req", "v_limits", "max_n", "max_m",
                               "split"})
    fe = _section(doc, "feeder")
    _check_keys(fe, "feeder", {"source_v_pu", "timestep_s", "frequency_hz", "span_km",
                               "drop_km", "zip_stratum", "pv_area_m2", "pv_efficiency",
                               "transformer", "profiles", "hours"})
    try:
        v = [float(x) for x in vv.get("v_pu", [0.88, 0.92, 0.98, 1.02, 1.08, 1.10])]
        q = [float(x) for x in vv.get("q_kvar", [6.25, 0.0, 0.0, -6.25])]
        if len(v) != 6 or len(q) != 4:
            raise ConfigError("volt_var needs six voltages and four setpoints")
        curve = VoltVarCurve(*v, *q)
        plant = PlantParams(
            s_rating=_take(pl, "plant", "s_rating_kva", 8.4),
            pll_bandwidth=_take(pl, "plant", "pll_bandwidth_rad_s", 2.0 * math.pi * 10.0),
            current_loop_tau=_take(pl, "plant", "current_loop_tau_s", 0.02),
            curve=curve,
            v_base=_take(pl, "plant", "v_base_v", 240.0),
        )
        chirp = ChirpSpec(
            f0=_take(ch, "chirp", "f0_hz", 1.0),
            f1=_take(ch, "chirp", "f1_hz", 32.0),
            T=_take(ch, "chirp", "sweep_s", 6.0),
            phi0=_take(ch, "chirp", "phi0_rad", 0.0),
            sample_rate=_take(ch, "chirp", "sample_rate_hz", 1000.0),
        )
        seed = _take(doc, "config", "seed", None, int)
        channel = pl.get("channel", "iq")
        if channel not in ("iq", "mag"):
            raise ConfigError(f"plant.channel must be 'iq' or 'mag', got {channel!r}")
        limits = se.get("v_limits", [curve.v_L, curve.v_H])
        search = SearchConfig(
            n_min=_take(se, "search", "n_min", 1, int),
            n_max=_take(se, "search", "n_max", 22, int),
            fit_req=_take(se, "search", "fit_req", 97.0),
            v_limits=(float(limits[0]), float(limits[1])),
            order_limits=(_take(se, "search", "max_n", 4, int),
                          _take(se, "search", "max_m", 4, int)),
            split=_take(se, "search", "split", 0.7),
            chirp=chirp,
            plant_dt=_take(pl, "plant", "dt_s", 1e-3),
            channel=channel,
            p_avail=_take(pl, "plant", "p_avail_kw", 0.0),
            noise=_take(pl, "plant", "noise_a", 0.0),
            seed=seed,
        )
    except ConfigError:
        raise
    except (GridFitError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    pr = fe.get("profiles") or {}
    _check_keys(pr, "feeder.profiles", {"loads", "irradiance", "power_factor"})
    paths = {}
    for key in ("loads", "irradiance"):
        if pr.get(key) is not None:
            p = Path(pr[key])
            p = p if p.is_absolute() else base_dir / p
            if not p.exists():
                raise ConfigError(f"feeder.profiles.{key}: {p} does not exist")
            paths[key] = p
    if len(paths) == 1:
        raise ConfigError("feeder.profiles needs both loads and irradiance, or neither")
    profiles = ProfilePaths(paths.get("loads"), paths.get("irradiance"),
                            _take(pr, "feeder.profiles", "power_factor", 0.95))
    feeder = {k: val for k, val in fe.items() if k != "profiles"}
    out = Path(doc.get("output_dir", "out"))
    return RunConfig(plant, search, feeder, profiles, out, seed, source)


def load_config(path_or_name):
    path = resolve(path_or_name)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse(doc or {}, path.parent, path)
