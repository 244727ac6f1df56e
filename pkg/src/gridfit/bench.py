"""Benchmark scenarios: single-house validation and feeder comparisons."""
from dataclasses import dataclass, field
import logging
from pathlib import Path
import statistics
import time

import numpy as np

from . import csvio
from .errors import UndefinedMetricError
from .feeder import HOUSE_NAMES, N_HOUSES, current_nrmse, load_sweep, run_timeseries
from .partition import binary_search_partitions, probe_plant, simulate_partitioned
from .plant import PlantParams, simulate_plant
from .signalgen import step_suite
from .sysid import score

log = logging.getLogger(__name__)

BENCH_HEADER = ("scenario", "nrmse_percent", "fit_percent", "wall_time_detailed_s",
                "wall_time_partitioned_s", "speedup")


@dataclass
class BenchResult:
    scenario: str
    nrmse_percent: float
    fit_percent: float
    wall_time_detailed: float
    wall_time_partitioned: float
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def speedup(self):
        return self.wall_time_detailed / self.wall_time_partitioned

    def row(self):
        return (self.scenario, self.nrmse_percent, self.fit_percent, self.wall_time_detailed,
                self.wall_time_partitioned, self.speedup)


def _timed(fn, repeats):
    times = []
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.median(times)


def step_validation(model, plant, dt=1e-3, hold=1.0, sample_rate=1000.0, channel="iq",
                    resolution=0.01):
    """Run the plant and the partitioned model on the five-region step suite.

    Each entry reports the step NRMSE (percent, ``nan`` when the plant does
    not move), the largest single-sample jump of the partitioned output, the
    plant's response amplitude and ``continuity_ratio``: the jump divided by
    the larger peak-to-peak excursion of the two traces, floored at
    ``resolution`` times the rated current so a step that stays inside the
    dead band is not judged against a zero amplitude.
    """
    floor = resolution * plant.current_limit(1.0)
    out = []
    for sig in step_suite(hold=hold, sample_rate=sample_rate):
        y = simulate_plant(sig, 0.0, plant, dt, channel=channel).values
        y_hat = simulate_partitioned(model, sig).values
        amp = float(np.ptp(y))
        try:
            nrmse = 100.0 * score(y, y_hat, 1).nrmse
        except UndefinedMetricError:
            nrmse = float("nan")
        jump = float(np.max(np.abs(np.diff(y_hat))))
        ref = max(amp, float(np.ptp(y_hat)), floor)
        out.append({
            "levels": (float(sig.values[0]), float(sig.values[-1])),
            "signal": sig,
            "detailed": y,
            "partitioned": y_hat,
            "nrmse_percent": nrmse,
            "max_jump": jump,
            "amplitude": amp,
            "continuity_ratio": jump / ref,
        })
    return out


def write_overlay(path, time_s, v, detailed, partitioned):
    return csvio.write_columns(path, ("time_s", "v_pu", "i_detailed_A", "i_partitioned_A"),
                               [time_s, v, detailed, partitioned])


def run_single_house_validation(cfg, plant=None, out_dir=None, search=None):
    """Probe, search, fit and replay on one inverter.

    ``fit_percent`` is the held-out fit of the selected model; the replay
    of the full probing record provides the NRMSE and the timings.
    ``search`` may carry a finished search result to skip the search.
    """
    plant = plant or PlantParams()
    if search is None:
        search = binary_search_partitions(cfg, plant, return_result=True)
    model = search.model
    plan, u, y = probe_plant(model.n_partitions, cfg, plant)
    y_det, t_det = _timed(lambda: simulate_plant(u, cfg.p_avail, plant, cfg.plant_dt,
                                                 channel=cfg.channel), 1)
    y_part, t_part = _timed(lambda: simulate_partitioned(model, u), 1)
    replay = score(y.values, y_part.values, 1)
    steps = step_validation(model, plant, cfg.plant_dt, channel=cfg.channel)
    res = BenchResult("single_house", 100.0 * replay.nrmse, model.overall_fit, t_det, t_part,
                      {"n_partitions": model.n_partitions, "replay_fit": replay.fit_percent,
                       "steps": steps, "search": search})
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_overlay(out_dir / "overlay_chirp.csv", u.timestamps, u.values, y.values, y_part.values)
        for k, s in enumerate(steps, start=1):
            write_overlay(out_dir / f"overlay_step{k}.csv", s["signal"].timestamps,
                          s["signal"].values, s["detailed"], s["partitioned"])
        search.write_trace(out_dir / "search_trace.csv")
    return res


def run_feeder_comparison(case, model, modes=("no_gsf", "volt_var"), repeats=3, steps=None,
                          out_dir=None):
    """Detailed against partitioned binding on the same feeder run.

    Timing is the median over ``repeats`` runs of the coupled loop only.
    NRMSE is per house on the current magnitude; the reported figure is
    the mean over houses.
    """
    results = {}
    for mode in modes:
        runs = {}
        for binding in ("detailed", "partitioned"):
            times = []
            for _ in range(max(1, repeats)):
                r = run_timeseries(case, mode, binding, model, steps=steps)
                times.append(r.wall_time)
            runs[binding] = (r, statistics.median(times))
        det, t_det = runs["detailed"]
        part, t_part = runs["partitioned"]
        per_house = current_nrmse(det.i_mag, part.i_mag)
        avg = float(np.mean(per_house))
        results[mode] = BenchResult(
            f"feeder_{mode}", avg, 100.0 - avg, t_det, max(t_part, 1e-9),
            {"per_house_nrmse": per_house, "detailed": det, "partitioned": part},
        )
        if out_dir is not None:
            det.write_csv(out_dir)
            part.write_csv(out_dir)
    return results


def run_load_sweep_report(case, path=None, p_range=(-75.0, 75.0), steps=31):
    """Sweep table: net load then one voltage column per house."""
    loads, v = load_sweep(case, p_range, steps)
    if path is not None:
        csvio.write_columns(path, ("net_load_kw",) + tuple(f"{n}_v_pu" for n in HOUSE_NAMES),
                            [loads] + [v[:, j] for j in range(N_HOUSES)])
    return loads, v


def write_results(path, results):
    rows = [r.row() for r in results]
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(BENCH_HEADER) + "\n")
        for row in rows:
            fh.write(row[0] + "," + ",".join(repr(float(x)) for x in row[1:]) + "\n")
    return path


def summary_table(results):
    lines = [f"{'scenario':<18}{'NRMSE %':>10}{'fit %':>10}{'detailed s':>12}"
             f"{'partitioned s':>15}{'speedup':>9}"]
    for r in results:
        lines.append(f"{r.scenario:<18}{r.nrmse_percent:>10.4f}{r.fit_percent:>10.4f}"
                     f"{r.wall_time_detailed:>12.3f}{r.wall_time_partitioned:>15.3f}"
                     f"{r.speedup:>9.2f}")
    return "\n".join(lines)
