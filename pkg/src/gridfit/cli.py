"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
import argparse
from dataclasses import replace
import logging
from pathlib import Path
import sys
import warnings

from . import bench, csvio, store
from .config import load_config
from .errors import ConfigError, GridFitError, LimitMismatchError
from .feeder import BINDINGS, MODES, run_timeseries
from .partition import (
    binary_search_partitions,
    fit_partitions,
    probe_plant,
    simulate_partitioned,
)
from .plant import OUTPUT_HEADER
from .signalgen import PartitionPlan, Signal
from .sysid import score

log = logging.getLogger("gridfit")


def _out_dir(args, cfg):
    out = Path(args.out) if args.out else cfg.output_dir
    if not out.exists():
        log.warning("output directory %s does not exist, creating it", out)
        out.mkdir(parents=True)
    return out


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed, search=replace(cfg.search, seed=args.seed))
    return cfg


def _load_model(args, cfg):
    if not args.model:
        raise ConfigError("--model is required for this command")
    stored = store.load(args.model)
    lo, hi = stored.model.v_limits
    want = cfg.search.v_limits
    if abs(lo - want[0]) > 1e-9 or abs(hi - want[1]) > 1e-9:
        raise LimitMismatchError(
            f"model covers [{lo}, {hi}] p.u., configuration expects [{want[0]}, {want[1]}] p.u."
        )
    return stored.model


def cmd_probe(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    n = args.partitions or cfg.search.n_max
    plan, u, y = probe_plant(n, cfg.search, cfg.plant)
    u.to_csv(out / "probe_input.csv")
    y.to_csv(out / "probe_response.csv", header=OUTPUT_HEADER)
    print(f"probe: {n} partitions, {u.timestamps[-1] + u.dt:g} s, "
          f"range [{u.values.min():.4f}, {u.values.max():.4f}] p.u. -> {out}")
    return 0


def cmd_fit(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    if args.data:
        data = Path(args.data)
        u = Signal.from_csv(data / "probe_input.csv")
        y = Signal.from_csv(data / "probe_response.csv")
        if len(u) != len(y):
            raise GridFitError("input and response files differ in length")
        n = args.partitions or cfg.search.n_max
        plan = PartitionPlan(cfg.search.v_limits[0], cfg.search.v_limits[1], n,
                             cfg.search.chirp.T)
        if len(u) != n * round(plan.dwell_time * u.sample_rate):
            raise ConfigError(f"data length {len(u)} does not match {n} partitions")
        model = fit_partitions(plan, u, y, cfg.search)
        prov = store.make_provenance(cfg.source, n_partitions=n, source="data")
    else:
        res = binary_search_partitions(cfg.search, cfg.plant, return_result=True)
        res.write_trace(out / "search_trace.csv")
        model = res.model
        prov = store.make_provenance(cfg.source, n_partitions=res.n, source="search")
    path = store.save(store.StoredModel(model, prov), out / "model.json")
    print(f"fit: {model.n_partitions} partitions, held-out fit {model.overall_fit:.4f}% -> {path}")
    return 0


def cmd_validate(args):
    cfg = _config(args)
    model = _load_model(args, cfg)
    out = _out_dir(args, cfg)
    if args.scenario == "chirp":
        plan, u, y = probe_plant(model.n_partitions, cfg.search, cfg.plant)
        y_hat = simulate_partitioned(model, u)
        rep = score(y.values, y_hat.values, 1)
        bench.write_overlay(out / "overlay_chirp.csv", u.timestamps, u.values, y.values,
                            y_hat.values)
        print(f"validate chirp: fit {rep.fit_percent:.4f}% "
              f"(stored held-out fit {model.overall_fit:.4f}%)")
    else:
        steps = bench.step_validation(model, cfg.plant, cfg.search.plant_dt,
                                      channel=cfg.search.channel)
        for k, s in enumerate(steps, start=1):
            bench.write_overlay(out / f"overlay_step{k}.csv", s["signal"].timestamps,
                                s["signal"].values, s["detailed"], s["partitioned"])
            lo, hi = s["levels"]
            print(f"step {k} {lo:.2f}->{hi:.2f} p.u.: NRMSE {s['nrmse_percent']:.3f}%, "
                  f"max jump {s['max_jump']:.4f} A of {s['amplitude']:.4f} A")
    return 0


def cmd_simulate(args):
    cfg = _config(args)
    model = _load_model(args, cfg) if args.binding == "partitioned" else None
    out = _out_dir(args, cfg)
    case = cfg.build_case(args.hours)
    res = run_timeseries(case, args.mode, args.binding, model)
    paths = res.write_csv(out)
    vh = res.v_houses
    print(f"simulate {args.mode}/{args.binding}: {len(res.time)} steps in {res.wall_time:.2f} s, "
          f"max house voltage {vh.max():.4f} p.u. -> {', '.join(p.name for p in paths)}")
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    case = cfg.build_case(hours=1.0 / 3600.0)
    loads, v = bench.run_load_sweep_report(case, out / "load_sweep.csv", steps=args.steps)
    print(f"sweep: {len(loads)} points -> {out / 'load_sweep.csv'}")
    return 0


def cmd_bench(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    if args.model:
        model = _load_model(args, cfg)
        single = bench.run_single_house_validation(
            cfg.search, cfg.plant, out,
            search=_FixedSearch(model),
        )
    else:
        single = bench.run_single_house_validation(cfg.search, cfg.plant, out)
        model = single.extra["search"].model
    case = cfg.build_case(args.hours)
    feeder = bench.run_feeder_comparison(case, model, repeats=args.repeats, out_dir=out)
    results = [single] + [feeder[m] for m in MODES]
    bench.write_results(out / "bench.csv", results)
    print(bench.summary_table(results))
    return 0


class _FixedSearch:
    """Stand-in search result wrapping an existing model."""

    def __init__(self, model):
        self.model = model
        self.n = model.n_partitions
        self.trace = []

    def write_trace(self, path):
        return csvio.write_columns(path, ("n", "overall_fit_percent", "wall_time_s"), [[], [], []])


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="paper_singlehouse",
                        help="YAML run configuration or bundled name (default: %(default)s)")
    common.add_argument("--out", help="output directory (default: from config)")
    common.add_argument("--seed", type=int, help="seed for the measurement-noise injector")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="gridfit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("probe", parents=[common], help="write probing signal and plant response")
    sp.add_argument("--partitions", type=int, help="number of partitions (default: search n_max)")
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("fit", parents=[common], help="search partition count and fit models")
    sp.add_argument("--data", help="directory with probe_input.csv/probe_response.csv to fit "
                                   "directly instead of searching")
    sp.add_argument("--partitions", type=int, help="partition count of --data")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("validate", parents=[common], help="replay a stored model against the plant")
    sp.add_argument("--model", required=True)
    sp.add_argument("--scenario", choices=("chirp", "steps"), default="steps")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("simulate", parents=[common], help="24-h feeder time series")
    sp.add_argument("--mode", choices=MODES, default="volt_var")
    sp.add_argument("--binding", choices=BINDINGS, default="detailed")
    sp.add_argument("--model")
    sp.add_argument("--hours", type=float)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", parents=[common], help="net-load sweep without controls")
    sp.add_argument("--steps", type=int, default=31)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bench", parents=[common], help="accuracy and speed comparison")
    sp.add_argument("--model")
    sp.add_argument("--hours", type=float)
    sp.add_argument("--repeats", type=int, default=3)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"gridfit: configuration error: {exc}", file=sys.stderr)
        return 2
    except (GridFitError, OSError) as exc:
        print(f"gridfit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
