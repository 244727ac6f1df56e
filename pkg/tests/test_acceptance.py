"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal
summary.  The 24-h feeder runs are shared through session fixtures.
"""
import math
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from gridfit.bench import run_feeder_comparison, step_validation
from gridfit.config import load_config
from gridfit.errors import SearchWarning, ThresholdWarning
from gridfit.feeder import N_HOUSES, ZIP_STRATA, ZipLoad, load_sweep, solve_network, zip_power
from gridfit.partition import binary_search_partitions, max_evaluations
from gridfit.plant import PlantParams, q_reference, volt_var_q
from gridfit.signalgen import ChirpSpec, PartitionPlan, generate_probing_signal
from gridfit.sysid import Dataset, fit_arx, score

pytestmark = pytest.mark.slow


def record(k, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k:>2}: {title}: {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return ok


@pytest.fixture(scope="session")
def single_search():
    cfg = load_config("paper_singlehouse")
    t0 = time.perf_counter()
    res = binary_search_partitions(cfg.search, cfg.plant, return_result=True)
    return cfg, res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def feeder_runs():
    cfg = load_config("paper_feeder12")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SearchWarning)
        res = binary_search_partitions(cfg.search, cfg.plant, return_result=True)
    case = cfg.build_case()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ThresholdWarning)
        runs = run_feeder_comparison(case, res.model, repeats=1)
    return res, runs


def test_c01_identification_accuracy(single_search):
    cfg, res, wall = single_search
    fit = res.model.overall_fit
    ok = fit >= 95.0 and wall < 300.0
    record(1, "identification accuracy", ok,
           f"N*={res.n}, held-out fit {fit:.3f}% (target 97, accept >= 95), "
           f"search {wall:.1f} s (< 300 s)")
    assert ok


def test_c02_binary_search_oracle():
    rng = np.random.default_rng(20240601)
    cfg_kw = dict(n_min=1, n_max=22, fit_req=97.0)
    from gridfit.partition import SearchConfig
    cfg = SearchConfig(**cfg_kw)
    bound = 2 + math.ceil(math.log2(21))
    agree = 0
    worst_calls = 0
    for _ in range(50):
        # non-decreasing, with plateaus, from below 95 to above the requirement
        steps = rng.uniform(0.0, 1.0, 21) * (rng.random(21) > 0.3)
        raw = np.concatenate(([0.0], np.cumsum(steps)))
        if raw[-1] == 0:
            raw[-1] = 1.0
        lo, hi = rng.uniform(60.0, 95.0), rng.uniform(97.0, 100.0)
        fits = lo + (hi - lo) * raw / raw[-1]
        calls = []

        def ev(n, fits=fits, calls=calls):
            calls.append(n)
            return None, float(fits[n - 1])

        n_star, _ = binary_search_partitions(cfg, evaluate=ev)
        oracle = min(n for n in range(1, 23) if fits[n - 1] >= cfg.fit_req)
        agree += n_star == oracle and len(calls) <= bound
        worst_calls = max(worst_calls, len(calls))
    ok = agree == 50 and worst_calls <= max_evaluations(1, 22) == bound
    record(2, "binary-search oracle equivalence", ok,
           f"{agree}/50 agree with exhaustive scan, max {worst_calls} evaluations (bound {bound})")
    assert ok


def _simulate(b, a, u):
    y = np.zeros(len(u))
    for k in range(len(u)):
        acc = 0.0
        for j, bj in enumerate(b):
            if k - j >= 0:
                acc += bj * u[k - j]
        for i, ai in enumerate(a):
            if k - i - 1 >= 0:
                acc -= ai * y[k - i - 1]
        y[k] = acc
    return y


def test_c03_synthetic_recovery():
    rng = np.random.default_rng(7)
    spec = ChirpSpec(1.0, 32.0, 6.0, 0.0, 100.0)
    u = generate_probing_signal(PartitionPlan(-1.0, 1.0, 1, 6.0), spec).values
    worst_err = 0.0
    worst_time = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(0, n + 1))
        r = rng.uniform(0.2, 0.9, n)
        if n >= 2 and rng.random() < 0.5:
            ang = rng.uniform(0.1, 3.0)
            poles = [r[0] * np.exp(1j * ang), r[0] * np.exp(-1j * ang)] + list(r[2:])
        else:
            poles = list(r * rng.choice([-1.0, 1.0], n))
        a = np.real(np.poly(poles))[1:]
        b = rng.uniform(-1.0, 1.0, m + 1)
        y = _simulate(b, a, u)
        t0 = time.perf_counter()
        tf = fit_arx(Dataset(u, y, 1.0 / spec.sample_rate), n, m)
        worst_time = max(worst_time, time.perf_counter() - t0)
        theta = np.r_[a, b]
        err = np.linalg.norm(np.r_[tf.a, tf.b] - theta) / np.linalg.norm(theta)
        worst_err = max(worst_err, err)
    ok = worst_err < 1e-6 and worst_time < 1.0
    record(3, "synthetic recovery", ok,
           f"20 systems, worst relative error {worst_err:.2e} (< 1e-6), "
           f"slowest fit {worst_time * 1e3:.1f} ms (< 1 s)")
    assert ok


def test_c04_metric_identities():
    rng = np.random.default_rng(11)
    bad = 0
    for _ in range(1000):
        N = int(rng.integers(5, 400))
        y = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 10), N)
        perfect = score(y, y.copy(), 1)
        mean = score(y, np.full(N, y.mean()), 1)
        bad += perfect.fit_percent != 100.0 or abs(mean.fit_percent) > 1e-9
    hand = score(np.array([0.0, 0.0, 0.0, 0.0, 5.0]), np.array([0.0, 0.0, 0.0, 0.0, 3.0]), 1)
    hand_err = abs(hand.nrmse - 1 / math.sqrt(5))
    ok = bad == 0 and hand_err <= 1e-12
    record(4, "metric identities", ok,
           f"1000 random series, {bad} violations; hand case |nrmse - 1/sqrt(5)| = {hand_err:.1e}")
    assert ok


def test_c05_volt_var_curve():
    curve = PlantParams().curve
    gaps = [abs(volt_var_q(np.nextafter(bp, 0.0), curve) - volt_var_q(bp, curve))
            for bp in (curve.v1, curve.v2, curve.v3, curve.v4)]
    mid = volt_var_q(0.95, curve)
    rng = np.random.default_rng(5)
    mism = 0
    for _ in range(1000):
        s = rng.uniform(0.5, 20.0)
        p = rng.uniform(-s, s)
        q = rng.uniform(-2 * s, 2 * s)
        direct = np.sign(q) * min(abs(q), math.sqrt(s ** 2 - p ** 2))
        mism += q_reference(q, p, s) != direct
    ok = max(gaps) <= 1e-12 and abs(mid - 3.125) <= 1e-12 and mism == 0
    record(5, "volt-var curve", ok,
           f"largest breakpoint gap {max(gaps):.1e}, q(0.95) = {mid!r} kVAr, "
           f"{mism}/1000 cap mismatches")
    assert ok


@pytest.mark.xfail(strict=True, reason="tabulated strata A and F miss unit row sums by 0.01; "
                                       "the stated reactive value 0.86655 disagrees with its "
                                       "own expression, which evaluates to 0.8665")
def test_c06_zip():
    off = {k: (abs(sum(c[:3]) - 1), abs(sum(c[3:]) - 1)) for k, c in ZIP_STRATA.items()}
    failing = sorted(k for k, (a, b) in off.items() if max(a, b) > 1e-9)
    p, q = zip_power(ZipLoad.from_stratum("D", 1.0, 1.0), 0.95)
    ok_p = abs(p - 0.969275) <= 1e-12
    ok_q = abs(q - 0.86655) <= 1e-12
    ok = not failing and ok_p and ok_q
    record(6, "ZIP coefficients", ok,
           f"row sums off by > 1e-9 in strata {failing or 'none'}; "
           f"P(0.95) = {p:.6f} (0.969275: {'ok' if ok_p else 'no'}), "
           f"Q(0.95) = {q:.6f} (0.86655: {'ok' if ok_q else 'no'})")
    assert ok


def test_c07_feeder_statics():
    case = load_config("paper_feeder12").build_case(hours=0.01)
    zero = np.zeros(N_HOUSES)
    flat = solve_network(case, (zero, zero)).v_mag
    loads, v = load_sweep(case, (-75.0, 75.0), 31)
    sym = all(np.array_equal(v[:, j], v[:, j + 1]) for j in range(0, N_HOUSES, 2))
    mono = bool(np.all(np.diff(v, axis=0) < 0))
    gen = v[0]
    far = bool(np.all(gen[10:] > 1.058))
    near = bool(np.all(gen[:4] < 1.058))
    ok = bool(np.all(flat == 1.02)) and sym and mono and far and near
    record(7, "feeder statics", ok,
           f"zero injection exact 1.02: {bool(np.all(flat == 1.02))}, symmetry {sym}, "
           f"monotone {mono}; at -75 kW H11/12 {gen[10]:.4f}, H1-H4 max {gen[:4].max():.4f} "
           f"(threshold 1.058)")
    assert ok


def test_c08_volt_var_effect(feeder_runs):
    _, runs = feeder_runs
    base = runs["no_gsf"].extra["detailed"]
    vv = runs["volt_var"].extra["detailed"]
    m0 = base.v_houses[:, 10:12].max()
    m1 = vv.v_houses[:, 10:12].max()
    drop = m0 - m1
    walls = (runs["no_gsf"].wall_time_detailed, runs["volt_var"].wall_time_detailed)
    ok = 0.015 <= drop <= 0.03 and max(walls) < 600.0
    record(8, "24-h volt-var effect", ok,
           f"H11/12 max {m0:.4f} -> {m1:.4f} p.u., reduction {drop:.4f} (0.015-0.03); "
           f"detailed runs {walls[0]:.0f} s / {walls[1]:.0f} s (< 600 s)")
    assert ok


def test_c09_feeder_nrmse(feeder_runs):
    res, runs = feeder_runs
    a = runs["no_gsf"].nrmse_percent
    b = runs["volt_var"].nrmse_percent
    ok = a <= 3.0 and b <= 5.0
    record(9, "partitioned-vs-detailed NRMSE", ok,
           f"N*={res.n}: no GSF {a:.3f}% (<= 3), volt-var {b:.3f}% (<= 5)")
    assert ok


def test_c10_speedup(feeder_runs):
    _, runs = feeder_runs
    sp = {m: r.speedup for m, r in runs.items()}
    ok = sp["volt_var"] >= 2.0
    r = runs["volt_var"]
    record(10, "speedup", ok,
           f"volt-var {r.wall_time_detailed:.1f} s / {r.wall_time_partitioned:.1f} s = "
           f"{sp['volt_var']:.2f}x (>= 2); no GSF {sp['no_gsf']:.2f}x")
    assert ok


def test_c11_switching_continuity(single_search):
    cfg, res, _ = single_search
    steps = step_validation(res.model, cfg.plant, cfg.search.plant_dt,
                            channel=cfg.search.channel)
    ratios = [s["continuity_ratio"] for s in steps]
    ok = max(ratios) <= 0.1
    record(11, "switching continuity", ok,
           f"largest single-sample jump / response amplitude over 5 steps = {max(ratios):.4f} "
           f"(<= 0.10)")
    assert ok
