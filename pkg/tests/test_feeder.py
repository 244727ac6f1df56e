from fractions import Fraction
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridfit.errors import (
    ConfigError,
    CoverageError,
    DivergenceError,
    DomainError,
    ParseError,
    ThresholdWarning,
)
from gridfit.feeder import (
    HOUSE_NAMES,
    N_HOUSES,
    N_TAPS,
    FeederCase,
    Profiles,
    TransformerModel,
    ZIP_STRATA,
    ZipLoad,
    backbone_span,
    current_nrmse,
    default_case,
    drop_line,
    ingest_profiles,
    load_sweep,
    pv_available_power,
    run_timeseries,
    solve_network,
    synthetic_hourly,
    synthetic_profiles,
    write_profile_csvs,
    zip_power,
)

ZERO = np.zeros(N_HOUSES)


def exact_zip(coefs, v):
    z, i, p = (Fraction(str(c)) for c in coefs)
    x = Fraction(str(v))
    return float(z * x * x + i * x + p)


@pytest.mark.parametrize("stratum", sorted(ZIP_STRATA))
def test_strata_sums(stratum):
    c = ZIP_STRATA[stratum]
    sp, sq = sum(c[:3]), sum(c[3:])
    # A (reactive) and F (active) are tabulated 0.01 off
    exact = {"A": (True, False), "F": (False, True)}.get(stratum, (True, True))
    assert (abs(sp - 1.0) < 1e-9) == exact[0]
    assert (abs(sq - 1.0) < 1e-9) == exact[1]
    assert abs(sp - 1.0) <= 0.0100001 and abs(sq - 1.0) <= 0.0100001
    load = ZipLoad.from_stratum(stratum, 2.0, 1.0)
    assert zip_power(load, 1.0) == pytest.approx((2.0 * sp, sq), abs=1e-12)


def test_zip_stratum_d_hand_values():
    load = ZipLoad.from_stratum("D", 1.0, 1.0)
    p, q = zip_power(load, 0.95)
    assert p == pytest.approx(0.969275, abs=1e-12)
    # 9.20*0.9025 - 15.27*0.95 + 7.07 evaluated in exact arithmetic
    assert q == pytest.approx(exact_zip(ZIP_STRATA["D"][3:], 0.95), abs=1e-12)
    assert q == pytest.approx(0.8665, abs=1e-12)


def test_zip_validation():
    with pytest.raises(DomainError):
        ZipLoad(zp=1.0, ip=1.0, pp=1.0)
    with pytest.raises(ConfigError):
        ZipLoad.from_stratum("Q")
    with pytest.raises(DomainError):
        zip_power(ZipLoad(), 0.0)


@given(st.sampled_from(sorted(ZIP_STRATA)), st.floats(0.5, 1.5), st.floats(0, 10))
def test_zip_is_quadratic(stratum, v, p0):
    load = ZipLoad.from_stratum(stratum, p0, p0)
    p, q = zip_power(load, v)
    assert p == pytest.approx(p0 * exact_zip(ZIP_STRATA[stratum][:3], v), abs=1e-9)
    assert q == pytest.approx(p0 * exact_zip(ZIP_STRATA[stratum][3:], v), abs=1e-9)


def test_pv_power():
    assert pv_available_power(1000.0) == pytest.approx(8.3935035, abs=1e-12)
    assert round(pv_available_power(1000.0), 4) == 8.3935
    assert round(pv_available_power(500.0), 4) == 4.1968
    assert pv_available_power(0.0) == 0.0
    with pytest.raises(DomainError):
        pv_available_power(-1.0)


def test_component_impedances():
    z = backbone_span(0.02).impedance(60.0)
    assert z.real == pytest.approx(0.346 * 0.02)
    assert z.imag == pytest.approx(2 * math.pi * 60 * 0.24e-3 * 0.02)
    assert drop_line(0.02).impedance().real == pytest.approx(0.549 * 0.02)
    assert TransformerModel().series_impedance() == complex(0.0264, 0.055)
    assert TransformerModel(include_primary_winding=True).series_impedance() == pytest.approx(
        complex(0.0864, 0.075))
    case = default_case(synthetic_profiles(1.0, 0.01))
    assert case.z_base == pytest.approx(0.768)
    assert case.i_base == pytest.approx(312.5)


@pytest.fixture(scope="module")
def case():
    return default_case(synthetic_profiles(1.0, 1.0))


def test_zero_injection_is_flat(case):
    sol = solve_network(case, (ZERO, ZERO))
    assert np.all(sol.v_mag == 1.02)
    assert sol.losses_kw == 0.0


def test_power_balance(case):
    rng = np.random.default_rng(0)
    p = rng.uniform(-6, 6, N_HOUSES)
    q = rng.uniform(-2, 2, N_HOUSES)
    loads = (rng.uniform(0, 2, N_HOUSES), rng.uniform(0, 0.6, N_HOUSES))
    sol = solve_network(case, (p, q), loads=loads)
    v = sol.houses
    drawn = np.array([zip_power(ZipLoad.from_stratum("D", a, b), x)
                      for a, b, x in zip(loads[0], loads[1], v)])
    assert sol.source_power_kva.real == pytest.approx(
        drawn[:, 0].sum() - p.sum() + sol.losses_kw, abs=1e-6)
    assert sol.losses_kw > 0


def test_generation_raises_far_end(case):
    sol = solve_network(case, (np.full(N_HOUSES, 5.0), ZERO))
    v = sol.houses
    pairs = v.reshape(N_TAPS, 2)
    assert np.all(pairs[:, 0] == pairs[:, 1])
    assert np.all(np.diff(pairs[:, 0]) > 0)
    assert np.all(v > 1.02)


def test_load_sweep_shape_symmetry_monotone(case):
    loads, v = load_sweep(case, steps=31)
    assert v.shape == (31, 12)
    assert loads[15] == 0.0 and np.all(v[15] == 1.02)
    for j in range(0, N_HOUSES, 2):
        np.testing.assert_array_equal(v[:, j], v[:, j + 1])
    assert np.all(np.diff(v, axis=0) < 0)
    assert np.all(v[0, 10:] > 1.058) and np.all(v[0, :4] < 1.058)


def test_divergence(case):
    with pytest.raises(DivergenceError):
        solve_network(case, (np.full(N_HOUSES, -5e4), ZERO))


def test_case_validation():
    with pytest.raises(ConfigError):
        FeederCase(houses=())
    with pytest.raises(ConfigError):
        FeederCase(source_v=0.0)


def test_synthetic_profiles():
    h, irr, loads = synthetic_hourly()
    # the continuous shape peaks at 930 W/m^2 between two hourly samples
    assert 920.0 < irr.max() <= 930.0
    assert irr[0] == 0.0 and irr[24] == pytest.approx(0.0, abs=1e-9)
    assert loads[:24].mean() == pytest.approx(0.33, rel=1e-3)
    prof = synthetic_profiles(1.0, 24.0)
    assert len(prof) == 86400
    assert prof.q[0, 0] == pytest.approx(prof.p[0, 0] * math.tan(math.acos(0.95)))


def _write(path, rows):
    path.write_text("\n".join(",".join(str(x) for x in r) for r in rows) + "\n")
    return path


def test_ingest_midpoint_and_pf(tmp_path):
    lp = _write(tmp_path / "l.csv", [["time_s"] + list(HOUSE_NAMES),
                                     [0] + [1.0] * 12, [3600] + [2.0] * 12])
    ip = _write(tmp_path / "i.csv", [["time_s", "irr"], [0, 0], [3600, 600]])
    prof = ingest_profiles(lp, ip, 1.0)
    assert len(prof) == 3601
    assert prof.irradiance[1800] == pytest.approx(300.0)
    assert prof.p[1800, 0] == pytest.approx(1.5)
    assert prof.q[1800, 0] == pytest.approx(1.5 * math.tan(math.acos(0.95)))


def test_ingest_clamps_negative(tmp_path):
    lp = _write(tmp_path / "l.csv", [["time_s"] + list(HOUSE_NAMES),
                                     [0] + [1.0] * 12, [10] + [1.0] * 12])
    ip = _write(tmp_path / "i.csv", [["time_s", "irr"], [0, -5], [10, 5]])
    with pytest.warns(UserWarning, match="negative"):
        prof = ingest_profiles(lp, ip, 1.0)
    assert prof.irradiance.min() == 0.0


def test_ingest_errors(tmp_path):
    lp = _write(tmp_path / "l.csv", [["time_s"] + list(HOUSE_NAMES),
                                     [0] + [1.0] * 12, [10] + ["x"] + [1.0] * 11])
    ip = _write(tmp_path / "i.csv", [["time_s", "irr"], [0, 0], [10, 5]])
    with pytest.raises(ParseError) as exc:
        ingest_profiles(lp, ip, 1.0)
    assert exc.value.line == 3
    lp = _write(tmp_path / "l2.csv", [["time_s"] + list(HOUSE_NAMES),
                                      [0] + [1.0] * 12, [10] + [1.0] * 12])
    with pytest.raises(CoverageError):
        ingest_profiles(lp, ip, 1.0, horizon=60.0)
    short = _write(tmp_path / "l3.csv", [["time_s", "a"], [0, 1], [10, 1]])
    with pytest.raises(CoverageError):
        ingest_profiles(short, ip, 1.0)


def test_profile_csv_round_trip(tmp_path):
    lp, ip = write_profile_csvs(tmp_path)
    prof = ingest_profiles(lp, ip, 1.0, horizon=7200.0)
    ref = synthetic_profiles(1.0, 2.0)
    np.testing.assert_allclose(prof.irradiance, ref.irradiance, rtol=1e-12)
    np.testing.assert_allclose(prof.p, ref.p, rtol=1e-12)


def test_profiles_window():
    prof = synthetic_profiles(1.0, 0.1)
    w = prof.window(10, 5)
    assert len(w) == 5 and w.t0 == 10.0
    with pytest.raises(CoverageError):
        prof.window(300, 100)
    with pytest.raises(ValueError):
        Profiles(1.0, np.zeros(3), np.zeros((3, 12)), np.zeros((2, 12)))


@pytest.fixture(scope="module")
def noon_case():
    prof = synthetic_profiles(1.0, 24.0).window(12 * 3600, 30)
    return default_case(prof)


def test_run_timeseries_detailed(noon_case, tmp_path):
    a = run_timeseries(noon_case, "no_gsf", "detailed")
    b = run_timeseries(noon_case, "volt_var", "detailed")
    assert a.v.shape == (30, N_TAPS + N_HOUSES) and a.i_q.shape == (30, 12)
    assert np.all(a.i_q == 0.0) and np.all(a.q == 0.0)
    assert np.all(a.iters <= 10)
    # the controls pull the far end down and absorb VArs
    assert b.v_houses[:, -1].max() < a.v_houses[:, -1].max()
    assert np.all(b.q[:, -1] < 0)
    paths = b.write_csv(tmp_path)
    assert [p.name for p in paths] == ["volt_var_detailed_voltages.csv",
                                       "volt_var_detailed_currents.csv",
                                       "volt_var_detailed_reactive.csv"]


def test_run_timeseries_validation(noon_case):
    with pytest.raises(ConfigError):
        run_timeseries(noon_case, "watt", "detailed")
    with pytest.raises(ConfigError):
        run_timeseries(noon_case, "no_gsf", "fast")
    with pytest.raises(ConfigError):
        run_timeseries(noon_case, "no_gsf", "partitioned")
    with pytest.raises(CoverageError):
        run_timeseries(noon_case, "no_gsf", "detailed", steps=31)


def test_threshold_warning():
    prof = synthetic_profiles(1.0, 0.002)
    case = default_case(prof, source_v=1.105)
    with pytest.warns(ThresholdWarning):
        run_timeseries(case, "no_gsf", "detailed")


def test_current_nrmse():
    a = np.column_stack([np.arange(10.0), np.ones(10)])
    assert np.all(current_nrmse(a, a) == 0.0)
    b = a.copy()
    b[:, 0] += 1.0
    r = current_nrmse(a, b)
    assert r[0] == pytest.approx(100 * math.sqrt(10) / math.sqrt(82.5))
    assert r[1] == 0.0
    b[:, 1] += 1.0
    assert math.isinf(current_nrmse(a, b)[1])


def test_partitioned_binding_tracks_detailed(noon_case):
    from gridfit.partition import SearchConfig, evaluate_partition_count
    model, _ = evaluate_partition_count(22, SearchConfig(), noon_case.plant)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ThresholdWarning)
        for mode in ("no_gsf", "volt_var"):
            det = run_timeseries(noon_case, mode, "detailed")
            part = run_timeseries(noon_case, mode, "partitioned", model)
            # quasi-static operation: both bindings settle on the same point
            np.testing.assert_allclose(part.v, det.v, atol=1e-4)
            np.testing.assert_allclose(part.i_mag, det.i_mag, rtol=1e-3, atol=1e-3)
