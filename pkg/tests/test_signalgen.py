import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridfit.errors import DomainError
from gridfit.signalgen import (
    ChirpSpec,
    PartitionPlan,
    Signal,
    chirp_frequency,
    chirp_phase,
    generate_probing_signal,
    generate_step_signal,
    partition_bounds,
    square_chirp_sample,
    step_suite,
)

SPEC = ChirpSpec(1.0, 32.0, 6.0, 0.0, 1000.0)
PLAN = PartitionPlan(0.88, 1.10, 22, 6.0)


def test_frequency_endpoints_and_midpoint():
    assert chirp_frequency(0.0, SPEC) == 1.0
    assert chirp_frequency(6.0, SPEC) == 32.0
    assert chirp_frequency(3.0, SPEC) == pytest.approx(math.sqrt(32.0), rel=1e-14)


def test_frequency_out_of_range():
    with pytest.raises(DomainError):
        chirp_frequency(-1e-9, SPEC)
    with pytest.raises(DomainError):
        chirp_frequency(6.1, SPEC)


@given(st.floats(0.1, 100), st.floats(0.1, 100), st.floats(0.1, 100))
def test_frequency_endpoints_exact(f0, f1, T):
    spec = ChirpSpec(f0, f1, T, 0.0, 2.5 * max(f0, f1))
    assert chirp_frequency(0.0, spec) == f0
    assert chirp_frequency(T, spec) == f1


def test_chirp_spec_invariants():
    with pytest.raises(DomainError):
        ChirpSpec(0.0, 32.0)
    with pytest.raises(DomainError):
        ChirpSpec(1.0, 32.0, T=0.0)
    with pytest.raises(DomainError):
        ChirpSpec(1.0, 32.0, sample_rate=64.0)
    ChirpSpec(32.0, 1.0)  # downward sweep is fine


def test_phase_matches_numeric_integral():
    # independent oracle: trapezoid integration of the instantaneous frequency
    t = np.linspace(0.0, 6.0, 600001)
    f = 1.0 * 32.0 ** (t / 6.0)
    num = 2 * np.pi * np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))))
    assert np.max(np.abs(chirp_phase(t, SPEC) - num)) < 1e-6


def test_first_sign_flip_at_quarter_cycle():
    t = np.linspace(0.0, 6.0, 600001)
    f = 32.0 ** (t / 6.0)
    num = 2 * np.pi * np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))))
    t_flip = np.interp(np.pi / 2, num, t)
    eps = 1e-6
    assert square_chirp_sample(t_flip - eps, SPEC, 0.88, 0.89) == 0.89
    assert square_chirp_sample(t_flip + eps, SPEC, 0.88, 0.89) == 0.88


def test_square_sample_two_levels():
    assert square_chirp_sample(0.0, SPEC, 0.88, 0.89) == 0.89
    vals = {square_chirp_sample(t, SPEC, 1.0 - 1e-9, 1.0) for t in np.linspace(0, 6, 997)}
    assert vals == {1.0 - 1e-9, 1.0}
    with pytest.raises(DomainError):
        square_chirp_sample(0.0, SPEC, 0.9, 0.9)


def test_partition_bounds():
    assert partition_bounds(0.0, PLAN) == pytest.approx((0.88, 0.89))
    assert partition_bounds(5.999, PLAN) == pytest.approx((0.88, 0.89))
    assert partition_bounds(126.0, PLAN) == pytest.approx((1.09, 1.10))
    assert partition_bounds(131.9, PLAN) == pytest.approx((1.09, 1.10))
    one = PartitionPlan(0.88, 1.10, 1, 6.0)
    assert partition_bounds(3.0, one) == (0.88, 1.10)
    with pytest.raises(DomainError):
        partition_bounds(132.0, PLAN)


def test_top_clamp():
    plan = PartitionPlan(0.0, 1.0, 3, 1.0)
    # rounding may push v2 a hair above v_max; the clamp pins it
    v1, v2 = plan.bounds(2)
    assert v2 <= 1.0 and v2 - v1 == pytest.approx(1 / 3)


@given(st.floats(0.5, 1.0), st.floats(0.01, 0.5), st.integers(1, 40))
def test_ranges_tile(lo, width, n):
    plan = PartitionPlan(lo, lo + width, n, 1.0)
    r = plan.ranges()
    assert r[0][0] == pytest.approx(lo)
    assert r[-1][1] == pytest.approx(lo + width)
    for (a, b), (c, d) in zip(r, r[1:]):
        assert b == pytest.approx(c, abs=1e-12)
        assert a < b


def test_probing_signal_shape_and_levels():
    sig = generate_probing_signal(PLAN, SPEC)
    assert len(sig) == 132000
    assert sig.timestamps[-1] + sig.dt == pytest.approx(132.0)
    assert sig.values.min() >= 0.88 - 1e-12 and sig.values.max() <= 1.10 + 1e-12
    spp = 6000
    for k in range(22):
        seg = sig.values[k * spp:(k + 1) * spp]
        v1, v2 = PLAN.bounds(k)
        assert set(np.unique(seg)) <= {v1, v2}
        # the sweep restarts at every partition
        assert seg[0] == v2


def test_probing_level_histogram():
    sig = generate_probing_signal(PLAN, SPEC)
    spp = 6000
    for k in range(22):
        v1, v2 = PLAN.bounds(k)
        seg = sig.values[k * spp:(k + 1) * spp]
        assert np.sum((seg == v1) | (seg == v2)) == spp


def test_degenerate_chirp_is_square_wave():
    spec = ChirpSpec(2.0, 2.0, 6.0, 0.0, 1000.0)
    sig = generate_probing_signal(PartitionPlan(0.9, 1.1, 1, 6.0), spec)
    c = np.cos(2 * np.pi * 2.0 * np.arange(6000) / 1000.0)
    # exact zero crossings fall either way under rounding
    keep = np.abs(c) > 1e-9
    expect = np.where(c >= 0, 1.1, 0.9)
    np.testing.assert_array_equal(sig.values[keep], expect[keep])


def test_probing_requires_matching_dwell():
    with pytest.raises(DomainError):
        generate_probing_signal(PartitionPlan(0.88, 1.1, 2, 5.0), SPEC)


def test_deterministic():
    a = generate_probing_signal(PLAN, SPEC)
    b = generate_probing_signal(PLAN, SPEC)
    assert a == b
    assert a.values.tobytes() == b.values.tobytes()


def test_signal_immutable():
    sig = generate_step_signal([(0.88, 1.0), (0.92, 1.0)], 1000.0)
    with pytest.raises(ValueError):
        sig.values[0] = 1.0


def test_step_signal():
    sig = generate_step_signal([(0.88, 1.0), (0.92, 1.0)], 1000.0)
    assert len(sig) == 2000
    assert np.all(sig.values[:1000] == 0.88) and np.all(sig.values[1000:] == 0.92)
    flat = generate_step_signal([(0.98, 2.0), (0.98, 2.0)], 100.0)
    assert np.all(flat.values == 0.98)
    with pytest.raises(DomainError):
        generate_step_signal([], 1000.0)
    with pytest.raises(DomainError):
        generate_step_signal([(1.0, 0.0), (1.0, 1.0)], 1000.0)


def test_five_region_steps():
    levels = [(0.88, 1.0), (0.92, 1.0), (0.98, 1.0), (1.02, 1.0), (1.08, 1.0), (1.10, 1.0)]
    sig = generate_step_signal(levels, 1000.0)
    jumps = np.flatnonzero(np.diff(sig.values)) + 1
    np.testing.assert_array_equal(jumps, [1000, 2000, 3000, 4000, 5000])
    suite = step_suite()
    assert [(s.values[0], s.values[-1]) for s in suite] == [
        (0.88, 0.92), (0.92, 0.98), (0.98, 1.02), (1.02, 1.08), (1.08, 1.10)]


def test_signal_validation():
    with pytest.raises(ValueError):
        Signal([0, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        Signal([0, 1, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        Signal([0, 1], [1, 2, 3])


def test_csv_round_trip(tmp_path):
    sig = generate_probing_signal(PartitionPlan(0.88, 1.1, 2, 6.0), SPEC)
    p = sig.to_csv(tmp_path / "s.csv")
    assert p.read_text().splitlines()[0] == "time_s,value_pu"
    assert Signal.from_csv(p) == sig
