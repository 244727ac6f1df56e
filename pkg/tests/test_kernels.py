import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridfit import kernels
from gridfit.feeder import default_case, run_timeseries, solve_network, synthetic_profiles
from gridfit.partition import SearchConfig, evaluate_partition_count
from gridfit.plant import PlantParams

try:
    C = kernels.get("compiled")
except ImportError:  # pragma: no cover - depends on the build
    C = None
P = kernels.get("python")

needs_compiled = pytest.mark.skipif(C is None, reason="compiled kernels not built")
PRM = PlantParams()


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get("fortran")


@needs_compiled
@given(st.floats(0.5, 1.5))
def test_volt_var_equal(v):
    curve = PRM.curve.as_tuple()
    assert C.volt_var(v, curve) == P.volt_var(v, curve)


@needs_compiled
@given(st.lists(st.floats(0.85, 1.15), min_size=1, max_size=40), st.floats(0, 9), st.booleans())
def test_plant_run_equal(v, p, gsf):
    v = np.array(v)
    pa = np.full(len(v), p)
    x0 = np.array([1.0, 1.0, -2.0])
    a, fa = C.plant_run(x0, v, pa, 1e-3, 3, PRM.kernel_params(), PRM.curve.as_tuple(), gsf)
    b, fb = P.plant_run(x0, v, pa, 1e-3, 3, PRM.kernel_params(), PRM.curve.as_tuple(), gsf)
    np.testing.assert_allclose(np.asarray(a), b, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(np.asarray(fa), fb, rtol=1e-12, atol=1e-12)


@needs_compiled
def test_tf_run_equal():
    rng = np.random.default_rng(0)
    b = np.array([0.0, 0.3, 0.1])
    a = np.array([-0.9, 0.2])
    u = rng.normal(size=500)
    yh = np.array([0.5, 0.2])
    uh = np.array([0.1, -0.1])
    ya = C.tf_run(b, a, 0.2, -1.0, u, yh.copy(), uh.copy())
    yb = P.tf_run(b, a, 0.2, -1.0, u, yh.copy(), uh.copy())
    np.testing.assert_allclose(np.asarray(ya), yb, rtol=1e-12, atol=1e-12)


@pytest.fixture(scope="module")
def model():
    return evaluate_partition_count(6, SearchConfig(), PRM)[0]


@needs_compiled
@given(st.floats(0.8, 1.2))
def test_range_index_equal(v):
    hi = np.array([0.9, 1.0, 1.1])
    assert C.range_index(v, hi) == P.range_index(v, hi)


@needs_compiled
def test_partitioned_run_equal(model):
    pk = model.packed()
    rng = np.random.default_rng(1)
    v = np.clip(1.0 + np.cumsum(rng.normal(0, 0.01, 3000)), 0.85, 1.15)
    outs = []
    for mod in (C, P):
        yh, uh = model.initial_history(v[0])
        y = mod.partitioned_run(v, pk["hi"], pk["B"], pk["A"], pk["nord"], pk["mord"],
                                pk["uoff"], pk["yoff"], yh, uh)
        outs.append((np.asarray(y), yh, uh))
    np.testing.assert_allclose(outs[0][0], outs[1][0], rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(outs[0][1], outs[1][1], rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(outs[0][2], outs[1][2])


@pytest.mark.parametrize("binding", ["detailed", "partitioned"])
@pytest.mark.parametrize("mode", ["no_gsf", "volt_var"])
@needs_compiled
def test_feeder_run_equal(model, mode, binding):
    case = default_case(synthetic_profiles(1.0, 24.0).window(11 * 3600, 8))
    a = run_timeseries(case, mode, binding, model, backend="compiled")
    b = run_timeseries(case, mode, binding, model, backend="python")
    np.testing.assert_allclose(a.v, b.v, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(a.i_q, b.i_q, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(a.i_d, b.i_d, rtol=1e-9, atol=1e-9)
    np.testing.assert_array_equal(a.iters, b.iters)


def test_solver_backend_consistency():
    case = default_case(synthetic_profiles(1.0, 0.01))
    sol = solve_network(case, (np.full(12, 4.0), np.full(12, -1.0)))
    assert sol.sweeps >= 2
    assert kernels.BACKEND in ("compiled", "python")


def test_env_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, GRIDFIT_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import gridfit; print(gridfit.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
