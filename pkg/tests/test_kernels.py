import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from ssrc import _kernels
from ssrc._accel import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def esn_case(L, T, seed):
    rng = np.random.default_rng(seed)
    A = sparse.random(L, L, density=0.1, random_state=seed, format="csr")
    A.data = A.data * 2 - 1
    rho = np.max(np.abs(np.linalg.eigvals(A.toarray())))
    if rho > 0:  # contracting, so rounding differences do not grow
        A = A * (0.9 / rho)
    A.sort_indices()
    return (A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data, rng.uniform(-1, 1, L),
            rng.standard_normal(T), 0.4, rng.uniform(-0.5, 0.5, L))


@needs_numba
@pytest.mark.parametrize("L", [1, 17, 300])
def test_esn_variants_agree(L):
    args = esn_case(L, 400, L)
    np.testing.assert_allclose(_kernels.esn_states_numba(*args), _kernels.esn_states_numpy(*args),
                               rtol=0, atol=1e-12)


@needs_numba
def test_dispatch_by_size():
    for L in (10, _kernels.NUMBA_MAX_NODES + 1):
        args = esn_case(L, 50, 3)
        np.testing.assert_allclose(_kernels._esn_states_dispatch(*args), _kernels.esn_states_numpy(*args),
                                   atol=1e-12)


@needs_numba
def test_lorenz_variants_agree():
    args = (np.array([1.0, 1.0, 1.0]), 10.0, 28.0, 8.0 / 3.0, 0.005, 400)
    np.testing.assert_allclose(_kernels.lorenz_rk4_numba(*args), _kernels.lorenz_rk4_numpy(*args),
                               rtol=1e-12, atol=1e-12)


@needs_numba
@settings(max_examples=40)
@given(n=st.integers(1, 200), window=st.sampled_from([3, 5, 7, 11]), seed=st.integers(0, 10 ** 6))
def test_median_variants_agree(n, window, seed):
    x = np.random.default_rng(seed).integers(-5, 5, n).astype(float)  # ties on purpose
    padded = np.pad(x, window // 2, mode="edge")
    np.testing.assert_array_equal(_kernels.sliding_median_numba(padded, window),
                                  _kernels.sliding_median_numpy(padded, window))


@pytest.mark.parametrize("flag,expect", [("1", "False"), ("", str(HAVE_NUMBA))])
def test_env_flag_selects_backend(flag, expect):
    code = ("from ssrc import _kernels, _accel; "
            "print(_accel.USE_NUMBA, _kernels.lorenz_rk4 is _kernels.lorenz_rk4_numpy)")
    env = {**os.environ, "SSRC_DISABLE_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    use, is_numpy = out.stdout.split()
    assert use == expect
    assert is_numpy == str(expect == "False")


def test_pipeline_same_under_both_backends():
    code = ("import numpy as np; from ssrc.core import split_series; from ssrc.reservoir import EsnParams; "
            "from ssrc.separation import ssrc_separate; "
            "x = np.sin(np.arange(900) * 0.3) + 0.1 * np.random.default_rng(0).standard_normal(900); "
            "r = ssrc_separate(x, EsnParams(size=40), split_series(x, 200)); "
            "print(repr(r.validation_error))")
    vals = []
    for flag in ("1", "0"):
        env = {**os.environ, "SSRC_DISABLE_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert vals[0] == pytest.approx(vals[1], rel=1e-10)
