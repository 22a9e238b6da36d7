"""The numba kernels and their numpy twins must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from edmlab import _accel, boltzmann, kernels

pytestmark = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not installed")


def test_numba_is_active_by_default():
    if os.environ.get("EDMLAB_DISABLE_NUMBA"):
        pytest.skip("numba disabled by environment")
    assert _accel.USE_NUMBA
    assert kernels.async_sweep is kernels._sweep_numba


def test_env_flag_selects_numpy():
    code = "import edmlab.kernels as k; print(k.async_sweep is k._sweep_numpy, k.jacobi_eigh is k._jacobi_numpy)"
    env = dict(os.environ, EDMLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["True", "True"]


def test_jacobi_parity():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((12, 12))
    A = A + A.T
    v1, V1, s1 = kernels._jacobi_numba(A, 1e-14, 100)
    v2, V2, s2 = kernels._jacobi_numpy(A, 1e-14, 100)
    assert s1 == s2
    np.testing.assert_allclose(v1, v2, atol=1e-12)
    np.testing.assert_allclose(V1, V2, atol=1e-10)


@pytest.mark.parametrize("mode,n", [(kernels.SWEEP_POWER, 2), (kernels.SWEEP_POWER, 3), (kernels.SWEEP_POWER_EXACT, 3), (kernels.SWEEP_EXP, 0)])
def test_sweep_parity(mode, n):
    rng = np.random.default_rng(1)
    for _ in range(20):
        xi = np.where(rng.random((15, 40)) < 0.5, -1.0, 1.0)
        s0 = np.where(rng.random(40) < 0.5, -1.0, 1.0)
        order = rng.permutation(40).astype(np.int64)
        a, b = s0.copy(), s0.copy()
        fa = kernels._sweep_numba(xi, a, order, mode, n)
        fb = kernels._sweep_numpy(xi, b, order, mode, n)
        assert fa == fb
        np.testing.assert_array_equal(a, b)


def test_em_chain_parity():
    rng = np.random.default_rng(2)
    noise = rng.standard_normal((5000, 2))
    x0 = np.array([0.3, -0.2])
    a, fa = kernels._em_chain_numba(boltzmann._double_well_grad, x0, noise, 1e-3, 0.05, 100, 7)
    b, fb = kernels._em_chain_numpy(boltzmann._double_well_grad.py_func, x0, noise, 1e-3, 0.05, 100, 7)
    assert fa == fb == -1
    assert a.shape == b.shape == ((5000 - 100 + 6) // 7, 2)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_em_chain_divergence_reported():
    noise = np.zeros((100, 1))
    grow = lambda x: -10.0 * x
    out, fail = kernels._em_chain_numpy(grow, np.array([1.0]), noise, 1.0, 0.0, 0, 1)
    assert fail > 0 and out.shape[0] == fail - 1


def test_oja_parity():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((3000, 4)) * [2.0, 1.0, 0.5, 0.3]
    w0 = rng.standard_normal(4)
    a, fa = kernels._oja_numba(X, w0, 0.01, 1e6)
    b, fb = kernels._oja_numpy(X, w0, 0.01, 1e6)
    assert fa == fb == -1
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_oim_relax_parity():
    rng = np.random.default_rng(4)
    W = -(rng.random((8, 8)) < 0.5).astype(float)
    W = np.triu(W, 1)
    W = W + W.T
    phi0 = rng.uniform(0, 2 * np.pi, 8)
    kap = np.linspace(0, 1, 400)
    a, ra = kernels._oim_relax_numba(W, phi0, kap, 0.05)
    b, rb = kernels._oim_relax_numpy(W, phi0, kap, 0.05)
    np.testing.assert_allclose(a, b, atol=1e-9)
    assert ra == pytest.approx(rb, abs=1e-9)
