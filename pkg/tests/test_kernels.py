import os
import subprocess
import sys

import numpy as np
import pytest

from hswlm import _kernels


def _random_pair(rng, n):
    t = rng.dirichlet(np.ones(n))
    b = rng.dirichlet(np.ones(n))
    b[rng.random(n) < 0.2] = 0.0
    return t, b


@pytest.mark.parametrize("seed", range(5))
def test_em_backends_agree(seed):
    rng = np.random.default_rng(seed)
    t, b = _random_pair(rng, 200)
    lam = rng.uniform(0.05, 0.95)
    a, na = _kernels.em_parsimonize_numpy(t, b, lam, 1e-10, 500)
    c, nc = _kernels.em_parsimonize_jit(t, b, lam, 1e-10, 500)
    assert na == nc
    np.testing.assert_allclose(a, c, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("k", [1, 2, 3, 7])
def test_combine_backends_agree_with_quadratic_sum(k):
    rows = np.random.default_rng(k).dirichlet(np.ones(40), size=k)
    direct = np.zeros(40)
    for i in range(k):
        term = rows[i].copy()
        for j in range(k):
            if j != i:
                term *= 1.0 - rows[j]
        direct += term
    np.testing.assert_allclose(_kernels.combine_rows_numpy(rows), direct, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(_kernels.combine_rows_jit(rows), direct, rtol=1e-12, atol=1e-300)


def test_combine_handles_probability_one():
    rows = np.array([[1.0, 0.0], [0.5, 0.5]])
    # t0: 1*(0.5) + 0.5*(1-1) = 0.5 ; t1: 0 + 0.5*1 = 0.5
    np.testing.assert_allclose(_kernels.combine_rows_numpy(rows), [0.5, 0.5])
    np.testing.assert_allclose(_kernels.combine_rows_jit(rows), [0.5, 0.5])


def test_l1_backends_agree():
    p, q = np.array([0.2, 0.8]), np.array([0.5, 0.5])
    assert _kernels.l1_numpy(p, q) == pytest.approx(0.6)
    assert _kernels.l1_jit(p, q) == pytest.approx(0.6)


def test_zero_tolerance_runs_all_iterations():
    t, b = np.array([0.5, 0.5]), np.array([0.9, 0.1])
    _, n = _kernels.em_parsimonize(t, b, 0.5, 0.0, 17)
    assert n == 17


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("", "numba" if _kernels.HAVE_NUMBA else "numpy")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, HSWLM_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from hswlm import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
