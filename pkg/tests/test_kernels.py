import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact import kernels
from artifact.he.ckks import ntt


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 12))
def test_code_kernels_agree_bit_for_bit(seed, n_s, n_c):
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, n_c, (37, n_s))
    centers = rng.integers(0, n_c, (5, n_s))
    tables = rng.normal(size=(n_s, n_c, n_c))
    table = tables[:, 0, :]
    assert np.array_equal(kernels.adc_scores(codes, table, numba=True), kernels.adc_scores(codes, table, numba=False))
    assert np.array_equal(kernels.code_distances(codes, centers, tables, numba=True),
                          kernels.code_distances(codes, centers, tables, numba=False))
    a = kernels.nearest_centers(codes, centers, tables, numba=True)
    b = kernels.nearest_centers(codes, centers, tables, numba=False)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    labels = rng.integers(0, 4, 37)
    h1, c1 = kernels.vote(codes, labels, 4, tables, numba=True)
    h2, c2 = kernels.vote(codes, labels, 4, tables, numba=False)
    assert np.array_equal(h1, h2) and np.array_equal(c1, c2)


def test_nearest_prefers_lowest_index():
    tables = np.zeros((1, 2, 2))
    for flag in (True, False):
        idx, _ = kernels.nearest_centers(np.array([[0], [1]]), np.array([[0], [0], [1]]), tables, numba=flag)
        assert list(idx) == [0, 0]


@pytest.mark.parametrize("n", [8, 64, 1024])
def test_ntt_paths_agree(n):
    primes = ntt.find_primes(n, 31, 3)
    tables = ntt.NTTTables.build(primes, n)
    rng = np.random.default_rng(n)
    a = np.stack([rng.integers(0, q, n) for q in primes])
    f1, f2 = ntt.forward_numba(a, tables), ntt.forward_numpy(a, tables)
    assert np.array_equal(f1, f2)
    assert np.array_equal(ntt.inverse_numba(f1, tables), ntt.inverse_numpy(f1, tables))
    assert np.array_equal(ntt.inverse_numba(f1, tables), a)


def test_modular_helpers_agree():
    primes = np.array(ntt.find_primes(16, 31, 3), dtype=np.int64)
    rng = np.random.default_rng(0)
    q = primes[:, None]
    lifted = rng.integers(0, q, (2, 3, 16))
    key = rng.integers(0, q, (2, 2, 3, 16))
    assert np.array_equal(ntt._dot_digits_numba(lifted, key, primes), ntt._dot_digits_numpy(lifted, key, primes))
    x, y = rng.integers(0, q, (2, 3, 16)), rng.integers(0, q, (2, 3, 16))
    c = rng.integers(1, primes)
    assert np.array_equal(ntt._sub_mul_numba(x, y, c, primes), ntt._sub_mul_numpy(x, y, c, primes))
    want = np.array([[[(int(x[m, r, j]) - int(y[m, r, j])) * int(c[r]) % int(primes[r]) for j in range(16)]
                      for r in range(3)] for m in range(2)])
    assert np.array_equal(ntt.sub_mul(x, y, c, primes), want)


def test_env_flag_selects_numpy():
    code = "from artifact import _jit, kernels; print(_jit.USE_NUMBA, kernels.pick(1, 2))"
    for flag, want in (("0", "False 2"), ("1", "True 1")):
        out = subprocess.run([sys.executable, "-c", code], env={**os.environ, "ARTIFACT_NUMBA": flag},
                             capture_output=True, text=True, check=True).stdout.strip()
        assert out == want
