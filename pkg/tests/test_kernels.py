import os
import subprocess
import sys

import numpy as np
import pytest

from catm import _kernels_py, kernels

compiled = pytest.importorskip("catm._kernels")


@pytest.fixture
def arrays(rng):
    Q, n, N = 40, 5, 24
    M = rng.normal(size=(Q, n, n)) + 1j * rng.normal(size=(Q, n, n))
    M /= np.linalg.norm(M, axis=(1, 2), keepdims=True)
    R = rng.normal(size=(Q, n)) + 1j * rng.normal(size=(Q, n))
    H = rng.normal(size=(N, n, n)) + 1j * rng.normal(size=(N, n, n))
    X = rng.normal(size=(n, N)) + 1j * rng.normal(size=(n, N))
    return M, R, H, X


def test_transfer_product(arrays):
    M = arrays[0]
    ref = np.eye(M.shape[1])
    for m in M:
        ref = m @ ref
    assert np.allclose(compiled.transfer_product(M), ref, atol=1e-13)
    assert np.allclose(_kernels_py.transfer_product(M), ref, atol=1e-13)


def test_cn_sweep_with_store(arrays):
    M, R = arrays[:2]
    x0 = np.ones(M.shape[1], complex)
    s1, s2 = np.empty_like(R), np.empty_like(R)
    a = compiled.cn_sweep(M, R, x0, s1)
    b = _kernels_py.cn_sweep(M, R, x0, s2)
    assert np.allclose(a, b, atol=1e-13) and np.allclose(s1, s2, atol=1e-13)
    assert np.array_equal(s1[0], x0)
    assert np.allclose(compiled.cn_sweep(M, R, x0), a, atol=0)


def test_block_apply(arrays):
    H, X = arrays[2:]
    ref = np.einsum("tik,kt->it", H, X)
    assert np.allclose(compiled.block_apply(H, X), ref, atol=1e-13)
    assert np.allclose(_kernels_py.block_apply(H, X), ref, atol=1e-13)


def test_backend_selection():
    assert kernels.BACKEND == ("python" if os.environ.get("CATM_PURE_PYTHON") == "1" else "cython")
    out = subprocess.run([sys.executable, "-c", "import catm.kernels as k; print(k.BACKEND)"],
                         env=dict(os.environ, CATM_PURE_PYTHON="1"), capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
