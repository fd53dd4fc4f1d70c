# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the sequential Crank-Nicolson sweeps and block products."""

import numpy as np
cimport cython
from scipy.linalg.cython_blas cimport zcopy, zgemm

ctypedef double complex cplx


def transfer_product(const cplx[:, :, ::1] M):
    """Ordered product M[Q-1] ... M[1] M[0]."""
    cdef int Q = M.shape[0], n = M.shape[1], nn = n * n, one = 1
    cdef int q
    cdef cplx alpha = 1.0, beta = 0.0
    P_arr = np.eye(n, dtype=np.complex128)
    T_arr = np.empty((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] P = P_arr
    cdef cplx[:, ::1] T = T_arr
    with nogil:
        # Row-major C = M P is column-major C^T = P^T M^T.
        for q in range(Q):
            zgemm("N", "N", &n, &n, &n, &alpha, &P[0, 0], &n, <cplx *> &M[q, 0, 0], &n, &beta, &T[0, 0], &n)
            zcopy(&nn, &T[0, 0], &one, &P[0, 0], &one)
    return P_arr


def cn_sweep(const cplx[:, :, ::1] M, const cplx[:, ::1] R, x0, store=None):
    """Run x <- M[q] x + R[q] for q = 0 .. Q-1.

    Arguments:
        M: (Q, n, n) step matrices.
        R: (Q, n) inhomogeneous terms.
        x0: (n,) start vector.
        store: optional (Q, n) array receiving x before each step.

    Returns:
        The final vector.
    """
    cdef Py_ssize_t Q = M.shape[0], n = M.shape[1]
    cdef Py_ssize_t q, i, k
    cdef cplx s
    x_arr = np.array(x0, dtype=np.complex128)
    y_arr = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] x = x_arr
    cdef cplx[::1] y = y_arr
    cdef cplx[:, ::1] X
    cdef bint keep = store is not None
    if keep:
        X = store
    with nogil:
        for q in range(Q):
            if keep:
                for i in range(n):
                    X[q, i] = x[i]
            for i in range(n):
                s = R[q, i]
                for k in range(n):
                    s = s + M[q, i, k] * x[k]
                y[i] = s
            for i in range(n):
                x[i] = y[i]
    return x_arr


def block_apply(const cplx[:, :, ::1] H, const cplx[:, ::1] X):
    """Y[:, t] = H[t] @ X[:, t] for (N, n, n) blocks and an (n, N) vector."""
    cdef Py_ssize_t N = H.shape[0], n = H.shape[1]
    cdef Py_ssize_t t, i, k
    cdef cplx s
    Y_arr = np.empty((n, N), dtype=np.complex128)
    cdef cplx[:, ::1] Y = Y_arr
    with nogil:
        for t in range(N):
            for i in range(n):
                s = 0
                for k in range(n):
                    s = s + H[t, i, k] * X[k, t]
                Y[i, t] = s
    return Y_arr
