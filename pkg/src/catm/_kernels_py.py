"""Pure numpy versions of the compiled kernels (same signatures)."""

import numpy as np


def transfer_product(M):
    """Ordered product M[Q-1] ... M[1] M[0]."""
    P = np.eye(M.shape[1], dtype=complex)
    for Mq in M:
        P = Mq @ P
    return P


def cn_sweep(M, R, x0, store=None):
    """Run x <- M[q] x + R[q] for q = 0 .. Q-1, optionally storing each x."""
    x = np.array(x0, dtype=complex)
    for q in range(M.shape[0]):
        if store is not None:
            store[q] = x
        x = M[q] @ x + R[q]
    return x


def block_apply(H, X):
    """Y[:, t] = H[t] @ X[:, t]."""
    return np.einsum("tik,kt->it", H, X)
