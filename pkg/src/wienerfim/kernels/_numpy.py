"""Pure-numpy kernels.

The state recursion is evaluated in blocks: inside a block the forced
response is a lower-triangular Toeplitz product, and only the block-boundary
states are propagated sequentially.
"""

import numpy as np

BLOCK = 64
CHUNK = 1 << 15


def _block_operators(A, b, B):
    d = A.shape[0]
    h = np.empty((B, d))
    powers = np.empty((B, d, d))
    h[0] = b
    P = A.copy()
    for k in range(B):
        if k:
            h[k] = A @ h[k - 1]
            P = A @ P
        powers[k] = P  # A^(k+1)
    # toeplitz[j, k*d + i] = h[k - j][i] for k >= j
    toeplitz = np.zeros((B, B, d))
    for j in range(B):
        toeplitz[j, j:] = h[: B - j]
    toeplitz = toeplitz.reshape(B, B * d)
    # free[j, k*d + i] = (A^(k+1))[i, j]
    free = powers.transpose(2, 0, 1).reshape(d, B * d)
    return toeplitz, free, powers[-1]


def state_recursion(A, b, u, x0):
    """States of ``x(t) = A x(t-1) + b u(t)`` for ``t = 0..N-1``; returns (X, x_last)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    d = A.shape[0]
    N = u.size
    if N == 0:
        return np.empty((0, d)), np.array(x0, dtype=np.float64)
    B = min(BLOCK, N)
    nb = -(-N // B)
    U = np.zeros(nb * B)
    U[:N] = u
    U = U.reshape(nb, B)
    toeplitz, free, AB = _block_operators(A, b, B)
    forced = (U @ toeplitz).reshape(nb, B, d)
    starts = np.empty((nb, d))
    x = np.array(x0, dtype=np.float64)
    for k in range(nb):
        starts[k] = x
        x = AB @ x + forced[k, -1]
    X = (starts @ free).reshape(nb, B, d) + forced
    X = X.reshape(nb * B, d)[:N]
    return X, X[-1].copy()


def score_outer(X, c, L1, alpha2):
    """Sums of ``v v^T``, ``x``, ``x x^T``, ``w``, ``w^2`` over the rows of ``X``."""
    m = L1.shape[0]
    d = X.shape[1]
    p = m + d
    S_vv = np.zeros((p, p))
    S_x = np.zeros(d)
    S_xx = np.zeros((d, d))
    S_w = 0.0
    S_ww = 0.0
    for start in range(0, X.shape[0], CHUNK):
        Xc = X[start:start + CHUNK]
        w = Xc @ c
        Z = np.vander(w, m + 1, increasing=True)
        V = np.hstack([Z @ L1.T, Xc * (Z @ alpha2)[:, None]])
        S_vv += V.T @ V
        S_x += Xc.sum(axis=0)
        S_xx += Xc.T @ Xc
        S_w += w.sum()
        S_ww += w @ w
    return S_vv, S_x, S_xx, S_w, S_ww


def simulate_accumulate(A, b, c, L1, alpha2, u, x0, skip):
    """Run the recursion over ``u`` and accumulate score moments after ``skip`` steps."""
    X, x_last = state_recursion(A, b, u, x0)
    return score_outer(X[skip:], c, L1, alpha2) + (x_last,)
