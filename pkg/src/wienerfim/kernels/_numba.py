"""Numba kernels; same signatures and semantics as ``_numpy``."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def state_recursion(A, b, u, x0):
    d = A.shape[0]
    N = u.size
    X = np.empty((N, d))
    x = x0.copy()
    xn = np.empty(d)
    for t in range(N):
        for i in range(d):
            acc = b[i] * u[t]
            for j in range(d):
                acc += A[i, j] * x[j]
            xn[i] = acc
        for i in range(d):
            x[i] = xn[i]
            X[t, i] = xn[i]
    return X, x


ROWS = 2048


@njit(cache=True, nogil=True)
def _score_row(x, c, L1, alpha2, z, out):
    """Write the score for state ``x`` into ``out``; return ``w``."""
    d = x.size
    m = L1.shape[0]
    w = 0.0
    for i in range(d):
        w += c[i] * x[i]
    z[0] = 1.0
    for k in range(1, m + 1):
        z[k] = z[k - 1] * w
    slope = 0.0
    for k in range(m + 1):
        slope += alpha2[k] * z[k]
    for r in range(m):
        s = 0.0
        for k in range(m + 1):
            s += L1[r, k] * z[k]
        out[r] = s
    for i in range(d):
        out[m + i] = x[i] * slope
    return w


@njit(cache=True, nogil=True)
def _flush(V, Xb, rows, S_vv, S_xx):
    # block Gram products go through BLAS
    Vb = V[:rows]
    Xr = Xb[:rows]
    S_vv += np.dot(Vb.T, Vb)
    S_xx += np.dot(Xr.T, Xr)


@njit(cache=True, nogil=True)
def score_outer(X, c, L1, alpha2):
    m = L1.shape[0]
    d = X.shape[1]
    p = m + d
    S_vv = np.zeros((p, p))
    S_x = np.zeros(d)
    S_xx = np.zeros((d, d))
    S_w = 0.0
    S_ww = 0.0
    z = np.empty(m + 1)
    V = np.empty((ROWS, p))
    Xb = np.empty((ROWS, d))
    rows = 0
    for t in range(X.shape[0]):
        w = _score_row(X[t], c, L1, alpha2, z, V[rows])
        for i in range(d):
            Xb[rows, i] = X[t, i]
            S_x[i] += X[t, i]
        S_w += w
        S_ww += w * w
        rows += 1
        if rows == ROWS:
            _flush(V, Xb, rows, S_vv, S_xx)
            rows = 0
    if rows:
        _flush(V, Xb, rows, S_vv, S_xx)
    return S_vv, S_x, S_xx, S_w, S_ww


@njit(cache=True, nogil=True)
def simulate_accumulate(A, b, c, L1, alpha2, u, x0, skip):
    d = A.shape[0]
    m = L1.shape[0]
    p = m + d
    S_vv = np.zeros((p, p))
    S_x = np.zeros(d)
    S_xx = np.zeros((d, d))
    S_w = 0.0
    S_ww = 0.0
    z = np.empty(m + 1)
    V = np.empty((ROWS, p))
    Xb = np.empty((ROWS, d))
    rows = 0
    x = x0.copy()
    xn = np.empty(d)
    for t in range(u.size):
        for i in range(d):
            acc = b[i] * u[t]
            for j in range(d):
                acc += A[i, j] * x[j]
            xn[i] = acc
        for i in range(d):
            x[i] = xn[i]
        if t < skip:
            continue
        w = _score_row(x, c, L1, alpha2, z, V[rows])
        for i in range(d):
            Xb[rows, i] = x[i]
            S_x[i] += x[i]
        S_w += w
        S_ww += w * w
        rows += 1
        if rows == ROWS:
            _flush(V, Xb, rows, S_vv, S_xx)
            rows = 0
    if rows:
        _flush(V, Xb, rows, S_vv, S_xx)
    return S_vv, S_x, S_xx, S_w, S_ww, x
