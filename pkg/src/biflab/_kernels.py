"""Compiled inner loops for the preimage-tree estimator."""

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old; the portable layer avoids a warning at first use
config.THREADING_LAYER = "workqueue"

ZERO_TOL = 1e-14


@njit(cache=True)
def _horner(c, t):
    acc = 0j
    for i in range(len(c) - 1, -1, -1):
        acc = acc * t + c[i]
    return acc


@njit(cache=True)
def _hom(c, x, y):
    n = len(c) - 1
    if abs(x) <= abs(y):
        t = x / y
        return _horner(c, t) * y ** n
    t = y / x
    acc = 0j
    for i in range(n + 1):
        acc = acc * t + c[i]
    return acc * x ** n


@njit(cache=True)
def _roots_one(h, rx, ry):
    """Roots of one binary form into rx, ry (unit vectors)."""
    n = len(h) - 1
    scale = 0.0
    for i in range(n + 1):
        scale = max(scale, abs(h[i]))
    a = 0
    while a < n and abs(h[a]) <= ZERO_TOL * scale:
        a += 1
    b = 0
    while b < n - a and abs(h[n - b]) <= ZERO_TOL * scale:
        b += 1
    k = 0
    for _ in range(a):
        rx[k] = 0j
        ry[k] = 1 + 0j
        k += 1
    for _ in range(b):
        rx[k] = 1 + 0j
        ry[k] = 0j
        k += 1
    r = n - a - b
    if r == 0:
        return
    mid = h[a:n - b + 1].copy()
    flip = abs(mid[r]) < abs(mid[0])
    if flip:
        mid = mid[::-1].copy()
    if r == 1:
        ts = np.empty(1, np.complex128)
        ts[0] = -mid[0] / mid[1]
    elif r == 2:
        A, B, C = mid[2], mid[1], mid[0]
        disc = np.sqrt(B * B - 4 * A * C)
        if (np.conj(B) * disc).real < 0:
            disc = -disc
        s = -0.5 * (B + disc)
        if s == 0:
            s = 1e-300
        ts = np.empty(2, np.complex128)
        ts[0] = s / A
        ts[1] = C / s
    else:
        M = np.zeros((r, r), np.complex128)
        for i in range(1, r):
            M[i, i - 1] = 1
        for i in range(r):
            M[i, r - 1] = -mid[i] / mid[r]
        ts = np.linalg.eigvals(M)
        # one Newton step on the chart polynomial
        for i in range(r):
            t = ts[i]
            f = _horner(mid, t)
            fp = 0j
            for j in range(r, 0, -1):
                fp = fp * t + j * mid[j]
            if fp != 0:
                tn = t - f / fp
                if abs(_horner(mid, tn)) <= abs(f):
                    ts[i] = tn
    for i in range(r):
        t = ts[i]
        if flip:
            x, y = 1 + 0j, t
        else:
            x, y = t, 1 + 0j
        nrm = np.sqrt(abs(x) ** 2 + abs(y) ** 2)
        rx[k] = x / nrm
        ry[k] = y / nrm
        k += 1


@njit(cache=True)
def _logder(p, q, px, py, qx, qy, x, y):
    d = len(p) - 1
    det = _hom(px, x, y) * _hom(qy, x, y) - _hom(py, x, y) * _hom(qx, x, y)
    A = _hom(p, x, y)
    B = _hom(q, x, y)
    return (np.log(abs(det)) - np.log(d) + np.log(abs(x) ** 2 + abs(y) ** 2)
            - np.log(abs(A) ** 2 + abs(B) ** 2))


@njit(cache=True)
def _tree_one(p, q, depth, x0, y0):
    d = len(p) - 1
    px = np.empty(d, np.complex128)
    py = np.empty(d, np.complex128)
    qx = np.empty(d, np.complex128)
    qy = np.empty(d, np.complex128)
    for i in range(d):
        px[i] = (i + 1) * p[i + 1]
        qx[i] = (i + 1) * q[i + 1]
        py[i] = (d - i) * p[i]
        qy[i] = (d - i) * q[i]
    size = depth * d + 2
    sx = np.empty(size, np.complex128)
    sy = np.empty(size, np.complex128)
    sl = np.empty(size, np.int64)
    sx[0] = x0
    sy[0] = y0
    sl[0] = 0
    top = 1
    h = np.empty(d + 1, np.complex128)
    rx = np.empty(d, np.complex128)
    ry = np.empty(d, np.complex128)
    s1 = 0.0
    s2 = 0.0
    cnt = 0
    bad = 0
    while top > 0:
        top -= 1
        x = sx[top]
        y = sy[top]
        lev = sl[top]
        if lev == depth:
            v = _logder(p, q, px, py, qx, qy, x, y)
            if np.isfinite(v):
                s1 += v
                s2 += v * v
                cnt += 1
            else:
                bad += 1
            continue
        for i in range(d + 1):
            h[i] = y * p[i] - x * q[i]
        _roots_one(h, rx, ry)
        for i in range(d):
            sx[top] = rx[i]
            sy[top] = ry[i]
            sl[top] = lev + 1
            top += 1
    mean = s1 / cnt
    var = max(s2 / cnt - mean * mean, 0.0)
    return mean, np.sqrt(var / cnt)


@njit(parallel=True, cache=True)
def tree_batch(P, Q, depth, x0, y0):
    N = P.shape[0]
    L = np.empty(N)
    S = np.empty(N)
    for n in prange(N):
        L[n], S[n] = _tree_one(P[n], Q[n], depth, x0, y0)
    return L, S
