"""Batched arithmetic on binary forms.

A binary form of degree n is stored as a complex array ``c`` of length n + 1
where ``c[i]`` multiplies ``X**i * Y**(n - i)``.  In the affine chart
z = X / Y this is the ordinary polynomial with ascending coefficients.
Leading axes are batch axes.  Points of the Riemann sphere are unit vectors
(X, Y) up to phase.
"""

import numpy as np

ZERO_TOL = 1e-14


def unit(X, Y):
    """Normalize homogeneous coordinates to unit Euclidean length."""
    r = np.sqrt(np.abs(X) ** 2 + np.abs(Y) ** 2)
    return X / r, Y / r


def hom_eval(c, X, Y):
    """Evaluate forms ``c`` (..., n+1) at points (X, Y) broadcast over batch."""
    c = np.asarray(c)
    n = c.shape[-1] - 1
    k = np.arange(n + 1)
    Xp = np.asarray(X)[..., None] ** k
    Yp = np.asarray(Y)[..., None] ** (n - k)
    return np.sum(c * Xp * Yp, axis=-1)


def d_dx(c):
    c = np.asarray(c)
    n = c.shape[-1] - 1
    return c[..., 1:] * np.arange(1, n + 1)


def d_dy(c):
    c = np.asarray(c)
    n = c.shape[-1] - 1
    return c[..., :-1] * (n - np.arange(n))


def form_mul(a, b):
    """Product of two batched forms (convolution along the last axis)."""
    a = np.asarray(a)
    b = np.asarray(b)
    na, nb = a.shape[-1], b.shape[-1]
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (na + nb - 1,)
    out = np.zeros(shape, dtype=np.result_type(a, b, complex))
    for i in range(na):
        out[..., i:i + nb] += a[..., i:i + 1] * b
    return out


def jacobian_form(p, q):
    """det DF for F = (p, q); a form of degree 2d - 2."""
    return form_mul(d_dx(p), d_dy(q)) - form_mul(d_dy(p), d_dx(q))


def sylvester_resultant(p, q):
    """Resultant of two batched forms of the same formal degree d.

    Vanishes exactly when the forms share a root on the sphere,
    including the point at infinity.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    d = p.shape[-1] - 1
    batch = np.broadcast_shapes(p.shape[:-1], q.shape[:-1])
    p = np.broadcast_to(p, batch + (d + 1,))
    q = np.broadcast_to(q, batch + (d + 1,))
    S = np.zeros(batch + (2 * d, 2 * d), dtype=complex)
    pr = p[..., ::-1]
    qr = q[..., ::-1]
    for i in range(d):
        S[..., i, i:i + d + 1] = pr
        S[..., d + i, i:i + d + 1] = qr
    return np.linalg.det(S)


def _quadratic_roots(a, b, c):
    disc = np.sqrt(b * b - 4 * a * c)
    sgn = np.where((np.conj(b) * disc).real >= 0, 1.0, -1.0)
    s = -0.5 * (b + sgn * disc)
    s = np.where(s == 0, 1e-300, s)
    return np.stack([s / a, c / s], axis=-1)


def _poly_roots(coef):
    """Roots of polynomials with ascending coefficients and nonzero ends."""
    N, m = coef.shape
    r = m - 1
    if r == 1:
        return (-coef[:, 0] / coef[:, 1])[:, None]
    if r == 2:
        return _quadratic_roots(coef[:, 2], coef[:, 1], coef[:, 0])
    M = np.zeros((N, r, r), dtype=complex)
    M[:, np.arange(1, r), np.arange(r - 1)] = 1.0
    M[:, :, -1] = -coef[:, :-1] / coef[:, -1:]
    return np.linalg.eigvals(M)


def _polish(c, X, Y, steps):
    """Guarded Newton steps on the form, working in the better chart.

    A step is kept only if it lowers the residual and stays well inside
    the gap to the nearest other root; clustered roots are left alone,
    since polishing them one at a time pulls them together.
    """
    n = c.shape[-1] - 1
    k = np.arange(n + 1)
    gap = np.abs(X[..., :, None] * Y[..., None, :] - X[..., None, :] * Y[..., :, None])
    gap[..., np.arange(X.shape[-1]), np.arange(X.shape[-1])] = np.inf
    gap = gap.min(axis=-1)
    for _ in range(steps):
        zchart = np.abs(X) <= np.abs(Y)
        t = np.where(zchart, X / np.where(zchart, Y, 1), Y / np.where(zchart, 1, X))
        # z chart uses c as is; u chart uses the reversed coefficients
        cc = np.where(zchart[..., None], c[:, None, :], c[:, None, ::-1])
        tp = t[..., None] ** k
        f = np.sum(cc * tp, axis=-1)
        fp = np.sum(cc[..., 1:] * k[1:] * tp[..., :-1], axis=-1)
        ok = np.abs(fp) > 1e-300
        tn = np.where(ok, t - f / np.where(ok, fp, 1), t)
        fn = np.sum(cc * tn[..., None] ** k, axis=-1)
        # chordal length of the step, up to a factor at most 2
        small = np.abs(tn - t) / (1 + np.abs(t) ** 2) < 1e-3 * gap
        better = np.isfinite(tn) & (np.abs(fn) <= np.abs(f)) & small
        t = np.where(better, tn, t)
        Xn = np.where(zchart, t, 1.0)
        Yn = np.where(zchart, 1.0, t)
        X, Y = unit(Xn, Yn)
    return X, Y


def form_roots(c, polish=2):
    """All n roots of each batched form, as unit vectors.

    Returns arrays X, Y of shape (N, n).  Roots are listed with
    multiplicity; zero and infinity are detected structurally.
    """
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    N, m = c.shape
    n = m - 1
    X = np.zeros((N, n), dtype=complex)
    Y = np.zeros((N, n), dtype=complex)
    scale = np.max(np.abs(c), axis=1)
    if np.any(scale == 0):
        raise ValueError("zero form has no isolated roots")
    tiny = np.abs(c) <= ZERO_TOL * scale[:, None]
    # trailing tiny coefficients are roots at z = 0, leading ones at infinity
    k0 = np.argmin(tiny, axis=1)
    kinf = np.argmin(tiny[:, ::-1], axis=1)
    keys = k0 * (n + 2) + kinf
    for key in np.unique(keys):
        rows = np.nonzero(keys == key)[0]
        a, b = divmod(int(key), n + 2)
        mid = c[rows, a:m - b]
        r = mid.shape[1] - 1
        Xg = np.zeros((len(rows), n), dtype=complex)
        Yg = np.zeros((len(rows), n), dtype=complex)
        Yg[:, :a] = 1.0
        Xg[:, a:a + b] = 1.0
        if r > 0:
            flip = np.abs(mid[:, -1]) < np.abs(mid[:, 0])
            coef = np.where(flip[:, None], mid[:, ::-1], mid)
            t = _poly_roots(coef)
            fl = flip[:, None]
            Xr, Yr = unit(np.where(fl, 1.0, t), np.where(fl, t, 1.0))
            if polish:
                Xr, Yr = _polish(c[rows], Xr, Yr, polish)
            Xg[:, a + b:] = Xr
            Yg[:, a + b:] = Yr
        X[rows] = Xg
        Y[rows] = Yg
    return X, Y


def chordal(X1, Y1, X2, Y2):
    """Chordal distance between unit vectors, in [0, 1]."""
    return np.abs(X1 * Y2 - X2 * Y1)


def to_hom(z):
    """Complex array (inf allowed) to unit homogeneous coordinates."""
    z = np.asarray(z, dtype=complex)
    inf = ~np.isfinite(z)
    X = np.where(inf, 1.0, z)
    Y = np.where(inf, 0.0, 1.0)
    return unit(X, Y)


def from_hom(X, Y):
    """Unit homogeneous coordinates to complex, with inf at Y == 0."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = X / Y
    return np.where(Y == 0, complex(np.inf, 0), z)


def log_sphere_derivative(P, Q, X, Y):
    """log |f'| in the spherical metric for batched maps.

    P, Q have shape (N, d+1); X, Y have shape (N, ...) of unit vectors.
    """
    P = np.asarray(P)
    Q = np.asarray(Q)
    d = P.shape[-1] - 1
    extra = np.ndim(X) - (P.ndim - 1)
    idx = (slice(None),) * (P.ndim - 1) + (None,) * extra
    ev = lambda c: hom_eval(c[idx], X, Y)
    det = ev(d_dx(P)) * ev(d_dy(Q)) - ev(d_dy(P)) * ev(d_dx(Q))
    A = ev(P)
    B = ev(Q)
    with np.errstate(divide="ignore"):
        return (np.log(np.abs(det)) - np.log(d)
                + np.log(np.abs(X) ** 2 + np.abs(Y) ** 2)
                - np.log(np.abs(A) ** 2 + np.abs(B) ** 2))
