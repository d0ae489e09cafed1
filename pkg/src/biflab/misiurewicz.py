"""Continuation of repelling cycles and detection of Misiurewicz parameters.

A parameter is a hit when the orbit of a critical point lands, after n
steps, exactly on a repelling periodic point sigma(lambda).  We solve
g_n(lambda) = 0 by Newton's method in lambda, carrying the critical point,
the periodic point and the homogeneous critical orbit together with their
lambda-derivatives.  The same code runs on complex doubles or, when the
hit is too close to a degenerate parameter for doubles, on mpmath numbers
in numpy object arrays.
"""

from collections import deque
from dataclasses import dataclass

import mpmath
import numpy as np

from . import forms
from .bifurcation import ParameterGrid
from .errors import ContinuationBroken

REPELLING_MARGIN = 1e-6


# scalar periodic-point Newton used by the continuation -------------------

def _scalar_coeffs(family, lam):
    P, Q = family.coefficients([lam], normalize=False)
    num = [complex(c) for c in P[0]][::-1]
    den = [complex(c) for c in Q[0]][::-1]
    return num, den


def _orbit_scalar(num, den, z, p):
    """f^p(z) and d/dz, with coefficients given highest degree first."""
    der = 1.0
    for _ in range(p):
        P = Pp = 0j
        for c in num:
            Pp = Pp * z + P
            P = P * z + c
        Q = Qp = 0j
        for c in den:
            Qp = Qp * z + Q
            Q = Q * z + c
        der *= (Pp * Q - P * Qp) / (Q * Q)
        z = P / Q
    return z, der


def _newton_cycle(num, den, z, p, max_iter=40):
    for _ in range(max_iter):
        try:
            w, der = _orbit_scalar(num, den, z, p)
            step = (w - z) / (der - 1)
        except ZeroDivisionError:
            return z, None, False
        z = z - step
        if not np.isfinite(z) or abs(z) > 1e12:
            return z, None, False
        if abs(step) <= 1e-14 * max(1.0, abs(z)):
            break
    try:
        w, der = _orbit_scalar(num, den, z, p)
    except ZeroDivisionError:
        return z, None, False
    ok = abs(w - z) <= 1e-10 * max(1.0, abs(z))
    return z, der, ok


def _lower_period(num, den, z, p):
    """True if z has exact period smaller than p (the cycle has collapsed)."""
    w = z
    for k in range(1, p):
        w, _ = _orbit_scalar(num, den, w, 1)
        if p % k == 0 and abs(w - z) <= 1e-8 * max(1.0, abs(z)):
            return True
    return False


@dataclass
class CycleContinuation:
    """A periodic point followed over a parameter grid.

    ``status`` is 0 where the point was continued and is repelling, 1 where
    it stopped being repelling or collapsed onto a point of lower period
    (continuation does not pass through such nodes) and 2 where the node
    was never reached.
    """

    grid: ParameterGrid
    period: int
    points: np.ndarray
    multipliers: np.ndarray
    status: np.ndarray

    def at(self, lam):
        """Continued point at the grid node nearest to lam."""
        i, j = self.grid.nearest(lam)
        if self.status[i, j] != 0:
            # fall back to the nearest continued node
            ok = np.argwhere(self.status == 0)
            if len(ok) == 0:
                raise ContinuationBroken("no continued nodes", (i, j))
            k = np.argmin((ok[:, 0] - i) ** 2 + (ok[:, 1] - j) ** 2)
            i, j = ok[k]
        return complex(self.points[i, j])


def continue_repelling_cycle(family, cycle_seed, period, grid):
    """Follow a repelling periodic point of f_center across the grid."""
    num, den = _scalar_coeffs(family, grid.center)
    z0, der, ok = _newton_cycle(num, den, complex(cycle_seed), period)
    if not ok:
        raise ContinuationBroken("seed does not converge to a periodic point at the grid center")
    if abs(der) <= 1 + REPELLING_MARGIN:
        raise ContinuationBroken(f"seed cycle is not repelling (|multiplier| = {abs(der):.4g})")
    n = grid.resolution
    lam = grid.lambdas()
    pts = np.full((n, n), np.nan + 0j)
    mult = np.full((n, n), np.nan + 0j)
    status = np.full((n, n), 2, dtype=np.int8)
    start = grid.nearest(grid.center)
    queue = deque([(start, z0)])
    seen = np.zeros((n, n), dtype=bool)
    seen[start] = True
    while queue:
        (i, j), zp = queue.popleft()
        num, den = _scalar_coeffs(family, lam[i, j])
        z, der, ok = _newton_cycle(num, den, zp, period)
        if not ok:
            if der is not None and abs(der) <= 1 + 1e-2:
                status[i, j] = 1
                continue
            raise ContinuationBroken(f"Newton diverged at node {(i, j)}", (i, j))
        pts[i, j] = z
        mult[i, j] = der
        if abs(der) <= 1 + REPELLING_MARGIN or _lower_period(num, den, z, period):
            status[i, j] = 1
            continue
        status[i, j] = 0
        for a, b in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if 0 <= a < n and 0 <= b < n and not seen[a, b]:
                seen[a, b] = True
                queue.append(((a, b), z))
    return CycleContinuation(grid, period, pts, mult, status)


# vectorized Newton engine ------------------------------------------------

class _Backend:
    """Numeric conversions for complex doubles or mpmath numbers."""

    def __init__(self, digits=None):
        self.digits = digits

    @property
    def exact(self):
        return self.digits is not None

    def array(self, x):
        x = np.asarray(x)
        if not self.exact:
            return x.astype(complex)
        out = np.empty(x.shape, dtype=object)
        flat = out.reshape(-1)
        for k, v in enumerate(x.reshape(-1)):
            flat[k] = mpmath.mpc(v) if not isinstance(v, mpmath.mpc) else v
        return out

    def abs(self, x):
        a = np.abs(x)
        return a.astype(float) if self.exact else a

    def eps(self):
        return 1e-15 if not self.exact else float(mpmath.mpf(10) ** (-self.digits + 3))


def _powers(lam, k):
    out = [np.ones_like(lam) * 1]
    for _ in range(1, k):
        out.append(out[-1] * lam)
    return out


def _family_coeffs(family, lam):
    """Coefficients and their lambda-derivatives, lanes along axis 0."""
    K = family.num_poly.shape[1]
    pw = _powers(lam, K)
    P = sum(pw[k][:, None] * family.num_poly[:, k][None, :] for k in range(K))
    Q = sum(pw[k][:, None] * family.den_poly[:, k][None, :] for k in range(K))
    if K > 1:
        dP = sum(k * pw[k - 1][:, None] * family.num_poly[:, k][None, :] for k in range(1, K))
        dQ = sum(k * pw[k - 1][:, None] * family.den_poly[:, k][None, :] for k in range(1, K))
    else:
        dP = np.zeros_like(P)
        dQ = np.zeros_like(Q)
    return P, Q, dP, dQ


def _horner(c, t):
    acc = c[:, -1] * 1
    for i in range(c.shape[1] - 2, -1, -1):
        acc = acc * t + c[:, i]
    return acc


def _horner_der(c, t):
    n = c.shape[1] - 1
    if n == 0:
        return np.zeros_like(t)
    acc = c[:, -1] * n
    for i in range(n - 1, 0, -1):
        acc = acc * t + c[:, i] * i
    return acc


def _hom(c, X, Y):
    n = c.shape[1] - 1
    acc = c[:, n] * 1
    yp = np.ones_like(Y)
    for i in range(n - 1, -1, -1):
        yp = yp * Y
        acc = acc * X + c[:, i] * yp
    return acc


def _chart(c, chart):
    """Chart polynomial coefficients: z-chart as is, u-chart reversed."""
    return np.where(chart[:, None], c[:, ::-1], c)


def _critical_point(P, Q, dP, dQ, chart, t, steps=3):
    """Refine the tracked critical point; returns t and dt/dlambda."""
    J = forms.jacobian_form(P, Q)
    dJ = (forms.form_mul(forms.d_dx(dP), forms.d_dy(Q)) + forms.form_mul(forms.d_dx(P), forms.d_dy(dQ))
          - forms.form_mul(forms.d_dy(dP), forms.d_dx(Q)) - forms.form_mul(forms.d_dy(P), forms.d_dx(dQ)))
    Jc = _chart(J, chart)
    dJc = _chart(dJ, chart)
    for _ in range(steps):
        der = _horner_der(Jc, t)
        ok = der != 0
        t = t - np.where(ok, _horner(Jc, t) / np.where(ok, der, 1), 0)
    der = _horner_der(Jc, t)
    dt = -_horner(dJc, t) / np.where(der != 0, der, 1)
    return t, dt


def _affine_orbit(P, Q, dP, dQ, z, p):
    """f^p(z), d/dz and d/dlambda in the affine chart."""
    w = z
    wz = np.ones_like(z)
    wl = np.zeros_like(z)
    for _ in range(p):
        A, B = _horner(P, w), _horner(Q, w)
        # exact poles only occur on dead lanes, whose values are discarded
        B = np.where(B != 0, B, 1)
        Ap, Bp = _horner_der(P, w), _horner_der(Q, w)
        Al, Bl = _horner(dP, w), _horner(dQ, w)
        B2 = B * B
        fz = (Ap * B - A * Bp) / B2
        fl = (Al * B - A * Bl) / B2
        wl = fl + fz * wl
        wz = fz * wz
        w = A / B
    return w, wz, wl


def _periodic_point(P, Q, dP, dQ, s, p, steps=3):
    """Refine sigma; returns sigma, d sigma / d lambda and the multiplier."""
    for _ in range(steps):
        w, wz, _ = _affine_orbit(P, Q, dP, dQ, s, p)
        s = s - (w - s) / np.where(wz != 1, wz - 1, 1)
    w, wz, wl = _affine_orbit(P, Q, dP, dQ, s, p)
    return s, -wl / np.where(wz != 1, wz - 1, 1), wz


def _critical_orbit(P, Q, dP, dQ, chart, t, dt, n, be):
    """F^n of the critical vector with its lambda-derivative, chart-normalized."""
    one = np.ones_like(t)
    zero = np.zeros_like(t)
    X = np.where(chart, one, t)
    Y = np.where(chart, t, one)
    dX = np.where(chart, zero, dt)
    dY = np.where(chart, dt, zero)
    Px, Py = forms.d_dx(P), forms.d_dy(P)
    Qx, Qy = forms.d_dx(Q), forms.d_dy(Q)
    for _ in range(n):
        A = _hom(P, X, Y)
        B = _hom(Q, X, Y)
        dA = _hom(dP, X, Y) + _hom(Px, X, Y) * dX + _hom(Py, X, Y) * dY
        dB = _hom(dQ, X, Y) + _hom(Qx, X, Y) * dX + _hom(Qy, X, Y) * dY
        big = be.abs(A) >= be.abs(B)
        den = np.where(big, A, B)
        num = np.where(big, B, A)
        dden = np.where(big, dA, dB)
        dnum = np.where(big, dB, dA)
        r = num / den
        dr = (dnum * den - num * dden) / (den * den)
        X = np.where(big, one, r)
        Y = np.where(big, r, one)
        dX = np.where(big, zero, dr)
        dY = np.where(big, dr, zero)
    return X, Y, dX, dY


def _newton_lambda(family, lam, chart, t, s, n, p, be, max_iter=60, box=None):
    """Newton in lambda for g_n = X_n - sigma Y_n; all arrays are lanes."""
    alive = np.ones(len(lam), dtype=bool)
    for _ in range(max_iter):
        P, Q, dP, dQ = _family_coeffs(family, lam)
        t, dt = _critical_point(P, Q, dP, dQ, chart, t)
        s, ds, _ = _periodic_point(P, Q, dP, dQ, s, p)
        X, Y, dX, dY = _critical_orbit(P, Q, dP, dQ, chart, t, dt, n, be)
        g = X - s * Y
        dg = dX - ds * Y - s * dY
        with np.errstate(all="ignore"):
            step = np.where(dg != 0, g / np.where(dg != 0, dg, 1), 0)
        lam = lam - np.where(alive, step, 0)
        mag = be.abs(step)
        lam_abs = be.abs(lam)
        finite = np.isfinite(lam_abs) & np.isfinite(be.abs(t)) & np.isfinite(be.abs(s))
        if box is not None:
            finite &= (np.abs(lam_abs) < 1e6) & _in_box(lam, box, be)
        alive &= finite
        lam = np.where(alive, lam, 0)
        t = np.where(alive, t, 0)
        s = np.where(alive, s, 0)
        if not np.any(alive & (mag > be.eps() * np.maximum(lam_abs, 1e-300))):
            break
    return lam, t, s, alive


def _in_box(lam, box, be):
    c, hw = box
    lam = np.asarray(lam)
    re = np.array([complex(v).real for v in lam]) if be.exact else lam.real
    im = np.array([complex(v).imag for v in lam]) if be.exact else lam.imag
    return (np.abs(re - c.real) <= hw * (1 + 1e-9)) & (np.abs(im - c.imag) <= hw * (1 + 1e-9))


def _step_hom(P, Q, X, Y, be):
    A = _hom(P, X, Y)
    B = _hom(Q, X, Y)
    big = be.abs(A) >= be.abs(B)
    r = np.where(big, B, A) / np.where(big, A, B)
    one = np.ones_like(r)
    return np.where(big, one, r), np.where(big, r, one)


def _chordal(X, Y, s, be):
    num = be.abs(X - s * Y)
    den = np.sqrt(be.abs(X) ** 2 + be.abs(Y) ** 2) * np.sqrt(be.abs(s) ** 2 + 1)
    return num / den


def _evaluate(family, lam, chart, t, s, n, p, be, tol):
    """Residual after n steps, first landing time and cycle multiplier."""
    P, Q, dP, dQ = _family_coeffs(family, lam)
    t, _ = _critical_point(P, Q, dP, dQ, chart, t)
    s, _, mult = _periodic_point(P, Q, dP, dQ, s, p)
    one = np.ones_like(t)
    X = np.where(chart, one, t)
    Y = np.where(chart, t, one)
    land = np.full(len(lam), -1)
    res = None
    for k in range(1, n + 1):
        X, Y = _step_hom(P, Q, X, Y, be)
        res = _chordal(X, Y, s, be)
        land = np.where((land < 0) & (res < tol), k, land)
    return res, land, t, s, mult


@dataclass(frozen=True)
class MisiurewiczHit:
    """A parameter where a critical orbit lands on the continued cycle.

    ``lam_text`` keeps every digit of the working precision ``digits``.
    """

    lam: complex
    critical_index: int
    n0: int
    p0: int
    residual: float
    multiplier: complex
    digits: int
    lam_text: str

    def to_json(self):
        return {"lambda": [self.lam.real, self.lam.imag], "lambda_text": self.lam_text,
                "critical_index": self.critical_index, "n0": self.n0, "p0": self.p0,
                "residual": self.residual, "multiplier": [self.multiplier.real, self.multiplier.imag],
                "digits": self.digits}


def _nearest_continued(cycle):
    """Index map sending every node to the nearest successfully continued node."""
    from scipy import ndimage

    if not np.any(cycle.status == 0):
        raise ContinuationBroken("the cycle was not continued to any node")
    _, idx = ndimage.distance_transform_edt(cycle.status != 0, return_indices=True)
    return idx


def _seed_lanes(family, cycle, lam0):
    grid = cycle.grid
    idx = _nearest_continued(cycle)
    h = grid.spacing
    n = grid.resolution
    j = np.clip(np.rint((lam0.real - grid.re[0]) / h), 0, n - 1).astype(int)
    i = np.clip(np.rint((lam0.imag - grid.im[0]) / h), 0, n - 1).astype(int)
    sig = cycle.points[idx[0][i, j], idx[1][i, j]]
    P, Q = family.coefficients(lam0)
    CX, CY = forms.form_roots(forms.jacobian_form(P, Q))
    m = CX.shape[1]
    chart = (np.abs(CX) > np.abs(CY)).ravel()
    cx, cy = CX.ravel(), CY.ravel()
    with np.errstate(all="ignore"):
        t = np.where(chart, cy / np.where(chart, cx, 1), cx / np.where(chart, 1, cy))
    return np.repeat(lam0, m), chart, t, np.repeat(sig, m), np.tile(np.arange(m), len(lam0))


def _critical_index(family, lam, chart, t):
    P, Q = family.coefficients([lam])
    CX, CY = forms.form_roots(forms.jacobian_form(P, Q))
    X, Y = (1.0, t) if chart else (t, 1.0)
    X, Y = forms.unit(complex(X), complex(Y))
    return int(np.argmin(forms.chordal(CX[0], CY[0], X, Y)))


def _witness(family, cycle, lam, chart, t, n, controls, rng, box):
    """min over random controls of |g_n|; far from zero unless g_n vanishes identically."""
    c, hw = box
    cl = c + hw * (rng.uniform(-1, 1, controls) + 1j * rng.uniform(-1, 1, controls))
    be = _Backend()
    P, Q = family.coefficients([lam])
    X0, Y0 = (1.0, t) if chart else (t, 1.0)
    X0, Y0 = forms.unit(complex(X0), complex(Y0))
    lanes, ch, tt, ss, _ = _seed_lanes(family, cycle, cl)
    m = len(lanes) // controls
    # keep, per control, the critical point closest to the tracked one
    CX = np.where(ch, 1.0, tt)
    CY = np.where(ch, tt, 1.0)
    CX, CY = forms.unit(CX, CY)
    dist = forms.chordal(CX, CY, X0, Y0).reshape(controls, m)
    pick = np.arange(controls) * m + np.argmin(dist, axis=1)
    lam_c, ch, tt, ss = lanes[pick], ch[pick], tt[pick], ss[pick]
    Pc, Qc, dP, dQ = _family_coeffs(family, lam_c)
    ss, _, _ = _periodic_point(Pc, Qc, dP, dQ, ss, cycle.period)
    res, _, _, _, _ = _evaluate(family, lam_c, ch, tt, ss, n, cycle.period, be, 0.0)
    return float(np.min(res))


def find_misiurewicz(family, cycle, n_range, seeds=None, tol=1e-8, max_polish=8,
                     controls=8, seed=0, max_iter=60):
    """Parameters where a critical orbit lands on `cycle` after n steps.

    Newton starts from every node of `seeds` (default: the continuation
    grid) and from its center, once per critical point.  Starts that do
    not reach the residual tolerance in double precision are retried in
    extended precision, center first, up to `max_polish` per n.
    """
    seeds = cycle.grid if seeds is None else seeds
    box = (seeds.center, seeds.half_width)
    lam0 = np.concatenate([seeds.lambdas().ravel(), [seeds.center]])
    lanes = _seed_lanes(family, cycle, lam0)
    lam_l, chart_l, t_l, s_l, _ = lanes
    n_lanes = len(lam_l)
    m = n_lanes // len(lam0)
    priority = np.zeros(n_lanes)
    priority[-m:] = -1.0  # center lanes are polished first
    p = cycle.period
    rng = np.random.default_rng(seed)
    if isinstance(n_range, int):
        n_range = [n_range]
    elif isinstance(n_range, tuple) and len(n_range) == 2:
        n_range = range(n_range[0], n_range[1] + 1)
    found = []
    dbl = _Backend()
    for n in n_range:
        lam, t, s, alive = _newton_lambda(family, lam_l.copy(), chart_l, t_l.copy(), s_l.copy(),
                                          n, p, dbl, max_iter, box)
        res, land, t, s, mult = _evaluate(family, lam, chart_l, t, s, n, p, dbl, tol)
        good = alive & (res < tol)
        cand = []
        for k in np.nonzero(good)[0]:
            cand.append((complex(lam[k]), bool(chart_l[k]), complex(t[k]), float(res[k]),
                         int(land[k]), complex(mult[k]), 15, repr(complex(lam[k]))))
        redo = np.nonzero(~good)[0]
        redo = redo[np.lexsort((np.where(np.isfinite(res[redo]), res[redo], np.inf),
                                priority[redo]))][:max_polish]
        if len(redo):
            digits = 20 + int(np.ceil(n * np.log10(family.degree) * 1.2))
            with mpmath.workdps(digits):
                be = _Backend(digits)
                lam_m, t_m, s_m, alive_m = _newton_lambda(
                    family, be.array(lam_l[redo]), chart_l[redo], be.array(t_l[redo]),
                    be.array(s_l[redo]), n, p, be, 4 * max_iter, box)
                res_m, land_m, t_m, s_m, mult_m = _evaluate(family, lam_m, chart_l[redo], t_m,
                                                            s_m, n, p, be, tol)
                for q, k in enumerate(redo):
                    if alive_m[q] and res_m[q] < tol:
                        cand.append((complex(lam_m[q]), bool(chart_l[k]), complex(t_m[q]),
                                     float(res_m[q]), int(land_m[q]), complex(mult_m[q]),
                                     digits, mpmath.nstr(lam_m[q], digits)))
        for lam_h, ch, th, r, n0, mu, dg, text in cand:
            if abs(mu) <= 1 + REPELLING_MARGIN or n0 < 0:
                continue
            dup = False
            for i, h in enumerate(found):
                if abs(h.lam - lam_h) <= 1e-9 * max(abs(h.lam), abs(lam_h), 1e-300):
                    dup = True
                    if n0 < h.n0:
                        found[i] = MisiurewiczHit(h.lam, h.critical_index, n0, p, h.residual,
                                                  h.multiplier, h.digits, h.lam_text)
                    break
            if dup:
                continue
            if _witness(family, cycle, lam_h, ch, th, n, controls, rng, box) <= 1e-4:
                continue
            found.append(MisiurewiczHit(lam_h, _critical_index(family, lam_h, ch, th), n0, p,
                                        r, mu, dg, text))
    found.sort(key=lambda h: (h.n0, abs(h.lam)))
    return found
