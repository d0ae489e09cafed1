"""Lattès maps: the x-coordinate of multiplication by 2 on an elliptic curve.

The curve is y**2 = 4x**3 - g2 x - g3 and x = P(u) is the Weierstrass
function of its period lattice.  Doubling u corresponds to a degree-4
rational map of x, which we build in closed form and then verify against
an independent evaluation of P.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DegenerateLattice
from .family import linear_family
from .sphere import RationalMap, critical_points, evaluate

LAURENT_TERMS = 60


@dataclass(frozen=True)
class EllipticInvariants:
    g2: complex
    g3: complex

    def __post_init__(self):
        g2, g3 = complex(self.g2), complex(self.g3)
        object.__setattr__(self, "g2", g2)
        object.__setattr__(self, "g3", g3)
        disc = g2 ** 3 - 27 * g3 ** 2
        scale = max(abs(g2) ** 3, 27 * abs(g3) ** 2)
        if scale == 0 or abs(disc) <= 1e-8 * scale:
            raise DegenerateLattice(f"discriminant vanishes for g2={g2:.6g}, g3={g3:.6g}")

    @property
    def discriminant(self):
        return self.g2 ** 3 - 27 * self.g3 ** 2

    def roots(self):
        """Roots of 4x**3 - g2 x - g3."""
        return np.roots([4, 0, -self.g2, -self.g3])


@dataclass(frozen=True)
class LattesMap(RationalMap):
    """A Lattès map together with the data used to certify it."""

    invariants: EllipticInvariants = None
    periods: tuple = ()
    semiconjugacy_residual: float = float("nan")


def _agm(a, b, tol=1e-16, max_iter=100):
    """Complex AGM with the optimal square root at every step."""
    for _ in range(max_iter):
        a1 = 0.5 * (a + b)
        b1 = np.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
        if abs(a - b) <= tol * abs(a):
            break
    return a


def _eisenstein_invariants(w1, w2, terms=60):
    """g2, g3 of the lattice spanned by w1, w2 (q-series)."""
    tau = w2 / w1
    if tau.imag < 0:
        tau = -tau
    q = np.exp(2j * np.pi * tau)
    n = np.arange(1, terms + 1)
    s3 = np.array([sum(k ** 3 for k in range(1, m + 1) if m % k == 0) for m in n])
    s5 = np.array([sum(k ** 5 for k in range(1, m + 1) if m % k == 0) for m in n])
    qn = q ** n
    e4 = 1 + 240 * np.sum(s3 * qn)
    e6 = 1 - 504 * np.sum(s5 * qn)
    c = 2 * np.pi / w1
    return c ** 4 / 12 * e4, c ** 6 / 216 * e6


def _reduce_basis(w1, w2):
    """Lagrange-Gauss reduction of a lattice basis."""
    for _ in range(100):
        if abs(w2) < abs(w1):
            w1, w2 = w2, w1
        m = round((w2 * np.conj(w1)).real / abs(w1) ** 2)
        if m == 0:
            break
        w2 = w2 - m * w1
    if abs(w2) < abs(w1):
        w1, w2 = w2, w1
    return w1, w2


def lattice_periods(inv):
    """A reduced basis of the period lattice, checked by its invariants."""
    e = inv.roots()
    cands = []
    for i, j, k in permutations(range(3)):
        a = np.sqrt(complex(e[i] - e[k]))
        b = np.sqrt(complex(e[i] - e[j]))
        for s in (1, -1):
            m = _agm(a, s * b)
            if m != 0:
                cands.append(np.pi / m)
    cands.sort(key=abs)
    scale = max(abs(inv.g2), abs(inv.g3), 1e-300)
    for x in range(len(cands)):
        for y in range(x + 1, len(cands)):
            w1, w2 = cands[x], cands[y]
            if abs((w2 / w1).imag) < 1e-6:
                continue
            w1, w2 = _reduce_basis(w1, w2)
            g2, g3 = _eisenstein_invariants(w1, w2)
            if abs(g2 - inv.g2) + abs(g3 - inv.g3) <= 1e-8 * scale:
                return complex(w1), complex(w2)
    raise DegenerateLattice("could not identify a period basis")


def _laurent_coefficients(g2, g3, terms=LAURENT_TERMS):
    c = [0j] * (terms + 1)
    c[1] = g2 / 20
    if terms >= 2:
        c[2] = g3 / 28
    for k in range(3, terms + 1):
        c[k] = 3 / ((2 * k + 3) * (k - 2)) * sum(c[m] * c[k - 1 - m] for m in range(1, k - 1))
    return np.array(c[1:])


def weierstrass_p(u, inv, periods=None):
    """P(u) by lattice reduction followed by its Laurent series at 0.

    The lattice is rescaled so its shortest period has length 1; reduced
    points then lie within 1/sqrt(2) of the origin, where the series
    converges geometrically.
    """
    w1, w2 = lattice_periods(inv) if periods is None else periods
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    M = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
    st = np.linalg.solve(M, np.stack([u.real, u.imag]))
    base = u - np.round(st[0]) * w1 - np.round(st[1]) * w2
    best = base.copy()
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            v = base + a * w1 + b * w2
            best = np.where(np.abs(v) < np.abs(best), v, best)
    rho = min(abs(w1), abs(w2))
    c = _laurent_coefficients(inv.g2 * rho ** 4, inv.g3 * rho ** 6)
    s2 = (best / rho) ** 2
    series = np.polyval(np.concatenate([c[::-1], [0]]), s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(best == 0, complex(np.inf), (1 / s2 + series) / rho ** 2)


def lattes_coefficients(inv):
    """Numerator and denominator of the doubling map, ascending in x."""
    g2, g3 = inv.g2, inv.g3
    num = [g2 ** 2 / 4, 8 * g3, 2 * g2, 0, 4]
    den = [-4 * g3, -4 * g2, 0, 16, 0]
    return num, den


def semiconjugacy_residual(f, inv, periods, grid=4):
    """max |f(P(u)) - P(2u)| / max(1, |P(2u)|) over a grid in the period cell."""
    w1, w2 = periods
    t = (np.arange(grid) + 0.5) / grid
    u = (t[:, None] * w1 + t[None, :] * w2).ravel()
    x = weierstrass_p(u, inv, periods)
    x2 = weierstrass_p(2 * u, inv, periods)
    with np.errstate(all="ignore"):
        fx = np.polyval(np.asarray(f.num)[::-1], x) / np.polyval(np.asarray(f.den)[::-1], x)
    return float(np.max(np.abs(fx - x2) / np.maximum(1, np.abs(x2))))


def build_lattes(g2, g3, check_tol=1e-6):
    """Build the Lattès map for the curve with invariants (g2, g3)."""
    inv = EllipticInvariants(g2, g3)
    num, den = lattes_coefficients(inv)
    f = RationalMap.from_coefficients(num, den)
    periods = lattice_periods(inv)
    res = semiconjugacy_residual(f, inv, periods)
    if not res < check_tol:
        raise DegenerateLattice(f"semiconjugacy residual {res:.3g} exceeds {check_tol:g}")
    return LattesMap(f.num, f.den, inv, periods, res)


def perturbed_family(base, radius, direction=None):
    """base + lambda * direction over the disc |lambda| <= radius.

    The default direction moves the leading numerator coefficient.
    """
    d = base.degree
    if direction is None:
        dn = np.zeros(d + 1, dtype=complex)
        dn[d] = 1
        dd = np.zeros(d + 1, dtype=complex)
    else:
        dn, dd = direction
    plain = RationalMap(base.num, base.den)
    return linear_family(plain, dn, dd, radius)


def postcritical_orbits(f, steps=4):
    """Forward orbits of the critical values, as complex arrays."""
    out = []
    for c in critical_points(f):
        orbit = [evaluate(f, c)]
        for _ in range(steps):
            orbit.append(evaluate(f, orbit[-1]))
        out.append([complex(p) for p in orbit])
    return out

