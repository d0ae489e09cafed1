"""Rational maps of the Riemann sphere.

Maps are kept in homogeneous form F = (P, Q) with P, Q binary forms of
degree d (see :mod:`biflab.forms`).  All geometry is measured in the
Fubini-Study (chordal) metric, so the point at infinity needs no special
treatment.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import forms
from .errors import (ConvergenceFailure, DegenerateMap, DegenerateSample,
                     RootFindingFailure)

RESULTANT_TOL = 1e-12
START_POINT = 0.4 + 0.3j
NEAR_CRITICAL = 1e-30


@dataclass(frozen=True)
class ComplexPoint:
    """A point of the Riemann sphere."""

    re: float
    im: float
    infinite: bool = False

    @classmethod
    def from_complex(cls, z):
        z = complex(z)
        if not (np.isfinite(z.real) and np.isfinite(z.imag)):
            return cls(float("inf"), 0.0, True)
        return cls(z.real, z.imag)

    @classmethod
    def infinity(cls):
        return cls(float("inf"), 0.0, True)

    def __complex__(self):
        return complex(np.inf, 0) if self.infinite else complex(self.re, self.im)

    def hom(self):
        X, Y = forms.to_hom(complex(self))
        return complex(X), complex(Y)


def as_point(z):
    return z if isinstance(z, ComplexPoint) else ComplexPoint.from_complex(z)


def _hom_of(z):
    return as_point(z).hom()


@dataclass(frozen=True)
class RationalMap:
    """Degree-d rational map z -> P(z) / Q(z).

    ``num[i]`` and ``den[i]`` are the coefficients of z**i.  Use
    :meth:`from_coefficients` to build a validated, normalized map.
    """

    num: np.ndarray
    den: np.ndarray

    @classmethod
    def from_coefficients(cls, num, den, degree=None):
        num = np.asarray(num, dtype=complex).ravel()
        den = np.asarray(den, dtype=complex).ravel()
        d = max(len(num), len(den)) - 1 if degree is None else int(degree)
        if d < 1:
            raise DegenerateMap("degree must be at least 1")
        if len(num) > d + 1 or len(den) > d + 1:
            raise DegenerateMap("more coefficients than the stated degree allows")
        num = np.pad(num, (0, d + 1 - len(num)))
        den = np.pad(den, (0, d + 1 - len(den)))
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise DegenerateMap("non-finite coefficient")
        scale = max(np.max(np.abs(num)), np.max(np.abs(den)))
        if scale == 0:
            raise DegenerateMap("all coefficients vanish")
        num, den = num / scale, den / scale
        res = abs(forms.sylvester_resultant(num, den))
        if not res > RESULTANT_TOL:
            raise DegenerateMap(f"numerator and denominator share a root (|Res| = {res:.3g})")
        num.setflags(write=False)
        den.setflags(write=False)
        return cls(num, den)

    @property
    def degree(self):
        return len(self.num) - 1

    def resultant(self):
        return complex(forms.sylvester_resultant(self.num, self.den))

    def apply_hom(self, X, Y):
        """Image of unit vectors; returns unit vectors and log of the raw norm."""
        A = forms.hom_eval(self.num, X, Y)
        B = forms.hom_eval(self.den, X, Y)
        r = np.sqrt(np.abs(A) ** 2 + np.abs(B) ** 2)
        return A / r, B / r, np.log(r)

    def log_sphere_derivative(self, X, Y):
        """log |f'| in the spherical metric at unit vectors (X, Y)."""
        return forms.log_sphere_derivative(self.num, self.den, X, Y)

    def preimage_forms(self, WX, WY):
        """Forms whose roots are the preimages of the points (WX, WY)."""
        WX = np.asarray(WX)[..., None]
        WY = np.asarray(WY)[..., None]
        return WY * self.num - WX * self.den

    def to_json(self):
        return {"degree": self.degree,
                "num": [[c.real, c.imag] for c in self.num],
                "den": [[c.real, c.imag] for c in self.den]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        num = [complex(a, b) for a, b in obj["num"]]
        den = [complex(a, b) for a, b in obj["den"]]
        return cls.from_coefficients(num, den, obj.get("degree"))

    def __call__(self, z):
        return evaluate(self, z)


def power_map(d):
    """z -> z**d."""
    return RationalMap.from_coefficients(np.eye(d + 1)[d], np.eye(d + 1)[0])


def polynomial_map(coefficients):
    """Polynomial with ascending coefficients, as a rational map."""
    c = np.asarray(coefficients, dtype=complex)
    return RationalMap.from_coefficients(c, np.eye(len(c))[0])


def evaluate(f, z):
    X, Y = _hom_of(z)
    A, B, _ = f.apply_hom(X, Y)
    return ComplexPoint.from_complex(forms.from_hom(A, B))


def spherical_derivative(f, z):
    """|f'(z)| measured in the spherical metric (0 at critical points)."""
    X, Y = _hom_of(z)
    return float(np.exp(f.log_sphere_derivative(X, Y)))


def sphere_distance(z, w):
    """Chordal distance, in [0, 1]."""
    X1, Y1 = _hom_of(z)
    X2, Y2 = _hom_of(w)
    return float(forms.chordal(X1, Y1, X2, Y2))


def preimages(f, w, tol=1e-10):
    """The d preimages of w, with multiplicity."""
    WX, WY = _hom_of(w)
    h = f.preimage_forms(np.array([WX]), np.array([WY]))
    X, Y = forms.form_roots(h)
    A, B, _ = f.apply_hom(X[0], Y[0])
    err = forms.chordal(A, B, WX, WY)
    if not np.all(err < tol):
        raise RootFindingFailure(f"preimage residual {np.max(err):.3g} exceeds {tol:g}")
    return [ComplexPoint.from_complex(z) for z in forms.from_hom(X[0], Y[0])]


def critical_points(f):
    """The 2d - 2 critical points, with multiplicity."""
    J = forms.jacobian_form(f.num, f.den)
    X, Y = forms.form_roots(J[None, :])
    return [ComplexPoint.from_complex(z) for z in forms.from_hom(X[0], Y[0])]


def _orbit_affine(f, z, p):
    """f^p(z) and its derivative in the affine chart, vectorized."""
    num, den = f.num, f.den
    dn = num[1:] * np.arange(1, len(num))
    dd = den[1:] * np.arange(1, len(den))
    w = np.array(z, dtype=complex)
    der = np.ones_like(w)
    with np.errstate(all="ignore"):
        for _ in range(p):
            P = np.polyval(num[::-1], w)
            Q = np.polyval(den[::-1], w)
            Pp = np.polyval(dn[::-1], w)
            Qp = np.polyval(dd[::-1], w)
            der = der * (Pp * Q - P * Qp) / (Q * Q)
            w = P / Q
    return w, der


def _exact_period(f, z, p, tol):
    w = np.array([z], dtype=complex)
    for k in range(1, p + 1):
        w, _ = _orbit_affine(f, w, 1)
        if abs(w[0] - z) <= tol * max(1.0, abs(z)):
            return k
    return p


def find_periodic(f, period, region_center=0j, region_radius=2.0,
                  seeds_per_axis=24, tol=1e-11, max_iter=80):
    """Finite points of exact period `period` inside a disc.

    Returns a list of (ComplexPoint, multiplier) with one entry per point.
    """
    if period < 1:
        raise ValueError("period must be positive")
    c = complex(region_center)
    t = np.linspace(-region_radius, region_radius, seeds_per_axis)
    z = (c + t[:, None] + 1j * t[None, :]).ravel()
    z = z[np.abs(z - c) <= region_radius]
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            w, der = _orbit_affine(f, z, period)
            step = (w - z) / (der - 1)
            z = z - step
            z = np.where(np.isfinite(z), z, np.nan)
        w, der = _orbit_affine(f, z, period)
        ok = np.isfinite(z) & (np.abs(w - z) <= 1e-9 * np.maximum(1, np.abs(z)))
    z = z[ok & (np.abs(z - c) <= region_radius)]
    found = []
    for zi in z:
        if any(abs(zi - q) <= 1e-8 * max(1.0, abs(q)) for q in found):
            continue
        if _exact_period(f, zi, period, 1e-8) != period:
            continue
        found.append(zi)
    if not found and len(z) == 0:
        raise ConvergenceFailure("Newton found no periodic points in the region")
    found.sort(key=lambda q: (round(q.real, 9), round(q.imag, 9)))
    out = []
    for zi in found:
        _, der = _orbit_affine(f, np.array([zi]), period)
        out.append((ComplexPoint.from_complex(zi), complex(der[0])))
    return out


@dataclass
class MeasureSample:
    """Samples of the maximal-entropy measure from backward random walks.

    ``hom`` holds unit homogeneous coordinates, shape (n, 2).
    """

    hom: np.ndarray
    seed: int
    burn_in: int
    chain_length: int
    chains: int
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.hom)

    @property
    def values(self):
        """Samples as complex numbers, with inf for the point at infinity."""
        return forms.from_hom(self.hom[:, 0], self.hom[:, 1])

    @property
    def points(self):
        return [ComplexPoint.from_complex(z) for z in self.values]

    def to_csv(self, path):
        z = self.values
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im"])
            for v in z:
                w.writerow([repr(v.real), repr(v.imag)])


def _is_exceptional(f, z):
    pts = preimages(f, z)
    X0, Y0 = _hom_of(pts[0])
    return all(forms.chordal(*_hom_of(q), X0, Y0) < 1e-8 for q in pts[1:])


def sample_measure(f, seed, n, burn_in=50, chains=None):
    """Draw n samples by random backward iteration.

    Independent chains run in parallel from a common start point; each
    chain discards `burn_in` steps and then records every state.
    """
    if n < 1:
        raise ValueError("n must be positive")
    d = f.degree
    chains = min(n, 1024) if chains is None else max(1, min(int(chains), n))
    rng = np.random.default_rng(seed)
    z0 = START_POINT
    for k in range(8):
        if not _is_exceptional(f, z0):
            break
        z0 = START_POINT + 1e-3 * (k + 1) * (1 + 1j)
    X0, Y0 = _hom_of(z0)
    X = np.full(chains, X0)
    Y = np.full(chains, Y0)
    steps = -(-n // chains)
    out = np.empty((steps, chains, 2), dtype=complex)
    rejected = 0
    idx = np.arange(chains)
    for s in range(burn_in + steps):
        RX, RY = forms.form_roots(f.preimage_forms(X, Y))
        digit = rng.integers(0, d, size=chains)
        NX, NY = RX[idx, digit], RY[idx, digit]
        bad = f.log_sphere_derivative(NX, NY) < np.log(NEAR_CRITICAL)
        tries = 0
        while np.any(bad) and tries < d:
            rejected += int(bad.sum())
            digit = np.where(bad, (digit + 1) % d, digit)
            NX, NY = RX[idx, digit], RY[idx, digit]
            bad = f.log_sphere_derivative(NX, NY) < np.log(NEAR_CRITICAL)
            tries += 1
        X, Y = NX, NY
        if s >= burn_in:
            out[s - burn_in, :, 0] = X
            out[s - burn_in, :, 1] = Y
    hom = out.transpose(1, 0, 2).reshape(-1, 2)[:n]
    return MeasureSample(hom=hom, seed=seed, burn_in=burn_in, chain_length=steps,
                         chains=chains, diagnostics={"rejected": rejected,
                                                     "start": [z0.real, z0.imag]})


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    std_error: float
    sample_count: int


def lyapunov(f, sample):
    """Mean of log |f'| over the sample.

    The standard error uses per-chain batch means, which absorbs the
    correlation between consecutive states of one chain.
    """
    v = f.log_sphere_derivative(sample.hom[:, 0], sample.hom[:, 1])
    if not np.all(np.isfinite(v)):
        raise DegenerateSample("a sample point is critical")
    n = len(v)
    L = sample.chain_length
    full = n // L if L else 0
    if full >= 2:
        # samples are stored chain after chain
        per = v[:full * L].reshape(full, L).mean(axis=1)
        se = per.std(ddof=1) / np.sqrt(full) * np.sqrt(full * L / n)
    else:
        se = v.std(ddof=1) / np.sqrt(n) if n > 1 else float("nan")
    return LyapunovEstimate(float(v.mean()), float(se), n)


def write_points_csv(points, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for p in points:
            z = complex(p)
            w.writerow([repr(z.real), repr(z.imag)])
