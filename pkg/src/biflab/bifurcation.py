"""The Lyapunov function of a family and its distributional Laplacian.

Over a parameter grid we estimate L(lambda), the Lyapunov exponent of the
maximal-entropy measure of f_lambda, take a 5-point Laplacian and keep the
cells where it rises above the noise.  Two estimators are available:

``critical`` (default)
    the closed formula in terms of the escape rate of the homogeneous lift
    at the critical points, -log d + sum G(c_j) - (2/d) log |Res|.
    Deterministic and accurate to rounding.
``tree``
    average of log |f'| over every depth-n preimage of a fixed point.  It
    needs no critical points and its bias decays like d**-n, but the bias
    is not harmonic in lambda, so over stable regions its Laplacian sits
    well above rounding.  Useful as an independent check of the values.
"""

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import forms
from .errors import OutOfDomain
from .sphere import START_POINT

# per-node rounding level of the critical estimator, which is harmonic in
# lambda wherever the family is stable; rounding is what the Laplacian amplifies
ROUNDING = 1e-12


@dataclass(frozen=True)
class ParameterGrid:
    """Square grid of parameters; node [i, j] sits at re[j] + 1j * im[i]."""

    center: complex
    half_width: float
    resolution: int

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if self.resolution < 3:
            raise ValueError("resolution must be at least 3")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def re(self):
        return self.center.real + np.linspace(-self.half_width, self.half_width, self.resolution)

    @property
    def im(self):
        return self.center.imag + np.linspace(-self.half_width, self.half_width, self.resolution)

    @property
    def spacing(self):
        return 2 * self.half_width / (self.resolution - 1)

    def lambdas(self):
        return self.re[None, :] + 1j * self.im[:, None]

    def nearest(self, lam):
        lam = complex(lam)
        j = int(np.clip(np.rint((lam.real - self.re[0]) / self.spacing), 0, self.resolution - 1))
        i = int(np.clip(np.rint((lam.imag - self.im[0]) / self.spacing), 0, self.resolution - 1))
        return i, j

    def to_json(self):
        return {"center": [self.center.real, self.center.imag],
                "half_width": self.half_width, "resolution": self.resolution}


@dataclass
class BifurcationField:
    grid: ParameterGrid
    L: np.ndarray
    sigma: np.ndarray
    laplacian: np.ndarray
    mask: np.ndarray
    noise_floor: float
    threshold: float
    estimator: str
    info: dict = field(default_factory=dict)

    def rows(self):
        """(i, j, re, im, L, laplacian, mask) for every node."""
        lam = self.grid.lambdas()
        n = self.grid.resolution
        for i in range(n):
            for j in range(n):
                yield (i, j, lam[i, j].real, lam[i, j].imag, self.L[i, j],
                       self.laplacian[i, j], bool(self.mask[i, j]))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("i,j,re,im,L,laplacian,mask\n")
            for i, j, x, y, L, lap, m in self.rows():
                fh.write(f"{i},{j},{x!r},{y!r},{L!r},{lap!r},{int(m)}\n")


# estimators -------------------------------------------------------------

def tree_lyapunov(P, Q, depth, threads=1):
    """Preimage-tree estimate of L for batched maps; returns (L, sigma)."""
    import numba

    from ._kernels import tree_batch

    X0, Y0 = forms.to_hom(START_POINT)
    P = np.ascontiguousarray(P, dtype=complex)
    Q = np.ascontiguousarray(Q, dtype=complex)
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    return tree_batch(P, Q, depth, complex(X0), complex(Y0))


def _escape_rate(P, Q, X, Y, steps):
    """Green function of the homogeneous lift at unit vectors, minus log|v|."""
    d = P.shape[-1] - 1
    G = np.zeros(X.shape)
    w = 1.0
    Pb = P[:, None, :]
    Qb = Q[:, None, :]
    for _ in range(steps):
        w /= d
        A = forms.hom_eval(Pb, X, Y)
        B = forms.hom_eval(Qb, X, Y)
        r = np.sqrt(np.abs(A) ** 2 + np.abs(B) ** 2)
        G += w * np.log(r)
        X, Y = A / r, B / r
    return G


def critical_lyapunov(P, Q, steps=None):
    """Closed-form L for batched maps from their critical orbits."""
    P = np.asarray(P, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    d = P.shape[-1] - 1
    if steps is None:
        steps = int(np.ceil(40 * np.log(10) / np.log(d)))
    J = forms.jacobian_form(P, Q)
    CX, CY = forms.form_roots(J)
    # det DF(v) = kappa * prod_j (c_j ^ v) for unit critical vectors c_j
    best = None
    for vx, vy in ((0.6 + 0.2j, 0.7 - 0.3j), (-0.3 + 0.8j, 0.5 + 0.1j)):
        vx, vy = forms.unit(vx, vy)
        prod = np.prod(CX * vy - CY * vx, axis=1)
        kappa = forms.hom_eval(J, vx, vy) / prod
        if best is None:
            best = (np.abs(prod), kappa)
        else:
            use = np.abs(prod) > best[0]
            best = (np.where(use, np.abs(prod), best[0]), np.where(use, kappa, best[1]))
    kappa = best[1]
    G = _escape_rate(P, Q, CX, CY, steps)
    res = forms.sylvester_resultant(P, Q)
    with np.errstate(divide="ignore"):
        return (-np.log(d) + np.log(np.abs(kappa)) + G.sum(axis=1)
                - 2.0 / d * np.log(np.abs(res)))


def _thread_count(threads):
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get("BIF_LAB_THREADS", "1")))
    except ValueError:
        return 1


def lyapunov_values(P, Q, estimator, mc_samples, threads=1):
    """(L, sigma, info) for batched coefficient arrays."""
    d = P.shape[-1] - 1
    if estimator == "tree":
        depth = max(1, int(np.ceil(np.log(mc_samples) / np.log(d) - 1e-9)))
        L, sd = tree_lyapunov(P, Q, depth, threads)
        return L, sd, {"depth": depth}
    if estimator == "critical":
        L = critical_lyapunov(P, Q)
        return L, np.full_like(L, ROUNDING), {}
    raise ValueError(f"unknown estimator {estimator!r}")


# Laplacian and mask -----------------------------------------------------

def laplacian(L, h):
    """5-point Laplacian; border nodes are NaN."""
    L = np.asarray(L, dtype=float)
    out = np.full(L.shape, np.nan)
    out[1:-1, 1:-1] = (L[2:, 1:-1] + L[:-2, 1:-1] + L[1:-1, 2:] + L[1:-1, :-2]
                       - 4 * L[1:-1, 1:-1]) / h ** 2
    return out


def threshold_mask(lap, noise_floor, rel=0.05, quantile=99):
    """Cells where |laplacian| exceeds both 3 noise floors and a fraction of its p99."""
    a = np.abs(lap)
    vals = a[np.isfinite(a)]
    p = np.percentile(vals, quantile) if len(vals) else 0.0
    thr = max(3 * noise_floor, rel * p)
    with np.errstate(invalid="ignore"):
        mask = np.isfinite(a) & (a > thr)
    return mask, float(thr)


def field_from_values(grid, L, sigma=None, error=0.0, estimator="synthetic", info=None):
    """Build a field from given L values (bypasses the dynamics)."""
    L = np.asarray(L, dtype=float)
    h = grid.spacing
    lap = laplacian(L, h)
    floor = 8 * error / h ** 2
    mask, thr = threshold_mask(lap, floor)
    sigma = np.zeros_like(L) if sigma is None else sigma
    return BifurcationField(grid, L, sigma, lap, mask, floor, thr, estimator, info or {})


def compute_field(family, grid, mc_samples=4096, seed=0, estimator="critical", threads=None):
    """L, its Laplacian and the activity mask of a family over a grid.

    The noise floor combines a control run on the family frozen at the
    grid center with the rounding level of the estimator.
    """
    lam = grid.lambdas()
    if np.any(np.abs(lam - family.center) > family.domain_radius * (1 + 1e-12)):
        raise OutOfDomain("grid leaves the parameter disc of the family")
    n = grid.resolution
    threads = _thread_count(threads)
    P, Q = family.coefficients(lam.ravel())
    L, sd, info = lyapunov_values(P, Q, estimator, mc_samples, threads)
    L = L.reshape(n, n)
    sd = sd.reshape(n, n)
    # control: identical maps at every node give an identical estimate
    Pc, Qc = family.coefficients([grid.center])
    Lc, _, _ = lyapunov_values(Pc, Qc, estimator, mc_samples, 1)
    control = laplacian(np.full((n, n), Lc[0]), grid.spacing)
    control_floor = float(np.nanmedian(np.abs(control)))
    h = grid.spacing
    floor = max(control_floor, 8 * ROUNDING / h ** 2)
    lap = laplacian(L, h)
    mask, thr = threshold_mask(lap, floor)
    info = dict(info, seed=seed, mc_samples=mc_samples, control_floor=control_floor,
                rounding=ROUNDING)
    return BifurcationField(grid, L, sd, lap, mask, floor, float(thr), estimator, info)


# references -------------------------------------------------------------

def mandelbrot_membership(grid, max_iter=15, bailout=2.0):
    """Escape-time classification of z**2 + lambda: True if not escaped."""
    c = grid.lambdas()
    z = np.zeros_like(c)
    alive = np.ones(c.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            z = np.where(alive, z * z + c, z)
            alive &= np.abs(z) <= bailout
    return alive


def mandelbrot_boundary(grid, max_iter=15, bailout=2.0):
    """Cells whose 4-neighbour escape classification differs."""
    inside = mandelbrot_membership(grid, max_iter, bailout)
    b = np.zeros_like(inside)
    b[1:, :] |= inside[1:, :] != inside[:-1, :]
    b[:-1, :] |= inside[1:, :] != inside[:-1, :]
    b[:, 1:] |= inside[:, 1:] != inside[:, :-1]
    b[:, :-1] |= inside[:, 1:] != inside[:, :-1]
    return b


def near_fraction(mask, reference, cells=2):
    """Fraction of mask cells within `cells` (Chebyshev) of a reference cell."""
    if not mask.any():
        return float("nan")
    grown = ndimage.binary_dilation(reference, np.ones((2 * cells + 1,) * 2, dtype=bool))
    return float((mask & grown).sum() / mask.sum())
