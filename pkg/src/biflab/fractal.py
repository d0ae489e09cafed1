"""Box-counting dimension and the dimension bounds it is compared against."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateCloud, InsufficientPairs

DISTINCT = 1e-10


@dataclass
class PointCloud:
    """Points in R^D with a characteristic size used to seed the scales."""

    points: np.ndarray
    scale_hint: float = None

    def __post_init__(self):
        p = np.asarray(self.points)
        if np.iscomplexobj(p):
            p = np.concatenate([p.real.reshape(len(p), -1), p.imag.reshape(len(p), -1)], axis=1)
        p = np.asarray(p, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        p = p[np.all(np.isfinite(p), axis=1)]
        self.points = p
        if self.scale_hint is None:
            span = np.ptp(p, axis=0).max() if len(p) else 0.0
            self.scale_hint = float(span) if span > 0 else 1.0

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class BoxCountReport:
    """Counts per scale and the fitted slope; ``band`` is slope +- 2 standard errors."""

    slope: float
    r2: float
    scales: tuple
    counts: tuple
    fit_range: tuple
    stderr: float = 0.0

    @property
    def band(self):
        return (self.slope - 2 * self.stderr, self.slope + 2 * self.stderr)

    def to_json(self):
        return {"slope": self.slope, "r2": self.r2, "stderr": self.stderr,
                "band": list(self.band), "scales": list(self.scales),
                "counts": list(self.counts), "fit_range": list(self.fit_range)}


def count_boxes(points, eps, origin=None):
    """Number of grid boxes of side eps that contain a point."""
    origin = points.min(axis=0) if origin is None else origin
    idx = np.floor((points - origin) / eps).astype(np.int64)
    return len(np.unique(idx, axis=0))


def _fit(x, y):
    """Least-squares slope, R^2 and slope standard error."""
    fit = stats.linregress(x, y)
    r2 = fit.rvalue ** 2 if np.ptp(y) > 0 else 0.0
    return fit.slope, r2, fit.stderr


def box_count(cloud, scales=None, min_window=4, tie=0.0):
    """Slope of log N(eps) against -log eps.

    Default scales are dyadic, starting from the cloud's scale hint and
    stopping once half the distinct points sit in their own box.  The fit
    uses the contiguous window of at least `min_window` scales with the
    best R^2; windows within `tie` of the best go to the longer one.
    """
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    pts = cloud.points
    if len(pts) < 2:
        raise DegenerateCloud("need at least two points")
    origin = pts.min(axis=0)
    if scales is None:
        # points equal up to rounding count once
        n_distinct = count_boxes(pts, DISTINCT * cloud.scale_hint, origin)
        scales, counts = [], []
        eps = cloud.scale_hint
        for _ in range(60):
            c = count_boxes(pts, eps, origin)
            if c > n_distinct / 2:
                break
            scales.append(eps)
            counts.append(c)
            eps /= 2
    else:
        scales = sorted((float(s) for s in scales), reverse=True)
        counts = [count_boxes(pts, s, origin) for s in scales]
    if len(scales) < min_window:
        raise DegenerateCloud(f"only {len(scales)} usable scales")
    x = -np.log(np.asarray(scales))
    y = np.log(np.asarray(counts, dtype=float))
    best = None
    for a in range(len(x)):
        for b in range(a + min_window, len(x) + 1):
            s, r2, se = _fit(x[a:b], y[a:b])
            key = (r2, b - a)
            if best is None or r2 > best[0][0] + tie or (r2 > best[0][0] - tie and b - a > best[0][1]):
                best = (key, s, se, (a, b))
    (r2, _), s, se, rng = best
    return BoxCountReport(float(s), float(r2), tuple(scales), tuple(int(c) for c in counts),
                          rng, float(se))


@dataclass(frozen=True)
class MoranBound:
    m: int
    a: float
    A: float
    k: int
    lower_slice: float
    lower_projected: float

    @property
    def vacuous(self):
        return self.lower_projected <= 0


def moran_bounds(m, a, A, k):
    """Lower bounds for slice and projected dimensions (real units).

    Slices of a system of m maps with contraction exponents in [a, A]
    have dimension at least log m / A; the projected intersection set at
    least (a / A) (log m / A) - (2k - 2).
    """
    if m < 2 or not 0 < a <= A or k < 1:
        raise ValueError("need m >= 2, 0 < a <= A and k >= 1")
    lower = np.log(m) / A
    return MoranBound(int(m), float(a), float(A), int(k), float(lower),
                      float(a / A * lower - (2 * k - 2)))


def lyapunov_dimension_bound(chi1, chik, k, d):
    """(chi1 / chik) (k log d / chik) - (2k - 2)."""
    if not 0 < chik <= chi1:
        raise ValueError("need 0 < chik <= chi1")
    return float(chi1 / chik * (k * np.log(d) / chik) - (2 * k - 2))


@dataclass(frozen=True)
class HolderFit:
    exponent: float
    intercept: float
    n_pairs: int
    quantile: float


def holder_fit(pairs, quantile=0.1):
    """Lower-quantile regression of log dst on log src.

    `pairs` is an (n, 2) array of (source distance, target distance).
    """
    from statsmodels.regression.quantile_regression import QuantReg

    pairs = np.asarray(pairs, dtype=float)
    ok = np.all(np.isfinite(pairs), axis=1) & np.all(pairs > 0, axis=1)
    pairs = pairs[ok]
    if len(pairs) < 100:
        raise InsufficientPairs(f"{len(pairs)} usable pairs, need 100")
    x = np.log(pairs[:, 0])
    y = np.log(pairs[:, 1])
    X = np.column_stack([np.ones_like(x), x])
    res = QuantReg(y, X).fit(q=quantile)
    b0, b1 = res.params
    return HolderFit(float(b1), float(b0), len(pairs), quantile)
