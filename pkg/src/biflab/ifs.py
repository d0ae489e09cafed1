"""Holomorphically moving contractions and the laminations they generate.

Each map has the form G_j(lambda, z) = (lambda, M_j(lambda) z + t_j(lambda))
with z in C^k (k = 1 or 2) and M_j, t_j polynomial in lambda.  A word
omega picks out the graph lambda -> omega(lambda), the limit of the
compositions G_{omega_0} o ... o G_{omega_{p-1}}.  Distances in C^2 use the
max-norm, so the ball B is a polydisc there.
"""

import csv
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree

from .errors import (AnomalyNoIntersection, AxiomViolation, BudgetExceeded,
                     InsufficientPairs, NotProper)

MARGIN = 1e-6
BUDGET = 10 ** 7


def _lambda_samples(radius, n=32):
    t = np.linspace(-radius, radius, n)
    lam = (t[None, :] + 1j * t[:, None]).ravel()
    lam = lam[np.abs(lam) <= radius]
    ring = radius * np.exp(2j * np.pi * np.arange(64) / 64)
    return np.concatenate([lam, ring])


def _poly(c, lam):
    """Evaluate coefficient arrays (..., K) at lam, broadcasting lam last."""
    lam = np.asarray(lam)
    K = c.shape[-1]
    pw = lam[..., None] ** np.arange(K)
    return np.tensordot(pw, c, axes=([-1], [-1])) if lam.ndim == 0 else np.einsum(
        "...k,lk->l...", c.reshape(-1, K), pw).reshape(lam.shape + c.shape[:-1])


def _opnorm(M):
    """Operator norm of (..., k, k) matrices for the norm in use."""
    return np.max(np.sum(np.abs(M), axis=-1), axis=-1)


@dataclass
class ContractionSystem:
    """A certified system of m contractions over the closed unit disc.

    ``lin`` has shape (m, k, k, K) and ``trans`` shape (m, k, K); the last
    axis holds ascending powers of lambda.  ``a`` and ``A`` are the weakest
    and strongest contraction exponents, ``delta`` the smallest gap
    between images of the ball.
    """

    lin: np.ndarray
    trans: np.ndarray
    ball_center: np.ndarray
    ball_radius: float
    a: float = None
    A: float = None
    delta: float = None
    lam_radius: float = 1.0

    def __post_init__(self):
        self.lin = np.asarray(self.lin, dtype=complex)
        self.trans = np.asarray(self.trans, dtype=complex)
        if self.lin.ndim == 3:
            self.lin = self.lin[..., None]
        if self.trans.ndim == 2:
            self.trans = self.trans[..., None]
        K = max(self.lin.shape[-1], self.trans.shape[-1])
        self.lin = np.pad(self.lin, [(0, 0)] * 3 + [(0, K - self.lin.shape[-1])])
        self.trans = np.pad(self.trans, [(0, 0)] * 2 + [(0, K - self.trans.shape[-1])])
        self.ball_center = np.atleast_1d(np.asarray(self.ball_center, dtype=complex))
        if self.k not in (1, 2) or self.ball_center.shape != (self.k,):
            raise ValueError("k must be 1 or 2 and match the ball center")
        if self.m < 2:
            raise ValueError("need at least two maps")
        self._certify()

    @property
    def m(self):
        return self.lin.shape[0]

    @property
    def k(self):
        return self.lin.shape[1]

    @property
    def diameter(self):
        return 2 * self.ball_radius

    def matrices(self, lam):
        """M_j(lambda) with shape lam.shape + (m, k, k)."""
        pw = np.asarray(lam)[..., None] ** np.arange(self.lin.shape[-1])
        return np.einsum("...q,mijq->...mij", pw, self.lin)

    def translations(self, lam):
        pw = np.asarray(lam)[..., None] ** np.arange(self.trans.shape[-1])
        return np.einsum("...q,miq->...mi", pw, self.trans)

    def matrix_derivatives(self, lam):
        K = self.lin.shape[-1]
        q = np.arange(1, K)
        pw = np.asarray(lam)[..., None] ** (q - 1) * q
        return (np.einsum("...q,mijq->...mij", pw, self.lin[..., 1:]),
                np.einsum("...q,miq->...mi", pw, self.trans[..., 1:]))

    def _certify(self):
        lam = _lambda_samples(self.lam_radius)
        M = self.matrices(lam)
        t = self.translations(lam)
        c = self.ball_center
        R = self.ball_radius
        upper = _opnorm(M)
        worst = np.unravel_index(np.argmax(upper), upper.shape)
        if not upper.max() < 1 - MARGIN:
            raise AxiomViolation("a map fails to contract", axiom=3,
                                 witness={"lambda": str(lam[worst[0]]), "map": int(worst[1])})
        try:
            inv = np.linalg.inv(M)
        except np.linalg.LinAlgError:
            raise AxiomViolation("a map is singular", axiom=3)
        lower = 1 / _opnorm(inv)
        self.a = float(-np.log(upper.max()))
        self.A = float(-np.log(lower.min()))
        # image of the ball: a ball about o_j with per-coordinate radii rho_j
        o = np.einsum("lmij,j->lmi", M, c) + t
        rho = R * np.sum(np.abs(M), axis=-1)
        reach = np.abs(o - c) + rho
        if not reach.max() < R - MARGIN:
            l, j, _ = np.unravel_index(np.argmax(reach), reach.shape)
            raise AxiomViolation("an image leaves the ball", axiom=1,
                                 witness={"lambda": str(lam[l]), "map": int(j)})
        gap = np.inf
        for j, q in combinations(range(self.m), 2):
            g = np.max(np.abs(o[:, j] - o[:, q]) - rho[:, j] - rho[:, q], axis=-1)
            if g.min() < gap:
                gap = g.min()
                pair = (j, q, lam[np.argmin(g)])
        if not gap > MARGIN:
            raise AxiomViolation("two images overlap", axiom=2,
                                 witness={"maps": [int(pair[0]), int(pair[1])], "lambda": str(pair[2])})
        self.delta = float(gap)

    def to_json(self):
        pairs = lambda a: np.stack([a.real, a.imag], axis=-1).tolist()
        return {"k": self.k, "m": self.m, "a": self.a, "A": self.A, "delta": self.delta,
                "lin": pairs(self.lin), "trans": pairs(self.trans),
                "ball_center": pairs(self.ball_center), "ball_radius": self.ball_radius,
                "lam_radius": self.lam_radius}

    @classmethod
    def from_json(cls, data):
        cx = lambda a: np.asarray(a, dtype=float) @ np.array([1, 1j])
        return cls(cx(data["lin"]), cx(data["trans"]), cx(data["ball_center"]),
                   float(data["ball_radius"]), lam_radius=float(data.get("lam_radius", 1.0)))


def compose_word(system, word, lam, z0=None):
    """G_{w_0} o ... o G_{w_{p-1}} applied to z0 (default: the ball center)."""
    M = system.matrices(lam)
    t = system.translations(lam)
    z = system.ball_center.copy() if z0 is None else np.atleast_1d(np.asarray(z0, dtype=complex))
    for j in reversed(list(word)):
        z = M[j] @ z + t[j]
    return z


@dataclass(frozen=True)
class GraphPoint:
    value: np.ndarray
    error_bound: float


def graph_point(system, word, lam, p=None):
    """omega(lambda) from the first p letters, with a tail bound."""
    word = list(word)
    p = len(word) if p is None else p
    if p > len(word):
        raise ValueError("depth exceeds word length")
    z = compose_word(system, word[:p], lam)
    return GraphPoint(z, float(np.exp(-p * system.a) * system.diameter))


def _all_words(m, p):
    if float(m) ** p > BUDGET:
        raise BudgetExceeded(f"{m}**{p} words exceed the budget of {BUDGET}")
    idx = np.arange(m ** p)
    return np.stack([(idx // m ** (p - 1 - q)) % m for q in range(p)], axis=1)


def _graph_points(system, words, lam):
    """Points of many words at one or many parameters (lanes along axis 0)."""
    return _graph_points_der(system, words, lam, derivative=False)[0]


def _graph_points_der(system, words, lam, derivative=True):
    """Graph points and their lambda-derivatives, one parameter per lane."""
    lam = np.broadcast_to(np.asarray(lam, dtype=complex), (len(words),))
    K = system.lin.shape[-1]
    pw = lam[:, None] ** np.arange(K)
    dpw = np.zeros_like(pw)
    dpw[:, 1:] = pw[:, :-1] * np.arange(1, K)
    z = np.broadcast_to(system.ball_center, (len(words), system.k)).copy()
    dz = np.zeros_like(z)
    for q in range(words.shape[1] - 1, -1, -1):
        j = words[:, q]
        lin, trans = system.lin[j], system.trans[j]
        Mj = np.einsum("lq,lijq->lij", pw, lin)
        if derivative:
            dz = (np.einsum("lq,lijq,lj->li", dpw, lin, z) + np.einsum("lij,lj->li", Mj, dz)
                  + np.einsum("lq,liq->li", dpw, trans))
        z = np.einsum("lij,lj->li", Mj, z) + np.einsum("lq,liq->li", pw, trans)
    return z, dz


@dataclass
class SliceSet:
    """All depth-p graph points at one parameter."""

    words: np.ndarray
    points: np.ndarray
    tail_bound: float
    separation: float


def slice_cantor(system, lam, p):
    """Depth-p approximation of the slice of the lamination at lam.

    ``separation`` is the constant C in min distance >= C exp(-p A).
    """
    words = _all_words(system.m, p)
    pts = _graph_points(system, words, lam)
    real = np.concatenate([pts.real, pts.imag], axis=1)
    dist, _ = cKDTree(real).query(real, k=2)
    nn = dist[:, 1].min()
    return SliceSet(words, pts, float(np.exp(-p * system.a) * system.diameter),
                    float(nn * np.exp(p * system.A)))


def _norm(v):
    return np.max(np.abs(v), axis=-1)


def holonomy_pairs(system, lam_src, lam_dst, p, pair_budget=2000, seed=0):
    """Distances between random pairs of graphs at two parameters.

    Pairs first disagree at a uniformly drawn letter, so the distances
    spread over all scales; pairs closer than ten tail bounds are dropped.
    Returns an (n, 2) array of (distance at lam_src, distance at lam_dst).
    """
    rng = np.random.default_rng(seed)
    m = system.m
    w1 = rng.integers(0, m, size=(pair_budget, p))
    w2 = rng.integers(0, m, size=(pair_budget, p))
    split = rng.integers(0, p, size=pair_budget)
    cols = np.arange(p)
    w2 = np.where(cols[None, :] < split[:, None], w1, w2)
    rows = np.arange(pair_budget)
    w2[rows, split] = (w1[rows, split] + rng.integers(1, m, size=pair_budget)) % m
    tail = np.exp(-p * system.a) * system.diameter
    out = []
    for lam in (lam_src, lam_dst):
        z1 = _graph_points(system, w1, lam)
        z2 = _graph_points(system, w2, lam)
        out.append(_norm(z1 - z2))
    pairs = np.stack(out, axis=1)
    pairs = pairs[np.all(pairs > 10 * tail, axis=1)]
    if len(pairs) < 100:
        raise InsufficientPairs(f"only {len(pairs)} pairs above the tail bound")
    return pairs


@dataclass
class Hypersurface:
    """Z = {z_1 = phi(lambda, z_2)}; for k = 1, Z = {z = phi(lambda)}.

    ``coeffs[a]`` (k = 1) or ``coeffs[a, b]`` (k = 2) multiplies
    lambda**a z_2**b.  Z is assumed proper over the disc of radius r0.
    """

    coeffs: np.ndarray
    r0: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        self.coeffs = c
        if not 0 < self.r0 < 1:
            raise ValueError("r0 must lie in (0, 1)")

    def evaluate(self, lam, z2=0j):
        """phi and its partial derivatives in lambda and z_2."""
        lam = np.asarray(lam, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        A, B = self.coeffs.shape
        la = lam[..., None] ** np.arange(A)
        zb = z2[..., None] ** np.arange(B)
        dla = np.concatenate([np.zeros(lam.shape + (1,)), la[..., :-1] * np.arange(1, A)], axis=-1)
        dzb = np.concatenate([np.zeros(z2.shape + (1,)), zb[..., :-1] * np.arange(1, B)], axis=-1)
        f = np.einsum("...a,ab,...b->...", la, self.coeffs, zb)
        fl = np.einsum("...a,ab,...b->...", dla, self.coeffs, zb)
        fz = np.einsum("...a,ab,...b->...", la, self.coeffs, dzb)
        return f, fl, fz


def check_proper(system, Z, samples=24):
    """Raise NotProper unless no point of Z over r0 <= |lambda| <= 1 meets the ball."""
    r = np.linspace(Z.r0, system.lam_radius, samples)
    th = np.exp(2j * np.pi * np.arange(4 * samples) / (4 * samples))
    lam = (r[:, None] * th[None, :]).ravel()
    c = system.ball_center
    R = system.ball_radius
    if system.k == 1:
        f, _, _ = Z.evaluate(lam)
        dist = np.abs(f - c[0])
    else:
        t = np.linspace(-R, R, samples)
        z2 = (t[:, None] + 1j * t[None, :]).ravel()
        z2 = c[1] + z2[np.abs(z2) <= R]
        f, _, _ = Z.evaluate(lam[:, None], z2[None, :])
        dist = np.min(np.abs(f - c[0]), axis=1)
    if not dist.min() > R:
        l = int(np.argmin(dist))
        raise NotProper(f"Z meets the ball over lambda = {lam[l]:.4g}, outside radius {Z.r0}")


def _mismatch(system, Z, words, lam):
    z, dz = _graph_points_der(system, words, lam)
    if system.k == 1:
        f, fl, _ = Z.evaluate(lam)
        return z[:, 0] - f, dz[:, 0] - fl
    f, fl, fz = Z.evaluate(lam, z[:, 1])
    return z[:, 0] - f, dz[:, 0] - fl - fz * dz[:, 1]


def _solve(system, Z, words, seeds, iters=40):
    """Newton from each seed for each word; returns roots (words, seeds)."""
    W, S = len(words), len(seeds)
    ww = np.repeat(words, S, axis=0)
    lam = np.tile(seeds, W).astype(complex)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            h, dh = _mismatch(system, Z, ww, lam)
            step = np.where(np.isfinite(h / dh), h / dh, 0)
            lam = lam - step
            lam = np.where(np.abs(lam) < 2 * system.lam_radius, lam, np.nan)
            if np.all(np.abs(step) < 1e-15):
                break
        h, _ = _mismatch(system, Z, ww, np.nan_to_num(lam))
    ok = np.isfinite(lam) & (np.abs(h) < 1e-10) & (np.abs(lam) < Z.r0)
    return np.where(ok, lam, np.nan).reshape(W, S)


def _seeds(r0, ring=64, grid=8):
    t = np.linspace(-r0, r0, grid + 2)[1:-1]
    inner = (t[:, None] + 1j * t[None, :]).ravel()
    return np.concatenate([0.999 * r0 * np.exp(2j * np.pi * np.arange(ring) / ring), inner])


def _unique(roots, tol=1e-10):
    out = []
    for r in roots[np.isfinite(roots)]:
        if all(abs(r - q) > tol for q in out):
            out.append(complex(r))
    return out


def graph_hypersurface_intersection(system, word, Z, p=None):
    """Parameters in the disc of radius r0 where omega(lambda) lies on Z."""
    word = np.asarray(list(word))
    p = len(word) if p is None else p
    roots = _solve(system, Z, word[None, :p], _seeds(Z.r0))
    found = _unique(roots[0])
    if not found:
        raise AnomalyNoIntersection(f"no intersection found for word {word[:p].tolist()}")
    return found


@dataclass
class ProjectedSet:
    """Roots of all depth-p words; ``words`` indexes the owning word."""

    lams: np.ndarray
    words: np.ndarray
    anomalies: int
    depth: int
    m: int

    def to_csv(self, path):
        digits = _all_words(self.m, self.depth)[self.words] if len(self.words) else []
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["word", "re", "im"])
            for word, lam in zip(digits, self.lams):
                w.writerow(["".join(map(str, word)) if self.m <= 10 else "-".join(map(str, word)),
                            repr(lam.real), repr(lam.imag)])


def projected_intersection_set(system, Z, p, chunk=1 << 14):
    """Parameters where some depth-p graph meets Z.

    Each word is solved from a few seeds first; words without a root are
    retried from the full seed set and counted as anomalies if that fails.
    """
    check_proper(system, Z)
    words = _all_words(system.m, p)
    quick = _seeds(Z.r0, ring=8, grid=1)
    lams, owners, anomalies = [], [], 0
    for s in range(0, len(words), chunk):
        W = words[s:s + chunk]
        roots = _solve(system, Z, W, quick)
        for q in range(len(W)):
            found = _unique(roots[q])
            if not found:
                try:
                    found = graph_hypersurface_intersection(system, W[q], Z)
                except AnomalyNoIntersection:
                    anomalies += 1
                    continue
            lams.extend(found)
            owners.extend([s + q] * len(found))
    return ProjectedSet(np.array(lams, dtype=complex), np.array(owners, dtype=np.int64),
                        anomalies, p, system.m)


# example systems ---------------------------------------------------------

def ternary_system(coupling=0.1):
    """z/3 and z/3 + 2/3 + coupling * lambda over the disc |z - 1/2| < 0.7."""
    lin = np.full((2, 1, 1, 1), 1 / 3, dtype=complex)
    trans = np.array([[[0, 0]], [[2 / 3, coupling]]], dtype=complex)
    return ContractionSystem(lin, trans, [0.5], 0.7)


def moving_ratio_system(rmin, rmax=1 / 3, coupling=0.1):
    """Two maps sharing the ratio c (1 + s lambda), ranging over [rmin, rmax].

    The contraction exponents are then exactly a = -log rmax and
    A = -log rmin, so a / A is set by the two ratios.
    """
    if not 0 < rmin <= rmax <= 1 / 3:
        raise ValueError("need 0 < rmin <= rmax <= 1/3")
    c = (rmax + rmin) / 2
    s = (rmax - rmin) / (rmax + rmin)
    lin = np.array([[[[c, c * s]]], [[[c, c * s]]]], dtype=complex)
    trans = np.array([[[0, 0]], [[2 / 3, coupling]]], dtype=complex)
    return ContractionSystem(lin, trans, [0.5], 0.7)


def box_system(ratio=0.2, spacing=0.5, coupling=0.05):
    """81 maps ratio * z + t on C^2, t on a 3x3x3x3 grid of real and imaginary parts.

    The first coordinate of every translation moves by coupling * lambda.
    The ball is the unit polydisc.
    """
    g = spacing * np.array([-1, 0, 1])
    grid = np.array(np.meshgrid(g, g, g, g, indexing="ij")).reshape(4, -1).T
    m = len(grid)
    lin = np.zeros((m, 2, 2, 1), dtype=complex)
    lin[:, 0, 0, 0] = lin[:, 1, 1, 0] = ratio
    trans = np.zeros((m, 2, 2), dtype=complex)
    trans[:, 0, 0] = grid[:, 0] + 1j * grid[:, 1]
    trans[:, 1, 0] = grid[:, 2] + 1j * grid[:, 3]
    trans[:, 0, 1] = coupling
    return ContractionSystem(lin, trans, [0, 0], 1.0)
