"""Counting inverse branches of f^n that return a ball compactly into itself.

Distances are chordal and derivatives spherical.  A branch at depth n is
a backward orbit of the ball center; it keeps the product of reciprocal
spherical derivatives along the way, which to first order is the factor
by which the branch shrinks the ball.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import forms
from .errors import TreeBudgetExceeded
from .sphere import _hom_of, lyapunov, sample_measure

BUDGET = 10 ** 7
SAFETY = 2.0
# a preimage this close to a critical point has no usable inverse branch
CRITICAL_LOG = np.log(1e-12)


@dataclass
class BranchCensus:
    """Returning-branch counts m(n) and per-branch contraction logs.

    ``log_contraction[n]`` holds log of the first-order contraction of
    every returning branch at depth n.
    """

    degree: int
    ball_center: complex
    ball_radius: float
    counts: np.ndarray
    log_contraction: list
    nodes: int
    discarded: int
    mass: float
    root: complex = None

    @property
    def depths(self):
        return np.arange(len(self.counts))

    def slope(self, n_min=4, n_max=None):
        """Least-squares slope and intercept of log m(n) over n_min..n_max."""
        n = self.depths
        n_max = n[-1] if n_max is None else n_max
        keep = (n >= n_min) & (n <= n_max) & (self.counts > 0)
        if keep.sum() < 2:
            return float("nan"), float("nan")
        s, c = np.polyfit(n[keep], np.log(self.counts[keep]), 1)
        return float(s), float(c)

    def contraction_stats(self):
        """Per depth: (n, m, min rate, max rate) with rate = contraction**(1/n)."""
        out = []
        for n, lc in enumerate(self.log_contraction):
            if n == 0 or len(lc) == 0:
                continue
            r = np.exp(lc / n)
            out.append((n, len(lc), float(r.min()), float(r.max())))
        return out

    def to_json(self, n_min=4):
        s, c = self.slope(n_min)
        return {"counts": [[int(n), int(m)] for n, m in zip(self.depths, self.counts)],
                "slope": s, "prefactor": float(np.exp(c)) if np.isfinite(c) else None,
                "ball_center": [self.ball_center.real, self.ball_center.imag],
                "ball_radius": self.ball_radius, "nodes": self.nodes,
                "discarded": self.discarded, "mass": self.mass,
                "root": None if self.root is None else [self.root.real, self.root.imag],
                "contraction": [list(row) for row in self.contraction_stats()]}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def ball_mass(f, center, radius, n=20000, seed=0):
    """Fraction of a measure sample inside the chordal ball."""
    sample = sample_measure(f, seed, n)
    X0, Y0 = _hom_of(center)
    return float(np.mean(forms.chordal(sample.hom[:, 0], sample.hom[:, 1], X0, Y0) < radius))


def _expand(f, X, Y, logc):
    """One level of the tree; drops preimages at critical points."""
    d = f.degree
    RX, RY = forms.form_roots(f.preimage_forms(X, Y))
    RX, RY = RX.ravel(), RY.ravel()
    der = f.log_sphere_derivative(RX, RY)
    ok = np.isfinite(der) & (der > CRITICAL_LOG)
    return RX[ok], RY[ok], np.repeat(logc, d)[ok] - der[ok], int((~ok).sum())


def _tree_root(f, center, radius, n_max):
    """The ball center, or a nearby point whose backward orbit avoids critical points.

    Branches are defined on the whole ball, so any base point inside it
    indexes them; a postcritical center would collapse the tree.
    """
    X0, Y0 = _hom_of(center)
    candidates = [(X0, Y0)]
    tangent = np.array([-np.conj(Y0), np.conj(X0)])
    for k in range(8):
        # a chordal step of radius / 10 in direction k pi / 4
        w = np.array([X0, Y0]) + 0.1 * radius * np.exp(1j * np.pi * k / 4) * tangent
        w = w / np.linalg.norm(w)
        candidates.append((w[0], w[1]))
    for root in candidates:
        X, Y, logc = np.array([root[0]]), np.array([root[1]]), np.zeros(1)
        clean = True
        for _ in range(min(n_max, 6)):
            X, Y, logc, bad = _expand(f, X, Y, logc)
            if bad:
                clean = False
                break
        if clean:
            return root
    return X0, Y0


def branch_census(f, ball_center, ball_radius, n_max, min_mass=0.01, seed=0):
    """Enumerate the preimage tree of the ball center and count returning branches.

    A branch returns at depth n when its endpoint lies in the ball and the
    ball image, of radius SAFETY * radius * contraction, stays inside it.
    Preimages within rounding of a critical point are dropped along with
    their subtrees; if the center itself is postcritical the tree is
    rooted at a nearby point of the ball instead.
    """
    d = f.degree
    total = sum(d ** n for n in range(n_max + 1))
    if total > BUDGET:
        raise TreeBudgetExceeded(f"{total} nodes exceed the budget of {BUDGET}")
    if not 0 < ball_radius < 1:
        raise ValueError("chordal radius must lie in (0, 1)")
    mass = ball_mass(f, ball_center, ball_radius, seed=seed)
    if mass < min_mass:
        raise ValueError(f"ball carries measure {mass:.4f} < {min_mass}")
    X0, Y0 = _hom_of(ball_center)
    root = _tree_root(f, ball_center, ball_radius, n_max)
    X = np.array([root[0]])
    Y = np.array([root[1]])
    logc = np.zeros(1)
    counts = [1]
    logs = [np.zeros(1)]
    nodes = 1
    discarded = 0
    for _ in range(n_max):
        X, Y, logc, bad = _expand(f, X, Y, logc)
        discarded += bad
        nodes += len(X)
        dist = forms.chordal(X, Y, X0, Y0)
        ret = dist + SAFETY * ball_radius * np.exp(logc) < ball_radius
        counts.append(int(ret.sum()))
        logs.append(logc[ret])
    return BranchCensus(d, complex(ball_center), float(ball_radius), np.array(counts),
                        logs, nodes, discarded, mass,
                        complex(forms.from_hom(root[0], root[1])))


def measured_exponent(f, n=100000, seed=0):
    return lyapunov(f, sample_measure(f, seed, n)).value


def contraction_window(census, chi, eps=0.1, n_min=4, share=0.5):
    """Branches obeying exp(-n(chi+eps))/K <= contraction <= K exp(-n chi).

    K is the smallest constant for which, at every depth from n_min on, at
    least `share` of the returning branches obey the window.  Returns K and
    the per-depth counts of obeying branches.
    """
    logK = 0.0
    per = []
    for n, lc in enumerate(census.log_contraction):
        if n < n_min or len(lc) == 0:
            continue
        # excess on either side of the window, in log units
        excess = np.maximum(lc + n * chi, -n * (chi + eps) - lc)
        logK = max(logK, float(np.quantile(excess, share)))
        per.append(n)
    within = [(n, int(np.sum(np.maximum(lc + n * chi, -n * (chi + eps) - lc) <= logK)))
              for n, lc in enumerate(census.log_contraction) if n in per]
    return float(np.exp(logK)), within
