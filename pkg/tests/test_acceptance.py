"""Acceptance criteria, one check per criterion.

Each check returns (passed, detail).  Under pytest every criterion is a
test and a PASS/FAIL line per criterion is printed in the summary; run as
a script it prints the same lines.
"""

import sys
import time

import numpy as np
import pytest

from biflab.bifurcation import (ParameterGrid, compute_field, critical_lyapunov, laplacian,
                                mandelbrot_boundary, near_fraction)
from biflab.census import branch_census, contraction_window, measured_exponent
from biflab.cli import mask_dimension
from biflab.family import quadratic_family
from biflab.fractal import PointCloud, box_count, holder_fit, moran_bounds
from biflab.ifs import (Hypersurface, box_system, holonomy_pairs, moving_ratio_system,
                        projected_intersection_set, slice_cantor, ternary_system)
from biflab.lattes import build_lattes, perturbed_family
from biflab.misiurewicz import continue_repelling_cycle, find_misiurewicz
from biflab.sphere import lyapunov, polynomial_map, power_map, sample_measure

LN2 = np.log(2)
CRITERIA = {}


def criterion(number, title):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn
    return register


def timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


@criterion(1, "Lyapunov oracle for z^d")
def check_power_maps():
    ok, parts = True, []
    for d in (2, 3, 4):
        f = power_map(d)
        est, secs = timed(lambda: lyapunov(f, sample_measure(f, 0, 10 ** 6)))
        err = abs(est.value - np.log(d))
        ok &= err < 1e-3 and secs < 30
        parts.append(f"d={d} err={err:.1e} {secs:.1f}s")
    return ok, ", ".join(parts)


@criterion(2, "Lattes exponent is minimal in its family")
def check_lattes_minimality():
    t0 = time.perf_counter()
    f = build_lattes(4, 0)
    L = lyapunov(f, sample_measure(f, 0, 10 ** 6)).value
    fam = perturbed_family(f, 0.1)
    field = compute_field(fam, ParameterGrid(0, 0.05, 64), seed=0)
    L0 = critical_lyapunov(*fam.coefficients([fam.center]))[0]
    share = float(np.mean(L0 <= field.L + 3 * field.sigma))
    secs = time.perf_counter() - t0
    ok = abs(L - LN2) < 0.01 and share >= 0.99 and secs < 1200
    return ok, f"L={L:.5f}, L(0)={L0:.6f}, minimal at {share:.1%} of nodes, {secs:.0f}s"


@criterion(3, "bifurcation mask against the Mandelbrot boundary")
def check_quadratic_mask():
    grid = ParameterGrid(-0.7, 1.5, 256)
    field, secs = timed(compute_field, quadratic_family(), grid, seed=0)
    share = near_fraction(field.mask, mandelbrot_boundary(grid))
    return share >= 0.85 and secs < 1800, f"{share:.1%} of mask cells near the oracle, {secs:.0f}s"


@criterion(4, "Misiurewicz parameters -2 and i")
def check_misiurewicz_recovery():
    fam = quadratic_family()
    grid = ParameterGrid(-0.7, 1.5, 256)
    seeds = ParameterGrid(-0.7, 1.5, 64)
    hits = find_misiurewicz(fam, continue_repelling_cycle(fam, 2.0, 1, grid), (1, 3), seeds=seeds)
    hits += find_misiurewicz(fam, continue_repelling_cycle(fam, -0.5 + 0.22j, 2, grid), (1, 4),
                             seeds=seeds)
    field = compute_field(fam, grid, seed=0)
    found = []
    for target in (-2, 1j):
        best = min(hits, key=lambda h: abs(h.lam - target))
        found.append(abs(best.lam - target) < 1e-10 and best.residual < 1e-8)
    marks = np.zeros_like(field.mask)
    for h in hits:
        marks[grid.nearest(h.lam)] = True
    near = near_fraction(marks, field.mask)
    return all(found) and near == 1.0, (f"-2 found: {found[0]}, i found: {found[1]}, "
                                        f"{len(hits)} hits, {near:.0%} within two cells of the mask")


@criterion(5, "Misiurewicz avalanche at the Lattes map")
def check_avalanche():
    fam = perturbed_family(build_lattes(4, 0), 0.1)
    grid = ParameterGrid(0, 0.05, 16)
    # the repelling fixed point near 1.4679, multiplier -2
    cyc = continue_repelling_cycle(fam, 1.4678898250138706, 1, grid)
    best = []
    for n in range(5, 41):
        hits = find_misiurewicz(fam, cyc, n)
        best.append(min((abs(h.lam) for h in hits), default=np.inf))
    best = np.array(best)
    ok = bool(np.all(np.diff(best) < 0)) and best[-1] < 1e-2
    return ok, f"smallest |lambda| {best[0]:.2e} at n=5 to {best[-1]:.2e} at n=40"


@criterion(6, "returning-branch census")
def check_census():
    ok, parts = True, []
    for name, f, center in (("z^2", power_map(2), 1.0), ("z^2-2", polynomial_map([-2, 0, 1]), 2.0)):
        census = branch_census(f, center, 0.2, 12)
        slope, _ = census.slope(4, 12)
        chi = measured_exponent(f)
        # K fitted on depths 4..8 must keep describing depths 9..12
        K, _ = contraction_window(branch_census(f, center, 0.2, 8), chi)
        shares = []
        for n in range(9, 13):
            lc = census.log_contraction[n]
            inside = (lc <= np.log(K) - n * chi) & (lc >= -n * (chi + 0.1) - np.log(K))
            shares.append(inside.mean())
        good = abs(slope - LN2) < 0.15 * LN2 and min(shares) >= 0.5
        ok &= good
        parts.append(f"{name}: slope {slope:.3f}, K={K:.2f}, window share >= {min(shares):.2f}")
    return ok, "; ".join(parts)


@criterion(7, "Moran slice bound")
def check_slice():
    t0 = time.perf_counter()
    ternary = box_count(PointCloud(slice_cantor(ternary_system(), 0.3, 12).points[:, 0])).slope
    ok = abs(ternary - np.log(2) / np.log(3)) <= 0.05
    parts = [f"ternary {ternary:.3f}"]
    for name, S, p in (("moving ratio", moving_ratio_system(1 / 9), 14),
                       ("box", box_system(), 3)):
        sl = slice_cantor(S, 0.3, p)
        slope = box_count(PointCloud(sl.points)).slope
        bound = moran_bounds(S.m, S.a, S.A, S.k).lower_slice
        ok &= slope >= bound - 0.1
        parts.append(f"{name} {slope:.3f} vs bound {bound:.3f}")
    secs = time.perf_counter() - t0
    return ok and secs < 300, ", ".join(parts) + f", {secs:.0f}s"


@criterion(8, "projected intersection bound")
def check_projected():
    t0 = time.perf_counter()
    S1 = ternary_system()
    P1 = projected_intersection_set(S1, Hypersurface([0.5, 1], 0.75), 11)
    s1 = box_count(PointCloud(P1.lams)).slope
    S2 = box_system()
    P2 = projected_intersection_set(S2, Hypersurface([[0, 0.1], [2, 0]], 0.6), 3)
    s2 = box_count(PointCloud(P2.lams)).slope
    b2 = moran_bounds(S2.m, S2.a, S2.A, 2).lower_projected
    secs = time.perf_counter() - t0
    ok = s1 >= np.log(2) / np.log(3) - 0.1 and s2 >= b2 - 0.15 and secs < 900
    return ok, f"k=1 slope {s1:.3f}, k=2 slope {s2:.3f} vs bound {b2:.3f}, {secs:.0f}s"


@criterion(9, "Holder holonomy")
def check_holder():
    ok, parts = True, []
    for target in (1.0, 0.7, 0.5):
        S = moving_ratio_system(3.0 ** (-1 / target))
        fit = holder_fit(holonomy_pairs(S, 0, 0.5, 12))
        ok &= fit.exponent >= S.a / S.A - 0.1
        parts.append(f"a/A={S.a / S.A:.2f}: {fit.exponent:.3f}")
    return ok, ", ".join(parts)


@criterion(10, "mask box-count slope near the Lattes parameter")
def check_mask_dimension():
    fam = perturbed_family(build_lattes(4, 0), 0.1)
    slopes = []
    for res in (128, 256, 512):
        box = mask_dimension(compute_field(fam, ParameterGrid(0, 0.05, res), seed=0), 0, 0.05)
        slopes.append(0.0 if box is None else box.slope)
    # baseline: the disc |lambda| < 0.05 lies in the main cardioid of z^2 + lambda
    grid = ParameterGrid(0, 0.05, 512)
    lam = grid.lambdas()
    attracting = np.all(np.abs(1 - np.sqrt(1 - 4 * lam)) < 1)
    base = mask_dimension(compute_field(quadratic_family(), grid, seed=0), 0, 0.05)
    base = 0.0 if base is None else base.slope
    ok = slopes[-1] >= 1.2 and bool(np.all(np.diff(slopes) >= 0)) and attracting and base <= 0.5
    return ok, f"slopes {', '.join(f'{s:.3f}' for s in slopes)}; hyperbolic baseline {base:.3f}"


@criterion(11, "numerical Laplacian")
def check_laplacian():
    g = ParameterGrid(0.3 - 0.2j, 1.0, 65)
    lam = g.lambdas()
    # the 5-point stencil is exact on harmonic cubics
    harmonic = laplacian((lam ** 3 - 2j * lam ** 2 + 2 * lam).real + 0.5, g.spacing)
    square = laplacian(np.abs(lam) ** 2, g.spacing)
    e1 = np.max(np.abs(harmonic[1:-1, 1:-1]))
    e2 = np.max(np.abs(square[1:-1, 1:-1] - 4))
    return e1 < 1e-6 and e2 < 1e-6, f"harmonic max {e1:.1e}, |lambda|^2 error {e2:.1e}"


def run(number):
    title, fn = CRITERIA[number]
    passed, detail = fn()
    return passed, f"{'PASS' if passed else 'FAIL'} {number}: {title} ({detail})"


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    passed, line = run(number)
    acceptance_log.append(line)
    print(line)
    assert passed, line


if __name__ == "__main__":
    results = [run(n) for n in (map(int, sys.argv[1:]) if len(sys.argv) > 1 else sorted(CRITERIA))]
    for _, line in results:
        print(line, flush=True)
    sys.exit(0 if all(p for p, _ in results) else 1)
