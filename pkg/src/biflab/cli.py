"""Command-line entry point: ``bif-lab run|validate <config.json> [--out DIR]``.

``bif-lab lattes --g2 G2 --g3 G3`` prints the Lattes map as JSON.

A config is one JSON document with a mandatory ``kind`` and ``seed``.
Every run writes its outputs plus ``manifest.json`` (config echo, version,
wall time, sha256 of each output).  Failures write ``error.json`` instead
and exit nonzero.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import bifurcation as bf
from . import census as cs
from . import fractal as fr
from . import ifs
from . import plotting
from .errors import BifLabError, ConfigError
from .family import constant_family, quadratic_family
from .lattes import build_lattes, perturbed_family
from .misiurewicz import continue_repelling_cycle, find_misiurewicz
from .sphere import (RationalMap, lyapunov, polynomial_map, power_map,
                     sample_measure)

KINDS = ("lyapunov", "lattes-verify", "bif-field", "misiurewicz", "branch-census",
         "ifs-slice", "ifs-projected", "dimension")


# config parsing -----------------------------------------------------------

def _complex(v, what="value"):
    try:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValueError
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        return complex(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: cannot read {v!r} as a complex number")


def _complex_list(vs, what):
    if not isinstance(vs, list) or not vs:
        raise ConfigError(f"{what}: expected a non-empty list")
    return [_complex(v, what) for v in vs]


def _require(cfg, key, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing key {key!r}" + (f" for {kind}" if kind else ""))
    return cfg[key]


def _positive_int(v, what, upper=None):
    if not isinstance(v, int) or isinstance(v, bool) or v < 1 or (upper and v > upper):
        raise ConfigError(f"{what} must be an integer in [1, {upper or 'inf'}]")
    return v


def parse_map(spec):
    t = _require(spec, "type", "map")
    if t == "power":
        return power_map(_positive_int(_require(spec, "degree"), "degree"))
    if t == "polynomial":
        return polynomial_map(_complex_list(_require(spec, "coefficients"), "coefficients"))
    if t == "rational":
        return RationalMap.from_coefficients(_complex_list(spec.get("num"), "num"),
                                             _complex_list(spec.get("den"), "den"))
    if t == "lattes":
        return build_lattes(_complex(spec.get("g2", 4)), _complex(spec.get("g3", 0)))
    raise ConfigError(f"unknown map type {t!r}")


def parse_family(spec):
    t = _require(spec, "type", "family")
    if t == "quadratic":
        return quadratic_family(float(spec.get("radius", 3.0)))
    if t == "lattes":
        base = build_lattes(_complex(spec.get("g2", 4)), _complex(spec.get("g3", 0)))
        return perturbed_family(base, float(spec.get("radius", 0.1)))
    if t == "constant":
        return constant_family(parse_map(_require(spec, "map")), float(spec.get("radius", 1.0)))
    raise ConfigError(f"unknown family type {t!r}")


def parse_grid(spec, max_resolution=2048):
    res = _positive_int(_require(spec, "resolution", "grid"), "resolution", max_resolution)
    hw = float(_require(spec, "half_width", "grid"))
    if not hw > 0 or res < 3:
        raise ConfigError("grid needs half_width > 0 and resolution >= 3")
    return bf.ParameterGrid(_complex(spec.get("center", 0), "grid center"), hw, res)


def parse_system(spec):
    t = _require(spec, "type", "system")
    if t == "ternary":
        return ifs.ternary_system(float(spec.get("coupling", 0.1)))
    if t == "moving_ratio":
        return ifs.moving_ratio_system(float(_require(spec, "rmin")),
                                       float(spec.get("rmax", 1 / 3)),
                                       float(spec.get("coupling", 0.1)))
    if t == "box":
        return ifs.box_system(float(spec.get("ratio", 0.2)), float(spec.get("spacing", 0.5)),
                              float(spec.get("coupling", 0.05)))
    if t == "explicit":
        return ifs.ContractionSystem.from_json(spec)
    raise ConfigError(f"unknown system type {t!r}")


def parse_hypersurface(spec):
    c = _require(spec, "coeffs", "hypersurface")
    if c and isinstance(c[0], list) and c[0] and isinstance(c[0][0], list):
        coeffs = np.array([[_complex(v) for v in row] for row in c])
    else:
        coeffs = np.array(_complex_list(c, "coeffs"))
    return ifs.Hypersurface(coeffs, float(_require(spec, "r0", "hypersurface")))


def validate(cfg):
    """Parse every referenced object; raises ConfigError on the first problem."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    kind = _require(cfg, "kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    seed = _require(cfg, "seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    if "mc_samples" in cfg:
        _positive_int(cfg["mc_samples"], "mc_samples", 10 ** 8)
    parsed = {}
    try:
        if "map" in cfg:
            parsed["map"] = parse_map(cfg["map"])
        if "family" in cfg:
            parsed["family"] = parse_family(cfg["family"])
        if "grid" in cfg:
            parsed["grid"] = parse_grid(cfg["grid"])
        if "system" in cfg:
            parsed["system"] = parse_system(cfg["system"])
        if "hypersurface" in cfg:
            parsed["hypersurface"] = parse_hypersurface(cfg["hypersurface"])
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc))
    needs = {"lyapunov": ["map"], "bif-field": ["family", "grid"],
             "misiurewicz": ["family", "grid", "cycle", "n_range"],
             "branch-census": ["map", "ball_center", "ball_radius", "n_max"],
             "ifs-slice": ["system", "depth"], "ifs-projected": ["system", "hypersurface", "depth"],
             "dimension": ["family", "radius", "resolutions"]}
    for key in needs.get(kind, []):
        _require(cfg, key, kind)
    if "depth" in cfg:
        _positive_int(cfg["depth"], "depth", 64)
    if "n_max" in cfg:
        _positive_int(cfg["n_max"], "n_max", 30)
    return parsed


# experiments ---------------------------------------------------------------

class Outputs:
    """Collects written files for the manifest."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.colorbars = {}

    def path(self, name):
        self.files.append(name)
        return self.root / name

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def field(self, stem, field):
        field.to_csv(self.path(f"{stem}.csv"))
        self.colorbars[f"{stem}.png"] = list(plotting.render_field(field, self.path(f"{stem}.png")))


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _field_summary(field):
    return {"grid": field.grid.to_json(), "estimator": field.estimator,
            "mask_cells": int(field.mask.sum()), "noise_floor": field.noise_floor,
            "threshold": field.threshold, "L_min": float(np.nanmin(field.L)),
            "L_max": float(np.nanmax(field.L)), "info": field.info}


def run_lyapunov(cfg, parsed, out):
    f = parsed["map"]
    sample = sample_measure(f, cfg["seed"], cfg.get("mc_samples", 100000),
                            burn_in=cfg.get("burn_in", 50))
    est = lyapunov(f, sample)
    report = {"value": est.value, "std_error": est.std_error, "sample_count": est.sample_count,
              "log_degree": float(np.log(f.degree)), "map": f.to_json(),
              "diagnostics": sample.diagnostics}
    out.json("report.json", report)
    v = f.log_sphere_derivative(sample.hom[:, 0], sample.hom[:, 1])
    plotting.plot_running_mean(v, out.path("running_mean.png"), target=est.value)
    if cfg.get("write_samples"):
        sample.to_csv(out.path("samples.csv"))
    return report


def run_lattes_verify(cfg, parsed, out):
    f = build_lattes(_complex(cfg.get("g2", 4)), _complex(cfg.get("g3", 0)))
    sample = sample_measure(f, cfg["seed"], cfg.get("mc_samples", 100000))
    est = lyapunov(f, sample)
    report = {"map": f.to_json(), "semiconjugacy_residual": f.semiconjugacy_residual,
              "periods": [complex(w) for w in f.periods], "lyapunov": est.value,
              "std_error": est.std_error, "target": float(0.5 * np.log(f.degree))}
    if "grid" in parsed:
        grid = parsed["grid"]
        fam = perturbed_family(f, float(cfg.get("family_radius", 2 * grid.half_width)))
        field = bf.compute_field(fam, grid, seed=cfg["seed"],
                                 estimator=cfg.get("estimator", "critical"))
        L0 = bf.critical_lyapunov(*fam.coefficients([fam.center]))[0]
        ok = L0 <= field.L + 3 * (field.sigma + bf.ROUNDING)
        report.update(L_at_center=float(L0), minimal_fraction=float(ok.mean()),
                      field=_field_summary(field))
        out.field("field", field)
    out.json("report.json", report)
    return report


def run_bif_field(cfg, parsed, out):
    fam, grid = parsed["family"], parsed["grid"]
    field = bf.compute_field(fam, grid, cfg.get("mc_samples", 4096), cfg["seed"],
                             estimator=cfg.get("estimator", "critical"))
    report = _field_summary(field)
    if cfg["family"]["type"] == "quadratic":
        ref = bf.mandelbrot_boundary(grid, cfg.get("oracle_max_iter", 15))
        report["oracle"] = {"mask_near_boundary": bf.near_fraction(field.mask, ref),
                            "boundary_near_mask": bf.near_fraction(ref, field.mask),
                            "boundary_cells": int(ref.sum())}
    out.field("field", field)
    out.json("report.json", report)
    return report


def run_misiurewicz(cfg, parsed, out):
    fam, grid = parsed["family"], parsed["grid"]
    cyc = cfg["cycle"]
    period = _positive_int(_require(cyc, "period"), "period", 8)
    cont = continue_repelling_cycle(fam, _complex(_require(cyc, "seed")), period, grid)
    n_range = cfg["n_range"]
    seeds = parse_grid(cfg["seeds"]) if "seeds" in cfg else None
    hits = find_misiurewicz(fam, cont, tuple(n_range) if isinstance(n_range, list) else n_range,
                            seeds=seeds, seed=cfg["seed"])
    report = {"hits": [h.to_json() for h in hits], "count": len(hits),
              "continued_nodes": int((cont.status == 0).sum())}
    with open(out.path("hits.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "n0", "p0", "critical_index", "residual", "lambda_text"])
        for h in hits:
            w.writerow([repr(h.lam.real), repr(h.lam.imag), h.n0, h.p0, h.critical_index,
                        repr(h.residual), h.lam_text])
    background = []
    if cfg.get("mask_check", True):
        field = bf.compute_field(fam, grid, seed=cfg["seed"])
        near = []
        for h in hits:
            mark = np.zeros_like(field.mask)
            mark[grid.nearest(h.lam)] = True
            near.append(bf.near_fraction(mark, field.mask) == 1.0)
        report["within_two_cells_of_mask"] = near
        background = grid.lambdas()[field.mask]
        out.field("field", field)
    plotting.plot_points(background, out.path("hits.png"), marks=[h.lam for h in hits],
                         title="hits over the mask")
    out.json("report.json", report)
    return report


def run_branch_census(cfg, parsed, out):
    f = parsed["map"]
    census = cs.branch_census(f, _complex(cfg["ball_center"]), float(cfg["ball_radius"]),
                              cfg["n_max"], seed=cfg["seed"])
    chi = cs.measured_exponent(f, cfg.get("mc_samples", 100000), cfg["seed"])
    K, within = cs.contraction_window(census, chi, float(cfg.get("eps", 0.1)))
    report = census.to_json()
    report.update(chi=chi, log_degree=float(np.log(f.degree)), K=K, within_window=within)
    out.json("census.json", report)
    plotting.plot_census(census, out.path("census.png"), rate=float(np.log(f.degree)))
    return report


def run_ifs_slice(cfg, parsed, out):
    S = parsed["system"]
    sl = ifs.slice_cantor(S, _complex(cfg.get("lambda", 0), "lambda"), cfg["depth"])
    box = fr.box_count(fr.PointCloud(sl.points))
    bound = fr.moran_bounds(S.m, S.a, S.A, S.k)
    report = {"system": S.to_json(), "depth": cfg["depth"], "box_count": box.to_json(),
              "lower_slice": bound.lower_slice, "tail_bound": sl.tail_bound,
              "separation_constant": sl.separation}
    with open(out.path("slice.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["word"] + [f"{p}{i}" for i in range(S.k) for p in ("re", "im")])
        for word, z in zip(sl.words, sl.points):
            w.writerow(["-".join(map(str, word))] + [repr(v) for c in z for v in (c.real, c.imag)])
    plotting.plot_loglog(box, out.path("loglog.png"), "slice", bound=bound.lower_slice)
    out.json("report.json", report)
    return report


def run_ifs_projected(cfg, parsed, out):
    S, Z = parsed["system"], parsed["hypersurface"]
    P = ifs.projected_intersection_set(S, Z, cfg["depth"])
    box = fr.box_count(fr.PointCloud(P.lams))
    bound = fr.moran_bounds(S.m, S.a, S.A, S.k)
    report = {"system": S.to_json(), "depth": cfg["depth"], "roots": len(P.lams),
              "anomalies": P.anomalies, "box_count": box.to_json(),
              "lower_projected": bound.lower_projected}
    P.to_csv(out.path("projected.csv"))
    plotting.plot_loglog(box, out.path("loglog.png"), "projected set",
                         bound=max(bound.lower_projected, 0.0))
    plotting.plot_points(P.lams, out.path("projected.png"), title="projected set")
    out.json("report.json", report)
    return report


def mask_dimension(field, center, radius):
    """Box-count report of the mask restricted to the disc of `radius` about `center`."""
    lam = field.grid.lambdas()
    pts = lam[field.mask & (np.abs(lam - center) <= radius)]
    if len(pts) < 2:
        return None
    try:
        return fr.box_count(fr.PointCloud(pts))
    except BifLabError:
        return None


def run_dimension(cfg, parsed, out):
    fam = parsed["family"]
    center = _complex(cfg.get("center", fam.center))
    radius = float(cfg["radius"])
    rows = []
    for res in cfg["resolutions"]:
        field = bf.compute_field(fam, bf.ParameterGrid(center, radius, res), seed=cfg["seed"])
        box = mask_dimension(field, center, radius)
        rows.append({"resolution": res, "mask_cells": int(field.mask.sum()),
                     "box_count": None if box is None else box.to_json()})
        if box is not None:
            plotting.plot_loglog(box, out.path(f"loglog_{res}.png"), f"{res} x {res}")
    slopes = [r["box_count"]["slope"] if r["box_count"] else 0.0 for r in rows]
    report = {"rows": rows, "slopes": slopes,
              "nondecreasing": bool(np.all(np.diff(slopes) >= 0))}
    out.json("report.json", report)
    return report


RUNNERS = {"lyapunov": run_lyapunov, "lattes-verify": run_lattes_verify,
           "bif-field": run_bif_field, "misiurewicz": run_misiurewicz,
           "branch-census": run_branch_census, "ifs-slice": run_ifs_slice,
           "ifs-projected": run_ifs_projected, "dimension": run_dimension}


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run(cfg, out_dir):
    """Execute one experiment and write its manifest; returns the manifest."""
    parsed = validate(cfg)
    out = Outputs(out_dir)
    t0 = time.perf_counter()
    RUNNERS[cfg["kind"]](cfg, parsed, out)
    manifest = {"config": cfg, "version": __version__,
                "wall_time": time.perf_counter() - t0,
                "outputs": [{"path": name, "sha256": sha256(out.root / name)}
                            for name in sorted(set(out.files))],
                "colorbars": out.colorbars}
    with open(out.root / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}")


def _fail(exc, out_dir):
    text = json.dumps(exc.to_dict(), sort_keys=True, default=_jsonable)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass
    print(text, file=sys.stderr)
    return 2 if isinstance(exc, ConfigError) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bif-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides the config)")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    p_lat = sub.add_parser("lattes", help="print the degree-4 Lattes map for (g2, g3)")
    p_lat.add_argument("--g2", default="4", help="complex invariant, e.g. 4 or 1+2j")
    p_lat.add_argument("--g3", default="0")
    args = parser.parse_args(argv)
    out_dir = None
    try:
        if args.command == "lattes":
            f = build_lattes(_complex(args.g2, "g2"), _complex(args.g3, "g3"))
            print(json.dumps(f.to_json(), default=_jsonable))
            return 0
        cfg = _load(args.config)
        if args.command == "validate":
            validate(cfg)
            print(json.dumps({"valid": True, "kind": cfg["kind"]}))
            return 0
        out_dir = args.out or cfg.get("output") or f"bif-lab-out/{cfg.get('kind', 'run')}"
        manifest = run(cfg, out_dir)
        print(json.dumps({"manifest": str(Path(out_dir) / "manifest.json"),
                          "outputs": len(manifest["outputs"])}))
        return 0
    except BifLabError as exc:
        return _fail(exc, out_dir)


if __name__ == "__main__":
    sys.exit(main())
