"""Command-line front end.

Subcommands map one-to-one onto the library's workflows:

    eigen           linearization spectrum and classification at given (eps, A)
    manifold        build the stable/unstable series pair, write them as JSON
    homoclinic      find homoclinic intersections for one parameter cell
    scan            grid search over epsilon and A lists
    transversality  tangency-determinant sweep over an A window + quartic fit
    soliton         build the lattice profile of the best homoclinic point
    portrait        forward orbits of the 2-d map from a seed grid

Every JSON artifact embeds the package version and the resolved run
configuration, so outputs are self-describing and reproducible.  Exit codes:
0 success, 2 configuration/usage error (including parameter domains where
the construction is undefined), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .homoclinic import (
    MatchFailure,
    det_curve_fit,
    multistart_search,
    scan_parameters,
    symmetric_search,
    transversality_det,
)
from .manifold import (
    GaugeError,
    ResonanceError,
    SeriesOverflowError,
    compute_manifold_pair,
    conjugacy_residual,
    series_to_dict,
)
from .maps import ModelParams
from .soliton import ProfileError, build_profile, mirror_defect, portrait_2d
from .spectral import (
    ALL_REAL,
    CRITICAL_A,
    NonHyperbolicError,
    characteristic_poly,
    classify_eigenvalues,
    discriminant,
    solve_reciprocal_quartic,
)

DEFAULT_TRANSVERSALITY_EPS = 2e-4
DEFAULT_TRANSVERSALITY_WINDOW = (-0.145, -0.115, 13)
PORTRAIT_STEPS = 10000

# accept "-0.125,0" and "-1e-4" as flag values, not option names
_NEG_VALUE = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?(,.*)?$")


class UsageError(Exception):
    """Bad flags or parameter domain; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one invocation, embedded in every artifact."""

    command: str
    epsilon: tuple
    A: tuple
    order: int
    threshold: float
    box: str
    seeds: int
    workers: int
    out: str


def _float_list(text):
    try:
        return tuple(float(tok) for tok in str(text).split(",") if tok != "")
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_json(path, payload, cfg):
    body = {"version": __version__, "config": asdict(cfg)}
    body.update(payload)
    with open(path, "w") as fh:
        json.dump(_jsonable(body), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="dnls-nnn",
        description="manifolds, homoclinic points, and solitons of a "
                    "4-d lattice map",
    )
    ap._negative_number_matcher = _NEG_VALUE
    ap.add_argument("--version", action="version",
                    version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    names = ("eigen", "manifold", "homoclinic", "scan", "transversality",
             "soliton", "portrait")
    for name in names:
        sp = sub.add_parser(name)
        sp._negative_number_matcher = _NEG_VALUE
        sp.add_argument("--epsilon", type=str, default=None,
                        help="coupling value (comma list where applicable)")
        sp.add_argument("--A", type=str, default=None,
                        help="second-neighbor weight (comma list for scans)")
        sp.add_argument("--order", type=int, default=None,
                        help="series truncation order (default 80)")
        sp.add_argument("--threshold", type=float, default=None,
                        help="matching residual threshold (default 1e-10)")
        sp.add_argument("--box", type=str, default=None,
                        help="manifold-family: explicit gauge pair 'g1,g2'; "
                             "portrait: seed half-width")
        sp.add_argument("--seeds", type=int, default=None,
                        help="seed-grid points per axis")
        sp.add_argument("--out", type=str, default=None,
                        help="output directory (default .)")
        sp.add_argument("--workers", type=int, default=None,
                        help="process count for scans")
        sp.add_argument("--config", type=str, default=None,
                        help="JSON file with defaults for any flag")
    return ap


def _resolve(args):
    """Merge config-file values under explicit flags and apply defaults."""
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")

    def pick(name, fallback):
        flag = getattr(args, name)
        if flag is not None:
            return flag
        if name in file_cfg and file_cfg[name] is not None:
            return file_cfg[name]
        return fallback

    cmd = args.command
    if cmd == "transversality":
        eps_default = str(DEFAULT_TRANSVERSALITY_EPS)
        lo, hi, k = DEFAULT_TRANSVERSALITY_WINDOW
        A_default = ",".join(repr(a) for a in np.linspace(lo, hi, k))
    elif cmd == "portrait":
        eps_default, A_default = "-0.1,0.1", ""
    else:
        eps_default, A_default = None, None
    eps_raw = pick("epsilon", eps_default)
    if cmd == "portrait":
        # the 2-d map has no A; only an explicit flag (a likely mistake)
        # is surfaced, a shared config file's A entry is ignored
        A_raw = args.A if args.A is not None else A_default
    else:
        A_raw = pick("A", A_default)
    if eps_raw is None:
        raise UsageError(f"{cmd} requires --epsilon")
    if A_raw is None and cmd != "portrait":
        raise UsageError(f"{cmd} requires --A")
    epsilon = _float_list(eps_raw)
    A = _float_list(A_raw) if A_raw is not None else ()
    if not epsilon:
        raise UsageError("--epsilon list is empty")
    if not A and cmd != "portrait":
        raise UsageError("--A list is empty")
    order = int(pick("order", 80))
    if order < 1:
        raise UsageError("--order must be at least 1")
    if order == 1:
        print("warning: order 1 keeps only the degenerate linear series",
              file=sys.stderr)
    seeds_default = 21 if cmd in ("homoclinic", "scan") else 11
    cfg = RunConfig(
        command=cmd,
        epsilon=epsilon,
        A=A,
        order=order,
        threshold=float(pick("threshold", 1e-10)),
        box=str(pick("box", "")),
        seeds=int(pick("seeds", seeds_default)),
        workers=int(pick("workers", 0)),
        out=str(pick("out", ".")),
    )
    if cfg.threshold <= 0.0:
        raise UsageError("--threshold must be positive")
    if cfg.seeds < 2:
        raise UsageError("--seeds must be at least 2")
    return cfg


def _single_cell(cfg):
    if len(cfg.epsilon) != 1 or len(cfg.A) != 1:
        raise UsageError(
            f"{cfg.command} takes a single --epsilon and a single --A; "
            "use the scan command for grids"
        )
    return ModelParams(cfg.epsilon[0], cfg.A[0])


def _require_manifold_domain(A):
    if A == 0.0:
        raise UsageError("A must be nonzero: the map is 4-d only for A != 0")
    kind = classify_eigenvalues(A, at="origin")
    if kind != ALL_REAL or not (CRITICAL_A <= A < 0.0):
        raise UsageError(
            f"A={A!r} is outside [{CRITICAL_A!r}, 0): the origin's spectrum "
            f"is '{kind}' there, and the manifold construction needs four "
            "real hyperbolic eigenvalues"
        )


def _gauge_override(cfg):
    if not cfg.box:
        return None
    pair = _float_list(cfg.box)
    if len(pair) != 2 or pair[0] == 0.0 or pair[1] == 0.0:
        raise UsageError("--box must be a nonzero pair 'g1,g2'")
    return pair


def _outdir(cfg):
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _solution_dict(sol):
    return {
        "u1": sol.u1, "v1": sol.v1, "u2": sol.u2, "v2": sol.v2,
        "point": list(sol.point),
        "residual": sol.residual,
        "det": sol.det,
        "series_order": sol.series_order,
    }


def cmd_eigen(cfg):
    if len(cfg.epsilon) != 1 or len(cfg.A) != 1:
        raise UsageError("eigen takes a single --epsilon and a single --A")
    eps, A = cfg.epsilon[0], cfg.A[0]
    if A == 0.0:
        raise UsageError("A must be nonzero: the map is 4-d only for A != 0")
    p = ModelParams(eps, A)
    payload = {"critical_A": CRITICAL_A}
    for at in ("origin", "nontrivial"):
        if at == "nontrivial" and eps * A >= 0.0:
            payload[at] = None
            continue
        q = characteristic_poly(p, at=at)
        es = solve_reciprocal_quartic(q)
        entry = {
            "quartic": {"a": q.a, "b": q.b},
            "classification": es.classification,
            "hyperbolic": es.hyperbolic,
            "eigenvalues": [es.lambda1, es.lambda2, es.lambda3, es.lambda4],
            "discriminant": discriminant(p, at=at),
        }
        if es.hyperbolic and es.classification == ALL_REAL:
            entry["stable_pair"] = list(es.stable_pair())
        payload[at] = entry
        print(f"{at}: {es.classification}"
              + (" (hyperbolic)" if es.hyperbolic else ""))
        lams = (es.lambda1, es.lambda2, es.lambda3, es.lambda4)
        if all(abs(l.imag) == 0.0 for l in map(complex, lams)):
            print("  eigenvalues: "
                  + "  ".join(f"{complex(l).real:.12g}" for l in lams))
    out = _outdir(cfg) / "eigen.json"
    _write_json(out, payload, cfg)
    print(f"wrote {out}")
    return 0


def cmd_manifold(cfg):
    p = _single_cell(cfg)
    _require_manifold_domain(p.A)
    scale = _gauge_override(cfg)
    Ps, Pu = compute_manifold_pair(p, order=cfg.order, scale=scale)
    outdir = _outdir(cfg)
    for ms in (Ps, Pu):
        with np.errstate(over="ignore", invalid="ignore"):
            res = conjugacy_residual(ms)
        if not np.isfinite(res):
            raise SeriesOverflowError(
                ms.order,
                f"{ms.branch} series evaluation overflows on the unit box "
                f"at scale ({ms.scale[0]:g}, {ms.scale[1]:g}); "
                "use a smaller --box",
            )
        path = outdir / f"manifold_{ms.branch}.json"
        _write_json(path, {"series": series_to_dict(ms),
                           "conjugacy_residual": res}, cfg)
        print(f"{ms.branch}: order {ms.order}, scale "
              f"({ms.scale[0]:.6g}, {ms.scale[1]:.6g}), "
              f"box residual {res:.3e} -> {path}")
    return 0


def cmd_homoclinic(cfg):
    p = _single_cell(cfg)
    _require_manifold_domain(p.A)
    Ps, Pu = compute_manifold_pair(p, order=cfg.order,
                                   scale=_gauge_override(cfg))
    sols = symmetric_search(Ps, Pu, threshold=cfg.threshold)
    if not sols:
        sols = multistart_search(Pu, Ps, grid=cfg.seeds,
                                 threshold=cfg.threshold)
    sols = [replace(s, det=transversality_det(Pu, Ps, s)) for s in sols]
    payload = {"found": bool(sols),
               "solutions": [_solution_dict(s) for s in sols]}
    out = _outdir(cfg) / "homoclinic.json"
    _write_json(out, payload, cfg)
    if sols:
        best = sols[0]
        print(f"{len(sols)} intersection(s); best residual "
              f"{best.residual:.3e}, det {best.det:.6g}")
        print("  point: " + "  ".join(f"{c:.12e}" for c in best.point))
    else:
        print("no homoclinic intersection found")
    print(f"wrote {out}")
    return 0


def _cell_dict(cell):
    return {
        "epsilon": cell.epsilon,
        "A": cell.A,
        "found": cell.found,
        "best_residual": cell.best_residual,
        "solution": _solution_dict(cell.solution) if cell.solution else None,
        "error": cell.error,
    }


def cmd_scan(cfg):
    # bad cells (A = 0, non-real spectrum, ...) are recorded per cell by
    # scan_parameters rather than aborting the whole grid
    cells = scan_parameters(cfg.epsilon, cfg.A, order=cfg.order,
                            threshold=cfg.threshold,
                            workers=cfg.workers or None)
    outdir = _outdir(cfg)
    _write_json(outdir / "scan.json",
                {"cells": [_cell_dict(c) for c in cells]}, cfg)
    with open(outdir / "scan.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "A", "found", "best_residual", "det"])
        for c in cells:
            det = c.solution.det if c.solution else ""
            res = c.best_residual if c.best_residual is not None else ""
            w.writerow([repr(c.epsilon), repr(c.A), c.found, res, det])
    found = sum(c.found for c in cells)
    errs = sum(c.error is not None for c in cells)
    for c in cells:
        mark = "found" if c.found else ("error: " + c.error if c.error
                                        else "none")
        print(f"  eps={c.epsilon:g} A={c.A:g}: {mark}")
    print(f"{found}/{len(cells)} cells with intersections"
          + (f", {errs} errored" if errs else ""))
    print(f"wrote {outdir / 'scan.json'} and {outdir / 'scan.csv'}")
    return 0


def cmd_transversality(cfg):
    if len(cfg.epsilon) != 1:
        raise UsageError("transversality sweeps A at a single --epsilon")
    cells = scan_parameters(cfg.epsilon, cfg.A, order=cfg.order,
                            threshold=cfg.threshold,
                            workers=cfg.workers or None)
    missing = [c for c in cells if not c.found]
    if missing:
        raise MatchFailure(
            "no-convergence",
            f"{len(missing)} of {len(cells)} sweep cells found no "
            "intersection; the determinant curve is incomplete"
        )
    A_vals = np.array([c.A for c in cells])
    dets = np.array([c.solution.det for c in cells])
    outdir = _outdir(cfg)
    with open(outdir / "transversality.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["A", "det"])
        for a, d in zip(A_vals, dets):
            w.writerow([repr(float(a)), repr(float(d))])
    fit = det_curve_fit(A_vals, dets)
    _write_json(outdir / "transversality_fit.json", {
        "A": list(A_vals),
        "det": list(dets),
        "fit_coefficients": list(fit.coeffs),
        "fit_roots": list(fit.roots),
        "ill_conditioned": fit.ill_conditioned,
    }, cfg)
    print(f"det range [{dets.min():.6g}, {dets.max():.6g}] over "
          f"A in [{A_vals.min():g}, {A_vals.max():g}]")
    print("fit roots: " + (", ".join(f"{r:.6g}" for r in fit.roots)
                           if fit.roots.size else "(none)"))
    print(f"wrote {outdir / 'transversality.csv'} and "
          f"{outdir / 'transversality_fit.json'}")
    return 0


def cmd_soliton(cfg):
    p = _single_cell(cfg)
    _require_manifold_domain(p.A)
    Ps, Pu = compute_manifold_pair(p, order=cfg.order,
                                   scale=_gauge_override(cfg))
    sols = symmetric_search(Ps, Pu, threshold=cfg.threshold)
    if not sols:
        sols = multistart_search(Pu, Ps, grid=cfg.seeds,
                                 threshold=cfg.threshold)
    if not sols:
        raise ProfileError("no homoclinic intersection to build from")
    prof = build_profile(sols[0], Pu, Ps)
    outdir = _outdir(cfg)
    with open(outdir / "soliton.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "u_n"])
        for n, u in zip(prof.indices, prof.values):
            w.writerow([int(n), repr(float(u))])
    _write_json(outdir / "soliton.json", {
        "sites": [int(n) for n in prof.indices],
        "values": list(prof.values),
        "residual_max": prof.residual_max,
        "mirror_defect": mirror_defect(prof),
        "tail_decay": list(prof.tail_decay),
        "peak": float(np.max(np.abs(prof.values))),
        "matched_point": list(sols[0].point),
    }, cfg)
    print(f"profile over sites [{prof.indices[0]}, {prof.indices[-1]}], "
          f"peak {np.max(np.abs(prof.values)):.6e}")
    print(f"stationary residual {prof.residual_max:.3e}, tail decay "
          f"({prof.tail_decay[0]:.6f}, {prof.tail_decay[1]:.6f})")
    print(f"wrote {outdir / 'soliton.csv'} and {outdir / 'soliton.json'}")
    return 0


def cmd_portrait(cfg):
    if cfg.A:
        raise UsageError("portrait uses the 2-d map; --A does not apply")
    half = 0.1
    if cfg.box:
        pair = _float_list(cfg.box)
        if len(pair) != 1 or pair[0] <= 0.0:
            raise UsageError("--box must be a single positive half-width "
                             "for portrait")
        half = pair[0]
    g = np.linspace(-half, half, cfg.seeds)
    seeds = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    outdir = _outdir(cfg)
    stride = max(1, PORTRAIT_STEPS // 1000)  # keep files a few MB at most
    manifest = {"steps": PORTRAIT_STEPS, "stride": stride,
                "files": [], "summary": []}
    for eps in cfg.epsilon:
        if eps == 0.0:
            raise UsageError("epsilon must be nonzero")
        p = ModelParams(eps, 0.0)
        orbits = portrait_2d(p, seeds, steps=PORTRAIT_STEPS)
        fname = f"portrait_eps{eps:g}.csv"
        with open(outdir / fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed_index", "step", "x", "y"])
            for i, orb in enumerate(orbits):
                last = len(orb.points) - 1
                kept = sorted(set(range(0, last + 1, stride)) | {last})
                for k in kept:
                    x, y = orb.points[k]
                    w.writerow([i, k, repr(float(x)), repr(float(y))])
        escaped = sum(o.escaped for o in orbits)
        manifest["files"].append(fname)
        manifest["summary"].append({
            "epsilon": eps,
            "seeds": len(orbits),
            "escaped": escaped,
        })
        print(f"eps={eps:g}: {escaped}/{len(orbits)} seeds escaped "
              f"-> {outdir / fname}")
    _write_json(outdir / "portrait.json", manifest, cfg)
    print(f"wrote {outdir / 'portrait.json'}")
    return 0


_COMMANDS = {
    "eigen": cmd_eigen,
    "manifold": cmd_manifold,
    "homoclinic": cmd_homoclinic,
    "scan": cmd_scan,
    "transversality": cmd_transversality,
    "soliton": cmd_soliton,
    "portrait": cmd_portrait,
}

_NUMERICAL = (ResonanceError, SeriesOverflowError, GaugeError,
              NonHyperbolicError, MatchFailure, ProfileError)


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
