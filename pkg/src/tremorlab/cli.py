"""Batch experiment driver.

Every subcommand writes one JSON document holding the run configuration,
the seed and the result.  Errors are reported as JSON on stderr and mapped
to exit codes: 2 validation, 3 numeric failure, 4 search exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .errors import SpecFormatError, TremorlabError, ValidationError
from .numbers import QuadraticNumber, dump_scalar
from .surface_core import build_surface, dump_surface_spec, square_torus, torus_from_lattice

BUILTIN_SURFACES = ("square", "sqrt2", "slitpair", "slitpair-irr")


@dataclass
class ExperimentConfig:
    command: str
    surface: Optional[str] = None
    mode: str = "exact"
    seed: int = 0
    out: Optional[str] = None
    csv: bool = False
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.mode not in ("exact", "float"):
            raise ValidationError(f"mode must be exact or float, got {self.mode!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.surface and self.surface not in BUILTIN_SURFACES and not Path(self.surface).is_file():
            raise ValidationError(f"surface file {self.surface!r} not found")
        inp = self.params.get("input")
        if inp and not Path(inp).is_file():
            raise ValidationError(f"input file {inp!r} not found")


def _sqrt2_torus():
    r2 = QuadraticNumber(0, 1, 2)
    return torus_from_lattice((Fraction(1), r2), (Fraction(1), r2 + 1))


def _builtin(name: str):
    from .eigenform_locus import slit_pair

    if name == "square":
        return square_torus()
    if name == "sqrt2":
        return _sqrt2_torus()
    if name == "slitpair":
        # square tori, horizontal slit of length 1/2, area normalized
        return slit_pair(((1, 0), (0, 1)), (Fraction(1, 2), Fraction(0)))
    # horizontal rational slit on an irrational lattice, not normalized
    r2 = QuadraticNumber(0, 1, 2)
    return slit_pair(((Fraction(1), r2), (Fraction(1), r2 + 1)), (Fraction(1, 3), Fraction(0)),
                     normalize=False)


def load_surface(cfg: ExperimentConfig, allow_mixed: bool = False):
    if not cfg.surface:
        raise ValidationError("--surface is required")
    if cfg.surface in BUILTIN_SURFACES:
        q = _builtin(cfg.surface)
    else:
        try:
            doc = json.loads(Path(cfg.surface).read_text())
        except json.JSONDecodeError as ex:
            raise SpecFormatError(f"not JSON: {ex}") from None
        q = build_surface(doc, allow_mixed=allow_mixed)
    return q.as_float() if cfg.mode == "float" else q


def parse_beta(q, text: str):
    """``dy``, ``restriction:NAME`` or ``anti`` (restriction:A minus restriction:B)."""
    from .cocycle_tremor import canonical_dy, restriction_dy

    if text == "dy":
        return canonical_dy(q)
    if text.startswith("restriction:"):
        try:
            return restriction_dy(q, text.split(":", 1)[1])
        except KeyError as ex:
            raise ValidationError(str(ex)) from None
    if text == "anti":
        return restriction_dy(q, "A") - restriction_dy(q, "B")
    raise ValidationError(f"unknown cocycle {text!r}")


def parse_number(text: str):
    """Decimal, p/q or sqrtN (optionally scaled, e.g. 3*sqrt2)."""
    t = text.strip()
    if "sqrt" in t:
        coef, _, d = t.partition("sqrt")
        c = float(coef.rstrip("*")) if coef.rstrip("*") else 1.0
        return c * math.sqrt(int(d))
    return float(Fraction(t))


def parse_list(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg, args) -> dict:
    q = load_surface(cfg, args.allow_mixed)
    angles = q.cone_angles()
    return {
        "genus": q.genus,
        "cone_angles_over_pi": [round(a / math.pi, 12) for a in angles],
        "area": dump_scalar(q.area()),
        "systole_estimate": q.systole_estimate(),
        "n_triangles": len(q.tri.triangles),
    }


def cmd_tremor(cfg, args) -> dict:
    from .cocycle_tremor import tremor, total_variation

    q = load_surface(cfg, args.allow_mixed)
    beta = parse_beta(q, args.beta)
    t = Fraction(args.t) if cfg.mode == "exact" else float(Fraction(args.t))
    q2, transport = tremor(q, beta, t)
    mass = total_variation(q, beta)
    return {
        "surface": dump_surface_spec(q2, {"meta": {"regions": q2.meta.get("regions", {})}}),
        "flips": transport.n_flips,
        "beta": beta.to_doc(),
        "L": dump_scalar(mass.L),
        "L_abs": dump_scalar(mass.L_abs),
        "area_before": dump_scalar(q.area()),
        "area_after": dump_scalar(q2.area()),
    }


def cmd_flow(cfg, args):
    from .foliation_flow import flow

    q = load_surface(cfg, args.allow_mixed)
    if args.point:
        ti, x, y = args.point.split(",")
        p = (int(ti), (float(x), float(y)))
    else:
        V = q.triangle_vertices(0)
        p = (0, (sum(v[0] for v in V) / 3 + 1e-3, sum(v[1] for v in V) / 3))
    theta = parse_number(args.theta)
    res = flow(q, p, theta, args.T)
    doc = {"kind": res.kind, "time": res.time, "end": [res.end[0], list(res.end[1])],
           "singularity": res.singularity, "crossings": len(res.trace)}
    return doc, res.to_csv()


def cmd_cone(cfg, args) -> dict:
    from .foliation_flow import (certify, cone_contains, cone_generators, first_return, prong_system,
                                 pull_back, without_vertical_edges)

    q = load_surface(cfg, args.allow_mixed)
    beta = parse_beta(q, args.beta)
    q2, tr = without_vertical_edges(q)
    out = []
    for t in parse_list(args.t):
        system = certify(q2, prong_system(q2, t))
        iet = first_return(q2, system)
        gens = {}
        for g in cone_generators(q2, system, iet):
            b = pull_back(g, q, tr)
            gens.setdefault(tuple(b.values), b)
        out.append({"t": t, "intervals": iet.n, "generators": len(gens),
                    "contains": bool(cone_contains(list(gens.values()), beta))})
    return {"beta": args.beta, "levels": out}


def cmd_checkerboard(cfg, args) -> dict:
    from .eigenform_locus import checkerboard_search, checkerboard_verify

    res = checkerboard_search(args.x, parse_number(args.alpha), args.c, args.eta, H=args.H,
                              search_bound=args.search_bound)
    doc = {"m": res.m, "n": res.n, "k": res.k, "imbalance": res.imbalance,
           "sigma2": list(res.sigma2), "theta": res.theta}
    if args.verify:
        rep = checkerboard_verify(res)
        doc["verify"] = rep.to_doc()
    return doc


def _read_points(path: str) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            try:
                rows.append([float(p) for p in rec if p.strip()])
            except ValueError:
                continue          # header or comment
    if not rows:
        raise ValidationError(f"no numeric rows in {path}")
    return np.array(rows, dtype=float)


def cmd_dim(cfg, args):
    from .fractal_geometry import box_dim_estimate

    P = _read_points(args.input)
    rep = box_dim_estimate(P, parse_list(args.radii), count=args.count, seed=cfg.seed)
    doc = {"radii": rep.radii, "counts": rep.counts, "slope": rep.slope, "ci": list(rep.ci),
           "stderr": rep.stderr, "n_points": int(len(P))}
    return doc, rep.to_csv()


COMMANDS = {
    "validate": cmd_validate,
    "tremor": cmd_tremor,
    "flow": cmd_flow,
    "cone": cmd_cone,
    "checkerboard": cmd_checkerboard,
    "dim": cmd_dim,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--surface", help="surface JSON path or one of " + ", ".join(BUILTIN_SURFACES))
    common.add_argument("--mode", choices=("exact", "float"), default="exact")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the JSON document here instead of stdout")
    common.add_argument("--csv", action="store_true", help="emit CSV (flow trace, cover counts)")
    common.add_argument("--allow-mixed", action="store_true", help="accept mixed exact/float specs")

    p = argparse.ArgumentParser(prog="tremorlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="load a surface and report its invariants")

    s = sub.add_parser("tremor", parents=[common], help="tremor a surface along a foliation cocycle")
    s.add_argument("--beta", default="dy", help="dy | restriction:NAME | anti")
    s.add_argument("--t", default="1", help="tremor time (decimal or p/q)")

    s = sub.add_parser("flow", parents=[common], help="straight-line flow from a point")
    s.add_argument("--theta", default="0")
    s.add_argument("--T", type=float, default=10.0)
    s.add_argument("--point", help="triangle,x,y in that triangle's frame")

    s = sub.add_parser("cone", parents=[common], help="cone membership at prong depths")
    s.add_argument("--beta", default="dy")
    s.add_argument("--t", default="0,1,2,3", help="comma-separated depths")

    s = sub.add_parser("checkerboard", parents=[common], help="search and verify a checkerboard")
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--alpha", required=True, help="slope, e.g. sqrt2 or 1.618")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--H", type=float)
    s.add_argument("--search-bound", type=int, default=1000)
    s.add_argument("--verify", action="store_true")

    s = sub.add_parser("dim", parents=[common], help="box-counting dimension of a point cloud")
    s.add_argument("--input", required=True, help="CSV with one point per row")
    s.add_argument("--radii", required=True, help="comma-separated radii")
    s.add_argument("--count", choices=("grid", "cover"), default="grid")
    return p


def _config(args) -> ExperimentConfig:
    skip = {"command", "surface", "mode", "seed", "out", "csv", "allow_mixed"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return ExperimentConfig(args.command, args.surface, args.mode, args.seed, args.out, args.csv, params)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    try:
        cfg.validate()
        result = COMMANDS[args.command](cfg, args)
        table = None
        if isinstance(result, tuple):
            result, table = result
    except TremorlabError as ex:
        err = {"error": type(ex).__name__, "message": str(ex), "exit_code": ex.exit_code}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return ex.exit_code
    except (ValueError, KeyError) as ex:
        err = {"error": type(ex).__name__, "message": str(ex), "exit_code": 2}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 2
    if cfg.csv and table is not None:
        header = f"# config={json.dumps(asdict(cfg), sort_keys=True)}\n"
        _emit(header + table, cfg.out)
    else:
        doc = {"config": asdict(cfg), "seed": cfg.seed, "result": result}
        _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", cfg.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
