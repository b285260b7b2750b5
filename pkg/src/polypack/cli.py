"""Command line entry point: ``polypack {build,verify,enumerate,render,mesh,zeta,membership}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import areainv, packing, rootsys, titscone
from .errors import InvalidGraphError, PolypackError
from .packing import PackingConfiguration
from .polyhedron import BUILTINS, PolyhedronGraph, canonical_realization, require_valid, solve_midsphere
from .serialize import dumps, fmt

log = logging.getLogger("polypack")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEPTH_WARN = 12


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    builtin: str | None = None
    input: Path | None = None
    depth: int = 3
    curvature_bound: float | None = None
    point: str | None = None
    grid: Path | None = None
    out: Path | None = None
    format: str | None = None
    tol: float = packing.PATTERN_TOL
    threads: int = 1
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        cfg = cls(
            builtin=ns.builtin,
            input=Path(ns.input) if ns.input else None,
            depth=ns.depth,
            curvature_bound=ns.curvature_bound,
            point=getattr(ns, "point", None),
            grid=Path(ns.grid) if getattr(ns, "grid", None) else None,
            out=Path(ns.out) if ns.out else None,
            format=ns.format,
            tol=ns.tol,
            threads=ns.threads,
        )
        if cfg.builtin is None and cfg.input is None:
            cfg.builtin = "octahedron"
        if cfg.depth < 0:
            raise InputError("--depth must be non-negative")
        if cfg.depth > DEPTH_WARN:
            log.warning("depth %d: orbit has n(n-1)^(k-1) nodes per level and may be very large", cfg.depth)
        if cfg.threads < 1:
            raise InputError("--threads must be at least 1")
        if not cfg.tol > 0:
            raise InputError("--tol must be positive")
        return cfg


# -- loading ------------------------------------------------------------------------


def load_configuration(rc: RunConfig) -> PackingConfiguration:
    """Bounded-normalized configuration from a builtin, a polyhedron file, or a build artifact.

    Pattern checks are not run here for artifacts so that ``verify`` can report them.
    """
    if rc.builtin is not None:
        if rc.builtin not in BUILTINS:
            raise InputError(f"unknown builtin {rc.builtin!r}; choose from {', '.join(BUILTINS)}")
        cfg = packing.build_configuration(canonical_realization(rc.builtin), rc.tol)
        return packing.normalize_bounded(cfg)[0]
    try:
        doc = json.loads(Path(rc.input).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {rc.input}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{rc.input} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{rc.input} must hold a JSON object")
    graph = PolyhedronGraph.from_dict(doc.get("graph", doc))
    require_valid(graph)
    if "configuration" in doc:
        c = doc["configuration"]
        try:
            return PackingConfiguration(graph, np.array(c["C"], dtype=float), np.array(c["D"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed configuration block: {exc}") from exc
    cfg = packing.build_configuration(solve_midsphere(graph), rc.tol)
    return packing.normalize_bounded(cfg)[0]


def parse_point(text: str, m: int) -> np.ndarray:
    t = text.strip().lower()
    if t == "all-ones":
        return np.ones(m)
    if t == "minus-all-ones":
        return -np.ones(m)
    try:
        s = np.array([float(x) for x in t.split(",")])
    except ValueError as exc:
        raise InputError(f"--point must be comma-separated numbers or 'all-ones': {text!r}") from exc
    if len(s) != m:
        raise InputError(f"--point has {len(s)} entries, expected {m}")
    return s


def read_grid(path: Path, m: int) -> np.ndarray:
    try:
        rows = [r for r in csv.reader(path.read_text().splitlines()) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        pts = np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry") from exc
    if pts.ndim != 2 or pts.shape[1] != m:
        raise InputError(f"{path}: every row needs {m} entries")
    return pts


def emit(rc: RunConfig, text: str) -> None:
    if rc.out is None:
        sys.stdout.write(text)
    else:
        rc.out.parent.mkdir(parents=True, exist_ok=True)
        rc.out.write_text(text)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


# -- verification -------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""
    value: float | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail, "value": self.value}


def _status(ok: bool) -> str:
    return "ok" if ok else "FAILED"


def run_verify(cfg: PackingConfiguration, depth: int, tol: float = packing.PATTERN_TOL, seed: int = 0) -> list[CheckResult]:
    """Invariant checks in dependency order; stops after the first failing prerequisite."""
    out: list[CheckResult] = []
    issues = packing.pattern_issues(cfg.graph, cfg.C, cfg.D, tol)
    for kind in ("vertex pairing", "face pairing", "vertex-face pairing"):
        bad = [i for i in issues if i.check == kind]
        out.append(CheckResult(f"pattern: {kind}", not bad, str(bad[0]) if bad else ""))
    if issues:
        return out
    rs = rootsys.build_root_system(cfg)
    problems = rootsys.check_root_system(rs)
    out.append(CheckResult("root system invariants", not problems, "; ".join(problems)))
    if problems:
        return out

    worst, where = 0.0, ()
    base_vec, _ = rootsys.descend_to_base(rs, cfg.curvatures)
    bases = [base_vec]
    for level in packing.orbit_levels(cfg, depth):
        B = level.circles[:, 1, :]
        res = np.abs(rs.quadratic(B)) / np.maximum(1.0, np.sum(B * B, axis=1))
        k = int(np.argmax(res))
        if res[k] > worst:
            worst, where = float(res[k]), tuple(int(v) for v in level.words[k])
        for b in B[:: max(1, len(B) // 50)]:
            base, _ = rootsys.descend_to_base(rs, b)
            # descent cancels large entries, so the error scales with the start tuple
            atol = 1e-8 * max(1.0, float(np.max(np.abs(b))))
            if not np.allclose(base, base_vec, rtol=0.0, atol=atol):
                bases.append(base)
    out.append(CheckResult("descartes identity", worst < 1e-6, f"max relative residual at word {list(where)}", worst))
    out.append(CheckResult("unique base tuple", len(bases) == 1, f"{len(bases)} distinct base tuple(s)"))
    mult = rootsys.classify_multiplicity(rs, base_vec)
    out.append(CheckResult("multiplicity", True, f"multiplicity {mult.multiplicity}", float(mult.multiplicity)))

    rng = np.random.default_rng(seed)
    slack = min(
        float(rootsys.growth_lower_bound_check(rs, base_vec, rootsys.random_reduced_word(rs.n, 12, rng)).slack.min())
        for _ in range(20)
    )
    out.append(CheckResult("growth bound", slack >= -1e-8, "min d_k - 2 mu (k-1)", slack))

    forms = titscone.edge_tangency_report(rs)
    e_err = max(abs(f.discriminant) for f in forms if f.adjacent)
    ne = [f.discriminant for f in forms if not f.adjacent]
    ok = e_err < 1e-9 * max(1.0, float(np.max(np.abs(rs.G)))) ** 2 and all(d < 0 for d in ne)
    out.append(CheckResult("edge tangency", ok, "max |discriminant| on edges", e_err))
    inv = max(titscone.verify_inversion_action(rs, j, 200, seed).max_error for j in range(rs.n))
    out.append(CheckResult("inversion action", inv < 1e-8, "max chart error", inv))

    verdicts = [titscone.membership(rs, np.ones(rs.m)).verdict == titscone.Verdict.CONVERGES]
    verdicts.append(titscone.membership(rs, -np.ones(rs.m)).verdict == titscone.Verdict.DIVERGES)
    verdicts += [titscone.membership(rs, e).verdict == titscone.Verdict.DIVERGES for e in np.eye(rs.m)]
    out.append(CheckResult("membership trichotomy", all(verdicts), f"{sum(verdicts)}/{len(verdicts)} expected verdicts"))

    R = packing.reflection_matrices(cfg)
    e_area, discs, regions = areainv.disc_area_budget(cfg)
    cons = abs(e_area - discs - regions) / e_area
    out.append(CheckResult("area conservation", cons < 1e-6, "relative defect", cons))
    multi = []
    for level in packing.orbit_levels(cfg, min(depth, 2)):
        for w, T in zip(level.words, level.transforms):
            down, _, _ = areainv.area_decreasing_generators(cfg, T, R)
            if len(down) > 1:
                multi.append(tuple(int(v) for v in w))
    out.append(
        CheckResult("one area-decreasing generator", not multi, f"violated at word {list(multi[0])}" if multi else "")
    )
    return out


# -- commands -------------------------------------------------------------------------


def cmd_build(rc: RunConfig) -> int:
    cfg = load_configuration(rc)
    packing.check_configuration(cfg, rc.tol)
    rs = rootsys.build_root_system(cfg)
    doc = {"graph": cfg.graph.to_dict(), "configuration": {"C": cfg.C, "D": cfg.D}, "root_system": rs.to_dict()}
    emit(rc, dumps(doc, indent=1) + "\n")
    return EXIT_OK


def cmd_verify(rc: RunConfig) -> int:
    cfg = load_configuration(rc)
    results = run_verify(cfg, rc.depth, rc.tol)
    ok = all(r.ok for r in results)
    first = next((r for r in results if not r.ok), None)
    doc = {
        "polyhedron": cfg.graph.name,
        "depth": rc.depth,
        "passed": ok,
        "first_failure": None if first is None else first.to_dict(),
        "checks": [r.to_dict() for r in results],
    }
    emit(rc, dumps(doc, indent=1) + "\n")
    for r in results:
        log.info("%-32s %s %s", r.name, _status(r.ok), r.detail)
    return EXIT_OK if ok else EXIT_FAIL


def _nodes(rc: RunConfig, cfg: PackingConfiguration):
    if rc.curvature_bound is not None:
        return packing.enumerate_by_curvature(cfg, rc.curvature_bound)
    return list(packing.enumerate_orbit(cfg, rc.depth, rc.threads))


def cmd_enumerate(rc: RunConfig) -> int:
    cfg = load_configuration(rc)
    nodes = _nodes(rc, cfg)
    if (rc.format or "json") == "csv":
        rows = [[" ".join(map(str, nd.word)), *nd.curvatures.tolist()] for nd in nodes]
        emit(rc, csv_text(["word", *[f"b{i}" for i in range(cfg.m)]], rows))
    else:
        emit(rc, dumps({"polyhedron": cfg.graph.name, "count": len(nodes), "nodes": [nd.to_json() for nd in nodes]}) + "\n")
    return EXIT_OK


def cmd_render(rc: RunConfig) -> int:
    cfg = load_configuration(rc)
    emit(rc, packing.render_svg(_nodes(rc, cfg)))
    return EXIT_OK


def cmd_mesh(rc: RunConfig) -> int:
    cfg = load_configuration(rc)
    rs = rootsys.build_root_system(cfg)
    emit(rc, dumps(titscone.export_cone_mesh(rs, rc.depth), indent=1) + "\n")
    return EXIT_OK


def cmd_zeta(rc: RunConfig) -> int:
    cfg = load_configuration(rc)
    rs = rootsys.build_root_system(cfg)
    base, _ = rootsys.descend_to_base(rs, cfg.curvatures)
    S = read_grid(rc.grid, rs.m) if rc.grid else parse_point(rc.point or "all-ones", rs.m)[None, :]
    res = titscone.z_partial(rs, base, S.T, rc.depth, threads=rc.threads)
    rows = []
    for k, s in enumerate(S):
        v = titscone.membership(rs, s)
        try:
            tail = titscone.z_tail_bound(rs, base, s, rc.depth)
        except ValueError:
            tail = None
        rows.append(
            {
                "point": s,
                "depth": rc.depth,
                "value": float(res.values[k]),
                "saturated": bool(res.saturated[k]),
                "tail_bound": tail,
                "verdict": v.verdict,
            }
        )
    if (rc.format or "json") == "csv":
        text = csv_text(
            ["point", "depth", "value", "saturated", "tail_bound", "verdict"],
            [
                [" ".join(fmt(x) for x in r["point"]), r["depth"], r["value"], r["saturated"],
                 "" if r["tail_bound"] is None else r["tail_bound"], r["verdict"].value]
                for r in rows
            ],
        )
        emit(rc, text)
    else:
        emit(rc, dumps({"base": base, "terms": res.terms, "results": rows}, indent=1) + "\n")
    return EXIT_OK


def cmd_membership(rc: RunConfig) -> int:
    cfg = load_configuration(rc)
    rs = rootsys.build_root_system(cfg)
    S = read_grid(rc.grid, rs.m) if rc.grid else parse_point(rc.point or "all-ones", rs.m)[None, :]
    verdicts = [titscone.membership(rs, s) for s in S]
    fmt_ = rc.format or ("csv" if rc.grid else "json")
    if fmt_ == "csv":
        rows = [
            [" ".join(fmt(x) for x in s), v.verdict.value, len(v.word), " ".join(map(str, v.word))]
            for s, v in zip(S, verdicts)
        ]
        emit(rc, csv_text(["point", "verdict", "word_length", "word"], rows))
    else:
        docs = [
            {"point": s, "verdict": v.verdict, "word": list(v.word), "iterations": v.iterations,
             "pairings": v.pairings, "witness": None if v.witness is None else list(v.witness)}
            for s, v in zip(S, verdicts)
        ]
        emit(rc, dumps(docs[0] if len(docs) == 1 else docs, indent=1) + "\n")
    return EXIT_OK


COMMANDS = {
    "build": (cmd_build, "write configuration and root system matrices", ("json",)),
    "verify": (cmd_verify, "run every invariant check and report pass/fail", ("json",)),
    "enumerate": (cmd_enumerate, "list orbit tuples to a depth or curvature bound", ("json", "csv")),
    "render": (cmd_render, "draw the packing as SVG", ("svg",)),
    "mesh": (cmd_mesh, "export sphere, initial polyhedron and tangent cones", ("mesh", "json")),
    "zeta": (cmd_zeta, "partial sums of Z(s)", ("json", "csv")),
    "membership": (cmd_membership, "decide whether Z(s) converges", ("json", "csv")),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polypack", description="Polyhedral circle packings and their root systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_, formats) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--builtin", choices=BUILTINS, help="built-in polyhedron (default octahedron)")
        src.add_argument("--input", help="polyhedron JSON (vertex_count, faces) or a build artifact")
        p.add_argument("--depth", type=int, default=3)
        p.add_argument("--curvature-bound", type=float, default=None)
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=formats, default=None)
        p.add_argument("--tol", type=float, default=packing.PATTERN_TOL, help="pattern check tolerance")
        p.add_argument("--threads", type=int, default=1)
        if name in ("zeta", "membership"):
            p.add_argument("--point", help="weight as comma-separated values, or all-ones / minus-all-ones")
            p.add_argument("--grid", help="CSV file with one weight per row (sweep mode)")
    return parser


def _error(kind: str, message: str, details=None) -> int:
    doc = {"error": kind, "message": message}
    if details:
        doc["details"] = details
    sys.stderr.write(dumps(doc) + "\n")
    return EXIT_INPUT


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("POLYPACK_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    ns = parser.parse_args(argv)
    handler = COMMANDS[ns.command][0]
    try:
        rc = RunConfig.from_args(ns)
        return handler(rc)
    except InvalidGraphError as exc:
        return _error("invalid_graph", "; ".join(exc.errors), exc.errors)
    except InputError as exc:
        return _error("input", str(exc))
    except PolypackError as exc:
        log.error("%s", exc)
        if ns.command == "verify":
            sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
            return EXIT_FAIL
        return _error(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
