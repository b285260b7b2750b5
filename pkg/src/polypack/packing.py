"""Initial and dual circle configurations, orbit enumeration, bounded normalization, SVG output."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ConfigurationError
from .inversive import P, OrientedCircle, inversion_matrix
from .polyhedron import MidsphereRealization, PolyhedronGraph, face_circle, require_valid, vertex_circle
from .serialize import dumps

log = logging.getLogger(__name__)

PATTERN_TOL = 1e-8
LINE_TOL = 1e-9


@dataclass(frozen=True)
class PackingConfiguration:
    graph: PolyhedronGraph
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in ("C", "D"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.C.shape != (4, self.graph.vertex_count) or self.D.shape != (4, self.graph.face_count):
            raise ConfigurationError(
                f"matrix shapes {self.C.shape}, {self.D.shape} do not fit graph "
                f"({self.graph.vertex_count} vertices, {self.graph.face_count} faces)"
            )

    @property
    def m(self) -> int:
        return self.graph.vertex_count

    @property
    def n(self) -> int:
        return self.graph.face_count

    @property
    def curvatures(self) -> np.ndarray:
        return self.C[1].copy()

    def circle(self, i: int) -> OrientedCircle:
        return OrientedCircle.from_vector(self.C[:, i])

    def dual(self, j: int) -> OrientedCircle:
        return OrientedCircle.from_vector(self.D[:, j])

    def transformed(self, M) -> "PackingConfiguration":
        M = np.asarray(M, dtype=float)
        return PackingConfiguration(self.graph, M @ self.C, M @ self.D)


@dataclass
class PatternIssue:
    check: str
    indices: tuple[int, int]
    value: float
    expected: str

    def __str__(self):
        return f"{self.check}: pair {self.indices} has pairing {self.value:.12g}, expected {self.expected}"


def _block_issues(name, gram, adjacent, tol) -> list[PatternIssue]:
    out = []
    k = gram.shape[0]
    for a in range(k):
        for b in range(a, k):
            v = float(gram[a, b])
            if a == b:
                if abs(v - 1.0) > tol:
                    out.append(PatternIssue(name, (a, b), v, "1"))
            elif adjacent[a, b]:
                if abs(v + 1.0) > tol:
                    out.append(PatternIssue(name, (a, b), v, "-1 (adjacent)"))
            elif not v < -1.0 - tol:
                out.append(PatternIssue(name, (a, b), v, "< -1 (non-adjacent)"))
    return out


def pattern_issues(graph: PolyhedronGraph, C, D, tol: float = PATTERN_TOL) -> list[PatternIssue]:
    """All violations of the vertex, face and vertex-face pairing patterns, in that order."""
    C = np.asarray(C, dtype=float)
    D = np.asarray(D, dtype=float)
    issues = _block_issues("vertex pairing", C.T @ P @ C, graph.adjacency, tol)
    issues += _block_issues("face pairing", D.T @ P @ D, graph.face_adjacency, tol)
    X = C.T @ P @ D
    for i in range(graph.vertex_count):
        for j in range(graph.face_count):
            v = float(X[i, j])
            if graph.incidence[i, j]:
                if abs(v) > tol:
                    issues.append(PatternIssue("vertex-face pairing", (i, j), v, "0 (incident)"))
            elif not v < -1.0 - tol:
                issues.append(PatternIssue("vertex-face pairing", (i, j), v, "< -1 (not incident)"))
    return issues


def check_configuration(cfg: PackingConfiguration, tol: float = PATTERN_TOL) -> None:
    issues = pattern_issues(cfg.graph, cfg.C, cfg.D, tol)
    if issues:
        raise ConfigurationError(str(issues[0]) + (f" (and {len(issues) - 1} more)" if len(issues) > 1 else ""))
    if np.linalg.matrix_rank(cfg.C, tol=1e-10 * np.linalg.norm(cfg.C, 2)) != 4:
        raise ConfigurationError("initial circle matrix C does not have rank 4")


def build_configuration(r: MidsphereRealization, tol: float = PATTERN_TOL) -> PackingConfiguration:
    g = r.graph
    C = np.column_stack([vertex_circle(r, i) for i in range(g.vertex_count)])
    D = np.column_stack([face_circle(r, j) for j in range(g.face_count)])
    cfg = PackingConfiguration(g, C, D)
    check_configuration(cfg, tol)
    return cfg


def configuration_from_circles(graph: PolyhedronGraph, C, D=None, tol: float = PATTERN_TOL) -> PackingConfiguration:
    """Configuration from explicit initial circles; dual circles are derived from the face rings if absent."""
    require_valid(graph)
    C = np.asarray(C, dtype=float)
    if D is None:
        from .areainv import face_dual_circle

        cols = []
        for f in graph.faces:
            others = [C[:, i] for i in range(graph.vertex_count) if i not in f]
            cols.append(face_dual_circle([C[:, i] for i in f], outside=others))
        D = np.column_stack(cols)
    cfg = PackingConfiguration(graph, C, D)
    check_configuration(cfg, tol)
    return cfg


# -- orbit -----------------------------------------------------------------------


def reflection_matrices(cfg: PackingConfiguration) -> np.ndarray:
    """R_j = I - 2 d_j d_j^T P for every dual circle, shape (n, 4, 4)."""
    return np.stack([inversion_matrix(cfg.D[:, j]) for j in range(cfg.n)])


@dataclass(frozen=True)
class OrbitNode:
    word: tuple[int, ...]
    transform: np.ndarray = field(repr=False)
    circles: np.ndarray = field(repr=False)

    @property
    def curvatures(self) -> np.ndarray:
        return self.circles[1]

    @property
    def depth(self) -> int:
        return len(self.word)

    def duals(self, cfg: PackingConfiguration) -> np.ndarray:
        return self.transform @ cfg.D

    def to_json(self) -> str:
        return dumps({"word": list(self.word), "curvatures": self.curvatures})


@dataclass
class OrbitLevel:
    """All reduced words of one length, as stacked arrays in lexicographic order."""

    depth: int
    words: np.ndarray  # (N, depth) int
    transforms: np.ndarray  # (N, 4, 4)
    circles: np.ndarray  # (N, 4, m), transforms @ C computed without forming the product

    def __len__(self):
        return len(self.transforms)


def _children(level: OrbitLevel, R: np.ndarray, threads: int = 1) -> OrbitLevel:
    # Words are grown on the left: the child (j, w) has circles R_j @ X_w.  Multiplying
    # circle columns keeps entries at the size of the circles, whereas T_w @ R_j @ C
    # loses digits to the growing transform entries.
    n = len(R)
    N = len(level)
    first = level.words[:, 0] if level.depth else np.full(N, -1)
    par = np.repeat(np.arange(N), n)
    gen = np.tile(np.arange(n), N)
    keep = gen != first[par]
    par, gen = par[keep], gen[keep]

    def work(lo, hi):
        Rg = R[gen[lo:hi]]
        return np.matmul(Rg, level.transforms[par[lo:hi]]), np.matmul(Rg, level.circles[par[lo:hi]])

    total = len(par)
    if threads > 1 and total > 4096:
        bounds = np.linspace(0, total, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda ab: work(*ab), zip(bounds[:-1], bounds[1:])))
        T = np.concatenate([p[0] for p in parts])
        X = np.concatenate([p[1] for p in parts])
    else:
        T, X = work(0, total)
    words = np.column_stack([gen, level.words[par]]) if level.depth else gen[:, None]
    order = np.lexsort(words.T[::-1])
    return OrbitLevel(level.depth + 1, words[order], T[order], X[order])


def orbit_levels(cfg: PackingConfiguration, max_depth: int, threads: int = 1) -> Iterator[OrbitLevel]:
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    R = reflection_matrices(cfg)
    level = OrbitLevel(0, np.zeros((1, 0), dtype=int), np.eye(4)[None], np.asarray(cfg.C, dtype=float)[None])
    yield level
    for _ in range(max_depth):
        level = _children(level, R, threads)
        yield level


def orbit_size(n: int, depth: int) -> int:
    return 1 + sum(n * (n - 1) ** (k - 1) for k in range(1, depth + 1))


def enumerate_orbit(cfg: PackingConfiguration, max_depth: int, threads: int = 1) -> Iterator[OrbitNode]:
    """Nodes for all reduced words of length <= max_depth, depth by depth, lexicographic within a depth."""
    for level in orbit_levels(cfg, max_depth, threads):
        for w, T, X in zip(level.words, level.transforms, level.circles):
            yield OrbitNode(tuple(int(v) for v in w), T, X)


def enumerate_by_curvature(cfg: PackingConfiguration, curvature_bound: float) -> list[OrbitNode]:
    """Orbit nodes whose largest curvature is at most the bound, plus the descent path to the base.

    A child reached by a step that does not decrease the tuple can only keep
    growing along non-backtracking words, so such a branch is cut as soon as its
    maximum curvature passes the bound.
    """
    if not np.any(cfg.C[1] < 0):
        raise ConfigurationError("enumeration by curvature needs a bounded configuration (normalize_bounded first)")
    R = reflection_matrices(cfg)
    scale = max(1.0, float(np.max(np.abs(cfg.C[1]))))
    out: list[OrbitNode] = []
    stack = [((), np.eye(4), cfg.C, True)]
    while stack:
        word, T, X, on_descent = stack.pop()
        b = X[1]
        if on_descent or np.max(b) <= curvature_bound:
            out.append(OrbitNode(word, T, X))
        kids = []
        for j in range(cfg.n):
            if word and word[-1] == j:
                continue
            T2 = T @ R[j]
            X2 = T2 @ cfg.C
            b2 = X2[1]
            decreasing = b2.sum() < b.sum() - 1e-9 * scale * len(b)
            if decreasing and on_descent:
                kids.append((word + (j,), T2, X2, True))
            elif decreasing:
                # cannot happen after an increasing step in a bounded packing
                raise ConfigurationError(f"tuple decreases again after increasing along word {word + (j,)}")
            elif np.max(b2) <= curvature_bound:
                kids.append((word + (j,), T2, X2, False))
        stack.extend(reversed(kids))
    out.sort(key=lambda nd: (len(nd.word), nd.word))
    return out


# -- bounded normalization -----------------------------------------------------------


@dataclass(frozen=True)
class PackingNormalization:
    mobius: np.ndarray
    external_circle: OrientedCircle
    external_index: int


def normalize_bounded(cfg: PackingConfiguration) -> tuple[PackingConfiguration, PackingNormalization]:
    """Move the packing so one initial circle is the external circle (negative curvature).

    If an initial circle already has negative curvature nothing changes.  Otherwise
    the configuration is inverted in its largest initial circle of positive
    curvature, which turns that circle inside out while pulling every other
    circle of the packing into its disc.
    """
    b = cfg.C[1]
    flat = LINE_TOL * max(1.0, float(np.max(np.abs(cfg.C))))
    neg = np.flatnonzero(b < -flat)
    if len(neg) > 1:
        raise ConfigurationError(f"initial circles {neg.tolist()} all have negative curvature")
    if len(neg) == 1:
        M = np.eye(4)
        out = cfg
        k = int(neg[0])
    else:
        pos = np.flatnonzero(b > flat)
        if len(pos) == 0:
            raise ConfigurationError("no initial circle with positive curvature to invert in")
        k = int(pos[np.argmin(b[pos])])
        M = inversion_matrix(cfg.C[:, k])
        out = cfg.transformed(M)
        log.info("normalized by inversion in initial circle %d", k)
    E = OrientedCircle.from_vector(out.C[:, k])
    if not E.curvature < 0:
        raise ConfigurationError("bounded normalization failed: external circle has non-negative curvature")
    return out, PackingNormalization(M, E, k)


def is_bounded(cfg: PackingConfiguration, depth: int = 3, tol: float = 1e-9) -> bool:
    """Sample check: one negative circle, every other sampled circle positive and inside it."""
    neg = np.flatnonzero(cfg.C[1] < 0)
    if len(neg) != 1:
        return False
    E = cfg.C[:, neg[0]]
    for level in orbit_levels(cfg, depth):
        X = level.circles  # (N, 4, m)
        vecs = X.transpose(0, 2, 1).reshape(-1, 4)
        ext = np.all(np.abs(vecs - E) < 1e-9 * max(1.0, np.abs(E).max()), axis=1)
        inner = vecs[~ext]
        if np.any(inner[:, 1] <= 0):
            return False
        # pairing with the disc bounded by E (orientation -E)
        pair = 0.5 * (E[0] * inner[:, 1] + E[1] * inner[:, 0]) - inner[:, 2:] @ E[2:]
        if np.any(pair < 1.0 - tol * np.maximum(1.0, np.abs(inner).max(axis=1))):
            return False
    return True


# -- rendering ---------------------------------------------------------------------

_PALETTE = ("#1f3b73", "#2f6fb0", "#4c9bd6", "#7cc1e4", "#a9dcef", "#cdeef5", "#e6f7fa")


def distinct_circles(nodes: list[OrbitNode], quantum: float = 1e-9) -> list[tuple[np.ndarray, int]]:
    """Unique circles over all node tuples with the smallest depth at which each appears."""
    seen: dict[tuple, int] = {}
    vecs: dict[tuple, np.ndarray] = {}
    for nd in nodes:
        for v in nd.circles.T:
            key = tuple(np.round(v / quantum).astype(np.int64))
            if key not in seen or nd.depth < seen[key]:
                seen[key] = nd.depth
                vecs[key] = v
    return [(vecs[k], seen[k]) for k in sorted(seen, key=lambda k: (seen[k], k))]


@dataclass
class RenderStyle:
    color_by: str = "depth"  # or "curvature"
    stroke_width: float = 0.002
    size_px: int = 800


def render_svg(nodes: list[OrbitNode], style: RenderStyle | None = None) -> str:
    if not nodes:
        raise ValueError("nothing to render: empty node list")
    style = style or RenderStyle()
    circles = distinct_circles(nodes)
    ext = [v for v, _ in circles if v[1] < 0]
    if len(ext) != 1:
        raise ConfigurationError("render needs a bounded packing with exactly one external circle")
    E = OrientedCircle.from_vector(ext[0])
    cx, cy = E.center
    R = E.radius
    pad = 0.0
    vb = (cx - R - pad, -(cy + R + pad), 2 * (R + pad), 2 * (R + pad))
    sw = style.stroke_width * 2 * R
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{style.size_px}" height="{style.size_px}" '
        f'viewBox="{vb[0]:.17g} {vb[1]:.17g} {vb[2]:.17g} {vb[3]:.17g}">',
    ]
    bmax = max(v[1] for v, _ in circles)
    for v, depth in circles:
        c = OrientedCircle.from_vector(v)
        x, y = c.center
        if c.curvature < 0:
            fill = "none"
            cls = "external"
        else:
            if style.color_by == "curvature":
                t = np.log1p(c.curvature) / np.log1p(bmax)
                fill = _PALETTE[min(int(t * (len(_PALETTE) - 1)), len(_PALETTE) - 1)]
            else:
                fill = _PALETTE[min(depth, len(_PALETTE) - 1)]
            cls = f"depth{depth}"
        lines.append(
            f'<circle class="{cls}" cx="{x:.17g}" cy="{-y:.17g}" r="{c.radius:.17g}" '
            f'fill="{fill}" stroke="black" stroke-width="{sw:.6g}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
