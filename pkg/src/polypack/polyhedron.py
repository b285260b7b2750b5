"""Polyhedron graphs given by oriented face lists, and midsphere realizations.

Faces are listed counterclockwise as seen from outside the solid, with
0-based vertex indices.  A realization places the vertices in 3-space so that
every edge line is tangent to the unit sphere.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull

from .errors import ConvergenceError, InvalidGraphError
from .inversive import cap_to_circle

log = logging.getLogger(__name__)

CONNECTIVITY_LIMIT = 64


@dataclass(frozen=True)
class PolyhedronGraph:
    name: str
    vertex_count: int
    faces: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "faces", tuple(tuple(int(v) for v in f) for f in self.faces))

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        es = set()
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                es.add((min(a, b), max(a, b)))
        return tuple(sorted(es))

    @cached_property
    def directed_edge_face(self) -> dict[tuple[int, int], int]:
        """Map directed edge (a, b) to the face traversing it in that direction."""
        out = {}
        for j, f in enumerate(self.faces):
            for a, b in zip(f, f[1:] + f[:1]):
                out.setdefault((a, b), j)
        return out

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        nb = [set() for _ in range(self.vertex_count)]
        for a, b in self.edges:
            nb[a].add(b)
            nb[b].add(a)
        return tuple(frozenset(s) for s in nb)

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.vertex_count, self.vertex_count), dtype=bool)
        for a, b in self.edges:
            A[a, b] = A[b, a] = True
        return A

    @cached_property
    def incidence(self) -> np.ndarray:
        """Boolean m x n matrix, True where face j contains vertex i."""
        inc = np.zeros((self.vertex_count, self.face_count), dtype=bool)
        for j, f in enumerate(self.faces):
            inc[list(f), j] = True
        return inc

    @cached_property
    def face_adjacency(self) -> np.ndarray:
        n = self.face_count
        A = np.zeros((n, n), dtype=bool)
        for (a, b), j in self.directed_edge_face.items():
            k = self.directed_edge_face.get((b, a))
            if k is not None and k != j:
                A[j, k] = A[k, j] = True
        return A

    def to_dict(self) -> dict:
        return {"name": self.name, "vertex_count": self.vertex_count, "faces": [list(f) for f in self.faces]}

    @classmethod
    def from_dict(cls, d: dict) -> "PolyhedronGraph":
        try:
            return cls(str(d.get("name", "unnamed")), int(d["vertex_count"]), tuple(tuple(f) for f in d["faces"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidGraphError([f"malformed polyhedron document: {exc}"]) from exc

    @classmethod
    def load(cls, path) -> "PolyhedronGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_invalid(self):
        if self.errors:
            raise InvalidGraphError(self.errors)


def _connected_without(g: PolyhedronGraph, removed: set[int]) -> bool:
    keep = [v for v in range(g.vertex_count) if v not in removed]
    if not keep:
        return True
    seen = {keep[0]}
    queue = deque([keep[0]])
    while queue:
        v = queue.popleft()
        for w in g.neighbors[v]:
            if w not in removed and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(keep)


def validate_graph(g: PolyhedronGraph) -> ValidationReport:
    rep = ValidationReport()
    m = g.vertex_count
    if m < 4:
        rep.errors.append(f"a polyhedron needs at least 4 vertices, got {m}")
    for j, f in enumerate(g.faces):
        if len(f) < 3:
            rep.errors.append(f"face {j} has fewer than 3 vertices")
        if len(set(f)) != len(f):
            rep.errors.append(f"face {j} repeats a vertex")
        bad = [v for v in f if not 0 <= v < m]
        if bad:
            rep.errors.append(f"face {j} has vertex indices out of range: {bad}")
    if rep.errors:
        return rep

    seen: dict[tuple[int, int], int] = {}
    for j, f in enumerate(g.faces):
        for a, b in zip(f, f[1:] + f[:1]):
            if (a, b) in seen:
                rep.errors.append(
                    f"edge ({a}, {b}) traversed twice in same direction (faces {seen[(a, b)]} and {j})"
                )
            else:
                seen[(a, b)] = j
    for a, b in g.edges:
        if (a, b) not in seen or (b, a) not in seen:
            rep.errors.append(f"edge ({a}, {b}) is not shared by two oppositely oriented faces")

    V, E, F = m, len(g.edges), g.face_count
    if V - E + F != 2:
        rep.errors.append(f"Euler formula violated: V - E + F = {V} - {E} + {F} = {V - E + F}")

    for v in range(m):
        d = len(g.neighbors[v])
        if d == 0:
            rep.errors.append(f"vertex {v} lies on no face")
        elif d < 3:
            rep.errors.append(f"vertex {v} has degree {d} < 3")

    if rep.errors:
        return rep
    if m <= CONNECTIVITY_LIMIT:
        if not _connected_without(g, set()):
            rep.errors.append("graph is not connected")
        else:
            for u, v in itertools.combinations(range(m), 2):
                if not _connected_without(g, {u, v}):
                    rep.errors.append(f"graph is not 3-connected: removing vertices {u} and {v} disconnects it")
                    break
    else:
        msg = f"3-connectivity not checked for {m} > {CONNECTIVITY_LIMIT} vertices"
        log.warning(msg)
        rep.warnings.append(msg)
    return rep


def require_valid(g: PolyhedronGraph) -> None:
    validate_graph(g).raise_if_invalid()


def dual_graph(g: PolyhedronGraph) -> PolyhedronGraph:
    require_valid(g)
    def_face = g.directed_edge_face
    pred = {}
    for j, f in enumerate(g.faces):
        for k, v in enumerate(f):
            pred[(j, v)] = f[k - 1]
    faces = []
    for v in range(g.vertex_count):
        start = next(j for j, f in enumerate(g.faces) if v in f)
        ring = [start]
        j = start
        while True:
            # the next face counterclockwise around v owns the edge v -> pred(v)
            j = def_face[(v, pred[(j, v)])]
            if j == start:
                break
            ring.append(j)
        faces.append(tuple(ring))
    name = _DUAL_NAMES.get(g.name, f"dual of {g.name}")
    return PolyhedronGraph(name, g.face_count, tuple(faces))


_DUAL_NAMES = {
    "tetrahedron": "tetrahedron",
    "octahedron": "cube",
    "cube": "octahedron",
    "icosahedron": "dodecahedron",
    "dodecahedron": "icosahedron",
}


def graphs_isomorphic(g1: PolyhedronGraph, g2: PolyhedronGraph) -> bool:
    """Isomorphism of the vertex-face incidence structure (small graphs only)."""
    if (g1.vertex_count, g1.face_count, len(g1.edges)) != (g2.vertex_count, g2.face_count, len(g2.edges)):
        return False
    return find_isomorphism(g1, g2) is not None


def find_isomorphism(g1: PolyhedronGraph, g2: PolyhedronGraph) -> list[int] | None:
    """Vertex bijection g1 -> g2 preserving edges and face sets, by backtracking."""
    m = g1.vertex_count
    faces2 = {frozenset(f) for f in g2.faces}
    faces1 = [frozenset(f) for f in g1.faces]
    deg1 = [len(s) for s in g1.neighbors]
    deg2 = [len(s) for s in g2.neighbors]
    order = []
    seen = set()
    for s in range(m):
        if s in seen:
            continue
        queue = deque([s])
        seen.add(s)
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(g1.neighbors[v]):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def ok(v, w):
        if deg1[v] != deg2[w]:
            return False
        for u, x in mapping.items():
            if (u in g1.neighbors[v]) != (x in g2.neighbors[w]):
                return False
        return True

    def search(k):
        if k == m:
            return all(frozenset(mapping[v] for v in f) in faces2 for f in faces1)
        v = order[k]
        for w in range(m):
            if w not in used and ok(v, w):
                mapping[v] = w
                used.add(w)
                if search(k + 1):
                    return True
                del mapping[v]
                used.discard(w)
        return False

    return [mapping[v] for v in range(m)] if search(0) else None


# -- realizations --------------------------------------------------------------


@dataclass(frozen=True)
class MidsphereRealization:
    graph: PolyhedronGraph
    vertex_positions: np.ndarray

    def __post_init__(self):
        p = np.array(self.vertex_positions, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "vertex_positions", p)

    def edge_distances(self) -> np.ndarray:
        p = self.vertex_positions
        a = p[[i for i, _ in self.graph.edges]]
        b = p[[j for _, j in self.graph.edges]]
        return np.linalg.norm(np.cross(a, b), axis=1) / np.linalg.norm(a - b, axis=1)

    def tangency_residual(self) -> float:
        return float(np.max(np.abs(self.edge_distances() - 1.0)))

    def tangency_points(self) -> np.ndarray:
        p = self.vertex_positions
        a = p[[i for i, _ in self.graph.edges]]
        b = p[[j for _, j in self.graph.edges]]
        d = b - a
        s = -np.sum(a * d, axis=1) / np.sum(d * d, axis=1)
        return a + s[:, None] * d

    def face_planes(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit normals and offsets (normal . x = offset) of the face planes."""
        p = self.vertex_positions
        normals, offsets = [], []
        for f in self.graph.faces:
            q = p[list(f)]
            n = np.sum(np.cross(q, np.roll(q, -1, axis=0)), axis=0)  # Newell
            n = n / np.linalg.norm(n)
            normals.append(n)
            offsets.append(float(np.mean(q @ n)))
        return np.array(normals), np.array(offsets)

    def planarity_residual(self) -> float:
        normals, offsets = self.face_planes()
        p = self.vertex_positions
        worst = 0.0
        for j, f in enumerate(self.graph.faces):
            worst = max(worst, float(np.max(np.abs(p[list(f)] @ normals[j] - offsets[j]))))
        return worst


def vertex_circle(r: MidsphereRealization, vertex: int) -> np.ndarray:
    """Projected circle of the cap seen from ``vertex`` (pole (0,0,1), plane z=0)."""
    p = r.vertex_positions[vertex]
    d = float(np.linalg.norm(p))
    if d <= 1.0 + 1e-12:
        raise ValueError(f"vertex {vertex} is not outside the unit sphere (|p| = {d})")
    return cap_to_circle(p / d, 1.0 / d)


def face_circle(r: MidsphereRealization, face: int) -> np.ndarray:
    normals, offsets = r.face_planes()
    return cap_to_circle(normals[face], offsets[face])


# -- built-in solids -------------------------------------------------------------

PHI = (1.0 + math.sqrt(5.0)) / 2.0


def _prism(k: int) -> np.ndarray:
    R = 1.0 / (2.0 * math.sin(math.pi / k))  # unit edge, square sides
    ang = 2.0 * math.pi * np.arange(k) / k
    ring = np.stack([R * np.cos(ang), R * np.sin(ang)], axis=1)
    top = np.hstack([ring, np.full((k, 1), 0.5)])
    bottom = np.hstack([ring, np.full((k, 1), -0.5)])
    return np.vstack([top, bottom])


def _cyclic(pts):
    out = []
    for x, y, z in pts:
        out += [(x, y, z), (z, x, y), (y, z, x)]
    return out


def _raw_coordinates(name: str) -> np.ndarray:
    s2 = math.sqrt(2.0)
    if name == "tetrahedron":
        return np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], dtype=float)
    if name == "octahedron":
        return np.array([(0, 0, s2), (s2, 0, 0), (0, s2, 0), (-s2, 0, 0), (0, -s2, 0), (0, 0, -s2)])
    if name == "cube":
        return np.array(list(itertools.product((1, -1), repeat=3)), dtype=float) / s2
    if name == "icosahedron":
        return np.array(_cyclic([(0, a, b * PHI) for a in (1, -1) for b in (1, -1)]), dtype=float)
    if name == "dodecahedron":
        pts = list(itertools.product((1, -1), repeat=3))
        pts += _cyclic([(0, a / PHI, b * PHI) for a in (1, -1) for b in (1, -1)])
        return np.array(pts, dtype=float)
    if name == "triangular_prism":
        return _prism(3)
    if name == "pentagonal_prism":
        return _prism(5)
    if name == "hexagonal_prism":
        return _prism(6)
    raise KeyError(name)


BUILTINS = (
    "tetrahedron",
    "octahedron",
    "cube",
    "icosahedron",
    "dodecahedron",
    "triangular_prism",
    "pentagonal_prism",
    "hexagonal_prism",
)


def _hull_faces(p: np.ndarray) -> tuple[tuple[int, ...], ...]:
    hull = ConvexHull(p)
    groups: list[tuple[np.ndarray, float, set[int]]] = []
    for simplex, eq in zip(hull.simplices, hull.equations):
        n, off = eq[:3], -eq[3]
        for gn, goff, verts in groups:
            if np.allclose(gn, n, atol=1e-9) and abs(goff - off) < 1e-9:
                verts.update(int(v) for v in simplex)
                break
        else:
            groups.append((n, off, {int(v) for v in simplex}))
    faces = []
    for n, _, verts in groups:
        vs = sorted(verts)
        c = p[vs].mean(axis=0)
        e1 = p[vs[0]] - c
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        ang = [math.atan2((p[v] - c) @ e2, (p[v] - c) @ e1) for v in vs]
        ring = [v for _, v in sorted(zip(ang, vs))]
        k = ring.index(min(ring))
        faces.append(tuple(ring[k:] + ring[:k]))
    return tuple(sorted(faces))


def builtin_graph(name: str) -> PolyhedronGraph:
    return canonical_realization(name).graph


def canonical_realization(name: str) -> MidsphereRealization:
    try:
        p = _raw_coordinates(name)
    except KeyError:
        raise KeyError(f"unknown polyhedron {name!r}; built-ins: {', '.join(BUILTINS)}") from None
    g = PolyhedronGraph(name, len(p), _hull_faces(p))
    a = p[[i for i, _ in g.edges]]
    b = p[[j for _, j in g.edges]]
    dist = np.linalg.norm(np.cross(a, b), axis=1) / np.linalg.norm(a - b, axis=1)
    if np.ptp(dist) > 1e-12 * dist.mean():
        raise AssertionError(f"{name}: built-in coordinates have no midsphere")
    return MidsphereRealization(g, p / dist.mean())


# -- Mobius gauge on the sphere ------------------------------------------------------


def boost_matrix(w) -> np.ndarray:
    """Lorentz boost with velocity ``w`` acting on homogeneous (x, y, z, t)."""
    w = np.asarray(w, dtype=float)
    beta = float(np.linalg.norm(w))
    if beta >= 1.0:
        raise ValueError("boost velocity must have norm < 1")
    L = np.eye(4)
    if beta == 0.0:
        return L
    g = 1.0 / math.sqrt(1.0 - beta * beta)
    n = w / beta
    L[:3, :3] += (g - 1.0) * np.outer(n, n)
    L[:3, 3] = -g * w
    L[3, :3] = -g * w
    L[3, 3] = g
    return L


def projective_apply(L, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    h = np.hstack([pts, np.ones((len(pts), 1))]) @ L.T
    if np.any(h[:, 3] <= 0):
        raise ValueError("projective map sends a point through infinity")
    return h[:, :3] / h[:, 3:]


def centering_transform(points, tol: float = 1e-14, max_iter: int = 2000) -> np.ndarray:
    """Lorentz transform moving the centroid of unit-sphere points to the origin."""
    L = np.eye(4)
    u = np.asarray(points, dtype=float)
    for _ in range(max_iter):
        c = u.mean(axis=0)
        if np.linalg.norm(c) < tol:
            return L
        B = boost_matrix(0.5 * c)
        L = B @ L
        u = projective_apply(B, u)
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    raise ConvergenceError("conformal centering did not converge", float(np.linalg.norm(u.mean(axis=0))))


def _rotation_to_z(v) -> np.ndarray:
    v = np.asarray(v, dtype=float) / np.linalg.norm(v)
    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(v, z)
    s, c = np.linalg.norm(axis), float(v @ z)
    if s < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    k = axis / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * (K @ K)


def normalize_gauge(r: MidsphereRealization, anchor: int = 0) -> MidsphereRealization:
    """Center the edge tangency points at the origin and put ``anchor`` on the +z axis."""
    L = centering_transform(r.tangency_points())
    p = projective_apply(L, r.vertex_positions)
    R = _rotation_to_z(p[anchor])
    p = p @ R.T
    others = [i for i in range(len(p)) if i != anchor and np.hypot(*p[i, :2]) > 1e-9]
    if others:
        phi = math.atan2(p[others[0], 1], p[others[0], 0])
        c, s = math.cos(-phi), math.sin(-phi)
        p = p @ np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]).T
    return MidsphereRealization(r.graph, p)


# -- midsphere solver -------------------------------------------------------------


def tutte_embedding(g: PolyhedronGraph) -> np.ndarray:
    outer = max(range(g.face_count), key=lambda j: (len(g.faces[j]), -j))
    ring = g.faces[outer]
    m = g.vertex_count
    pos = np.zeros((m, 2))
    ang = -2.0 * math.pi * np.arange(len(ring)) / len(ring)
    pos[list(ring)] = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    inner = [v for v in range(m) if v not in ring]
    if inner:
        idx = {v: k for k, v in enumerate(inner)}
        A = np.zeros((len(inner), len(inner)))
        rhs = np.zeros((len(inner), 2))
        for v in inner:
            A[idx[v], idx[v]] = len(g.neighbors[v])
            for w in g.neighbors[v]:
                if w in idx:
                    A[idx[v], idx[w]] -= 1.0
                else:
                    rhs[idx[v]] += pos[w]
        pos[inner] = np.linalg.solve(A, rhs)
    return pos


def _seed(g: PolyhedronGraph, rng: np.random.Generator | None) -> np.ndarray:
    from .inversive import inverse_stereographic

    w = tutte_embedding(g)
    if rng is not None:
        w = w + 0.02 * rng.standard_normal(w.shape)
    u = inverse_stereographic(3.0 * w)
    u = projective_apply(centering_transform(u, tol=1e-6), u)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    p = np.empty_like(u)
    for v in range(g.vertex_count):
        ang = min(math.acos(np.clip(u[v] @ u[w], -1, 1)) for w in g.neighbors[v])
        p[v] = u[v] / math.cos(0.5 * ang)
    q = np.empty((g.face_count, 3))
    for j, f in enumerate(g.faces):
        q[j] = np.linalg.lstsq(p[list(f)], np.ones(len(f)), rcond=None)[0]
    return np.concatenate([p.ravel(), q.ravel()])


def _residuals(x, g, edges_i, edges_j, inc_v, inc_f):
    m = g.vertex_count
    p = x[: 3 * m].reshape(m, 3)
    q = x[3 * m :].reshape(-1, 3)
    a, b = p[edges_i], p[edges_j]
    u = np.cross(a, b)
    A = np.sum(u * u, axis=1)
    d = a - b
    B = np.sum(d * d, axis=1)
    r_edge = A / B - 1.0
    r_inc = np.sum(q[inc_f] * p[inc_v], axis=1) - 1.0
    return np.concatenate([r_edge, r_inc]), (p, q, a, b, u, A, B, d)


def _jacobian(x, g, edges_i, edges_j, inc_v, inc_f, parts):
    p, q, a, b, u, A, B, d = parts
    m = g.vertex_count
    ne, ni = len(edges_i), len(inc_v)
    J = np.zeros((ne + ni, x.size))
    dA_a = 2.0 * np.cross(b, u)
    dA_b = 2.0 * np.cross(u, a)
    dB_a = 2.0 * d
    inv_B2 = 1.0 / (B * B)
    ga = (dA_a * B[:, None] - A[:, None] * dB_a) * inv_B2[:, None]
    gb = (dA_b * B[:, None] + A[:, None] * dB_a) * inv_B2[:, None]
    rows = np.arange(ne)
    for k in range(3):
        J[rows, 3 * edges_i + k] += ga[:, k]
        J[rows, 3 * edges_j + k] += gb[:, k]
    rows = ne + np.arange(ni)
    for k in range(3):
        J[rows, 3 * inc_v + k] = q[inc_f, k]
        J[rows, 3 * m + 3 * inc_f + k] = p[inc_v, k]
    return J


def levenberg_marquardt(fun, jac, x0, tol, max_iter, lam=1e-3):
    """Minimize |fun(x)|^2; stop when max |fun(x)| <= tol."""
    x = np.array(x0, dtype=float)
    r, parts = fun(x)
    cost = float(r @ r)
    for it in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            return x, float(np.max(np.abs(r))), it
        J = jac(x, parts)
        A = J.T @ J
        grad = J.T @ r
        diag = np.diag(A).copy()
        while True:
            step = np.linalg.solve(A + lam * (np.diag(diag) + 1e-12 * np.eye(len(x))), -grad)
            x_new = x + step
            r_new, parts_new = fun(x_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                x, r, parts, cost = x_new, r_new, parts_new, cost_new
                lam = max(lam / 3.0, 1e-15)
                break
            lam *= 4.0
            if lam > 1e16:
                raise ConvergenceError("Levenberg-Marquardt stalled", float(np.max(np.abs(r))))
    res = float(np.max(np.abs(r)))
    if res <= tol:
        return x, res, max_iter
    raise ConvergenceError(f"no convergence in {max_iter} iterations (residual {res:.3e})", res)


def _is_convex_realization(r: MidsphereRealization) -> bool:
    p = r.vertex_positions
    for a, b in r.graph.edges:
        d = p[b] - p[a]
        s = -(p[a] @ d) / (d @ d)
        if not 0.0 < s < 1.0:
            return False
    normals, offsets = r.face_planes()
    return bool(np.all(offsets > -1.0)) and bool(np.all(p @ normals.T <= offsets + 1e-7))


def solve_midsphere(
    g: PolyhedronGraph, tol: float = 1e-12, max_iter: int = 500, attempts: int = 5, seed: int = 0
) -> MidsphereRealization:
    """Edge-tangent realization of ``g`` by Levenberg-Marquardt on vertex and face-pole positions.

    Unknowns are the vertex positions and the poles q_j of the face planes
    (q_j . x = 1).  Residuals are squared edge distances minus one and the
    incidences q_j . p_i - 1.  The result is Mobius-normalized: tangency
    points centered at the origin, vertex 0 on the positive z axis.
    """
    require_valid(g)
    if not tol > 0:
        raise ValueError("tol must be positive")
    ei = np.array([i for i, _ in g.edges])
    ej = np.array([j for _, j in g.edges])
    inc_v = np.array([v for f in g.faces for v in f])
    inc_f = np.array([j for j, f in enumerate(g.faces) for _ in f])

    def fun(x):
        return _residuals(x, g, ei, ej, inc_v, inc_f)

    def jac(x, parts):
        return _jacobian(x, g, ei, ej, inc_v, inc_f, parts)

    rng = None
    last: Exception | None = None
    for attempt in range(attempts):
        x0 = _seed(g, rng)
        try:
            x, res, its = levenberg_marquardt(fun, jac, x0, tol=0.1 * tol, max_iter=max_iter)
        except ConvergenceError as exc:
            last = exc
            rng = np.random.default_rng(seed + attempt)
            continue
        p = x[: 3 * g.vertex_count].reshape(-1, 3)
        r = MidsphereRealization(g, p)
        normals, offsets = r.face_planes()
        if np.mean(offsets) < 0:  # mirror image: faces wound clockwise from outside
            r = MidsphereRealization(g, p * np.array([-1.0, 1.0, 1.0]))
        r = normalize_gauge(r)
        if _is_convex_realization(r) and r.tangency_residual() <= tol:
            log.info("midsphere for %s: residual %.2e after %d iterations", g.name, r.tangency_residual(), its)
            return r
        last = ConvergenceError("solver reached a non-convex solution", r.tangency_residual())
        rng = np.random.default_rng(seed + attempt)
    raise last if last is not None else ConvergenceError("midsphere solve failed")
