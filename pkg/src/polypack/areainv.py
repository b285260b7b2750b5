"""Face regions of a realized tuple, their areas, and descent by the area invariant.

For face j the region F_j is the part of the interior of the dual circle d_j
lying outside every ring circle of the face, intersected with the disc of the
external circle E.  Its boundary is a chain of circular arcs; areas come from
Green's theorem applied arc by arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DescentError, RegionError
from .inversive import P, as_vector, interior_value, pairing
from .packing import PackingConfiguration, PackingNormalization, reflection_matrices

TANGENT_TOL = 1e-6  # circles of a realized tuple carry roundoff from long words
ANGLE_MERGE = 1e-9
TIE_TOL = 1e-9


# -- dual circle of a face ring ----------------------------------------------------


def tangency_point(c1, c2) -> np.ndarray | None:
    """Contact point of two tangent oriented circles; None when it is the point at infinity."""
    a, b = as_vector(c1), as_vector(c2)
    sgn = -1.0 if pairing(a, b) > 0 else 1.0
    den = a[1] + sgn * b[1]
    scale = max(abs(a[1]), abs(b[1]), abs(a[2]), abs(a[3]), 1e-300)
    if abs(den) <= 1e-12 * scale:
        return None
    return (a[2:] + sgn * b[2:]) / den


def face_dual_circle(ring, outside=None, tol: float = 1e-8) -> np.ndarray:
    """Circle orthogonal to every circle of ``ring``, with unit self-pairing.

    The sign is fixed by ``outside`` (circles that must pair negatively with the
    result) when given.  Otherwise the ring is taken to run clockwise around the
    face region, which then lies on the right of the ring's tangency points.
    """
    ring = [as_vector(c) for c in ring]
    k = len(ring)
    if k < 3:
        raise RegionError(f"a face ring needs at least 3 circles, got {k}")
    for a in range(k):
        v = pairing(ring[a], ring[(a + 1) % k])
        if abs(v + 1.0) > tol:
            raise RegionError(f"ring circles {a} and {(a + 1) % k} are not tangent (pairing {v:.12g})")
    A = np.array([P @ c for c in ring])
    scale = float(np.max(np.abs(A)))
    _, sv, vt = np.linalg.svd(A / scale)
    if sv[2] <= tol * sv[0]:
        raise RegionError("ring is degenerate: orthogonal circles form more than a pencil")
    d = vt[-1]
    resid = float(np.max(np.abs((A / scale) @ d)))
    if resid > tol:
        raise RegionError(f"ring has no common orthogonal circle (residual {resid:.2e})")
    q = float(d @ P @ d)
    if q <= 0:
        raise RegionError("orthogonal solution is not a real circle")
    d = d / math.sqrt(q)
    if outside is not None and len(outside):
        s = sum(pairing(d, o) for o in outside)
        return -d if s > 0 else d
    pts = []
    for a in range(k):
        pts.append(tangency_point(ring[a], ring[(a + 1) % k]))
    if any(p is None for p in pts):
        i = next(a for a, p in enumerate(pts) if p is None)
        pts = pts[i + 1 :] + pts[:i]
    pts = [p for p in pts if p is not None]
    line = abs(d[1]) <= 1e-12 * max(1.0, float(np.max(np.abs(d))))
    if line:
        u = pts[-1] - pts[0]
        right = np.array([u[1], -u[0]])
        return d if float(d[2:] @ right) > 0 else -d
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    area2 = float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    want_positive = area2 < 0  # clockwise points: region is the disc
    return d if (d[1] > 0) == want_positive else -d


# -- arcs ------------------------------------------------------------------------


def _circle_geometry(v) -> tuple[float, float, float]:
    bt, b, h1, h2 = v
    return h1 / b, h2 / b, 1.0 / abs(b)


def _is_line(v) -> bool:
    return abs(v[1]) <= 1e-12 * max(1.0, abs(v[2]), abs(v[3]))


@dataclass(frozen=True)
class Arc:
    label: str
    cx: float
    cy: float
    r: float
    theta0: float
    sweep: float  # positive = counterclockwise

    def point(self, t: float) -> tuple[float, float]:
        th = self.theta0 + t * self.sweep
        return self.cx + self.r * math.cos(th), self.cy + self.r * math.sin(th)

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)

    def green(self) -> float:
        """Integral of (x dy - y dx) / 2 along the arc."""
        a, b = self.theta0, self.theta0 + self.sweep
        r = self.r
        return 0.5 * (
            r * r * self.sweep + r * (self.cx * (math.sin(b) - math.sin(a)) - self.cy * (math.cos(b) - math.cos(a)))
        )

    def reversed(self) -> "Arc":
        return Arc(self.label, self.cx, self.cy, self.r, self.theta0 + self.sweep, -self.sweep)


@dataclass(frozen=True)
class Constraint:
    """Half-region of an oriented circle: side +1 keeps its interior, -1 its exterior."""

    label: str
    circle: np.ndarray
    side: int
    boundary: bool = True
    touches: frozenset = frozenset()  # labels of constraints known to be tangent to this one


@dataclass
class ArcRegion:
    face: int
    loops: list[list[Arc]]  # closed boundary loops, region on the left of every arc
    constraints: list[Constraint] = field(repr=False)
    clipped_by_external: bool = False
    dual: np.ndarray | None = field(default=None, repr=False)

    @property
    def arcs(self) -> list[Arc]:
        return [a for loop in self.loops for a in loop]

    @property
    def connected_components(self) -> int:
        return sum(1 for loop in self.loops if _loop_signed_area(loop) > 0)

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        ok = np.ones(pts.shape[:-1], dtype=bool)
        for c in self.constraints:
            iv = interior_value(c.circle, pts)
            ok &= (iv <= tol) if c.side > 0 else (iv >= -tol)
        return ok


def _line_circle(n, c, cx, cy, r, tangent: bool) -> list[tuple[float, float]]:
    nn = n[0] * n[0] + n[1] * n[1]
    off = (c - (n[0] * cx + n[1] * cy)) / nn
    fx, fy = cx + off * n[0], cy + off * n[1]
    if tangent:
        return [(fx, fy)]
    d2 = off * off * nn
    if d2 >= r * r:
        return []
    s = math.sqrt((r * r - d2) / nn)
    return [(fx - s * n[1], fy + s * n[0]), (fx + s * n[1], fy - s * n[0])]


def _circle_pairing(K, L) -> float:
    """Pairing of two proper circles from centers and radii.

    The coordinate form loses everything to cancellation once curvatures reach
    1e5 or so; the Euclidean expression keeps relative accuracy.
    """
    kx, ky, kr = _circle_geometry(K)
    lx, ly, lr = _circle_geometry(L)
    d = math.hypot(kx - lx, ky - ly)
    sign = math.copysign(1.0, K[1]) * math.copysign(1.0, L[1])
    return sign * (kr * kr + lr * lr - d * d) / (2.0 * kr * lr)


def _intersections(K, L, force_tangent: bool = False) -> list[tuple[float, float]]:
    """Common points of proper circle K with circle or line L (tangency clamped)."""
    cx, cy, r = _circle_geometry(K)
    if _is_line(L):
        p = pairing(K, L)
        tangent = force_tangent or abs(abs(p) - 1.0) <= TANGENT_TOL
        if abs(p) > 1.0 and not tangent:
            return []
        return _line_circle((2.0 * L[2], 2.0 * L[3]), L[0], cx, cy, r, tangent)
    lx, ly, lr = _circle_geometry(L)
    p = _circle_pairing(K, L)
    tangent = force_tangent or abs(abs(p) - 1.0) <= TANGENT_TOL
    if abs(p) > 1.0 and not tangent:
        return []
    if tangent:
        d = math.hypot(cx - lx, cy - ly)
        if abs(d - (r + lr)) <= abs(d - abs(r - lr)):
            return [((lr * cx + r * lx) / (r + lr), (lr * cy + r * ly) / (r + lr))]
        if r == lr:
            return []
        return [((r * lx - lr * cx) / (r - lr), (r * ly - lr * cy) / (r - lr))]
    n = (2.0 * (cx - lx), 2.0 * (cy - ly))
    c = (cx * cx + cy * cy - r * r) - (lx * lx + ly * ly - lr * lr)
    return _line_circle(n, c, cx, cy, r, False)


def _merge_angles(angles: list[float]) -> list[float]:
    if not angles:
        return []
    a = sorted(x % (2 * math.pi) for x in angles)
    out = [a[0]]
    for x in a[1:]:
        if x - out[-1] > ANGLE_MERGE:
            out.append(x)
    if len(out) > 1 and out[0] + 2 * math.pi - out[-1] <= ANGLE_MERGE:
        out.pop()
    return out


def _satisfies(constraints, skip: int, x: float, y: float, tol: float) -> bool:
    for k, c in enumerate(constraints):
        if k == skip:
            continue
        iv = float(interior_value(c.circle, np.array([x, y])))
        if c.side > 0 and iv > tol:
            return False
        if c.side < 0 and iv < -tol:
            return False
    return True


def _joins(a: Arc, b: Arc, rel: float) -> bool:
    """Whether the end of ``a`` meets the start of ``b``, relative to the smaller arc."""
    ex, ey = a.end
    tol = rel * min(a.r, b.r) + 1e-13 * max(1.0, abs(ex), abs(ey))
    return math.dist(b.start, (ex, ey)) <= tol


def _chain(arcs: list[Arc], rel: float) -> list[list[Arc]]:
    unused = list(range(len(arcs)))
    loops = []
    while unused:
        first = unused.pop(0)
        loop = [arcs[first]]
        for _ in range(len(arcs) + 1):
            cur = loop[-1]
            ex, ey = cur.end
            cands = [i for i in unused if _joins(cur, arcs[i], rel)]
            closing = _joins(cur, loop[0], rel)
            options = [("arc", i, arcs[i].label) for i in cands]
            if closing:
                options.append(("close", -1, loop[0].label))
            if not options:
                raise RegionError(f"arc chain does not close (open end at {ex:.6g}, {ey:.6g})")
            # at a pinch point two boundary circles touch; a component switches circle there
            switch = [o for o in options if o[2] != cur.label]
            pool = switch or options
            pick = next((o for o in pool if o[0] == "close"), pool[0])
            if pick[0] == "close":
                break
            unused.remove(pick[1])
            loop.append(arcs[pick[1]])
        else:
            raise RegionError("arc chain does not close")
        loops.append(loop)
    return loops


def region_from_constraints(constraints: list[Constraint], face: int = -1, dual=None) -> ArcRegion:
    """Boundary arcs of the intersection of the given circle half-regions."""
    for c in constraints:
        if c.boundary and _is_line(c.circle):
            raise RegionError(f"boundary constraint {c.label} is a line")
    arcs: list[Arc] = []
    for a, K in enumerate(constraints):
        if not K.boundary:
            continue
        cx, cy, r = _circle_geometry(K.circle)
        angles = []
        for b, L in enumerate(constraints):
            # a non-boundary constraint only meets K where boundary circles already do
            if b != a and L.boundary:
                known = L.label in K.touches or K.label in L.touches
                angles += [math.atan2(y - cy, x - cx) for x, y in _intersections(K.circle, L.circle, known)]
        cuts = _merge_angles(angles)
        ccw = K.side * K.circle[1] > 0
        if not cuts:
            pieces = [(0.0, 2 * math.pi)]
        else:
            pieces = [(cuts[i], (cuts[(i + 1) % len(cuts)] - cuts[i]) % (2 * math.pi) or 2 * math.pi) for i in range(len(cuts))]
        for th0, span in pieces:
            mid = th0 + 0.5 * span
            mx, my = cx + r * math.cos(mid), cy + r * math.sin(mid)
            if _satisfies(constraints, a, mx, my, 1e-9 * r + 1e-14 * max(1.0, abs(mx), abs(my))):
                arc = Arc(K.label, cx, cy, r, th0, span)
                arcs.append(arc if ccw else arc.reversed())
    if not arcs:
        return ArcRegion(face, [], constraints, False, dual)
    loops = _chain(arcs, 1e-5)
    clipped = any(a.label == "E" for a in arcs)
    return ArcRegion(face, loops, constraints, clipped, dual)


def _loop_signed_area(loop: list[Arc]) -> float:
    return sum(a.green() for a in loop)


def _loop_polygon(loop: list[Arc], per_arc: int = 32) -> np.ndarray:
    t = np.linspace(0.0, 1.0, per_arc, endpoint=False)
    return np.vstack([np.array([a.point(x) for x in t]) for a in loop])


def _inside_polygon(poly: np.ndarray, x: float, y: float) -> bool:
    px, py = poly[:, 0], poly[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    cross = (py > y) != (qy > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = px + (y - py) * (qx - px) / (qy - py)
    return bool(np.sum(cross & (x < xi)) % 2)


def region_area(region: ArcRegion) -> float:
    """Outer loops run counterclockwise and holes clockwise, so the signed sum is the area.

    The absolute value makes the result independent of the traversal direction.
    """
    return abs(float(sum(_loop_signed_area(loop) for loop in region.loops)))


def component_areas(region: ArcRegion) -> list[float]:
    """Area of each connected component (outer loop minus the holes it encloses)."""
    signed = [_loop_signed_area(loop) for loop in region.loops]
    outer = [i for i, a in enumerate(signed) if a > 0]
    areas = {i: signed[i] for i in outer}
    polys = {i: _loop_polygon(region.loops[i]) for i in outer}
    for i, a in enumerate(signed):
        if a > 0:
            continue
        x, y = region.loops[i][0].start
        hosts = [k for k in outer if _inside_polygon(polys[k], x, y)]
        if hosts:
            areas[min(hosts, key=lambda k: signed[k])] += a
    return [areas[i] for i in outer]


def compute_regions(circles, duals, graph, external=None) -> list[ArcRegion]:
    """One region per face of a realized tuple, clipped by the external disc when given."""
    X = np.asarray(circles, dtype=float)
    Dx = np.asarray(duals, dtype=float)
    E = None if external is None else as_vector(external)
    if E is not None and not E[1] < 0:
        raise RegionError("external circle must have negative curvature")
    ext_vertex = None
    if E is not None:
        close = [i for i in range(X.shape[1]) if np.allclose(X[:, i], E, rtol=0.0, atol=1e-7 * max(1.0, np.abs(E).max()))]
        ext_vertex = close[0] if close else None
    out = []
    for j, face in enumerate(graph.faces):
        k = len(face)
        cons = [
            Constraint(f"c{i}", X[:, i], -1, touches=frozenset({f"c{face[(a - 1) % k]}", f"c{face[(a + 1) % k]}"}))
            for a, i in enumerate(face)
        ]
        cons.append(Constraint(f"d{j}", Dx[:, j], +1, boundary=False))
        if E is not None and ext_vertex not in face:
            touch = frozenset(f"c{i}" for i in face if ext_vertex is not None and graph.adjacency[ext_vertex, i])
            cons.append(Constraint("E", E, -1, touches=touch))
        out.append(region_from_constraints(cons, j, Dx[:, j]))
    return out


@dataclass
class AreaReport:
    areas: np.ndarray
    max_index: int
    area_invariant: float
    regions: list[ArcRegion] = field(repr=False, default_factory=list)


def _external(cfg: PackingConfiguration) -> np.ndarray:
    neg = np.flatnonzero(cfg.C[1] < 0)
    if len(neg) != 1:
        raise RegionError("configuration is not bounded-normalized")
    return cfg.C[:, neg[0]]


def report_from_circles(X, Dx, graph, external) -> AreaReport:
    regions = compute_regions(X, Dx, graph, external)
    areas = np.array([region_area(r) for r in regions])
    k = int(np.argmax(areas))
    return AreaReport(areas, k, float(areas[k]), regions)


def area_report(cfg: PackingConfiguration, transform=None, external=None) -> AreaReport:
    T = np.eye(4) if transform is None else np.asarray(transform, dtype=float)
    E = _external(cfg) if external is None else as_vector(external)
    return report_from_circles(T @ cfg.C, T @ cfg.D, cfg.graph, E)


def area_invariant(cfg: PackingConfiguration, transform=None, normalization: PackingNormalization | None = None):
    ext = None if normalization is None else normalization.external_circle.vector
    return area_report(cfg, transform, ext)


def disc_area_budget(cfg: PackingConfiguration, transform=None) -> tuple[float, float, float]:
    """(external disc area, area of tuple discs inside it, total region area)."""
    T = np.eye(4) if transform is None else np.asarray(transform, dtype=float)
    rep = area_report(cfg, T)
    X = T @ cfg.C
    E = _external(cfg)
    discs = sum(math.pi / X[1, i] ** 2 for i in range(cfg.m) if X[1, i] > 0)
    return math.pi / E[1] ** 2, discs, float(rep.areas.sum())


def inverted_area(region: ArcRegion, mirror, nodes: int = 64) -> float:
    """Area of the image of ``region`` under inversion in ``mirror`` (center outside the region).

    Uses the flux of V = -R^4 rho_hat / (2 rho^3) about the inversion center, whose
    divergence is the inversion's area scale R^4 / rho^4.
    """
    mirror = as_vector(mirror)
    if _is_line(mirror):  # reflection in a line preserves area
        return region_area(region)
    ox, oy, R = _circle_geometry(mirror)
    if region.contains(np.array([ox, oy])):
        raise RegionError("inversion center lies in the region")
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    total = 0.0
    for loop in region.loops:
        for a in loop:
            th = a.theta0 + t * a.sweep
            x = a.cx + a.r * np.cos(th) - ox
            y = a.cy + a.r * np.sin(th) - oy
            dx = -a.r * np.sin(th) * a.sweep
            dy = a.r * np.cos(th) * a.sweep
            rho2 = x * x + y * y
            f = -(R**4) / (2.0 * rho2 * rho2)  # V = f * (x, y)
            total += float(np.sum(w * f * (x * dy - y * dx)))
    return abs(total)


# -- geometric descent -----------------------------------------------------------------


@dataclass
class GeometricDescent:
    bases: list[np.ndarray]  # transforms of the one or two minimal tuples
    word: tuple[int, ...]  # generators applied from the start tuple to the first base
    areas: list[float]  # area invariant along the path, start first
    tie_generator: int | None = None


def realize_word(cfg: PackingConfiguration, word, R=None) -> tuple[np.ndarray, np.ndarray]:
    """Circles and dual circles of the node reached by ``word``.

    The generators are applied to the columns right to left.  This matches the
    transform product but never forms it, so entries stay the size of the circles.
    """
    R = reflection_matrices(cfg) if R is None else R
    X, Dx = np.array(cfg.C), np.array(cfg.D)
    for j in reversed(tuple(word)):
        X, Dx = R[j] @ X, R[j] @ Dx
    return X, Dx


def area_decreasing_generators(cfg, T, R=None, current: float | None = None, tol: float = TIE_TOL, word=None):
    """(strictly decreasing generators, tied generators, child areas).

    With ``word`` the node and its children are realized from reduced words,
    otherwise from the transform ``T``.
    """
    R = reflection_matrices(cfg) if R is None else R
    E = _external(cfg)
    if word is None:
        T = np.asarray(T, dtype=float)
        node = (T @ cfg.C, T @ cfg.D)
        children = [(T @ R[j] @ cfg.C, T @ R[j] @ cfg.D) for j in range(cfg.n)]
    else:
        word = tuple(word)
        node = realize_word(cfg, word, R)
        children = [realize_word(cfg, _reduce(word, j), R) for j in range(cfg.n)]
    a0 = report_from_circles(*node, cfg.graph, E).area_invariant if current is None else current
    kids = np.array([report_from_circles(X, Dx, cfg.graph, E).area_invariant for X, Dx in children])
    thr = tol * a0
    return np.flatnonzero(kids < a0 - thr), np.flatnonzero(np.abs(kids - a0) <= thr), kids


def _reduce(word, j: int) -> tuple[int, ...]:
    return word[:-1] if word and word[-1] == j else word + (j,)


def geometric_base_descent(
    cfg: PackingConfiguration, transform=None, max_iter: int = 1000, word=None
) -> GeometricDescent:
    """Follow the unique area-decreasing generator until none decreases.

    When the start node is given by its word, every node on the path and its
    children are realized from reduced words, which keeps roundoff at the size
    of the circles instead of the size of the accumulated transform.
    """
    R = reflection_matrices(cfg)
    E = _external(cfg)
    if word is not None:
        node = tuple(int(j) for j in word)
        T = np.eye(4)
        for j in node:
            T = T @ R[j]
        X, Dx = realize_word(cfg, node, R)
    else:
        node = None
        T = np.eye(4) if transform is None else np.asarray(transform, dtype=float)
        X, Dx = T @ cfg.C, T @ cfg.D
    area = report_from_circles(X, Dx, cfg.graph, E).area_invariant
    path: list[int] = []
    areas = [area]
    for _ in range(max_iter):
        down, tie, kids = area_decreasing_generators(cfg, T, R, area, word=node)
        if len(down) > 1:
            raise DescentError(f"generators {down.tolist()} both decrease the area invariant")
        if len(down) == 1:
            j = int(down[0])
            T = T @ R[j]
            if node is not None:
                node = _reduce(node, j)
            area = float(kids[j])
            path.append(j)
            areas.append(area)
            continue
        if len(tie) > 1:
            raise DescentError(f"generators {tie.tolist()} all tie with the minimal area")
        if len(tie) == 1:
            j = int(tie[0])
            return GeometricDescent([T, T @ R[j]], tuple(path), areas, j)
        return GeometricDescent([T], tuple(path), areas)
    raise DescentError(f"area descent did not stop within {max_iter} steps")
