"""The series Z(s) over a packing, its domain of convergence, and that domain drawn in RP^3.

Weights s live in m-space modulo ker C.  The map s -> C s identifies weight
space with circle space, and the fixed Lorentz frame of ``inversive`` turns the
form G into x^2 + y^2 + z^2 - t^2.  In the affine chart t = 1 the lightlike
cone becomes the unit sphere N and each fundamental weight lands on a vertex
of the midsphere polyhedron the packing came from.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .inversive import ACC_TO_LORENTZ, LORENTZ_TO_ACC
from .packing import PackingConfiguration, orbit_levels
from .rootsys import RootSystem

EXP_CLAMP = 700.0
ZERO_TOL = 1e-9
KIND_TOL = 1e-9


# -- Z(s) -------------------------------------------------------------------------


@dataclass
class ZResult:
    values: np.ndarray  # one partial sum per weight column
    level_sums: np.ndarray  # (depth + 1, q)
    saturated: np.ndarray  # bool per column: an exponent passed the clamp
    terms: int

    @property
    def value(self):
        return self.values[0] if len(self.values) == 1 else self.values


def _expand(rs: RootSystem, B: np.ndarray, last: np.ndarray):
    """Children of stacked tuples B (rows) in lexicographic word order."""
    n = rs.n
    N = len(B)
    par = np.repeat(np.arange(N), n)
    gen = np.tile(np.arange(n), N)
    keep = gen != last[par]
    par, gen = par[keep], gen[keep]
    out = np.empty((len(par), B.shape[1]))
    for j in range(n):
        rows = gen == j
        out[rows] = B[par[rows]] @ rs.reflections[j].T
    return out, gen


def _level_sums(rs, B, last, S, levels, budget=200_000):
    """Per-level sums of exp(-b.s) over the subtree below the rows of B (excluding B itself).

    Rows are split in half whenever the next level would exceed ``budget``, which
    bounds memory; the split depends only on sizes so the reduction order is fixed.
    """
    q = S.shape[1]
    sums = np.zeros((levels, q))
    sat = np.zeros(q, dtype=bool)
    for k in range(levels):
        if len(B) * (rs.n - 1) > budget and len(B) > 1:
            h = len(B) // 2
            for a, b in ((0, h), (h, len(B))):
                s2, t2 = _level_sums(rs, B[a:b], last[a:b], S, levels - k, budget)
                sums[k:] += s2
                sat |= t2
            return sums, sat
        B, last = _expand(rs, B, last)
        ex = -(B @ S)
        sat |= (ex > EXP_CLAMP).any(axis=0)
        with np.errstate(over="ignore"):  # saturated columns are reported as inf
            sums[k] = np.exp(np.minimum(ex, EXP_CLAMP)).sum(axis=0)
    return sums, sat


def z_partial(rs: RootSystem, base, s, depth: int, threads: int = 1, frontier: int = 20_000) -> ZResult:
    """Sum of exp(-(w b).s) over reduced words w of length <= depth.

    ``s`` may be one weight (m-vector) or several stacked as columns (m x q).
    Levels are expanded breadth first up to ``frontier`` rows, then the
    remaining levels are summed over fixed chunks of that frontier, so the
    result does not depend on ``threads``.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    S = np.asarray(s, dtype=float)
    single = S.ndim == 1
    S = S[:, None] if single else S
    q = S.shape[1]
    B = np.asarray(base, dtype=float)[None, :]
    last = np.array([-1])
    level_sums = np.zeros((depth + 1, q))
    ex = -(B @ S)
    saturated = (ex > EXP_CLAMP).any(axis=0)
    level_sums[0] = np.exp(np.minimum(ex, EXP_CLAMP)).sum(axis=0)
    k = 0
    n = rs.n
    while k < depth and len(B) * (n - 1) <= frontier:
        B, last = _expand(rs, B, last)
        k += 1
        ex = -(B @ S)
        saturated |= (ex > EXP_CLAMP).any(axis=0)
        level_sums[k] = np.exp(np.minimum(ex, EXP_CLAMP)).sum(axis=0)
    if k < depth:
        chunk = 256
        starts = list(range(0, len(B), chunk))

        def work(a):
            return _level_sums(rs, B[a : a + chunk], last[a : a + chunk], S, depth - k)

        if threads > 1:
            with ThreadPoolExecutor(threads) as ex_:
                parts = list(ex_.map(work, starts))
        else:
            parts = [work(a) for a in starts]
        for sums, sat in parts:  # fixed reduction order
            with np.errstate(over="ignore"):
                level_sums[k + 1 :] += sums
            saturated |= sat
    with np.errstate(over="ignore"):
        values = level_sums.sum(axis=0)
    values[saturated] = np.inf
    terms = sum(1 if i == 0 else n * (n - 1) ** (i - 1) for i in range(depth + 1))
    return ZResult(values, level_sums, saturated, terms)


def z_tail_bound(rs: RootSystem, base, s, depth: int) -> float:
    """Upper bound on the terms of Z(s) beyond ``depth`` for s in the initial domain."""
    s = np.asarray(s, dtype=float)
    a = rs.weight_pairings(s)
    tol = ZERO_TOL * max(1.0, float(np.max(np.abs(a))))
    if np.any(a < -tol) or np.sum(np.abs(a) <= tol) > 1:
        raise ValueError("tail bound needs all alpha_j . s >= 0 with at most one zero")
    p = rs.pairings(base)
    ptol = ZERO_TOL * max(1.0, float(np.max(np.abs(base))))
    mu = float(np.min(np.abs(p[np.abs(p) > ptol])))
    nu = float(np.min(a[a > tol]))
    n = rs.n
    lead = -float(np.asarray(base) @ s)
    total = 0.0
    k = depth + 1
    while True:
        logt = math.log(n) + (k - 1) * math.log(n - 1) - mu * nu * k * (k - 2) / 4.0 + lead
        t = math.exp(min(logt, EXP_CLAMP))
        total += t
        if k > depth + 5 and logt < math.log(max(total, 1e-300)) - 40:
            break
        k += 1
        if k > depth + 100_000:
            return math.inf
    return total


# -- membership ----------------------------------------------------------------------


class Verdict(enum.Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    UNDETERMINED = "Undetermined"


@dataclass
class MembershipVerdict:
    verdict: Verdict
    word: tuple[int, ...]
    pairings: np.ndarray  # alpha_j . s at the last step
    iterations: int
    witness: tuple[int, int] | None = None  # two non-positive generators when diverging
    final_weight: np.ndarray | None = field(default=None, repr=False)


def _weight_tol(rs: RootSystem, s) -> float:
    return ZERO_TOL * max(1.0, float(np.max(np.abs(s))) * float(np.max(np.abs(rs.roots).sum(axis=0))))


def membership(rs: RootSystem, s, max_iter: int = 64) -> MembershipVerdict:
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    s = np.asarray(s, dtype=float).copy()
    word: list[int] = []
    for it in range(max_iter):
        a = rs.weight_pairings(s)
        tol = _weight_tol(rs, s)
        nonpos = np.flatnonzero(a <= tol)
        if len(nonpos) >= 2:
            return MembershipVerdict(Verdict.DIVERGES, tuple(word), a, it, (int(nonpos[0]), int(nonpos[1])), s)
        if len(nonpos) == 0 or a[nonpos[0]] >= -tol:
            return MembershipVerdict(Verdict.CONVERGES, tuple(word), a, it, None, s)
        j = int(nonpos[0])
        s = rs.coreflections[j] @ s
        word.append(j)
    a = rs.weight_pairings(s)
    return MembershipVerdict(Verdict.UNDETERMINED, tuple(word), a, max_iter, None, s)


def divergence_witness(rs: RootSystem, base, s, pair: tuple[int, int], lengths=range(5, 9)):
    """Alternating words in the two generators of ``pair`` and the dot products of their tuples with s.

    When both alpha . s are non-positive these tuples only grow and their dot
    products with s never increase, so each term exp(-(w b).s) is at least
    exp(-b.s).
    """
    j1, j2 = pair
    out = []
    for L in lengths:
        for first, second in ((j1, j2), (j2, j1)):
            w = tuple(first if k % 2 == 0 else second for k in range(L))
            b = np.asarray(base, dtype=float)
            for j in w:
                b = rs.reflections[j] @ b
            out.append((w, float(b @ s)))
    return out


def alternating_dots(rs: RootSystem, base, s, pair: tuple[int, int], steps: int = 20) -> np.ndarray:
    b = np.asarray(base, dtype=float)
    dots = [float(b @ s)]
    for k in range(steps):
        b = rs.reflections[pair[k % 2]] @ b
        dots.append(float(b @ s))
    return np.array(dots)


# -- RP^3 ----------------------------------------------------------------------------


class Kind(enum.Enum):
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    SPACELIKE = "spacelike"


@dataclass(frozen=True)
class ProjectivePoint:
    homogeneous: np.ndarray  # (x, y, z, t)

    @property
    def form(self) -> float:
        v = self.homogeneous
        return float(v[0] ** 2 + v[1] ** 2 + v[2] ** 2 - v[3] ** 2)

    @property
    def kind(self) -> Kind:
        v = self.homogeneous
        q = self.form / float(v @ v)
        if abs(q) <= KIND_TOL:
            return Kind.LIGHTLIKE
        return Kind.SPACELIKE if q > 0 else Kind.TIMELIKE

    @property
    def at_infinity(self) -> bool:
        v = self.homogeneous
        return abs(v[3]) <= 1e-12 * float(np.linalg.norm(v))

    @property
    def chart(self) -> np.ndarray:
        if self.at_infinity:
            raise ValueError("point lies at infinity in the chart t = 1")
        v = self.homogeneous
        return v[:3] / v[3]


def weight_to_circle_space(rs: RootSystem, s) -> np.ndarray:
    return rs.C @ np.asarray(s, dtype=float)


def project_rp3(rs: RootSystem, s) -> ProjectivePoint:
    s = np.asarray(s, dtype=float)
    x = rs.C @ s
    if np.linalg.norm(x) <= 1e-12 * max(1.0, float(np.linalg.norm(s))) * float(np.linalg.norm(rs.C, 2)):
        raise ValueError("weight lies in ker C and has no image in RP^3")
    return ProjectivePoint(ACC_TO_LORENTZ @ x)


def lift_chart_point(rs: RootSystem, u) -> np.ndarray:
    """A weight whose image in the chart is ``u``."""
    v = np.append(np.asarray(u, dtype=float), 1.0)
    return rs.C_right_inverse @ (LORENTZ_TO_ACC @ v)


@dataclass
class CloudPoint:
    point: ProjectivePoint
    word: tuple[int, ...]
    vertex: int


def _config(rs: RootSystem) -> PackingConfiguration:
    return PackingConfiguration(rs.graph, rs.C, rs.D)


def weight_cloud(rs: RootSystem, depth: int, dedup: bool = True, quantum: float = 1e-9) -> list[CloudPoint]:
    """Images of the fundamental weights under words of length <= depth.

    The image of omega_i under a word corresponds to the packing circle g c_i,
    so points are generated in circle space and deduplicated there.
    """
    out = []
    seen = set()
    for level in orbit_levels(_config(rs), depth):
        X = level.circles
        for w, Xk in zip(level.words, X):
            for i in range(rs.m):
                x = Xk[:, i]
                if dedup:
                    key = tuple(np.round(x / (quantum * max(1.0, float(np.max(np.abs(x)))))).astype(np.int64))
                    if key in seen:
                        continue
                    seen.add(key)
                out.append(CloudPoint(ProjectivePoint(ACC_TO_LORENTZ @ x), tuple(int(v) for v in w), i))
    return out


@dataclass(frozen=True)
class TangentCone:
    apex: np.ndarray | None  # None when the apex is at infinity
    base_center: np.ndarray
    base_radius: float
    base_normal: np.ndarray
    base_offset: float


def tangent_cone(p) -> TangentCone:
    """Cone tangent to the unit sphere with apex ``p`` (chart 3-vector or ProjectivePoint)."""
    if isinstance(p, ProjectivePoint):
        v = p.homogeneous
    else:
        v = np.append(np.asarray(p, dtype=float), 1.0)
    x, t = v[:3], float(v[3])
    if t < 0:
        x, t = -x, -t
    xx = float(x @ x)
    if not xx > t * t * (1.0 + KIND_TOL):
        raise ValueError("apex is not spacelike (inside or on the sphere)")
    center = (t / xx) * x
    radius = math.sqrt(1.0 - t * t / xx)
    nrm = math.sqrt(xx)
    apex = None if t <= 1e-12 * nrm else x / t
    return TangentCone(apex, center, radius, x / nrm, t / nrm)


# -- checks from the chart geometry ------------------------------------------------------


@dataclass
class InversionReport:
    generator: int
    samples: int
    max_error: float
    cap_swap_failures: int
    mirror_normal: np.ndarray
    mirror_offset: float


def mirror_plane(rs: RootSystem, j: int) -> tuple[np.ndarray, float]:
    """Plane {alpha_j . s = 0} in the chart, as (unit normal, offset)."""
    c = rs.roots[:, j] @ rs.C_right_inverse @ LORENTZ_TO_ACC
    n, k = c[:3], -c[3]
    nn = float(np.linalg.norm(n))
    return n / nn, k / nn


def sphere_inversion(u, normal, offset) -> np.ndarray:
    """Inversion of unit-sphere points in the circle cut by the plane normal . x = offset."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if abs(offset) < 1e-12:
        return u - 2.0 * np.outer(u @ normal, normal)
    a = normal / offset
    R2 = float(a @ a) - 1.0
    w = u - a
    return a + R2 * w / np.sum(w * w, axis=1, keepdims=True)


def apply_coreflection_chart(rs: RootSystem, j: int, u) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=float))
    V = np.hstack([u, np.ones((len(u), 1))])
    S = (rs.C_right_inverse @ (LORENTZ_TO_ACC @ V.T))  # weights as columns
    S2 = rs.coreflections[j] @ S
    V2 = ACC_TO_LORENTZ @ (rs.C @ S2)
    return (V2[:3] / V2[3]).T


def verify_inversion_action(rs: RootSystem, j: int, samples: int = 1000, seed: int = 0) -> InversionReport:
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((samples, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    n, k = mirror_plane(rs, j)
    got = apply_coreflection_chart(rs, j, u)
    want = sphere_inversion(u, n, k)
    err = float(np.max(np.linalg.norm(got - want, axis=1)))
    side0 = u @ n - k
    side1 = got @ n - k
    away = np.abs(side0) > 1e-9
    swaps = int(np.sum(np.sign(side0[away]) == np.sign(side1[away])))
    return InversionReport(j, samples, err, swaps, n, k)


@dataclass(frozen=True)
class EdgeForm:
    i: int
    j: int
    adjacent: bool
    discriminant: float  # G_ii G_jj - G_ij^2 of the restricted binary form


def edge_tangency_report(rs: RootSystem) -> list[EdgeForm]:
    G = rs.G
    out = []
    for i in range(rs.m):
        for j in range(i + 1, rs.m):
            out.append(EdgeForm(i, j, bool(rs.graph.adjacency[i, j]), float(G[i, i] * G[j, j] - G[i, j] ** 2)))
    return out


def fundamental_polyhedron(rs: RootSystem) -> np.ndarray:
    """Chart images of the fundamental weights (vertices of the closed initial domain)."""
    return np.array([project_rp3(rs, np.eye(rs.m)[i]).chart for i in range(rs.m)])


def export_cone_mesh(rs: RootSystem, depth: int) -> dict:
    if depth < 0:
        raise ValueError("depth must be non-negative")
    cones = []
    for cp in weight_cloud(rs, depth):
        if cp.point.at_infinity:
            continue
        tc = tangent_cone(cp.point)
        cones.append(
            {
                "apex": tc.apex,
                "base_center": tc.base_center,
                "base_radius": tc.base_radius,
                "word": list(cp.word),
                "vertex": cp.vertex,
            }
        )
    return {
        "sphere": {"center": [0.0, 0.0, 0.0], "radius": 1.0},
        "polyhedron": {"vertices": fundamental_polyhedron(rs), "faces": [list(f) for f in rs.graph.faces]},
        "cones": cones,
    }
