"""Root and weight space algebra of a polyhedral packing.

Curvature tuples live in the row space V of C (m-space).  Weights live in
m-space modulo ker C.  The simple roots are alpha_j = -C^T P d_j and the
reflections act on tuples by sigma_j(b) = b - 2 (alpha_j^T Gt b) alpha_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, DescentError, NotInRowSpaceError
from .inversive import P, P_INV
from .packing import PackingConfiguration
from .polyhedron import PolyhedronGraph

PINV_RTOL = 1e-10
ROWSPACE_TOL = 1e-8
SIGN_TOL = 1e-9


@dataclass(frozen=True)
class RootSystem:
    graph: PolyhedronGraph
    C: np.ndarray
    D: np.ndarray
    G: np.ndarray
    C_right_inverse: np.ndarray
    G_tilde: np.ndarray
    roots: np.ndarray  # m x n, column j = alpha_j
    reflections: np.ndarray  # (n, m, m), sigma_j acting on tuples
    kernel_basis: np.ndarray  # m x (m - 4)
    root_gram: np.ndarray = field(repr=False)  # n x n, alpha^T Gt alpha

    @property
    def m(self) -> int:
        return self.C.shape[1]

    @property
    def n(self) -> int:
        return self.D.shape[1]

    @property
    def coreflections(self) -> np.ndarray:
        """sigma_j^T acting on weights, shape (n, m, m)."""
        return self.reflections.transpose(0, 2, 1)

    def pairings(self, b) -> np.ndarray:
        """alpha_j^T Gt b for every j (tuples may be stacked as rows)."""
        return np.asarray(b, dtype=float) @ self.G_tilde @ self.roots

    def weight_pairings(self, s) -> np.ndarray:
        """alpha_j . s for every j."""
        return np.asarray(s, dtype=float) @ self.roots

    def quadratic(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        return np.einsum("...i,ij,...j->...", b, self.G_tilde, b)

    def rowspace_residual(self, b) -> float:
        b = np.asarray(b, dtype=float)
        proj = b @ (self.C_right_inverse @ self.C).T
        return float(np.max(np.abs(b - proj)) / max(1.0, float(np.max(np.abs(b)))))

    def to_dict(self) -> dict:
        return {
            "labeling": {"vertices": list(range(self.m)), "faces": [list(f) for f in self.graph.faces]},
            "C": self.C,
            "D": self.D,
            "G": self.G,
            "G_tilde": self.G_tilde,
            "roots": self.roots,
            "kernel_basis": self.kernel_basis,
        }


def build_root_system(cfg: PackingConfiguration) -> RootSystem:
    C, D = cfg.C, cfg.D
    U, sv, Vt = np.linalg.svd(C)
    rank = int(np.sum(sv > PINV_RTOL * sv[0]))
    if rank != 4:
        raise ConfigurationError(f"C has rank {rank}, expected 4")
    Ct = np.linalg.pinv(C, rcond=PINV_RTOL)
    G = C.T @ P @ C
    Gt = Ct @ P_INV @ Ct.T
    A = -C.T @ P @ D
    n, m = D.shape[1], C.shape[1]
    sig = np.empty((n, m, m))
    for j in range(n):
        sig[j] = np.eye(m) - 2.0 * np.outer(C.T @ P @ D[:, j], Ct @ D[:, j])
    kernel = scipy.linalg.null_space(C, rcond=PINV_RTOL)
    return RootSystem(cfg.graph, C.copy(), D.copy(), G, Ct, Gt, A, sig, kernel, A.T @ Gt @ A)


def simple_roots_matrix(rs: RootSystem) -> np.ndarray:
    return rs.roots.copy()


def check_root_system(rs: RootSystem, tol: float = 1e-8) -> list[str]:
    """Human-readable list of violated invariants (empty when all hold)."""
    out = []
    m = rs.m
    if np.max(np.abs(rs.C @ rs.C_right_inverse - np.eye(4))) > tol:
        out.append("C C~ is not the identity")
    Pr = rs.C_right_inverse @ rs.C
    if np.max(np.abs(Pr @ Pr - Pr)) > tol or np.max(np.abs(Pr - Pr.T)) > tol:
        out.append("C~ C is not an orthogonal projector")
    if np.max(np.abs(rs.C @ rs.G_tilde @ rs.C.T - P_INV)) > tol:
        out.append("C Gt C^T differs from P^-1")
    for name, M in (("G", rs.G), ("G_tilde", rs.G_tilde)):
        ev = np.linalg.eigvalsh(M)
        z = tol * max(1.0, np.abs(ev).max())
        counts = (int(np.sum(ev > z)), int(np.sum(ev < -z)), int(np.sum(np.abs(ev) <= z)))
        if counts != (3, 1, m - 4):
            out.append(f"{name} has signature {counts}, expected (3, 1, {m - 4})")
    diag = np.diag(rs.root_gram)
    if np.max(np.abs(diag - 1.0)) > tol:
        out.append("some alpha_j^T Gt alpha_j != 1")
    off = rs.root_gram - np.diag(diag)
    if np.max(off) > tol:
        out.append("some alpha_j^T Gt alpha_k > 0")
    if np.min(rs.roots) < -tol or np.any(np.max(rs.roots, axis=0) <= tol):
        out.append("a simple root has a negative entry or vanishes")
    for j, S in enumerate(rs.reflections):
        if np.max(np.abs((S @ S - np.eye(m)) @ Pr)) > tol:
            out.append(f"sigma_{j} is not an involution on the row space")
        if np.max(np.abs(Pr @ (S.T @ rs.G_tilde @ S - rs.G_tilde) @ Pr)) > tol * 10:
            out.append(f"sigma_{j} does not preserve Gt on the row space")
    return out


def _require_rowspace(rs: RootSystem, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    res = rs.rowspace_residual(b)
    if res > ROWSPACE_TOL:
        raise NotInRowSpaceError(f"tuple is not in the row space of C (relative residual {res:.2e})")
    return b


def reflect_tuple(rs: RootSystem, j: int, b) -> np.ndarray:
    b = _require_rowspace(rs, b)
    return b - 2.0 * float(rs.pairings(b)[j]) * rs.roots[:, j]


def replay(rs: RootSystem, b, word) -> np.ndarray:
    """Apply the generators of ``word`` in order (first entry first)."""
    b = np.asarray(b, dtype=float)
    for j in word:
        b = rs.reflections[j] @ b
    return b


def _sign_tol(b) -> float:
    return SIGN_TOL * max(1.0, float(np.max(np.abs(b))))


def descend_to_base(rs: RootSystem, b, max_iter: int = 10_000) -> tuple[np.ndarray, tuple[int, ...]]:
    """Walk down to the base tuple; returns (base, word) with replay(base, word) == b."""
    b = _require_rowspace(rs, b)
    path = []
    for _ in range(max_iter):
        p = rs.pairings(b)
        tol = _sign_tol(b)
        down = np.flatnonzero(p > tol)
        if len(down) == 0:
            return b, tuple(reversed(path))
        if len(down) > 1:
            raise DescentError(f"generators {down.tolist()} both decrease the tuple (pairings {p[down].tolist()})")
        j = int(down[0])
        b = b - 2.0 * p[j] * rs.roots[:, j]
        path.append(j)
    raise DescentError(f"no base tuple reached after {max_iter} steps")


@dataclass(frozen=True)
class Multiplicity:
    multiplicity: int
    fixing_generator: int | None = None


def classify_multiplicity(rs: RootSystem, base) -> Multiplicity:
    p = rs.pairings(base)
    tol = _sign_tol(base)
    if np.any(p > tol):
        raise DescentError("tuple is not a base tuple: some generator decreases it")
    zero = np.flatnonzero(np.abs(p) <= tol)
    if len(zero) > 1:
        raise DescentError(f"generators {zero.tolist()} all fix the base tuple")
    if len(zero) == 1:
        return Multiplicity(2, int(zero[0]))
    return Multiplicity(1)


# -- growth --------------------------------------------------------------------------


def growth_increments(root_gram, pairings, word) -> np.ndarray:
    """Coefficients d_k with b_k - b_{k-1} = d_k alpha_{j_k}, from root data alone."""
    M = np.asarray(root_gram, dtype=float)
    p = np.array(pairings, dtype=float)
    out = []
    for j in word:
        d = -2.0 * p[j]
        out.append(d)
        p = p + d * M[:, j]
    return np.array(out)


@dataclass
class GrowthReport:
    mu: float
    increments: np.ndarray
    bounds: np.ndarray

    @property
    def slack(self) -> np.ndarray:
        return self.increments - self.bounds

    @property
    def ok(self) -> bool:
        return bool(np.all(self.slack >= -1e-9 * max(1.0, float(np.max(np.abs(self.increments), initial=0.0)))))


def growth_lower_bound_check(rs: RootSystem, base, word) -> GrowthReport:
    p = rs.pairings(base)
    tol = _sign_tol(base)
    if np.sum(np.abs(p) <= tol) > 1:
        raise DescentError("growth bound needs at most one generator fixing the base")
    if any(a == b for a, b in zip(word, word[1:])):
        raise ValueError("word is not reduced")
    nonzero = np.abs(p[np.abs(p) > tol])
    mu = float(nonzero.min())
    d = growth_increments(rs.root_gram, p, word)
    k = np.arange(1, len(word) + 1)
    return GrowthReport(mu, d, 2.0 * mu * (k - 1))


def random_reduced_word(n: int, length: int, rng: np.random.Generator) -> tuple[int, ...]:
    w = []
    for _ in range(length):
        j = int(rng.integers(n - 1)) if w else int(rng.integers(n))
        if w and j >= w[-1]:
            j += 1
        w.append(j)
    return tuple(w)
