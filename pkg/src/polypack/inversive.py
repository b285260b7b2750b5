"""Augmented curvature-center coordinates for generalized circles.

A circle is stored as the 4-vector ``(co_curvature, curvature, h1, h2)`` where
``h = curvature * center`` for proper circles and ``h`` is the unit normal for
lines.  The interior of an oriented circle is the region its normal points
into; in coordinates it is the set where

    curvature * |z|^2 - 2 h . z + co_curvature < 0.

All pairings use the symmetric form ``P`` of signature (3, 1) with
``c^T P c = -co_curvature * curvature + h1^2 + h2^2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

P = np.array(
    [
        [0.0, -0.5, 0.0, 0.0],
        [-0.5, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)
P_INV = np.linalg.inv(P)

# Lorentz frame: v = (x, y, z, t) with form x^2 + y^2 + z^2 - t^2.
# A spherical cap {u in S^2 : n.u >= k} has v = (n, k) / sqrt(1 - k^2); its
# stereographic image (pole (0,0,1), plane z = 0) has coordinates LORENTZ_TO_ACC @ v.
LORENTZ_TO_ACC = np.array(
    [
        [0.0, 0.0, 1.0, 1.0],
        [0.0, 0.0, -1.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)
ACC_TO_LORENTZ = np.linalg.inv(LORENTZ_TO_ACC)
MINKOWSKI = np.diag([1.0, 1.0, 1.0, -1.0])

INVARIANT_TOL = 1e-9
CLASSIFY_TOL = 1e-9


@dataclass(frozen=True)
class OrientedCircle:
    co_curvature: float
    curvature: float
    h1: float
    h2: float

    @classmethod
    def from_vector(cls, v) -> "OrientedCircle":
        v = np.asarray(v, dtype=float).reshape(4)
        return cls(*map(float, v))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.co_curvature, self.curvature, self.h1, self.h2])

    def __array__(self, dtype=None, copy=None):
        return self.vector if dtype is None else self.vector.astype(dtype)

    def __neg__(self) -> "OrientedCircle":
        return OrientedCircle(-self.co_curvature, -self.curvature, -self.h1, -self.h2)

    @property
    def is_line(self) -> bool:
        return abs(self.curvature) <= INVARIANT_TOL * max(1.0, abs(self.h1), abs(self.h2))

    @property
    def center(self) -> np.ndarray:
        if self.is_line:
            raise ValueError("a line has no center")
        return np.array([self.h1, self.h2]) / self.curvature

    @property
    def radius(self) -> float:
        if self.is_line:
            return math.inf
        return 1.0 / abs(self.curvature)

    def check(self, tol: float = INVARIANT_TOL) -> None:
        """Raise ValueError if the coordinates do not describe an oriented circle."""
        v = self.vector
        scale = max(1.0, float(np.max(np.abs(v))) ** 2)
        self_pair = float(v @ P @ v)
        if abs(self_pair - 1.0) > tol * scale:
            raise ValueError(f"self-pairing {self_pair!r} != 1")


def as_vector(c) -> np.ndarray:
    if isinstance(c, OrientedCircle):
        return c.vector
    return np.asarray(c, dtype=float)


def circle_from_center_radius(
    center, radius: float, orientation: Literal["inward", "outward"] = "inward"
) -> OrientedCircle:
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    if orientation not in ("inward", "outward"):
        raise ValueError(f"unknown orientation {orientation!r}")
    x, y = map(float, center)
    b = 1.0 / radius
    h1, h2 = b * x, b * y
    bt = (h1 * h1 + h2 * h2 - 1.0) / b
    c = OrientedCircle(bt, b, h1, h2)
    return c if orientation == "inward" else -c


def line_from_point_normal(point, unit_normal) -> OrientedCircle:
    n = np.asarray(unit_normal, dtype=float)
    if abs(float(n @ n) - 1.0) > 1e-12:
        raise ValueError(f"normal {unit_normal!r} is not a unit vector")
    p = np.asarray(point, dtype=float)
    return OrientedCircle(2.0 * float(n @ p), 0.0, float(n[0]), float(n[1]))


def pairing(c1, c2) -> float:
    a, b = as_vector(c1), as_vector(c2)
    # written out so that pairing(a, b) == pairing(b, a) bit for bit
    return -0.5 * (a[0] * b[1] + a[1] * b[0]) + a[2] * b[2] + a[3] * b[3]


class Relation(enum.Enum):
    DISJOINT_EXTERNAL = "disjoint-external"
    TANGENT_EXTERNAL = "tangent-external"
    ORTHOGONAL = "orthogonal"
    CROSSING = "crossing"
    TANGENT_NESTED = "tangent-nested"
    DISJOINT_NESTED = "disjoint-nested"


def classify(value: float, tol: float = CLASSIFY_TOL) -> tuple[Relation, float | None]:
    """Map a pairing value to the geometric relation of two distinct circles.

    For crossings the angle between the normals (radians) is returned too.
    """
    if abs(value + 1.0) <= tol:
        return Relation.TANGENT_EXTERNAL, None
    if abs(value - 1.0) <= tol:
        return Relation.TANGENT_NESTED, None
    if abs(value) <= tol:
        return Relation.ORTHOGONAL, math.pi / 2
    if value < -1.0:
        return Relation.DISJOINT_EXTERNAL, None
    if value > 1.0:
        return Relation.DISJOINT_NESTED, None
    return Relation.CROSSING, math.acos(value)


def invert_circle(mirror, c):
    """Reflect ``c`` in the circle ``mirror``.  Returns the same kind as ``c``."""
    d = as_vector(mirror)
    v = as_vector(c)
    out = v - 2.0 * pairing(d, v) * d
    return OrientedCircle.from_vector(out) if isinstance(c, OrientedCircle) else out


def inversion_matrix(mirror) -> np.ndarray:
    d = as_vector(mirror)
    return np.eye(4) - 2.0 * np.outer(d, d) @ P


def is_form_preserving(M, tol: float = 1e-9) -> bool:
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.max(np.abs(M))) ** 2)
    return bool(np.max(np.abs(M.T @ P @ M - P)) <= tol * scale)


def apply_mobius(M, c):
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise ValueError("Mobius matrix must be 4x4")
    if not is_form_preserving(M):
        raise ValueError("matrix does not preserve the form P")
    out = M @ as_vector(c)
    return OrientedCircle.from_vector(out) if isinstance(c, OrientedCircle) else out


def _hermitian(v) -> np.ndarray:
    bt, b, h1, h2 = v
    h = complex(h1, h2)
    return np.array([[b, -h], [-h.conjugate(), bt]], dtype=complex)


def _from_hermitian(H) -> np.ndarray:
    h = -H[0, 1]
    return np.array([H[1, 1].real, H[0, 0].real, h.real, h.imag])


def mobius_matrix(a: complex, b: complex, c: complex, d: complex) -> np.ndarray:
    """4x4 action of z -> (a z + b) / (c z + d) on circle coordinates."""
    T = np.array([[a, b], [c, d]], dtype=complex)
    det = np.linalg.det(T)
    if abs(det) < 1e-300:
        raise ValueError("singular Mobius transformation")
    T = T / np.sqrt(det)
    Ti = np.linalg.inv(T)
    M = np.empty((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        M[:, k] = _from_hermitian(Ti.conj().T @ _hermitian(e) @ Ti)
    return M


def translation_matrix(shift) -> np.ndarray:
    return mobius_matrix(1.0, complex(shift[0], shift[1]), 0.0, 1.0)


def interior_value(c, z) -> np.ndarray:
    """Signed distance-like value: negative inside the interior of ``c``."""
    bt, b, h1, h2 = as_vector(c)
    z = np.asarray(z, dtype=float)
    x, y = z[..., 0], z[..., 1]
    if abs(b) <= 1e-14 * max(1.0, abs(h1), abs(h2)):
        return bt / 2.0 - (h1 * x + h2 * y)
    cx, cy = h1 / b, h2 / b
    return np.sign(b) * (np.hypot(x - cx, y - cy) - 1.0 / abs(b))


# -- sphere <-> plane ---------------------------------------------------------


def cap_to_circle(normal, offset: float) -> np.ndarray:
    """Stereographic image of the spherical cap {u : normal.u >= offset}."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    if not -1.0 < offset < 1.0:
        raise ValueError(f"plane offset {offset!r} does not cut the unit sphere")
    s = math.sqrt(1.0 - offset * offset)
    return LORENTZ_TO_ACC @ np.append(n, offset) / s


def circle_to_cap(c) -> tuple[np.ndarray, float]:
    v = ACC_TO_LORENTZ @ as_vector(c)
    norm = np.linalg.norm(v[:3])
    return v[:3] / norm, float(v[3] / norm)


def stereographic(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u[..., :2] / (1.0 - u[..., 2:3])


def inverse_stereographic(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    r2 = np.sum(w * w, axis=-1, keepdims=True)
    return np.concatenate([2.0 * w, r2 - 1.0], axis=-1) / (r2 + 1.0)
