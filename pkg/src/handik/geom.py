"""Quaternion algebra, rigid transforms, and pinhole camera math.

Quaternions use the scalar-first Hamilton convention q = [w, x, y, z],
right-handed. Rotations are represented by unit quaternions; q and -q
encode the same rotation (double cover).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Return q / |q|. Works on (..., 4) arrays."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n < 1e-12):
        raise ValueError("cannot normalize zero-norm quaternion")
    return q / n


def quat_conj(q: np.ndarray) -> np.ndarray:
    """Quaternion conjugate (inverse for unit quaternions)."""
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b, renormalized. Broadcasts over (..., 4)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    w2, x2, y2, z2 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    out = np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )
    return quat_normalize(out)


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate 3-vector(s) v by unit quaternion(s) q.

    Uses v' = v + 2*u x (u x v + w*v) with u the vector part, which avoids
    building the full Hamilton sandwich.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    t = np.cross(u, np.cross(u, v) + w * v)
    return v + 2.0 * t


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of unit quaternion(s); (..., 4) -> (..., 3, 3)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[..., 0, 1] = 2.0 * (x * y - w * z)
    m[..., 0, 2] = 2.0 * (x * z + w * y)
    m[..., 1, 0] = 2.0 * (x * y + w * z)
    m[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[..., 1, 2] = 2.0 * (y * z - w * x)
    m[..., 2, 0] = 2.0 * (x * z - w * y)
    m[..., 2, 1] = 2.0 * (y * z + w * x)
    m[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Unit quaternion for a rotation of `angle` radians about `axis`."""
    axis = np.asarray(axis, dtype=float)
    if angle == 0.0:
        return QUAT_IDENTITY.copy()
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise ValueError("degenerate axis: zero-length axis with nonzero angle")
    half = 0.5 * angle
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = axis * (np.sin(half) / n)
    return q


def quat_to_axis_angle(q: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse of quat_from_axis_angle for unit q; angle in [0, pi]."""
    q = np.asarray(q, dtype=float)
    if q[0] < 0.0:  # canonical sign so the angle lands in [0, pi]
        q = -q
    w = min(1.0, max(-1.0, float(q[0])))
    angle = 2.0 * np.arccos(w)
    s = np.linalg.norm(q[1:])
    if s < 1e-12:
        return np.array([1.0, 0.0, 0.0]), 0.0
    return q[1:] / s, angle


def quat_from_rotvec(v: np.ndarray) -> np.ndarray:
    """Axis-angle 3-vector (axis * angle) to unit quaternion."""
    v = np.asarray(v, dtype=float)
    angle = float(np.linalg.norm(v))
    if angle < 1e-12:
        return QUAT_IDENTITY.copy()
    return quat_from_axis_angle(v, angle)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit quaternion (canonical sign w >= 0)."""
    q = rng.standard_normal(4)
    n = np.linalg.norm(q)
    while n < 1e-8:  # pragma: no cover - astronomically unlikely
        q = rng.standard_normal(4)
        n = np.linalg.norm(q)
    q = q / n
    return q if q[0] >= 0.0 else -q


@dataclass(frozen=True)
class RigidTransform:
    """Rotation (unit quaternion) followed by translation."""

    rotation: np.ndarray
    translation: np.ndarray

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(QUAT_IDENTITY.copy(), np.zeros(3))

    def apply(self, v: np.ndarray) -> np.ndarray:
        return quat_rotate(self.rotation, v) + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self o other: apply `other` first, then `self`."""
        return RigidTransform(
            quat_mul(self.rotation, other.rotation),
            quat_rotate(self.rotation, other.translation) + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        inv_q = quat_conj(self.rotation)
        return RigidTransform(inv_q, -quat_rotate(inv_q, self.translation))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


def project(intr: CameraIntrinsics, p: np.ndarray) -> np.ndarray:
    """Project camera-frame point(s) (..., 3) with z > 0 to pixel (u, v)."""
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    if np.any(z <= 0.0):
        raise ValueError("point behind camera: z must be positive")
    u = intr.fx * p[..., 0] / z + intr.cx
    v = intr.fy * p[..., 1] / z + intr.cy
    return np.stack([u, v], axis=-1)


def unproject(intr: CameraIntrinsics, uv: np.ndarray, z) -> np.ndarray:
    """Lift pixel coordinate(s) (u, v) at depth z back to a 3D point."""
    uv = np.asarray(uv, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise ValueError("depth must be positive")
    x = (uv[..., 0] - intr.cx) * z / intr.fx
    y = (uv[..., 1] - intr.cy) * z / intr.fy
    return np.stack([x, y, z * np.ones_like(x)], axis=-1)
