"""Vector helpers shared by the frame, elastic and contact machinery.

All functions broadcast over leading axes: inputs of shape (..., 3) give
outputs of the same leading shape.  Nothing in here owns state.
"""

from __future__ import annotations

import numpy as np

# Antipodal-tangent threshold for parallel transport (1 + cos below this
# is treated as a 180-degree flip and routed through two half rotations).
_ANTIPODAL_TOL = 1e-6


def norm(v: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis."""
    return np.linalg.norm(v, axis=-1)


def normalize(v: np.ndarray) -> np.ndarray:
    """Unit vectors along the last axis; raises on zero-length input."""
    n = norm(v)
    if np.any(n < 1e-14):
        raise ValueError("cannot normalize zero-length vector")
    return v / n[..., None]


def cross_matrix(v: np.ndarray) -> np.ndarray:
    """Skew matrix K with K @ x = v x x, batched: (..., 3) -> (..., 3, 3)."""
    v = np.asarray(v)
    out = np.zeros(v.shape[:-1] + (3, 3), dtype=v.dtype)
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dot product over the last axis, keeps leading shape."""
    return np.einsum("...i,...i->...", a, b)


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Outer product over the last axis: (...,3),(...,3) -> (...,3,3)."""
    return a[..., :, None] * b[..., None, :]


def rotate_about_axis(v: np.ndarray, axis: np.ndarray, angle) -> np.ndarray:
    """Rodrigues rotation of v about unit axis by angle (radians), batched."""
    angle = np.asarray(angle, dtype=float)
    c = np.cos(angle)[..., None]
    s = np.sin(angle)[..., None]
    return (
        v * c
        + np.cross(axis, v) * s
        + axis * dot(axis, v)[..., None] * (1.0 - c)
    )


def signed_angle(a: np.ndarray, b: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Signed angle from a to b about axis, in (-pi, pi].

    a and b need not be unit length or exactly perpendicular to axis; the
    angle is measured between their projections via atan2.
    """
    s = dot(np.cross(a, b), axis)
    c = dot(a, b)
    return np.arctan2(s, c)


def parallel_transport(v: np.ndarray, t_from: np.ndarray, t_to: np.ndarray) -> np.ndarray:
    """Rotate v by the minimal rotation carrying unit tangent t_from to t_to.

    Batched over leading axes.  Nearly antipodal tangent pairs (within
    1e-6 of a flip) are transported through an intermediate perpendicular
    axis in two half steps, which is continuous and norm preserving.
    """
    single = np.asarray(v).ndim == 1 and np.asarray(t_from).ndim == 1 and np.asarray(t_to).ndim == 1
    v = np.atleast_2d(np.asarray(v, dtype=float))
    t_from = np.atleast_2d(np.asarray(t_from, dtype=float))
    t_to = np.atleast_2d(np.asarray(t_to, dtype=float))
    v, t_from, t_to = np.broadcast_arrays(v, t_from, t_to)

    b = np.cross(t_from, t_to)
    c = dot(t_from, t_to)
    den = 1.0 + c

    out = np.array(v, dtype=float, copy=True)
    regular = den > _ANTIPODAL_TOL
    if np.any(regular):
        br = b[regular]
        vr = v[regular]
        out[regular] = (
            c[regular][..., None] * vr
            + np.cross(br, vr)
            + (dot(br, vr) / den[regular])[..., None] * br
        )
    for i in np.nonzero(~regular)[0]:
        mid = _any_perpendicular(t_from[i])
        half = parallel_transport(v[i], t_from[i], mid)
        out[i] = parallel_transport(half, mid, t_to[i])
    return out[0] if single else out


def _any_perpendicular(t: np.ndarray) -> np.ndarray:
    """A deterministic unit vector perpendicular to unit vector t."""
    seed = seed_perpendicular_axis(t)
    return normalize(np.cross(t, seed))


def seed_perpendicular_axis(t: np.ndarray) -> np.ndarray:
    """Global axis least aligned with t (deterministic frame seed)."""
    a = np.abs(t)
    k = int(np.argmin(a))
    e = np.zeros(3)
    e[k] = 1.0
    return e


def first_frame_vector(t: np.ndarray) -> np.ndarray:
    """Deterministic unit vector perpendicular to unit tangent t."""
    return _any_perpendicular(np.asarray(t, dtype=float))


def curvature_binormal(e_i: np.ndarray, e_j: np.ndarray) -> np.ndarray:
    """Discrete curvature binormal 2 e_i x e_j / (|e_i||e_j| + e_i.e_j).

    Raises for kinked (near antiparallel) edge pairs, where the formula
    blows up; the caller reports the offending spring.
    """
    den = norm(e_i) * norm(e_j) + dot(e_i, e_j)
    if np.any(den < 1e-12):
        bad = np.nonzero(np.atleast_1d(den < 1e-12))[0]
        raise KinkError(bad.tolist())
    return 2.0 * np.cross(e_i, e_j) / np.asarray(den)[..., None]


class KinkError(ValueError):
    """Edges of a bending stencil are antiparallel (fold-through kink)."""

    def __init__(self, indices):
        self.indices = indices
        super().__init__(f"antiparallel edge pair(s) in bending stencil(s) {indices}")


class GeometryWarning(UserWarning):
    """Recoverable geometric degeneracy handled by a documented fallback."""
