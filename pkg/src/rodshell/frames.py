"""Per-edge orthonormal frames and their transport in space and time.

Every twist-carrying edge holds a reference frame {d1, d2, t} and a
material frame {m1, m2, t} obtained by rotating the reference frame by
the edge twist angle.  Reference frames are initialized once and then
carried between configurations by parallel transport; the reference
twist accumulated across a bending-twisting stencil is kept unwrapped so
multi-turn twisting is representable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    GeometryWarning,
    dot,
    first_frame_vector,
    normalize,
    parallel_transport,
    rotate_about_axis,
    signed_angle,
)

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class FrameSet:
    """Reference frames per twist edge plus per-spring unwrapped reference
    twist and (for the mid-edge shell model) the start-of-step edge frames."""

    d1: np.ndarray  # (M, 3)
    d2: np.ndarray  # (M, 3)
    ref_twist: np.ndarray  # (n_bend_twist_springs,)
    tau0: np.ndarray  # (Z, 3) frozen per step; empty for the hinge model

    def material_frames(self, theta: np.ndarray):
        """Material frames m1, m2 for twist angles theta (M,)."""
        c = np.cos(theta)[:, None]
        s = np.sin(theta)[:, None]
        m1 = self.d1 * c + self.d2 * s
        m2 = -self.d1 * s + self.d2 * c
        return m1, m2


def edge_vectors(positions: np.ndarray, edge_nodes: np.ndarray):
    """Edge vectors, lengths and unit tangents for rows of edge_nodes."""
    e = positions[edge_nodes[:, 1]] - positions[edge_nodes[:, 0]]
    ln = np.linalg.norm(e, axis=1)
    if np.any(ln < 1e-12):
        bad = np.nonzero(ln < 1e-12)[0].tolist()
        raise ValueError(f"zero-length edge(s) {bad}")
    return e, ln, e / ln[:, None]


def init_reference_frames(positions: np.ndarray, edge_nodes: np.ndarray):
    """Seed d1 on the first edge of each connected chain and space-parallel
    transport it across shared nodes, visiting edges in index order."""
    m = edge_nodes.shape[0]
    _, _, t = edge_vectors(positions, edge_nodes)
    d1 = np.zeros((m, 3))
    d2 = np.zeros((m, 3))

    # edge adjacency through shared nodes
    node_edges: dict[int, list[int]] = {}
    for k, (a, b) in enumerate(edge_nodes):
        node_edges.setdefault(int(a), []).append(k)
        node_edges.setdefault(int(b), []).append(k)

    visited = np.zeros(m, dtype=bool)
    for seed in range(m):
        if visited[seed]:
            continue
        d1[seed] = first_frame_vector(t[seed])
        visited[seed] = True
        queue = [seed]
        while queue:
            cur = queue.pop(0)
            neighbors = sorted(
                {
                    k
                    for n in edge_nodes[cur]
                    for k in node_edges[int(n)]
                    if not visited[k]
                }
            )
            for nxt in neighbors:
                if visited[nxt]:
                    continue
                d1[nxt] = parallel_transport(d1[cur], t[cur], t[nxt])
                visited[nxt] = True
                queue.append(nxt)
    d1 = _reorthonormalize(d1, t)
    d2 = np.cross(t, d1)
    return d1, d2


def _reorthonormalize(d1: np.ndarray, t: np.ndarray) -> np.ndarray:
    d1 = d1 - dot(d1, t)[:, None] * t
    return normalize(d1)


def transport_frames(frames: FrameSet, t_old: np.ndarray, t_new: np.ndarray) -> FrameSet:
    """Time-parallel transport of the reference frames onto new tangents.

    Orthonormality is restored by Gram-Schmidt against the new tangent,
    which bounds drift accumulation over arbitrarily many steps.
    """
    d1 = parallel_transport(frames.d1, t_old, t_new)
    d1 = _reorthonormalize(d1, t_new)
    d2 = np.cross(t_new, d1)
    return replace(frames, d1=d1, d2=d2)


def reference_twist(
    edge_pairs: np.ndarray,
    signs: np.ndarray,
    d1: np.ndarray,
    tangents: np.ndarray,
    prev_twist: np.ndarray,
) -> np.ndarray:
    """Unwrapped reference twist for each bending-twisting stencil.

    The sign-adjusted d1 of the first edge is space-transported onto the
    second edge's tangent, pre-rotated by the previously stored twist, and
    the remaining signed angle to the second edge's d1 is added on.  The
    result stays continuous across steps (no 2*pi jumps).
    """
    if edge_pairs.shape[0] == 0:
        return np.zeros(0)
    i, j = edge_pairs[:, 0], edge_pairs[:, 1]
    si = signs[:, 0][:, None]
    sj = signs[:, 1][:, None]
    ti = si * tangents[i]
    tj = sj * tangents[j]
    d1i = si * d1[i]
    d1j = sj * d1[j]
    u = parallel_transport(d1i, ti, tj)
    u = rotate_about_axis(u, tj, prev_twist)
    return prev_twist + signed_angle(u, d1j, tj)


def triangle_normals(positions: np.ndarray, triangles: np.ndarray):
    """Unit normals and areas of each triangle."""
    p0 = positions[triangles[:, 0]]
    c = np.cross(positions[triangles[:, 1]] - p0, positions[triangles[:, 2]] - p0)
    n2 = np.linalg.norm(c, axis=1)
    if np.any(n2 < 2e-12):
        bad = np.nonzero(n2 < 2e-12)[0].tolist()
        raise ValueError(f"degenerate triangle(s) {bad}")
    return c / n2[:, None], 0.5 * n2


def midedge_edge_frames(
    positions: np.ndarray,
    shell_edges: np.ndarray,
    edge_triangles: list,
    triangles: np.ndarray,
    prev_tau0: np.ndarray | None = None,
):
    """Averaged face normal and in-plane perpendicular tau per shell edge.

    Boundary edges use their single face normal.  If the two adjacent face
    normals nearly cancel (fold-through), the previous tau0 is reused for
    that edge and a degeneracy warning is issued.
    """
    normals, _ = triangle_normals(positions, triangles)
    z = shell_edges.shape[0]
    n_avg = np.zeros((z, 3))
    for k, tris in enumerate(edge_triangles):
        n_avg[k] = normals[tris].sum(axis=0)
    mag = np.linalg.norm(n_avg, axis=1)
    degenerate = mag < 1e-8
    ok = ~degenerate
    n_avg[ok] /= mag[ok][:, None]

    _, _, e_hat = edge_vectors(positions, shell_edges)
    tau = np.cross(n_avg, e_hat)
    if np.any(degenerate):
        if prev_tau0 is None:
            raise ValueError(
                f"opposite face normals at shell edge(s) {np.nonzero(degenerate)[0].tolist()}"
            )
        warnings.warn(
            "fold-through at shell edge(s) "
            f"{np.nonzero(degenerate)[0].tolist()}; reusing previous edge frame",
            GeometryWarning,
        )
        tau[degenerate] = prev_tau0[degenerate]
        n_avg[degenerate] = np.cross(e_hat[degenerate], tau[degenerate])
    return n_avg, tau


def orthonormality_error(d1: np.ndarray, d2: np.ndarray, t: np.ndarray) -> float:
    """Worst deviation of {d1, d2, t} from an orthonormal triad."""
    errs = [
        np.abs(dot(d1, d1) - 1.0),
        np.abs(dot(d2, d2) - 1.0),
        np.abs(dot(d1, d2)),
        np.abs(dot(d1, t)),
        np.abs(dot(d2, t)),
    ]
    return float(max(e.max() if e.size else 0.0 for e in errs))
