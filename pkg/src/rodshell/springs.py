"""Spring stencil containers, one struct-of-arrays per deformation mode.

Natural strain fields (nat_*) are the actuation interface: hooks and the
controller may modify them between steps.  Everything else is frozen at
build time.  inc_* arrays hold the most recent actuation increments so a
controller can inspect or rate-limit its own output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class StretchSprings:
    """Axial springs over node pairs; one per rod edge and per shell edge."""

    nodes: np.ndarray  # (S, 2)
    rest_length: np.ndarray  # (S,)
    stiffness: np.ndarray  # (S,), N
    is_rod: np.ndarray  # (S,) bool
    nat_strain: np.ndarray  # (S,)
    inc_strain: np.ndarray  # (S,)
    dof_idx: np.ndarray  # (S, 6)

    def __len__(self):
        return self.nodes.shape[0]


@dataclass
class BendTwistSprings:
    """Three-node, two-edge stencils carrying rod bending and twist.

    signs flip the stored edge orientation (and its frame/twist angle) so
    that edge i points toward the center node and edge j away from it.
    """

    nodes: np.ndarray  # (S, 3) [m, n, o]; n shared
    edges: np.ndarray  # (S, 2) twist-edge indices [i, j]
    signs: np.ndarray  # (S, 2) each in {-1, +1}
    nat_curvature: np.ndarray  # (S, 2)
    nat_twist: np.ndarray  # (S,)
    inc_curvature: np.ndarray  # (S, 2)
    voronoi_length: np.ndarray  # (S,)
    bend_stiffness: np.ndarray  # (S, 2) = (E I1, E I2)
    twist_stiffness: np.ndarray  # (S,) = G J
    dof_idx: np.ndarray  # (S, 11) [m(3), theta_i, n(3), theta_j, o(3)]

    def __len__(self):
        return self.nodes.shape[0]


@dataclass
class HingeSprings:
    """Dihedral-angle stencils over interior shell edges (hinge model)."""

    nodes: np.ndarray  # (S, 4) [l, m, n, o]; hinge edge (m, n), wings l and o
    nat_angle: np.ndarray  # (S,)
    stiffness: np.ndarray  # (S,), N m
    dof_idx: np.ndarray  # (S, 12) [m(3), n(3), l(3), o(3)]

    def __len__(self):
        return self.nodes.shape[0]


@dataclass
class TriangleSprings:
    """Per-triangle shape-operator stencils (mid-edge model)."""

    triangle: np.ndarray  # (S,)
    tri_nodes: np.ndarray  # (S, 3)
    edges: np.ndarray  # (S, 3) shell-edge rows for local sides (p, q, r)
    ownership: np.ndarray  # (S, 3) in {-1, +1}
    edge_sign: np.ndarray  # (S, 3) local side orientation vs canonical edge
    rest_area: np.ndarray  # (S,)
    rest_edge_len: np.ndarray  # (S, 3)
    nat_lambda: np.ndarray  # (S, 3, 3)
    stiffness: np.ndarray  # (S,), N m
    dof_idx: np.ndarray  # (S, 12) [3 nodes x 3, xi_p, xi_q, xi_r]

    def __len__(self):
        return self.triangle.shape[0]
