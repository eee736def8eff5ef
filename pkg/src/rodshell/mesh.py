"""Mesh input, validation and derived connectivity.

The mesh is the raw user description of the structure: nodal positions,
rod edges and shell triangles.  Everything downstream (DOF layout, spring
stencils, mass lumping) is derived from it in robot.py.

Mesh file grammar (plain text, zero-based indices, `#` starts a comment):

    *nodes
    x y z            # one node per line
    *edges
    i j              # one rod edge per line
    *triangles
    i j k            # one triangle per line

Sections may appear in any order; *edges and *triangles are optional.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TopologyError(ValueError):
    """Connectivity violates a structural invariant (indices, manifoldness)."""


class GeometryError(ValueError):
    """Positions make an entity degenerate (zero-length edge, zero-area triangle)."""


MIN_TRIANGLE_AREA = 1e-12  # m^2, degenerate triangles are rejected at build
MIN_EDGE_LENGTH = 1e-12  # m


@dataclass(frozen=True)
class MeshInput:
    """Nodal positions (m), rod edge index pairs and triangle index triples."""

    nodes: np.ndarray
    rod_edges: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float).reshape(-1, 3))
        object.__setattr__(
            self, "rod_edges", np.asarray(self.rod_edges, dtype=int).reshape(-1, 2)
        )
        object.__setattr__(
            self, "triangles", np.asarray(self.triangles, dtype=int).reshape(-1, 3)
        )
        _validate(self)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_rod_edges(self) -> int:
        return self.rod_edges.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


def _validate(mesh: MeshInput) -> None:
    n = mesh.n_nodes
    if n == 0:
        raise TopologyError("mesh has no nodes")
    for name, arr in (("rod edge", mesh.rod_edges), ("triangle", mesh.triangles)):
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise TopologyError(f"{name} references node index outside [0, {n})")
    if mesh.rod_edges.size:
        if np.any(mesh.rod_edges[:, 0] == mesh.rod_edges[:, 1]):
            raise TopologyError("rod edge with identical endpoints")
        canon = np.sort(mesh.rod_edges, axis=1)
        uniq = np.unique(canon, axis=0)
        if uniq.shape[0] != canon.shape[0]:
            raise TopologyError("duplicate rod edges")
    if mesh.triangles.size:
        t = mesh.triangles
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise TopologyError("triangle with repeated vertex")
        # non-manifold check: every triangle edge shared by at most 2 triangles
        e = _triangle_edge_list(t)
        canon = np.sort(e.reshape(-1, 2), axis=1)
        _, counts = np.unique(canon, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise TopologyError("non-manifold shell edge (shared by >2 triangles)")
    # rod edges must not duplicate shell edges: a structural edge is either
    # a rod or a triangle side, never both
    if mesh.rod_edges.size and mesh.triangles.size:
        shell = {tuple(sorted(p)) for p in _triangle_edge_list(mesh.triangles).reshape(-1, 2)}
        for a, b in mesh.rod_edges:
            if (min(a, b), max(a, b)) in shell:
                raise TopologyError(f"rod edge ({a},{b}) coincides with a shell edge")


def _triangle_edge_list(triangles: np.ndarray) -> np.ndarray:
    """Per-triangle edges in local order (v1,v2), (v2,v0), (v0,v1): (T,3,2)."""
    t = triangles
    return np.stack(
        [t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1
    )


@dataclass(frozen=True)
class ShellTopology:
    """Derived shell connectivity shared by hinge and mid-edge models.

    shell_edges are canonical (low index, high index) node pairs sorted
    lexicographically; tri_edge_index maps each triangle side to its row in
    shell_edges and tri_edge_sign records whether the local side orientation
    (v_next -> v_prev cycle) matches the canonical one.  Edge ownership for
    the mid-edge model gives +1 to the first triangle touching an edge and
    -1 to the second.
    """

    shell_edges: np.ndarray  # (Z, 2)
    tri_edge_index: np.ndarray  # (T, 3)
    tri_edge_sign: np.ndarray  # (T, 3) local-vs-canonical orientation
    tri_edge_ownership: np.ndarray  # (T, 3) in {-1, +1}
    edge_triangles: list  # per shell edge, list of incident triangle indices
    hinge_quads: np.ndarray  # (H, 4) nodes (m, n, l, o): hinge edge (m,n), wings l, o


def derive_shell_topology(triangles: np.ndarray) -> ShellTopology:
    if triangles.size == 0:
        empty = np.zeros((0, 2), dtype=int)
        return ShellTopology(
            empty,
            np.zeros((0, 3), dtype=int),
            np.zeros((0, 3), dtype=int),
            np.zeros((0, 3), dtype=int),
            [],
            np.zeros((0, 4), dtype=int),
        )
    local = _triangle_edge_list(triangles)  # (T,3,2)
    canon = np.sort(local.reshape(-1, 2), axis=1)
    shell_edges, inverse = np.unique(canon, axis=0, return_inverse=True)
    tri_edge_index = inverse.reshape(-1, 3)
    tri_edge_sign = np.where(local[..., 0] < local[..., 1], 1, -1)

    n_edges = shell_edges.shape[0]
    edge_triangles: list[list[int]] = [[] for _ in range(n_edges)]
    for t in range(triangles.shape[0]):
        for k in range(3):
            edge_triangles[tri_edge_index[t, k]].append(t)

    ownership = np.zeros_like(tri_edge_index)
    for z, tris in enumerate(edge_triangles):
        for rank, t in enumerate(tris):
            k = int(np.nonzero(tri_edge_index[t] == z)[0][0])
            ownership[t, k] = 1 if rank == 0 else -1

    quads = []
    for z, tris in enumerate(edge_triangles):
        if len(tris) != 2:
            continue
        m, n = shell_edges[z]
        wings = []
        for t in tris:
            verts = set(triangles[t]) - {m, n}
            wings.append(verts.pop())
        quads.append((m, n, wings[0], wings[1]))
    hinge_quads = np.asarray(quads, dtype=int).reshape(-1, 4)
    return ShellTopology(
        shell_edges, tri_edge_index, tri_edge_sign, ownership, edge_triangles, hinge_quads
    )


def classify_joints(mesh: MeshInput, shell: ShellTopology):
    """Joint nodes (shared by a rod edge and >=1 triangle) and the shell
    edges incident to them, which are promoted to carry twist DOFs."""
    if mesh.n_rod_edges == 0 or mesh.n_triangles == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    rod_nodes = np.unique(mesh.rod_edges)
    tri_nodes = np.unique(mesh.triangles)
    joints = np.intersect1d(rod_nodes, tri_nodes)
    if joints.size == 0:
        return joints, np.zeros(0, dtype=int)
    incident = np.any(np.isin(shell.shell_edges, joints), axis=1)
    return joints, np.nonzero(incident)[0]


def load_mesh(path) -> MeshInput:
    """Parse the plain-text mesh format documented in the module docstring."""
    nodes, edges, tris = [], [], []
    target = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("*"):
                section = line[1:].strip().lower()
                if section == "nodes":
                    target = nodes
                elif section == "edges":
                    target = edges
                elif section == "triangles":
                    target = tris
                else:
                    raise TopologyError(f"{path}:{lineno}: unknown section '*{section}'")
                continue
            if target is None:
                raise TopologyError(f"{path}:{lineno}: data before any section header")
            parts = line.split()
            want = 3 if target is nodes else (2 if target is edges else 3)
            if len(parts) != want:
                raise TopologyError(
                    f"{path}:{lineno}: expected {want} fields, got {len(parts)}"
                )
            target.append([float(p) if target is nodes else int(p) for p in parts])
    return MeshInput(
        np.asarray(nodes, dtype=float).reshape(-1, 3),
        np.asarray(edges, dtype=int).reshape(-1, 2),
        np.asarray(tris, dtype=int).reshape(-1, 3),
    )


def write_mesh(path, mesh: MeshInput) -> None:
    with open(path, "w") as fh:
        fh.write("*nodes\n")
        for x, y, z in mesh.nodes:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        if mesh.n_rod_edges:
            fh.write("*edges\n")
            for a, b in mesh.rod_edges:
                fh.write(f"{a} {b}\n")
        if mesh.n_triangles:
            fh.write("*triangles\n")
            for a, b, c in mesh.triangles:
                fh.write(f"{a} {b} {c}\n")
