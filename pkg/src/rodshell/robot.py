"""SoftRobot construction: DOF layout, spring stencils, stiffness and mass.

build_robot derives everything simulation needs from the raw mesh plus
cross-section geometry and material constants.  The input configuration
is taken as the rest (natural) state.  Topology, stiffness and mass are
immutable after the build; only natural strains and boundary conditions
may change during a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mesh as mesh_mod
from .frames import FrameSet, edge_vectors, init_reference_frames, reference_twist
from .mesh import GeometryError, MeshInput, TopologyError, derive_shell_topology
from .springs import BendTwistSprings, HingeSprings, StretchSprings, TriangleSprings


class ConfigurationError(ValueError):
    """Inconsistent physical setup (missing material, zero-mass DOF, ...)."""


@dataclass(frozen=True)
class Geometry:
    """Cross-section dimensions: rod radius and shell thickness (m)."""

    rod_radius: float = 0.0
    shell_thickness: float = 0.0

    @property
    def rod_area(self) -> float:
        return np.pi * self.rod_radius**2

    @property
    def rod_inertia(self) -> float:
        """Area moment of the circular cross-section (same about both axes)."""
        return np.pi * self.rod_radius**4 / 4.0

    @property
    def rod_polar_inertia(self) -> float:
        return np.pi * self.rod_radius**4 / 2.0


@dataclass(frozen=True)
class Material:
    density: float  # kg/m^3
    youngs_modulus: float  # Pa
    poisson_ratio: float

    @property
    def shear_modulus(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))


@dataclass(frozen=True)
class Materials:
    rod: Material | None = None
    shell: Material | None = None


@dataclass(frozen=True)
class DofLayout:
    """Index maps from mesh entities into the flat DOF vector.

    Layout: 3 position DOFs per node, then one twist angle per
    twist-carrying edge (rod edges plus joint-promoted shell edges), then
    one mid-edge rotation per shell edge when the mid-edge model is on.
    """

    n_nodes: int
    n_rod_edges: int
    n_shell_edges: int
    n_twist_edges: int
    n_xi: int

    @property
    def total_dofs(self) -> int:
        return 3 * self.n_nodes + self.n_twist_edges + self.n_xi

    def node_dofs(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=int)
        return (3 * nodes[..., None] + np.arange(3)).reshape(nodes.shape + (3,))

    def theta_dof(self, twist_edges) -> np.ndarray:
        return 3 * self.n_nodes + np.asarray(twist_edges, dtype=int)

    def xi_dof(self, shell_edges) -> np.ndarray:
        if self.n_xi == 0:
            raise IndexError("mid-edge DOFs absent under the hinge shell model")
        return 3 * self.n_nodes + self.n_twist_edges + np.asarray(shell_edges, dtype=int)


class ConstraintSet:
    """Fixed-DOF bookkeeping with optional prescribed-motion schedules.

    A fixed DOF without a schedule is pinned in place; a schedule maps
    time to the prescribed value.  Fixed and free sets partition the DOF
    range.  Prescribing the same DOF from two config entries is an error;
    re-prescribing from a before-step hook replaces the schedule.
    """

    def __init__(self, total_dofs: int):
        self.total_dofs = total_dofs
        self.fixed = np.zeros(total_dofs, dtype=bool)
        self._schedules: dict[int, object] = {}

    def fix(self, dofs) -> None:
        self.fixed[np.asarray(dofs, dtype=int)] = True

    def release(self, dofs) -> None:
        dofs = np.asarray(dofs, dtype=int)
        self.fixed[dofs] = False
        for d in dofs:
            self._schedules.pop(int(d), None)

    def prescribe(self, dofs, fn, replace: bool = False) -> None:
        """fn(t) -> array of len(dofs) prescribed values."""
        dofs = [int(d) for d in np.atleast_1d(np.asarray(dofs, dtype=int))]
        if not replace:
            clash = [d for d in dofs if d in self._schedules]
            if clash:
                raise ConfigurationError(f"conflicting prescriptions on DOF(s) {clash}")
        self.fixed[dofs] = True
        for k, d in enumerate(dofs):
            self._schedules[d] = (fn, k)

    @property
    def free_index(self) -> np.ndarray:
        return np.nonzero(~self.fixed)[0]

    @property
    def fixed_index(self) -> np.ndarray:
        return np.nonzero(self.fixed)[0]

    def apply(self, q: np.ndarray, t: float) -> np.ndarray:
        """Return q with every scheduled DOF set to its value at time t."""
        q = q.copy()
        cache: dict[int, np.ndarray] = {}
        for d, (fn, k) in self._schedules.items():
            key = id(fn)
            if key not in cache:
                cache[key] = np.atleast_1d(np.asarray(fn(t), dtype=float))
            q[d] = cache[key][k]
        return q


class SoftRobot:
    """Immutable structure + mutable actuation surface (natural strains,
    boundary conditions).  Built once by build_robot."""

    def __init__(
        self,
        mesh: MeshInput,
        geometry: Geometry,
        materials: Materials,
        shell_model: str,
        two_d: bool,
    ):
        self.mesh = mesh
        self.geometry = geometry
        self.materials = materials
        self.shell_model = shell_model

        if mesh.n_rod_edges and materials.rod is None:
            raise ConfigurationError("rod edges present but no rod material given")
        if mesh.n_triangles and materials.shell is None:
            raise ConfigurationError("triangles present but no shell material given")
        if mesh.n_rod_edges and geometry.rod_radius <= 0.0:
            raise ConfigurationError("rod edges present but rod_radius <= 0")
        if mesh.n_triangles and geometry.shell_thickness <= 0.0:
            raise ConfigurationError("triangles present but shell_thickness <= 0")
        if shell_model not in ("hinge", "midedge"):
            raise ConfigurationError(f"unknown shell model '{shell_model}'")

        self.shell = derive_shell_topology(mesh.triangles)
        self.joint_nodes, self.promoted_shell_edges = mesh_mod.classify_joints(
            mesh, self.shell
        )

        # twist-carrying edges: rod edges first (input orientation), then
        # promoted shell edges in canonical orientation
        promoted = self.shell.shell_edges[self.promoted_shell_edges]
        self.twist_edge_nodes = np.vstack(
            [mesh.rod_edges.reshape(-1, 2), promoted.reshape(-1, 2)]
        ).astype(int)
        self.twist_edge_is_rod = np.zeros(len(self.twist_edge_nodes), dtype=bool)
        self.twist_edge_is_rod[: mesh.n_rod_edges] = True
        # shell edge row -> twist edge row (or -1)
        self.shell_edge_twist_row = np.full(self.shell.shell_edges.shape[0], -1, dtype=int)
        self.shell_edge_twist_row[self.promoted_shell_edges] = mesh.n_rod_edges + np.arange(
            len(self.promoted_shell_edges)
        )

        n_xi = self.shell.shell_edges.shape[0] if shell_model == "midedge" else 0
        self.layout = DofLayout(
            n_nodes=mesh.n_nodes,
            n_rod_edges=mesh.n_rod_edges,
            n_shell_edges=self.shell.shell_edges.shape[0],
            n_twist_edges=len(self.twist_edge_nodes),
            n_xi=n_xi,
        )

        self._check_degenerate()
        self._init_frames_and_springs()
        self.mass = compute_lumped_mass(self)
        self.constraints = ConstraintSet(self.layout.total_dofs)
        if two_d:
            self._fix_out_of_plane()

        # freeze topology arrays; natural strain arrays remain writable
        for arr in (self.mesh.nodes, self.mesh.rod_edges, self.mesh.triangles):
            arr.setflags(write=False)

    # -- construction ------------------------------------------------------

    def _check_degenerate(self):
        mesh = self.mesh
        if self.twist_edge_nodes.shape[0]:
            _, ln, _ = edge_vectors(mesh.nodes, self.twist_edge_nodes)
            if np.any(ln < mesh_mod.MIN_EDGE_LENGTH):
                raise GeometryError("zero-length edge in input mesh")
        if mesh.n_triangles:
            p0 = mesh.nodes[mesh.triangles[:, 0]]
            c = np.cross(
                mesh.nodes[mesh.triangles[:, 1]] - p0,
                mesh.nodes[mesh.triangles[:, 2]] - p0,
            )
            area = 0.5 * np.linalg.norm(c, axis=1)
            if np.any(area < mesh_mod.MIN_TRIANGLE_AREA):
                bad = np.nonzero(area < mesh_mod.MIN_TRIANGLE_AREA)[0].tolist()
                raise GeometryError(f"degenerate triangle(s) {bad}")

    def _init_frames_and_springs(self):
        from .elastic import rod_curvature_raw  # deferred: avoids import cycle
        from .shell import dihedral_angles, shape_operators

        mesh, geom, mats = self.mesh, self.geometry, self.materials
        positions = mesh.nodes
        layout = self.layout

        # initial reference frames over twist edges
        if len(self.twist_edge_nodes):
            d1, d2 = init_reference_frames(positions, self.twist_edge_nodes)
        else:
            d1 = np.zeros((0, 3))
            d2 = np.zeros((0, 3))

        self.stretch_springs = self._build_stretch()
        self.bend_twist_springs = self._build_bend_twist(d1, d2)

        _, _, tangents = (
            edge_vectors(positions, self.twist_edge_nodes)
            if len(self.twist_edge_nodes)
            else (None, None, np.zeros((0, 3)))
        )
        ref0 = reference_twist(
            self.bend_twist_springs.edges,
            self.bend_twist_springs.signs,
            d1,
            tangents,
            np.zeros(len(self.bend_twist_springs)),
        )
        self.bend_twist_springs.nat_twist[:] = ref0

        theta0 = np.zeros(layout.n_twist_edges)
        frames0 = FrameSet(d1=d1, d2=d2, ref_twist=ref0, tau0=np.zeros((0, 3)))
        if len(self.bend_twist_springs):
            m1, m2 = frames0.material_frames(theta0)
            kappa, _ = rod_curvature_raw(
                positions, self.twist_edge_nodes, self.bend_twist_springs, m1, m2
            )
            self.bend_twist_springs.nat_curvature[:] = kappa

        if self.shell_model == "hinge":
            self.hinge_springs = self._build_hinges()
            self.triangle_springs = TriangleSprings(
                *[np.zeros((0,) + s, dtype=d) for s, d in [
                    ((), int), ((3,), int), ((3,), int), ((3,), int), ((3,), int),
                    ((), float), ((3,), float), ((3, 3), float), ((), float), ((12,), int),
                ]]
            )
            tau0 = np.zeros((0, 3))
        else:
            self.hinge_springs = HingeSprings(
                np.zeros((0, 4), dtype=int),
                np.zeros(0),
                np.zeros(0),
                np.zeros((0, 12), dtype=int),
            )
            self.triangle_springs = self._build_triangles()
            from .frames import midedge_edge_frames

            _, tau0 = midedge_edge_frames(
                positions, self.shell.shell_edges, self.shell.edge_triangles, mesh.triangles
            )
            xi0 = np.zeros(layout.n_xi)
            self.triangle_springs.nat_lambda[:] = shape_operators(
                positions, self.triangle_springs, xi0, tau0
            )
        if self.shell_model == "hinge" and len(self.hinge_springs):
            self.hinge_springs.nat_angle[:] = dihedral_angles(
                positions, self.hinge_springs.nodes
            )
        self._frames0 = FrameSet(d1=d1, d2=d2, ref_twist=ref0, tau0=tau0)

    def _build_stretch(self) -> StretchSprings:
        mesh, geom, mats = self.mesh, self.geometry, self.materials
        rows = []
        if mesh.n_rod_edges:
            order = np.lexsort(
                (np.max(mesh.rod_edges, axis=1), np.min(mesh.rod_edges, axis=1))
            )
            for k in order:
                rows.append((mesh.rod_edges[k], True))
        for pair in self.shell.shell_edges:
            rows.append((pair, False))
        if not rows:
            return StretchSprings(
                np.zeros((0, 2), dtype=int), np.zeros(0), np.zeros(0),
                np.zeros(0, dtype=bool), np.zeros(0), np.zeros(0),
                np.zeros((0, 6), dtype=int),
            )
        nodes = np.array([r[0] for r in rows], dtype=int)
        is_rod = np.array([r[1] for r in rows], dtype=bool)
        _, ln, _ = edge_vectors(mesh.nodes, nodes)
        stiffness = np.where(
            is_rod,
            (mats.rod.youngs_modulus * geom.rod_area) if mats.rod else 0.0,
            (np.sqrt(3.0) / 4.0 * mats.shell.youngs_modulus * geom.shell_thickness * ln)
            if mats.shell
            else 0.0,
        )
        dof_idx = self.layout.node_dofs(nodes).reshape(-1, 6)
        s = len(nodes)
        return StretchSprings(nodes, ln, stiffness, is_rod, np.zeros(s), np.zeros(s), dof_idx)

    def _build_bend_twist(self, d1, d2) -> BendTwistSprings:
        mesh, geom, mats = self.mesh, self.geometry, self.materials
        edges = self.twist_edge_nodes
        node_edges: dict[int, list[int]] = {}
        for k, (a, b) in enumerate(edges):
            node_edges.setdefault(int(a), []).append(k)
            node_edges.setdefault(int(b), []).append(k)

        recs = []
        for n, incident in node_edges.items():
            incident = sorted(incident)
            for a_pos in range(len(incident)):
                for b_pos in range(a_pos + 1, len(incident)):
                    i, j = incident[a_pos], incident[b_pos]
                    m = int(edges[i, 0] if edges[i, 1] == n else edges[i, 1])
                    o = int(edges[j, 0] if edges[j, 1] == n else edges[j, 1])
                    si = 1 if edges[i, 1] == n else -1
                    sj = 1 if edges[j, 0] == n else -1
                    recs.append((m, n, o, i, j, si, sj))
        recs.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))

        s = len(recs)
        nodes = np.array([r[:3] for r in recs], dtype=int).reshape(s, 3)
        eidx = np.array([r[3:5] for r in recs], dtype=int).reshape(s, 2)
        signs = np.array([r[5:7] for r in recs], dtype=int).reshape(s, 2)

        _, ln, _ = (
            edge_vectors(mesh.nodes, edges) if len(edges) else (None, np.zeros(0), None)
        )
        voronoi = 0.5 * (ln[eidx[:, 0]] + ln[eidx[:, 1]]) if s else np.zeros(0)
        if mats.rod is not None:
            ei = mats.rod.youngs_modulus * geom.rod_inertia
            gj = mats.rod.shear_modulus * geom.rod_polar_inertia
        else:
            ei = gj = 0.0
        bend_k = np.full((s, 2), ei)
        twist_k = np.full(s, gj)

        dof_idx = np.zeros((s, 11), dtype=int)
        if s:
            nd = self.layout.node_dofs(nodes)  # (s, 3, 3)
            dof_idx[:, 0:3] = nd[:, 0]
            dof_idx[:, 3] = self.layout.theta_dof(eidx[:, 0])
            dof_idx[:, 4:7] = nd[:, 1]
            dof_idx[:, 7] = self.layout.theta_dof(eidx[:, 1])
            dof_idx[:, 8:11] = nd[:, 2]
        return BendTwistSprings(
            nodes, eidx, signs,
            np.zeros((s, 2)), np.zeros(s), np.zeros((s, 2)),
            voronoi, bend_k, twist_k, dof_idx,
        )

    def _build_hinges(self) -> HingeSprings:
        mats, geom = self.materials, self.geometry
        quads = self.shell.hinge_quads  # (H, 4) as (m, n, l, o)
        h = quads.shape[0]
        nodes = quads[:, [2, 0, 1, 3]] if h else np.zeros((0, 4), dtype=int)  # (l, m, n, o)
        k = (
            (1.0 / np.sqrt(3.0))
            * mats.shell.youngs_modulus
            * geom.shell_thickness**3
            / 12.0
            if mats.shell
            else 0.0
        )
        dof_idx = np.zeros((h, 12), dtype=int)
        if h:
            # stencil order (m, n, l, o): hinge nodes first, then the wings
            nd = self.layout.node_dofs(quads)  # (h, 4, 3)
            dof_idx = nd.reshape(h, 12)
        return HingeSprings(nodes, np.zeros(h), np.full(h, k), dof_idx)

    def _build_triangles(self) -> TriangleSprings:
        mesh, geom, mats = self.mesh, self.geometry, self.materials
        t = mesh.n_triangles
        tri = np.arange(t, dtype=int)
        tri_nodes = mesh.triangles.copy()
        edges = self.shell.tri_edge_index.copy()
        ownership = self.shell.tri_edge_ownership.copy()
        edge_sign = self.shell.tri_edge_sign.copy()
        _, ln, _ = edge_vectors(mesh.nodes, self.shell.shell_edges)
        rest_edge_len = ln[edges]
        p0 = mesh.nodes[tri_nodes[:, 0]]
        c = np.cross(mesh.nodes[tri_nodes[:, 1]] - p0, mesh.nodes[tri_nodes[:, 2]] - p0)
        rest_area = 0.5 * np.linalg.norm(c, axis=1)
        nu = mats.shell.poisson_ratio
        k = mats.shell.youngs_modulus * geom.shell_thickness**3 / (24.0 * (1.0 - nu**2))
        dof_idx = np.zeros((t, 12), dtype=int)
        dof_idx[:, 0:9] = self.layout.node_dofs(tri_nodes).reshape(t, 9)
        dof_idx[:, 9:12] = self.layout.xi_dof(edges)
        return TriangleSprings(
            tri, tri_nodes, edges, ownership, edge_sign,
            rest_area, rest_edge_len, np.zeros((t, 3, 3)), np.full(t, k), dof_idx,
        )

    def _fix_out_of_plane(self):
        z_dofs = 3 * np.arange(self.layout.n_nodes) + 2
        self.constraints.fix(z_dofs)
        if self.layout.n_twist_edges:
            self.constraints.fix(self.layout.theta_dof(np.arange(self.layout.n_twist_edges)))

    # -- public API --------------------------------------------------------

    @property
    def total_dofs(self) -> int:
        return self.layout.total_dofs

    def map_node_to_dof(self, nodes) -> np.ndarray:
        return self.layout.node_dofs(nodes)

    def map_edge_to_dof(self, twist_edge) -> np.ndarray:
        return self.layout.theta_dof(twist_edge)

    def initial_state(self):
        from .state import RobotState

        q0 = np.zeros(self.layout.total_dofs)
        q0[: 3 * self.layout.n_nodes] = self.mesh.nodes.ravel()
        return RobotState(
            q=q0,
            u=np.zeros_like(q0),
            a=np.zeros_like(q0),
            frames=self._frames0,
            t=0.0,
        )

    def positions(self, q: np.ndarray) -> np.ndarray:
        return q[: 3 * self.layout.n_nodes].reshape(-1, 3)

    def thetas(self, q: np.ndarray) -> np.ndarray:
        n = 3 * self.layout.n_nodes
        return q[n : n + self.layout.n_twist_edges]

    def xis(self, q: np.ndarray) -> np.ndarray:
        n = 3 * self.layout.n_nodes + self.layout.n_twist_edges
        return q[n : n + self.layout.n_xi]

    def fix_nodes(self, nodes) -> None:
        self.constraints.fix(self.layout.node_dofs(nodes).reshape(-1))

    def fix_edges(self, twist_edges) -> None:
        self.constraints.fix(self.layout.theta_dof(twist_edges))

    def move_nodes(self, nodes, fn, replace: bool = True) -> None:
        """Prescribe positions: fn(t) -> (len(nodes), 3) array."""
        nodes = np.atleast_1d(np.asarray(nodes, dtype=int))
        dofs = self.layout.node_dofs(nodes).reshape(-1)
        self.constraints.prescribe(
            dofs, lambda t: np.asarray(fn(t), dtype=float).reshape(-1), replace=replace
        )

    def twist_edges(self, twist_edge_ids, fn, replace: bool = True) -> None:
        """Prescribe twist angles: fn(t) -> (len(ids),) array."""
        ids = np.atleast_1d(np.asarray(twist_edge_ids, dtype=int))
        self.constraints.prescribe(
            self.layout.theta_dof(ids),
            lambda t: np.asarray(fn(t), dtype=float).reshape(-1),
            replace=replace,
        )


def build_robot(mesh: MeshInput, geometry: Geometry, materials: Materials, sim_params) -> SoftRobot:
    """Assemble the full simulation structure from user inputs.

    sim_params only contributes the shell model selection and the 2D flag
    here; time-integration settings are read by the stepper.
    """
    return SoftRobot(
        mesh,
        geometry,
        materials,
        shell_model=getattr(sim_params, "shell_model", "hinge"),
        two_d=getattr(sim_params, "two_d", False),
    )


def compute_lumped_mass(robot: SoftRobot) -> np.ndarray:
    """Diagonal lumped mass: nodes get half of each incident rod edge and a
    third of each incident triangle; twist DOFs get the rod polar inertia
    of their edge; mid-edge DOFs get a thin-plate rotational inertia."""
    mesh, geom, mats = robot.mesh, robot.geometry, robot.materials
    layout = robot.layout
    mass = np.zeros(layout.total_dofs)

    node_mass = np.zeros(layout.n_nodes)
    if mesh.n_rod_edges:
        _, ln, _ = edge_vectors(mesh.nodes, mesh.rod_edges)
        edge_mass = mats.rod.density * geom.rod_area * ln
        np.add.at(node_mass, mesh.rod_edges[:, 0], 0.5 * edge_mass)
        np.add.at(node_mass, mesh.rod_edges[:, 1], 0.5 * edge_mass)
    if mesh.n_triangles:
        p0 = mesh.nodes[mesh.triangles[:, 0]]
        c = np.cross(mesh.nodes[mesh.triangles[:, 1]] - p0, mesh.nodes[mesh.triangles[:, 2]] - p0)
        area = 0.5 * np.linalg.norm(c, axis=1)
        tri_mass = mats.shell.density * geom.shell_thickness * area
        for k in range(3):
            np.add.at(node_mass, mesh.triangles[:, k], tri_mass / 3.0)
    mass[: 3 * layout.n_nodes] = np.repeat(node_mass, 3)

    if layout.n_twist_edges:
        _, ln, _ = edge_vectors(mesh.nodes, robot.twist_edge_nodes)
        rod_rho = mats.rod.density if mats.rod else (mats.shell.density if mats.shell else 0.0)
        mass[3 * layout.n_nodes : 3 * layout.n_nodes + layout.n_twist_edges] = (
            rod_rho * geom.rod_polar_inertia * ln
            if geom.rod_radius > 0
            else rod_rho * geom.shell_thickness**3 / 12.0 * ln
        )
    if layout.n_xi:
        _, ln, _ = edge_vectors(mesh.nodes, robot.shell.shell_edges)
        mass[3 * layout.n_nodes + layout.n_twist_edges :] = (
            mats.shell.density * geom.shell_thickness**3 / 12.0 * ln
        )

    if np.any(mass <= 0.0):
        bad = np.nonzero(mass <= 0.0)[0].tolist()
        raise ConfigurationError(f"zero-mass DOF(s) {bad[:10]} (isolated node?)")
    return mass
