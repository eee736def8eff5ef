"""Force vector and Jacobian accumulation shared by all force models.

Forces accumulate into a dense vector; Jacobian blocks accumulate as COO
triplets so the same stream can feed either the dense or the sparse
linear solver.  Insertion order is deterministic (fixed module order,
fixed stencil order), which keeps runs bitwise reproducible.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class ForceJacobian:
    """Accumulator for force (dense), Jacobian (triplets) and energy tallies."""

    def __init__(self, n_dofs: int):
        self.n_dofs = n_dofs
        self.force = np.zeros(n_dofs)
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self.energy: dict[str, float] = {}

    def add_energy(self, name: str, value: float) -> None:
        self.energy[name] = self.energy.get(name, 0.0) + float(value)

    def add_force(self, dof_idx: np.ndarray, f_local: np.ndarray) -> None:
        """Scatter per-stencil forces: dof_idx and f_local both (S, D)."""
        np.add.at(self.force, dof_idx.reshape(-1), f_local.reshape(-1))

    def add_jacobian(self, dof_idx: np.ndarray, j_local: np.ndarray) -> None:
        """Scatter per-stencil Jacobian blocks: dof_idx (S, D), j_local (S, D, D)."""
        s, d = dof_idx.shape
        rows = np.repeat(dof_idx[:, :, None], d, axis=2)
        cols = np.repeat(dof_idx[:, None, :], d, axis=1)
        self._rows.append(rows.reshape(-1))
        self._cols.append(cols.reshape(-1))
        self._vals.append(j_local.reshape(-1))

    def add_diagonal(self, dof_idx: np.ndarray, values: np.ndarray) -> None:
        self._rows.append(np.asarray(dof_idx).reshape(-1))
        self._cols.append(np.asarray(dof_idx).reshape(-1))
        self._vals.append(np.asarray(values).reshape(-1))

    def triplets(self):
        if not self._rows:
            z = np.zeros(0)
            return z.astype(int), z.astype(int), z
        return (
            np.concatenate(self._rows),
            np.concatenate(self._cols),
            np.concatenate(self._vals),
        )

    def jacobian_coo(self) -> sp.coo_matrix:
        rows, cols, vals = self.triplets()
        return sp.coo_matrix((vals, (rows, cols)), shape=(self.n_dofs, self.n_dofs))

    def jacobian_dense(self) -> np.ndarray:
        return self.jacobian_coo().toarray()

    @property
    def total_energy(self) -> float:
        return float(sum(self.energy.values()))
