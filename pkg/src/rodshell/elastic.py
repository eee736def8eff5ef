"""Rod elastic modes: stretching, bending and twisting.

Each mode exposes the measured strain, its gradient and Hessian over the
stencil DOFs, and an accumulate() that applies the shared quadratic
chain rule

    E = 1/2 w K eps^T eps,   F = -w K eps grad(eps),
    J = dF/dq = -w K (eps hess(eps) + grad(eps) grad(eps)^T),

where w is the integration weight (rest length for stretching, inverse
Voronoi length for bending/twisting).  Positional derivatives of bending
and twisting account for the parallel-transport variation of the
reference frames, so they are exact for configurations whose frames were
just updated.
"""

from __future__ import annotations

import numpy as np

from .assembly import ForceJacobian
from .geometry import KinkError, cross_matrix, dot, outer
from .springs import BendTwistSprings, StretchSprings

_I3 = np.eye(3)


class SingularConfigurationError(ValueError):
    """An entity collapsed below the representable length scale."""


# -- stretching -------------------------------------------------------------


def stretch_strain(positions: np.ndarray, springs: StretchSprings):
    e = positions[springs.nodes[:, 1]] - positions[springs.nodes[:, 0]]
    ln = np.linalg.norm(e, axis=1)
    if np.any(ln < 1e-12):
        bad = np.nonzero(ln < 1e-12)[0].tolist()
        raise SingularConfigurationError(f"collapsed stretch spring(s) {bad}")
    return ln / springs.rest_length - 1.0, e, ln


def stretch_strain_grad_hess(positions: np.ndarray, springs: StretchSprings):
    """Strain, gradient (S, 6) and Hessian (S, 6, 6) over [x_a, x_b]."""
    eps, e, ln = stretch_strain(positions, springs)
    t = e / ln[:, None]
    inv_rest = 1.0 / springs.rest_length

    grad = np.zeros((len(springs), 6))
    grad[:, 0:3] = -t * inv_rest[:, None]
    grad[:, 3:6] = t * inv_rest[:, None]

    p = (_I3[None] - outer(t, t)) * (inv_rest / ln)[:, None, None]
    hess = np.zeros((len(springs), 6, 6))
    hess[:, 0:3, 0:3] = p
    hess[:, 3:6, 3:6] = p
    hess[:, 0:3, 3:6] = -p
    hess[:, 3:6, 0:3] = -p
    return eps, grad, hess


class StretchEnergy:
    """Axial strain energy E = 1/2 K (|e|/|e_bar| - 1)^2 |e_bar| per spring."""

    name = "stretch"

    def __init__(self, robot):
        self.springs = robot.stretch_springs

    def measured_strain(self, robot, q):
        eps, _, _ = stretch_strain(robot.positions(q), self.springs)
        return eps

    def strain(self, robot, q):
        return self.measured_strain(robot, q) - self.springs.nat_strain

    def energy(self, robot, q, frames) -> float:
        eps = self.strain(robot, q)
        return float(
            0.5 * np.sum(self.springs.stiffness * eps**2 * self.springs.rest_length)
        )

    def accumulate(self, acc: ForceJacobian, robot, q, frames) -> None:
        if not len(self.springs):
            return
        raw, grad, hess = stretch_strain_grad_hess(robot.positions(q), self.springs)
        eps = raw - self.springs.nat_strain
        w = self.springs.rest_length
        _quadratic(
            acc, self.name, self.springs.dof_idx, w, self.springs.stiffness[:, None],
            eps[:, None], grad[:, None, :], hess[:, None, :, :],
        )


# -- rod bending and twisting -------------------------------------------------


def _spring_edges(positions, springs: BendTwistSprings):
    """Sign-adjusted edge vectors: e points toward the center node, f away."""
    xm = positions[springs.nodes[:, 0]]
    xn = positions[springs.nodes[:, 1]]
    xo = positions[springs.nodes[:, 2]]
    return xn - xm, xo - xn


def _effective_material_frames(springs: BendTwistSprings, m1, m2):
    si = springs.signs[:, 0][:, None]
    sj = springs.signs[:, 1][:, None]
    i, j = springs.edges[:, 0], springs.edges[:, 1]
    return si * m1[i], m2[i], sj * m1[j], m2[j]


def rod_curvature_raw(positions, twist_edge_nodes, springs: BendTwistSprings, m1, m2):
    """Material-frame scalar curvatures (S, 2) and curvature binormal (S, 3)."""
    e, f = _spring_edges(positions, springs)
    le = np.linalg.norm(e, axis=1)
    lf = np.linalg.norm(f, axis=1)
    den = le * lf + dot(e, f)
    if np.any(den < 1e-12):
        raise KinkError(np.nonzero(den < 1e-12)[0].tolist())
    kb = 2.0 * np.cross(e, f) / den[:, None]
    m1e, m2e, m1f, m2f = _effective_material_frames(springs, m1, m2)
    k1 = 0.5 * dot(m2e + m2f, kb)
    k2 = -0.5 * dot(m1e + m1f, kb)
    return np.stack([k1, k2], axis=1), kb


def rod_curvature(positions, twist_edge_nodes, springs, m1, m2):
    """Spec-facing variant returning (kb, kappa1, kappa2)."""
    kappa, kb = rod_curvature_raw(positions, twist_edge_nodes, springs, m1, m2)
    return kb, kappa[:, 0], kappa[:, 1]


def bend_grad_hess(positions, springs: BendTwistSprings, m1, m2, want_hess=True):
    """kappa (S,2), gradient (S,2,11) and Hessian (S,2,11,11) over the
    stencil [x_m, theta_i, x_n, theta_j, x_o]."""
    e, f = _spring_edges(positions, springs)
    le = np.linalg.norm(e, axis=1)
    lf = np.linalg.norm(f, axis=1)
    te = e / le[:, None]
    tf = f / lf[:, None]
    chi = 1.0 + dot(te, tf)
    if np.any(chi < 1e-12):
        raise KinkError(np.nonzero(chi < 1e-12)[0].tolist())
    kb = 2.0 * np.cross(te, tf) / chi[:, None]
    tilde_t = (te + tf) / chi[:, None]

    m1e, m2e, m1f, m2f = _effective_material_frames(springs, m1, m2)
    td1 = (m1e + m1f) / chi[:, None]
    td2 = (m2e + m2f) / chi[:, None]

    k1 = 0.5 * dot(m2e + m2f, kb)
    k2 = -0.5 * dot(m1e + m1f, kb)
    kappa = np.stack([k1, k2], axis=1)

    inv_le = (1.0 / le)[:, None]
    inv_lf = (1.0 / lf)[:, None]

    dk1_de = inv_le * (-k1[:, None] * tilde_t + np.cross(tf, td2))
    dk1_df = inv_lf * (-k1[:, None] * tilde_t - np.cross(te, td2))
    dk2_de = inv_le * (-k2[:, None] * tilde_t - np.cross(tf, td1))
    dk2_df = inv_lf * (-k2[:, None] * tilde_t + np.cross(te, td1))

    dk1_dthe = -0.5 * dot(m1e, kb)
    dk1_dthf = -0.5 * dot(m1f, kb)
    dk2_dthe = -0.5 * dot(m2e, kb)
    dk2_dthf = -0.5 * dot(m2f, kb)

    s = len(springs)
    grad = np.zeros((s, 2, 11))
    si = springs.signs[:, 0].astype(float)
    sj = springs.signs[:, 1].astype(float)
    for c, (d_de, d_df, d_the, d_thf) in enumerate(
        [(dk1_de, dk1_df, dk1_dthe, dk1_dthf), (dk2_de, dk2_df, dk2_dthe, dk2_dthf)]
    ):
        grad[:, c, 0:3] = -d_de
        grad[:, c, 4:7] = d_de - d_df
        grad[:, c, 8:11] = d_df
        grad[:, c, 3] = si * d_the
        grad[:, c, 7] = sj * d_thf

    if not want_hess:
        return kappa, grad, None

    hess = np.zeros((s, 2, 11, 11))
    i3 = _I3[None]
    tt = outer(tilde_t, tilde_t)
    te_o_te = outer(te, te)
    tf_o_tf = outer(tf, tf)
    te_o_tf = outer(te, tf)
    inv2_le = (1.0 / le**2)[:, None, None]
    inv2_lf = (1.0 / lf**2)[:, None, None]
    inv_lelf = (1.0 / (le * lf))[:, None, None]
    chi_ = chi[:, None, None]

    for c, (kc, tdc, sign) in enumerate([(k1, td2, 1.0), (k2, td1, -1.0)]):
        # sign = +1 uses m2-type director, -1 uses m1-type with flipped terms
        kcc = kc[:, None, None]
        tf_c = np.cross(tf, tdc)
        te_c = np.cross(te, tdc)
        a_ee = (
            inv2_le * (2.0 * kcc * tt - sign * (outer(tf_c, tilde_t) + outer(tilde_t, tf_c)))
            - kcc / chi_ * inv2_le * (i3 - te_o_te)
        )
        a_ff = (
            inv2_lf * (2.0 * kcc * tt + sign * (outer(te_c, tilde_t) + outer(tilde_t, te_c)))
            - kcc / chi_ * inv2_lf * (i3 - tf_o_tf)
        )
        a_ef = (
            -kcc / chi_ * inv_lelf * (i3 + te_o_tf)
            + inv_lelf
            * (
                2.0 * kcc * tt
                - sign * outer(tf_c, tilde_t)
                + sign * outer(tilde_t, te_c)
                - sign * cross_matrix(tdc)
            )
        )
        if c == 0:
            me, mf = m1e, m1f
            a_ee = a_ee + inv2_le / 4.0 * (outer(kb, m2e) + outer(m2e, kb))
            a_ff = a_ff + inv2_lf / 4.0 * (outer(kb, m2f) + outer(m2f, kb))
            dd_the2 = -0.5 * dot(kb, m2e)
            dd_thf2 = -0.5 * dot(kb, m2f)
            d_e_the = inv_le * (0.5 * dot(kb, m1e)[:, None] * tilde_t - np.cross(tf, m1e) / chi[:, None])
            d_e_thf = inv_le * (0.5 * dot(kb, m1f)[:, None] * tilde_t - np.cross(tf, m1f) / chi[:, None])
            d_f_the = inv_lf * (0.5 * dot(kb, m1e)[:, None] * tilde_t + np.cross(te, m1e) / chi[:, None])
            d_f_thf = inv_lf * (0.5 * dot(kb, m1f)[:, None] * tilde_t + np.cross(te, m1f) / chi[:, None])
        else:
            a_ee = a_ee - inv2_le / 4.0 * (outer(kb, m1e) + outer(m1e, kb))
            a_ff = a_ff - inv2_lf / 4.0 * (outer(kb, m1f) + outer(m1f, kb))
            dd_the2 = 0.5 * dot(kb, m1e)
            dd_thf2 = 0.5 * dot(kb, m1f)
            d_e_the = inv_le * (0.5 * dot(kb, m2e)[:, None] * tilde_t - np.cross(tf, m2e) / chi[:, None])
            d_e_thf = inv_le * (0.5 * dot(kb, m2f)[:, None] * tilde_t - np.cross(tf, m2f) / chi[:, None])
            d_f_the = inv_lf * (0.5 * dot(kb, m2e)[:, None] * tilde_t + np.cross(te, m2e) / chi[:, None])
            d_f_thf = inv_lf * (0.5 * dot(kb, m2f)[:, None] * tilde_t + np.cross(te, m2f) / chi[:, None])
            d_e_the, d_e_thf, d_f_the, d_f_thf = -d_e_the, -d_e_thf, -d_f_the, -d_f_thf

        h = hess[:, c]
        _fill_position_blocks(h, a_ee, a_ff, a_ef)
        _fill_theta_blocks(h, si, sj, dd_the2, dd_thf2, d_e_the, d_e_thf, d_f_the, d_f_thf)
    return kappa, grad, hess


def _fill_position_blocks(h, a_ee, a_ff, a_ef):
    """Map (e, f) second derivatives onto node blocks of the 11-DOF stencil."""
    a_fe = np.swapaxes(a_ef, -1, -2)
    h[:, 0:3, 0:3] = a_ee
    h[:, 0:3, 4:7] = -a_ee + a_ef
    h[:, 0:3, 8:11] = -a_ef
    h[:, 4:7, 0:3] = -a_ee + a_fe
    h[:, 4:7, 4:7] = a_ee - a_ef - a_fe + a_ff
    h[:, 4:7, 8:11] = a_ef - a_ff
    h[:, 8:11, 0:3] = -a_fe
    h[:, 8:11, 4:7] = a_fe - a_ff
    h[:, 8:11, 8:11] = a_ff


def _fill_theta_blocks(h, si, sj, dd_the2, dd_thf2, d_e_the, d_e_thf, d_f_the, d_f_thf):
    h[:, 3, 3] = dd_the2
    h[:, 7, 7] = dd_thf2
    h[:, 0:3, 3] = -d_e_the * si[:, None]
    h[:, 4:7, 3] = (d_e_the - d_f_the) * si[:, None]
    h[:, 8:11, 3] = d_f_the * si[:, None]
    h[:, 0:3, 7] = -d_e_thf * sj[:, None]
    h[:, 4:7, 7] = (d_e_thf - d_f_thf) * sj[:, None]
    h[:, 8:11, 7] = d_f_thf * sj[:, None]
    h[:, 3, 0:3] = h[:, 0:3, 3]
    h[:, 3, 4:7] = h[:, 4:7, 3]
    h[:, 3, 8:11] = h[:, 8:11, 3]
    h[:, 7, 0:3] = h[:, 0:3, 7]
    h[:, 7, 4:7] = h[:, 4:7, 7]
    h[:, 7, 8:11] = h[:, 8:11, 7]


def twist_strain_raw(q, robot, springs: BendTwistSprings, ref_twist):
    theta = robot.thetas(q)
    si = springs.signs[:, 0].astype(float)
    sj = springs.signs[:, 1].astype(float)
    return sj * theta[springs.edges[:, 1]] - si * theta[springs.edges[:, 0]] + ref_twist


def twist_grad_hess(positions, springs: BendTwistSprings, want_hess=True):
    """Gradient (S, 11) and Hessian (S, 11, 11) of the twist strain.

    Only the reference-twist part depends on positions; the twist angles
    enter linearly with the orientation signs.
    """
    e, f = _spring_edges(positions, springs)
    le = np.linalg.norm(e, axis=1)
    lf = np.linalg.norm(f, axis=1)
    te = e / le[:, None]
    tf = f / lf[:, None]
    chi = 1.0 + dot(te, tf)
    if np.any(chi < 1e-12):
        raise KinkError(np.nonzero(chi < 1e-12)[0].tolist())
    kb = 2.0 * np.cross(te, tf) / chi[:, None]
    tilde_t = (te + tf) / chi[:, None]

    s = len(springs)
    grad = np.zeros((s, 11))
    d_de = 0.5 * kb / le[:, None]
    d_df = 0.5 * kb / lf[:, None]
    grad[:, 0:3] = -d_de
    grad[:, 4:7] = d_de - d_df
    grad[:, 8:11] = d_df
    grad[:, 3] = -springs.signs[:, 0]
    grad[:, 7] = springs.signs[:, 1]

    if not want_hess:
        return grad, None

    inv2_le = (1.0 / le**2)[:, None, None]
    inv2_lf = (1.0 / lf**2)[:, None, None]
    inv_lelf = (1.0 / (le * lf))[:, None, None]
    a_ee = -0.25 * inv2_le * (outer(kb, te + tilde_t) + outer(te + tilde_t, kb))
    a_ff = -0.25 * inv2_lf * (outer(kb, tf + tilde_t) + outer(tf + tilde_t, kb))
    a_ef = 0.5 * inv_lelf * (2.0 / chi[:, None, None] * cross_matrix(te) - outer(kb, tilde_t))

    hess = np.zeros((s, 11, 11))
    _fill_position_blocks(hess, a_ee, a_ff, a_ef)
    return grad, hess


class BendTwistEnergy:
    """Bending (2 curvature components) and twisting energy per stencil,
    both normalized by the Voronoi length."""

    name = "bend_twist"

    def __init__(self, robot):
        self.springs = robot.bend_twist_springs

    def measured_curvature(self, robot, q, frames):
        m1, m2 = frames.material_frames(robot.thetas(q))
        kappa, _ = rod_curvature_raw(
            robot.positions(q), robot.twist_edge_nodes, self.springs, m1, m2
        )
        return kappa

    def energy(self, robot, q, frames) -> float:
        if not len(self.springs):
            return 0.0
        sp = self.springs
        eps_b = self.measured_curvature(robot, q, frames) - sp.nat_curvature
        eps_t = twist_strain_raw(q, robot, sp, frames.ref_twist) - sp.nat_twist
        w = 1.0 / sp.voronoi_length
        e_bend = 0.5 * np.sum(w * np.sum(sp.bend_stiffness * eps_b**2, axis=1))
        e_twist = 0.5 * np.sum(w * sp.twist_stiffness * eps_t**2)
        return float(e_bend + e_twist)

    def accumulate(self, acc: ForceJacobian, robot, q, frames, want_hess=True) -> None:
        if not len(self.springs):
            return
        sp = self.springs
        positions = robot.positions(q)
        m1, m2 = frames.material_frames(robot.thetas(q))
        kappa, bgrad, bhess = bend_grad_hess(positions, sp, m1, m2, want_hess)
        eps_b = kappa - sp.nat_curvature
        w = 1.0 / sp.voronoi_length
        _quadratic(acc, "bend", sp.dof_idx, w, sp.bend_stiffness, eps_b, bgrad, bhess)

        tgrad, thess = twist_grad_hess(positions, sp, want_hess)
        eps_t = twist_strain_raw(q, robot, sp, frames.ref_twist) - sp.nat_twist
        _quadratic(
            acc, "twist", sp.dof_idx, w, sp.twist_stiffness[:, None],
            eps_t[:, None], tgrad[:, None, :], None if thess is None else thess[:, None, :, :],
        )


def _quadratic(acc, name, dof_idx, w, stiffness, eps, grad, hess):
    """Shared chain rule for quadratic strain energies (vectorized).

    Shapes: w (S,), stiffness/eps (S, C), grad (S, C, D), hess (S, C, D, D).
    """
    energy = 0.5 * np.sum(w * np.sum(stiffness * eps**2, axis=1))
    acc.add_energy(name, energy)
    coeff = w[:, None] * stiffness * eps  # (S, C)
    force = -np.einsum("sc,scd->sd", coeff, grad)
    acc.add_force(dof_idx, force)
    if hess is not None:
        jac = -(
            np.einsum("sc,scde->sde", coeff, hess)
            + np.einsum("sc,scd,sce->sde", w[:, None] * stiffness, grad, grad)
        )
        acc.add_jacobian(dof_idx, jac)
