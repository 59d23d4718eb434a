"""Bulk plasticity with degrading stiffness on the 2-D bar.

Per element, a deviatoric plastic strain with linear kinematic hardening and
a yield traction acting through a 1-homogeneous dissipation; per node, a
stiffness multiplier ``zeta`` in [0, 1] degrading the elastic energy through
``gamma(zeta) = eps + (1 - eps) zeta^2`` and decreasing irreversibly at an
energy cost per unit volume.

Two representation choices make the generic machinery exact:

* plastic strain is carried in an orthonormal basis of the admissible
  deviatoric tensors (``pi_33 = -pi_11 - pi_22``, no out-of-plane shear), so
  Frobenius norms become Euclidean and the per-element curvature of the
  internal block is a multiple of the identity -- the shape the grouped
  shrinkage step requires;
* the stiffness multiplier enters through nodally interpolated values of
  ``gamma`` (not ``gamma`` of interpolated ``zeta``), which makes the elastic
  energy a weighted sum ``sum_i gamma(zeta_i) d_i(u, pi)`` over nodes. Its
  difference-quotient in ``zeta`` is then exactly the chord of ``gamma``
  times the nodal drives ``d_i``, and the degradation substep built on that
  quotient closes the energy ledger with no remainder while any node stays
  off the lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError, ZetaSubstepFailedError
from .fem import ElasticityParams, Mesh2D, assemble_operators, element_gauss_data
from .problem import ThreeFieldProblem, UPQuadraticForm
from .solvers import OneHomGroup

__all__ = ["BulkParams", "BulkProblem", "deviatoric_coords", "tensor_coords",
           "solve_box_qp"]

#: Orthonormal map from in-plane Voigt strain (e_xx, e_yy, gamma_xy) to the
#: coordinates of its deviatoric part (out-of-plane entry implied).
_P_DEV = np.array([[1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0), 0.0],
                   [1.0 / np.sqrt(6.0), 1.0 / np.sqrt(6.0), 0.0],
                   [0.0, 0.0, 1.0 / np.sqrt(2.0)]])


def deviatoric_coords(p11, p22, p12):
    """Orthonormal coordinates of the deviatoric tensor diag-completed by
    ``p33 = -p11 - p22``; Frobenius norms map to Euclidean ones."""
    q1 = (p11 - p22) / np.sqrt(2.0)
    q2 = np.sqrt(1.5) * (p11 + p22)
    q3 = np.sqrt(2.0) * p12
    return np.stack([q1, q2, q3], axis=-1)


def tensor_coords(q):
    """Inverse of :func:`deviatoric_coords`: returns ``(p11, p22, p12)``."""
    q = np.asarray(q)
    s = q[..., 1] / np.sqrt(1.5)          # p11 + p22
    r = q[..., 0] * np.sqrt(2.0)          # p11 - p22
    return 0.5 * (s + r), 0.5 * (s - r), q[..., 2] / np.sqrt(2.0)


@dataclass(frozen=True)
class BulkParams:
    """Inelastic bulk constants.

    ``yield_stress`` [Pa] caps the Frobenius norm of the deviatoric driving
    stress, ``hardening`` [Pa] is the kinematic hardening modulus,
    ``damage_drive`` [J/m^3] the stored energy density a node must release to
    degrade by one unit of ``zeta``, ``residual_stiffness`` the floor of the
    degradation function, and ``kappa2`` [J] weights the gradient
    regularization of ``zeta``.
    """

    yield_stress: float = 100e6
    hardening: float = 10e9
    damage_drive: float = 2e5
    residual_stiffness: float = 0.1
    kappa2: float = 0.0

    def __post_init__(self):
        if self.yield_stress <= 0:
            raise InvalidArgumentError("yield_stress must be positive")
        if self.hardening < 0 or self.kappa2 < 0 or self.damage_drive <= 0:
            raise InvalidArgumentError(
                "hardening and kappa2 must be >= 0, damage_drive > 0")
        if not (0.0 < self.residual_stiffness < 1.0):
            raise InvalidArgumentError("residual_stiffness must be in (0, 1)")


class BulkProblem(ThreeFieldProblem):
    """Elasto-plastic bar with nodal stiffness degradation.

    State: displacement ``u``, per-element deviatoric plastic strain in
    orthonormal coordinates (3 entries per element), nodal ``zeta``. The
    stored energy is jointly quadratic in (u, pi) only at frozen ``zeta``,
    so the fractional-step and backward-Euler schemes apply.
    """

    zeta_frozen = False

    def __init__(self, mesh: Mesh2D, elast: ElasticityParams | None = None,
                 bulk: BulkParams | None = None,
                 fixed_u: np.ndarray | None = None,
                 zeta_tol: float = 1e-10, zeta_maxit: int = 500):
        elast = elast if elast is not None else ElasticityParams()
        bulk = bulk if bulk is not None else BulkParams()
        self.mesh = mesh
        self.elast = elast
        self.bulk = bulk
        self.zeta_tol = float(zeta_tol)
        self.zeta_maxit = int(zeta_maxit)
        n_el = mesh.n_elements

        ops = assemble_operators(mesh, elast)
        super().__init__(mesh.n_dofs, 3 * n_el, mesh.n_nodes, ops.M, fixed_u)

        # quadrature tables and per-gauss-point element matrices
        self._w, self._B, self._N = element_gauss_data(mesh)   # (e,4) (e,4,3,8) (4,4)
        C = elast.plane_strain_matrix()
        self._K_gp = np.einsum("egai,ab,egbj->egij", self._B, C, self._B)
        self._PB = np.einsum("qa,egab->egqb", _P_DEV, self._B)  # (e,4,3,8)
        self.vol_el = self._w.sum(axis=1)

        # element dof gather and sparse scatter indices
        quads = mesh.quads
        dofs8 = np.empty((n_el, 8), dtype=int)
        dofs8[:, 0::2] = 2 * quads
        dofs8[:, 1::2] = 2 * quads + 1
        self._dofs8 = dofs8
        self._rows_uu = np.repeat(dofs8, 8, axis=1).ravel()
        self._cols_uu = np.tile(dofs8, (1, 8)).ravel()
        pcols = (3 * np.arange(n_el)[:, None] + np.arange(3)[None, :])
        self._rows_up = np.repeat(dofs8, 3, axis=1).ravel()
        self._cols_up = np.tile(pcols, (1, 8)).ravel()

        # nodal volumes and the scalar gradient (Laplacian) matrix
        wN = np.einsum("eg,gi->ei", self._w, self._N)           # (e, 4)
        self.nodal_volume = np.zeros(mesh.n_nodes)
        np.add.at(self.nodal_volume, quads, wN)
        dN = np.stack([self._B[:, :, 0, 0::2], self._B[:, :, 1, 1::2]], axis=2)
        G_el = np.einsum("eg,egca,egcb->eab", self._w, dN, dN)
        rows = np.repeat(quads, 4, axis=1).ravel()
        cols = np.tile(quads, (1, 4)).ravel()
        G = sp.coo_matrix((G_el.ravel(), (rows, cols)),
                          shape=(mesh.n_nodes, mesh.n_nodes)).tocsr()
        self.G = (0.5 * (G + G.T)).tocsr()

        self._groups = [OneHomGroup((3 * e, 3 * e + 1, 3 * e + 2),
                                    bulk.yield_stress * self.vol_el[e])
                        for e in range(n_el)]

    # -- degradation function --------------------------------------------------

    def gamma(self, zeta):
        """Stiffness multiplier ``eps + (1 - eps) zeta^2``."""
        eps = self.bulk.residual_stiffness
        return eps + (1.0 - eps) * np.asarray(zeta) ** 2

    def gamma_chord(self, zeta_new, zeta_old):
        """Difference quotient of :meth:`gamma`: exact slope between states."""
        return (1.0 - self.bulk.residual_stiffness) * (
            np.asarray(zeta_new) + np.asarray(zeta_old))

    def _gamma_gp(self, zeta):
        """gamma at the Gauss points by interpolating nodal gamma values."""
        return np.einsum("gi,ei->eg", self._N, self.gamma(zeta)[self.mesh.quads])

    # -- quadratic form at frozen zeta ------------------------------------------

    def _build_quadratic_form(self, zeta):
        mu, n_el = self.elast.lame_mu, self.mesh.n_elements
        gw = self._gamma_gp(zeta) * self._w                     # (e, 4)
        n = self.n_u
        A_uu_el = np.einsum("eg,egij->eij", gw, self._K_gp)
        A_uu = sp.coo_matrix((A_uu_el.ravel(), (self._rows_uu, self._cols_uu)),
                             shape=(n, n)).tocsr()
        A_up_el = -2.0 * mu * np.einsum("eg,egqb->ebq", gw, self._PB)
        A_up = sp.coo_matrix((A_up_el.ravel(), (self._rows_up, self._cols_up)),
                             shape=(n, 3 * n_el)).tocsr()
        gbar = gw.sum(axis=1)                                   # volume-weighted
        app = 2.0 * mu * gbar + self.bulk.hardening * self.vol_el
        A_pp = sp.diags(np.repeat(app, 3)).tocsr()
        chi = self.elast.chi
        D_pp = sp.diags(np.repeat(chi * 2.0 * mu * gbar, 3)).tocsr()
        return UPQuadraticForm(A_uu, A_up, A_pp,
                               (chi * A_uu).tocsr(), (chi * A_up).tocsr(), D_pp,
                               groups=self._groups)

    # -- strains, drives, energies ----------------------------------------------

    def _strain_tables(self, u, pi):
        """Per (element, gauss point): trace and deviatoric misfit q_e - q_pi."""
        eps = np.einsum("egab,eb->ega", self._B, u[self._dofs8])
        tr = eps[:, :, 0] + eps[:, :, 1]
        q_e = np.einsum("qa,ega->egq", _P_DEV, eps)
        mis = q_e - pi.reshape(-1, 3)[:, None, :]
        return tr, mis

    def elastic_density(self, u, pi):
        """Undegraded elastic energy density at each (element, gauss point)."""
        lam, mu = self.elast.lame_lambda, self.elast.lame_mu
        tr, mis = self._strain_tables(u, pi)
        return 0.5 * (lam + 2.0 * mu / 3.0) * tr**2 \
            + mu * np.einsum("egq,egq->eg", mis, mis)

    def nodal_drives(self, u, pi):
        """Nodal shares ``d_i >= 0`` of the undegraded elastic energy [J]."""
        rho_w = self.elastic_density(u, pi) * self._w
        d = np.zeros(self.mesh.n_nodes)
        np.add.at(d, self.mesh.quads, np.einsum("eg,gi->ei", rho_w, self._N))
        return d

    def stored_parts(self, u, pi, zeta):
        d = self.nodal_drives(u, pi)
        elastic = float(self.gamma(zeta) @ d)
        q = pi.reshape(-1, 3)
        hard = 0.5 * self.bulk.hardening * float(
            self.vol_el @ np.einsum("eq,eq->e", q, q))
        hard += 0.5 * self.bulk.kappa2 * float(zeta @ (self.G @ zeta))
        return {"elastic_bulk": elastic, "adhesive": 0.0, "hardening": hard}

    # -- degradation substep -----------------------------------------------------

    def quotient_force(self, zeta_new, zeta_old, drives):
        """Exact discrete derivative of the stored energy in zeta.

        Satisfies  Phi(zeta_new) - Phi(zeta_old) = force . (zeta_new - zeta_old)
        for the zeta-dependent energy parts, by the chord construction.
        """
        force = self.gamma_chord(zeta_new, zeta_old) * drives
        if self.bulk.kappa2:
            force = force + 0.5 * self.bulk.kappa2 * (
                self.G @ (np.asarray(zeta_new) + np.asarray(zeta_old)))
        return force

    def zeta_substep(self, u_new, pi_new, zeta_old, tau, h_k):
        one = 1.0 - self.bulk.residual_stiffness
        d = self.nodal_drives(u_new, pi_new)
        a = self.bulk.damage_drive * self.nodal_volume
        if h_k.size:
            a = a - h_k    # an external drive on zeta shifts the threshold
        if self.bulk.kappa2 == 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                interior = a / (one * d) - zeta_old
            z = np.where(d > 0.0, np.clip(interior, 0.0, zeta_old), zeta_old)
        else:
            z = self._zeta_descent(zeta_old, d, a)
        d_ri = float(self.bulk.damage_drive
                     * (self.nodal_volume @ (zeta_old - z)))
        return z, 0.0, d_ri

    def _zeta_descent(self, zeta_old, d, a):
        """Projected coordinate descent on the chord-form box problem.

        Minimizes 0.5 z'Hz + c.z over 0 <= z <= zeta_old with
        H = (1-eps) diag(d) + 0.5 kappa2 G, whose stationarity condition is
        exactly quotient_force(z, zeta_old) = a off the bounds.
        """
        one = 1.0 - self.bulk.residual_stiffness
        H = (sp.diags(one * d) + 0.5 * self.bulk.kappa2 * self.G).tocsr()
        c = one * d * zeta_old + 0.5 * self.bulk.kappa2 * (self.G @ zeta_old) - a
        return solve_box_qp(H, c, zeta_old, tol=self.zeta_tol,
                            maxit=self.zeta_maxit)


def solve_box_qp(H: sp.csr_matrix, c: np.ndarray, upper: np.ndarray,
                 tol: float = 1e-10, maxit: int = 500) -> np.ndarray:
    """Minimize 0.5 z'Hz + c.z over the box 0 <= z <= upper.

    Projected cyclic coordinate descent; H must be symmetric positive
    semi-definite with strictly positive diagonal. Terminates when a full
    sweep moves no coordinate by more than ``tol``, else raises
    :class:`ZetaSubstepFailedError`.
    """
    H = sp.csr_matrix(H)
    diag = H.diagonal()
    if np.any(diag <= 0.0):
        raise InvalidArgumentError("box QP needs a strictly positive diagonal")
    indptr, indices, data = H.indptr, H.indices, H.data
    z = np.array(upper, dtype=float, copy=True)
    for _sweep in range(maxit):
        z_prev = z.copy()
        for i in range(z.size):
            row = slice(indptr[i], indptr[i + 1])
            gi = c[i] + data[row] @ z[indices[row]]
            z[i] = min(max(z[i] - gi / diag[i], 0.0), upper[i])
        if np.max(np.abs(z - z_prev)) <= tol:
            return z
    raise ZetaSubstepFailedError(
        f"box-QP coordinate descent did not reach {tol} in {maxit} sweeps",
        iterations=maxit)
