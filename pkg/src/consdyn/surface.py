"""Interface models on the bar's contact edge: friction and delamination.

Both models couple the elastic bar to a rigid flat obstacle through a thin
adhesive layer of tangential stiffness ``k`` per unit area, with the normal
displacement of the contact nodes eliminated (bilateral bond). They differ in
the internal variable living on the contact segments:

* friction -- a tangential slip ``pi`` per segment; the layer stores
  ``k/2 (u_t - pi)^2`` per area and slipping dissipates ``sigma_y |dpi|``,
  so the transmitted traction is capped at the yield value.
* delamination -- a bonding fraction ``zeta`` per segment degrading the
  stored ``zeta * k/2 u_t^2``; rupture is unidirectional and costs the
  toughness ``a`` per unit area, which makes segments snap to zero exactly
  when their stored areal energy exceeds ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError
from .fem import (ElasticityParams, Mesh2D, assemble_operators,
                  contact_normal_fixed_mask, contact_trace)
from .problem import ThreeFieldProblem, UPQuadraticForm
from .solvers import OneHomGroup, prox_damage_unidirectional

__all__ = ["SurfaceParams", "FrictionProblem", "DelaminationProblem"]


@dataclass(frozen=True)
class SurfaceParams:
    """Adhesive-layer constants.

    ``stiffness`` [Pa/m] is the tangential spring per unit area,
    ``yield_traction`` [Pa] the frictional cap, ``toughness`` [J/m^2] the
    rupture energy per unit area.
    """

    stiffness: float = 75e9
    yield_traction: float = 3e6
    toughness: float = 187.5

    def __post_init__(self):
        if self.stiffness <= 0 or self.yield_traction <= 0 or self.toughness <= 0:
            raise InvalidArgumentError("surface parameters must be positive")

    @property
    def rupture_gap(self) -> float:
        """Tangential gap at which a fully bonded segment ruptures [m]."""
        return float(np.sqrt(2.0 * self.toughness / self.stiffness))


class _ContactProblem(ThreeFieldProblem):
    """Shared plumbing: assembled bar + contact trace + eliminated normals."""

    def __init__(self, mesh: Mesh2D, elast: ElasticityParams,
                 surf: SurfaceParams, n_pi: int, n_zeta: int):
        ops = assemble_operators(mesh, elast)
        self.mesh = mesh
        self.elast = elast
        self.surf = surf
        self.K_bulk = ops.K
        self.D_bulk = ops.D
        T, lengths, mids = contact_trace(mesh)
        self.trace = T
        self.seg_lengths = lengths
        self.seg_midpoints = mids
        super().__init__(mesh.n_dofs, n_pi, n_zeta, ops.M,
                         contact_normal_fixed_mask(mesh))

    @property
    def n_segments(self) -> int:
        return self.seg_lengths.size

    @property
    def observation_segment(self) -> int:
        """Contact segment closest to the loaded end (slips/ruptures first)."""
        return int(np.argmax(self.seg_midpoints))

    def tangential_gap(self, u: np.ndarray) -> np.ndarray:
        return self.trace @ u

    def elastic_bulk_energy(self, u: np.ndarray) -> float:
        return float(0.5 * u @ (self.K_bulk @ u))


class FrictionProblem(_ContactProblem):
    """Elastic bar on a frictional adhesive layer.

    State: displacement ``u`` (vertical contact dofs eliminated), slip ``pi``
    per contact segment; no degradation field, so the monolithic midpoint
    stepper applies. The traction transmitted by segment ``e`` is
    ``k (u_t,e - pi_e)`` and slipping pins its midpoint value at the yield
    traction -- the signature of the 1-homogeneous dissipation.
    """

    zeta_frozen = True

    def __init__(self, mesh: Mesh2D, elast: ElasticityParams | None = None,
                 surf: SurfaceParams | None = None):
        elast = elast if elast is not None else ElasticityParams()
        surf = surf if surf is not None else SurfaceParams()
        T, lengths, _ = contact_trace(mesh)
        n_seg = lengths.size
        super().__init__(mesh, elast, surf, n_pi=n_seg, n_zeta=0)

        w = sp.diags(self.surf.stiffness * self.seg_lengths).tocsr()
        A_uu = (self.K_bulk + self.trace.T @ w @ self.trace).tocsr()
        A_up = (-(self.trace.T @ w)).tocsr()
        A_pp = w
        zero_up = sp.csr_matrix((self.n_u, n_seg))
        zero_pp = sp.csr_matrix((n_seg, n_seg))
        groups = [OneHomGroup((e,), self.surf.yield_traction * self.seg_lengths[e])
                  for e in range(n_seg)]
        self._form = UPQuadraticForm(A_uu, A_up, A_pp,
                                     self.D_bulk, zero_up, zero_pp,
                                     groups=groups)

    def _build_quadratic_form(self, zeta: np.ndarray) -> UPQuadraticForm:
        return self._form

    def segment_traction(self, u: np.ndarray, pi: np.ndarray) -> np.ndarray:
        """Adhesive shear traction [Pa] per contact segment."""
        return self.surf.stiffness * (self.tangential_gap(u) - pi)

    def stored_parts(self, u, pi, zeta):
        gap = self.tangential_gap(u) - pi
        adhesive = 0.5 * self.surf.stiffness * float(self.seg_lengths @ gap**2)
        return {"elastic_bulk": self.elastic_bulk_energy(u),
                "adhesive": adhesive, "hardening": 0.0}


class DelaminationProblem(_ContactProblem):
    """Elastic bar glued to the obstacle by a breakable adhesive layer.

    State: displacement ``u`` and a bonding fraction ``zeta`` per contact
    segment. Loading a bonded segment past the areal energy ``a`` snaps it to
    zero (unidirectionally), i.e. at the tangential gap
    ``sqrt(2 a / k)``; the degradation substep is a per-segment threshold
    rule, so only the fractional-step and backward-Euler schemes apply.
    """

    zeta_frozen = False
    pi_evolves = False

    def __init__(self, mesh: Mesh2D, elast: ElasticityParams | None = None,
                 surf: SurfaceParams | None = None):
        elast = elast if elast is not None else ElasticityParams()
        surf = surf if surf is not None else SurfaceParams()
        T, lengths, _ = contact_trace(mesh)
        super().__init__(mesh, elast, surf, n_pi=0, n_zeta=lengths.size)

    def _build_quadratic_form(self, zeta: np.ndarray) -> UPQuadraticForm:
        w = sp.diags(self.surf.stiffness * self.seg_lengths * zeta).tocsr()
        A_uu = (self.K_bulk + self.trace.T @ w @ self.trace).tocsr()
        empty_up = sp.csr_matrix((self.n_u, 0))
        empty_pp = sp.csr_matrix((0, 0))
        return UPQuadraticForm(A_uu, empty_up, empty_pp,
                               self.D_bulk, empty_up, empty_pp, groups=[])

    def areal_energy(self, u: np.ndarray) -> np.ndarray:
        """Stored adhesive energy per unit area of a fully bonded segment."""
        return 0.5 * self.surf.stiffness * self.tangential_gap(u) ** 2

    def zeta_substep(self, u_new, pi_new, zeta_old, tau, h_k):
        e = self.areal_energy(u_new)
        zeta_new = prox_damage_unidirectional(zeta_old, e, self.surf.toughness)
        d_ri = self.surf.toughness * float(
            self.seg_lengths @ np.abs(zeta_old - zeta_new))
        return zeta_new, 0.0, d_ri

    def stored_parts(self, u, pi, zeta):
        adhesive = float(self.seg_lengths @ (zeta * self.areal_energy(u)))
        return {"elastic_bulk": self.elastic_bulk_energy(u),
                "adhesive": adhesive, "hardening": 0.0}
