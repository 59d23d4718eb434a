"""Abstract three-field problem and its quadratic-form building blocks.

A problem owns the physics: mass, the stored-energy quadratic form in the
(displacement, internal-variable) pair at a frozen degradation field, the
dissipation blocks, external loads, and -- when the degradation field evolves
-- the update rule of its own substep. The steppers in :mod:`consdyn.schemes`
only ever talk to this interface, so a desk-scale matrix problem and the
assembled finite-element models run through the same code path.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError
from .solvers import OneHomGroup, SymmetricOperator

__all__ = ["UPQuadraticForm", "ThreeFieldProblem", "MatrixProblem"]


@dataclass
class UPQuadraticForm:
    """Quadratic stored energy and viscous form in (u, pi) at frozen zeta.

        Phi(u, pi) = 0.5 [u;pi]' A [u;pi] + b0.[u;pi] + const
        Psi_visc   = 0.5 [du;dpi]' D [du;dpi]

    plus grouped 1-homogeneous dissipation with weights in ``groups``.
    Matrices live on the full displacement vector; the constrained rows and
    columns are dropped only when the step operator is built. The object
    caches the assembled-and-factorized step operators keyed by the scheme
    coefficients, so a trajectory with constant zeta factorizes exactly once.
    """

    A_uu: sp.csr_matrix
    A_up: sp.csr_matrix
    A_pp: sp.csr_matrix
    D_uu: sp.csr_matrix
    D_up: sp.csr_matrix
    D_pp: sp.csr_matrix
    groups: list[OneHomGroup]
    b0_u: np.ndarray | None = None
    b0_p: np.ndarray | None = None
    _step_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_u(self) -> int:
        return self.A_uu.shape[0]

    @property
    def n_p(self) -> int:
        return self.A_pp.shape[0]

    def energy(self, u: np.ndarray, p: np.ndarray) -> float:
        """Evaluate the quadratic part 0.5 x'Ax + b0.x."""
        val = 0.5 * (u @ (self.A_uu @ u))
        if self.n_p:
            val += u @ (self.A_up @ p) + 0.5 * (p @ (self.A_pp @ p))
            if self.b0_p is not None:
                val += self.b0_p @ p
        if self.b0_u is not None:
            val += self.b0_u @ u
        return float(val)

    def grad(self, u: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of the quadratic part, split into (u, pi) components."""
        gu = self.A_uu @ u
        gp = np.zeros(0)
        if self.n_p:
            gu = gu + self.A_up @ p
            gp = self.A_up.T @ u + self.A_pp @ p
            if self.b0_p is not None:
                gp = gp + self.b0_p
        if self.b0_u is not None:
            gu = gu + self.b0_u
        return gu, gp

    def viscous_rate(self, du: np.ndarray, dp: np.ndarray) -> float:
        """The bilinear form [du;dp]' D [du;dp] (twice the viscous potential)."""
        val = du @ (self.D_uu @ du)
        if self.n_p:
            val += 2.0 * (du @ (self.D_up @ dp)) + dp @ (self.D_pp @ dp)
        return float(val)

    def step_operator(self, c_A: float, c_D: float, c_M: float,
                      mass: sp.csr_matrix, free_idx: np.ndarray):
        """Reduced blocks of  c_A*A + c_D*D + c_M*blkdiag(M, 0)  on free dofs.

        Returns ``(Q_uu, Q_up, Q_pp)`` with ``Q_uu`` a cached
        :class:`SymmetricOperator` (factorized on first solve).
        """
        key = (c_A, c_D, c_M)
        hit = self._step_cache.get(key)
        if hit is not None:
            return hit
        Q_uu_full = (c_A * self.A_uu + c_D * self.D_uu + c_M * mass).tocsr()
        Q_uu = SymmetricOperator(Q_uu_full[free_idx][:, free_idx])
        Q_up = (c_A * self.A_up + c_D * self.D_up).tocsr()[free_idx]
        Q_pp = (c_A * self.A_pp + c_D * self.D_pp).tocsr()
        out = (Q_uu, Q_up, Q_pp)
        self._step_cache[key] = out
        return out


def _zero_load(n: int) -> Callable[[float], np.ndarray]:
    z = np.zeros(n)

    def load(_t: float) -> np.ndarray:
        return z

    return load


class ThreeFieldProblem(abc.ABC):
    """Contract between a physical model and the time steppers.

    Subclasses set the dimensions, the mass matrix and the constrained
    displacement dofs, and implement the quadratic form at frozen zeta plus
    the stored-energy decomposition. Problems whose degradation field evolves
    also override :meth:`zeta_substep` and set ``zeta_frozen = False``.
    """

    #: True when zeta never evolves; required by the monolithic midpoint
    #: stepper whose validity needs a jointly quadratic stored energy.
    zeta_frozen: bool = True
    #: False when pi is carried in the state but held fixed (its columns are
    #: then absent from the quadratic form).
    pi_evolves: bool = True

    def __init__(self, n_u: int, n_pi: int, n_zeta: int,
                 mass, fixed_u: np.ndarray | None = None):
        self.n_u = int(n_u)
        self.n_pi = int(n_pi)
        self.n_zeta = int(n_zeta)
        self.mass = sp.csr_matrix(mass, dtype=float)
        if self.mass.shape != (self.n_u, self.n_u):
            raise DimensionMismatchError(
                f"mass shape {self.mass.shape} does not match n_u={self.n_u}")
        if fixed_u is None:
            fixed_u = np.zeros(self.n_u, dtype=bool)
        self.fixed_u = np.asarray(fixed_u, dtype=bool)
        if self.fixed_u.shape != (self.n_u,):
            raise DimensionMismatchError("fixed_u mask has wrong length")
        self.free_idx = np.flatnonzero(~self.fixed_u)
        self.f_ext: Callable[[float], np.ndarray] = _zero_load(self.n_u)
        self.g_ext: Callable[[float], np.ndarray] = _zero_load(self.n_pi)
        self.h_ext: Callable[[float], np.ndarray] = _zero_load(self.n_zeta)
        self._form_cache: tuple[np.ndarray, UPQuadraticForm] | None = None

    # -- quadratic form ------------------------------------------------------

    @abc.abstractmethod
    def _build_quadratic_form(self, zeta: np.ndarray) -> UPQuadraticForm:
        """Assemble the (u, pi) form at frozen zeta."""

    def quadratic_form(self, zeta: np.ndarray) -> UPQuadraticForm:
        """Cached access: rebuilt only when zeta actually changed."""
        if self._form_cache is not None and np.array_equal(self._form_cache[0], zeta):
            return self._form_cache[1]
        form = self._build_quadratic_form(np.asarray(zeta, dtype=float))
        self._form_cache = (np.array(zeta, dtype=float, copy=True), form)
        return form

    # -- energies ------------------------------------------------------------

    @abc.abstractmethod
    def stored_parts(self, u: np.ndarray, pi: np.ndarray,
                     zeta: np.ndarray) -> dict[str, float]:
        """Stored energy decomposition [J]; keys become CSV columns."""

    def stored_energy(self, u, pi, zeta) -> float:
        return float(sum(self.stored_parts(u, pi, zeta).values()))

    def kinetic_energy(self, v: np.ndarray) -> float:
        return float(0.5 * v @ (self.mass @ v))

    # -- degradation substep --------------------------------------------------

    def zeta_substep(self, u_new: np.ndarray, pi_new: np.ndarray,
                     zeta_old: np.ndarray, tau: float,
                     h_k: np.ndarray) -> tuple[np.ndarray, float, float]:
        """Advance zeta given the freshly updated (u, pi).

        Returns ``(zeta_new, viscous_dissipation, rate_independent_dissipation)``
        in joules for this step. The default keeps zeta frozen.
        """
        return zeta_old, 0.0, 0.0

    # -- convenience -----------------------------------------------------------

    def check_state(self, state) -> None:
        state.check_dims(self.n_u, self.n_pi, self.n_zeta)


class MatrixProblem(ThreeFieldProblem):
    """A jointly quadratic problem given directly by its matrices.

    Useful for closed-form checks (oscillators, modal decay laws) and as the
    smallest honest realization of the stepping contract: mass ``M`` on the
    displacement block, stored energy ``0.5 x'Ax``, viscous form ``D`` and
    optional 1-homogeneous groups on the pi block.
    """

    def __init__(self, M, A, D=None, n_pi: int = 0,
                 groups: Sequence[OneHomGroup] = (),
                 f_ext=None, g_ext=None, fixed_u=None,
                 stored_split: Callable[[np.ndarray, np.ndarray], dict] | None = None):
        A = sp.csr_matrix(A, dtype=float)
        n_tot = A.shape[0]
        n_u = n_tot - n_pi
        super().__init__(n_u, n_pi, 0, M, fixed_u)
        D = sp.csr_matrix((n_tot, n_tot)) if D is None else sp.csr_matrix(D, dtype=float)
        if D.shape != A.shape:
            raise DimensionMismatchError("A and D must have equal shapes")
        self._A, self._D = A, D
        self._groups = list(groups)
        self._stored_split = stored_split
        if f_ext is not None:
            self.f_ext = f_ext
        if g_ext is not None:
            self.g_ext = g_ext

    def _split(self, m: sp.csr_matrix):
        n = self.n_u
        return (m[:n, :n].tocsr(), m[:n, n:].tocsr(), m[n:, n:].tocsr())

    def _build_quadratic_form(self, zeta):
        A_uu, A_up, A_pp = self._split(self._A)
        D_uu, D_up, D_pp = self._split(self._D)
        return UPQuadraticForm(A_uu, A_up, A_pp, D_uu, D_up, D_pp,
                               groups=list(self._groups))

    def stored_parts(self, u, pi, zeta):
        if self._stored_split is not None:
            return self._stored_split(u, pi)
        x = np.concatenate([u, pi]) if self.n_pi else u
        return {"elastic_bulk": float(0.5 * x @ (self._A @ x)),
                "adhesive": 0.0, "hardening": 0.0}
