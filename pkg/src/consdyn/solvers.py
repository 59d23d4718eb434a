"""Sparse SPD solves, shrinkage proximal maps and alternating minimization.

These are the only pieces of numerics the time steppers rely on:

* :func:`solve_spd` -- verified direct solve of a symmetric positive definite
  system (scipy's sparse LU does the factorization work),
* :func:`prox_ball_1hom` -- closed-form minimizer of
  ``0.5*a*|p|^2 - y.p + w*|p|``; for 3-component deviatoric groups this is the
  classical radial return map,
* :func:`prox_damage_unidirectional` -- the survive-or-rupture update of a
  degradation variable with an affine stored-energy dependence,
* :func:`alternating_min` -- block minimization of a coupled quadratic plus
  grouped 1-homogeneous terms (exact SPD solve in the displacement block,
  exact prox in each internal-variable group).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    NonConvergedError,
    NotPositiveDefiniteError,
)

__all__ = [
    "SymmetricOperator",
    "OneHomGroup",
    "AlternatingMinResult",
    "solve_spd",
    "prox_ball_1hom",
    "prox_damage_unidirectional",
    "alternating_min",
]

logger = logging.getLogger(__name__)

_ASYMMETRY_REJECT = 1e-12   # relative asymmetry above which input is refused


class SymmetricOperator:
    """A symmetric sparse matrix with a cached direct factorization.

    The constructor validates (near-)symmetry, then stores the exactly
    symmetrized matrix ``(A + A.T)/2`` so downstream energy identities are not
    polluted by assembly roundoff. The LU factorization is computed lazily on
    the first :meth:`solve` and reused afterwards, which is what makes long
    constant-coefficient trajectories cheap (one factorization, thousands of
    back-substitutions).
    """

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix, dtype=float)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"matrix must be square, got {m.shape}")
        scale = max(abs(m.data).max() if m.nnz else 0.0, np.finfo(float).tiny)
        asym = abs(m - m.T)
        if asym.nnz and asym.data.max() > _ASYMMETRY_REJECT * scale:
            raise InvalidArgumentError(
                f"matrix is not symmetric (relative asymmetry "
                f"{asym.data.max() / scale:.3e})")
        self._m = ((m + m.T) * 0.5).tocsr()
        self._m.sort_indices()
        self._lu = None

    @property
    def shape(self):
        return self._m.shape

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._m

    def diagonal(self) -> np.ndarray:
        return self._m.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._m @ x

    def _factor(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self._m.tocsc())
            except RuntimeError as exc:  # scipy reports exact singularity this way
                raise NotPositiveDefiniteError(
                    f"factorization failed: {exc}") from exc
        return self._lu

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Back-substitute through the cached factorization (no residual check)."""
        return self._factor().solve(np.asarray(b, dtype=float))


def solve_spd(A, b, tol: float = 1e-10) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Parameters
    ----------
    A:
        :class:`SymmetricOperator`, scipy sparse matrix or dense array.
    b:
        Right-hand side vector.
    tol:
        Accept the solution only if ``|A x - b| <= tol * |b|`` (2-norm). One
        round of iterative refinement is attempted before giving up.

    Returns
    -------
    numpy.ndarray
        The solution vector. Two invocations with identical inputs produce
        bitwise-identical outputs (the sparse LU is deterministic).

    Raises
    ------
    NotPositiveDefiniteError
        If ``A`` has a non-positive diagonal entry or the factorization
        breaks down.
    NonConvergedError
        If the residual bound cannot be met even after refinement.
    """
    op = A if isinstance(A, SymmetricOperator) else SymmetricOperator(A)
    b = np.asarray(b, dtype=float)
    if b.shape != (op.shape[0],):
        raise DimensionMismatchError(
            f"rhs shape {b.shape} incompatible with matrix {op.shape}")
    d = op.diagonal()
    if d.size and d.min() <= 0.0:
        raise NotPositiveDefiniteError(
            f"diagonal entry {d.min():.3e} is not positive")
    x = op.solve(b)
    bnorm = np.linalg.norm(b)
    resid = np.linalg.norm(op.matvec(x) - b)
    if resid > tol * bnorm:
        # one pass of iterative refinement through the same factorization
        x = x + op.solve(b - op.matvec(x))
        resid = np.linalg.norm(op.matvec(x) - b)
        if not np.isfinite(resid) or resid > tol * bnorm:
            raise NonConvergedError(
                f"linear solve residual {resid:.3e} exceeds {tol:.1e} * |b|",
                iterations=2)
    return x


def prox_ball_1hom(y, a: float, w: float):
    """Minimize ``0.5*a*|p|^2 - y.p + w*|p|`` in closed form.

    The minimizer is the shrinkage ``p = max(0, 1 - w/|y|) * y / a``: zero
    (stick) while ``|y| <= w``, otherwise a vector parallel to ``y`` whose
    driving force sits exactly on the threshold ball of radius ``w``.
    """
    if a <= 0.0:
        raise NotPositiveDefiniteError(f"curvature a={a} must be positive")
    if w < 0.0:
        raise InvalidArgumentError(f"threshold weight w={w} must be nonnegative")
    yv = np.asarray(y, dtype=float)
    norm = float(np.linalg.norm(yv))
    if norm <= w:
        return np.zeros_like(yv)
    return (1.0 - w / norm) * yv / a


def prox_damage_unidirectional(zeta_old, e, a: float):
    """Update a degradation variable whose stored energy is affine in it.

    Minimizes ``e*z + a*(zeta_old - z)`` over ``z`` in ``[0, zeta_old]`` (no
    healing). Because the objective is affine the minimizer is an interval
    endpoint: the variable survives unchanged while the elastic drive ``e``
    stays at or below the toughness ``a`` and drops to zero once it exceeds
    it. The tie ``e == a`` retains the old value.
    """
    if a <= 0.0:
        raise InvalidArgumentError(f"toughness a={a} must be positive")
    z_old = np.asarray(zeta_old, dtype=float)
    out = np.where(np.asarray(e, dtype=float) > a, 0.0, z_old)
    if np.isscalar(zeta_old):
        return float(out)
    return out


@dataclass(frozen=True)
class OneHomGroup:
    """One group of internal-variable components sharing a 1-homogeneous term.

    ``indices`` index into the pi vector (1 entry for a scalar slip, 3 for a
    deviatoric tensor in orthonormal coordinates); ``weight`` is the threshold
    already multiplied by its measure factor (segment length or element area),
    so the dissipation contribution is ``weight * |pi_g|`` in joules.
    """

    indices: tuple[int, ...]
    weight: float

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) == 0 or len(set(idx)) != len(idx):
            raise InvalidArgumentError(f"group indices must be nonempty and unique: {idx}")
        if not (self.weight >= 0.0 and np.isfinite(self.weight)):
            raise InvalidArgumentError(f"group weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class AlternatingMinResult:
    u: np.ndarray
    pi: np.ndarray
    iterations: int
    objective: float


def _group_tables(groups: Sequence[OneHomGroup], n_p: int, A_pp: sp.csr_matrix):
    """Validate groups against A_pp; return per-size index tables.

    Every pi index must belong to exactly one group (uncovered indices become
    implicit weight-0 singletons). Within each group the quadratic block must
    be an isotropic diagonal ``a_g * I`` -- that is what makes the group
    update an exact closed-form prox.
    """
    gid = np.full(n_p, -1, dtype=int)
    all_groups: list[OneHomGroup] = list(groups)
    for k, g in enumerate(all_groups):
        for i in g.indices:
            if not (0 <= i < n_p):
                raise DimensionMismatchError(f"group index {i} out of range 0..{n_p - 1}")
            if gid[i] != -1:
                raise InvalidArgumentError(f"pi index {i} appears in two groups")
            gid[i] = k
    for i in np.flatnonzero(gid == -1):
        all_groups.append(OneHomGroup((int(i),), 0.0))
        gid[i] = len(all_groups) - 1

    diag = A_pp.diagonal() if n_p else np.zeros(0)
    a_of_group = np.empty(len(all_groups))
    for k, g in enumerate(all_groups):
        dg = diag[list(g.indices)]
        a_of_group[k] = dg.mean()
        if a_of_group[k] <= 0.0:
            raise NotPositiveDefiniteError(
                f"group {k} curvature {a_of_group[k]:.3e} not positive")
        if np.any(np.abs(dg - a_of_group[k]) > 1e-9 * a_of_group[k]):
            raise InvalidArgumentError(
                f"group {k} quadratic block is not isotropic: diag={dg}")

    # split A_pp into the isotropic group diagonal and everything else
    coupling = (A_pp - sp.diags(a_of_group[gid], 0, shape=(n_p, n_p))).tocoo()
    if coupling.nnz:
        scale = max(abs(A_pp.data).max(), np.finfo(float).tiny)
        keep = np.abs(coupling.data) > 1e-14 * scale
        coupling = sp.coo_matrix(
            (coupling.data[keep], (coupling.row[keep], coupling.col[keep])),
            shape=coupling.shape)
        if np.any(gid[coupling.row] == gid[coupling.col]):
            raise InvalidArgumentError(
                "off-diagonal coupling inside a group; the group update "
                "requires an isotropic block")
    coupling = coupling.tocsr()

    # bucket groups by size for vectorized shrinkage
    buckets: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    by_size: dict[int, list[OneHomGroup]] = {}
    by_size_a: dict[int, list[float]] = {}
    for k, g in enumerate(all_groups):
        by_size.setdefault(len(g.indices), []).append(g)
        by_size_a.setdefault(len(g.indices), []).append(a_of_group[k])
    for size, gs in by_size.items():
        idx2d = np.array([g.indices for g in gs], dtype=int)
        w_vec = np.array([g.weight for g in gs])
        a_vec = np.array(by_size_a[size])
        buckets[size] = (idx2d, a_vec, w_vec)
    return all_groups, buckets, coupling


def alternating_min(A_uu, A_up, A_pp, b_u, b_p,
                    groups: Sequence[OneHomGroup],
                    tol: float = 1e-12, maxit: int = 200,
                    lin_tol: float = 1e-10,
                    u0: np.ndarray | None = None, p0: np.ndarray | None = None,
                    on_sweep: Callable[[float], None] | None = None,
                    ) -> AlternatingMinResult:
    """Minimize a coupled quadratic plus grouped 1-homogeneous objective.

        J(u, p) = 0.5 u.A_uu.u + u.A_up.p + 0.5 p.A_pp.p
                  + b_u.u + b_p.p + sum_g w_g |p_g|

    by alternating exact block updates: ``u`` through the SPD factorization of
    ``A_uu`` and each group of ``p`` through :func:`prox_ball_1hom`. The sweep
    objective decreases monotonically; iteration stops once the decrease of
    one full sweep falls below ``tol * (1 + |J|)``.

    Raises :class:`NonConvergedError` when ``maxit`` sweeps do not reach the
    tolerance.
    """
    op = A_uu if isinstance(A_uu, SymmetricOperator) else SymmetricOperator(A_uu)
    A_up = sp.csr_matrix(A_up, dtype=float)
    A_pp = sp.csr_matrix(A_pp, dtype=float)
    b_u = np.asarray(b_u, dtype=float)
    b_p = np.asarray(b_p, dtype=float)
    n_u, n_p = b_u.size, b_p.size
    if A_up.shape != (n_u, n_p) or op.shape != (n_u, n_u) or A_pp.shape != (n_p, n_p):
        raise DimensionMismatchError(
            f"block shapes {op.shape}, {A_up.shape}, {A_pp.shape} inconsistent "
            f"with rhs sizes ({n_u}, {n_p})")

    all_groups, buckets, coupling = _group_tables(groups, n_p, A_pp)
    A_pu = A_up.T.tocsr()

    u = np.zeros(n_u) if u0 is None else np.array(u0, dtype=float)
    p = np.zeros(n_p) if p0 is None else np.array(p0, dtype=float)

    def objective(u, p):
        J = 0.5 * u @ (op.matvec(u)) + b_u @ u
        if n_p:
            J += u @ (A_up @ p) + 0.5 * p @ (A_pp @ p) + b_p @ p
            for size, (idx2d, _a, w_vec) in buckets.items():
                pg = p[idx2d]
                J += float(w_vec @ np.sqrt((pg * pg).sum(axis=1)))
        return float(J)

    J_prev = objective(u, p)
    tiny = np.finfo(float).tiny
    for sweep in range(1, maxit + 1):
        u = solve_spd(op, -(b_u + (A_up @ p if n_p else 0.0)), tol=lin_tol)
        if n_p:
            r = b_p + A_pu @ u
            if coupling.nnz == 0:
                # group-block-diagonal quadratic: all prox updates at once
                for size, (idx2d, a_vec, w_vec) in buckets.items():
                    Y = -r[idx2d]
                    norms = np.sqrt((Y * Y).sum(axis=1))
                    shrink = np.maximum(0.0, 1.0 - w_vec / np.maximum(norms, tiny))
                    p[idx2d.reshape(-1)] = (Y * (shrink / a_vec)[:, None]).reshape(-1)
            else:
                # Gauss-Seidel over groups with inter-group coupling
                for g, a_g in _group_as(all_groups, buckets):
                    idx = list(g.indices)
                    y = -(r[idx] + coupling[idx] @ p)
                    p[idx] = prox_ball_1hom(y, a_g, g.weight)
        J = objective(u, p)
        if on_sweep is not None:
            on_sweep(J)
        decrease = J_prev - J
        if decrease <= tol * (1.0 + abs(J)):
            return AlternatingMinResult(u=u, pi=p, iterations=sweep, objective=J)
        J_prev = J
    raise NonConvergedError(
        f"alternating minimization: {maxit} sweeps, last decrease {decrease:.3e}",
        iterations=maxit)


def _group_as(all_groups, buckets):
    """Pair each group with its curvature in original group order."""
    a_by_first = {}
    for _size, (idx2d, a_vec, _w) in buckets.items():
        for row, a in zip(idx2d, a_vec):
            a_by_first[int(row[0])] = float(a)
    return [(g, a_by_first[g.indices[0]]) for g in all_groups]
