"""State and configuration containers for the three-field dynamics engine.

The engine evolves three groups of unknowns:

* ``u``  -- displacement degrees of freedom (carries inertia),
* ``v``  -- velocity, always recovered from consecutive displacements,
* ``pi`` / ``zeta`` -- internal variables without inertia (slip or plastic
  strain, and a scalar degradation field in [0, 1]).

Everything here is a plain immutable container; the stepping logic lives in
:mod:`consdyn.schemes`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatchError, InvalidArgumentError

__all__ = [
    "Scheme",
    "LoadSampling",
    "SchemeConfig",
    "State3F",
    "EnergyLedger",
    "STORED_PART_NAMES",
]

#: Names of the stored-energy decomposition, in CSV column order.
#: ``hardening`` collects every internal-variable contribution that is neither
#: bulk strain energy nor interface (adhesive) energy: kinematic hardening and
#: the optional gradient regularizations.
STORED_PART_NAMES = ("elastic_bulk", "adhesive", "hardening")


class Scheme(enum.Enum):
    """Time discretisation family."""

    CN_MONOLITHIC = "cn"
    FRACTIONAL_STEP = "split"
    BACKWARD_EULER = "be"


class LoadSampling(enum.Enum):
    """Where within the step external loads are evaluated."""

    RIGHT_ENDPOINT = "right"
    MIDPOINT = "midpoint"
    AVERAGE = "average"


def _as_locked(x) -> np.ndarray:
    a = np.array(x, dtype=float, copy=True)
    if a.ndim != 1:
        a = a.reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SchemeConfig:
    """Numerical parameters of one stepping run.

    Parameters
    ----------
    tau:
        Time-step size [s]. Non-equidistant stepping is supported by calling
        the step functions with ``dataclasses.replace(cfg, tau=...)`` per step.
    scheme:
        Member of :class:`Scheme`.
    load_sampling:
        Member of :class:`LoadSampling`; midpoint sampling keeps the implicit
        midpoint rule second order.
    am_tol, am_maxit:
        Relative objective-decrease tolerance and sweep budget of the
        alternating minimization used for the coupled (u, pi) substep.
    lin_tol:
        Relative residual bound demanded from linear solves.
    """

    tau: float
    scheme: Scheme = Scheme.CN_MONOLITHIC
    load_sampling: LoadSampling = LoadSampling.MIDPOINT
    am_tol: float = 1e-12
    am_maxit: int = 200
    lin_tol: float = 1e-10

    def __post_init__(self):
        if not (self.tau > 0.0 and np.isfinite(self.tau)):
            raise InvalidArgumentError(f"tau must be positive and finite, got {self.tau}")
        if self.am_tol <= 0.0 or self.lin_tol <= 0.0:
            raise InvalidArgumentError("tolerances must be positive")
        if self.am_maxit < 1:
            raise InvalidArgumentError("am_maxit must be at least 1")


@dataclass(frozen=True)
class State3F:
    """Full explicit state at one time level.

    All arrays are defensively copied and locked against writes; steppers are
    pure functions from state to state.
    """

    t: float
    u: np.ndarray
    v: np.ndarray
    pi: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _as_locked(self.u))
        object.__setattr__(self, "v", _as_locked(self.v))
        object.__setattr__(self, "pi", _as_locked(self.pi))
        object.__setattr__(self, "zeta", _as_locked(self.zeta))
        if self.u.shape != self.v.shape:
            raise DimensionMismatchError(
                f"u and v must have equal length, got {self.u.shape} vs {self.v.shape}")
        for name in ("u", "v", "pi", "zeta"):
            a = getattr(self, name)
            if not np.all(np.isfinite(a)):
                raise InvalidArgumentError(f"non-finite entries in {name}")
        z = self.zeta
        if z.size and (z.min() < -1e-12 or z.max() > 1.0 + 1e-12):
            raise InvalidArgumentError(
                f"zeta must lie in [0, 1], got range [{z.min()}, {z.max()}]")

    def check_dims(self, n_u: int, n_pi: int, n_zeta: int) -> None:
        """Raise :class:`DimensionMismatchError` unless sizes match."""
        got = (self.u.size, self.pi.size, self.zeta.size)
        if got != (n_u, n_pi, n_zeta):
            raise DimensionMismatchError(
                f"state dims {got} do not match problem dims {(n_u, n_pi, n_zeta)}")


@dataclass(frozen=True)
class EnergyLedger:
    """Running energy bookkeeping attached to a trajectory.

    ``residual`` is the balance defect of the *last* step:

        [kinetic + stored]_k - [kinetic + stored]_{k-1}
        + (step dissipation) - (step external work),

    zero (to solver tolerance) for the conserving schemes on quadratic
    problems, strictly negative artificial dissipation for backward Euler.
    The ``*_cum`` accumulators are nondecreasing along a trajectory.
    """

    kinetic: float
    stored_parts: dict[str, float] = field(default_factory=dict)
    dissip_viscous_cum: float = 0.0
    dissip_rate_indep_cum: float = 0.0
    work_ext_cum: float = 0.0
    residual: float = 0.0

    @property
    def stored(self) -> float:
        return float(sum(self.stored_parts.values()))

    @property
    def total(self) -> float:
        """Kinetic plus stored energy [J]."""
        return self.kinetic + self.stored

    def advanced(self, kinetic: float, stored_parts: dict[str, float],
                 d_viscous: float, d_rate_indep: float, d_work: float) -> "EnergyLedger":
        """Return the ledger advanced by one step's increments."""
        if d_viscous < -1e-30 or d_rate_indep < -1e-30:
            raise InvalidArgumentError("dissipation increments must be nonnegative")
        new_total = kinetic + float(sum(stored_parts.values()))
        residual = (new_total - self.total) + (d_viscous + d_rate_indep) - d_work
        return EnergyLedger(
            kinetic=kinetic,
            stored_parts=dict(stored_parts),
            dissip_viscous_cum=self.dissip_viscous_cum + d_viscous,
            dissip_rate_indep_cum=self.dissip_rate_indep_cum + d_rate_indep,
            work_ext_cum=self.work_ext_cum + d_work,
            residual=residual,
        )


def state_replace(state: State3F, **kw) -> State3F:
    """``dataclasses.replace`` wrapper kept for symmetry with frozen arrays."""
    return replace(state, **kw)
