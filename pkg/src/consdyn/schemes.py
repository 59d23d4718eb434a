"""Time steppers and the discrete energy ledger.

Three one-step maps over the state (u, v, pi, zeta):

* :func:`step_cn_monolithic` -- implicit midpoint rule treating displacement
  and internal variable together. On a jointly quadratic stored energy the
  midpoint averages telescope binomially, so kinetic + stored energy is
  conserved exactly (to linear-solve roundoff) in the absence of loads and
  dissipation; with dissipation the per-step balance identity closes with the
  same accuracy.
* :func:`step_fractional` -- two convex substeps per step: (u, pi) at frozen
  zeta by the midpoint rule, then the degradation substep of the problem at
  the fresh (u, pi). The plus/minus stored-energy terms of the two substep
  identities cancel, so the summed residual is again solver-tolerance small,
  except where a rupture-type variational inequality genuinely loses the
  overshoot energy.
* :func:`step_backward_euler` -- fully implicit right-endpoint analogue,
  unconditionally dissipative; each undamped mode loses the factor
  1/(1 + (omega*tau)^2) of its energy per step.

Velocity is never an independent unknown: v_k is recovered from consecutive
displacements, which is exactly what makes the conservation identities hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError, NonConvergedError
from .problem import ThreeFieldProblem
from .solvers import alternating_min
from .state import EnergyLedger, LoadSampling, Scheme, SchemeConfig, State3F

__all__ = [
    "step_cn_monolithic",
    "step_fractional",
    "step_backward_euler",
    "run_trajectory",
    "energy_balance_residual",
    "LedgerRow",
    "TrajectorySummary",
    "STEPPERS",
]


def _sample(load: Callable[[float], np.ndarray], t_prev: float, tau: float,
            sampling: LoadSampling) -> np.ndarray:
    if sampling is LoadSampling.MIDPOINT:
        return load(t_prev + 0.5 * tau)
    if sampling is LoadSampling.RIGHT_ENDPOINT:
        return load(t_prev + tau)
    return 0.5 * (load(t_prev) + load(t_prev + tau))


def _initial_ledger(problem: ThreeFieldProblem, s: State3F) -> EnergyLedger:
    return EnergyLedger(kinetic=problem.kinetic_energy(s.v),
                        stored_parts=problem.stored_parts(s.u, s.pi, s.zeta))


def energy_balance_residual(problem: ThreeFieldProblem, s_prev: State3F,
                            s_next: State3F, step_dissipation: float,
                            step_work: float) -> float:
    """Balance defect of one step, from states and step increments alone.

        [T(v) + Phi]_next - [T(v) + Phi]_prev + dissipation - work
    """
    e_prev = problem.kinetic_energy(s_prev.v) + problem.stored_energy(
        s_prev.u, s_prev.pi, s_prev.zeta)
    e_next = problem.kinetic_energy(s_next.v) + problem.stored_energy(
        s_next.u, s_next.pi, s_next.zeta)
    return (e_next - e_prev) + step_dissipation - step_work


def _substep_up(problem: ThreeFieldProblem, s: State3F, cfg: SchemeConfig,
                c_A: float, c_D: float, c_M: float, midpoint_rate: bool):
    """Shared (u, pi) substep of all three schemes.

    Minimizes, over the increments (du, dpi),

        0.5 [du;dpi]' Q [du;dpi] + b.[du;dpi] + sum_g w_g |dpi_g|

    with Q = c_A*A + c_D*D + c_M*blkdiag(M,0) and b assembled from the
    previous state, the inertia history term and the sampled loads. Returns
    the updated fields plus the step's work and dissipation increments.
    """
    tau = cfg.tau
    form = problem.quadratic_form(s.zeta)
    n_p = form.n_p
    pi_active = s.pi if (problem.pi_evolves and n_p) else np.zeros(n_p)

    f_k = _sample(problem.f_ext, s.t, tau, cfg.load_sampling)
    g_k = _sample(problem.g_ext, s.t, tau, cfg.load_sampling) if n_p else np.zeros(0)

    grad_u, grad_p = form.grad(s.u, pi_active)
    Mv = problem.mass @ s.v
    b_u_full = grad_u - (c_M * tau) * Mv - f_k
    b_p = (grad_p - g_k) if n_p else np.zeros(0)

    free = problem.free_idx
    Q_uu, Q_up, Q_pp = form.step_operator(c_A, c_D, c_M, problem.mass, free)
    res = alternating_min(Q_uu, Q_up, Q_pp, b_u_full[free], b_p, form.groups,
                          tol=cfg.am_tol, maxit=cfg.am_maxit, lin_tol=cfg.lin_tol)

    du = np.zeros(problem.n_u)
    du[free] = res.u
    dp = res.pi

    u_new = s.u + du
    if midpoint_rate:
        v_new = (2.0 / tau) * du - s.v
    else:
        v_new = du / tau
    pi_new = (s.pi + dp) if (problem.pi_evolves and n_p) else s.pi

    d_visc = form.viscous_rate(du, dp) / tau
    d_ri = 0.0
    for g in form.groups:
        d_ri += g.weight * float(np.linalg.norm(dp[list(g.indices)]))
    work = float(f_k @ du)
    if n_p:
        work += float(g_k @ dp)
    return u_new, v_new, pi_new, d_visc, d_ri, work, res.iterations


def _advance(problem, s, cfg, ledger, u_new, v_new, pi_new, zeta_new,
             d_visc, d_ri, work):
    s_new = State3F(t=s.t + cfg.tau, u=u_new, v=v_new, pi=pi_new, zeta=zeta_new)
    if ledger is None:
        ledger = _initial_ledger(problem, s)
    new_ledger = ledger.advanced(
        kinetic=problem.kinetic_energy(v_new),
        stored_parts=problem.stored_parts(u_new, pi_new, zeta_new),
        d_viscous=d_visc, d_rate_indep=d_ri, d_work=work)
    return s_new, new_ledger


def step_cn_monolithic(problem: ThreeFieldProblem, s: State3F, cfg: SchemeConfig,
                       ledger: EnergyLedger | None = None):
    """One implicit-midpoint step treating all evolving fields together.

    Requires a jointly quadratic stored energy, i.e. a problem whose
    degradation field is frozen; otherwise the joint midpoint potential is
    not quadratic and this stepper refuses to run.
    """
    problem.check_state(s)
    if not problem.zeta_frozen:
        raise InvalidArgumentError(
            "monolithic midpoint stepping needs a jointly quadratic stored "
            "energy; this problem evolves its degradation field, use the "
            "fractional-step scheme")
    tau = cfg.tau
    out = _substep_up(problem, s, cfg, 0.5, 1.0 / tau, 2.0 / tau**2,
                      midpoint_rate=True)
    u_new, v_new, pi_new, d_visc, d_ri, work, _ = out
    return _advance(problem, s, cfg, ledger, u_new, v_new, pi_new, s.zeta,
                    d_visc, d_ri, work)


def step_fractional(problem: ThreeFieldProblem, s: State3F, cfg: SchemeConfig,
                    ledger: EnergyLedger | None = None):
    """One fractional step: midpoint (u, pi) substep, then the zeta substep."""
    problem.check_state(s)
    tau = cfg.tau
    out = _substep_up(problem, s, cfg, 0.5, 1.0 / tau, 2.0 / tau**2,
                      midpoint_rate=True)
    u_new, v_new, pi_new, d_visc, d_ri, work, _ = out
    h_k = _sample(problem.h_ext, s.t, tau, cfg.load_sampling) \
        if problem.n_zeta else np.zeros(0)
    zeta_new, dz_visc, dz_ri = problem.zeta_substep(u_new, pi_new, s.zeta, tau, h_k)
    if problem.n_zeta:
        work += float(h_k @ (zeta_new - s.zeta))
    return _advance(problem, s, cfg, ledger, u_new, v_new, pi_new, zeta_new,
                    d_visc + dz_visc, d_ri + dz_ri, work)


def step_backward_euler(problem: ThreeFieldProblem, s: State3F, cfg: SchemeConfig,
                        ledger: EnergyLedger | None = None):
    """One fully implicit right-endpoint step (unconditionally dissipative)."""
    problem.check_state(s)
    tau = cfg.tau
    out = _substep_up(problem, s, cfg, 1.0, 1.0 / tau, 1.0 / tau**2,
                      midpoint_rate=False)
    u_new, v_new, pi_new, d_visc, d_ri, work, _ = out
    h_k = _sample(problem.h_ext, s.t, tau, cfg.load_sampling) \
        if problem.n_zeta else np.zeros(0)
    zeta_new, dz_visc, dz_ri = problem.zeta_substep(u_new, pi_new, s.zeta, tau, h_k)
    if problem.n_zeta:
        work += float(h_k @ (zeta_new - s.zeta))
    return _advance(problem, s, cfg, ledger, u_new, v_new, pi_new, zeta_new,
                    d_visc + dz_visc, d_ri + dz_ri, work)


STEPPERS = {
    Scheme.CN_MONOLITHIC: step_cn_monolithic,
    Scheme.FRACTIONAL_STEP: step_fractional,
    Scheme.BACKWARD_EULER: step_backward_euler,
}


@dataclass(frozen=True)
class LedgerRow:
    """One recorded step of a trajectory."""

    step: int
    t: float
    kinetic: float
    stored_parts: dict[str, float]
    dissip_viscous_cum: float
    dissip_rate_indep_cum: float
    work_ext_cum: float
    step_residual: float
    cum_residual: float

    @property
    def stored(self) -> float:
        return float(sum(self.stored_parts.values()))

    @property
    def total(self) -> float:
        return self.kinetic + self.stored


@dataclass
class TrajectorySummary:
    """Everything :func:`run_trajectory` hands back."""

    final_state: State3F
    ledger: EnergyLedger
    rows: list[LedgerRow]
    zeta_change_steps: list[int] = field(default_factory=list)
    initial_total: float = 0.0

    def column(self, name: str) -> np.ndarray:
        if name in ("t", "kinetic", "dissip_viscous_cum", "dissip_rate_indep_cum",
                    "work_ext_cum", "step_residual", "cum_residual"):
            return np.array([getattr(r, name) for r in self.rows])
        if name in ("stored", "total"):
            return np.array([getattr(r, name) for r in self.rows])
        return np.array([r.stored_parts[name] for r in self.rows])

    @property
    def max_rel_step_residual(self) -> float:
        scale = max(self.initial_total,
                    max((r.total for r in self.rows), default=0.0),
                    np.finfo(float).tiny)
        return float(max((abs(r.step_residual) for r in self.rows), default=0.0)
                     / scale)


def run_trajectory(problem: ThreeFieldProblem, state0: State3F, cfg: SchemeConfig,
                   n_steps: int,
                   observers: Sequence[Callable[[int, State3F, EnergyLedger], None]] = (),
                   ) -> TrajectorySummary:
    """Advance ``n_steps`` steps of the configured scheme, keeping the ledger.

    Raises :class:`InvalidArgumentError` for ``n_steps < 1``; solver failures
    are re-raised with the offending step index attached.
    """
    if n_steps < 1:
        raise InvalidArgumentError(f"n_steps must be >= 1, got {n_steps}")
    problem.check_state(state0)
    stepper = STEPPERS[cfg.scheme]
    ledger = _initial_ledger(problem, state0)
    e0 = ledger.total
    s = state0
    rows: list[LedgerRow] = []
    zeta_steps: list[int] = []
    for k in range(1, n_steps + 1):
        try:
            s_new, ledger_new = stepper(problem, s, cfg, ledger)
        except NonConvergedError as exc:
            exc.step_index = k
            raise
        if problem.n_zeta and not np.array_equal(s_new.zeta, s.zeta):
            zeta_steps.append(k)
        cum = ((ledger_new.total - e0)
               + ledger_new.dissip_viscous_cum + ledger_new.dissip_rate_indep_cum
               - ledger_new.work_ext_cum)
        rows.append(LedgerRow(
            step=k, t=s_new.t, kinetic=ledger_new.kinetic,
            stored_parts=dict(ledger_new.stored_parts),
            dissip_viscous_cum=ledger_new.dissip_viscous_cum,
            dissip_rate_indep_cum=ledger_new.dissip_rate_indep_cum,
            work_ext_cum=ledger_new.work_ext_cum,
            step_residual=ledger_new.residual,
            cum_residual=cum))
        for obs in observers:
            obs(k, s_new, ledger_new)
        s, ledger = s_new, ledger_new
    return TrajectorySummary(final_state=s, ledger=ledger, rows=rows,
                             zeta_change_steps=zeta_steps, initial_total=e0)
