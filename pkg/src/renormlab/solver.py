"""Damped fixed-point iteration for the renormalization map.

Residuals are measured in the weighted norm; iterates stay parity-projected
and the report keeps the full residual history with stall and increase
flags.  No constructive convergence guarantee exists for this iteration, so
non-convergence is an ordinary reported outcome rather than an error; only
norm blowup aborts.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .convolve import ConvolutionPlan
from .errors import BlowupError, InvalidInitError
from .invariants import envelope_membership_ED
from .params import ModelParams, SpaceParams
from .profiles import Profile, weighted_norm
from .renorm import apply_renorm, parity_project

__all__ = [
    "SolveConfig",
    "ResidualReport",
    "default_norm_p",
    "residual",
    "fixed_point_solve",
    "beta_continuation",
    "lemma51_crosscheck",
]

# relative-residual denominator floor, so the zero profile reads as residual 0
_FLOOR = 1e-30
# two consecutive residuals closer than this (relatively) count as a stall
_STALL_RTOL = 1e-12
# membership slack for the extremal init whose envelope touches the class
# boundary: interpolation leaves a one-ulp hair
_INIT_SLACK = -1e-12


@dataclass(frozen=True)
class SolveConfig:
    """Iteration parameters for one solve.

    damping = 0 is admitted as the degenerate no-progress probe; norm_p None
    defers to the order-dependent default (2r+2)/(2r+1).  anderson_depth > 0
    switches the plain damped update to Anderson mixing over that window.
    """

    beta: float
    damping: float = 0.5
    tol: float = 1e-6
    max_iter: int = 40
    parity: str = "even"
    norm_p: float | None = None
    norm_nu: float = 0.0
    anderson_depth: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError("damping must lie in [0, 1]")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if isinstance(self.max_iter, bool) or not isinstance(self.max_iter, int):
            raise ValueError("max_iter must be an integer")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.parity not in ("even", "odd", "none"):
            raise ValueError("parity must be 'even', 'odd' or 'none'")
        if self.norm_p is not None and not self.norm_p >= 1.0:
            raise ValueError("norm_p must be at least 1")
        if isinstance(self.anderson_depth, bool) or not isinstance(self.anderson_depth, int):
            raise ValueError("anderson_depth must be an integer")
        if self.anderson_depth < 0:
            raise ValueError("anderson_depth must be nonnegative")


@dataclass(frozen=True)
class ResidualReport:
    """History and outcome of one solve.

    increase_flags lists iterations whose residual exceeded the previous one
    by more than 5%; non_progress marks a stalled (constant-residual) run;
    cross_residuals is filled by continuation runs with this solution's
    residual at every beta of the schedule.
    """

    history: tuple[tuple[int, float], ...]
    converged: bool
    final_profile_ref: str
    beta: float
    non_progress: bool = False
    increase_flags: tuple[int, ...] = ()
    cross_residuals: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        for _, res in self.history:
            if not res >= 0.0:
                raise ValueError("residual entries must be nonnegative")

    def as_dict(self) -> dict:
        return {
            "history": [[it, res] for it, res in self.history],
            "converged": self.converged,
            "final_profile_ref": self.final_profile_ref,
            "beta": self.beta,
            "non_progress": self.non_progress,
            "increase_flags": list(self.increase_flags),
            "cross_residuals": list(self.cross_residuals),
        }


def default_norm_p(r: int) -> float:
    """Residual-norm exponent tied to the nonlinearity order."""
    return (2.0 * r + 2.0) / (2.0 * r + 1.0)


def _flag_increases(residuals: list[float]) -> tuple[int, ...]:
    """Iterations whose residual grew by more than 5% over the previous one."""
    return tuple(
        it
        for it in range(1, len(residuals))
        if residuals[it] > 1.05 * residuals[it - 1]
    )


def _detect_stall(residuals: list[float]) -> bool:
    for a, b in zip(residuals, residuals[1:]):
        if abs(a - b) <= _STALL_RTOL * max(abs(a), abs(b)) or a == b:
            return True
    return False


def residual(
    psi: Profile,
    beta: float,
    mp: ModelParams,
    plan: ConvolutionPlan | None = None,
    p: float | None = None,
    nu: float = 0.0,
) -> float:
    """Relative fixed-point defect of the map at beta in the weighted norm."""
    plan = plan if plan is not None else ConvolutionPlan()
    p = p if p is not None else default_norm_p(mp.r)
    image = apply_renorm(psi, mp, beta, plan)
    defect = weighted_norm(psi.with_chi(image.chi - psi.chi), p, nu)
    return float(defect / max(weighted_norm(psi, p, nu), _FLOOR))


def _anderson_step(
    history_x: list[np.ndarray],
    history_f: list[np.ndarray],
    damping: float,
) -> np.ndarray:
    """One Anderson-mixing update from the stored (iterate, defect) window."""
    x_k = history_x[-1]
    f_k = history_f[-1]
    if len(history_x) == 1:
        return x_k + damping * f_k
    dx = np.stack([b - a for a, b in zip(history_x, history_x[1:])], axis=1)
    df = np.stack([b - a for a, b in zip(history_f, history_f[1:])], axis=1)
    gamma, *_ = np.linalg.lstsq(df, f_k, rcond=None)
    return x_k + damping * f_k - (dx + damping * df) @ gamma


def fixed_point_solve(
    init: Profile,
    cfg: SolveConfig,
    mp: ModelParams,
    sp: SpaceParams,
    plan: ConvolutionPlan | None = None,
) -> tuple[Profile, ResidualReport]:
    """Iterate psi <- parity((1 - damping) psi + damping R[psi]) from init.

    Stops at residual < tol or after max_iter measured iterations; the
    returned profile is always the best (lowest-residual) measured iterate,
    with converged recording whether tol was reached.  The init must sit in
    the configured envelope class; iteration norms above 1000x the init norm
    abort with a blowup error.
    """
    plan = plan if plan is not None else ConvolutionPlan()
    p = cfg.norm_p if cfg.norm_p is not None else default_norm_p(mp.r)
    nu = cfg.norm_nu
    gate = envelope_membership_ED(init, sp.D, sp)
    if not gate.passed and gate.margin < _INIT_SLACK:
        raise InvalidInitError(
            f"init violates the envelope class: margin {gate.margin:.3e}"
        )
    cap = 1e3 * max(weighted_norm(init, p, nu), _FLOOR)

    current = init
    residuals: list[float] = []
    best_res = math.inf
    best = init
    converged = False
    window_x: list[np.ndarray] = []
    window_f: list[np.ndarray] = []

    for _ in range(cfg.max_iter):
        image = apply_renorm(current, mp, cfg.beta, plan)
        defect = weighted_norm(current.with_chi(image.chi - current.chi), p, nu)
        res = float(defect / max(weighted_norm(current, p, nu), _FLOOR))
        residuals.append(res)
        if res < best_res:
            best_res = res
            best = current
        if res < cfg.tol:
            converged = True
            break
        if cfg.anderson_depth > 0:
            window_x.append(current.chi.copy())
            window_f.append(image.chi - current.chi)
            if len(window_x) > cfg.anderson_depth + 1:
                window_x.pop(0)
                window_f.pop(0)
            mixed = _anderson_step(window_x, window_f, cfg.damping)
        else:
            mixed = (1.0 - cfg.damping) * current.chi + cfg.damping * image.chi
        nxt = current.with_chi(mixed)
        if cfg.parity != "none":
            nxt = parity_project(nxt, cfg.parity)
        if weighted_norm(nxt, p, nu) > cap:
            raise BlowupError(
                f"iteration norm exceeded 1000x the init norm at beta={cfg.beta}"
            )
        current = nxt

    report = ResidualReport(
        history=tuple(enumerate(residuals)),
        converged=converged,
        final_profile_ref=best.content_hash(),
        beta=cfg.beta,
        non_progress=_detect_stall(residuals),
        increase_flags=_flag_increases(residuals),
    )
    return best, report


def beta_continuation(
    betas,
    init: Profile,
    cfg: SolveConfig,
    mp: ModelParams,
    sp: SpaceParams,
    plan: ConvolutionPlan | None = None,
) -> list[tuple[float, Profile, ResidualReport]]:
    """Solve along an ascending beta schedule, warm-starting each solve.

    Every returned report carries cross_residuals: the solution's residual
    evaluated at each beta of the schedule, in schedule order (its own beta
    on the diagonal).
    """
    betas = [float(b) for b in betas]
    if not betas:
        raise ValueError("betas must be a nonempty ascending schedule")
    if any(not sp.beta0 < b < 1.0 for b in betas):
        raise ValueError("every beta must lie in (beta0, 1)")
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("betas must be strictly ascending")
    plan = plan if plan is not None else ConvolutionPlan()
    p = cfg.norm_p if cfg.norm_p is not None else default_norm_p(mp.r)

    stages: list[tuple[float, Profile, ResidualReport]] = []
    start = init
    for b in betas:
        prof, rep = fixed_point_solve(
            start, dataclasses.replace(cfg, beta=b), mp, sp, plan
        )
        stages.append((b, prof, rep))
        start = prof
    out: list[tuple[float, Profile, ResidualReport]] = []
    for b, prof, rep in stages:
        cross = tuple(
            residual(prof, b_j, mp, plan, p, cfg.norm_nu) for b_j in betas
        )
        out.append((b, prof, dataclasses.replace(rep, cross_residuals=cross)))
    return out


def lemma51_crosscheck(
    psi: Profile,
    beta: float,
    n_max: int,
    mp: ModelParams,
    plan: ConvolutionPlan | None = None,
    p: float | None = None,
    nu: float = 0.0,
) -> list[tuple[int, float]]:
    """Residual of psi at beta^n for n = 1..n_max.

    A genuine fixed point at beta is fixed at every power of beta, so all
    entries should stay comparable to the n = 1 residual.  beta^{n_max} must
    stay above the 0.05 floor where the map's window still resolves.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise ValueError("n_max must be an integer >= 1")
    if not beta**n_max > 0.05:
        raise ValueError("beta^n_max must stay above the 0.05 floor")
    plan = plan if plan is not None else ConvolutionPlan()
    return [(n, residual(psi, beta**n, mp, plan, p, nu)) for n in range(1, n_max + 1)]
