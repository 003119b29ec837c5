"""Alternating optimisation of powers and antenna position, plus baselines."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .antenna import (
    PositionObjective,
    PsoConfig,
    TdmaPositionObjective,
    initialize_antenna,
    position_grid,
    pso_optimize,
)
from .model import (
    AntennaPosition,
    EESolution,
    Scenario,
    UserSet,
    ValidationError,
    channel_gain,
    compute_gains,
    sum_rate_noma,
    total_power,
)
from .power import (
    DinkelbachConfig,
    PowerSolveResult,
    allocate_power,
    allocate_power_batch,
    allocate_power_tdma,
    tdma_sum_rate,
    tdma_total_power,
)

logger = logging.getLogger(__name__)

INIT_MODES = ("nearest_user", "random", "fixed")


class SchemeKind(str, enum.Enum):
    NOMA_PSO = "noma-pso"
    NOMA_EXHAUSTIVE = "noma-exhaustive"
    NOMA_RANDOM = "noma-random"
    NOMA_FIXED = "noma-fixed"
    TDMA = "tdma"

    def __str__(self) -> str:
        return self.value


ALL_SCHEMES = tuple(SchemeKind)


@dataclass(frozen=True)
class AoConfig:
    """Outer-loop settings.

    ``init_mode`` is one of ``nearest_user``, ``random`` (uniform on the
    waveguide, drawn from ``seed``) or ``fixed`` (at ``init_x``).
    ``ee_improvement_tolerance`` is relative to the incumbent EE.
    """

    max_outer_iterations: int = 20
    ee_improvement_tolerance: float = 1e-8
    dinkelbach: DinkelbachConfig = field(default_factory=DinkelbachConfig)
    pso: PsoConfig = field(default_factory=PsoConfig)
    init_mode: str = "nearest_user"
    init_x: float | None = None
    seed: int | None = None
    grid_step_m: float = 0.01

    def __post_init__(self):
        if self.max_outer_iterations < 1:
            raise ValidationError("max_outer_iterations must be >= 1")
        if not self.ee_improvement_tolerance > 0:
            raise ValidationError("ee_improvement_tolerance must be > 0")
        if self.init_mode not in INIT_MODES:
            raise ValidationError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        if self.init_mode == "fixed" and self.init_x is None:
            raise ValidationError("init_mode 'fixed' needs init_x")
        if not self.grid_step_m > 0:
            raise ValidationError("grid_step_m must be > 0")


def _pso_seed(base: int, outer: int) -> int:
    return int(np.random.SeedSequence([base, outer]).generate_state(1)[0])


def initial_position(scenario: Scenario, users: UserSet, cfg: AoConfig) -> AntennaPosition:
    L = scenario.waveguide_length_m
    if cfg.init_mode == "nearest_user":
        return initialize_antenna(users, L)
    if cfg.init_mode == "random":
        return AntennaPosition(np.random.default_rng(cfg.seed).uniform(0.0, L))
    return AntennaPosition(cfg.init_x).check(scenario)


def _ao_loop(
    scenario: Scenario,
    users: UserSet,
    cfg: AoConfig,
    start: AntennaPosition,
    solve_powers: Callable[[np.ndarray], PowerSolveResult],
    make_objective: Callable[[np.ndarray], Callable],
    metrics: Callable[[np.ndarray, np.ndarray], tuple[float, float]],
    scheme: str,
) -> EESolution:
    L = scenario.waveguide_length_m

    def evaluate(x: float):
        h = channel_gain(users.positions, x, scenario)
        res = solve_powers(h)
        rate, power = metrics(h, res.powers)
        return res, rate, power

    x = start.x_m
    res, rate, power = evaluate(x)
    ee = rate / power
    trace = [(0, ee)]
    flags_ok = res.converged
    settled = False
    k = 0
    for k in range(1, cfg.max_outer_iterations + 1):
        obj = make_objective(res.powers)
        pso_cfg = replace(cfg.pso, rng_seed=_pso_seed(cfg.pso.rng_seed, k))
        cand = pso_optimize(obj, L, pso_cfg, x0=x).x
        new_res, new_rate, new_power = evaluate(cand)
        flags_ok &= new_res.converged
        new_ee = new_rate / new_power
        if new_ee > ee + cfg.ee_improvement_tolerance * abs(ee):
            x, res, rate, power, ee = cand, new_res, new_rate, new_power, new_ee
            trace.append((k, ee))
        else:
            # PSO did not help: keep the previous position and its powers
            settled = True
            break
    if not settled:
        logger.warning("%s: AO hit max_outer_iterations=%d", scheme, cfg.max_outer_iterations)

    return EESolution(
        antenna=AntennaPosition(x),
        allocation=res.allocation,
        ee_bits_per_joule=ee,
        sum_rate_bits_per_s_hz=rate,
        total_power_w=power,
        trace=tuple(trace),
        converged=bool(settled and flags_ok),
        scheme=scheme,
        outer_iterations=k,
    )


def _noma_metrics(scenario):
    return lambda h, p: (sum_rate_noma(h, p, scenario), total_power(p, scenario))


def alternating_optimize(scenario: Scenario, users: UserSet, cfg: AoConfig = AoConfig(), scheme: str = "noma-ao") -> EESolution:
    """Alternate optimal power allocation and PSO positioning until EE stalls."""
    caps = users.power_caps_w
    return _ao_loop(
        scenario,
        users,
        cfg,
        initial_position(scenario, users, cfg),
        solve_powers=lambda h: allocate_power(h, caps, scenario, cfg.dinkelbach),
        make_objective=lambda p: PositionObjective.from_users(users, p, scenario),
        metrics=_noma_metrics(scenario),
        scheme=scheme,
    )


def tdma_solve(scenario: Scenario, users: UserSet, cfg: AoConfig = AoConfig()) -> EESolution:
    """Equal-slot TDMA baseline; the antenna is placed for TDMA's own sum rate."""
    caps = users.power_caps_w
    return _ao_loop(
        scenario,
        users,
        cfg,
        initial_position(scenario, users, cfg),
        solve_powers=lambda h: allocate_power_tdma(h, caps, scenario, cfg.dinkelbach),
        make_objective=lambda p: TdmaPositionObjective(users, p, scenario),
        metrics=lambda h, p: (tdma_sum_rate(h, p, scenario), tdma_total_power(p, scenario)),
        scheme=SchemeKind.TDMA.value,
    )


def _single_position(scenario, users, cfg, x, scheme) -> EESolution:
    gains = compute_gains(users, x, scenario)
    res = allocate_power(gains, users.power_caps_w, scenario, cfg.dinkelbach)
    rate = sum_rate_noma(gains, res.allocation, scenario)
    power = total_power(res.allocation, scenario)
    ee = rate / power
    return EESolution(
        antenna=gains.antenna,
        allocation=res.allocation,
        ee_bits_per_joule=ee,
        sum_rate_bits_per_s_hz=rate,
        total_power_w=power,
        trace=((0, ee),),
        converged=res.converged,
        scheme=scheme,
        outer_iterations=0,
    )


def exhaustive_joint_search(scenario: Scenario, users: UserSet, cfg: AoConfig = AoConfig()) -> EESolution:
    """Optimal powers at every grid position; keep the best position.

    The grid includes x = 0, so this always dominates the fixed-antenna
    baseline. The winner is re-solved with the scalar allocator.
    """
    grid = position_grid(scenario.waveguide_length_m, cfg.grid_step_m)
    G = channel_gain(users.positions[None, :, :], grid[:, None], scenario)
    _, ee, conv = allocate_power_batch(G, users.power_caps_w, scenario, cfg.dinkelbach)
    k = int(np.argmax(ee))
    sol = _single_position(scenario, users, cfg, float(grid[k]), SchemeKind.NOMA_EXHAUSTIVE.value)
    if not conv[k]:
        sol = replace(sol, converged=False)
    return sol


def solve_scheme(kind, scenario: Scenario, users: UserSet, cfg: AoConfig = AoConfig()) -> EESolution:
    kind = SchemeKind(kind)
    users.check_inside(scenario)
    if kind is SchemeKind.NOMA_PSO:
        return alternating_optimize(scenario, users, replace(cfg, init_mode="nearest_user"), kind.value)
    if kind is SchemeKind.NOMA_RANDOM:
        return alternating_optimize(scenario, users, replace(cfg, init_mode="random"), kind.value)
    if kind is SchemeKind.NOMA_FIXED:
        return _single_position(scenario, users, cfg, 0.0, kind.value)
    if kind is SchemeKind.NOMA_EXHAUSTIVE:
        return exhaustive_joint_search(scenario, users, cfg)
    return tdma_solve(scenario, users, replace(cfg, init_mode="nearest_user"))


__all__ = [
    "ALL_SCHEMES",
    "AoConfig",
    "SchemeKind",
    "alternating_optimize",
    "exhaustive_joint_search",
    "initial_position",
    "solve_scheme",
    "tdma_solve",
]
