"""Pinching-antenna placement along the waveguide for fixed transmit powers.

With powers frozen, EE is maximised by maximising the received power sum,
i.e. a sum of bell-shaped bumps centred on the users' x-coordinates.
Searched with a 1-D particle swarm, a dense grid, or the nearest-user
heuristic used for initialisation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .model import AntennaPosition, Scenario, UserSet, ValidationError


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 30
    max_iterations: int = 200
    inertia_weight: float = 0.729
    cognitive_coeff: float = 1.49445
    social_coeff: float = 1.49445
    velocity_clamp_fraction: float = 0.2
    stall_tolerance: float = 1e-8
    stall_iterations: int = 20
    rng_seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValidationError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if min(self.inertia_weight, self.cognitive_coeff, self.social_coeff) < 0:
            raise ValidationError("PSO coefficients must be non-negative")
        if not 0.0 < self.velocity_clamp_fraction <= 1.0:
            raise ValidationError("velocity_clamp_fraction must lie in (0, 1]")
        if not self.stall_tolerance > 0:
            raise ValidationError("stall_tolerance must be > 0")
        if self.stall_iterations < 1:
            raise ValidationError("stall_iterations must be >= 1")
        if self.rng_seed < 0:
            raise ValidationError("rng_seed must be unsigned")


class PositionObjective:
    """sum_n P_n / ((x - x_n)^2 + y_n^2 + d^2), evaluated at one or many x."""

    def __init__(self, user_xy, powers_w, height_sq_m2: float):
        xy = np.asarray(user_xy, dtype=float).reshape(-1, 2)
        p = np.asarray(powers_w, dtype=float)
        if p.shape != (len(xy),):
            raise ValidationError("powers must align with users")
        if np.any(p < 0):
            raise ValidationError("powers must be non-negative")
        self.user_x = xy[:, 0].copy()
        self.offset = xy[:, 1] ** 2 + float(height_sq_m2)
        self.powers_w = p.copy()

    @classmethod
    def from_users(cls, users: UserSet, powers_w, scenario: Scenario) -> "PositionObjective":
        return cls(users.positions, powers_w, scenario.antenna_height_m**2)

    @property
    def is_trivial(self) -> bool:
        return not np.any(self.powers_w > 0)

    @property
    def anchors(self) -> np.ndarray:
        """User x-coordinates; every bump is centred on one of them."""
        return self.user_x

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = (x[..., None] - self.user_x) ** 2 + self.offset
        return np.sum(self.powers_w / d, axis=-1)


class TdmaPositionObjective:
    """TDMA sum rate as a function of antenna position (powers fixed)."""

    def __init__(self, users: UserSet, powers_w, scenario: Scenario):
        self.user_x = users.x.copy()
        self.offset = users.y**2 + scenario.antenna_height_m**2
        self.snr_scale = np.asarray(powers_w, dtype=float) * scenario.path_loss_constant / scenario.noise_power_w
        self.powers_w = np.asarray(powers_w, dtype=float)
        self.n = len(self.user_x)

    @property
    def is_trivial(self) -> bool:
        return not np.any(self.powers_w > 0)

    @property
    def anchors(self) -> np.ndarray:
        return self.user_x

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = (x[..., None] - self.user_x) ** 2 + self.offset
        return np.sum(np.log1p(self.snr_scale / d), axis=-1) / np.log(2.0) / self.n


def antenna_objective(x, obj: PositionObjective):
    out = obj(x)
    return float(out) if np.ndim(out) == 0 else out


def position_grid(length: float, step: float) -> np.ndarray:
    """{0, step, 2 step, ...} with ``length`` appended when not hit exactly."""
    if not step > 0:
        raise ValidationError("grid step must be > 0")
    if step > length:
        raise ValidationError("grid step must not exceed the waveguide length")
    n = int(np.floor(length / step * (1 + 1e-12)))
    grid = step * np.arange(n + 1)
    grid = grid[grid <= length]
    if grid[-1] < length:
        grid = np.append(grid, length)
    return grid


def exhaustive_search(obj: Callable, length: float, grid_step_m: float = 0.01) -> tuple[float, float]:
    """Grid argmax of ``obj`` on [0, length]; ties go to the smallest x."""
    grid = position_grid(length, grid_step_m)
    vals = obj(grid)
    k = int(np.argmax(vals))
    return float(grid[k]), float(vals[k])


class PsoResult(NamedTuple):
    x: float
    value: float
    iterations: int
    history: tuple


def pso_optimize(obj: Callable, length: float, cfg: PsoConfig = PsoConfig(), x0: float | None = None) -> PsoResult:
    """Global-best particle swarm on the closed interval [0, length].

    Up to ``swarm_size`` particles start on the objective's anchors (user
    x-coordinates clamped to the interval); the rest are uniform. Particles
    that overshoot a boundary are clamped there and lose their velocity.
    """
    if getattr(obj, "is_trivial", False):
        x = 0.0 if x0 is None else float(np.clip(x0, 0.0, length))
        return PsoResult(x, float(obj(np.array([x]))[0]), 0, ())

    rng = np.random.default_rng(cfg.rng_seed)
    S = cfg.swarm_size
    vmax = cfg.velocity_clamp_fraction * length

    x = rng.uniform(0.0, length, S)
    anchors = np.clip(np.asarray(getattr(obj, "anchors", ()), dtype=float), 0.0, length)[:S]
    x[: len(anchors)] = anchors
    v = rng.uniform(-vmax, vmax, S)

    f = obj(x)
    pbest, pbest_f = x.copy(), f.copy()
    g = int(np.argmax(pbest_f))
    gbest, gbest_f = pbest[g], pbest_f[g]
    history = [gbest_f]

    stall = 0
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        r1 = rng.random(S)
        r2 = rng.random(S)
        v = (
            cfg.inertia_weight * v
            + cfg.cognitive_coeff * r1 * (pbest - x)
            + cfg.social_coeff * r2 * (gbest - x)
        )
        np.clip(v, -vmax, vmax, out=v)
        x = x + v
        out = (x < 0.0) | (x > length)
        np.clip(x, 0.0, length, out=x)
        v[out] = 0.0

        f = obj(x)
        better = f > pbest_f
        pbest[better] = x[better]
        pbest_f[better] = f[better]

        g = int(np.argmax(pbest_f))
        gain = pbest_f[g] - gbest_f
        if gain > 0:
            gbest, gbest_f = pbest[g], pbest_f[g]
        history.append(gbest_f)

        # relative stall test; objective scales span many decades
        if gain <= cfg.stall_tolerance * abs(gbest_f):
            stall += 1
            if stall >= cfg.stall_iterations:
                break
        else:
            stall = 0

    return PsoResult(float(gbest), float(obj(np.array([gbest]))[0]), it, tuple(history))


def initialize_antenna(users: UserSet, length: float) -> AntennaPosition:
    """Nearest-user placement: candidate min(L, x_n) per user, keep the closest."""
    if np.any(users.x < 0):
        raise ValidationError("users with negative x lie outside the service area")
    cand = np.minimum(length, users.x)
    dist = (cand - users.x) ** 2 + users.y**2
    return AntennaPosition(float(cand[int(np.argmin(dist))]))


__all__ = [
    "PsoConfig",
    "PsoResult",
    "PositionObjective",
    "TdmaPositionObjective",
    "antenna_objective",
    "exhaustive_search",
    "initialize_antenna",
    "position_grid",
    "pso_optimize",
]
