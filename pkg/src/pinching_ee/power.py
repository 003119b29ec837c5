"""EE-optimal transmit powers for a fixed antenna position.

Users are visited strongest-first. Each one solves a scalar fractional
program with Dinkelbach iterations while every stronger user sits at its
cap; the first user that stops short of its cap ends the sweep and all
weaker users stay silent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    LN2,
    ChannelGains,
    PowerAllocation,
    Scenario,
    ValidationError,
    decoding_order,
    energy_efficiency,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DinkelbachConfig:
    tolerance: float = 1e-6
    max_iterations: int = 100
    warm_start: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValidationError("dinkelbach tolerance must be > 0")
        if int(self.max_iterations) < 1:
            raise ValidationError("dinkelbach max_iterations must be >= 1")


@dataclass(frozen=True)
class DinkelbachResult:
    power: float
    beta: float
    iterations: int
    converged: bool
    betas: tuple = ()


@dataclass(frozen=True, eq=False)
class PowerSolveResult:
    allocation: PowerAllocation
    ee: float
    beta: float
    active_users: int
    iterations_per_user: tuple
    converged: bool = True

    @property
    def powers(self) -> np.ndarray:
        return self.allocation.powers_w


def stationary_power(gain: float, prefix_weighted_power: float, beta: float, scenario: Scenario) -> float:
    """Zero of the derivative of log2(P h + prefix + sigma^2) - beta (P + const).

    Not clamped; the caller projects it onto [0, cap].
    """
    return 1.0 / (beta * LN2) - (prefix_weighted_power + scenario.noise_power_w) / gain


def clamp_power(p_der: float, cap: float) -> float:
    if p_der < 0.0:
        return 0.0
    if p_der > cap:
        return cap
    return p_der


def dinkelbach_user(
    n_index: int,
    sorted_gains,
    caps,
    scenario: Scenario,
    cfg: DinkelbachConfig = DinkelbachConfig(),
    beta0: float | None = None,
) -> DinkelbachResult:
    """Optimal power of the ``n_index``-th strongest user (0-based).

    Users ``0 .. n_index-1`` transmit at their caps and weaker users are
    silent. ``sorted_gains``/``caps`` are in descending-gain order.
    Passing ``beta0`` warm-starts the parameter instead of deriving it from
    the all-caps prefix.
    """
    h = float(sorted_gains[n_index])
    cap = float(caps[n_index])
    g = np.asarray(sorted_gains[:n_index], dtype=float)
    c = np.asarray(caps[:n_index], dtype=float)
    prefix_h = float(np.dot(c, g))
    prefix_p = float(np.sum(c))
    noise = scenario.noise_power_w
    p_fixed = scenario.fixed_power_w

    def ee_at(p: float) -> float:
        return math.log1p((prefix_h + p * h) / noise) / LN2 / (prefix_p + p + p_fixed)

    if beta0 is None:
        power, beta = cap, ee_at(cap)
    else:
        power, beta = None, float(beta0)
    if not beta > 0:
        raise ValidationError(f"Dinkelbach parameter must be positive, got {beta}")

    betas = [beta]
    converged = False
    it = 0
    for it in range(1, int(cfg.max_iterations) + 1):
        p = clamp_power(stationary_power(h, prefix_h, beta, scenario), cap)
        beta_new = ee_at(p)
        xi = beta_new - beta
        if xi <= 0.0 and power is not None:
            # no ascent left (exact fixed point or rounding); keep the incumbent
            converged = True
            break
        power, beta = p, beta_new
        betas.append(beta)
        if xi < cfg.tolerance:
            converged = True
            break
    if not converged:
        logger.warning("Dinkelbach did not converge for user %d in %d iterations", n_index, it)
    return DinkelbachResult(power=power, beta=beta, iterations=it, converged=converged, betas=tuple(betas))


def allocate_power(
    gains: ChannelGains,
    caps,
    scenario: Scenario,
    cfg: DinkelbachConfig = DinkelbachConfig(),
) -> PowerSolveResult:
    """Sequential Dinkelbach power allocation with early termination."""
    h = gains.gains if isinstance(gains, ChannelGains) else np.asarray(gains, dtype=float)
    caps = np.asarray(caps, dtype=float)
    if len(h) == 0:
        raise ValidationError("need at least one user")
    if caps.shape != h.shape:
        raise ValidationError(f"caps shape {caps.shape} does not match gains {h.shape}")
    if np.any(caps <= 0):
        raise ValidationError("power caps must be positive")

    order = decoding_order(h)
    g_sorted = h[order]
    c_sorted = caps[order]
    p_sorted = np.zeros_like(g_sorted)
    iters = []
    converged = True
    beta = None
    for n in range(len(h)):
        warm = beta if (cfg.warm_start and beta is not None) else None
        res = dinkelbach_user(n, g_sorted, c_sorted, scenario, cfg, beta0=warm)
        p_sorted[n] = res.power
        beta = res.beta
        iters.append(res.iterations)
        converged &= res.converged
        if res.power < c_sorted[n]:
            break

    powers = np.empty_like(p_sorted)
    powers[order] = p_sorted
    alloc = PowerAllocation(powers)
    return PowerSolveResult(
        allocation=alloc,
        ee=energy_efficiency(h, powers, scenario),
        beta=beta,
        active_users=int(np.count_nonzero(powers)),
        iterations_per_user=tuple(iters),
        converged=converged,
    )


def allocate_power_batch(gains, caps, scenario: Scenario, cfg: DinkelbachConfig = DinkelbachConfig()):
    """Vectorised :func:`allocate_power` over many gain vectors.

    ``gains`` has shape (M, N), one row per candidate antenna position.
    Returns ``(powers, ee, converged)`` with shapes (M, N), (M,), (M,).
    """
    G = np.atleast_2d(np.asarray(gains, dtype=float))
    caps = np.asarray(caps, dtype=float)
    M, N = G.shape
    noise = scenario.noise_power_w
    p_fixed = scenario.fixed_power_w

    order = np.argsort(-G, axis=1, kind="stable")
    Gs = np.take_along_axis(G, order, axis=1)
    Cs = caps[order]
    Ps = np.zeros_like(Gs)
    active = np.ones(M, dtype=bool)
    converged = np.ones(M, dtype=bool)
    prefix_h = np.zeros(M)
    prefix_p = np.zeros(M)

    for n in range(N):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        h, c = Gs[idx, n], Cs[idx, n]
        ph, pp = prefix_h[idx], prefix_p[idx]
        power = c.copy()
        beta = np.log1p((ph + c * h) / noise) / LN2 / (pp + c + p_fixed)
        running = np.ones(idx.size, dtype=bool)
        for _ in range(int(cfg.max_iterations)):
            r = np.flatnonzero(running)
            if r.size == 0:
                break
            p = np.clip(1.0 / (beta[r] * LN2) - (ph[r] + noise) / h[r], 0.0, c[r])
            b_new = np.log1p((ph[r] + p * h[r]) / noise) / LN2 / (pp[r] + p + p_fixed)
            xi = b_new - beta[r]
            up = xi > 0.0
            power[r[up]] = p[up]
            beta[r[up]] = b_new[up]
            running[r[xi < cfg.tolerance]] = False
        converged[idx[running]] = False
        Ps[idx, n] = power
        prefix_h[idx] += c * h
        prefix_p[idx] += c
        active[idx[power < c]] = False

    powers = np.empty_like(Ps)
    np.put_along_axis(powers, order, Ps, axis=1)
    ee = np.log1p(np.sum(powers * G, axis=1) / noise) / LN2 / (p_fixed + powers.sum(axis=1))
    return powers, ee, converged


# ---------------------------------------------------------------------------
# TDMA: equal time slots, no interference, time-averaged transmit power.

def tdma_sum_rate(gains, powers, scenario: Scenario) -> float:
    h = np.asarray(getattr(gains, "gains", gains), dtype=float)
    p = np.asarray(getattr(powers, "powers_w", powers), dtype=float)
    return float(np.sum(np.log1p(p * h / scenario.noise_power_w))) / LN2 / len(h)


def tdma_per_user_rates(gains, powers, scenario: Scenario) -> np.ndarray:
    h = np.asarray(getattr(gains, "gains", gains), dtype=float)
    p = np.asarray(getattr(powers, "powers_w", powers), dtype=float)
    return np.log1p(p * h / scenario.noise_power_w) / LN2 / len(h)


def tdma_total_power(powers, scenario: Scenario) -> float:
    p = np.asarray(getattr(powers, "powers_w", powers), dtype=float)
    return scenario.fixed_power_w + float(np.mean(p))


def tdma_energy_efficiency(gains, powers, scenario: Scenario) -> float:
    return tdma_sum_rate(gains, powers, scenario) / tdma_total_power(powers, scenario)


def allocate_power_tdma(
    gains,
    caps,
    scenario: Scenario,
    cfg: DinkelbachConfig = DinkelbachConfig(),
) -> PowerSolveResult:
    """Dinkelbach on the TDMA EE; the subtractive problem separates per user."""
    h = np.asarray(getattr(gains, "gains", gains), dtype=float)
    caps = np.asarray(caps, dtype=float)
    if caps.shape != h.shape or len(h) == 0:
        raise ValidationError("gains and caps must be non-empty and aligned")
    noise = scenario.noise_power_w

    power = caps.copy()
    beta = tdma_energy_efficiency(h, power, scenario)
    converged = False
    it = 0
    for it in range(1, int(cfg.max_iterations) + 1):
        p = np.clip(1.0 / (beta * LN2) - noise / h, 0.0, caps)
        beta_new = tdma_energy_efficiency(h, p, scenario)
        xi = beta_new - beta
        if xi <= 0.0:
            converged = True
            break
        power, beta = p, beta_new
        if xi < cfg.tolerance:
            converged = True
            break
    alloc = PowerAllocation(power)
    return PowerSolveResult(
        allocation=alloc,
        ee=tdma_energy_efficiency(h, power, scenario),
        beta=beta,
        active_users=int(np.count_nonzero(power)),
        iterations_per_user=(it,),
        converged=converged,
    )
