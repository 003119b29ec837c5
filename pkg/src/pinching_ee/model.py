"""System model for the uplink pinching-antenna NOMA link.

Physical types, unit conversion, the free-space LoS channel and the
rate / energy-efficiency formulas shared by every solver. Everything is
computed in linear watts and bits/s/Hz.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
LN2 = math.log(2.0)


class ValidationError(ValueError):
    """Raised when a model object or solver input violates its invariants."""


def dbm_to_watts(p_dbm):
    """Convert dBm to watts. Works elementwise on arrays."""
    if np.ndim(p_dbm):
        return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)
    return 10.0 ** ((float(p_dbm) - 30.0) / 10.0)


def watts_to_dbm(p_w):
    if np.ndim(p_w):
        return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0
    return 10.0 * math.log10(float(p_w)) + 30.0


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be a finite positive number, got {value!r}")
    return value


@dataclass(frozen=True)
class Scenario:
    """Immutable physical parameters of one deployment."""

    carrier_frequency_hz: float = 28e9
    wave_speed_m_per_s: float = SPEED_OF_LIGHT
    antenna_height_m: float = 3.0
    waveguide_length_m: float = 120.0
    area_x_m: float = 120.0
    area_y_m: float = 20.0
    noise_power_w: float = 1e-12
    fixed_power_w: float = 0.01

    def __post_init__(self):
        for name in (
            "carrier_frequency_hz",
            "wave_speed_m_per_s",
            "antenna_height_m",
            "waveguide_length_m",
            "area_x_m",
            "area_y_m",
            "noise_power_w",
            "fixed_power_w",
        ):
            object.__setattr__(self, name, _require_positive(name, getattr(self, name)))

    @property
    def path_loss_constant(self) -> float:
        """c^2 / (16 pi^2 f_c^2), the numerator of the free-space gain."""
        return self.wave_speed_m_per_s**2 / (16.0 * math.pi**2 * self.carrier_frequency_hz**2)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UserSet:
    """User coordinates (N, 2) in metres and per-user power caps in watts."""

    positions: np.ndarray
    power_caps_w: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        caps = np.array(self.power_caps_w, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValidationError(f"positions must have shape (N, 2), got {pos.shape}")
        if caps.ndim == 0:
            caps = np.full(len(pos), float(caps))
        if caps.ndim != 1 or len(caps) != len(pos):
            raise ValidationError("positions and power_caps_w must have equal length")
        if len(pos) == 0:
            raise ValidationError("a UserSet needs at least one user")
        if not np.all(np.isfinite(pos)):
            raise ValidationError("user positions must be finite")
        if not np.all(np.isfinite(caps)) or np.any(caps <= 0):
            raise ValidationError("power caps must be finite and strictly positive")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "power_caps_w", _readonly(caps))

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def x(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.positions[:, 1]

    def check_inside(self, scenario: Scenario) -> "UserSet":
        """Reject users outside the rectangular service area."""
        half = scenario.area_y_m / 2.0
        bad = (self.x < 0) | (self.x > scenario.area_x_m) | (np.abs(self.y) > half)
        if np.any(bad):
            idx = np.flatnonzero(bad).tolist()
            raise ValidationError(f"users {idx} lie outside the {scenario.area_x_m} x {scenario.area_y_m} m service area")
        return self


@dataclass(frozen=True)
class AntennaPosition:
    x_m: float

    def __post_init__(self):
        object.__setattr__(self, "x_m", float(self.x_m))

    def check(self, scenario: Scenario) -> "AntennaPosition":
        if not 0.0 <= self.x_m <= scenario.waveguide_length_m:
            raise ValidationError(
                f"antenna position {self.x_m} outside waveguide [0, {scenario.waveguide_length_m}]"
            )
        return self


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    powers_w: np.ndarray

    def __post_init__(self):
        p = np.array(self.powers_w, dtype=float)
        if p.ndim != 1:
            raise ValidationError("powers_w must be one-dimensional")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValidationError("transmit powers must be finite and non-negative")
        object.__setattr__(self, "powers_w", _readonly(p))

    def __len__(self) -> int:
        return len(self.powers_w)

    def check_caps(self, caps: Sequence[float]) -> "PowerAllocation":
        caps = np.asarray(caps, dtype=float)
        if len(caps) != len(self.powers_w):
            raise ValidationError("allocation and caps have different lengths")
        if np.any(self.powers_w > caps):
            raise ValidationError("allocation exceeds a power cap")
        return self


@dataclass(frozen=True, eq=False)
class ChannelGains:
    gains: np.ndarray
    antenna: AntennaPosition

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 1 or np.any(g <= 0) or not np.all(np.isfinite(g)):
            raise ValidationError("channel gains must be a 1-D array of finite positive values")
        object.__setattr__(self, "gains", _readonly(g))

    def __len__(self) -> int:
        return len(self.gains)


@dataclass(frozen=True, eq=False)
class EESolution:
    """Joint antenna position and power allocation with its EE bookkeeping."""

    antenna: AntennaPosition
    allocation: PowerAllocation
    ee_bits_per_joule: float
    sum_rate_bits_per_s_hz: float
    total_power_w: float
    trace: tuple = ()
    converged: bool = True
    scheme: str = ""
    outer_iterations: int = 0

    @property
    def flagged(self) -> bool:
        return not self.converged


def channel_gain(user, antenna, scenario: Scenario):
    """Free-space LoS gain between user(s) at (x, y, 0) and the antenna at (x_ant, 0, d).

    ``user`` may be a single (x, y) pair or an (N, 2) array; ``antenna`` an
    :class:`AntennaPosition` or a plain float.
    """
    x_ant = antenna.x_m if isinstance(antenna, AntennaPosition) else antenna
    u = np.asarray(user, dtype=float)
    dist_sq = (x_ant - u[..., 0]) ** 2 + u[..., 1] ** 2 + scenario.antenna_height_m**2
    out = scenario.path_loss_constant / dist_sq
    return float(out) if out.ndim == 0 else out


def compute_gains(users: UserSet, antenna: AntennaPosition | float, scenario: Scenario) -> ChannelGains:
    if not isinstance(antenna, AntennaPosition):
        antenna = AntennaPosition(antenna)
    return ChannelGains(channel_gain(users.positions, antenna, scenario), antenna)


def _as_arrays(gains, alloc) -> tuple[np.ndarray, np.ndarray]:
    h = gains.gains if isinstance(gains, ChannelGains) else np.asarray(gains, dtype=float)
    p = alloc.powers_w if isinstance(alloc, PowerAllocation) else np.asarray(alloc, dtype=float)
    if h.shape != p.shape:
        raise ValidationError(f"gains and allocation lengths differ: {h.shape} vs {p.shape}")
    return h, p


def decoding_order(gains) -> np.ndarray:
    """Indices sorted by descending gain; ties keep original index order."""
    h = gains.gains if isinstance(gains, ChannelGains) else np.asarray(gains, dtype=float)
    return np.argsort(-h, kind="stable")


def per_user_rates(gains, alloc, scenario: Scenario) -> np.ndarray:
    """SIC rates with strongest-first decoding, returned in the caller's user order."""
    h, p = _as_arrays(gains, alloc)
    order = decoding_order(h)
    rx = (p * h)[order]
    # interference seen by each user = received power of all weaker (later-decoded) users
    tail = np.concatenate((np.cumsum(rx[::-1])[::-1][1:], [0.0]))
    sorted_rates = np.log1p(rx / (tail + scenario.noise_power_w)) / LN2
    rates = np.empty_like(sorted_rates)
    rates[order] = sorted_rates
    return rates


def sum_rate_noma(gains, alloc, scenario: Scenario) -> float:
    """Telescoped NOMA sum rate log2(1 + sum(P h) / sigma^2)."""
    h, p = _as_arrays(gains, alloc)
    return math.log1p(float(np.dot(p, h)) / scenario.noise_power_w) / LN2


def total_power(alloc, scenario: Scenario) -> float:
    p = alloc.powers_w if isinstance(alloc, PowerAllocation) else np.asarray(alloc, dtype=float)
    return scenario.fixed_power_w + float(np.sum(p))


def energy_efficiency(gains, alloc, scenario: Scenario) -> float:
    return sum_rate_noma(gains, alloc, scenario) / total_power(alloc, scenario)
