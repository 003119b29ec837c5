"""Energy-efficient power control and antenna placement for uplink NOMA pinching-antenna systems."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    AntennaPosition,
    ChannelGains,
    EESolution,
    PowerAllocation,
    Scenario,
    UserSet,
    ValidationError,
    channel_gain,
    compute_gains,
    dbm_to_watts,
    energy_efficiency,
    per_user_rates,
    sum_rate_noma,
    watts_to_dbm,
)
from .power import DinkelbachConfig, allocate_power, dinkelbach_user  # noqa: E402
from .antenna import PositionObjective, PsoConfig, exhaustive_search, initialize_antenna, pso_optimize  # noqa: E402
from .ao import AoConfig, SchemeKind, alternating_optimize, solve_scheme, tdma_solve  # noqa: E402
from .estimator import PinchingAntennaEE  # noqa: E402

__all__ = [
    "AntennaPosition",
    "AoConfig",
    "ChannelGains",
    "DinkelbachConfig",
    "EESolution",
    "PinchingAntennaEE",
    "PositionObjective",
    "PowerAllocation",
    "PsoConfig",
    "Scenario",
    "SchemeKind",
    "UserSet",
    "ValidationError",
    "allocate_power",
    "alternating_optimize",
    "channel_gain",
    "compute_gains",
    "dbm_to_watts",
    "dinkelbach_user",
    "energy_efficiency",
    "exhaustive_search",
    "initialize_antenna",
    "per_user_rates",
    "pso_optimize",
    "solve_scheme",
    "sum_rate_noma",
    "tdma_solve",
    "watts_to_dbm",
]
