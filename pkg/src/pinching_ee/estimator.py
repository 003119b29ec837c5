"""scikit-learn style front end.

``fit`` takes user coordinates and places the antenna (plus powers);
``predict`` returns the EE-optimal powers of any user set at the fitted
antenna position and ``score`` their EE.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .antenna import PsoConfig
from .ao import AoConfig, SchemeKind, solve_scheme
from .model import Scenario, UserSet, ValidationError, compute_gains, dbm_to_watts
from .power import DinkelbachConfig, allocate_power, allocate_power_tdma


class PinchingAntennaEE(BaseEstimator):
    """Joint antenna placement and power control maximising uplink EE.

    Parameters
    ----------
    scheme : str
        One of ``noma-pso`` (default), ``noma-exhaustive``, ``noma-random``,
        ``noma-fixed``, ``tdma``.
    max_power_dbm : float
        Per-user cap used when ``fit`` gets no explicit caps.
    waveguide_length_m, antenna_height_m, carrier_frequency_ghz,
    noise_power_dbm, fixed_power_dbm, area_y_m :
        Physical scenario. The service area spans the waveguide in x.
    random_state : int or None
        Seeds PSO and the random initial position.
    """

    def __init__(
        self,
        scheme="noma-pso",
        max_power_dbm=10.0,
        waveguide_length_m=120.0,
        antenna_height_m=3.0,
        carrier_frequency_ghz=28.0,
        noise_power_dbm=-90.0,
        fixed_power_dbm=10.0,
        area_y_m=20.0,
        max_outer_iterations=20,
        dinkelbach_tol=1e-6,
        grid_step_m=0.01,
        pso_swarm_size=30,
        pso_max_iterations=200,
        random_state=None,
    ):
        self.scheme = scheme
        self.max_power_dbm = max_power_dbm
        self.waveguide_length_m = waveguide_length_m
        self.antenna_height_m = antenna_height_m
        self.carrier_frequency_ghz = carrier_frequency_ghz
        self.noise_power_dbm = noise_power_dbm
        self.fixed_power_dbm = fixed_power_dbm
        self.area_y_m = area_y_m
        self.max_outer_iterations = max_outer_iterations
        self.dinkelbach_tol = dinkelbach_tol
        self.grid_step_m = grid_step_m
        self.pso_swarm_size = pso_swarm_size
        self.pso_max_iterations = pso_max_iterations
        self.random_state = random_state

    def _scenario(self) -> Scenario:
        return Scenario(
            carrier_frequency_hz=self.carrier_frequency_ghz * 1e9,
            antenna_height_m=self.antenna_height_m,
            waveguide_length_m=self.waveguide_length_m,
            area_x_m=self.waveguide_length_m,
            area_y_m=self.area_y_m,
            noise_power_w=dbm_to_watts(self.noise_power_dbm),
            fixed_power_w=dbm_to_watts(self.fixed_power_dbm),
        )

    def _config(self) -> AoConfig:
        seed = 0 if self.random_state is None else int(self.random_state)
        return AoConfig(
            max_outer_iterations=self.max_outer_iterations,
            dinkelbach=DinkelbachConfig(tolerance=self.dinkelbach_tol),
            pso=PsoConfig(swarm_size=self.pso_swarm_size, max_iterations=self.pso_max_iterations, rng_seed=seed),
            seed=seed,
            grid_step_m=self.grid_step_m,
        )

    def _users(self, X, power_caps_w) -> UserSet:
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValidationError(f"X must have two columns (x, y), got {X.shape[1]}")
        if power_caps_w is None:
            power_caps_w = np.full(len(X), dbm_to_watts(self.max_power_dbm))
        return UserSet(X, power_caps_w)

    def fit(self, X, y=None, power_caps_w=None):
        """Optimise the antenna position and powers for users at ``X`` (n, 2)."""
        self.scheme_ = SchemeKind(self.scheme)
        self.scenario_ = self._scenario()
        users = self._users(X, power_caps_w)
        sol = solve_scheme(self.scheme_, self.scenario_, users, self._config())
        self.solution_ = sol
        self.antenna_position_ = sol.antenna.x_m
        self.powers_ = np.asarray(sol.allocation.powers_w)
        self.ee_ = sol.ee_bits_per_joule
        self.sum_rate_ = sol.sum_rate_bits_per_s_hz
        self.total_power_ = sol.total_power_w
        self.trace_ = sol.trace
        self.n_outer_iter_ = sol.outer_iterations
        self.converged_ = sol.converged
        self.n_features_in_ = 2
        return self

    def _solve_at_antenna(self, X, power_caps_w):
        check_is_fitted(self, "antenna_position_")
        users = self._users(X, power_caps_w)
        gains = compute_gains(users, self.antenna_position_, self.scenario_)
        solver = allocate_power_tdma if self.scheme_ is SchemeKind.TDMA else allocate_power
        return solver(gains, users.power_caps_w, self.scenario_, DinkelbachConfig(tolerance=self.dinkelbach_tol))

    def predict(self, X, power_caps_w=None) -> np.ndarray:
        """EE-optimal transmit powers (watts) for users ``X`` at the fitted antenna."""
        return np.asarray(self._solve_at_antenna(X, power_caps_w).powers)

    def score(self, X, y=None, power_caps_w=None) -> float:
        """Energy efficiency (bits/J/Hz) achieved by users ``X`` at the fitted antenna."""
        return float(self._solve_at_antenna(X, power_caps_w).ee)
