"""Monte Carlo sweeps over random user drops.

Trial ``t`` of a run draws its users, random initial position and PSO
seed from streams keyed by ``(master_seed, t)``. Every scheme and every
sweep point therefore sees the same drop (common random numbers), and
results do not depend on how trials are spread over workers.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ao import ALL_SCHEMES, AoConfig, SchemeKind, solve_scheme
from .model import Scenario, UserSet, ValidationError, dbm_to_watts

logger = logging.getLogger(__name__)

SWEEP_PARAMS = ("max_power_dbm", "fixed_power_dbm", "area_x_m")
CSV_HEADER = ("sweep_param", "sweep_value", "scheme", "ee_mean", "ee_std", "trials", "flagged")
FLAG_THRESHOLD = 1e-3

PRESETS = {
    "fig2": ("max_power_dbm", (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)),
    "fig3": ("fixed_power_dbm", (0.0, 5.0, 10.0, 15.0, 20.0)),
    "fig4": ("area_x_m", (40.0, 80.0, 120.0, 160.0)),
}


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    sweep_param: str = "max_power_dbm"
    sweep_values: tuple = (10.0,)
    trials: int = 1000
    base_scenario: Scenario = field(default_factory=Scenario)
    n_users: int = 5
    max_power_dbm: float = 10.0
    schemes: tuple = ALL_SCHEMES
    master_seed: int = 0
    ao: AoConfig = field(default_factory=AoConfig)
    # L follows D_x unless the config pinned it explicitly
    couple_length_to_area: bool = True

    def __post_init__(self):
        if self.sweep_param not in SWEEP_PARAMS:
            raise ValidationError(f"sweep_param must be one of {SWEEP_PARAMS}, got {self.sweep_param!r}")
        vals = tuple(float(v) for v in self.sweep_values)
        if not vals:
            raise ValidationError("sweep_values must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError("sweep_values must be strictly increasing")
        if self.sweep_param == "area_x_m" and min(vals) <= 0:
            raise ValidationError("area_x_m sweep values must be positive")
        object.__setattr__(self, "sweep_values", vals)
        object.__setattr__(self, "schemes", tuple(SchemeKind(s) for s in self.schemes))
        if not self.schemes:
            raise ValidationError("at least one scheme is required")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.n_users < 1:
            raise ValidationError("n_users must be >= 1")
        if self.master_seed < 0:
            raise ValidationError("master_seed must be unsigned")

    def with_preset(self, name: str) -> "ExperimentSpec":
        param, values = PRESETS[name]
        return dataclasses.replace(self, sweep_param=param, sweep_values=values)

    def point(self, value: float) -> tuple[Scenario, float]:
        """Scenario and per-user cap (watts) at one sweep value."""
        sc = self.base_scenario
        cap_dbm = self.max_power_dbm
        if self.sweep_param == "max_power_dbm":
            cap_dbm = value
        elif self.sweep_param == "fixed_power_dbm":
            sc = sc.replace(fixed_power_w=dbm_to_watts(value))
        else:
            sc = sc.replace(area_x_m=value, waveguide_length_m=value)
        if self.couple_length_to_area:
            sc = sc.replace(waveguide_length_m=sc.area_x_m)
        return sc, dbm_to_watts(cap_dbm)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schemes"] = [s.value for s in self.schemes]
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def trial_streams(master_seed: int, trial: int):
    """(user rng, random-init seed, PSO seed) for one trial."""
    def key(i):
        return np.random.SeedSequence(master_seed, spawn_key=(trial, i))

    user_rng = np.random.default_rng(key(0))
    init_seed = int(key(1).generate_state(1)[0])
    pso_seed = int(key(2).generate_state(1)[0])
    return user_rng, init_seed, pso_seed


def generate_users(scenario: Scenario, n: int, rng, caps_w=None) -> UserSet:
    """Uniform drop over [0, D_x] x [-D_y/2, D_y/2].

    Draws are scaled from one unit-square sample so a fixed stream gives
    the same relative layout for any area size.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if caps_w is None:
        caps_w = dbm_to_watts(10.0)
    u = rng.random((n, 2))
    pos = np.column_stack((u[:, 0] * scenario.area_x_m, (u[:, 1] - 0.5) * scenario.area_y_m))
    return UserSet(pos, np.broadcast_to(np.asarray(caps_w, dtype=float), (n,)))


def _run_trial(args):
    spec, s_idx, trial = args
    scenario, cap = spec.point(spec.sweep_values[s_idx])
    user_rng, init_seed, pso_seed = trial_streams(spec.master_seed, trial)
    users = generate_users(scenario, spec.n_users, user_rng, cap)
    cfg = dataclasses.replace(spec.ao, seed=init_seed, pso=dataclasses.replace(spec.ao.pso, rng_seed=pso_seed))
    ee, flagged = [], []
    for kind in spec.schemes:
        sol = solve_scheme(kind, scenario, users, cfg)
        ee.append(sol.ee_bits_per_joule)
        flagged.append(sol.flagged)
    return ee, flagged


@dataclass(frozen=True)
class SchemeStats:
    sweep_value: float
    scheme: str
    ee_mean: float
    ee_std: float
    trials: int
    flagged: int


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Per-trial EE values, shape (sweep points, trials, schemes), plus provenance."""

    sweep_param: str
    sweep_values: tuple
    schemes: tuple
    ee: np.ndarray
    flagged: np.ndarray
    master_seed: int
    spec_hash: str

    @property
    def flag_rate(self) -> float:
        return float(self.flagged.mean()) if self.flagged.size else 0.0

    @property
    def failed(self) -> bool:
        """True when any (point, scheme) cell has too many flagged trials to drop silently."""
        n = self.ee.shape[1]
        return bool(np.any(self.flagged.sum(axis=1) >= FLAG_THRESHOLD * n))

    def rows(self) -> list[SchemeStats]:
        out = []
        for i, v in enumerate(self.sweep_values):
            for j, s in enumerate(self.schemes):
                vals = self.ee[i, :, j][~self.flagged[i, :, j]]
                std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
                mean = float(np.mean(vals)) if len(vals) else float("nan")
                out.append(SchemeStats(v, s, mean, std, len(vals), int(self.flagged[i, :, j].sum())))
        return out

    def mean(self, scheme) -> np.ndarray:
        """Mean EE across the sweep for one scheme."""
        j = list(self.schemes).index(str(SchemeKind(scheme)))
        return np.array([np.mean(self.ee[i, :, j][~self.flagged[i, :, j]]) for i in range(len(self.sweep_values))])


def run_experiment(spec: ExperimentSpec, workers: int = 1, progress=None) -> SweepResult:
    """Solve every scheme on every (sweep point, trial) drop and keep all per-trial EEs."""
    n_pts, n_tr, n_sc = len(spec.sweep_values), spec.trials, len(spec.schemes)
    ee = np.empty((n_pts, n_tr, n_sc))
    flagged = np.zeros((n_pts, n_tr, n_sc), dtype=bool)

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for i, value in enumerate(spec.sweep_values):
            tasks = [(spec, i, t) for t in range(n_tr)]
            results = pool.map(_run_trial, tasks, chunksize=max(1, n_tr // (4 * workers))) if pool else map(_run_trial, tasks)
            for t, (e, f) in enumerate(results):
                ee[i, t] = e
                flagged[i, t] = f
            if progress is not None:
                progress(i, value)
    finally:
        if pool is not None:
            pool.shutdown()

    result = SweepResult(
        sweep_param=spec.sweep_param,
        sweep_values=spec.sweep_values,
        schemes=tuple(s.value for s in spec.schemes),
        ee=ee,
        flagged=flagged,
        master_seed=spec.master_seed,
        spec_hash=spec.digest(),
    )
    if result.failed:
        logger.error("flagged solves exceed %.1f%% of trials in at least one cell", 100 * FLAG_THRESHOLD)
    elif flagged.any():
        logger.warning("%d flagged solves excluded from the means", int(flagged.sum()))
    return result


def _fmt(x: float) -> str:
    return format(float(x), ".17e")


def emit_results(result: SweepResult, out_dir) -> tuple[Path, Path]:
    """Write ``results.csv`` and ``manifest.txt``; byte-stable for equal inputs."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "results.csv"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in result.rows():
                w.writerow([result.sweep_param, _fmt(r.sweep_value), r.scheme, _fmt(r.ee_mean), _fmt(r.ee_std), r.trials, r.flagged])
        manifest = out / "manifest.txt"
        with open(manifest, "w", newline="") as fh:
            fh.write(f"spec_hash = {result.spec_hash}\n")
            fh.write(f"master_seed = {result.master_seed}\n")
            fh.write(f"version = {__version__}\n")
            fh.write(f"sweep_param = {result.sweep_param}\n")
            fh.write(f"trials_per_point = {result.ee.shape[1]}\n")
            fh.write(f"flagged_total = {int(result.flagged.sum())}\n")
    except OSError as exc:
        raise ExperimentError(f"cannot write results to {out}: {exc}") from exc
    return csv_path, manifest


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("sweep_value", "ee_mean", "ee_std"):
            r[k] = float(r[k])
        for k in ("trials", "flagged"):
            r[k] = int(r[k])
    return rows


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
