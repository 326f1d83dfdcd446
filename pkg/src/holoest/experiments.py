"""Scenario assembly and SNR sweeps comparing the estimator family.

A sweep builds the base spatial correlation (isotropic closed form or
clustered quadrature), applies the coupling model, and evaluates every
requested estimator at every SNR point, analytically and optionally by Monte
Carlo.  Trials draw from per-trial generator streams keyed by (base seed, SNR
index, trial index), so results do not depend on execution order or batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import estimation as est
from .correlation import (
    AngularCluster,
    ClusterScenario,
    CovarianceMatrix,
    cluster_matrix,
    iso_matrix,
)
from .coupling import coupling_model, effective_correlation
from .geometry import UpaGeometry
from .linalg import psd_sqrt

__all__ = [
    "DEFAULT_SNR_GRID_DB",
    "DEFAULT_BASE_SEED",
    "CouplingConfig",
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    "default_cluster_scenario",
    "run_sweep",
    "gap_report",
]

DEFAULT_SNR_GRID_DB = tuple(range(-10, 25, 2))
DEFAULT_BASE_SEED = 20240605

_BS_HEIGHT_M = 25.0
_USER_HEIGHT_M = 1.5
_MIN_SCATTER_DIST_M = 35.0
_MAX_SCATTER_DIST_M = 300.0
_DEFAULT_CLUSTER_COUNT = 20
_DEFAULT_SIGMA_DEG = 2.0

_MC_CHUNK = 2048


@dataclass(frozen=True)
class CouplingConfig:
    frequency: float = 3.0e9
    conductivity: float = 5.8e7
    use_full_impedance: bool = False


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs; identical configs give identical results."""

    geometry: UpaGeometry
    scenario: str | ClusterScenario = "isotropic"
    snr_grid_db: tuple[float, ...] = DEFAULT_SNR_GRID_DB
    estimators: tuple[str, ...] = est.ESTIMATOR_KINDS
    mc_trials: int = 10_000
    base_seed: int = DEFAULT_BASE_SEED
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    series_tol: float = 1e-12
    quad_tol: float = 1e-9
    validation_mode: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.scenario, str) and self.scenario != "isotropic":
            raise ValueError("scenario must be 'isotropic' or a ClusterScenario")
        if len(self.snr_grid_db) == 0:
            raise ValueError("SNR grid must be nonempty")
        if list(self.snr_grid_db) != sorted(self.snr_grid_db):
            raise ValueError("SNR grid must be sorted ascending")
        if self.mc_trials != 0 and self.mc_trials < 100:
            raise ValueError("Monte Carlo needs at least 100 trials (or 0 to skip)")
        for kind in self.estimators:
            if kind not in est.ESTIMATOR_KINDS:
                raise ValueError(f"unknown estimator kind {kind!r}")


@dataclass(frozen=True)
class SweepRow:
    estimator: str
    snr_db: float
    analytic_mse: float
    analytic_nmse_db: float
    mc_mse: float | None = None
    mc_stderr: float | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict

    def row(self, estimator: str, snr_db: float) -> SweepRow:
        for r in self.rows:
            if r.estimator == estimator and r.snr_db == snr_db:
                return r
        raise KeyError(f"no row for ({estimator}, {snr_db} dB)")

    def estimators(self) -> tuple[str, ...]:
        seen: list[str] = []
        for r in self.rows:
            if r.estimator not in seen:
                seen.append(r.estimator)
        return tuple(seen)

    def snr_grid_db(self) -> tuple[float, ...]:
        seen: list[float] = []
        for r in self.rows:
            if r.snr_db not in seen:
                seen.append(r.snr_db)
        return tuple(seen)


def default_cluster_scenario(seed: int) -> ClusterScenario:
    """Deterministic 20-cluster urban-style scenario.

    Powers are exponential draws normalized to unit sum; azimuths are uniform
    in (-60, 60) degrees; elevations point below the horizon toward scatterers
    at log-uniform horizontal distances from an elevated base station.
    """
    rng = np.random.default_rng(seed)
    powers = rng.exponential(1.0, _DEFAULT_CLUSTER_COUNT)
    azimuths = rng.uniform(-np.pi / 3.0, np.pi / 3.0, _DEFAULT_CLUSTER_COUNT)
    distances = np.exp(
        rng.uniform(
            math.log(_MIN_SCATTER_DIST_M),
            math.log(_MAX_SCATTER_DIST_M),
            _DEFAULT_CLUSTER_COUNT,
        )
    )
    elevations = -np.arctan((_BS_HEIGHT_M - _USER_HEIGHT_M) / distances)
    sigma = math.radians(_DEFAULT_SIGMA_DEG)
    clusters = [
        AngularCluster(
            power=float(p),
            azimuth=float(az),
            elevation=float(el),
            sigma_phi=sigma,
            sigma_theta=sigma,
        )
        for p, az, el in zip(powers, azimuths, elevations)
    ]
    return ClusterScenario.create(clusters)


def _trial_rng(base_seed: int, snr_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=base_seed, spawn_key=(snr_index, trial))
    )


def _mc_cell(
    filters: dict[str, np.ndarray],
    r_mc_sqrt: np.ndarray,
    rho: float,
    snr_index: int,
    trials: int,
    base_seed: int,
) -> dict[str, tuple[float, float]]:
    """Empirical squared-error mean and standard error per estimator."""
    m = r_mc_sqrt.shape[0]
    sums = {kind: 0.0 for kind in filters}
    sq_sums = {kind: 0.0 for kind in filters}
    sqrt_rho = math.sqrt(rho)
    for start in range(0, trials, _MC_CHUNK):
        count = min(_MC_CHUNK, trials - start)
        iid = np.empty((m, count), dtype=complex)
        noise = np.empty((m, count), dtype=complex)
        for j in range(count):
            rng = _trial_rng(base_seed, snr_index, start + j)
            iid[:, j] = est.complex_normal(rng, m)
            noise[:, j] = est.complex_normal(rng, m)
        h = r_mc_sqrt @ iid
        y = sqrt_rho * h + noise
        for kind, w in filters.items():
            err = h - w @ y
            sq = np.sum(np.abs(err) ** 2, axis=0)
            sums[kind] += float(np.sum(sq))
            sq_sums[kind] += float(np.sum(sq * sq))
    out = {}
    for kind in filters:
        mean = sums[kind] / trials
        var = max(sq_sums[kind] / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
        out[kind] = (mean, math.sqrt(var / trials))
    return out


def _build_filters(
    kinds,
    rho: float,
    r_mc: CovarianceMatrix,
    r_hat_aware: CovarianceMatrix,
    r_iso: CovarianceMatrix,
) -> dict[str, np.ndarray]:
    specs = {}
    for kind in kinds:
        if kind == est.LS:
            specs[kind] = est.ls_filter(rho, r_mc.size)
        elif kind == est.MMSE_TRUE:
            specs[kind] = est.mmse_filter(r_mc, rho, kind)
        elif kind == est.MMSE_COUPLING_AWARE_ISO:
            specs[kind] = est.mmse_filter(r_hat_aware, rho, kind)
        elif kind == est.MMSE_ISO:
            specs[kind] = est.mmse_filter(r_iso, rho, kind)
    return specs


def run_sweep(config: SweepConfig) -> SweepResult:
    """Run the analytic (and optionally Monte Carlo) MSE sweep."""
    geometry = config.geometry
    r_iso = iso_matrix(geometry, tol=config.series_tol)
    if isinstance(config.scenario, ClusterScenario):
        r_base = cluster_matrix(geometry, config.scenario)
        scenario_name = "cluster"
    else:
        r_base = r_iso
        scenario_name = "isotropic"
    model = coupling_model(
        geometry,
        frequency=config.coupling.frequency,
        conductivity=config.coupling.conductivity,
        use_full_impedance=config.coupling.use_full_impedance,
        r_iso=r_iso,
    )
    r_mc = effective_correlation(model, r_base)
    r_hat_aware = (
        r_mc if scenario_name == "isotropic" else effective_correlation(model, r_iso)
    )
    r_mc_sqrt = psd_sqrt(r_mc)
    trace_mc = r_mc.trace()

    rows: list[SweepRow] = []
    for kind in config.estimators:
        for snr_index, snr_db in enumerate(config.snr_grid_db):
            rho = 10.0 ** (snr_db / 10.0)
            spec = _build_filters([kind], rho, r_mc, r_hat_aware, r_iso)[kind]
            mse = est.analytic_mse(spec, r_mc)
            rows.append(
                SweepRow(
                    estimator=kind,
                    snr_db=float(snr_db),
                    analytic_mse=mse,
                    analytic_nmse_db=10.0 * math.log10(mse / trace_mc),
                )
            )

    if config.mc_trials > 0:
        mc_values: dict[tuple[str, float], tuple[float, float]] = {}
        for snr_index, snr_db in enumerate(config.snr_grid_db):
            rho = 10.0 ** (snr_db / 10.0)
            specs = _build_filters(
                config.estimators, rho, r_mc, r_hat_aware, r_iso
            )
            filters = {kind: spec.filter for kind, spec in specs.items()}
            cell = _mc_cell(
                filters, r_mc_sqrt, rho, snr_index, config.mc_trials, config.base_seed
            )
            for kind, stats in cell.items():
                mc_values[(kind, float(snr_db))] = stats
        rows = [
            replace(
                row,
                mc_mse=mc_values[(row.estimator, row.snr_db)][0],
                mc_stderr=mc_values[(row.estimator, row.snr_db)][1],
            )
            for row in rows
        ]
        if config.validation_mode:
            for row in rows:
                bound = 5.0 * max(row.mc_stderr, 1e-300)
                if abs(row.mc_mse - row.analytic_mse) > bound:
                    raise AssertionError(
                        f"Monte Carlo mean {row.mc_mse:.6e} deviates from "
                        f"analytic {row.analytic_mse:.6e} by more than 5 SE "
                        f"({row.estimator} at {row.snr_db} dB)"
                    )

    metadata = {
        "scenario": scenario_name,
        "trace_r_mc": trace_mc,
        "trace_r_base": r_base.trace(),
        "rank_r_iso": r_iso.numerical_rank(),
        "rank_r_base": r_base.numerical_rank(),
        "rank_r_mc": r_mc.numerical_rank(),
        "base_seed": config.base_seed,
        "mc_trials": config.mc_trials,
        "snr_grid_db": list(config.snr_grid_db),
        "estimators": list(config.estimators),
        "geometry": {
            "m_y": geometry.m_y,
            "m_z": geometry.m_z,
            "d_y": geometry.d_y,
            "d_z": geometry.d_z,
            "wavelength": geometry.wavelength,
            "dipole_length": geometry.dipole_length,
            "dipole_radius": geometry.dipole_radius,
        },
        "coupling": {
            "frequency": config.coupling.frequency,
            "conductivity": config.coupling.conductivity,
            "use_full_impedance": config.coupling.use_full_impedance,
            "r_dissipation": model.r_dissipation,
        },
    }
    return SweepResult(rows=rows, metadata=metadata)


def gap_report(result: SweepResult, reference: str) -> dict[str, np.ndarray]:
    """Per-estimator dB gaps relative to a reference estimator's analytic MSE.

    Raises KeyError when the reference is absent from the result.
    """
    estimators = result.estimators()
    if reference not in estimators:
        raise KeyError(f"reference estimator {reference!r} not present in result")
    grid = result.snr_grid_db()
    ref = np.array([result.row(reference, s).analytic_mse for s in grid])
    gaps = {}
    for kind in estimators:
        mse = np.array([result.row(kind, s).analytic_mse for s in grid])
        gaps[kind] = 10.0 * np.log10(mse / ref)
    return gaps
