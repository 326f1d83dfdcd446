"""Scenario generation and the sweep harness."""

import json
import math
import warnings

import numpy as np
import pytest

from holoest import estimation as est
from holoest.coupling import GeometryOverlapWarning
from holoest.experiments import (
    CouplingConfig,
    SweepConfig,
    default_cluster_scenario,
    gap_report,
    run_sweep,
)

pytestmark = pytest.mark.filterwarnings("ignore::holoest.coupling.GeometryOverlapWarning")


class TestDefaultClusterScenario:
    def test_powers_sum_to_one(self):
        scenario = default_cluster_scenario(7)
        assert sum(c.power for c in scenario.clusters) == pytest.approx(1.0, abs=1e-12)
        assert len(scenario.clusters) == 20

    def test_elevations_below_horizon(self):
        scenario = default_cluster_scenario(7)
        for c in scenario.clusters:
            assert -math.pi / 4 < c.elevation < 0.0
            assert abs(c.azimuth) < math.pi / 3
            assert c.sigma_phi == pytest.approx(math.radians(2.0))

    def test_deterministic_serialization(self):
        a = json.dumps(default_cluster_scenario(99).to_dict(), sort_keys=True)
        b = json.dumps(default_cluster_scenario(99).to_dict(), sort_keys=True)
        assert a == b

    def test_different_seeds_differ(self):
        a = default_cluster_scenario(1).to_dict()
        b = default_cluster_scenario(2).to_dict()
        assert a != b


class TestSweepConfigValidation:
    def test_rejects_unsorted_grid(self, geom_4x4):
        with pytest.raises(ValueError):
            SweepConfig(geometry=geom_4x4, snr_grid_db=(0.0, -10.0))

    def test_rejects_small_mc(self, geom_4x4):
        with pytest.raises(ValueError):
            SweepConfig(geometry=geom_4x4, mc_trials=10)

    def test_rejects_unknown_estimator(self, geom_4x4):
        with pytest.raises(ValueError):
            SweepConfig(geometry=geom_4x4, estimators=("zf",))

    def test_rejects_unknown_scenario_string(self, geom_4x4):
        with pytest.raises(ValueError):
            SweepConfig(geometry=geom_4x4, scenario="urban")


@pytest.fixture(scope="module")
def analytic_sweep(geom_4x4):
    config = SweepConfig(geometry=geom_4x4, mc_trials=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeometryOverlapWarning)
        return config, run_sweep(config)


class TestRunSweepAnalytic:
    def test_row_count_and_no_mc_fields(self, analytic_sweep):
        config, result = analytic_sweep
        assert len(result.rows) == len(config.estimators) * len(config.snr_grid_db)
        assert all(row.mc_mse is None and row.mc_stderr is None for row in result.rows)

    def test_ls_rows_follow_closed_form(self, analytic_sweep, geom_4x4):
        _, result = analytic_sweep
        for snr_db in result.snr_grid_db():
            rho = 10.0 ** (snr_db / 10.0)
            assert result.row(est.LS, snr_db).analytic_mse == pytest.approx(
                geom_4x4.size / rho, rel=1e-12
            )

    def test_true_mmse_nonincreasing_and_dominant(self, analytic_sweep):
        _, result = analytic_sweep
        grid = result.snr_grid_db()
        best = [result.row(est.MMSE_TRUE, s).analytic_mse for s in grid]
        assert all(b2 <= b1 * (1 + 1e-12) for b1, b2 in zip(best, best[1:]))
        for kind in result.estimators():
            for s, reference in zip(grid, best):
                assert reference <= result.row(kind, s).analytic_mse * (1 + 1e-12)

    def test_metadata_echoes_configuration(self, analytic_sweep, geom_4x4):
        _, result = analytic_sweep
        meta = result.metadata
        assert meta["scenario"] == "isotropic"
        assert meta["geometry"]["m_y"] == geom_4x4.m_y
        assert meta["rank_r_iso"] <= geom_4x4.size
        assert meta["trace_r_mc"] == pytest.approx(meta["trace_r_base"], rel=1e-10)


@pytest.fixture(scope="module")
def mc_result(geom_4x4):
    config = SweepConfig(
        geometry=geom_4x4,
        snr_grid_db=(-10.0, 0.0, 10.0, 20.0),
        mc_trials=4000,
        validation_mode=True,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeometryOverlapWarning)
        return run_sweep(config)


class TestRunSweepMonteCarlo:
    def test_mc_within_five_standard_errors(self, mc_result):
        for row in mc_result.rows:
            assert row.mc_mse is not None
            assert abs(row.mc_mse - row.analytic_mse) <= 5.0 * row.mc_stderr

    def test_reproducible_bitwise(self, geom_4x4, mc_result):
        config = SweepConfig(
            geometry=geom_4x4,
            snr_grid_db=(-10.0, 0.0, 10.0, 20.0),
            mc_trials=4000,
            validation_mode=True,
        )
        again = run_sweep(config)
        assert again.rows == mc_result.rows

    def test_seed_changes_mc_values(self, geom_4x4, mc_result):
        config = SweepConfig(
            geometry=geom_4x4,
            snr_grid_db=(-10.0, 0.0, 10.0, 20.0),
            mc_trials=4000,
            base_seed=1,
        )
        other = run_sweep(config)
        assert any(
            a.mc_mse != b.mc_mse for a, b in zip(other.rows, mc_result.rows)
        )
        assert all(
            a.analytic_mse == b.analytic_mse
            for a, b in zip(other.rows, mc_result.rows)
        )


class TestGapReport:
    def test_reference_gap_is_zero(self, analytic_sweep):
        _, result = analytic_sweep
        gaps = gap_report(result, est.MMSE_TRUE)
        assert np.allclose(gaps[est.MMSE_TRUE], 0.0)

    def test_all_gaps_nonnegative_vs_optimum(self, analytic_sweep):
        _, result = analytic_sweep
        gaps = gap_report(result, est.MMSE_TRUE)
        for kind, values in gaps.items():
            assert np.all(values >= -1e-9)

    def test_missing_reference_raises(self, analytic_sweep):
        _, result = analytic_sweep
        with pytest.raises(KeyError):
            gap_report(result, "nonexistent")


class TestClusterSweep:
    def test_small_cluster_sweep_orderings(self, geom_4x4):
        scenario = default_cluster_scenario(11)
        config = SweepConfig(
            geometry=geom_4x4,
            scenario=scenario,
            snr_grid_db=(0.0, 10.0, 20.0),
            mc_trials=0,
            coupling=CouplingConfig(),
        )
        result = run_sweep(config)
        assert result.metadata["scenario"] == "cluster"
        gaps = gap_report(result, est.MMSE_TRUE)
        assert np.all(gaps[est.MMSE_ISO] >= -1e-9)
        # coupling-aware prior can never beat the true one
        assert np.all(gaps[est.MMSE_COUPLING_AWARE_ISO] >= -1e-9)
