import csv
import json
import math

import numpy as np
import pytest

from covspectra import (
    ConfigError,
    NoGapError,
    SpectralMeasure,
    emit_density_profile,
    parse_config,
    run_edge_experiment,
    run_experiment,
    run_gap_experiment,
    run_lsd_experiment,
    run_qf_experiment,
)
from covspectra.experiments import density_profile, filter_spec_at, FilterConfig


def base_config(**overrides):
    cfg = {
        "kind": "lsd",
        "filter": {"kind": "identity"},
        "entry": {"kind": "gaussian_real"},
        "sizes": [[60, 120], [120, 240]],
        "trials": 4,
        "seed": 42,
    }
    cfg.update(overrides)
    return cfg


class TestConfigValidation:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="extra"):
            parse_config(base_config(typo_field=1))

    def test_nested_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(base_config(filter={"kind": "identity", "oops": 2}))

    def test_zero_trials_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(base_config(trials=0))

    def test_ratio_drift_rejected(self):
        with pytest.raises(ConfigError, match="drifts"):
            parse_config(base_config(sizes=[[60, 120], [120, 160]]))

    def test_interval_only_for_gap(self):
        with pytest.raises(ConfigError, match="interval"):
            parse_config(base_config(interval=[1.0, 2.0]))

    def test_qf_needs_three_sizes(self):
        with pytest.raises(ConfigError, match="3 sizes"):
            parse_config(base_config(kind="qf", sizes=[[50, 50], [100, 100]]))

    def test_edge_requires_identity_population(self):
        with pytest.raises(ConfigError, match="identity"):
            parse_config(
                base_config(kind="edge", filter={"kind": "toeplitz_filter", "coefficients": [1.0, 0.5]})
            )

    def test_sigma_atom_fractions_validated(self):
        with pytest.raises(ConfigError):
            parse_config(base_config(filter={"kind": "sigma_atoms", "atoms": [[1.0, 0.6], [4.0, 0.6]]}))

    def test_kind_mismatch_at_run(self):
        cfg = parse_config(base_config())
        with pytest.raises(ConfigError):
            run_gap_experiment(cfg)


class TestFilterSpecAt:
    def test_sigma_atoms_apportionment(self):
        fc = FilterConfig(kind="sigma_atoms", atoms=[(1.0, 0.5), (10.0, 0.5)])
        spec = filter_spec_at(fc, 250)
        diag = np.diag(spec.matrix)
        assert np.count_nonzero(diag == 1.0) == 125
        assert np.count_nonzero(diag == math.sqrt(10.0)) == 125

    def test_sigma_atoms_odd_p(self):
        fc = FilterConfig(kind="sigma_atoms", atoms=[(1.0, 0.5), (10.0, 0.5)])
        spec = filter_spec_at(fc, 5)
        assert np.diag(spec.matrix).size == 5

    def test_explicit_matrix_size_guard(self):
        fc = FilterConfig(kind="explicit_sigma_sqrt", matrix=[[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ConfigError):
            filter_spec_at(fc, 3)


class TestLsdExperiment:
    def test_report_shape_and_determinism(self, tmp_path):
        cfg = parse_config(base_config())
        report = run_lsd_experiment(cfg, workers=2)
        assert len(report.records) == cfg.trials * len(cfg.sizes)
        assert set(r.statistic for r in report.records) == {"ks_distance"}
        again = run_lsd_experiment(cfg, workers=1)
        assert report.records == again.records

        p1, s1 = report.write(tmp_path / "a")
        p2, s2 = again.write(tmp_path / "b")
        assert p1.read_bytes() == p2.read_bytes()
        assert s1.read_bytes() == s2.read_bytes()

    def test_summary_recomputable_from_records(self):
        cfg = parse_config(base_config())
        report = run_lsd_experiment(cfg)
        for (p, n), stored in zip(report.summary["sizes"], report.summary["median_ks"]):
            vals = [r.value for r in report.records if r.p == p and r.n == n]
            assert float(np.median(vals)) == stored

    def test_paired_seeds_across_sizes(self):
        cfg = parse_config(base_config())
        report = run_lsd_experiment(cfg)
        small = {r.trial: r.seed for r in report.records if r.p == 60}
        large = {r.trial: r.seed for r in report.records if r.p == 120}
        assert small == large


class TestGapExperiment:
    def test_negative_control_counts_stay_positive(self):
        cfg = parse_config(
            base_config(
                kind="gap",
                sizes=[[100, 400]],
                trials=3,
                interval=[1.0, 1.5],
            )
        )
        report = run_gap_experiment(cfg)
        assert not report.passed
        assert not report.summary["interval_outside_support"]
        assert all(r.value > 0 for r in report.records)

    def test_clean_gap_passes(self):
        cfg = parse_config(
            base_config(
                kind="gap",
                filter={"kind": "sigma_atoms", "atoms": [[1.0, 0.5], [10.0, 0.5]]},
                entry={"kind": "rademacher"},
                sizes=[[100, 2000]],
                trials=3,
            )
        )
        report = run_gap_experiment(cfg)
        assert report.passed
        assert report.summary["interval_outside_support"]
        a, b = report.summary["interval"]
        assert 1.3 < a < b < 7.2

    def test_interval_beyond_edge_stays_empty(self):
        # [2.5, 3.0] sits past the right edge 2.25 at this ratio
        cfg = parse_config(
            base_config(
                kind="gap",
                sizes=[[400, 1600]],
                trials=50,
                interval=[2.5, 3.0],
            )
        )
        report = run_gap_experiment(cfg)
        assert report.passed
        assert report.summary["interval_outside_support"]
        assert all(r.value == 0 for r in report.records)

    def test_no_gap_raises(self):
        cfg = parse_config(base_config(kind="gap", sizes=[[60, 120]], trials=1))
        with pytest.raises(NoGapError):
            run_gap_experiment(cfg)


class TestEdgeExperiment:
    def test_small_sweep_structure(self):
        cfg = parse_config(
            base_config(kind="edge", sizes=[[80, 160]], trials=6, edge_tolerance=0.35)
        )
        report = run_edge_experiment(cfg)
        target = (1 + math.sqrt(0.5)) ** 2
        assert abs(report.summary["target_edge"][0] - target) < 1e-9
        assert report.passed
        assert len(report.records) == 6

    def test_scaled_identity_target(self):
        cfg = parse_config(
            base_config(
                kind="edge",
                filter={"kind": "scaled_identity", "scale": 2.0},
                sizes=[[80, 160]],
                trials=4,
                edge_tolerance=1.5,
            )
        )
        report = run_edge_experiment(cfg)
        assert abs(report.summary["target_edge"][0] - 4.0 * (1 + math.sqrt(0.5)) ** 2) < 1e-8


class TestQfExperiment:
    def test_gaussian_control(self):
        cfg = parse_config(
            base_config(
                kind="qf",
                sizes=[[100, 100], [200, 200], [400, 400]],
                trials=4000,
            )
        )
        report = run_qf_experiment(cfg)
        assert report.summary["control"]
        assert report.passed
        assert 0.85 <= report.summary["slope"] <= 1.15
        for ratio in report.summary["variance_over_2n"]:
            assert abs(ratio - 1.0) <= 0.10

    def test_sigma_weighted_case_runs(self):
        cfg = parse_config(
            base_config(
                kind="qf",
                filter={"kind": "toeplitz_filter", "coefficients": [1.0, 0.5]},
                entry={"kind": "rademacher"},
                qf_matrix="sigma",
                sizes=[[50, 50], [100, 100], [200, 200]],
                trials=1000,
            )
        )
        report = run_qf_experiment(cfg)
        assert not report.summary["control"]
        assert report.summary["slope"] <= 1.15


class TestRunDispatch:
    def test_dispatch_matches_kind(self):
        cfg = parse_config(base_config(trials=2, sizes=[[40, 80]]))
        report = run_experiment(cfg)
        assert report.summary["experiment"] == "lsd"


class TestDensityProfile:
    def test_positive_exactly_on_support(self):
        xs, dens, support = density_profile(0.25, SpectralMeasure.point_mass(1.0), grid_points=512)
        a, b = support.intervals[0]
        res = xs[1] - xs[0]
        inside = (xs > a + res) & (xs < b - res)
        outside = (xs < a - res) | (xs > b + res)
        assert np.all(dens[inside] > 1e-3)
        # the fixed evaluation height leaves an O(1e-5) halo just outside
        assert np.all(dens[outside] < 5e-5)

    def test_profile_integral_plus_atom_is_one(self):
        for c in (0.25, 2.0):
            xs, dens, _ = density_profile(c, SpectralMeasure.point_mass(1.0), grid_points=512)
            mass = np.trapezoid(dens, xs) + max(0.0, 1.0 - 1.0 / c)
            assert abs(mass - 1.0) < 1e-3

    def test_emit_writes_files(self, tmp_path):
        out, sup = emit_density_profile(
            0.25, SpectralMeasure.point_mass(1.0), tmp_path / "density.txt"
        )
        rows = [line.split() for line in out.read_text().splitlines()]
        assert len(rows) == 512 and len(rows[0]) == 2
        endpoints = [tuple(map(float, line.split())) for line in sup.read_text().splitlines()]
        assert len(endpoints) == 1
        assert abs(endpoints[0][0] - 0.25) < 1e-8 and abs(endpoints[0][1] - 2.25) < 1e-8

    def test_malformed_measure_rejected(self):
        with pytest.raises(ValueError):
            SpectralMeasure([])


class TestReportFiles:
    def test_csv_round_trip(self, tmp_path):
        cfg = parse_config(base_config(trials=3, sizes=[[40, 80]]))
        report = run_lsd_experiment(cfg)
        records_path, summary_path = report.write(tmp_path)
        with records_path.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        for row, rec in zip(rows, report.records):
            assert float(row["value"]) == rec.value
            assert int(row["seed"]) == rec.seed
        sidecar = json.loads(summary_path.read_text())
        assert sidecar["summary"] == report.summary
