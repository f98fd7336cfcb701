"""Experiment harness: configs, reproducibility, CSV persistence, ingestion."""

import json

import numpy as np
import pytest

from ggmest import (
    ExperimentConfig,
    ResultRow,
    ingest_timeseries,
    knn_model,
    read_results,
    run_experiment,
    sample_covariance,
    sample_gaussian,
    tilde_edge_set,
    write_results,
)
from ggmest.harness import RESULTS_SCHEMA, _estimator_hops, run_single_estimate


def _tiny_config(**overrides):
    base = dict(
        family="knn",
        family_params={"p": 10, "K": 2},
        n_models=1,
        n_reps_per_model=1,
        T_grid=[100],
        estimators=["gml"],
        master_seed=7,
    )
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


class TestEstimatorTokens:
    def test_parsing(self):
        assert _estimator_hops("gml") is None
        assert _estimator_hops("loc") == 1
        assert _estimator_hops("ave") == 1
        assert _estimator_hops("rmml_k1") == 1
        assert _estimator_hops("rmml_k3") == 3

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            _estimator_hops("rmml")
        with pytest.raises(ValueError):
            _estimator_hops("rmml_k0")
        with pytest.raises(ValueError):
            _estimator_hops("glasso")


class TestExperimentConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            _tiny_config(typo_key=1)

    def test_unknown_family_param_rejected(self):
        with pytest.raises(ValueError):
            _tiny_config(family_params={"p": 10, "K": 2, "gamma": 1})

    def test_missing_required_key_rejected(self):
        cfg = dict(family="knn", family_params={"p": 5, "K": 1})
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(cfg)

    def test_descending_T_grid_rejected(self):
        with pytest.raises(ValueError):
            _tiny_config(T_grid=[200, 100])

    def test_counts_must_be_positive(self):
        with pytest.raises(ValueError):
            _tiny_config(n_models=0)
        with pytest.raises(ValueError):
            _tiny_config(n_reps_per_model=0)

    def test_duplicate_estimators_rejected(self):
        with pytest.raises(ValueError):
            _tiny_config(estimators=["gml", "gml"])

    def test_from_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({
            "family": "lattice",
            "family_params": {"rows": 3, "cols": 3},
            "n_models": 2,
            "n_reps_per_model": 1,
            "T_grid": [50, 100],
            "estimators": ["ave"],
            "master_seed": 1,
        }))
        cfg = ExperimentConfig.from_json(path)
        assert cfg.family == "lattice"
        assert cfg.n_models == 2


class TestRunExperiment:
    def test_single_cell_single_row(self, tmp_path):
        cfg = _tiny_config(output_path=str(tmp_path / "out.csv"))
        rows = run_experiment(cfg)
        assert len(rows) == 1
        assert rows[0].estimator == "gml"
        assert rows[0].normalized_mse >= 0

    def test_every_cell_exactly_once(self):
        cfg = _tiny_config(
            n_models=2, n_reps_per_model=2, T_grid=[50, 100], estimators=["gml", "ave"]
        )
        rows = run_experiment(cfg)
        keys = [(r.model_id, r.replicate, r.T, r.estimator) for r in rows]
        assert len(keys) == len(set(keys)) == 2 * 2 * 2 * 2

    def test_worker_count_does_not_change_output(self, tmp_path):
        out1 = tmp_path / "w1.csv"
        out2 = tmp_path / "w2.csv"
        cfg1 = _tiny_config(
            n_models=2, n_reps_per_model=2, T_grid=[50, 100],
            estimators=["gml", "ave"], output_path=str(out1),
        )
        cfg2 = _tiny_config(
            n_models=2, n_reps_per_model=2, T_grid=[50, 100],
            estimators=["gml", "ave"], output_path=str(out2), workers=2,
        )
        run_experiment(cfg1)
        run_experiment(cfg2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_error_rows_recorded_not_fatal(self):
        # T=2 makes every local covariance block singular for one-hop work
        cfg = _tiny_config(T_grid=[2], estimators=["ave", "gml"])
        rows = run_experiment(cfg)
        assert len(rows) == 2
        ave_row = next(r for r in rows if r.estimator == "ave")
        assert ave_row.error == "singular_local_covariance"
        assert np.isnan(ave_row.normalized_mse)

    def test_perturbation_measured_against_nominal(self):
        base = _tiny_config(T_grid=[4000], estimators=["gml"], master_seed=3)
        pert = _tiny_config(
            T_grid=[4000], estimators=["gml"], master_seed=3, perturbation=0.3
        )
        clean = run_experiment(base)[0]
        biased = run_experiment(pert)[0]
        # sampling from the perturbed model, scoring against the nominal
        # truth: the bias should dominate the clean sampling error
        assert biased.normalized_mse > clean.normalized_mse

    def test_from_file_family(self, tmp_path):
        from ggmest import write_model

        model = knn_model(8, 2, seed=11)
        write_model(model, tmp_path / "m")
        cfg = _tiny_config(
            family="from_file", family_params={"prefix": str(tmp_path / "m")}
        )
        rows = run_experiment(cfg)
        assert len(rows) == 1
        assert rows[0].error == ""


class TestResultsIo:
    def _rows(self):
        return [
            ResultRow(
                model_id=0, replicate=1, T=100, estimator="gml", k=None,
                normalized_mse=0.125, frobenius_error=0.5, max_asymmetry=0.0,
                solver_residual=1e-8, wall_time_sec=0.25, pd_flag=True, error="",
            ),
            ResultRow(
                model_id=0, replicate=1, T=100, estimator="rmml_k2", k=2,
                normalized_mse=float("nan"), frobenius_error=float("nan"),
                max_asymmetry=float("nan"), solver_residual=float("nan"),
                wall_time_sec=0.0, pd_flag=False, error="singular_local_covariance",
            ),
        ]

    def test_schema_header(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results(self._rows(), path)
        first = path.read_text().splitlines()[0]
        assert first == f"# {RESULTS_SCHEMA}"

    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results(self._rows(), path)
        back = read_results(path)
        assert len(back) == 2
        assert back[0].estimator == "gml"
        assert back[0].k is None
        assert back[0].normalized_mse == 0.125
        assert back[1].k == 2
        assert np.isnan(back[1].normalized_mse)
        assert back[1].error == "singular_local_covariance"

    def test_timings_zeroed_by_default(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results(self._rows(), path)
        assert read_results(path)[0].wall_time_sec == 0.0

    def test_timings_kept_when_requested(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results(self._rows(), path, record_timings=True)
        assert read_results(path)[0].wall_time_sec == 0.25

    def test_rejects_wrong_schema(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# other-schema\nmodel_id\n0\n")
        with pytest.raises(ValueError):
            read_results(path)


class TestRunSingleEstimate:
    def test_metrics_consistent(self):
        model = knn_model(10, 2, seed=20)
        sc = sample_covariance(sample_gaussian(model, 400, seed=21))
        truth = model.precision.to_dense()
        row = run_single_estimate("gml", sc, model.graph, truth)
        assert row.estimator == "gml"
        assert row.k is None
        assert row.T == 400
        assert row.pd_flag
        assert row.frobenius_error == pytest.approx(
            np.sqrt(row.normalized_mse * np.sum(truth**2))
        )

    def test_loc_stays_asymmetric(self):
        model = knn_model(10, 2, seed=22)
        sc = sample_covariance(sample_gaussian(model, 60, seed=23))
        truth = model.precision.to_dense()
        row = run_single_estimate("loc", sc, model.graph, truth)
        assert row.max_asymmetry > 0


def _write_csv(path, rows, header=None):
    lines = []
    if header:
        lines.append(header)
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


class TestIngestTimeseries:
    def _series(self, rng, T=400, p=4):
        model = knn_model(p, 1, seed=5)
        return sample_gaussian(model, T, seed=int(rng.integers(1000))), model

    def test_window_exceeds_length(self, tmp_path):
        path = tmp_path / "ts.csv"
        _write_csv(path, np.zeros((5, 3)).tolist())
        with pytest.raises(ValueError, match="window exceeds series length"):
            ingest_timeseries(path, window=10, target_sparsity=0.5)

    def test_all_missing_column(self, tmp_path):
        rows = [[1.0, ""], [2.0, ""], [0.5, ""], [1.5, ""]]
        path = tmp_path / "ts.csv"
        _write_csv(path, rows)
        with pytest.raises(ValueError, match="no observations"):
            ingest_timeseries(path, window=2, target_sparsity=0.5)

    def test_constant_series_singular(self, tmp_path):
        path = tmp_path / "ts.csv"
        _write_csv(path, [[1.0, 2.0]] * 50)
        with pytest.raises(ValueError, match="singular"):
            ingest_timeseries(path, window=10, target_sparsity=0.5)

    def test_sparsity_count_exact(self, tmp_path):
        rng = np.random.default_rng(6)
        X, _ = self._series(rng, T=500, p=6)
        path = tmp_path / "ts.csv"
        _write_csv(path, X.tolist())
        target = 0.7
        model = ingest_timeseries(path, window=10, target_sparsity=target)
        off_total = 6 * 5 // 2
        expected_zeros = int(np.ceil(target * off_total))
        assert model.graph.n_edges == off_total - expected_zeros

    def test_missing_cells_interpolated(self, tmp_path):
        rng = np.random.default_rng(7)
        X, _ = self._series(rng, T=300, p=4)
        rows = X.tolist()
        rows[50][1] = ""
        rows[51][1] = ""
        rows[0][2] = ""  # leading gap takes the nearest valid value
        rows[-1][3] = ""  # trailing gap likewise
        path = tmp_path / "ts.csv"
        _write_csv(path, rows)
        model = ingest_timeseries(path, window=10, target_sparsity=0.5)
        assert model.p == 4

    def test_header_line_tolerated(self, tmp_path):
        rng = np.random.default_rng(8)
        X, _ = self._series(rng, T=200, p=4)
        path = tmp_path / "ts.csv"
        _write_csv(path, X.tolist(), header="s0,s1,s2,s3")
        model = ingest_timeseries(path, window=10, target_sparsity=0.5)
        assert model.p == 4

    def test_refit_satisfies_stationarity(self, tmp_path):
        rng = np.random.default_rng(9)
        X, _ = self._series(rng, T=800, p=5)
        path = tmp_path / "ts.csv"
        _write_csv(path, X.tolist())
        model = ingest_timeseries(path, window=10, target_sparsity=0.6)
        J = model.precision.to_dense()
        assert np.linalg.eigvalsh(J).min() > 0
        # the fitted precision matches the detrended covariance on support
        sup = tilde_edge_set(model.graph)
        for i in range(5):
            for j in range(5):
                if (i, j) not in sup:
                    assert J[i, j] == 0.0
