"""Schema readers and the aggregation kernel."""

import math

import pytest

from ggmplots import (
    SchemaError,
    aggregate_by_estimator_T,
    read_predictions,
    read_results,
)

RESULTS_HEADER = (
    "model_id,replicate,T,estimator,k,normalized_mse,frobenius_error,"
    "max_asymmetry,solver_residual,wall_time_sec,pd_flag,error"
)


def write_results_csv(path, rows):
    lines = ["# ggm-results-v1", RESULTS_HEADER]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def result_row(T, estimator, nmse, fe=0.1, err="", wall=0.0, rep=0):
    return [0, rep, T, estimator, "", nmse, fe, 0.0, 1e-8, wall, 1, err]


class TestReaders:
    def test_results_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results_csv(path, [result_row(100, "gml", 0.25)])
        recs = read_results(path)
        assert len(recs) == 1
        assert recs[0].T == 100
        assert recs[0].normalized_mse == 0.25
        assert recs[0].pd_flag is True

    def test_wrong_schema_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("# ggm-results-v2\n" + RESULTS_HEADER + "\n")
        with pytest.raises(SchemaError):
            read_results(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(RESULTS_HEADER + "\n")
        with pytest.raises(SchemaError):
            read_results(path)

    def test_predictions(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text(
            "# ggm-analysis-v1\n"
            "model_id,quantity,estimator,k,value\n"
            "0,asymptotic_tmse,rmml_k1,1,120.5\n"
            "0,asymptotic_tmse,gml,,88.25\n"
            "0,incoherence,,,0.4\n"
        )
        preds = read_predictions(path)
        assert preds == {"rmml_k1": 120.5, "gml": 88.25}

    def test_predictions_schema_mismatch(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("# ggm-results-v1\nmodel_id\n")
        with pytest.raises(SchemaError):
            read_predictions(path)


class TestAggregation:
    def test_ten_row_fixture_matches_recomputation_exactly(self, tmp_path):
        # the values a spreadsheet would see, in file order
        values = {
            ("gml", 100): [0.31, 0.27, 0.29],
            ("gml", 200): [0.16, 0.14],
            ("ave", 100): [0.52, 0.48, 0.55],
            ("ave", 200): [0.26],
        }
        rows = []
        for (est, T), vs in values.items():
            for rep, v in enumerate(vs):
                rows.append(result_row(T, est, v, rep=rep))
        # one error row on top of the nine value rows; it must be ignored
        rows.append(result_row(100, "gml", float("nan"), err="solver_error"))
        assert len(rows) == 10
        path = tmp_path / "r.csv"
        write_results_csv(path, rows)

        aggs = {
            (a.estimator, a.T): a
            for a in aggregate_by_estimator_T(
                read_results(path), lambda r: r.normalized_mse
            )
        }
        assert set(aggs) == set(values)
        for key, vs in values.items():
            # read back through the file so both sides see identical floats
            file_vs = [
                r.normalized_mse
                for r in read_results(path)
                if (r.estimator, r.T) == key and not r.error
            ]
            n = len(file_vs)
            mean = sum(file_vs) / n
            if n > 1:
                stderr = math.sqrt(
                    sum((v - mean) ** 2 for v in file_vs) / (n - 1)
                ) / math.sqrt(n)
            else:
                stderr = 0.0
            assert aggs[key].n == n
            assert aggs[key].mean == mean
            assert aggs[key].stderr == stderr

    def test_single_observation_has_zero_stderr(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results_csv(path, [result_row(100, "gml", 0.5)])
        (agg,) = aggregate_by_estimator_T(read_results(path), lambda r: r.normalized_mse)
        assert agg.n == 1
        assert agg.stderr == 0.0

    def test_all_rows_errored_gives_empty_selection(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results_csv(
            path, [result_row(50, "ave", float("nan"), err="singular_local_covariance")]
        )
        assert aggregate_by_estimator_T(read_results(path), lambda r: r.normalized_mse) == []

    def test_value_callable_selects_the_metric(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results_csv(path, [result_row(100, "gml", 0.5, fe=2.0)])
        (agg,) = aggregate_by_estimator_T(
            read_results(path), lambda r: r.T * r.frobenius_error**2
        )
        assert agg.mean == 400.0
