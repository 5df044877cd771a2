import io
import json
import math

import numpy as np
import pytest
from scipy import stats

from pyHybridAct import (
    ContractViolation,
    DataFormatError,
    ExperimentSpec,
    KSweepResult,
    NumericError,
    RunResult,
    StudyTask,
    band_for,
    confidence_half_width,
    load_task_data,
    paired_t_test,
    parse_activation,
    rank_functions,
    rank_table_from_ranks,
    read_report,
    run_convergence_study,
    run_gradient_flow_probe,
    run_k_sweep,
    run_task,
    write_gradient_report,
    write_report,
)
from pyHybridAct import experiments

FAST = {"max_epochs": 3, "patience": 2}


def _spec(activations=("s4:k=10", "relu"), seeds=(1, 2), **kw):
    return ExperimentSpec(
        StudyTask.BINARY,
        [parse_activation(a) for a in activations],
        hidden_layers=(4,),
        seeds=seeds,
        train_overrides=dict(FAST),
        **kw,
    )


def _result(activation, task, metrics, metric_name="accuracy", k=None):
    n = len(metrics)
    return RunResult("task", task, activation, "", k, metric_name, list(range(1, n + 1)),
                     list(metrics), [3] * n, [0.25] * n)


class TestStatistics:
    def test_confidence_half_width(self):
        assert confidence_half_width([0.9, 0.95, 1.0]) == pytest.approx(0.124207, abs=1e-6)

    def test_confidence_needs_two_values(self):
        assert math.isnan(confidence_half_width([0.9]))
        assert math.isnan(confidence_half_width([]))

    def test_identical_lists_are_degenerate(self):
        result = paired_t_test([0.9, 0.8, 0.7], [0.9, 0.8, 0.7])
        assert result.degenerate and not result.significant
        assert math.isnan(result.t) and math.isnan(result.p)

    def test_constant_offset_is_degenerate(self):
        assert paired_t_test([2.0, 3.0, 4.0], [1.0, 2.0, 3.0]).degenerate
        # Differences are 0.06 up to rounding only
        assert paired_t_test([0.96, 0.97, 0.95], [0.90, 0.91, 0.89]).degenerate

    def test_textbook_example(self):
        a, b = [1.0, 2.0, 3.0, 4.0], [0.4, 1.1, 2.8, 3.0]
        result = paired_t_test(a, b)
        reference = stats.ttest_rel(a, b)
        assert result.t == pytest.approx(3.7563, abs=1e-4)
        assert result.t == pytest.approx(reference.statistic, rel=1e-12)
        assert result.p == pytest.approx(reference.pvalue, rel=1e-9)
        assert result.p == pytest.approx(0.033, abs=1e-3)
        assert result.significant and not result.degenerate

    def test_paired_lists_must_match(self):
        with pytest.raises(ContractViolation):
            paired_t_test([1.0, 2.0], [1.0])
        with pytest.raises(ContractViolation):
            paired_t_test([1.0], [2.0])


class TestRanking:
    @pytest.mark.parametrize(
        "average,band",
        [(1.0, "Excellent"), (3.3, "Excellent"), (4.0, "Good"), (5.0, "Moderate"),
         (6.0, "Limited"), (6.5, "Avoid"), (9.0, "Avoid")],
    )
    def test_bands(self, average, band):
        assert band_for(average) == band

    def test_last_everywhere_is_avoid(self):
        table = rank_table_from_ranks({
            "s3": {"binary": 9, "multiclass": 9, "regression": 9},
            "s4": {"binary": 1, "multiclass": 1, "regression": 1},
        })
        assert table.average["s3"] == 9.0
        assert table.band["s3"] == "Avoid"
        assert table.band["s4"] == "Excellent"

    def test_dominant_activation(self):
        results = [
            _result("s4", "binary", [0.97, 0.96]),
            _result("relu", "binary", [0.90, 0.91]),
            _result("tanh", "binary", [0.93, 0.92]),
            _result("s4", "regression", [18.0, 19.0], "mse"),
            _result("relu", "regression", [25.0, 24.0], "mse"),
            _result("tanh", "regression", [21.0, 22.0], "mse"),
        ]
        table = rank_functions(results)
        assert table.tasks == ["binary", "regression"]
        assert table.ranks["s4"] == {"binary": 1, "regression": 1}
        assert table.ranks["relu"] == {"binary": 3, "regression": 3}
        assert table.average["s4"] == 1.0 and table.band["s4"] == "Excellent"
        assert [row[0] for row in table.rows()] == ["s4", "tanh", "relu"]

    def test_ties_share_the_smaller_rank(self):
        results = [
            _result("s4", "binary", [0.95]),
            _result("tanh", "binary", [0.95]),
            _result("relu", "binary", [0.90]),
        ]
        ranks = rank_functions(results).ranks
        assert (ranks["s4"]["binary"], ranks["tanh"]["binary"], ranks["relu"]["binary"]) == (1, 1, 3)

    def test_missing_cell(self):
        results = [
            _result("s4", "binary", [0.95]),
            _result("relu", "binary", [0.90]),
            _result("s4", "multiclass", [0.95]),
        ]
        with pytest.raises(ContractViolation):
            rank_functions(results)

    def test_result_without_successful_runs(self):
        results = [_result("s4", "binary", []), _result("relu", "binary", [0.9])]
        with pytest.raises(ContractViolation):
            rank_functions(results)


class TestReports:
    def test_csv_rows(self):
        r = _result("s4_rescaled:k=10", "binary", [0.9, 0.95, 1.0], k=10.0)
        buf = io.StringIO()
        write_report([r], "csv", buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == ("study,task,activation,variant,k,seed,metric,"
                            "epochs_to_convergence,wall_clock_s,ci95")
        assert len(lines) == 1 + 3 + 1
        assert lines[1].split(",")[5:7] == ["1", "0.9"]
        mean = lines[-1].split(",")
        assert mean[5] == "mean"
        assert float(mean[6]) == pytest.approx(0.95, abs=1e-12)
        assert float(mean[9]) == pytest.approx(0.124207, abs=1e-6)

    def test_empty_csv_is_header_only(self):
        buf = io.StringIO()
        write_report([], "csv", buf)
        assert buf.getvalue().count("\n") == 1

    def test_no_timing(self):
        buf = io.StringIO()
        write_report([_result("relu", "binary", [0.9])], "csv", buf, timing=False)
        assert all(line.split(",")[8] == "" for line in buf.getvalue().splitlines()[1:])

    def test_untimed_report_can_be_rewritten(self, tmp_path):
        first = tmp_path / "untimed.csv"
        second = tmp_path / "again.csv"
        write_report([_result("relu", "binary", [0.9, 0.8])], "csv", first, timing=False)
        reloaded = read_report(first)
        assert reloaded[0].wall_clock == [None, None]
        write_report(reloaded, "csv", second)
        assert second.read_text() == first.read_text()

    @pytest.mark.parametrize("suffix,fmt", [(".json", "json"), (".csv", "csv")])
    def test_round_trip(self, tmp_path, suffix, fmt):
        original = [
            _result("s4_rescaled:k=10", "binary", [0.1 + 0.2, 1 / 3.0], k=10.0),
            _result("relu", "regression", [18.123456789012345, 20.5], "mse"),
        ]
        path = tmp_path / f"report{suffix}"
        write_report(original, fmt, path, spec=_spec())
        loaded = read_report(path)
        assert [r.activation for r in loaded] == ["s4_rescaled:k=10", "relu"]
        for a, b in zip(original, loaded):
            assert a.metrics == b.metrics
            assert a.seeds == b.seeds
            assert a.epochs == b.epochs
            assert a.k == b.k
            assert a.metric_name == b.metric_name

    def test_json_document(self, tmp_path):
        path = tmp_path / "r.json"
        write_report([_result("relu", "binary", [0.9, 0.8])], "json", path, spec=_spec())
        doc = json.loads(path.read_text())
        assert set(doc) == {"study", "spec", "results", "environment"}
        assert doc["spec"]["seeds"] == [1, 2]
        assert doc["environment"]["precision"] == "float64"

    def test_single_seed_ci_is_null_in_json(self):
        buf = io.StringIO()
        write_report([_result("relu", "binary", [0.9])], "json", buf)
        assert json.loads(buf.getvalue())["results"][0]["ci95"] is None

    def test_foreign_csv(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataFormatError):
            read_report(path)

    def test_unknown_format(self):
        with pytest.raises(ContractViolation):
            write_report([], "xml", io.StringIO())

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError, match="missing"):
            write_report([], "csv", tmp_path / "missing" / "r.csv")


class TestSpec:
    def test_defaults(self):
        spec = ExperimentSpec("binary", [parse_activation("s4")])
        assert spec.seeds == (1, 2, 3)
        assert spec.hidden_layers == (64, 32, 16)
        assert spec.train_config(2).seed == 2

    def test_needs_seeds_and_activations(self):
        with pytest.raises(ContractViolation):
            ExperimentSpec("binary", [parse_activation("s4")], seeds=())
        with pytest.raises(ContractViolation):
            ExperimentSpec("binary", [])

    def test_bad_override(self):
        with pytest.raises(ContractViolation):
            ExperimentSpec("binary", [parse_activation("s4")],
                           train_overrides={"patience": 80})


class TestStudies:
    def test_run_task(self, synthetic_parts):
        results = run_task(_spec(), data=synthetic_parts)
        assert [r.activation for r in results] == ["s4_rescaled:k=10", "relu"]
        for r in results:
            assert r.seeds == [1, 2]
            assert r.mean == pytest.approx(np.mean(r.metrics), abs=1e-12)
            assert all(0.0 <= m <= 1.0 for m in r.metrics)
            assert all(1 <= e <= 3 for e in r.epochs)
            assert math.isfinite(r.ci95)
        assert results[0].k == 10.0 and results[1].k is None

    def test_run_task_is_deterministic(self, synthetic_parts):
        a = run_task(_spec(), data=synthetic_parts)
        b = run_task(_spec(), data=synthetic_parts)
        assert [r.metrics for r in a] == [r.metrics for r in b]

    def test_parallel_matches_serial(self, synthetic_parts):
        serial = run_task(_spec(), jobs=1, data=synthetic_parts)
        parallel = run_task(_spec(), jobs=2, data=synthetic_parts)
        assert [r.metrics for r in serial] == [r.metrics for r in parallel]
        assert [r.epochs for r in serial] == [r.epochs for r in parallel]

    def test_single_run_has_undefined_ci(self, synthetic_parts):
        (result,) = run_task(_spec(("relu",), seeds=(1,)), data=synthetic_parts)
        assert len(result.metrics) == 1
        assert math.isnan(result.ci95)

    def test_failed_run_is_recorded(self, synthetic_parts, monkeypatch):
        real_train = experiments.train

        def flaky(config, data, tc=None):
            if tc.seed == 2:
                raise NumericError("Non-finite values in layer 1")
            return real_train(config, data, tc)

        monkeypatch.setattr(experiments, "train", flaky)
        (result,) = run_task(_spec(("tanh",)), data=synthetic_parts)
        assert result.failed_seeds == [2]
        assert result.seeds == [1]

    def test_convergence_study(self, synthetic_parts):
        records = run_convergence_study(_spec(seeds=(1,)), ["10-1"], data=synthetic_parts)
        assert [(r.architecture, r.activation) for r in records] == [
            ("10-1", "s4_rescaled:k=10"), ("10-1", "relu")
        ]
        for r in records:
            assert 1 <= r.epochs <= r.max_epochs == 30
            assert r.result.study == "convergence-10-1"

    def test_convergence_study_is_deterministic(self, synthetic_parts):
        a = run_convergence_study(_spec(), ["10-1"], data=synthetic_parts)
        b = run_convergence_study(_spec(), ["10-1"], data=synthetic_parts)
        assert [r.epochs for r in a] == [r.epochs for r in b]
        assert [r.result.metrics for r in a] == [r.result.metrics for r in b]

    def test_unknown_architecture(self, synthetic_parts):
        with pytest.raises(ContractViolation):
            run_convergence_study(_spec(), ["7-7"], data=synthetic_parts)

    def test_k_sweep_single_value(self, synthetic_parts):
        sweep = run_k_sweep(_spec(seeds=(1,)), [10], data=synthetic_parts)
        assert sweep.best_k == 10.0
        assert sweep.k_values == [10.0]
        assert sweep.results[0].activation == "s4_rescaled:k=10"

    def test_k_sweep_is_deterministic(self, synthetic_parts):
        a = run_k_sweep(_spec(), [5, 10], data=synthetic_parts)
        b = run_k_sweep(_spec(), [5, 10], data=synthetic_parts)
        assert a.metrics == b.metrics
        assert a.best_k == b.best_k

    def test_k_sweep_literal_variant(self, synthetic_parts):
        sweep = run_k_sweep(_spec(seeds=(1,), variant="literal"), [5], data=synthetic_parts)
        assert sweep.results[0].activation == "s4_literal:k=5"

    def test_k_sweep_picks_best_and_first_on_ties(self, monkeypatch):
        table = {5.0: 0.90, 10.0: 0.95, 15.0: 0.95, 20.0: 0.93}

        def fake_grid(spec, study, train_set, test_set, activations, *rest):
            return [_result(a.id, "binary", [table[a.params.k]], k=a.params.k)
                    for a in activations]

        monkeypatch.setattr(experiments, "_run_grid", fake_grid)
        sweep = run_k_sweep(_spec(), [5, 10, 15, 20], data=(None, None))
        assert sweep.best_k == 10.0
        assert sweep.in_band

    def test_k_sweep_lower_mse_wins(self, monkeypatch):
        table = {5.0: 19.0, 10.0: 18.0, 50.0: 40.0}

        def fake_grid(spec, study, train_set, test_set, activations, *rest):
            return [_result(a.id, "regression", [table[a.params.k]], "mse", a.params.k)
                    for a in activations]

        monkeypatch.setattr(experiments, "_run_grid", fake_grid)
        assert run_k_sweep(_spec(), [5, 10, 50], data=(None, None)).best_k == 10.0

    def test_k_bands(self):
        assert KSweepResult("regression", [5.0], [1.0], 5.0).in_band
        assert not KSweepResult("binary", [50.0], [1.0], 50.0).in_band

    def test_gradient_flow_probe(self):
        activations = [parse_activation("s4:k=10"), parse_activation("relu")]
        records = run_gradient_flow_probe([2], activations, seed=1, width=20, batch=64,
                                          epochs=1)
        assert [(r.activation, r.phase) for r in records] == [
            ("s4_rescaled:k=10", "init"), ("s4_rescaled:k=10", "trained"),
            ("relu", "init"), ("relu", "trained"),
        ]
        for r in records:
            assert len(r.mean_abs_grad) == 2
            assert r.grad_min <= r.grad_max
            assert all(0.0 <= f <= 1.0 for f in r.dead_fraction)
        assert all(r.total_dead_fraction == 0.0 for r in records[:2])

    def test_gradient_flow_is_deterministic(self):
        activations = [parse_activation("s4:k=10")]
        a = run_gradient_flow_probe([2], activations, width=8, batch=32, epochs=1)
        b = run_gradient_flow_probe([2], activations, width=8, batch=32, epochs=1)
        assert [r.to_dict() for r in a] == [r.to_dict() for r in b]

    def test_gradient_record_reports_derivative_range(self):
        (record, _) = run_gradient_flow_probe([3], [parse_activation("sigmoid")], width=6,
                                              batch=16, epochs=1)
        d = record.to_dict()
        assert d["derivative_min"] == min(d["mean_derivative"])
        assert d["derivative_max"] == max(d["mean_derivative"])
        assert 0.0 < d["derivative_min"] <= d["derivative_max"] <= 0.25

    def test_gradient_report_csv(self):
        activations = [parse_activation("tanh")]
        records = run_gradient_flow_probe([1], activations, width=5, batch=16, epochs=1)
        buf = io.StringIO()
        write_gradient_report(records, "csv", buf)
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("study,activation,depth,phase")
        assert lines[0].endswith(",derivative_min,derivative_max")
        assert len(lines) == 1 + 2


class TestTaskData:
    def test_synthetic_binary(self):
        train, test = load_task_data(_spec())
        assert train.n_rows + test.n_rows == 1000
        assert test.n_rows in (199, 200)
        assert np.all(np.abs(train.features.mean(axis=0)) < 1e-10)

    def test_missing_data_file(self, tmp_path):
        spec = ExperimentSpec(StudyTask.REGRESSION, [parse_activation("s4")],
                              data_dir=str(tmp_path))
        with pytest.raises(FileNotFoundError):
            load_task_data(spec)

    def test_wrong_row_count(self, iris_file):
        spec = ExperimentSpec(StudyTask.MULTICLASS, [parse_activation("s4")],
                              data_dir=str(iris_file.parent))
        with pytest.raises(DataFormatError, match="expected 150 rows"):
            load_task_data(spec)
