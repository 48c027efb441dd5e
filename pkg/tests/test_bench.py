import json

import numpy as np
import pytest

from flda.bench import (
    ExperimentResult,
    emit_results,
    run_boundary,
    run_learning_curve,
    run_missing,
    run_pair,
    run_perturbation,
    train_classifier,
)
from flda.data import Dataset, load_delimited, save_delimited
from flda.errors import DataError, OutputError
from flda.synthetic import bernoulli_spec, generate_pair, poisson_spec


@pytest.fixture(scope="module")
def small_pair():
    return generate_pair(poisson_spec(n=2000, validation_n=500))


class TestTrainClassifier:
    def test_unknown(self, small_pair):
        with pytest.raises(DataError):
            train_classifier("svm", small_pair.source)

    def test_target_needs_labels(self, small_pair):
        with pytest.raises(DataError):
            train_classifier("t-ls", small_pair.source, small_pair.target.unlabeled())

    def test_flda_estimates_transfer(self, small_pair):
        model = train_classifier("flda-q", small_pair.source, small_pair.target)
        assert model.adapted


class TestBoundary:
    def test_no_shift_all_agree(self):
        # Bernoulli lattice: with no dropout the tied cells cost the same either way
        result = run_boundary(bernoulli_spec(true_theta=(0.0, 0.0)))
        errors = list(result.errors.values())
        assert len(errors) == 6 and max(errors) - min(errors) <= 0.01

    def test_outputs(self, tmp_path):
        result = run_boundary(bernoulli_spec(n=2000, validation_n=500), losses=["quadratic"])
        assert set(result.errors) == {"s-ls", "t-ls", "flda-q"}
        written = {p.name for p in emit_results(result, tmp_path)}
        assert written == {
            "result.json", "errors.csv", "scatter_source.csv", "scatter_target.csv",
            "line_s-ls.csv", "line_t-ls.csv", "line_flda-q.csv",
        }
        doc = json.loads((tmp_path / "result.json").read_text())
        assert doc["config"]["spec"]["seed"] == 0 and "timings" not in doc

    def test_timings_opt_in(self, tmp_path):
        result = run_boundary(bernoulli_spec(n=500, validation_n=100), losses=["quadratic"])
        names = {p.name for p in emit_results(result, tmp_path, include_timings=True)}
        assert "timings.csv" in names


class TestLearningCurve:
    def test_rows_and_sem(self):
        result = run_learning_curve(poisson_spec(n=500, validation_n=200), [10, 50], repetitions=4)
        rows = result.tables["curve"]
        assert len(rows) == 2 * 3 * 2
        assert all(r["repetitions"] == 4 and r["sem"] >= 0 for r in rows)
        cells = result.tables["curve_cells"]
        one = [c["error"] for c in cells
               if c["size"] == 10 and c["classifier"] == "t-ls" and c["domain"] == "target"]
        row = next(r for r in rows
                   if r["size"] == 10 and r["classifier"] == "t-ls" and r["domain"] == "target")
        assert row["sem"] == pytest.approx(np.std(one, ddof=1) / 2.0)

    def test_parallel_matches_serial(self):
        spec = poisson_spec(n=400, validation_n=100)
        a = run_learning_curve(spec, [5, 20], repetitions=3)
        b = run_learning_curve(spec, [5, 20], repetitions=3, jobs=3)
        assert a.tables == b.tables

    def test_size_errors(self):
        spec = poisson_spec(n=100, validation_n=10)
        with pytest.raises(DataError):
            run_learning_curve(spec, [50, 200], repetitions=2)
        with pytest.raises(DataError):
            run_learning_curve(spec, [20, 10], repetitions=2)


class TestPerturbation:
    def test_table_shape(self):
        result = run_perturbation(poisson_spec(n=1000, validation_n=10), losses=["quadratic"])
        (row,) = result.tables["perturbation"]
        assert list(row) == ["loss", "sl", "tl", "delta=0", "delta=0.1", "delta=0.2", "delta=0.3"]

    def test_delta_out_of_range(self):
        with pytest.raises(DataError):
            run_perturbation(poisson_spec(n=500, validation_n=10), deltas=[0.6], losses=["quadratic"])


class TestPair:
    def test_same_domain(self, small_pair):
        result = run_pair(small_pair.source, small_pair.source)
        assert result.extra["theta_hat"] == [0.0, 0.0]
        assert abs(result.errors["flda-q"] - result.errors["s-ls"]) <= 1e-12
        assert abs(result.errors["flda-l"] - result.errors["s-lr"]) <= 1e-12

    def test_file_roundtrip_matches_memory(self, small_pair, tmp_path):
        save_delimited(small_pair.source, tmp_path / "s.csv")
        save_delimited(small_pair.target, tmp_path / "t.csv")
        src = load_delimited(tmp_path / "s.csv", -1)
        tgt = load_delimited(tmp_path / "t.csv", -1)
        a = run_pair(small_pair.source, small_pair.target, losses=["quadratic"])
        b = run_pair(src, tgt, losses=["quadratic"])
        assert a.errors == b.errors and a.extra == b.extra

    def test_unlabeled_target(self, small_pair):
        result = run_pair(small_pair.source, small_pair.target.unlabeled(), losses=["quadratic"])
        assert result.errors == {} and "transfer" in result.tables

    def test_dimension_mismatch(self, small_pair):
        with pytest.raises(DataError):
            run_pair(small_pair.source, Dataset(np.zeros((3, 5))))


class TestMissing:
    def test_partition(self, rng):
        X = rng.poisson(3.0, size=(300, 3)).astype(float)
        y = np.where(X.sum(axis=1) > 9, 1, -1)
        mask = rng.random((300, 3)) < 0.2
        X[mask] = 0.0
        result = run_missing(Dataset(X, y, missing_mask=mask), losses=["quadratic"])
        assert result.config["source_n"] + result.config["target_n"] == result.config["total_n"] == 300

    def test_nothing_missing(self):
        ds = Dataset(np.ones((4, 1)), np.array([1, -1, 1, -1]), missing_mask=np.zeros((4, 1), bool))
        with pytest.raises(DataError):
            run_missing(ds)


class TestEmit:
    def test_empty_result(self, tmp_path):
        with pytest.raises(DataError):
            emit_results(ExperimentResult("none", {}), tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        result = ExperimentResult("x", {}, errors={"a": 0.1})
        with pytest.raises(OutputError):
            emit_results(result, blocker / "sub")
