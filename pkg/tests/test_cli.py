import json

import numpy as np
import pytest

from flda.cli import build_parser, main
from flda.classify import load_model


def _run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def pair_dir(tmp_path):
    out = tmp_path / "pair"
    assert _run("synth", "--preset", "poisson", "--n", 800, "--seed", 2, "--out", out) == 0
    return out


class TestSynth:
    def test_files(self, pair_dir):
        names = {p.name for p in pair_dir.iterdir()}
        assert names == {
            "source.csv", "target.csv", "source_validation.csv", "target_validation.csv",
            "true_transfer.tsv", "spec.ini",
        }

    def test_sparse_format(self, tmp_path):
        assert _run("synth", "--n", 50, "--out", tmp_path, "--format", "sparse") == 0
        assert (tmp_path / "source.svm").exists()

    def test_config_file(self, tmp_path, write):
        cfg = write("c.ini", "[synthetic]\nfamily = poisson\nclass_params = 1 1; 4 4\nn = 30\n")
        assert _run("synth", "--config", cfg, "--out", tmp_path / "o") == 0
        assert len((tmp_path / "o" / "source.csv").read_text().splitlines()) == 30


class TestFitEval:
    @pytest.mark.parametrize("clf", ["flda-q", "flda-l", "s-ls", "lr"])
    def test_fit_then_eval(self, pair_dir, tmp_path, capsys, clf):
        model = tmp_path / "m.txt"
        # the synthetic target keeps its label column, so it is read as labeled
        rc = _run("fit", "--classifier", clf, "--source", pair_dir / "source.csv",
                  "--target", pair_dir / "target.csv", "--out", model, "--seed", 5)
        assert rc == 0
        assert load_model(model).train_meta["seed"] == 5
        preds = tmp_path / "p.txt"
        assert _run("eval", "--model", model, "--data", pair_dir / "target_validation.csv",
                    "--out", preds) == 0
        err = float(capsys.readouterr().out.split("error_rate")[1])
        assert 0 <= err < 0.3
        assert np.loadtxt(preds).shape == (10_000,)

    def test_flda_needs_target(self, pair_dir, tmp_path, capsys):
        rc = _run("fit", "--classifier", "flda-q", "--source", pair_dir / "source.csv",
                  "--out", tmp_path / "m.txt")
        assert rc == 2
        assert "error[config]" in capsys.readouterr().err


class TestBench:
    def test_boundary_determinism(self, tmp_path):
        for out in ("a", "b"):
            assert _run("bench", "boundary", "--n", 1000, "--out", tmp_path / out) == 0
        for path in (tmp_path / "a").iterdir():
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()

    def test_curve_from_config(self, tmp_path, write):
        cfg = write("c.ini", "[synthetic]\npreset = poisson\nn = 300\n"
                              "[bench]\nsizes = 5 50\nrepetitions = 3\n")
        assert _run("bench", "curve", "--config", cfg, "--out", tmp_path / "c") == 0
        doc = json.loads((tmp_path / "c" / "result.json").read_text())
        assert doc["config"]["sizes"] == [5, 50] and doc["config"]["repetitions"] == 3

    def test_missing(self, tmp_path, write):
        data = write("m.csv", "a,b,y\n1,?,1\n0,1,0\n1,1,1\n0,0,0\n2,1,1\n?,1,1\n")
        rc = _run("bench", "missing", "--data", data, "--header", "--missing-token", "?",
                  "--losses", "quadratic", "--out", tmp_path / "o")
        assert rc == 0
        assert json.loads((tmp_path / "o" / "result.json").read_text())["config"]["target_n"] == 2

    def test_pair_needs_files(self, tmp_path):
        assert _run("bench", "pair", "--out", tmp_path) == 2


class TestErrors:
    def test_parse_error_exit_code(self, write, tmp_path, capsys):
        bad = write("bad.csv", "1,2,1\n1,1\n")
        rc = _run("fit", "--classifier", "s-ls", "--source", bad, "--out", tmp_path / "m")
        assert rc == 3
        assert "error[parse]" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert _run("eval", "--model", tmp_path / "none", "--data", tmp_path / "none") == 6
        assert "error[io]" in capsys.readouterr().err

    def test_bad_config(self, tmp_path):
        assert _run("synth", "--config", tmp_path / "nope.ini", "--out", tmp_path) == 2

    def test_bad_loss(self, tmp_path):
        assert _run("bench", "boundary", "--n", 50, "--losses", "hinge", "--out", tmp_path) == 2

    def test_help_documents_formats(self):
        assert "sparse" in build_parser().format_help() and "exit codes" in build_parser().epilog
