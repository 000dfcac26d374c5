import numpy as np
import pytest

from rankpref.cli import main


@pytest.fixture
def dataset(tmp_path):
    rng = np.random.default_rng(4)
    quality = rng.normal(0, 1, 40)
    lines = []
    for u in range(1, 81):
        offset = rng.normal(0, 0.5)
        for i in np.nonzero(rng.random(40) < 0.4)[0]:
            r = int(np.clip(np.rint(3 + quality[i] + offset + rng.normal(0, 0.7)), 1, 5))
            lines.append(f"{u}::{i + 100}::{r}::0")
    path = tmp_path / "ratings.dat"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_stats(dataset, capsys):
    assert main(["stats", "--dataset", str(dataset)]) == 0
    out = capsys.readouterr().out
    assert "users       80" in out and "components  1" in out


def test_stats_empty_file(tmp_path, capsys):
    empty = tmp_path / "e.csv"
    empty.write_text("user_id,item_id,rating\n")
    assert main(["stats", "--dataset", str(empty), "--format", "csv"]) == 2
    assert "no entries" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    assert excinfo_code(["stats"]) == 1
    assert excinfo_code(["nonsense"]) == 1


def excinfo_code(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code


def test_experiment_uc_sc(dataset, tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["experiment", "--dataset", str(dataset), "--methods", "uc,sc", "--seed", "42",
                 "--out-csv", str(out)])
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 8


def test_experiment_default_methods(dataset, tmp_path):
    out = tmp_path / "r.csv"
    svg = tmp_path / "r.svg"
    assert main(["experiment", "--dataset", str(dataset), "--out-csv", str(out),
                 "--out-svg", str(svg)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 5 * 4
    assert svg.read_text().startswith("<svg")


def test_experiment_config_file_and_determinism(dataset, tmp_path):
    cfg = tmp_path / "exp.cfg"
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for out in outs:
        cfg.write_text(f"dataset = {dataset}\nmethods = uc, sc, svd\nseed = 42\n"
                       f"out_csv = {out}\n")
        assert main(["experiment", str(cfg)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_experiment_bad_gap(dataset, capsys):
    assert main(["experiment", "--dataset", str(dataset), "--gaps", "5,6"]) == 1
    assert "rating outside scale" in capsys.readouterr().err


def test_experiment_nonconvergence(dataset, tmp_path):
    code = main(["experiment", "--dataset", str(dataset), "--methods", "sc", "--max-iter", "1",
                 "--gaps", "5,1"])
    assert code == 3


def test_experiment_without_dataset(capsys):
    assert main(["experiment"]) == 1


@pytest.mark.parametrize("method", ["uc", "sc"])
def test_audit_admissible(method, capsys):
    assert main(["audit", method, "--trials", "200"]) == 0
    assert "0 violations" in capsys.readouterr().out


def test_audit_svd_observational(capsys):
    assert main(["audit", "svd", "--fraction", "0.3", "--trials", "50"]) == 0
    assert "violations in 50 trials" in capsys.readouterr().out


def test_audit_unknown(capsys):
    assert main(["audit", "glocalk"]) == 1


@pytest.mark.parametrize("method", ["uc", "sc", "svd:0.5"])
def test_fit_then_predict(method, dataset, tmp_path, capsys):
    model = tmp_path / "model.txt"
    assert main(["fit", "--dataset", str(dataset), "--methods", method,
                 "--out-model", str(model)]) == 0
    capsys.readouterr()
    assert main(["predict", "--model", str(model), "--user", "1", "--item", "2"]) == 0
    by_index = float(capsys.readouterr().out)
    assert main(["predict", "--model", str(model), "--dataset", str(dataset),
                 "--user", "2", "--item", "102"]) == 0
    assert float(capsys.readouterr().out) == by_index


def test_fit_nonconvergence(dataset, tmp_path):
    assert main(["fit", "--dataset", str(dataset), "--methods", "sc", "--max-iter", "1",
                 "--out-model", str(tmp_path / "m.txt")]) == 3


def test_fit_needs_one_method(dataset, tmp_path):
    assert main(["fit", "--dataset", str(dataset), "--methods", "uc,sc",
                 "--out-model", str(tmp_path / "m.txt")]) == 1


def test_experiment_creates_output_directories(dataset, tmp_path):
    out = tmp_path / "nested" / "dir" / "r.csv"
    svg = tmp_path / "other" / "r.svg"
    assert main(["experiment", "--dataset", str(dataset), "--methods", "sc", "--gaps", "5,1",
                 "--out-csv", str(out), "--out-svg", str(svg)]) == 0
    assert out.exists() and svg.exists()
