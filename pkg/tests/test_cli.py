import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lloydspp.cli import main, manifest_path, parse_grid, parse_int_grid, parse_range, UsageError
from lloydspp.core import ClusteringInstance
from lloydspp.datagen import DistributionConfig, write_instance, write_labeled_csv


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def instance_file(tmp_path):
    X = np.array([0.0, 0.5, 1.0, 40.0, 40.5, 41.0])
    inst = ClusteringInstance(X, 2, [0, 0, 0, 1, 1, 1])
    p = tmp_path / "inst.csv"
    write_instance(p, inst)
    return p


class TestParsing:
    def test_range(self):
        r = parse_range("0.5:20")
        assert (r.lo, r.hi) == (0.5, 20.0)
        with pytest.raises(UsageError):
            parse_range("1-2")

    def test_grids(self):
        assert parse_grid("1,2.5") == (1.0, 2.5)
        assert parse_grid("1:10:4") == (1.0, 4.0, 7.0, 10.0)
        assert parse_int_grid("50:200:50") == (50, 100, 150, 200)
        with pytest.raises(UsageError):
            parse_int_grid("a,b")


class TestCluster:
    def test_separable_zero(self, instance_file, tmp_path, capsys):
        out = tmp_path / "a.csv"
        assert main(["cluster", str(instance_file), "--alpha", "1.5", "--beta", "3",
                     "--out", str(out)]) == 0
        assert "hamming_cost=0.0" in capsys.readouterr().out
        r = rows(out)
        assert r[0] == ["point_index", "cluster"] and len(r) == 7
        man = json.loads(manifest_path(out).read_text())
        assert man["command"] == "cluster" and str(out) in man["outputs"]

    def test_byte_identical(self, instance_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["cluster", str(instance_file), "--out", str(a)])
        main(["cluster", str(instance_file), "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_k_exceeds_n(self, instance_file, tmp_path, capsys):
        code = main(["cluster", str(instance_file), "--k", "9", "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "k exceeds point count" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["cluster", str(tmp_path / "nope.csv")]) == 2

    def test_bad_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["cluster"])
        assert exc.value.code == 2


class TestSweep:
    def test_two_by_two(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sweep", "--m", "1", "--N", "10", "--alpha-points", "2",
                     "--beta-grid", "1,2", "--out", str(out)]) == 0
        r = rows(out)
        assert r[0] == ["alpha", "beta", "mean_cost", "stderr"] and len(r) == 5
        man = json.loads(manifest_path(out).read_text())
        best = min(r[1:], key=lambda row: (float(row[2]), float(row[0]), float(row[1])))
        assert man["argmin"]["mean_cost"] == float(best[2])

    def test_mean_rule_rejects_other_betas(self, tmp_path):
        assert main(["sweep", "--m", "1", "--center-rule", "mean", "--beta-grid", "1,2",
                     "--out", str(tmp_path / "s.csv")]) == 2

    def test_manifest_reproduces(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sweep", "--m", "2", "--N", "8", "--alpha-points", "3", "--beta-grid", "2",
              "--seed", "5", "--out", str(out)])
        cfg = json.loads(manifest_path(out).read_text())["config"]
        again = tmp_path / "s2.csv"
        argv = ["sweep", "--m", str(cfg["m"]), "--N", str(cfg["N"]), "--alpha-points",
                str(cfg["alpha_points"]), "--beta-grid", cfg["beta_grid"], "--seed",
                str(cfg["seed"]), "--out", str(again)]
        main(argv)
        assert out.read_bytes() == again.read_bytes()


class TestTune:
    def test_minimal(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        assert main(["tune-alpha", "--m", "2", "--N", "8", "--out", str(out)]) == 0
        r = rows(out)
        assert r[0] == ["alpha_candidate", "train_cost", "test_cost"]
        assert len(r) - 1 >= 3
        man = json.loads(manifest_path(out).read_text())
        train = [float(x[1]) for x in r[1:]]
        assert man["chosen"]["train_cost"] == min(train)
        assert "alpha=" in capsys.readouterr().out

    def test_near_two(self, tmp_path):
        out = tmp_path / "t.csv"
        main(["tune-alpha", "--m", "6", "--N", "15", "--out", str(out)])
        r = np.array([[float(v) for v in row] for row in rows(out)[1:]])
        near = r[np.argmin(np.abs(r[:, 0] - 2.0)), 1]
        chosen = json.loads(manifest_path(out).read_text())["chosen"]["train_cost"]
        assert chosen <= near

    def test_needs_two(self, tmp_path):
        assert main(["tune-alpha", "--m", "1", "--out", str(tmp_path / "t.csv")]) == 2


class TestCounts:
    def test_k_one(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["count-intervals", "--k", "1", "--m", "2", "--n-grid", "10,20",
                     "--out", str(out)]) == 0
        assert [row[1] for row in rows(out)[1:]] == ["1.0", "1.0"]

    def test_histogram_conserves(self, tmp_path):
        out = tmp_path / "h.csv"
        assert main(["histogram", "--k", "3", "--N", "10", "--m", "3", "--bins", "7",
                     "--out", str(out)]) == 0
        r = rows(out)
        assert r[0] == ["bin_lo", "bin_hi", "count"]
        total = sum(int(x[2]) for x in r[1:])
        assert total == json.loads(manifest_path(out).read_text())["breakpoints"]


class TestLabelSubset:
    def test_dataset_flag(self, tmp_path):
        X = np.arange(24, dtype=float).reshape(12, 2)
        write_labeled_csv(tmp_path / "d.csv", X, list("aaabbbcccddd"))
        out = tmp_path / "s.csv"
        assert main(["sweep", "--dist", "label-subset", "--dataset", str(tmp_path / "d.csv"),
                     "--k", "2", "--N", "3", "--m", "2", "--alpha-points", "2",
                     "--beta-grid", "2", "--out", str(out)]) == 0

    def test_missing_dataset(self, tmp_path):
        assert main(["sweep", "--dist", "label-subset", "--out", str(tmp_path / "s.csv")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lloydspp", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
