import csv

import numpy as np
import pytest

from conftest import make_corpus, scan_like
from cpccd.cli import main
from cpccd.corrupt import DatasetManifest
from cpccd.metrics import read_report_csv
from cpccd.nmm import HISTORY_FIELDS
from cpccd.pcgeom import PointCloud, read_cloud, write_cloud


@pytest.fixture
def one_cloud(tmp_path):
    path = tmp_path / "chair.xyz"
    write_cloud(path, scan_like(n=300, seed=5))
    return path


class TestCorrupt:
    def test_same_seed_same_bytes(self, tmp_path, one_cloud):
        for out in ("a", "b"):
            assert main(["corrupt", "--input", str(one_cloud), "--kind", "is", "--seed", "0",
                         "--out", str(tmp_path / out)]) == 0
        a = (tmp_path / "a" / "chair__I_S.xyz").read_bytes()
        assert a == (tmp_path / "b" / "chair__I_S.xyz").read_bytes()
        assert (tmp_path / "a" / "chair__I_S.xyz.params").read_text() == \
            (tmp_path / "b" / "chair__I_S.xyz.params").read_text()

    def test_all_kinds(self, tmp_path, one_cloud):
        assert main(["corrupt", "--input", str(one_cloud), "--kind", "all",
                     "--out", str(tmp_path / "o")]) == 0
        assert len(list((tmp_path / "o").glob("*.xyz"))) == 8
        assert len(list((tmp_path / "o").glob("*.params"))) == 8

    def test_pinned_zero_rotation(self, tmp_path, one_cloud):
        recipe = tmp_path / "r.txt"
        recipe.write_text("T_R.theta = 0, 0, 0\n")
        assert main(["corrupt", "--input", str(one_cloud), "--kind", "tr", "--out",
                     str(tmp_path / "o"), "--recipe", str(recipe)]) == 0
        out = read_cloud(tmp_path / "o" / "chair__T_R.xyz")
        np.testing.assert_array_equal(out.points, read_cloud(one_cloud).points)

    def test_directory_input(self, tmp_path):
        (tmp_path / "in" / "sub").mkdir(parents=True)
        for name in ("a", "b"):
            write_cloud(tmp_path / "in" / "sub" / f"{name}.ply", scan_like(n=100))
        assert main(["corrupt", "--input", str(tmp_path / "in"), "--kind", "djt",
                     "--out", str(tmp_path / "o")]) == 0
        assert sorted(p.name for p in (tmp_path / "o" / "sub").glob("*.ply")) == \
            ["a__D_JT.ply", "b__D_JT.ply"]

    def test_usage_errors(self, tmp_path, one_cloud, capsys):
        assert main(["corrupt", "--input", str(tmp_path / "nope.xyz"), "--kind", "is",
                     "--out", str(tmp_path)]) == 2
        assert main(["corrupt", "--input", str(one_cloud), "--kind", "melt",
                     "--out", str(tmp_path)]) == 2
        assert main(["corrupt", "--input", str(one_cloud), "--kind", "tr", "--out",
                     str(tmp_path), "--recipe", str(tmp_path / "missing")]) == 2
        assert main(["corrupt"]) == 2
        assert "error" in capsys.readouterr().err


class TestDatasetBuild:
    def test_totals(self, tmp_path):
        src = make_corpus(tmp_path / "in", counts=(3, 1, 1))
        assert main(["dataset-build", "--input", str(src), "--out", str(tmp_path / "o")]) == 0
        m = DatasetManifest.read(tmp_path / "o" / "manifest.tsv")
        assert m.totals_by_split() == {"train": 24, "val": 8, "test": 8}

    def test_rerun_is_idempotent(self, tmp_path):
        src = make_corpus(tmp_path / "in", counts=(1, 1, 1))
        args = ["dataset-build", "--input", str(src), "--out", str(tmp_path / "o"), "--seed", "4"]
        assert main(args) == 0
        first = {p: p.read_bytes() for p in (tmp_path / "o").rglob("*") if p.is_file()}
        assert main(args + ["--workers", "2"]) == 0
        second = {p: p.read_bytes() for p in (tmp_path / "o").rglob("*") if p.is_file()}
        assert first == second

    def test_missing_split(self, tmp_path):
        src = make_corpus(tmp_path / "in", counts=(1, 1, 1))
        (src / "val").rename(tmp_path / "elsewhere")
        assert main(["dataset-build", "--input", str(src), "--out", str(tmp_path / "o")]) == 2


def write_xyz_points(path, pts):
    path.parent.mkdir(parents=True, exist_ok=True)
    write_cloud(path, PointCloud(np.asarray(pts, dtype=float)))


class TestEval:
    def test_pred_equals_gt(self, tmp_path):
        d = tmp_path / "d"
        for i in range(3):
            write_xyz_points(d / f"{i}.xyz", np.random.default_rng(i).normal(size=(20, 3)))
        assert main(["eval", "--pred", str(d), "--gt", str(d), "--input", str(d),
                     "--fidelity", "--report", str(tmp_path / "r.csv")]) == 0
        (row,) = read_report_csv((tmp_path / "r.csv").read_text())
        assert float(row["cd_l1"]) == 0 and float(row["cd_l2"]) == 0
        assert float(row["fscore"]) == 1 and float(row["fidelity"]) == 0
        assert (tmp_path / "r.txt").is_file()

    def test_single_point_pair(self, tmp_path):
        write_xyz_points(tmp_path / "p" / "a.xyz", [[0, 0, 0]])
        write_xyz_points(tmp_path / "g" / "a.xyz", [[1, 0, 0]])
        assert main(["eval", "--pred", str(tmp_path / "p"), "--gt", str(tmp_path / "g"),
                     "--report", str(tmp_path / "r.csv")]) == 0
        (row,) = read_report_csv((tmp_path / "r.csv").read_text())
        assert row["cd_l1"] == "2000" and row["cd_l2"] == "2000"

    def test_categories_from_first_folder(self, tmp_path):
        for rel in ("E_OI/a.xyz", "R_CC/b.xyz", "c.xyz", "misc/d.xyz"):
            write_xyz_points(tmp_path / "p" / rel, [[0, 0, 0]])
            write_xyz_points(tmp_path / "g" / rel, [[0, 0, 0]])
        main(["eval", "--pred", str(tmp_path / "p"), "--gt", str(tmp_path / "g"),
              "--report", str(tmp_path / "r.csv"), "--run", "demo"])
        rows = read_report_csv((tmp_path / "r.csv").read_text())
        assert {(r["category"], r["count"]) for r in rows} == \
            {("clean", "2"), ("E_OI", "1"), ("R_CC", "1")}
        assert {r["run"] for r in rows} == {"demo"}

    def test_orphans(self, tmp_path, capsys):
        write_xyz_points(tmp_path / "p" / "a.xyz", [[0, 0, 0]])
        write_xyz_points(tmp_path / "p" / "b.xyz", [[0, 0, 0]])
        write_xyz_points(tmp_path / "g" / "a.xyz", [[0, 0, 0]])
        assert main(["eval", "--pred", str(tmp_path / "p"), "--gt", str(tmp_path / "g"),
                     "--report", str(tmp_path / "r.csv")]) == 3
        assert "b.xyz" in capsys.readouterr().err

    def test_fidelity_needs_input(self, tmp_path):
        write_xyz_points(tmp_path / "p" / "a.xyz", [[0, 0, 0]])
        assert main(["eval", "--pred", str(tmp_path / "p"), "--gt", str(tmp_path / "p"),
                     "--fidelity", "--report", str(tmp_path / "r.csv")]) == 2

    def test_bad_delta(self, tmp_path):
        assert main(["eval", "--pred", str(tmp_path), "--gt", str(tmp_path), "--delta", "0",
                     "--report", str(tmp_path / "r.csv")]) == 2


class TestNmmDemo:
    def run(self, tmp_path, name, *extra):
        out = tmp_path / f"{name}.csv"
        code = main(["nmm-demo", "--b", "2", "--l", "4", "--d", "16", "--steps", "6",
                     "--out", str(out), *extra])
        return code, out

    def test_history_csv(self, tmp_path):
        code, out = self.run(tmp_path, "h")
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert tuple(rows[0]) == HISTORY_FIELDS and len(rows) == 7

    def test_replay(self, tmp_path):
        _, a = self.run(tmp_path, "a", "--t", "1", "--seed", "0")
        _, b = self.run(tmp_path, "b", "--t", "1", "--seed", "0")
        assert a.read_bytes() == b.read_bytes()

    def test_noisy_only_residual(self, tmp_path, capsys):
        code, _ = self.run(tmp_path, "n", "--ablation", "noisy-only")
        assert code == 0
        line = [l for l in capsys.readouterr().out.splitlines() if "f_noisy)|" in l][0]
        assert float(line.rsplit("=", 1)[1]) <= 1e-12

    def test_heads_must_divide_d(self, tmp_path):
        assert main(["nmm-demo", "--d", "20", "--out", str(tmp_path / "x.csv")]) == 2

    def test_divergence_exit_code(self, tmp_path):
        with np.errstate(all="ignore"):
            code, _ = self.run(tmp_path, "x", "--lr", "1e200")
        assert code == 4
