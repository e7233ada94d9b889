import pytest

from conftest import make_corpus
from cpccd.corrupt import SPLITS, DatasetManifest, build_dataset, expected_total
from cpccd.corrupt.dataset import MANIFEST_NAME, collect_inputs, default_workers
from cpccd.errors import IoError, ManifestError
from cpccd.pcgeom import read_cloud


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_layout_and_totals(tmp_path):
    src = make_corpus(tmp_path / "in")
    m = build_dataset(src, tmp_path / "out", master_seed=1)
    assert m.totals_by_split() == {"train": 24, "val": 8, "test": 8}
    assert set(m.totals_by_kind().values()) == {5}
    assert m.n_objects == 5 and m.total == expected_total(5)
    for e in m.entries:
        assert (tmp_path / "out" / e.path).is_file()
    for split in SPLITS:
        assert (tmp_path / "out" / split / "clean").is_dir()
        assert (tmp_path / "out" / split / "complete").is_dir()


def test_manifest_round_trip(tmp_path):
    src = make_corpus(tmp_path / "in", counts=(1, 1, 1))
    m = build_dataset(src, tmp_path / "out", master_seed=3)
    back = DatasetManifest.read(tmp_path / "out" / MANIFEST_NAME)
    assert back.entries == m.entries and back.master_seed == 3
    assert back.to_text() == (tmp_path / "out" / MANIFEST_NAME).read_text()


def test_manifest_totals_checked(tmp_path):
    src = make_corpus(tmp_path / "in", counts=(1, 0, 0))
    build_dataset(src, tmp_path / "out")
    path = tmp_path / "out" / MANIFEST_NAME
    path.write_text(path.read_text().replace("#totals\tall\t8", "#totals\tall\t9"))
    with pytest.raises(ManifestError):
        DatasetManifest.read(path)


def test_thread_count_does_not_change_bytes(tmp_path):
    src = make_corpus(tmp_path / "in", counts=(2, 1, 1), ext=".ply")
    build_dataset(src, tmp_path / "a", master_seed=9, workers=1)
    build_dataset(src, tmp_path / "b", master_seed=9, workers=3)
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_seed_changes_output(tmp_path):
    src = make_corpus(tmp_path / "in", counts=(1, 0, 0))
    a = build_dataset(src, tmp_path / "a", master_seed=0)
    b = build_dataset(src, tmp_path / "b", master_seed=1)
    assert [e.params for e in a.entries] != [e.params for e in b.entries]


def test_corrupted_clouds_keep_format(tmp_path):
    src = make_corpus(tmp_path / "in", counts=(1, 0, 0), ext=".ply")
    m = build_dataset(src, tmp_path / "out")
    for e in m.entries:
        assert e.path.endswith(".ply")
        assert read_cloud(tmp_path / "out" / e.path).count > 0


def test_missing_split_and_complete(tmp_path):
    src = make_corpus(tmp_path / "in", counts=(1, 1, 1))
    (src / "val" / "complete" / "obj001.xyz").unlink()
    with pytest.raises(IoError):
        collect_inputs(src)
    for p in sorted((src / "test").rglob("*"), reverse=True):
        p.unlink() if p.is_file() else p.rmdir()
    (src / "test").rmdir()
    with pytest.raises(IoError):
        collect_inputs(src)


def test_duplicate_ids_across_splits(tmp_path):
    src = make_corpus(tmp_path / "in", counts=(1, 1, 1))
    (src / "val" / "partial" / "obj001.xyz").rename(src / "val" / "partial" / "obj000.xyz")
    (src / "val" / "complete" / "obj001.xyz").rename(src / "val" / "complete" / "obj000.xyz")
    with pytest.raises(ManifestError):
        collect_inputs(src)


def test_full_scale_arithmetic():
    assert expected_total(30974) == 247792


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("CPCCD_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.delenv("CPCCD_THREADS")
    assert default_workers() == 1
