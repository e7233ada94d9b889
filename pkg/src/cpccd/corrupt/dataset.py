"""Split-preserving corrupted dataset builder and its manifest.

Input layout::

    <input_root>/<split>/partial/<object_id>.{ply,xyz}
    <input_root>/<split>/complete/<object_id>.{ply,xyz}

``object_id`` is the path relative to ``partial/`` without suffix, so nested
category folders are allowed. Output layout::

    <out_root>/<split>/<KIND>/<object_id>.<ext>    one per corruption kind
    <out_root>/<split>/clean/<object_id>.<ext>     clean partial copy
    <out_root>/<split>/complete/<object_id>.<ext>  complete ground truth copy
    <out_root>/manifest.tsv
"""
from __future__ import annotations

import os
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from cpccd.corrupt.ops import corrupt
from cpccd.corrupt.recipe import Recipe
from cpccd.corrupt.spec import ALL_KINDS, CorruptionKind
from cpccd.errors import IoError, ManifestError
from cpccd.pcgeom.io import SUFFIXES, read_cloud, write_cloud
from cpccd.pcgeom.rng import RngStream

SPLITS = ("train", "val", "test")
MANIFEST_NAME = "manifest.tsv"
_HEADER = "source_id\tsplit\tkind\tparams\tseed\tpath"


@dataclass(frozen=True)
class ManifestEntry:
    source_id: str
    split: str
    kind: CorruptionKind
    params: str
    seed: int
    path: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    master_seed: int = 0

    @property
    def total(self) -> int:
        return len(self.entries)

    def totals_by_split(self) -> dict[str, int]:
        out = {s: 0 for s in SPLITS}
        for e in self.entries:
            out[e.split] = out.get(e.split, 0) + 1
        return out

    def totals_by_kind(self) -> dict[str, int]:
        out = {k.value: 0 for k in ALL_KINDS}
        for e in self.entries:
            out[e.kind.value] += 1
        return out

    @property
    def n_objects(self) -> int:
        return len({e.source_id for e in self.entries})

    def to_text(self) -> str:
        lines = ["# cpccd-manifest v1", f"# master_seed={self.master_seed}", _HEADER]
        for e in self.entries:
            lines.append("\t".join(
                [e.source_id, e.split, e.kind.value, e.params, str(e.seed), e.path]))
        for split, n in self.totals_by_split().items():
            lines.append(f"#totals\tsplit={split}\t{n}")
        for kind, n in self.totals_by_kind().items():
            lines.append(f"#totals\tkind={kind}\t{n}")
        lines.append(f"#totals\tobjects\t{self.n_objects}")
        lines.append(f"#totals\tall\t{self.total}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path) -> DatasetManifest:
        path = Path(path)
        manifest = cls()
        totals = {}
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line or line == _HEADER:
                continue
            if line.startswith("#totals"):
                _, key, n = line.split("\t")
                totals[key] = int(n)
                continue
            if line.startswith("# master_seed="):
                manifest.master_seed = int(line.split("=", 1)[1])
                continue
            if line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise ManifestError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            sid, split, kind, params, seed, rel = parts
            manifest.entries.append(
                ManifestEntry(sid, split, CorruptionKind(kind), params, int(seed), rel))
        if totals.get("all", manifest.total) != manifest.total:
            raise ManifestError(f"{path}: totals footer disagrees with {manifest.total} entries")
        return manifest


def _scan(root: Path) -> dict[str, Path]:
    found: dict[str, Path] = {}
    for p in sorted(root.rglob("*")):
        if not p.is_file() or p.suffix.lower() not in SUFFIXES:
            continue
        oid = p.relative_to(root).with_suffix("").as_posix()
        if oid in found:
            raise ManifestError(f"duplicate object id {oid!r}: {found[oid]} and {p}")
        found[oid] = p
    return found


def collect_inputs(input_root) -> list[tuple[str, str, Path, Path]]:
    """``(split, object_id, partial_path, complete_path)`` for every object."""
    input_root = Path(input_root)
    items = []
    seen: dict[str, str] = {}
    for split in SPLITS:
        split_dir = input_root / split
        if not split_dir.is_dir():
            raise IoError(f"missing split directory {split_dir}", split_dir)
        partial_dir = split_dir / "partial"
        complete_dir = split_dir / "complete"
        for d in (partial_dir, complete_dir):
            if not d.is_dir():
                raise IoError(f"missing directory {d}", d)
        partials = _scan(partial_dir)
        completes = _scan(complete_dir)
        for oid, ppath in partials.items():
            if oid in seen:
                raise ManifestError(f"object id {oid!r} appears in both {seen[oid]} and {split}")
            seen[oid] = split
            cpath = completes.get(oid)
            if cpath is None:
                raise IoError(f"no complete ground truth for {ppath}", ppath)
            items.append((split, oid, ppath, cpath))
    return items


def _process(item, out_root: Path, master_seed: int, recipe: Recipe, kinds):
    split, oid, ppath, cpath = item
    partial = read_cloud(ppath)
    ext = ppath.suffix.lower()
    for sub, src in (("clean", ppath), ("complete", cpath)):
        dst = out_root / split / sub / f"{oid}{src.suffix.lower()}"
        dst.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(src, dst)
    entries = []
    for kind in kinds:
        rng = RngStream(master_seed, oid, kind.value)
        result = corrupt(partial, kind, rng, recipe)
        rel = f"{split}/{kind.value}/{oid}{ext}"
        dst = out_root / rel
        dst.parent.mkdir(parents=True, exist_ok=True)
        write_cloud(dst, result.cloud)
        entries.append(ManifestEntry(oid, split, kind, result.spec.params_text(), rng.seed, rel))
    return entries


def default_workers() -> int:
    env = os.environ.get("CPCCD_THREADS")
    return max(1, int(env)) if env else 1


def build_dataset(input_root, out_root, master_seed: int = 0, recipe: Recipe | None = None,
                  workers: int | None = None, kinds=ALL_KINDS) -> DatasetManifest:
    """Corrupt every partial under ``input_root`` once per kind.

    Each (object, kind) pair draws from its own ``RngStream(master_seed,
    object_id, kind)``, so output bytes do not depend on ``workers`` or on
    scheduling order.
    """
    recipe = recipe or Recipe()
    out_root = Path(out_root)
    items = collect_inputs(input_root)
    out_root.mkdir(parents=True, exist_ok=True)
    workers = workers or default_workers()
    kinds = tuple(CorruptionKind(k) for k in kinds)

    def job(item):
        return _process(item, out_root, master_seed, recipe, kinds)

    if workers == 1:
        chunks = [job(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(job, items))
    manifest = DatasetManifest([e for chunk in chunks for e in chunk], master_seed)
    manifest.write(out_root / MANIFEST_NAME)
    return manifest


def expected_total(n_objects: int, n_kinds: int = len(ALL_KINDS)) -> int:
    """Number of corrupted clouds produced from ``n_objects`` partials."""
    return n_objects * n_kinds
