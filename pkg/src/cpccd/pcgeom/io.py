"""ASCII PLY and XYZ readers/writers.

PLY coordinates are written as 32-bit floats with 9 significant digits, which
round-trips float32 exactly. An optional ``label`` vertex property carries the
object/added provenance. XYZ files hold one ``x y z`` line per point written
at full double precision; ``#`` starts a comment.
"""
from __future__ import annotations

import io as _io
from pathlib import Path

import numpy as np

from cpccd.errors import FormatError, IoError
from cpccd.pcgeom.cloud import PointCloud

SUFFIXES = (".ply", ".xyz")


def write_ply(path, cloud: PointCloud, labels: bool = True) -> None:
    pts = cloud.points.astype(np.float32).astype(np.float64)
    with_labels = labels and cloud.labels is not None
    head = [
        "ply",
        "format ascii 1.0",
        f"element vertex {cloud.count}",
        "property float x",
        "property float y",
        "property float z",
    ]
    if with_labels:
        head.append("property uchar label")
    head.append("end_header")
    buf = _io.StringIO()
    buf.write("\n".join(head) + "\n")
    if cloud.count:
        if with_labels:
            data = np.column_stack([pts, cloud.labels.astype(np.float64)])
            np.savetxt(buf, data, fmt=["%.9g", "%.9g", "%.9g", "%d"])
        else:
            np.savetxt(buf, pts, fmt="%.9g")
    Path(path).write_text(buf.getvalue())


def read_ply(path) -> PointCloud:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}", path) from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FormatError(f"{path}: missing 'ply' magic")
    n_vertex = None
    props: list[str] = []
    elements: list[tuple[str, int]] = []
    body_start = None
    for i, raw in enumerate(lines[1:], start=1):
        tok = raw.split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        if tok[0] == "format":
            if len(tok) < 2 or tok[1] != "ascii":
                raise FormatError(f"{path}: only ASCII PLY is supported")
        elif tok[0] == "element":
            elements.append((tok[1], int(tok[2])))
            if tok[1] == "vertex":
                n_vertex = int(tok[2])
        elif tok[0] == "property" and elements and elements[-1][0] == "vertex":
            if tok[1] == "list":
                raise FormatError(f"{path}: list properties on vertices not supported")
            props.append(tok[-1])
        elif tok[0] == "end_header":
            body_start = i + 1
            break
    if body_start is None or n_vertex is None:
        raise FormatError(f"{path}: malformed header")
    if not {"x", "y", "z"} <= set(props):
        raise FormatError(f"{path}: vertex element lacks x/y/z")
    skip = 0
    for name, count in elements:
        if name == "vertex":
            break
        skip += count
    rows = lines[body_start + skip: body_start + skip + n_vertex]
    if len(rows) != n_vertex:
        raise FormatError(f"{path}: expected {n_vertex} vertices, found {len(rows)}")
    if n_vertex == 0:
        return PointCloud(np.empty((0, 3)))
    try:
        data = np.array([r.split()[: len(props)] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: bad vertex row ({exc})") from exc
    if data.shape[1] != len(props):
        raise FormatError(f"{path}: short vertex row")
    pts = data[:, [props.index(c) for c in "xyz"]]
    labels = data[:, props.index("label")].astype(np.uint8) if "label" in props else None
    return PointCloud(pts, labels)


def write_xyz(path, cloud: PointCloud) -> None:
    buf = _io.StringIO()
    if cloud.count:
        np.savetxt(buf, cloud.points, fmt="%.17g")
    Path(path).write_text(buf.getvalue())


def read_xyz(path) -> PointCloud:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}", path) from exc
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) < 3:
            raise FormatError(f"{path}:{lineno}: expected 'x y z'")
        try:
            rows.append([float(t) for t in tok[:3]])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return PointCloud(np.array(rows, dtype=np.float64).reshape(-1, 3))


def read_cloud(path) -> PointCloud:
    path = Path(path)
    if not path.is_file():
        raise IoError(f"no such file: {path}", path)
    suffix = path.suffix.lower()
    if suffix == ".ply":
        return read_ply(path)
    if suffix == ".xyz":
        return read_xyz(path)
    raise IoError(f"unsupported point cloud format: {path}", path)


def write_cloud(path, cloud: PointCloud) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ply":
        write_ply(path, cloud)
    elif suffix == ".xyz":
        write_xyz(path, cloud)
    else:
        raise IoError(f"unsupported point cloud format: {path}", path)
