"""Completion metrics: Chamfer distance (L1/L2), F-score and Fidelity.

Library functions return raw values in normalized object units. The report
layer (:func:`aggregate`) multiplies Chamfer and Fidelity by 1000, the scale
completion benchmarks conventionally print.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from cpccd.errors import InvalidArgument
from cpccd.pcgeom import NnIndex, PointCloud, require_nonempty

CATEGORIES = ("clean", "E_OI", "BI_W", "BI_F", "O_BOO", "D_JT", "T_R", "I_S", "R_CC")
CSV_FIELDS = ("run", "category", "count", "cd_l1", "cd_l2", "fscore", "fidelity", "delta")
DEFAULT_DELTA = 0.01
REPORT_SCALE = 1000.0


def _points(c) -> np.ndarray:
    if isinstance(c, PointCloud):
        require_nonempty(c)
        return c.points
    pts = np.ascontiguousarray(c, dtype=np.float64).reshape(-1, 3)
    require_nonempty(PointCloud(pts))
    return pts


def nearest(src: np.ndarray, dst: np.ndarray, backend: str | None = None):
    """Nearest ``dst`` index and squared distance for every ``src`` point."""
    return NnIndex(dst, backend=backend).query_sq(src)


def _directed_terms(src, dst, idx, d2, l1_mode):
    diff = dst[idx] - src
    l1 = np.abs(diff).sum(axis=1) if l1_mode == "manhattan" else np.sqrt(d2)
    return l1, d2


def chamfer_terms(pred, gt, l1_mode: str = "manhattan", backend: str | None = None):
    """Both Chamfer variants from one pair of nearest-neighbour passes.

    Neighbours are always chosen by Euclidean distance. With
    ``l1_mode="manhattan"`` the L1 variant accumulates ``|x - y|_1`` of each
    matched pair; ``"euclidean"`` accumulates ``|x - y|_2`` instead.
    """
    if l1_mode not in ("manhattan", "euclidean"):
        raise InvalidArgument(f"unknown l1_mode {l1_mode!r}")
    p, g = _points(pred), _points(gt)
    i_pg, d2_pg = nearest(p, g, backend)
    i_gp, d2_gp = nearest(g, p, backend)
    l1_a, l2_a = _directed_terms(p, g, i_pg, d2_pg, l1_mode)
    l1_b, l2_b = _directed_terms(g, p, i_gp, d2_gp, l1_mode)
    cd_l1 = float(np.sum(l1_a)) / p.shape[0] + float(np.sum(l1_b)) / g.shape[0]
    cd_l2 = float(np.sum(l2_a)) / p.shape[0] + float(np.sum(l2_b)) / g.shape[0]
    return cd_l1, cd_l2, np.sqrt(d2_pg), np.sqrt(d2_gp)


def chamfer(pred, gt, norm: str = "L1", l1_mode: str = "manhattan",
            backend: str | None = None) -> float:
    norm = norm.upper()
    if norm not in ("L1", "L2"):
        raise InvalidArgument(f"norm must be 'L1' or 'L2', got {norm!r}")
    cd_l1, cd_l2, _, _ = chamfer_terms(pred, gt, l1_mode, backend)
    return cd_l1 if norm == "L1" else cd_l2


def _fscore_from(d_pred, d_gt, delta):
    precision = float(np.count_nonzero(d_pred < delta)) / d_pred.shape[0]
    recall = float(np.count_nonzero(d_gt < delta)) / d_gt.shape[0]
    if precision + recall == 0:
        return 0.0, precision, recall
    return 2 * precision * recall / (precision + recall), precision, recall


def fscore_detail(pred, gt, delta: float = DEFAULT_DELTA, backend: str | None = None):
    """``(F, precision G, recall H)`` at threshold ``delta`` (strict ``<``)."""
    if not delta > 0:
        raise InvalidArgument(f"delta must be > 0, got {delta}")
    p, g = _points(pred), _points(gt)
    _, d2_pg = nearest(p, g, backend)
    _, d2_gp = nearest(g, p, backend)
    return _fscore_from(np.sqrt(d2_pg), np.sqrt(d2_gp), delta)


def fscore(pred, gt, delta: float = DEFAULT_DELTA, backend: str | None = None) -> float:
    return fscore_detail(pred, gt, delta, backend)[0]


def fidelity(inp, out, backend: str | None = None) -> float:
    """Mean distance from each input point to its nearest output point."""
    i, o = _points(inp), _points(out)
    _, d2 = nearest(i, o, backend)
    return float(np.sum(np.sqrt(d2))) / i.shape[0]


@dataclass(frozen=True)
class MetricValue:
    cd_l1: float
    cd_l2: float
    fscore: float
    fidelity: float | None
    delta: float
    precision: float | None = None
    recall: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.fscore <= 1.0:
            raise InvalidArgument(f"fscore {self.fscore} outside [0, 1]")
        if self.cd_l1 < 0 or self.cd_l2 < 0 or (self.fidelity is not None and self.fidelity < 0):
            raise InvalidArgument("distances must be non-negative")


def evaluate(pred, gt, delta: float = DEFAULT_DELTA, inp=None, l1_mode: str = "manhattan",
             backend: str | None = None) -> MetricValue:
    """All metrics for one prediction, sharing the nearest-neighbour passes."""
    if not delta > 0:
        raise InvalidArgument(f"delta must be > 0, got {delta}")
    cd_l1, cd_l2, d_pred, d_gt = chamfer_terms(pred, gt, l1_mode, backend)
    f, g, h = _fscore_from(d_pred, d_gt, delta)
    fid = fidelity(inp, pred, backend) if inp is not None else None
    return MetricValue(cd_l1, cd_l2, f, fid, delta, g, h)


@dataclass
class MetricReport:
    """Per ``(run, category)`` cell: mean metrics, already in report scale."""

    cells: dict[tuple[str, str], tuple[int, MetricValue]] = field(default_factory=dict)

    def runs(self) -> list[str]:
        return sorted({r for r, _ in self.cells})

    def categories(self) -> list[str]:
        present = {c for _, c in self.cells}
        return [c for c in CATEGORIES if c in present]

    def cell(self, run: str, category: str) -> MetricValue:
        return self.cells[(run, category)][1]

    def count(self, run: str, category: str) -> int:
        return self.cells[(run, category)][0]

    def rows(self):
        for run in self.runs():
            for cat in CATEGORIES:
                if (run, cat) in self.cells:
                    n, v = self.cells[(run, cat)]
                    yield run, cat, n, v

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for run, cat, n, v in self.rows():
            w.writerow([
                run, cat, n, _fmt(v.cd_l1), _fmt(v.cd_l2), _fmt(v.fscore),
                "" if v.fidelity is None else _fmt(v.fidelity), _fmt(v.delta),
            ])
        return buf.getvalue()

    def to_table(self) -> str:
        """Aligned text, one block per metric, categories in benchmark column order."""
        cats = self.categories()
        runs = self.runs()
        blocks = []
        for title, attr in (("CD-L1 (x1000)", "cd_l1"), ("CD-L2 (x1000)", "cd_l2"),
                            ("F-score", "fscore"), ("Fidelity (x1000)", "fidelity")):
            header = ["run"] + cats
            body = []
            for run in runs:
                row = [run]
                for cat in cats:
                    item = self.cells.get((run, cat))
                    val = None if item is None else getattr(item[1], attr)
                    row.append("-" if val is None else f"{val:.3f}")
                body.append(row)
            widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
            lines = [title]
            for r in [header] + body:
                lines.append("  ".join(
                    s.ljust(w) if i == 0 else s.rjust(w) for i, (s, w) in enumerate(zip(r, widths))))
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _mean(values):
    return math.fsum(values) / len(values)


def aggregate(per_cloud) -> MetricReport:
    """Average per-cloud raw metrics into report cells.

    ``per_cloud`` is an iterable of ``(run, category, MetricValue)``. Means
    use exactly rounded summation, so input order never changes the report.
    """
    per_cloud = list(per_cloud)
    if not per_cloud:
        raise InvalidArgument("nothing to aggregate")
    groups: dict[tuple[str, str], list[MetricValue]] = {}
    for run, cat, value in per_cloud:
        if cat not in CATEGORIES:
            raise InvalidArgument(f"unknown category {cat!r}")
        groups.setdefault((str(run), cat), []).append(value)
    report = MetricReport()
    for key, vals in groups.items():
        deltas = {v.delta for v in vals}
        if len(deltas) != 1:
            raise InvalidArgument(f"mixed F-score thresholds in cell {key}: {sorted(deltas)}")
        fids = [v.fidelity for v in vals if v.fidelity is not None]
        mean = MetricValue(
            cd_l1=_mean([v.cd_l1 for v in vals]) * REPORT_SCALE,
            cd_l2=_mean([v.cd_l2 for v in vals]) * REPORT_SCALE,
            fscore=min(1.0, _mean([v.fscore for v in vals])),
            fidelity=_mean(fids) * REPORT_SCALE if len(fids) == len(vals) else None,
            delta=deltas.pop(),
        )
        report.cells[key] = (len(vals), mean)
    report.cells = dict(sorted(report.cells.items()))
    return report


def read_report_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
