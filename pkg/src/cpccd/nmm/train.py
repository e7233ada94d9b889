"""Gradient verification and a toy clean/noisy separation trainer."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from cpccd.errors import Diverged
from cpccd.nmm import layers
from cpccd.nmm.losses import LossBreakdown
from cpccd.nmm.model import NmmConfig, init_params, objective

HISTORY_FIELDS = ("step", "l_pos", "l_neg", "l_nmm", "l_completion", "l_total",
                  "sim_clean_gt", "sim_clean_noisy")
GRAD_TOL = 1e-4
FD_STEP = 1e-5
# Central differences in f64 at h=1e-5 carry roughly 1e-11 of rounding noise
# per entry. Tensors whose gradient norms sit below this floor on both sides
# (the key bias, for one, since softmax ignores a per-row shift) count as
# agreeing; their absolute error is still reported.
GRAD_NOISE_FLOOR = 1e-8


@dataclass
class ToyData:
    f_i: np.ndarray
    f_cpgt: np.ndarray
    f_gt: np.ndarray
    target: np.ndarray  # (B, L, 3) clean points decoded from f_gt


def make_toy_data(config: NmmConfig, seed: int = 0, noise_ratio: float = 1.5) -> ToyData:
    """Synthetic features with a known clean/noisy decomposition.

    Clean features live in a random rank-r subspace. The corruption is a
    smooth-along-L signal in a disjoint random subspace, scaled to
    ``noise_ratio`` times the clean RMS, so it is visible to convolutions
    along L and orthogonal-ish to the clean content.
    """
    rng = np.random.default_rng(seed)
    b, l, d = config.b, config.l, config.d
    r = max(2, d // 8)
    basis, _ = np.linalg.qr(rng.normal(size=(d, 2 * r)))
    clean_basis, noise_basis = basis[:, :r].T, basis[:, r:].T
    f_cpgt = rng.normal(size=(b, l, r)) @ clean_basis
    pos = np.arange(l)[None, :, None]
    freq = rng.uniform(0.1, 0.6, size=(1, 1, r))
    phase = rng.uniform(0, 2 * np.pi, size=(b, 1, r))
    amp = rng.normal(size=(b, 1, r))
    noise = (amp * np.sin(freq * pos + phase)) @ noise_basis
    noise *= noise_ratio * np.sqrt((f_cpgt ** 2).mean() / max((noise ** 2).mean(), 1e-300))
    f_i = f_cpgt + noise
    # the complete shape adds content the partial lacks, in the clean subspace
    f_gt = f_cpgt + 0.3 * rng.normal(size=(b, l, r)) @ clean_basis
    to_points = rng.normal(size=(d, 3)) / np.sqrt(d)
    target = layers.l2_normalize(f_gt) @ to_points * np.sqrt(d)
    return ToyData(f_i, f_cpgt, f_gt, target)


def mean_cosine(a, b) -> float:
    """Mean cosine similarity of matching (b, l) vectors."""
    return float(np.mean(np.sum(layers.l2_normalize(a) * layers.l2_normalize(b), axis=-1)))


@dataclass
class GradCheckReport:
    rel_err: dict[str, float]
    abs_err: dict[str, float]
    tol: float = GRAD_TOL

    @property
    def max_rel_err(self) -> float:
        return max(self.rel_err.values())

    @property
    def passed(self) -> bool:
        return all(np.isfinite(v) and v < self.tol for v in self.rel_err.values())

    def lines(self) -> list[str]:
        return [f"{name:12s} rel_err={err:.3e} abs_err={self.abs_err[name]:.3e}"
                for name, err in sorted(self.rel_err.items())]


def grad_check(config: NmmConfig, seed: int = 0, params=None, data: ToyData | None = None,
               include_completion: bool = False, h: float = FD_STEP) -> GradCheckReport:
    """Compare analytic gradients with central finite differences, tensor by tensor.

    By default the checked scalar is L_NMM; ``include_completion=True`` checks
    L_total instead, which also exercises the merge projection and decoder.
    Error per tensor is ``|g_analytic - g_fd| / max(|g_analytic|, |g_fd|)``
    in the Euclidean norm, 0 when both norms are below ``GRAD_NOISE_FLOOR``.
    """
    params = {k: v.copy() for k, v in (params or init_params(config, seed)).items()}
    data = data or make_toy_data(config, seed)

    def loss():
        b, _, _ = objective(params, data.f_i, data.f_cpgt, config, data.target, grad=False,
                            include_completion=include_completion)
        return b.l_total

    _, analytic, _ = objective(params, data.f_i, data.f_cpgt, config, data.target,
                               include_completion=include_completion)
    rel, absd = {}, {}
    for name, tensor in params.items():
        fd = np.zeros_like(tensor)
        flat, gflat = tensor.reshape(-1), fd.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss()
            flat[i] = orig - h
            down = loss()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        a = analytic[name]
        diff = float(np.linalg.norm(a - fd))
        scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(fd)))
        rel[name] = 0.0 if scale < GRAD_NOISE_FLOOR else diff / scale
        absd[name] = float(np.max(np.abs(a - fd))) if a.size else 0.0
    return GradCheckReport(rel, absd)


@dataclass
class StepRecord:
    step: int
    losses: LossBreakdown
    sim_clean_gt: float
    sim_clean_noisy: float
    # max |f_i - (f_clean + f_noisy)|, tracked for the noisy-only ablation
    residual: float

    def row(self) -> list:
        b = self.losses
        return [self.step, b.l_pos, b.l_neg, b.l_nmm, b.l_completion, b.l_total,
                self.sim_clean_gt, self.sim_clean_noisy]


@dataclass
class TrainHistory:
    config: NmmConfig
    records: list[StepRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    @property
    def separation(self) -> float:
        return self.final.sim_clean_gt - self.final.sim_clean_noisy

    def l_total(self) -> np.ndarray:
        return np.array([r.losses.l_total for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HISTORY_FIELDS)
        for r in self.records:
            w.writerow([r.step] + [repr(float(v)) for v in r.row()[1:]])
        return buf.getvalue()


def train_toy(config: NmmConfig, seed: int = 0, steps: int = 500, lr: float = 1e-2,
              data: ToyData | None = None, params=None) -> TrainHistory:
    """Plain gradient descent on L_total over a fixed synthetic batch.

    Record ``s`` holds the losses and similarities evaluated with the
    parameters *before* update ``s``; the final record is taken after the
    last update.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    data = data or make_toy_data(config, seed)
    params = {k: v.copy() for k, v in (params or init_params(config, seed)).items()}
    hist = TrainHistory(config)
    for step in range(steps):
        losses, grads, out = objective(params, data.f_i, data.f_cpgt, config, data.target)
        if not np.isfinite(losses.l_total):
            raise Diverged(step)
        hist.records.append(StepRecord(
            step, losses,
            mean_cosine(out.f_clean, data.f_cpgt),
            mean_cosine(out.f_clean, out.f_noisy),
            float(np.max(np.abs(data.f_i - (out.f_clean + out.f_noisy)))),
        ))
        if step == steps - 1:
            break
        for k in params:
            params[k] -= lr * grads[k]
            if not np.all(np.isfinite(params[k])):
                raise Diverged(step, f"non-finite parameter {k} after step {step}")
    hist.params = params
    return hist


def window_increase_ok(values, window: int = 50, tol: float = 0.10) -> bool:
    """True when no value exceeds any earlier value within ``window`` steps by
    more than ``tol`` of that earlier value's magnitude."""
    v = np.asarray(values, dtype=np.float64)
    for s in range(len(v)):
        seg = v[s + 1: s + 1 + window]
        if seg.size and seg.max() - v[s] > tol * abs(v[s]):
            return False
    return True
