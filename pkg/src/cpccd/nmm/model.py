"""Dual-path noise management module: forward pass, losses and backprop."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cpccd.errors import InvalidArgument
from cpccd.nmm import layers
from cpccd.nmm.losses import LossBreakdown, chamfer_l1_batch, negative_loss, positive_loss

HEADS = 8
KERNELS = (1, 3, 5)
SINGLE_KERNEL = 3


@dataclass(frozen=True)
class NmmConfig:
    b: int = 4
    l: int = 16
    d: int = 64
    heads: int = HEADS
    t: float = 1.0
    clean_only: bool = False
    noisy_only: bool = False
    no_attention: bool = False
    single_scale: bool = False

    def __post_init__(self):
        if min(self.b, self.l, self.d, self.heads) < 1:
            raise InvalidArgument("B, L, D and heads must be positive")
        if self.d % self.heads:
            raise InvalidArgument(f"D={self.d} is not divisible by heads={self.heads}")
        if not self.t > 0:
            raise InvalidArgument(f"temperature must be > 0, got {self.t}")
        if self.clean_only and self.noisy_only:
            raise InvalidArgument("clean_only and noisy_only together disable both paths")

    @property
    def kernels(self) -> tuple[int, ...]:
        return (SINGLE_KERNEL,) if self.single_scale else KERNELS

    @property
    def use_clean_path(self) -> bool:
        return not self.noisy_only

    @property
    def use_noisy_path(self) -> bool:
        return not self.clean_only

    @property
    def ablation(self) -> str:
        flags = [name for name in ("clean_only", "noisy_only", "no_attention", "single_scale")
                 if getattr(self, name)]
        return "+".join(flags) or "none"


def _glorot(rng, fan_in, fan_out, shape):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(config: NmmConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases, unit layer-norm gains.

    Every tensor is created regardless of ablation flags so parameter sets are
    interchangeable; disabled branches simply get zero gradient.
    """
    rng = np.random.default_rng(seed)
    d = config.d
    p = {}
    for name in ("q", "k", "v", "o"):
        p[f"attn.w{name}"] = _glorot(rng, d, d, (d, d))
        p[f"attn.b{name}"] = np.zeros(d)
    p["ffn.w1"] = _glorot(rng, d, 4 * d, (d, 4 * d))
    p["ffn.b1"] = np.zeros(4 * d)
    p["ffn.w2"] = _glorot(rng, 4 * d, d, (4 * d, d))
    p["ffn.b2"] = np.zeros(d)
    for ln in ("ln1", "ln2"):
        p[f"{ln}.g"] = np.ones(d)
        p[f"{ln}.b"] = np.zeros(d)
    for k in config.kernels:
        p[f"conv{k}.w"] = _glorot(rng, k * d, k * d, (k, d, d))
        p[f"conv{k}.b"] = np.zeros(d)
    width = len(config.kernels) * d
    p["merge.w"] = _glorot(rng, width, d, (d, width))
    p["proj.w"] = _glorot(rng, 2 * d, d, (d, 2 * d))
    p["proj.b"] = np.zeros(d)
    p["dec.w"] = _glorot(rng, d, 3, (d, 3))
    p["dec.b"] = np.zeros(3)
    return p


def _sub(params, prefix):
    n = len(prefix) + 1
    return {k[n:]: v for k, v in params.items() if k.startswith(prefix + ".")}


def _check_input(f_i, config):
    if f_i.ndim != 3 or f_i.shape[-1] != config.d:
        raise InvalidArgument(f"expected (B, L, {config.d}) features, got {f_i.shape}")


# -- paths ---------------------------------------------------------------------

def _clean_forward(f_i, params, config):
    if config.no_attention:
        out, c_ffn = layers.ffn_forward(f_i, _sub(params, "ffn"))
        return out, ("mlp", c_ffn)
    attn, c_attn = layers.mhsa_forward(f_i, _sub(params, "attn"), config.heads)
    f_mhsa, c_ln1 = layers.layer_norm_forward(f_i + attn, params["ln1.g"], params["ln1.b"])
    ff, c_ffn = layers.ffn_forward(f_mhsa, _sub(params, "ffn"))
    out, c_ln2 = layers.layer_norm_forward(f_mhsa + ff, params["ln2.g"], params["ln2.b"])
    return out, ("transformer", c_attn, c_ln1, c_ffn, c_ln2)


def _clean_backward(d_out, cache, grads):
    if cache[0] == "mlp":
        dx, g = layers.ffn_backward(d_out, cache[1])
        _acc(grads, "ffn", g)
        return dx
    _, c_attn, c_ln1, c_ffn, c_ln2 = cache
    d_res2, g = layers.layer_norm_backward(d_out, c_ln2)
    _acc(grads, "ln2", g)
    d_mhsa, g = layers.ffn_backward(d_res2, c_ffn)
    _acc(grads, "ffn", g)
    d_mhsa = d_mhsa + d_res2
    d_res1, g = layers.layer_norm_backward(d_mhsa, c_ln1)
    _acc(grads, "ln1", g)
    dx, g = layers.mhsa_backward(d_res1, c_attn)
    _acc(grads, "attn", g)
    return dx + d_res1


def _noisy_forward(f_i, params, config):
    outs, caches = [], []
    for k in config.kernels:
        y, c = layers.conv1d_forward(f_i, params[f"conv{k}.w"], params[f"conv{k}.b"])
        outs.append(y)
        caches.append(c)
    cat = np.concatenate(outs, axis=-1)
    return cat @ params["merge.w"].T, (cat, caches)


def _noisy_backward(d_out, cache, params, config, grads):
    cat, caches = cache
    d = d_out.shape[-1]
    _acc_one(grads, "merge.w", d_out.reshape(-1, d).T @ cat.reshape(-1, cat.shape[-1]))
    d_cat = d_out @ params["merge.w"]
    dx = 0.0
    for i, (k, c) in enumerate(zip(config.kernels, caches)):
        dxi, g = layers.conv1d_backward(d_cat[..., i * d:(i + 1) * d], c)
        _acc(grads, f"conv{k}", g)
        dx = dx + dxi
    return dx


def _acc(grads, prefix, g):
    for k, v in g.items():
        _acc_one(grads, f"{prefix}.{k}", v)


def _acc_one(grads, name, v):
    grads[name] = grads[name] + v if name in grads else v


def clean_path(f_i, params, config: NmmConfig | None = None):
    """Attention + feed-forward branch (an MLP under ``no_attention``)."""
    config = config or NmmConfig(b=f_i.shape[0], l=f_i.shape[1], d=f_i.shape[2])
    _check_input(f_i, config)
    return _clean_forward(f_i, params, config)[0]


def noisy_path(f_i, params, config: NmmConfig | None = None):
    """Parallel same-padded convolutions along L, merged back to D channels."""
    config = config or NmmConfig(b=f_i.shape[0], l=f_i.shape[1], d=f_i.shape[2])
    _check_input(f_i, config)
    return _noisy_forward(f_i, params, config)[0]


@dataclass
class NmmOutput:
    f_clean: np.ndarray
    f_noisy: np.ndarray
    f_merged: np.ndarray


def forward(f_i, params, config: NmmConfig, _cache: bool = False):
    """Run the enabled paths and merge them with the learned projection.

    A disabled path contributes zeros to the merge. Under ``noisy_only`` the
    clean features are the residual ``f_i - f_noisy``.
    """
    _check_input(f_i, config)
    c_clean = c_noisy = None
    if config.use_noisy_path:
        f_noisy, c_noisy = _noisy_forward(f_i, params, config)
    else:
        f_noisy = np.zeros_like(f_i)
    if config.use_clean_path:
        f_clean, c_clean = _clean_forward(f_i, params, config)
    else:
        f_clean = f_i - f_noisy
    cat = np.concatenate([f_clean, f_noisy], axis=-1)
    f_merged = cat @ params["proj.w"].T + params["proj.b"]
    out = NmmOutput(f_clean, f_noisy, f_merged)
    if _cache:
        return out, (c_clean, c_noisy, cat)
    return out


def decode(f_merged, params):
    """Toy linear decoder: one 3D point per token."""
    return f_merged @ params["dec.w"] + params["dec.b"]


def objective(params, f_i, f_cpgt, config: NmmConfig, target=None, grad: bool = True,
              include_completion: bool = True):
    """Losses (and parameter gradients) for one batch.

    ``f_clean``, ``f_noisy`` and ``f_cpgt`` are unit-normalised along D right
    before the losses; gradients flow through the normalisation. When
    ``target`` (B, T, 3) is given, the completion term is the L1 Chamfer
    distance of the decoded merged features against it.

    Returns ``(LossBreakdown, grads or None, NmmOutput)``.
    """
    out, (c_clean, c_noisy, cat) = forward(f_i, params, config, _cache=True)
    c_hat, c_norm = layers.l2_normalize_forward(out.f_clean)
    n_hat, n_norm = layers.l2_normalize_forward(out.f_noisy)
    g_hat = layers.l2_normalize(f_cpgt)
    if grad:
        l_pos, d_c_pos, _ = positive_loss(c_hat, g_hat, grad=True)
        l_neg, d_c_neg, d_n_hat = negative_loss(c_hat, n_hat, config.t, grad=True)
    else:
        l_pos = positive_loss(c_hat, g_hat)
        l_neg = negative_loss(c_hat, n_hat, config.t)

    l_comp = 0.0
    d_pts = None
    use_completion = include_completion and target is not None
    if use_completion:
        pts = decode(out.f_merged, params)
        if grad:
            l_comp, d_pts = chamfer_l1_batch(pts, target, grad=True)
        else:
            l_comp = chamfer_l1_batch(pts, target)
    breakdown = LossBreakdown.of(l_pos, l_neg, l_comp)
    if not grad:
        return breakdown, None, out

    d = config.d
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    d_clean = layers.l2_normalize_backward(d_c_pos + d_c_neg, c_norm)
    d_noisy = layers.l2_normalize_backward(d_n_hat, n_norm)
    if use_completion:
        grads["dec.w"] = out.f_merged.reshape(-1, d).T @ d_pts.reshape(-1, 3)
        grads["dec.b"] = d_pts.reshape(-1, 3).sum(axis=0)
        d_merged = d_pts @ params["dec.w"].T
        grads["proj.w"] = d_merged.reshape(-1, d).T @ cat.reshape(-1, 2 * d)
        grads["proj.b"] = d_merged.reshape(-1, d).sum(axis=0)
        d_cat = d_merged @ params["proj.w"]
        d_clean = d_clean + d_cat[..., :d]
        d_noisy = d_noisy + d_cat[..., d:]
    if config.use_clean_path:
        _clean_backward(d_clean, c_clean, grads)
    else:
        d_noisy = d_noisy - d_clean
    if config.use_noisy_path:
        _noisy_backward(d_noisy, c_noisy, params, config, grads)
    return breakdown, grads, out
