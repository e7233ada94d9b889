"""Differentiable building blocks in plain numpy.

Each ``*_forward`` returns ``(out, cache)`` and the matching ``*_backward``
takes ``(dout, cache)`` and returns the input gradient plus a dict of
parameter gradients. Tensors are laid out (B, L, D).
"""
from __future__ import annotations

import numpy as np

from cpccd.errors import InvalidArgument

LN_EPS = 1e-5
NORM_EPS = 1e-12


# -- layer norm ---------------------------------------------------------------

def layer_norm_forward(x, gain, bias, eps=LN_EPS):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return xhat * gain + bias, (xhat, inv, gain)


def layer_norm_backward(dout, cache):
    xhat, inv, gain = cache
    d = xhat.shape[-1]
    dgain = (dout * xhat).reshape(-1, d).sum(axis=0)
    dbias = dout.reshape(-1, d).sum(axis=0)
    dxhat = dout * gain
    dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, {"g": dgain, "b": dbias}


def layer_norm(x, gain, bias, eps=LN_EPS):
    return layer_norm_forward(x, gain, bias, eps)[0]


# -- multi-head self-attention ------------------------------------------------

def _split_heads(x, heads):
    b, l, d = x.shape
    return x.reshape(b, l, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, l, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, l, h * dh)


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def mhsa_forward(x, p, heads):
    """Scaled dot-product self-attention over L with ``heads`` heads.

    ``p`` holds ``wq, bq, wk, bk, wv, bv, wo, bo`` with (D, D) weights applied
    as ``x @ w``.
    """
    if x.ndim != 3:
        raise InvalidArgument(f"expected a (B, L, D) tensor, got shape {x.shape}")
    d = x.shape[-1]
    if d % heads:
        raise InvalidArgument(f"D={d} not divisible by {heads} heads")
    if p["wq"].shape != (d, d):
        raise InvalidArgument(f"attention weights are {p['wq'].shape}, input D={d}")
    q = _split_heads(x @ p["wq"] + p["bq"], heads)
    k = _split_heads(x @ p["wk"] + p["bk"], heads)
    v = _split_heads(x @ p["wv"] + p["bv"], heads)
    scale = 1.0 / np.sqrt(d // heads)
    attn = softmax(q @ k.transpose(0, 1, 3, 2) * scale)
    o = _merge_heads(attn @ v)
    out = o @ p["wo"] + p["bo"]
    return out, (x, q, k, v, attn, o, scale, heads, p)


def mhsa_backward(dout, cache):
    x, q, k, v, attn, o, scale, heads, p = cache
    d = x.shape[-1]
    grads = {
        "wo": o.reshape(-1, d).T @ dout.reshape(-1, d),
        "bo": dout.reshape(-1, d).sum(axis=0),
    }
    do = _split_heads(dout @ p["wo"].T, heads)
    dattn = do @ v.transpose(0, 1, 3, 2)
    dv = attn.transpose(0, 1, 3, 2) @ do
    ds = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True)) * scale
    dq = ds @ k
    dk = ds.transpose(0, 1, 3, 2) @ q
    dx = np.zeros_like(x)
    xf = x.reshape(-1, d)
    for name, dh in (("q", dq), ("k", dk), ("v", dv)):
        dflat = _merge_heads(dh)
        grads["w" + name] = xf.T @ dflat.reshape(-1, d)
        grads["b" + name] = dflat.reshape(-1, d).sum(axis=0)
        dx += dflat @ p["w" + name].T
    return dx, grads


def attention_weights(x, p, heads):
    return mhsa_forward(x, p, heads)[1][4]


# -- position-wise feed-forward ----------------------------------------------

def ffn_forward(x, p):
    h = x @ p["w1"] + p["b1"]
    a = np.maximum(h, 0.0)
    return a @ p["w2"] + p["b2"], (x, h, a, p)


def ffn_backward(dout, cache):
    x, h, a, p = cache
    d_out = dout.shape[-1]
    d_hid = a.shape[-1]
    grads = {
        "w2": a.reshape(-1, d_hid).T @ dout.reshape(-1, d_out),
        "b2": dout.reshape(-1, d_out).sum(axis=0),
    }
    dh = (dout @ p["w2"].T) * (h > 0)
    grads["w1"] = x.reshape(-1, x.shape[-1]).T @ dh.reshape(-1, d_hid)
    grads["b1"] = dh.reshape(-1, d_hid).sum(axis=0)
    return dh @ p["w1"].T, grads


# -- same-padded 1D convolution along L --------------------------------------

def conv1d_forward(x, w, b):
    """Convolve (B, L, Din) along L with kernel ``w`` of shape (k, Din, Dout).

    Zero padding of ``(k - 1) // 2`` on each side keeps length L (k odd).
    """
    k = w.shape[0]
    if k % 2 == 0:
        raise InvalidArgument(f"kernel size must be odd, got {k}")
    pad = (k - 1) // 2
    _, l, _ = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    out = np.zeros(x.shape[:2] + (w.shape[2],))
    for j in range(k):
        out += xp[:, j:j + l, :] @ w[j]
    return out + b, (xp, w, pad, l)


def conv1d_backward(dout, cache):
    xp, w, pad, l = cache
    k, din, dout_ch = w.shape
    dxp = np.zeros_like(xp)
    dw = np.empty_like(w)
    dflat = dout.reshape(-1, dout_ch)
    for j in range(k):
        win = xp[:, j:j + l, :]
        dw[j] = win.reshape(-1, din).T @ dflat
        dxp[:, j:j + l, :] += dout @ w[j].T
    return dxp[:, pad:pad + l, :], {"w": dw, "b": dflat.sum(axis=0)}


# -- L2 normalisation along D -------------------------------------------------

def l2_normalize_forward(x, eps=NORM_EPS):
    norm = np.sqrt((x * x).sum(axis=-1, keepdims=True))
    denom = np.maximum(norm, eps)
    y = x / denom
    return y, (y, denom, norm > eps)


def l2_normalize_backward(dy, cache):
    y, denom, active = cache
    proj = (y * dy).sum(axis=-1, keepdims=True)
    return np.where(active, (dy - y * proj) / denom, dy / denom)


def l2_normalize(x, eps=NORM_EPS):
    return l2_normalize_forward(x, eps)[0]
