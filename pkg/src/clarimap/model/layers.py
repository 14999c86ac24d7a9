"""GRU cell and additive attention, forward and backward, in numpy.

Everything is float64 and batch-first with row-vector convention
(activations are ``batch x features``, weights multiply on the right).

GRU variant with a single bias on the input side:

    r = sigmoid(x Wx_r + h Wh_r + b_r)
    z = sigmoid(x Wx_z + h Wh_z + b_z)
    n = tanh(x Wx_n + b_n + r * (h Wh_n))
    h' = (1 - z) * n + z * h

Additive attention over a batch of encoder state sequences H (B x T x He):

    score_tj = v . tanh(s Wq + b + H_j Uh)
    alpha = softmax(score + mask)
    ctx = sum_j alpha_j H_j

``H Uh`` does not depend on the decoder step, so callers precompute it once
per sequence and accumulate its gradient across steps.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "sigmoid",
    "log_softmax",
    "softmax",
    "GruCache",
    "gru_forward",
    "gru_backward",
    "AttnCache",
    "attn_forward",
    "attn_backward",
]

NEG_INF = -1e30


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


class GruCache:
    __slots__ = ("x", "h_prev", "r", "z", "n", "gh_n")

    def __init__(self, x, h_prev, r, z, n, gh_n):
        self.x = x
        self.h_prev = h_prev
        self.r = r
        self.z = z
        self.n = n
        self.gh_n = gh_n


def gru_forward(x: np.ndarray, h_prev: np.ndarray, wx: np.ndarray, wh: np.ndarray, b: np.ndarray):
    """One GRU step; returns (h_new, cache).  Gates packed [r | z | n]."""
    hsize = h_prev.shape[1]
    gx = x @ wx + b
    gh = h_prev @ wh
    r = sigmoid(gx[:, :hsize] + gh[:, :hsize])
    z = sigmoid(gx[:, hsize : 2 * hsize] + gh[:, hsize : 2 * hsize])
    gh_n = gh[:, 2 * hsize :]
    n = np.tanh(gx[:, 2 * hsize :] + r * gh_n)
    h_new = (1.0 - z) * n + z * h_prev
    return h_new, GruCache(x, h_prev, r, z, n, gh_n)


def gru_backward(dh_new: np.ndarray, cache: GruCache, wx: np.ndarray, wh: np.ndarray,
                 dwx: np.ndarray, dwh: np.ndarray, db: np.ndarray):
    """Backprop one GRU step.

    Accumulates weight gradients in place; returns (dx, dh_prev).
    """
    r, z, n, gh_n = cache.r, cache.z, cache.n, cache.gh_n
    dz = dh_new * (cache.h_prev - n)
    dn = dh_new * (1.0 - z)
    dh_prev = dh_new * z

    da_n = dn * (1.0 - n * n)
    dr = da_n * gh_n
    dgh_n = da_n * r
    da_z = dz * z * (1.0 - z)
    da_r = dr * r * (1.0 - r)

    dgx = np.concatenate([da_r, da_z, da_n], axis=1)
    dgh = np.concatenate([da_r, da_z, dgh_n], axis=1)

    dwx += cache.x.T @ dgx
    db += dgx.sum(axis=0)
    dwh += cache.h_prev.T @ dgh

    dx = dgx @ wx.T
    dh_prev += dgh @ wh.T
    return dx, dh_prev


class AttnCache:
    __slots__ = ("s_prev", "tanh_arg", "alpha")

    def __init__(self, s_prev, tanh_arg, alpha):
        self.s_prev = s_prev
        self.tanh_arg = tanh_arg
        self.alpha = alpha


def attn_forward(s_prev: np.ndarray, enc_h: np.ndarray, uh: np.ndarray, mask: np.ndarray,
                 wq: np.ndarray, bq: np.ndarray, v: np.ndarray):
    """Additive attention for one decoder step.

    s_prev: B x Hd; enc_h: B x T x He; uh = enc_h @ Uh (B x T x A);
    mask: B x T boolean (True on real positions).
    Returns (context B x He, alpha B x T, cache).
    """
    q = s_prev @ wq + bq
    tanh_arg = np.tanh(q[:, None, :] + uh)
    scores = tanh_arg @ v
    scores = np.where(mask, scores, NEG_INF)
    alpha = softmax(scores)
    ctx = np.einsum("bt,bth->bh", alpha, enc_h)
    return ctx, alpha, AttnCache(s_prev, tanh_arg, alpha)


def attn_backward(dctx: np.ndarray, cache: AttnCache, enc_h: np.ndarray,
                  wq: np.ndarray, v: np.ndarray,
                  dwq: np.ndarray, dbq: np.ndarray, dv: np.ndarray,
                  denc_h: np.ndarray, duh: np.ndarray):
    """Backprop one attention step; accumulates into the d* buffers.

    Returns ds_prev.  duh collects the gradient on the precomputed enc_h @ Uh
    term; the caller folds it into Uh and enc_h once per sequence.
    """
    alpha, tanh_arg = cache.alpha, cache.tanh_arg
    dalpha = np.einsum("bh,bth->bt", dctx, enc_h)
    denc_h += alpha[:, :, None] * dctx[:, None, :]

    # softmax backward; padded positions have alpha == 0, so they vanish
    dscores = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))

    dtanh = (1.0 - tanh_arg * tanh_arg) * (dscores[:, :, None] * v[None, None, :])
    dv += np.einsum("bta,bt->a", tanh_arg, dscores)
    duh += dtanh
    dq = dtanh.sum(axis=1)

    dwq += cache.s_prev.T @ dq
    dbq += dq.sum(axis=0)
    return dq @ wq.T
