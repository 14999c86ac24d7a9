"""Multi-source encoder-decoder network: parameters, loss and gradients.

One GRU encoder plus one additive attention mechanism per input source.
The decoder starts from the mean of the encoders' last hidden states
projected by a shared matrix (``dec_init``), attends to every source at
each step, concatenates the per-source contexts, projects them to
``context_size`` and feeds the result into the decoder GRU next to the
embedding of the previous output symbol.

The loss core is weighted cross entropy

    loss = (1/B) * sum_b sum_t w[b, t] * (-log p(y[b, t] | ...))

with one weight per target step.  Plain supervision uses w = 1 on every
real step (EOS included, padding excluded); marking-based fine-tuning uses
w = delta over hypothesis symbols and 0 on the EOS step.  Gradients are
exact analytic derivatives of this expression, verified against finite
differences by ``grad_check``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..vocab import BOS, EOS, PAD, UNK, Vocab, source_units, target_units
from . import layers
from .config import ModelConfig

__all__ = [
    "EncoderArityMismatch",
    "EmptyCorpus",
    "NonFiniteLoss",
    "LengthMismatch",
    "Batch",
    "Seq2SeqModel",
    "make_batch",
    "forward_train",
    "loss_and_grads",
    "batch_loss",
    "DecodeState",
    "init_decode",
    "decode_step",
]


class EncoderArityMismatch(ValueError):
    pass


class EmptyCorpus(ValueError):
    pass


class NonFiniteLoss(RuntimeError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass
class Batch:
    """Padded id arrays for one minibatch."""

    src: list[np.ndarray]        # per encoder: B x Ti int64
    src_mask: list[np.ndarray]   # per encoder: B x Ti bool
    y_in: np.ndarray             # B x T int64, BOS-shifted
    y_out: np.ndarray            # B x T int64, target plus EOS
    weights: np.ndarray          # B x T float64, 0 on padding
    size: int


class Seq2SeqModel:
    """Parameter container; all computation lives in module functions."""

    def __init__(self, config: ModelConfig, source_vocabs: list[Vocab], target_vocab: Vocab,
                 params: dict[str, np.ndarray]):
        if len(source_vocabs) != config.n_encoders:
            raise EncoderArityMismatch(
                f"{config.n_encoders} encoders configured but {len(source_vocabs)} source vocabularies given"
            )
        self.config = config
        self.source_vocabs = source_vocabs
        self.target_vocab = target_vocab
        self.params = params

    @classmethod
    def build(cls, config: ModelConfig, source_vocabs: list[Vocab], target_vocab: Vocab) -> "Seq2SeqModel":
        if len(source_vocabs) != config.n_encoders:
            raise EncoderArityMismatch(
                f"{config.n_encoders} encoders configured but {len(source_vocabs)} source vocabularies given"
            )
        rng = np.random.default_rng(config.seed)
        e, he, hd = config.embedding_size, config.encoder_hidden, config.decoder_hidden
        a, p, n = config.attention_size, config.context_size, config.n_encoders

        def uniform(*shape):
            return rng.uniform(-config.init_scale, config.init_scale, size=shape)

        params: dict[str, np.ndarray] = {}
        for i, sv in enumerate(source_vocabs):
            params[f"enc{i}_emb"] = uniform(len(sv), e)
            params[f"enc{i}_wx"] = uniform(e, 3 * he)
            params[f"enc{i}_wh"] = uniform(he, 3 * he)
            params[f"enc{i}_b"] = np.zeros(3 * he)
            params[f"att{i}_wq"] = uniform(hd, a)
            params[f"att{i}_uh"] = uniform(he, a)
            params[f"att{i}_bq"] = np.zeros(a)
            params[f"att{i}_v"] = uniform(a)
        params["dec_emb"] = uniform(len(target_vocab), e)
        params["dec_init"] = uniform(he, hd)
        params["ctx_w"] = uniform(n * he, p)
        params["ctx_b"] = np.zeros(p)
        din = e + p + (p if config.input_feeding else 0)
        params["dec_wx"] = uniform(din, 3 * hd)
        params["dec_wh"] = uniform(hd, 3 * hd)
        params["dec_b"] = np.zeros(3 * hd)
        params["out_w"] = uniform(hd, len(target_vocab))
        params["out_b"] = np.zeros(len(target_vocab))
        return cls(config, source_vocabs, target_vocab, params)

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def copy(self) -> "Seq2SeqModel":
        return Seq2SeqModel(
            self.config, list(self.source_vocabs), self.target_vocab,
            {k: v.copy() for k, v in self.params.items()},
        )


def _encode_sources(model: Seq2SeqModel, sources: tuple[str, ...]) -> list[list[int]]:
    if len(sources) != model.config.n_encoders:
        raise EncoderArityMismatch(
            f"model expects {model.config.n_encoders} sources, got {len(sources)}"
        )
    out = []
    for vocab, text in zip(model.source_vocabs, sources):
        ids = vocab.encode(source_units(text, model.config.unit))
        # An absent source becomes a single PAD sentinel so attention always
        # has one position to normalize over.
        out.append(ids if ids else [PAD])
    return out


def _target_step_weights(model: Seq2SeqModel, target: str, char_weights: list[float] | None):
    """Target units, ids and per-step weights (EOS step appended)."""
    units = target_units(target, model.config.unit)
    ids = model.target_vocab.encode(units)
    if char_weights is None:
        w = [1.0] * (len(ids) + 1)
        return ids, w
    if len(char_weights) != len(target):
        raise LengthMismatch(
            f"reward length {len(char_weights)} != hypothesis length {len(target)}"
        )
    w = []
    pos = 0
    for u in units:
        span = char_weights[pos : pos + len(u)]
        w.append(float(sum(span) / len(span)))
        pos += len(u)
    w.append(0.0)  # EOS carries no marking feedback
    return ids, w


def make_batch(model: Seq2SeqModel, items: list[tuple]) -> Batch:
    """Build a padded batch.

    Items are (sources, target) or (sources, target, char_weights); targets
    may be None for decode-only batches.
    """
    if not items:
        raise EmptyCorpus("empty batch")
    n = model.config.n_encoders
    b = len(items)
    src_ids = [[] for _ in range(n)]
    for item in items:
        sources = item[0]
        encoded = _encode_sources(model, tuple(sources))
        for i in range(n):
            src_ids[i].append(encoded[i])
    src, src_mask = [], []
    for i in range(n):
        t_max = max(len(ids) for ids in src_ids[i])
        mat = np.full((b, t_max), PAD, dtype=np.int64)
        mask = np.zeros((b, t_max), dtype=bool)
        for r, ids in enumerate(src_ids[i]):
            mat[r, : len(ids)] = ids
            mask[r, : len(ids)] = True
        src.append(mat)
        src_mask.append(mask)

    has_target = len(items[0]) > 1 and items[0][1] is not None
    if not has_target:
        empty = np.zeros((b, 0), dtype=np.int64)
        return Batch(src, src_mask, empty, empty, np.zeros((b, 0)), b)

    encoded_targets = []
    for item in items:
        target = item[1]
        char_weights = item[2] if len(item) > 2 else None
        encoded_targets.append(_target_step_weights(model, target, char_weights))
    t_max = max(len(ids) + 1 for ids, _ in encoded_targets)
    y_in = np.full((b, t_max), PAD, dtype=np.int64)
    y_out = np.full((b, t_max), PAD, dtype=np.int64)
    weights = np.zeros((b, t_max))
    for r, (ids, w) in enumerate(encoded_targets):
        y_in[r, 0] = BOS
        y_in[r, 1 : len(ids) + 1] = ids
        y_out[r, : len(ids)] = ids
        y_out[r, len(ids)] = EOS
        weights[r, : len(w)] = w
    return Batch(src, src_mask, y_in, y_out, weights, b)


def _run_encoder(params: dict, i: int, x: np.ndarray, mask: np.ndarray):
    emb = params[f"enc{i}_emb"][x]
    wx, wh, b = params[f"enc{i}_wx"], params[f"enc{i}_wh"], params[f"enc{i}_b"]
    bsz, t_max, _ = emb.shape
    hsize = wh.shape[0]
    h = np.zeros((bsz, hsize))
    hs = np.empty((bsz, t_max, hsize))
    caches = []
    for t in range(t_max):
        m = mask[:, t].astype(float)[:, None]
        h_new, gc = layers.gru_forward(emb[:, t], h, wx, wh, b)
        h = m * h_new + (1.0 - m) * h
        hs[:, t] = h
        caches.append((gc, m))
    return hs, h, caches


def _encoder_backward(params: dict, grads: dict, i: int, x: np.ndarray,
                      dhs: np.ndarray, dh_last: np.ndarray, caches: list):
    wx, wh = params[f"enc{i}_wx"], params[f"enc{i}_wh"]
    bsz, t_max = x.shape
    demb = np.zeros((bsz, t_max, params[f"enc{i}_emb"].shape[1]))
    dh = dh_last.copy()
    for t in reversed(range(t_max)):
        dh_total = dh + dhs[:, t]
        gc, m = caches[t]
        dh_new = dh_total * m
        dx, dh_prev = layers.gru_backward(
            dh_new, gc, wx, wh, grads[f"enc{i}_wx"], grads[f"enc{i}_wh"], grads[f"enc{i}_b"]
        )
        demb[:, t] = dx
        dh = dh_prev + dh_total * (1.0 - m)
    np.add.at(grads[f"enc{i}_emb"], x, demb)


class _StepCache:
    __slots__ = ("att", "cc", "gru", "dmask", "s_out")

    def __init__(self, att, cc, gru, dmask, s_out):
        self.att = att
        self.cc = cc
        self.gru = gru
        self.dmask = dmask
        self.s_out = s_out


class _ForwardCache:
    __slots__ = ("enc_hs", "enc_caches", "uhs", "h_mean", "steps", "logp", "logits")

    def __init__(self, enc_hs, enc_caches, uhs, h_mean, steps, logp, logits):
        self.enc_hs = enc_hs
        self.enc_caches = enc_caches
        self.uhs = uhs
        self.h_mean = h_mean
        self.steps = steps
        self.logp = logp
        self.logits = logits


def forward_train(model: Seq2SeqModel, batch: Batch, dropout_rng: np.random.Generator | None = None):
    """Teacher-forced forward pass; returns (loss, cache)."""
    p = model.params
    cfg = model.config
    n = cfg.n_encoders
    bsz, t_max = batch.y_in.shape

    enc_hs, enc_last, enc_caches, uhs = [], [], [], []
    for i in range(n):
        hs, h_last, caches = _run_encoder(p, i, batch.src[i], batch.src_mask[i])
        enc_hs.append(hs)
        enc_last.append(h_last)
        enc_caches.append(caches)
        uhs.append(hs @ p[f"att{i}_uh"])
    h_mean = sum(enc_last) / n
    s = h_mean @ p["dec_init"]

    emb_y = p["dec_emb"][batch.y_in]
    csize = cfg.context_size
    p_prev = np.zeros((bsz, csize))
    vt = len(model.target_vocab)
    logits = np.empty((bsz, t_max, vt))
    steps: list[_StepCache] = []
    drop = cfg.dropout
    for t in range(t_max):
        ctxs, att_caches = [], []
        for i in range(n):
            ctx, _, ac = layers.attn_forward(
                s, enc_hs[i], uhs[i], batch.src_mask[i],
                p[f"att{i}_wq"], p[f"att{i}_bq"], p[f"att{i}_v"],
            )
            ctxs.append(ctx)
            att_caches.append(ac)
        cc = np.concatenate(ctxs, axis=1)
        pv = cc @ p["ctx_w"] + p["ctx_b"]
        parts = [emb_y[:, t], pv]
        if cfg.input_feeding:
            parts.append(p_prev)
        x = np.concatenate(parts, axis=1)
        s_new, gc = layers.gru_forward(x, s, p["dec_wx"], p["dec_wh"], p["dec_b"])
        if drop > 0.0 and dropout_rng is not None:
            dmask = (dropout_rng.random(s_new.shape) >= drop) / (1.0 - drop)
            s_out = s_new * dmask
        else:
            dmask = None
            s_out = s_new
        logits[:, t] = s_out @ p["out_w"] + p["out_b"]
        steps.append(_StepCache(att_caches, cc, gc, dmask, s_out))
        s = s_new
        p_prev = pv

    logp = layers.log_softmax(logits)
    picked = np.take_along_axis(logp, batch.y_out[:, :, None], axis=2)[:, :, 0]
    loss = float(-(batch.weights * picked).sum() / bsz)
    return loss, _ForwardCache(enc_hs, enc_caches, uhs, h_mean, steps, logp, logits)


def backward(model: Seq2SeqModel, batch: Batch, cache: _ForwardCache) -> dict[str, np.ndarray]:
    p = model.params
    cfg = model.config
    n = cfg.n_encoders
    bsz, t_max = batch.y_in.shape
    e, he, hd = cfg.embedding_size, cfg.encoder_hidden, cfg.decoder_hidden
    csize = cfg.context_size

    grads = {k: np.zeros_like(v) for k, v in p.items()}

    dlogits = np.exp(cache.logp)
    rows = np.arange(bsz)[:, None]
    cols = np.arange(t_max)[None, :]
    dlogits[rows, cols, batch.y_out] -= 1.0
    dlogits *= (batch.weights / bsz)[:, :, None]

    denc_hs = [np.zeros_like(h) for h in cache.enc_hs]
    duhs = [np.zeros_like(u) for u in cache.uhs]
    demb_y = np.zeros((bsz, t_max, e))
    ds_carry = np.zeros((bsz, hd))
    dp_carry = np.zeros((bsz, csize))

    for t in reversed(range(t_max)):
        st = cache.steps[t]
        dl = dlogits[:, t]
        grads["out_w"] += st.s_out.T @ dl
        grads["out_b"] += dl.sum(axis=0)
        ds_out = dl @ p["out_w"].T
        if st.dmask is not None:
            ds_out = ds_out * st.dmask
        ds_new = ds_out + ds_carry

        dx, ds_prev = layers.gru_backward(
            ds_new, st.gru, p["dec_wx"], p["dec_wh"],
            grads["dec_wx"], grads["dec_wh"], grads["dec_b"],
        )
        demb_y[:, t] = dx[:, :e]
        dpv = dx[:, e : e + csize] + dp_carry
        if cfg.input_feeding:
            dp_carry = dx[:, e + csize :]

        grads["ctx_w"] += st.cc.T @ dpv
        grads["ctx_b"] += dpv.sum(axis=0)
        dcc = dpv @ p["ctx_w"].T
        for i in range(n):
            dctx = dcc[:, i * he : (i + 1) * he]
            ds_prev += layers.attn_backward(
                dctx, st.att[i], cache.enc_hs[i],
                p[f"att{i}_wq"], p[f"att{i}_v"],
                grads[f"att{i}_wq"], grads[f"att{i}_bq"], grads[f"att{i}_v"],
                denc_hs[i], duhs[i],
            )
        ds_carry = ds_prev

    np.add.at(grads["dec_emb"], batch.y_in, demb_y)

    # decoder init: s0 = ((1/N) sum_i h_i) @ dec_init
    dc = ds_carry
    grads["dec_init"] += cache.h_mean.T @ dc
    dh_last = (dc @ p["dec_init"].T) / n

    for i in range(n):
        grads[f"att{i}_uh"] += np.einsum("bth,bta->ha", cache.enc_hs[i], duhs[i])
        denc_hs[i] += duhs[i] @ p[f"att{i}_uh"].T
        _encoder_backward(p, grads, i, batch.src[i], denc_hs[i], dh_last, cache.enc_caches[i])
    return grads


def loss_and_grads(model: Seq2SeqModel, batch: Batch,
                   dropout_rng: np.random.Generator | None = None):
    loss, cache = forward_train(model, batch, dropout_rng)
    return loss, backward(model, batch, cache)


def batch_loss(model: Seq2SeqModel, batch: Batch) -> float:
    loss, _ = forward_train(model, batch)
    return loss


@dataclass
class DecodeState:
    """Per-batch decoding state; encoder tensors are fixed, s/p_prev roll."""

    enc_hs: list[np.ndarray]
    uhs: list[np.ndarray]
    masks: list[np.ndarray]
    s: np.ndarray
    p_prev: np.ndarray

    def select(self, rows: np.ndarray) -> "DecodeState":
        return DecodeState(
            enc_hs=[h[rows] for h in self.enc_hs],
            uhs=[u[rows] for u in self.uhs],
            masks=[m[rows] for m in self.masks],
            s=self.s[rows],
            p_prev=self.p_prev[rows],
        )


def init_decode(model: Seq2SeqModel, batch: Batch) -> DecodeState:
    p = model.params
    n = model.config.n_encoders
    enc_hs, enc_last, uhs = [], [], []
    for i in range(n):
        hs, h_last, _ = _run_encoder(p, i, batch.src[i], batch.src_mask[i])
        enc_hs.append(hs)
        enc_last.append(h_last)
        uhs.append(hs @ p[f"att{i}_uh"])
    h_mean = sum(enc_last) / n
    s = h_mean @ p["dec_init"]
    return DecodeState(enc_hs, uhs, list(batch.src_mask), s,
                       np.zeros((batch.size, model.config.context_size)))


def decode_step(model: Seq2SeqModel, state: DecodeState, y_prev: np.ndarray):
    """Advance one decode step.

    Returns (logprobs B x V with PAD/BOS/UNK masked out, new state,
    per-encoder attention weights).
    """
    p = model.params
    cfg = model.config
    ctxs, alphas = [], []
    for i in range(cfg.n_encoders):
        ctx, alpha, _ = layers.attn_forward(
            state.s, state.enc_hs[i], state.uhs[i], state.masks[i],
            p[f"att{i}_wq"], p[f"att{i}_bq"], p[f"att{i}_v"],
        )
        ctxs.append(ctx)
        alphas.append(alpha)
    cc = np.concatenate(ctxs, axis=1)
    pv = cc @ p["ctx_w"] + p["ctx_b"]
    parts = [p["dec_emb"][y_prev], pv]
    if cfg.input_feeding:
        parts.append(state.p_prev)
    x = np.concatenate(parts, axis=1)
    s_new, _ = layers.gru_forward(x, state.s, p["dec_wx"], p["dec_wh"], p["dec_b"])
    logits = s_new @ p["out_w"] + p["out_b"]
    logits[:, [PAD, BOS, UNK]] = layers.NEG_INF
    logprobs = layers.log_softmax(logits)
    new_state = DecodeState(state.enc_hs, state.uhs, state.masks, s_new, pv)
    return logprobs, new_state, alphas
