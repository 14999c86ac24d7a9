"""Layer-level checks: forward shapes, invariants, and finite differences."""

import numpy as np
import pytest

from clarimap.model.layers import (
    NEG_INF,
    attn_forward,
    attn_backward,
    gru_forward,
    gru_backward,
    log_softmax,
    sigmoid,
    softmax,
)


def rand(shape, rng, scale=0.5):
    return rng.uniform(-scale, scale, size=shape)


class TestActivations:
    def test_sigmoid_extremes_are_finite(self):
        x = np.array([-1000.0, -30.0, 0.0, 30.0, 1000.0])
        y = sigmoid(x)
        assert np.all(np.isfinite(y))
        assert y[0] == pytest.approx(0.0, abs=1e-12)
        assert y[2] == pytest.approx(0.5)
        assert y[-1] == pytest.approx(1.0)

    def test_sigmoid_symmetry(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=50) * 10
        assert np.allclose(sigmoid(x) + sigmoid(-x), 1.0)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        logits = rng.normal(size=(4, 9)) * 20
        p = softmax(logits)
        assert np.allclose(p.sum(axis=-1), 1.0)
        assert np.all(p >= 0)

    def test_log_softmax_handles_neg_inf_mask(self):
        logits = np.array([[1.0, NEG_INF, 2.0]])
        p = softmax(logits)
        assert p[0, 1] == 0.0
        assert p[0].sum() == pytest.approx(1.0)

    def test_log_softmax_matches_naive(self):
        rng = np.random.default_rng(2)
        logits = rng.normal(size=(3, 7))
        naive = np.log(np.exp(logits) / np.exp(logits).sum(axis=-1, keepdims=True))
        assert np.allclose(log_softmax(logits), naive)


class TestGru:
    def setup_method(self):
        self.rng = np.random.default_rng(7)
        self.B, self.E, self.H = 3, 5, 4
        self.wx = rand((self.E, 3 * self.H), self.rng)
        self.wh = rand((self.H, 3 * self.H), self.rng)
        self.b = rand((3 * self.H,), self.rng)
        self.x = rand((self.B, self.E), self.rng)
        self.h = rand((self.B, self.H), self.rng)

    def test_forward_shape_and_interpolation_bounds(self):
        h_new, _ = gru_forward(self.x, self.h, self.wx, self.wh, self.b)
        assert h_new.shape == (self.B, self.H)
        # h' = (1-z) n + z h stays inside the hull of tanh range and h_prev
        bound = np.maximum(np.abs(self.h), 1.0) + 1e-12
        assert np.all(np.abs(h_new) <= bound)

    def test_backward_matches_finite_differences(self):
        eps = 1e-6
        dh_new = rand((self.B, self.H), self.rng)

        def loss(x, h, wx, wh, b):
            out, _ = gru_forward(x, h, wx, wh, b)
            return float((out * dh_new).sum())

        _, cache = gru_forward(self.x, self.h, self.wx, self.wh, self.b)
        dwx = np.zeros_like(self.wx)
        dwh = np.zeros_like(self.wh)
        db = np.zeros_like(self.b)
        dx, dh_prev = gru_backward(dh_new, cache, self.wx, self.wh, dwx, dwh, db)
        dh_prev = dh_prev.copy()

        for name, arr, grad in [("x", self.x, dx), ("h", self.h, dh_prev),
                                ("wx", self.wx, dwx), ("wh", self.wh, dwh),
                                ("b", self.b, db)]:
            flat = arr.reshape(-1)
            for idx in self.rng.choice(flat.size, size=min(6, flat.size), replace=False):
                orig = flat[idx]
                flat[idx] = orig + eps
                up = loss(self.x, self.h, self.wx, self.wh, self.b)
                flat[idx] = orig - eps
                down = loss(self.x, self.h, self.wx, self.wh, self.b)
                flat[idx] = orig
                numeric = (up - down) / (2 * eps)
                analytic = grad.reshape(-1)[idx]
                assert analytic == pytest.approx(numeric, abs=1e-7), name


class TestAttention:
    def setup_method(self):
        self.rng = np.random.default_rng(3)
        self.B, self.T, self.He, self.Hd, self.A = 2, 5, 4, 6, 3
        self.wq = rand((self.Hd, self.A), self.rng)
        self.bq = rand((self.A,), self.rng)
        self.v = rand((self.A,), self.rng)
        self.uh = rand((self.B, self.T, self.A), self.rng)
        self.enc_h = rand((self.B, self.T, self.He), self.rng)
        self.s = rand((self.B, self.Hd), self.rng)
        self.mask = np.ones((self.B, self.T), dtype=bool)
        self.mask[1, 3:] = False

    def test_weights_are_a_distribution_over_real_positions(self):
        _, alpha, _ = attn_forward(self.s, self.enc_h, self.uh, self.mask,
                                   self.wq, self.bq, self.v)
        assert np.allclose(alpha.sum(axis=1), 1.0)
        assert np.all(alpha[1, 3:] == 0.0)

    def test_context_is_convex_combination(self):
        ctx, alpha, _ = attn_forward(self.s, self.enc_h, self.uh, self.mask,
                                     self.wq, self.bq, self.v)
        want = np.einsum("bt,bth->bh", alpha, self.enc_h)
        assert np.allclose(ctx, want)

    def test_backward_matches_finite_differences(self):
        eps = 1e-6
        dctx = rand((self.B, self.He), self.rng)

        def loss(s, enc_h, uh, wq, bq, v):
            ctx, _, _ = attn_forward(s, enc_h, uh, self.mask, wq, bq, v)
            return float((ctx * dctx).sum())

        _, _, cache = attn_forward(self.s, self.enc_h, self.uh, self.mask,
                                   self.wq, self.bq, self.v)
        dwq = np.zeros_like(self.wq)
        dbq = np.zeros_like(self.bq)
        dv = np.zeros_like(self.v)
        denc = np.zeros_like(self.enc_h)
        duh = np.zeros_like(self.uh)
        ds = attn_backward(dctx, cache, self.enc_h, self.wq, self.v,
                           dwq, dbq, dv, denc, duh)

        for name, arr, grad in [("s", self.s, ds), ("enc_h", self.enc_h, denc),
                                ("uh", self.uh, duh), ("wq", self.wq, dwq),
                                ("bq", self.bq, dbq), ("v", self.v, dv)]:
            flat = arr.reshape(-1)
            for idx in self.rng.choice(flat.size, size=min(6, flat.size), replace=False):
                orig = flat[idx]
                flat[idx] = orig + eps
                up = loss(self.s, self.enc_h, self.uh, self.wq, self.bq, self.v)
                flat[idx] = orig - eps
                down = loss(self.s, self.enc_h, self.uh, self.wq, self.bq, self.v)
                flat[idx] = orig
                numeric = (up - down) / (2 * eps)
                analytic = grad.reshape(-1)[idx]
                assert analytic == pytest.approx(numeric, abs=1e-7), name
