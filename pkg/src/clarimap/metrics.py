"""Evaluation metrics: exact match, answer F1, and paired significance.

Correctness is canonical-parse equality; nothing here executes queries
against a map, so "answer" means the parse string standing in for one.
The significance test is paired approximate randomization: per-example
scores of two systems are swapped by coin flip R times and the observed
mean difference is ranked among the permuted ones, with +1 smoothing so
p is never exactly 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import mrl

__all__ = [
    "LengthMismatch",
    "EvalReport",
    "exact_match",
    "f1_report",
    "approx_randomization",
    "exhaustive_sign_test",
]


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EvalReport:
    exact_match: float
    precision: float
    recall: float
    f1: float
    total: int
    correct: int
    non_empty: int

    def to_json(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "total": self.total,
            "correct": self.correct,
            "non_empty": self.non_empty,
        }

    def format_table(self, system: str = "model") -> str:
        header = f"{'System':<12} {'Accuracy':>9} {'F1':>7}"
        row = f"{system:<12} {100 * self.exact_match:>9.2f} {self.f1:>7.2f}"
        return header + "\n" + row


def _check_lengths(pred: Sequence[str], gold: Sequence[str]) -> None:
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gold)} references")


def _is_empty(text: str) -> bool:
    if not text.strip():
        return True
    try:
        mrl.parse_mrl(text)
    except mrl.MrlError:
        return True
    return False


def exact_match(pred: Sequence[str], gold: Sequence[str]) -> float:
    """Fraction of pairs equal after whitespace canonicalization."""
    _check_lengths(pred, gold)
    if not pred:
        return 0.0
    hits = sum(1 for p, g in zip(pred, gold)
               if mrl.canonicalize(p) == mrl.canonicalize(g))
    return hits / len(pred)


def f1_report(pred: Sequence[str], gold: Sequence[str]) -> EvalReport:
    """Recall over all examples, precision over non-empty parseable ones.

    Percentages; F1 is the harmonic mean, 0 when either side is 0.
    """
    _check_lengths(pred, gold)
    total = len(pred)
    non_empty = 0
    correct = 0
    for p, g in zip(pred, gold):
        if _is_empty(p):
            continue
        non_empty += 1
        if mrl.canonicalize(p) == mrl.canonicalize(g):
            correct += 1
    recall = 100.0 * correct / total if total else 0.0
    precision = 100.0 * correct / non_empty if non_empty else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(
        exact_match=correct / total if total else 0.0,
        precision=precision, recall=recall, f1=f1,
        total=total, correct=correct, non_empty=non_empty,
    )


def approx_randomization(a: Sequence[float], b: Sequence[float],
                         rounds: int = 10000, seed: int = 0,
                         metric: Callable[[np.ndarray], float] | None = None) -> float:
    """Two-sided paired randomization p-value for mean(a) vs mean(b).

    ``metric`` maps a score vector to a scalar (default: mean); with the
    default the permutation loop is a single matrix product.
    """
    _check_lengths(a, b)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.size == 0:
        return 1.0
    rng = np.random.default_rng(seed)
    if metric is None:
        diff = av - bv
        obs = abs(float(diff.mean()))
        signs = rng.integers(0, 2, size=(rounds, diff.size)) * 2 - 1
        perm = np.abs(signs @ diff) / diff.size
        count = int((perm >= obs - 1e-12).sum())
    else:
        obs = abs(metric(av) - metric(bv))
        count = 0
        for _ in range(rounds):
            flip = rng.integers(0, 2, size=av.size).astype(bool)
            pa = np.where(flip, bv, av)
            pb = np.where(flip, av, bv)
            if abs(metric(pa) - metric(pb)) >= obs - 1e-12:
                count += 1
    return (count + 1) / (rounds + 1)


def exhaustive_sign_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Exact probability that a random pair swap matches |mean(a)-mean(b)|.

    Enumerates every sign pattern over the nonzero differences, so it is
    only usable for small lists; serves as the oracle for the sampled test.
    """
    _check_lengths(a, b)
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.size == 0:
        return 1.0
    diff = av - bv
    nz = diff[diff != 0]
    obs = abs(float(diff.mean()))
    k = nz.size
    if k > 20:
        raise ValueError(f"{k} nonzero pairs is too many to enumerate")
    if k == 0:
        return 1.0
    patterns = np.arange(2 ** k)[:, None] >> np.arange(k)[None, :] & 1
    signs = patterns * 2 - 1
    perm = np.abs(signs @ nz) / diff.size
    return float((perm >= obs - 1e-12).sum() / 2 ** k)
