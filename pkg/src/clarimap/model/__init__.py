"""Character-level multi-source encoder-decoder with additive attention."""

from .checkpoint import CheckpointError, FORMAT_VERSION, load_model, save_model
from .config import ModelConfig
from .decoding import Hypothesis, beam_search, decode_greedy, decode_greedy_batch
from .gradcheck import grad_check
from .network import (
    EmptyCorpus,
    EncoderArityMismatch,
    LengthMismatch,
    NonFiniteLoss,
    Seq2SeqModel,
    make_batch,
)
from .training import (
    CharReward,
    TraceRow,
    build_vocabs,
    exact_match,
    train_supervised,
    train_weighted,
    write_trace_csv,
)

__all__ = [
    "CheckpointError",
    "FORMAT_VERSION",
    "load_model",
    "save_model",
    "ModelConfig",
    "Hypothesis",
    "beam_search",
    "decode_greedy",
    "decode_greedy_batch",
    "grad_check",
    "EmptyCorpus",
    "EncoderArityMismatch",
    "LengthMismatch",
    "NonFiniteLoss",
    "Seq2SeqModel",
    "make_batch",
    "CharReward",
    "TraceRow",
    "build_vocabs",
    "exact_match",
    "train_supervised",
    "train_weighted",
    "write_trace_csv",
]
