"""Model and training configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

__all__ = ["ModelConfig"]


@dataclass
class ModelConfig:
    """Architecture and optimization settings.

    Sizes default to the full-scale recipe (620/400/800, single-layer GRU
    encoder and decoder, additive attention); tests override them with tiny
    values.  ``n_encoders`` > 1 gives one encoder plus one attention
    mechanism per input source; attention contexts are concatenated and
    linearly projected to ``context_size`` before entering the decoder cell.
    """

    embedding_size: int = 620
    encoder_hidden: int = 400
    decoder_hidden: int = 800
    attention_size: int = 400
    context_size: int = 400
    n_encoders: int = 1
    encoder_layers: int = 1
    decoder_layers: int = 1
    cell: str = "gru"
    attention: str = "additive"
    unit: str = "char"
    input_feeding: bool = False

    max_decode_len: int | None = None
    seed: int = 0
    init_scale: float = 0.08
    learning_rate: float = 0.5
    batch_size: int = 16
    epochs: int = 50
    clip_norm: float = 5.0
    dropout: float = 0.0
    stop_at_train_em: float | None = None
    eval_every: int = 1

    def __post_init__(self) -> None:
        for name in ("embedding_size", "encoder_hidden", "decoder_hidden",
                     "attention_size", "context_size", "n_encoders"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cell != "gru":
            raise ValueError(f"unsupported recurrent cell {self.cell!r}")
        if self.attention != "additive":
            raise ValueError(f"unsupported attention {self.attention!r}")
        if self.encoder_layers != 1 or self.decoder_layers != 1:
            raise ValueError("only single-layer encoders/decoders are supported")
        if self.unit not in ("char", "token"):
            raise ValueError(f"unknown unit {self.unit!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)
