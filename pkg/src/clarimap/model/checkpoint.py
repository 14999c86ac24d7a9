"""Self-describing model checkpoints.

A checkpoint is a .npz archive holding every parameter array plus a JSON
metadata entry with a mandatory format version, the model config and all
vocabularies.  Loading validates the version before touching anything else.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..vocab import Vocab
from .config import ModelConfig
from .network import Seq2SeqModel

__all__ = ["CheckpointError", "FORMAT_VERSION", "save_model", "load_model"]

FORMAT_VERSION = 1
_META_KEY = "__meta__"


class CheckpointError(ValueError):
    pass


def save_model(path: str | Path, model: Seq2SeqModel) -> None:
    meta = {
        "version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "source_vocabs": [{"symbols": list(v.symbols), "sep": v.sep} for v in model.source_vocabs],
        "target_vocab": {"symbols": list(model.target_vocab.symbols), "sep": model.target_vocab.sep},
    }
    arrays = dict(model.params)
    arrays[_META_KEY] = np.array(json.dumps(meta))
    np.savez(str(path), **arrays)


def load_model(path: str | Path) -> Seq2SeqModel:
    path = Path(path)
    try:
        data = np.load(str(path), allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with data:
        if _META_KEY not in data:
            raise CheckpointError(f"{path}: not a model checkpoint (metadata missing)")
        try:
            meta = json.loads(data[_META_KEY].item())
        except (json.JSONDecodeError, ValueError) as exc:
            raise CheckpointError(f"{path}: corrupt checkpoint metadata") from exc
        version = meta.get("version")
        if version is None:
            raise CheckpointError(f"{path}: checkpoint has no version field")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        config = ModelConfig.from_dict(meta["config"])
        source_vocabs = [Vocab(tuple(v["symbols"]), v["sep"]) for v in meta["source_vocabs"]]
        target_vocab = Vocab(tuple(meta["target_vocab"]["symbols"]), meta["target_vocab"]["sep"])
        params = {k: data[k] for k in data.files if k != _META_KEY}
    return Seq2SeqModel(config, source_vocabs, target_vocab, params)
