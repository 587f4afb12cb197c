"""Tiny transformer builders; no pretrained checkpoints, everything is
constructed locally from a config with seeded initialization."""

from __future__ import annotations

from pathlib import Path

import torch
from transformers import GPT2Config, GPT2LMHeadModel
from transformers.utils import logging as hf_logging

hf_logging.set_verbosity_error()
hf_logging.disable_progress_bar()

MAX_POSITIONS = 256

# built-in model identifiers; anything else is treated as a filesystem path
TINY_CAUSAL = "tiny-causal"


def tiny_config(vocab_size: int) -> GPT2Config:
    return GPT2Config(
        vocab_size=vocab_size,
        n_positions=MAX_POSITIONS,
        n_embd=64,
        n_layer=2,
        n_head=2,
        bos_token_id=2,
        eos_token_id=2,
        pad_token_id=0,
    )


def build_tiny_causal(vocab_size: int, seed: int) -> GPT2LMHeadModel:
    torch.manual_seed(seed)
    model = GPT2LMHeadModel(tiny_config(vocab_size))
    model.eval()
    return model


def resolve_device(hint: str | None) -> torch.device:
    if hint and hint != "cpu" and torch.cuda.is_available():
        return torch.device(hint)
    return torch.device("cpu")


def save_artifact(model: GPT2LMHeadModel, vocab, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    vocab.save(out_dir / "vocab.json")


def load_artifact(path):
    from qprune_sidecar.vocab import WordVocab

    path = Path(path)
    model = GPT2LMHeadModel.from_pretrained(path)
    model.eval()
    return model, WordVocab.load(path / "vocab.json")
