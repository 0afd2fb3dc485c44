"""Bundled toy fixtures so every subcommand has a runnable example."""

from importlib.resources import files
from pathlib import Path


def toy_kb_path() -> Path:
    return Path(str(files(__package__) / "toy_kb.tsv"))


def toy_corpus_path() -> Path:
    return Path(str(files(__package__) / "toy_corpus.jsonl"))
