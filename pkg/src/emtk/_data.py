"""Access to resource files bundled with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def data_path(*parts: str) -> Path:
    """Filesystem path of a bundled data file."""
    root = resources.files("emtk").joinpath("data")
    return Path(str(root.joinpath(*parts)))


def read_data_text(*parts: str) -> str:
    return data_path(*parts).read_text(encoding="utf-8")


def read_data_bytes(*parts: str) -> bytes:
    return data_path(*parts).read_bytes()


def read_word_list(*parts: str) -> frozenset[str]:
    """One lowercased entry per line; blank lines ignored."""
    words = []
    for line in read_data_text(*parts).splitlines():
        line = line.strip().lower()
        if line:
            words.append(line)
    return frozenset(words)
