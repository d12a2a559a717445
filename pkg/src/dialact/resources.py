"""Access to the bundled data files (default grammar, fixtures, lexicon)."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

__all__ = ["bundled_path"]


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    path = Path(str(files("dialact").joinpath("data", name)))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled data file named {name!r}")
    return path
