"""Bundled desk-scale fixtures: datasets, lexicons, embeddings, and victims.

Regenerate with ``python scripts/make_fixtures.py`` from the repository root.
"""

from importlib import resources
from pathlib import Path


def path(name: str) -> Path:
    """Filesystem path of a bundled data file."""
    p = resources.files(__package__) / name
    if not p.is_file():
        raise FileNotFoundError(f"no bundled data file named {name!r}")
    return Path(str(p))
