"""Bundled example cases."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

#: name -> one-line description
BUNDLED = {
    "smib": "single hydro unit against an infinite bus over a 60 km line",
    "three_machine": "nine-bus, three-machine system with WSCC topology",
    "krps35": "synthetic 35-bus 132 kV grid with six generating stations",
}


def bundled_path(name: str) -> Path:
    """Path of a bundled case given its name, with or without ``.case``."""
    stem = name[:-5] if name.endswith(".case") else name
    if stem not in BUNDLED:
        raise KeyError(name)
    return Path(str(resources.files(__name__).joinpath(f"{stem}.case")))


def resolve_case(name_or_path) -> Path:
    """An existing file path wins; otherwise fall back to the bundled corpus."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    try:
        return bundled_path(p.name)
    except KeyError:
        raise FileNotFoundError(f"no case file or bundled case named {str(name_or_path)!r}") from None
