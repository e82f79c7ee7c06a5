"""Name and value normalization shared by the dictionary, ingest, and validators.

Two distinct normal forms are used throughout the package:

* attribute *names* are compared case-insensitively with underscores treated
  as spaces (display names vary between ``Host_Age``, ``host age``, ...);
* attribute *values* are compared case-insensitively with whitespace collapsed
  but underscores preserved, so ``lung_squamous_carcinoma`` does not silently
  equal ``lung squamous carcinoma``.
"""

from __future__ import annotations

__all__ = ["normalize_name", "normalize_value"]


def normalize_name(raw: str) -> str:
    """Normal form for attribute names: lower-case, trimmed, underscores as
    spaces, internal whitespace runs collapsed to a single space."""
    return " ".join(raw.replace("_", " ").split()).lower()


def normalize_value(raw: str) -> str:
    """Normal form for attribute values: case-folded, trimmed, internal
    whitespace collapsed. Underscores are kept verbatim."""
    return " ".join(raw.split()).casefold()
