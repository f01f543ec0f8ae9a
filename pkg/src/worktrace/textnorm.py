"""Canonical tokenization shared by every text-handling stage.

One rule pipeline-wide: split on whitespace, strip leading/trailing
punctuation, lowercase for set operations. Original casing is kept in the
stored word sequences for display and export.
"""

from __future__ import annotations

import string
from collections.abc import Iterable
from importlib import resources
from pathlib import Path

_PUNCT = set(string.punctuation) | set("“”‘’–—…")

STOPWORDS_VERSION = 1


def tokenize(text: str) -> tuple[str, ...]:
    """Split raw text into whitespace-delimited tokens, casing preserved."""
    return tuple(text.split())


def canonical(token: str) -> str:
    """Lowercased token with leading/trailing punctuation stripped.

    May be empty (e.g. a token that is pure punctuation); callers drop
    empties when building sets.
    """
    start = 0
    end = len(token)
    while start < end and token[start] in _PUNCT:
        start += 1
    while end > start and token[end - 1] in _PUNCT:
        end -= 1
    return token[start:end].lower()


def canonical_set(tokens: Iterable[str]) -> frozenset[str]:
    """Set of non-empty canonical forms; duplicates collapse."""
    return frozenset(c for c in (canonical(t) for t in tokens) if c)


def _parse_number(token: str) -> float | int | None:
    """Parse a canonical token as a number, honoring thousands-separator commas.

    "2,022" and "2022" parse to the same value; malformed groupings like
    "12,34" are rejected rather than guessed at.
    """
    if not token or not token[0].isdigit():
        return None
    if "," in token:
        head, *groups = token.split(",")
        if not (head.isdigit() and 1 <= len(head) <= 3):
            return None
        tail = groups[-1]
        frac = ""
        if "." in tail:
            tail, _, frac = tail.partition(".")
            if not frac.isdigit():
                return None
        if not all(g.isdigit() and len(g) == 3 for g in groups[:-1] + [tail]):
            return None
        token = token.replace(",", "")
    try:
        value = float(token)
    except ValueError:
        return None
    if value.is_integer():
        return int(value)
    return value


def extract_numbers(
    tokens: Iterable[str],
    *,
    common_max: int = 20,
    year_range: tuple[int, int] = (1900, 2100),
) -> frozenset[float | int]:
    """Distinct numeric values in the tokens, after normalization and filtering.

    Integers in 1..common_max (list/heading numbering) and integers inside
    year_range (almost always years, not material figures) are dropped.
    """
    values: set[float | int] = set()
    for token in tokens:
        value = _parse_number(canonical(token))
        if value is None:
            continue
        if isinstance(value, int):
            if 1 <= value <= common_max:
                continue
            if year_range[0] <= value <= year_range[1]:
                continue
        values.add(value)
    return frozenset(values)


def load_stopwords(extra_path: str | Path | None = None) -> frozenset[str]:
    """Bundled English stop-word list, optionally extended by a per-study file.

    The extension file holds one word per line; blank lines and '#' comments
    are ignored. Extension words pass through the canonical rule so the file
    may carry raw casing.
    """
    words: set[str] = set()
    data = resources.files("worktrace").joinpath("data/stopwords_en.txt").read_text("utf-8")
    for line in data.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    if extra_path is not None:
        for line in Path(extra_path).read_text("utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                c = canonical(line)
                if c:
                    words.add(c)
    return frozenset(words)
