"""Delimited-table reading and writing with deterministic output.

Tables are plain CSV with one optional leading comment line of the form
``# format_version=N``. Writers always emit it; readers accept its absence
and treat the file as version 1. Floats are serialized with ``repr`` so a
re-run produces byte-identical files, and rows are written exactly in the
order given (callers sort).
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .errors import ParseError

FORMAT_VERSION = 1


def format_cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_table(
    path: str | Path,
    header: list[str],
    rows: list[list[object]] | list[tuple[object, ...]],
    *,
    format_version: int = FORMAT_VERSION,
) -> None:
    buf = io.StringIO()
    buf.write(f"# format_version={format_version}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        writer.writerow([format_cell(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def parse_table(text: str, origin: str = "<table>") -> tuple[int, list[str], list[dict[str, str]]]:
    """Parse table text as (format_version, header, rows-as-dicts)."""
    version = FORMAT_VERSION
    if text.startswith("#"):
        comment, _, text = text.partition("\n")
        comment = comment.lstrip("#").strip()
        if not comment.startswith("format_version="):
            raise ParseError(f"{origin}: unrecognized leading comment {comment!r}")
        try:
            version = int(comment.partition("=")[2])
        except ValueError:
            raise ParseError(f"{origin}: bad format_version in {comment!r}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{origin}: empty table") from None
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{origin}: line {lineno} has {len(row)} fields, expected {len(header)}")
        rows.append(dict(zip(header, row)))
    return version, header, rows


def read_table(path: str | Path) -> tuple[int, list[str], list[dict[str, str]]]:
    path = Path(path)
    return parse_table(path.read_text(encoding="utf-8"), origin=str(path))


def as_text(source: object, origin: str = "<source>") -> str:
    """Accept file objects, bytes, or str content; never paths."""
    if hasattr(source, "read"):
        source = source.read()  # type: ignore[attr-defined]
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"{origin}: not UTF-8: {exc}") from None
    if isinstance(source, str):
        return source
    raise ParseError(f"{origin}: unsupported source type {type(source).__name__}")
