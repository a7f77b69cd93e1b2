"""Tab-separated interchange format.

A dataset directory holds nine UTF-8 files, one per table, each with a
header row and LF line endings.  Saving is deterministic: rows follow the
canonical order of :class:`~folkstat.dataset.Dataset`.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

from .dataset import BuildReport, Dataset, IntegrityError, build_dataset, gc_paused
from .errors import DataError


def _parse_id(text: str) -> int:
    if not text.isdigit() or not text.isascii():
        raise ValueError(f"expected a nonnegative integer id, got {text!r}")
    value = int(text)
    if value >= 2**64:
        raise ValueError(f"id {text} does not fit in 64 bits")
    return value


def _parse_flag(text: str) -> bool:
    if text not in ("0", "1"):
        raise ValueError(f"expected 0 or 1, got {text!r}")
    return text == "1"


def _parse_text(text: str) -> str:
    return text


def _parse_tag(text: str) -> str:
    if not text.strip():
        raise ValueError("empty tag")
    return text


class TableSchema(NamedTuple):
    table: str
    filename: str
    columns: tuple[str, ...]
    parsers: tuple[Callable[[str], object], ...]


SCHEMAS: tuple[TableSchema, ...] = (
    TableSchema("users", "users.tsv", ("user_id", "is_pro"), (_parse_id, _parse_flag)),
    TableSchema("photos", "photos.tsv", ("photo_id", "owner_id", "title"), (_parse_id, _parse_id, _parse_text)),
    TableSchema("tags", "phototags.tsv", ("photo_id", "tag"), (_parse_id, _parse_tag)),
    TableSchema("contacts", "contacts.tsv", ("from_id", "to_id"), (_parse_id, _parse_id)),
    TableSchema("comments", "comments.tsv", ("comment_id", "author_id", "photo_id"), (_parse_id, _parse_id, _parse_id)),
    TableSchema("favorites", "favorites.tsv", ("user_id", "photo_id"), (_parse_id, _parse_id)),
    TableSchema("groups", "groups.tsv", ("group_id", "name"), (_parse_id, _parse_text)),
    TableSchema("memberships", "memberships.tsv", ("user_id", "group_id"), (_parse_id, _parse_id)),
    TableSchema("pool", "pool.tsv", ("photo_id", "group_id"), (_parse_id, _parse_id)),
)

FILENAMES = tuple(s.filename for s in SCHEMAS)


@dataclass
class ValidationReport:
    errors: list[tuple[str, int, str]] = field(default_factory=list)
    warnings: list[tuple[str, int, str]] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def lines(self) -> list[str]:
        """Human-readable ``file:line: level: message`` lines."""
        out = [f"{f}:{n}: error: {m}" for f, n, m in self.errors]
        out += [f"{f}:{n}: warning: {m}" for f, n, m in self.warnings]
        return out


class ParseError(DataError):
    """Malformed row.  ``file`` and ``line`` locate the first offending row."""

    def __init__(self, file: str, line: int, message: str, report: ValidationReport | None = None):
        self.file = file
        self.line = line
        self.report = report
        super().__init__(f"{file}:{line}: {message}")


class FormatError(DataError):
    """A value cannot be represented in the tab-separated format."""


def _read_table(
    path: Path, schema: TableSchema, report: ValidationReport
) -> tuple[list[tuple], list[int]]:
    """Parse one file; returns the good rows and their physical line numbers."""
    name = schema.filename
    rows: list[tuple] = []
    linenos: list[int] = []
    if not path.exists():
        report.warnings.append((name, 0, "file missing, treated as empty table"))
        return rows, linenos
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        report.errors.append((name, 1, f"not valid UTF-8: {exc}"))
        return rows, linenos
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        report.errors.append((name, 1, "missing header row"))
        return rows, linenos
    header = tuple(lines[0].split("\t"))
    if header != schema.columns:
        report.errors.append((name, 1, f"header {header} does not match {schema.columns}"))
        return rows, linenos
    fast = _read_fast(lines[1:], schema)
    if fast is not None:
        return fast, list(range(2, len(lines) + 1))
    width = len(schema.columns)
    for lineno, line in enumerate(lines[1:], start=2):
        if line.endswith("\r"):
            report.errors.append((name, lineno, "CR line ending"))
            continue
        cells = line.split("\t")
        if len(cells) != width:
            report.errors.append((name, lineno, f"expected {width} columns, got {len(cells)}"))
            continue
        try:
            rows.append(tuple(p(c) for p, c in zip(schema.parsers, cells)))
        except ValueError as exc:
            report.errors.append((name, lineno, str(exc)))
        else:
            linenos.append(lineno)
    return rows, linenos


_ID_COLUMN = re.compile(r"[0-9]{1,20}(?:\n[0-9]{1,20})*")


def _read_fast(body: list[str], schema: TableSchema) -> list[tuple] | None:
    """Column-wise parse of a clean table; None if any row needs a closer look."""
    if not body:
        return []
    if any(line.endswith("\r") for line in body):
        return None
    width = len(schema.columns)
    cells = [line.split("\t") for line in body]
    if any(len(c) != width for c in cells):
        return None
    columns = list(zip(*cells))
    parsed = []
    for parser, col in zip(schema.parsers, columns):
        if parser is _parse_id:
            if not _ID_COLUMN.fullmatch("\n".join(col)):
                return None
            values = list(map(int, col))
            if max(values) >= 2**64:
                return None
            parsed.append(values)
        elif parser is _parse_flag:
            if not set(col) <= {"0", "1"}:
                return None
            parsed.append([c == "1" for c in col])
        else:
            if parser is _parse_tag and not all(c.strip() for c in col):
                return None
            parsed.append(list(col))
    return list(zip(*parsed))


def load(directory: str | os.PathLike, mode: str = "strict") -> tuple[Dataset, ValidationReport]:
    """Read a dataset directory.

    Strict mode raises :class:`ParseError` on the first malformed row (after
    scanning every file, so the attached report is complete) and
    :class:`~folkstat.dataset.IntegrityError` on dangling references; both
    carry the report as ``.report`` with file and line for every problem.
    Lenient mode skips bad rows, drops dangling records and reports both.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', not {mode!r}")
    root = Path(directory)
    if not root.is_dir():
        raise DataError(f"{root}: not a directory")
    report = ValidationReport()
    tables: dict[str, list[tuple]] = {}
    lines: dict[str, tuple[str, list[int]]] = {}
    for s in SCHEMAS:
        with gc_paused():
            rows, linenos = _read_table(root / s.filename, s, report)
        tables[s.table] = rows
        lines[s.table] = (s.filename, linenos)
    if report.errors and mode == "strict":
        f, n, m = report.errors[0]
        raise ParseError(f, n, m, report)

    def locate(table: str, index: int) -> tuple[str, int]:
        filename, linenos = lines[table]
        return filename, linenos[index]

    build_report = BuildReport()
    try:
        d = build_dataset(**tables, strict=mode == "strict", report=build_report)
    except IntegrityError as exc:
        for table, index, _, message in exc.problems:
            report.errors.append((*locate(table, index), message))
        exc.report = report
        raise
    for table, index, _, message in build_report.entries:
        report.warnings.append((*locate(table, index), f"dropped: {message}"))
    report.counts = d.counts()
    return d, report


def _check_cell(value: str, where: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise FormatError(f"{where}: tab or newline in {value!r}")
    return value


def _rows(d: Dataset, table: str) -> list[tuple]:
    if table == "users":
        return [(u.id, int(u.is_pro)) for u in d.users]
    if table == "photos":
        return [(p.id, p.owner, _check_cell(p.title, f"photo {p.id} title")) for p in d.photos]
    if table == "tags":
        return [(t.photo, _check_cell(t.tag, f"photo {t.photo} tag")) for t in d.tags]
    if table == "groups":
        return [(g.id, _check_cell(g.name, f"group {g.id} name")) for g in d.groups]
    return list(getattr(d, table))


def dumps_table(d: Dataset, schema: TableSchema) -> bytes:
    out = ["\t".join(schema.columns)]
    out.extend("\t".join(str(c) for c in row) for row in _rows(d, schema.table))
    return ("\n".join(out) + "\n").encode("utf-8")


def save(d: Dataset, directory: str | os.PathLike) -> None:
    """Write the nine table files, creating ``directory`` if needed."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    # Encode everything first so a FormatError leaves no partial output.
    payloads = {s.filename: dumps_table(d, s) for s in SCHEMAS}
    for name, data in payloads.items():
        (root / name).write_bytes(data)


def canonical_bytes(d: Dataset) -> bytes:
    """Concatenation of all table files, for byte-level comparisons."""
    return b"".join(dumps_table(d, s) for s in SCHEMAS)
