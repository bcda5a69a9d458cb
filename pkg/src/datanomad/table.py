"""Canonical in-memory tables and a bit-exact RFC 4180 reader/writer.

Cell text is never trimmed, case-folded or Unicode-normalized. The only
rewrite applied on input is CRLF -> LF inside quoted cells, so a re-download
on another operating system hashes the same. A leading UTF-8 byte-order mark
is dropped (and noted in ``warnings``) because spreadsheet tools add and
remove it freely.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from datanomad.errors import CsvParseError, EncodingError, StructureError
from datanomad.profiles import PlatformProfile

_BOM = "\ufeff"

# One field plus the separator that ends it.
_TOKEN = re.compile(
    r'(?:"([^"]*(?:""[^"]*)*)"|((?:[^,"\r\n]|\r(?!\n))*))(,|\r\n|\n|\Z)'
)
_NEEDS_QUOTES = re.compile(r'[,"\r\n]')


@dataclass(frozen=True)
class Column:
    name: str
    cells: tuple[str, ...]


@dataclass(frozen=True)
class CanonicalTable:
    """Ordered columns of text cells.

    Each column holds every row below the header line: first the profile's
    metadata rows (``header_row_count - 1`` of them), then the data rows.
    """

    columns: tuple[Column, ...]
    profile: PlatformProfile
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.columns:
            raise StructureError("a table needs at least one column")
        height = len(self.columns[0].cells)
        seen: set[str] = set()
        for col in self.columns:
            if len(col.cells) != height:
                raise StructureError(
                    f"column {col.name!r} has {len(col.cells)} cells, expected {height}"
                )
            if col.name in seen:
                raise StructureError(f"duplicate column name {col.name!r}")
            seen.add(col.name)
        if height < self.metadata_row_count:
            raise StructureError(
                f"table has {height + 1} rows but the {self.profile.platform_id} "
                f"profile needs {self.profile.header_row_count} header rows"
            )

    @classmethod
    def from_rows(
        cls,
        names: Sequence[str],
        rows: Iterable[Sequence[str]],
        profile: PlatformProfile,
        warnings: Sequence[str] = (),
    ) -> CanonicalTable:
        """Build a table from column names and all rows below the name row."""
        width = len(names)
        buckets: list[list[str]] = [[] for _ in range(width)]
        for row in rows:
            if len(row) != width:
                raise StructureError(f"row has {len(row)} cells, expected {width}")
            for bucket, cell in zip(buckets, row):
                bucket.append(cell)
        columns = tuple(Column(n, tuple(b)) for n, b in zip(names, buckets))
        return cls(columns, profile, tuple(warnings))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def metadata_row_count(self) -> int:
        return self.profile.header_row_count - 1

    @property
    def total_row_count(self) -> int:
        return len(self.columns[0].cells) + 1

    @property
    def data_row_count(self) -> int:
        return self.total_row_count - self.profile.header_row_count

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def index_of(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        raise KeyError(name)

    def column(self, name: str) -> Column:
        return self.columns[self.index_of(name)]

    def data_cells(self, name: str) -> tuple[str, ...]:
        return self.column(name).cells[self.metadata_row_count :]

    def rows(self) -> Iterator[tuple[str, ...]]:
        """Yield every row below the name row (metadata rows first)."""
        return zip(*(c.cells for c in self.columns))

    def data_rows(self) -> list[tuple[str, ...]]:
        return list(self.rows())[self.metadata_row_count :]

    def with_columns(self, columns: Sequence[Column]) -> CanonicalTable:
        return CanonicalTable(tuple(columns), self.profile)


def _disambiguate(names: list[str]) -> tuple[list[str], list[str]]:
    original = set(names)
    used: set[str] = set()
    out: list[str] = []
    warnings: list[str] = []
    for name in names:
        if name not in used:
            used.add(name)
            out.append(name)
            continue
        k = 2
        while f"{name}#{k}" in used or f"{name}#{k}" in original:
            k += 1
        new = f"{name}#{k}"
        used.add(new)
        out.append(new)
        warnings.append(f"duplicate column name {name!r} renamed to {new!r}")
    return out, warnings


def _records(text: str) -> list[list[str]]:
    records: list[list[str]] = []
    current: list[str] = []
    pos = 0
    end = len(text)
    match = _TOKEN.match
    sep = ""
    while pos < end:
        m = match(text, pos)
        if m is None:
            row = len(records) + 1
            if text[pos] == '"':
                raise CsvParseError("unterminated or malformed quoted field", row)
            raise CsvParseError("stray quote inside an unquoted field", row)
        quoted, bare, sep = m.groups()
        if quoted is not None:
            value = quoted.replace('""', '"')
            if "\r\n" in value:
                value = value.replace("\r\n", "\n")
        else:
            value = bare
        current.append(value)
        if sep != ",":
            records.append(current)
            current = []
        pos = m.end()
    if sep == ",":
        # "a,b," at end of input: the last field is empty
        current.append("")
        records.append(current)
    return records


def parse_csv(data: bytes, profile: PlatformProfile) -> CanonicalTable:
    """Parse an RFC 4180 export into a :class:`CanonicalTable`."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"input is not valid UTF-8 (byte offset {exc.start})") from exc
    warnings: list[str] = []
    if text.startswith(_BOM):
        text = text[1:]
        warnings.append("leading UTF-8 byte-order mark removed")

    records = _records(text)
    if len(records) < profile.header_row_count:
        raise StructureError(
            f"expected at least {profile.header_row_count} header rows, "
            f"found {len(records)} rows"
        )
    names, rename_warnings = _disambiguate(records[0])
    warnings.extend(rename_warnings)
    width = len(names)

    padded = 0
    first_padded = 0
    body = records[1:]
    for index, record in enumerate(body, start=2):
        n = len(record)
        if n == width:
            continue
        if n > width:
            raise StructureError(
                f"row {index} has {n} fields but the header has {width}"
            )
        record.extend([""] * (width - n))
        padded += 1
        first_padded = first_padded or index
    if padded:
        warnings.append(
            f"{padded} short row(s) padded with empty cells (first at row {first_padded})"
        )

    if body:
        columns = tuple(Column(n, cells) for n, cells in zip(names, zip(*body)))
    else:
        columns = tuple(Column(n, ()) for n in names)
    return CanonicalTable(columns, profile, tuple(warnings))


def _quote(cell: str) -> str:
    if _NEEDS_QUOTES.search(cell):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def serialize_csv(table: CanonicalTable) -> bytes:
    """Write ``table`` as RFC 4180 CSV (CRLF record terminators, UTF-8)."""
    lines = [",".join(_quote(n) for n in table.names)]
    lines.extend(",".join(_quote(c) for c in row) for row in table.rows())
    return ("\r\n".join(lines) + "\r\n").encode("utf-8")
