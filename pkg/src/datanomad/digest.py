"""Column digests, salted IP pseudonyms and the digest record.

Digest format version 1 (normative, see docs/FORMAT.md):

* each cell contributes the first 8 bytes of SHA-256 over its UTF-8 bytes;
* the blocks are concatenated in row order (metadata rows first);
* the column hash is the lowercase hex SHA-256 of that byte sequence.

The column name is not part of the hashed content; it is stored alongside.
"""

from __future__ import annotations

import hashlib
import json
import re
import secrets
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Mapping

from datanomad import __version__
from datanomad.errors import ConfigurationError, StructureError
from datanomad.table import CanonicalTable, Column

FORMAT_VERSION = 1
CELL_BLOCK_BYTES = 8
SALT_BYTES = 32
IP_HASH_COLUMN = "IPHash"
TRUTHY_MARKERS = frozenset({"1", "true", "yes"})

_HEX64 = re.compile(r"^[0-9a-f]{64}$")


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def cell_block(cell: str) -> bytes:
    return hashlib.sha256(cell.encode("utf-8")).digest()[:CELL_BLOCK_BYTES]


def hash_column(column: Column) -> str:
    sha = hashlib.sha256
    blocks = b"".join(sha(c.encode("utf-8")).digest()[:CELL_BLOCK_BYTES] for c in column.cells)
    return sha(blocks).hexdigest()


def is_column_hash(value: str) -> bool:
    return bool(_HEX64.match(value))


class IpSalt:
    """Ephemeral random salt for one digest run.

    Deliberately not a dataclass: no repr of the bytes, no equality, no
    pickling, nothing that could leak it into a record or a log line.
    """

    __slots__ = ("_value",)

    def __init__(self, value: bytes | None = None) -> None:
        if value is None:
            value = secrets.token_bytes(SALT_BYTES)
        if len(value) != SALT_BYTES:
            raise ValueError(f"salt must be {SALT_BYTES} bytes")
        self._value = value

    @property
    def value(self) -> bytes:
        return self._value

    def __repr__(self) -> str:
        return "IpSalt(<redacted>)"

    def __reduce__(self):
        raise TypeError("IpSalt cannot be serialized")


def pseudonymize_ips(column: Column, salt: IpSalt) -> Column:
    prefix = hashlib.sha256(salt.value)
    cache: dict[str, str] = {}
    out = []
    for cell in column.cells:
        code = cache.get(cell)
        if code is None:
            h = prefix.copy()
            h.update(cell.encode("utf-8"))
            code = cache[cell] = h.hexdigest()
        out.append(code)
    return Column(IP_HASH_COLUMN, tuple(out))


def apply_delete_requested(
    table: CanonicalTable, column_name: str
) -> tuple[CanonicalTable, int]:
    """Drop data rows whose ``column_name`` cell is a truthy marker.

    Markers ("1", "true", "yes") are matched case-insensitively. Metadata rows
    are never removed.
    """
    if not table.has_column(column_name):
        raise ConfigurationError(f"delete-requested column {column_name!r} not in table")
    skip = table.metadata_row_count
    marks = table.column(column_name).cells
    keep = [i for i, v in enumerate(marks) if i < skip or v.lower() not in TRUTHY_MARKERS]
    removed = len(marks) - len(keep)
    if not removed:
        return table, 0
    columns = [Column(c.name, tuple(c.cells[i] for i in keep)) for c in table.columns]
    return table.with_columns(columns), removed


@dataclass(frozen=True)
class ColumnDigest:
    name: str
    hash: str

    def __post_init__(self) -> None:
        if not is_column_hash(self.hash):
            raise ValueError(f"not a 64-character lowercase hex digest: {self.hash!r}")


@dataclass(frozen=True)
class DigestRecord:
    survey_id: str
    platform_id: str
    created_at: str
    header_row_count: int
    data_row_count: int
    columns: tuple[ColumnDigest, ...]
    tool_version: str = __version__
    ip_pseudonym_column: str | None = None
    delete_requested_column: str | None = None
    deleted_requested_row_count: int = 0
    format_version: int = FORMAT_VERSION

    def __post_init__(self) -> None:
        if not self.survey_id:
            raise ConfigurationError("survey_id must be non-empty")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise StructureError("column names in a digest record must be unique")
        if self.deleted_requested_row_count < 0 or self.data_row_count < 0:
            raise StructureError("row counts must be non-negative")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def hash_for(self, name: str) -> str:
        for c in self.columns:
            if c.name == name:
                return c.hash
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": self.format_version,
            "survey_id": self.survey_id,
            "platform_id": self.platform_id,
            "created_at": self.created_at,
            "tool_version": self.tool_version,
            "header_row_count": self.header_row_count,
            "data_row_count": self.data_row_count,
            "ip_pseudonym_column": self.ip_pseudonym_column,
            "delete_requested_column": self.delete_requested_column,
            "deleted_requested_row_count": self.deleted_requested_row_count,
            "columns": [asdict(c) for c in self.columns],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DigestRecord:
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise StructureError(f"unsupported digest format version {version!r}")
        try:
            return cls(
                survey_id=data["survey_id"],
                platform_id=data["platform_id"],
                created_at=data["created_at"],
                tool_version=data["tool_version"],
                header_row_count=int(data["header_row_count"]),
                data_row_count=int(data["data_row_count"]),
                ip_pseudonym_column=data.get("ip_pseudonym_column"),
                delete_requested_column=data.get("delete_requested_column"),
                deleted_requested_row_count=int(data.get("deleted_requested_row_count", 0)),
                columns=tuple(ColumnDigest(c["name"], c["hash"]) for c in data["columns"]),
                format_version=version,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed digest record: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


@dataclass(frozen=True)
class DigestOptions:
    survey_id: str
    ip_option: bool = False
    delete_requested_column: str | None = None
    workers: int = 1
    salt: IpSalt | None = field(default=None, repr=False, compare=False)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def hash_columns(table: CanonicalTable, workers: int = 1) -> list[str]:
    """Hash every column, optionally in a thread pool; order is preserved."""
    if workers <= 1 or len(table.columns) < 2:
        return [hash_column(c) for c in table.columns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(hash_column, table.columns))


def digest_table(
    table: CanonicalTable, options: DigestOptions
) -> tuple[DigestRecord, CanonicalTable]:
    """Run the digest pipeline.

    Order: delete-requested removal, then IP pseudonymization (the profile's
    IP column is replaced in place by ``IPHash``), then column hashing.
    Returns the record and the table as it should be saved locally.
    """
    if not options.survey_id:
        raise ConfigurationError("survey_id must be non-empty")
    profile = table.profile

    removed = 0
    if options.delete_requested_column is not None:
        table, removed = apply_delete_requested(table, options.delete_requested_column)

    ip_column = None
    if options.ip_option:
        ip_column = profile.ip_column_name
        if ip_column is None:
            raise ConfigurationError(
                f"IP option requested but the {profile.platform_id} profile has no IP column"
            )
        if not table.has_column(ip_column):
            raise ConfigurationError(f"IP column {ip_column!r} not found in table")
        if ip_column != IP_HASH_COLUMN and table.has_column(IP_HASH_COLUMN):
            raise ConfigurationError(f"table already has a {IP_HASH_COLUMN!r} column")
        salt = options.salt or IpSalt()
        idx = table.index_of(ip_column)
        columns = list(table.columns)
        columns[idx] = pseudonymize_ips(columns[idx], salt)
        del salt
        table = table.with_columns(columns)

    hashes = hash_columns(table, options.workers)
    record = DigestRecord(
        survey_id=options.survey_id,
        platform_id=profile.platform_id,
        created_at=_utc_now(),
        header_row_count=profile.header_row_count,
        data_row_count=table.data_row_count,
        ip_pseudonym_column=IP_HASH_COLUMN if ip_column else None,
        delete_requested_column=options.delete_requested_column,
        deleted_requested_row_count=removed,
        columns=tuple(ColumnDigest(c.name, h) for c, h in zip(table.columns, hashes)),
    )
    return record, table
