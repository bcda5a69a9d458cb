"""Compare an archived table with a stored digest record."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

from datanomad.digest import DigestRecord, hash_columns
from datanomad.errors import StructureError
from datanomad.profiles import PlatformProfile
from datanomad.table import CanonicalTable

GREEN = "GREEN"
RED = "RED"
IMPORTED_MARKER = "Imported"


@dataclass(frozen=True)
class VerificationReport:
    survey_id: str
    revision: int
    removed: tuple[str, ...]
    added: tuple[str, ...]
    modified: tuple[str, ...]
    unchanged_count: int
    record_data_row_count: int
    candidate_data_row_count: int
    imported_row_count: int | None
    column_order_changed: bool
    verdict: str
    warnings: tuple[str, ...] = field(default=())

    @property
    def has_changes(self) -> bool:
        return bool(self.removed or self.added or self.modified)

    @property
    def row_count_changed(self) -> bool:
        return self.record_data_row_count != self.candidate_data_row_count

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for key in ("removed", "added", "modified", "warnings"):
            data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> VerificationReport:
        kwargs = dict(data)
        for key in ("removed", "added", "modified", "warnings"):
            kwargs[key] = tuple(kwargs.get(key, ()))
        return cls(**kwargs)


def scan_status_imported(
    candidate: CanonicalTable, profile: PlatformProfile
) -> int | None:
    """Count data rows whose status cell is exactly ``"Imported"``.

    ``None`` when the profile has no status column or the candidate lacks it.
    """
    name = profile.status_column_name
    if name is None or not candidate.has_column(name):
        return None
    return sum(1 for v in candidate.data_cells(name) if v == IMPORTED_MARKER)


def _order_changed(record_names: tuple[str, ...], candidate_names: tuple[str, ...]) -> bool:
    common = set(record_names) & set(candidate_names)
    return [n for n in record_names if n in common] != [n for n in candidate_names if n in common]


def verify(
    record: DigestRecord,
    candidate: CanonicalTable,
    *,
    revision: int = 1,
    workers: int = 1,
) -> VerificationReport:
    if candidate.profile.header_row_count != record.header_row_count:
        raise StructureError(
            f"candidate parsed with {candidate.profile.header_row_count} header rows, "
            f"record was digested with {record.header_row_count}"
        )

    recorded = {c.name: c.hash for c in record.columns}
    cand_names = candidate.names
    cand_set = set(cand_names)
    removed = tuple(n for n in record.column_names if n not in cand_set)
    added = tuple(n for n in cand_names if n not in recorded)

    shared = [c for c in candidate.columns if c.name in recorded]
    hashes = hash_columns(candidate.with_columns(shared), workers) if shared else []
    modified_set = {c.name for c, h in zip(shared, hashes) if recorded[c.name] != h}
    modified = tuple(n for n in record.column_names if n in modified_set)

    warnings: list[str] = list(candidate.warnings)
    status = candidate.profile.status_column_name
    if status is not None and status in recorded and status not in cand_set:
        warnings.append(
            f"status column {status!r} was deleted; imported rows cannot be checked"
        )
    imported = scan_status_imported(candidate, candidate.profile)
    if imported:
        warnings.append(f"{imported} data row(s) are marked {IMPORTED_MARKER!r}")
    if record.data_row_count != candidate.data_row_count:
        warnings.append(
            f"data row count changed from {record.data_row_count} to {candidate.data_row_count}"
        )

    return VerificationReport(
        survey_id=record.survey_id,
        revision=revision,
        removed=removed,
        added=added,
        modified=modified,
        unchanged_count=len(record.columns) - len(removed) - len(modified),
        record_data_row_count=record.data_row_count,
        candidate_data_row_count=candidate.data_row_count,
        imported_row_count=imported,
        column_order_changed=_order_changed(record.column_names, cand_names),
        verdict=RED if (added or modified) else GREEN,
        warnings=tuple(warnings),
    )


def render_text(report: VerificationReport) -> str:
    lines: list[str] = []
    if report.has_changes:
        lines.append("Changes detected.")
        for label, names in (
            ("Removed", report.removed),
            ("Added", report.added),
            ("Modified", report.modified),
        ):
            if names:
                lines.append(f"  - {label} columns: {', '.join(names)}")
    else:
        lines.append("No changes detected.")
    lines.append("")
    lines.append(f"Verdict: {report.verdict}")
    lines.append(f"Survey: {report.survey_id} (revision {report.revision})")
    lines.append(
        f"Data rows: {report.candidate_data_row_count} "
        f"(digest recorded {report.record_data_row_count})"
    )
    if report.imported_row_count is not None:
        lines.append(f"Imported rows: {report.imported_row_count}")
    if report.column_order_changed:
        lines.append("Column order differs from the digested file (informational).")
    for warning in report.warnings:
        lines.append(f"Warning: {warning}")
    return "\n".join(lines) + "\n"


def render_report(report: VerificationReport, format: str = "text") -> bytes:
    if format == "text":
        return render_text(report).encode("utf-8")
    if format in ("structured", "json"):
        return (json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {format!r}")
