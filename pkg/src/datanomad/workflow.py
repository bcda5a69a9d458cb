"""Digest and verify workflows shared by the CLI and the HTTP service."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from datanomad.digest import DigestOptions, DigestRecord, digest_table
from datanomad.profiles import PlatformProfile, get_profile
from datanomad.store import DigestStore
from datanomad.table import CanonicalTable, parse_csv
from datanomad.verify import VerificationReport, verify


@dataclass(frozen=True)
class DigestOutcome:
    record: DigestRecord
    revision: int
    table: CanonicalTable

    def summary(self) -> dict:
        r = self.record
        return {
            "survey_id": r.survey_id,
            "revision": self.revision,
            "platform_id": r.platform_id,
            "created_at": r.created_at,
            "header_row_count": r.header_row_count,
            "data_row_count": r.data_row_count,
            "ip_pseudonym_column": r.ip_pseudonym_column,
            "delete_requested_column": r.delete_requested_column,
            "deleted_requested_row_count": r.deleted_requested_row_count,
            "columns": [{"name": c.name, "hash": c.hash} for c in r.columns],
            "warnings": list(self.table.warnings),
        }


def digest_bytes(
    raw: bytes,
    profile: PlatformProfile,
    options: DigestOptions,
    store: DigestStore,
    force: bool = False,
) -> DigestOutcome:
    """Parse, digest and store ``raw``. The bytes themselves are never stored."""
    table = parse_csv(raw, profile)
    record, saved = digest_table(table, options)
    revision = store.put(record, force=force)
    saved = CanonicalTable(saved.columns, saved.profile, table.warnings)
    return DigestOutcome(record, revision, saved)


def profile_for_record(
    record: DigestRecord, profiles: Mapping[str, PlatformProfile] | None = None
) -> PlatformProfile:
    return get_profile(
        record.platform_id, header_row_count=record.header_row_count, profiles=profiles
    )


def verify_bytes(
    store: DigestStore,
    survey_id: str,
    raw: bytes,
    revision: int | None = None,
    profiles: Mapping[str, PlatformProfile] | None = None,
) -> VerificationReport:
    record, rev = store.get_with_revision(survey_id, revision)
    candidate = parse_csv(raw, profile_for_record(record, profiles))
    return verify(record, candidate, revision=rev)
