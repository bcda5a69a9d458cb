"""Append-only, file-backed store of digest records.

Layout (format version 1)::

    <root>/
      .lock                      advisory single-writer lock
      surveys/<encoded-id>.json  one document per survey

Each document is ``{"format_version": 1, "survey_id": ..., "revisions":
[{"revision": 1, "record": {...}}, ...]}``. Survey ids are percent-encoded
outside ``[A-Za-z0-9_-]`` to form file names. Documents only ever hold names,
hashes, counts, options and timestamps.
"""

from __future__ import annotations

import json
import logging
import os
import string
import tempfile
import threading
from pathlib import Path
from typing import Any

from filelock import FileLock, Timeout

from datanomad.digest import DigestRecord
from datanomad.errors import (
    ConfigurationError,
    DuplicateDigestError,
    NotFoundError,
    StoreLockedError,
    StructureError,
)

logger = logging.getLogger(__name__)

STORE_FORMAT_VERSION = 1
STORE_ENV_VAR = "DATANOMAD_STORE"
_SAFE = frozenset(string.ascii_letters + string.digits + "_-")


def encode_survey_id(survey_id: str) -> str:
    return "".join(
        ch if ch in _SAFE else "".join(f"%{b:02X}" for b in ch.encode("utf-8"))
        for ch in survey_id
    )


def _atomic_write(path: Path, payload: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


class DigestStore:
    def __init__(self, root: str | os.PathLike[str], lock_timeout: float = 30.0) -> None:
        self.root = Path(root)
        self.surveys_dir = self.root / "surveys"
        self.surveys_dir.mkdir(parents=True, exist_ok=True)
        self._file_lock = FileLock(str(self.root / ".lock"), timeout=lock_timeout)
        self._thread_lock = threading.Lock()

    @classmethod
    def from_env(cls, default: str | None = None) -> DigestStore:
        root = os.environ.get(STORE_ENV_VAR, default)
        if not root:
            raise ConfigurationError(f"no store directory given and {STORE_ENV_VAR} is unset")
        return cls(root)

    def _path(self, survey_id: str) -> Path:
        return self.surveys_dir / f"{encode_survey_id(survey_id)}.json"

    def _load(self, survey_id: str) -> dict[str, Any] | None:
        path = self._path(survey_id)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StructureError(f"corrupt store document {path}: {exc}") from exc
        if doc.get("format_version") != STORE_FORMAT_VERSION or doc.get("survey_id") != survey_id:
            raise StructureError(f"unexpected store document {path}")
        return doc

    def put(self, record: DigestRecord, force: bool = False) -> int:
        """Store ``record``; returns its revision number (1-based)."""
        with self._thread_lock:
            try:
                with self._file_lock:
                    doc = self._load(record.survey_id)
                    if doc is None:
                        doc = {
                            "format_version": STORE_FORMAT_VERSION,
                            "survey_id": record.survey_id,
                            "revisions": [],
                        }
                    elif not force:
                        raise DuplicateDigestError(
                            f"survey {record.survey_id!r} already has a digest; use force to add a revision"
                        )
                    revision = len(doc["revisions"]) + 1
                    doc["revisions"].append({"revision": revision, "record": record.to_dict()})
                    _atomic_write(
                        self._path(record.survey_id),
                        json.dumps(doc, indent=2, ensure_ascii=False) + "\n",
                    )
            except Timeout as exc:
                raise StoreLockedError(f"store {self.root} is locked by another writer") from exc
        logger.info("stored digest revision %d (%d columns)", revision, len(record.columns))
        return revision

    def get_with_revision(
        self, survey_id: str, revision: int | None = None
    ) -> tuple[DigestRecord, int]:
        doc = self._load(survey_id)
        if doc is None:
            raise NotFoundError(f"no digest stored for survey {survey_id!r}")
        revisions = doc["revisions"]
        if revision is None:
            revision = len(revisions)
        if not 1 <= revision <= len(revisions):
            raise NotFoundError(
                f"survey {survey_id!r} has no revision {revision} (latest is {len(revisions)})"
            )
        return DigestRecord.from_dict(revisions[revision - 1]["record"]), revision

    def get(self, survey_id: str, revision: int | None = None) -> DigestRecord:
        return self.get_with_revision(survey_id, revision)[0]

    def revisions(self, survey_id: str) -> list[DigestRecord]:
        doc = self._load(survey_id)
        if doc is None:
            raise NotFoundError(f"no digest stored for survey {survey_id!r}")
        return [DigestRecord.from_dict(r["record"]) for r in doc["revisions"]]

    def survey_ids(self) -> list[str]:
        ids = []
        for path in sorted(self.surveys_dir.glob("*.json")):
            try:
                ids.append(json.loads(path.read_text(encoding="utf-8"))["survey_id"])
            except (OSError, ValueError, KeyError):
                logger.warning("skipping unreadable store document %s", path.name)
        return ids
