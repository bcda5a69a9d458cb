"""Platform profiles: header depth, well-known column names, export endpoints.

Built-in profiles can be overridden with an INI-style key/value file, one
section per platform id::

    [qualtrics]
    header_row_count = 3
    status_column_name = Status
    ip_column_name = IPAddress
    discard_edits_param = discardEdits

Unknown keys are rejected so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from datanomad.errors import ConfigurationError

PLATFORM_IDS = ("qualtrics", "surveycto", "local")


@dataclass(frozen=True)
class PlatformProfile:
    platform_id: str
    header_row_count: int = 1
    status_column_name: str | None = None
    ip_column_name: str | None = None
    # qualtrics-style export job endpoints
    export_path: str = "/export"
    progress_path: str = "/export/{job_id}"
    file_path: str = "/file/{file_id}"
    auth_header: str = "X-API-TOKEN"
    # surveycto-style single download endpoint
    data_path: str = "/data/csv/{survey_id}"
    # name of the platform parameter that discards in-platform edits
    discard_edits_param: str = "discardEdits"

    def __post_init__(self) -> None:
        if self.platform_id not in PLATFORM_IDS:
            raise ConfigurationError(f"unknown platform id {self.platform_id!r}")
        if not isinstance(self.header_row_count, int) or self.header_row_count < 1:
            raise ConfigurationError("header_row_count must be an integer >= 1")
        for name in ("status_column_name", "ip_column_name"):
            value = getattr(self, name)
            if value is not None and value == "":
                raise ConfigurationError(f"{name} must be non-empty when set")

    def with_header_rows(self, count: int) -> PlatformProfile:
        return dataclasses.replace(self, header_row_count=count)


BUILTIN_PROFILES: dict[str, PlatformProfile] = {
    "qualtrics": PlatformProfile(
        platform_id="qualtrics",
        header_row_count=3,
        status_column_name="Status",
        ip_column_name="IPAddress",
    ),
    "surveycto": PlatformProfile(
        platform_id="surveycto",
        header_row_count=1,
        discard_edits_param="originalData",
    ),
    "local": PlatformProfile(platform_id="local", header_row_count=1),
}

_INT_KEYS = {"header_row_count"}
_OPTIONAL_KEYS = {"status_column_name", "ip_column_name"}
_ALLOWED_KEYS = {f.name for f in dataclasses.fields(PlatformProfile)} - {"platform_id"}


def _coerce(section: str, values: Mapping[str, str]) -> dict[str, object]:
    out: dict[str, object] = {}
    for key, raw in values.items():
        if key == "platform_id":
            if raw != section:
                raise ConfigurationError(f"[{section}] platform_id mismatch: {raw!r}")
            continue
        if key not in _ALLOWED_KEYS:
            raise ConfigurationError(f"[{section}] unknown key {key!r}")
        if key in _INT_KEYS:
            try:
                out[key] = int(raw)
            except ValueError:
                raise ConfigurationError(f"[{section}] {key} must be an integer") from None
        elif key in _OPTIONAL_KEYS and raw.strip().lower() in ("", "none"):
            out[key] = None
        else:
            out[key] = raw
    return out


def load_profiles(path: str | Path | None = None) -> dict[str, PlatformProfile]:
    """Return the profile registry, with overrides from ``path`` applied."""
    profiles = dict(BUILTIN_PROFILES)
    if path is None:
        return profiles
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read profile file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed profile file {path}: {exc}") from exc
    for section in parser.sections():
        if section not in PLATFORM_IDS:
            raise ConfigurationError(f"unknown platform section [{section}]")
        overrides = _coerce(section, dict(parser.items(section)))
        profiles[section] = dataclasses.replace(profiles[section], **overrides)
    return profiles


def get_profile(
    platform_id: str,
    *,
    header_row_count: int | None = None,
    profiles: Mapping[str, PlatformProfile] | None = None,
) -> PlatformProfile:
    registry = BUILTIN_PROFILES if profiles is None else profiles
    try:
        profile = registry[platform_id]
    except KeyError:
        raise ConfigurationError(f"unknown platform id {platform_id!r}") from None
    if header_row_count is not None:
        profile = profile.with_header_rows(header_row_count)
    return profile
