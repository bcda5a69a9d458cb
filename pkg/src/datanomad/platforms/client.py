"""Fetch raw, unedited CSV exports from survey platforms.

Three adapters share one entry point, :func:`fetch_raw_csv`:

* qualtrics-style: start an export job, poll it, download a zipped CSV;
* surveycto-style: one authenticated GET of the wide CSV;
* local: read a file.

Endpoint paths, the auth header name and the discard-edits parameter come
from the :class:`~datanomad.profiles.PlatformProfile`. The payload is only
ever held in memory and handed back to the caller.
"""

from __future__ import annotations

import configparser
import io
import logging
import os
import time
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import httpx

from datanomad.errors import (
    ConfigurationError,
    CredentialError,
    ExportTimeoutError,
    PlatformError,
    ProtocolError,
    TransientPlatformError,
)
from datanomad.profiles import PlatformProfile

logger = logging.getLogger(__name__)

ENV_BASE_URL = "DATANOMAD_BASE_URL"
ENV_API_TOKEN = "DATANOMAD_API_TOKEN"
ENV_USERNAME = "DATANOMAD_USERNAME"
ENV_PASSWORD = "DATANOMAD_PASSWORD"


@dataclass(frozen=True)
class PlatformCredentials:
    base_url: str
    api_token: str | None = field(default=None, repr=False)
    username: str | None = field(default=None, repr=False)
    password: str | None = field(default=None, repr=False)

    @classmethod
    def from_env(cls, env: Mapping[str, str] | None = None, base_url: str | None = None) -> PlatformCredentials:
        env = os.environ if env is None else env
        url = base_url or env.get(ENV_BASE_URL)
        if not url:
            raise ConfigurationError(f"platform base URL missing (set {ENV_BASE_URL})")
        return cls(
            base_url=url,
            api_token=env.get(ENV_API_TOKEN),
            username=env.get(ENV_USERNAME),
            password=env.get(ENV_PASSWORD),
        )

    @classmethod
    def from_file(cls, path: str | os.PathLike[str], base_url: str | None = None) -> PlatformCredentials:
        """Read a ``[credentials]`` section with base_url/api_token/username/password."""
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigurationError(f"cannot read credentials file {path}: {exc}") from exc
        if not parser.has_section("credentials"):
            raise ConfigurationError(f"{path}: missing [credentials] section")
        sec = parser["credentials"]
        url = base_url or sec.get("base_url")
        if not url:
            raise ConfigurationError(f"{path}: base_url missing")
        return cls(url, sec.get("api_token"), sec.get("username"), sec.get("password"))


@dataclass(frozen=True)
class ExportRequest:
    survey_id: str
    fetch_unedited: bool = True
    include_ips: bool = True
    # local adapter only
    path: str | None = None

    def __post_init__(self) -> None:
        if not self.survey_id:
            raise ConfigurationError("survey_id must be non-empty")


@dataclass(frozen=True)
class RetryPolicy:
    initial_delay: float = 1.0
    factor: float = 2.0
    max_attempts: int = 5
    timeout: float = 300.0

    def delays(self):
        delay = self.initial_delay
        for _ in range(self.max_attempts - 1):
            yield delay
            delay *= self.factor


def _classify(response: httpx.Response) -> None:
    code = response.status_code
    if code in (401, 403):
        raise CredentialError(f"platform rejected credentials (HTTP {code})")
    if code == 429 or code >= 500:
        raise TransientPlatformError(f"platform returned HTTP {code}")
    if code >= 400:
        raise PlatformError(f"platform returned HTTP {code} for {response.request.url.path}")


class _Session:
    def __init__(
        self,
        client: httpx.Client,
        policy: RetryPolicy,
        sleep: Callable[[float], None],
    ) -> None:
        self.client = client
        self.policy = policy
        self.sleep = sleep
        self.deadline = time.monotonic() + policy.timeout

    def check_deadline(self) -> None:
        if time.monotonic() > self.deadline:
            raise ExportTimeoutError(f"export did not finish within {self.policy.timeout}s")

    def request(self, method: str, url: str, **kwargs) -> httpx.Response:
        delays = self.policy.delays()
        while True:
            self.check_deadline()
            try:
                response = self.client.request(method, url, **kwargs)
                _classify(response)
                return response
            except httpx.TransportError as exc:
                error: PlatformError = TransientPlatformError(f"network failure: {type(exc).__name__}")
            except TransientPlatformError as exc:
                error = exc
            delay = next(delays, None)
            if delay is None:
                raise error
            logger.warning("transient platform failure, retrying in %.2fs: %s", delay, error)
            self.sleep(delay)


def _json(response: httpx.Response, key: str) -> str:
    try:
        value = response.json()[key]
    except (ValueError, KeyError, TypeError):
        raise ProtocolError(f"response lacks {key!r}") from None
    if not isinstance(value, str) or not value:
        raise ProtocolError(f"response field {key!r} is not a non-empty string")
    return value


def _unzip_single_csv(payload: bytes) -> bytes:
    try:
        with zipfile.ZipFile(io.BytesIO(payload)) as archive:
            members = [m for m in archive.infolist() if not m.is_dir()]
            if len(members) != 1 or not members[0].filename.lower().endswith(".csv"):
                raise ProtocolError(
                    f"export archive must hold exactly one CSV, found {[m.filename for m in members]}"
                )
            return archive.read(members[0])
    except zipfile.BadZipFile as exc:
        raise ProtocolError("export payload is not a zip archive") from exc


def _fetch_qualtrics(session: _Session, creds: PlatformCredentials, request: ExportRequest,
                     profile: PlatformProfile) -> bytes:
    if not creds.api_token:
        raise CredentialError("an API token is required for this platform")
    base = creds.base_url.rstrip("/")
    headers = {profile.auth_header: creds.api_token}
    body = {
        "surveyId": request.survey_id,
        "format": "csv",
        "includeIPs": request.include_ips,
        profile.discard_edits_param: request.fetch_unedited,
    }
    started = session.request("POST", base + profile.export_path, json=body, headers=headers)
    job_id = _json(started, "jobId")
    logger.info("export job started for survey %s", request.survey_id)

    file_id = None
    delays = session.policy.delays()
    while file_id is None:
        progress = session.request(
            "GET", base + profile.progress_path.format(job_id=job_id), headers=headers
        ).json()
        status = progress.get("status")
        if status == "complete":
            file_id = progress.get("fileId")
            if not file_id:
                raise ProtocolError("completed export job has no fileId")
        elif status == "failed":
            raise TransientPlatformError("platform reported the export job as failed")
        elif status == "inProgress":
            delay = next(delays, None)
            if delay is None:
                raise ExportTimeoutError(
                    f"export not complete after {session.policy.max_attempts} polls"
                )
            session.sleep(delay)
        else:
            raise ProtocolError(f"unknown export status {status!r}")

    payload = session.request(
        "GET", base + profile.file_path.format(file_id=file_id), headers=headers
    ).content
    return _unzip_single_csv(payload)


def _fetch_surveycto(session: _Session, creds: PlatformCredentials, request: ExportRequest,
                     profile: PlatformProfile) -> bytes:
    if creds.username is None or creds.password is None:
        raise CredentialError("username and password are required for this platform")
    url = creds.base_url.rstrip("/") + profile.data_path.format(survey_id=request.survey_id)
    params = {profile.discard_edits_param: "1" if request.fetch_unedited else "0"}
    response = session.request(
        "GET", url, params=params, auth=(creds.username, creds.password)
    )
    content_type = response.headers.get("content-type", "")
    if "json" in content_type or "zip" in content_type:
        raise ProtocolError(f"expected a CSV payload, got {content_type}")
    return response.content


def fetch_raw_csv(
    credentials: PlatformCredentials | None,
    request: ExportRequest,
    profile: PlatformProfile,
    *,
    policy: RetryPolicy | None = None,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> bytes:
    """Return the raw CSV bytes of a survey export."""
    if profile.platform_id == "local":
        if request.path is None:
            raise ConfigurationError("the local adapter needs a file path")
        try:
            return Path(request.path).read_bytes()
        except OSError as exc:
            raise PlatformError(f"cannot read {request.path}: {exc}") from exc
    if credentials is None:
        raise CredentialError(f"credentials required for {profile.platform_id}")

    policy = policy or RetryPolicy()
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=httpx.Timeout(min(60.0, policy.timeout)))
    try:
        session = _Session(client, policy, sleep)
        if profile.platform_id == "qualtrics":
            return _fetch_qualtrics(session, credentials, request, profile)
        return _fetch_surveycto(session, credentials, request, profile)
    finally:
        if own_client:
            client.close()
