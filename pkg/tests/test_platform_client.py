from __future__ import annotations

import io
import zipfile

import httpx
import pytest

from datanomad.digest import DigestOptions, digest_table
from datanomad.errors import (
    ConfigurationError,
    CredentialError,
    ExportTimeoutError,
    PlatformError,
    ProtocolError,
    TransientPlatformError,
)
from datanomad.lab import worked_example
from datanomad.lab.manipulations import ManipulationSpec, apply_manipulation
from datanomad.platforms import ExportRequest, PlatformCredentials, RetryPolicy, fetch_raw_csv
from datanomad.platforms.mock import MockPlatform, MockSurvey
from datanomad.profiles import BUILTIN_PROFILES
from datanomad.table import parse_csv, serialize_csv

QUALTRICS = BUILTIN_PROFILES["qualtrics"]
SURVEYCTO = BUILTIN_PROFILES["surveycto"]
SID = worked_example.SURVEY_ID


def _fixtures():
    original = worked_example.raw_table()
    edited = apply_manipulation(
        original,
        ManipulationSpec("edit_cells", {"column": "age", "rows": [2], "values": ["63"]}),
    )
    return serialize_csv(original), serialize_csv(edited)


ORIGINAL, EDITED = _fixtures()
NO_SLEEP = {"sleep": lambda s: None}


@pytest.fixture
def platform():
    with MockPlatform({SID: MockSurvey(ORIGINAL, EDITED)}) as p:
        yield p


def q_creds(p, token="mock-token"):
    return PlatformCredentials(p.base_url, api_token=token)


def cto_creds(p, password="mock-pass"):
    return PlatformCredentials(p.base_url, username="mock-user", password=password)


def test_qualtrics_three_step_flow(platform):
    data = fetch_raw_csv(q_creds(platform), ExportRequest(SID), QUALTRICS, **NO_SLEEP)
    assert data == ORIGINAL
    paths = [p for _, p in platform.requests]
    assert paths[0] == "/export"
    assert paths.count(paths[1]) == 2 and paths[1].startswith("/export/")
    assert paths[3].startswith("/file/")


def test_qualtrics_unedited_flag_selects_variant(platform):
    edited = fetch_raw_csv(q_creds(platform), ExportRequest(SID, fetch_unedited=False), QUALTRICS, **NO_SLEEP)
    assert edited == EDITED
    a, _ = digest_table(parse_csv(ORIGINAL, QUALTRICS), DigestOptions(SID))
    b, _ = digest_table(parse_csv(edited, QUALTRICS), DigestOptions(SID))
    differ = [c.name for c, d in zip(a.columns, b.columns) if c.hash != d.hash]
    assert differ == ["age"]


def test_surveycto_single_get(platform):
    assert fetch_raw_csv(cto_creds(platform), ExportRequest(SID), SURVEYCTO, **NO_SLEEP) == ORIGINAL
    assert fetch_raw_csv(cto_creds(platform), ExportRequest(SID, fetch_unedited=False), SURVEYCTO,
                         **NO_SLEEP) == EDITED
    assert platform.requests == [("GET", f"/data/csv/{SID}")] * 2


def test_unauthorized_is_not_retried(platform):
    sleeps = []
    with pytest.raises(CredentialError):
        fetch_raw_csv(q_creds(platform, "wrong"), ExportRequest(SID), QUALTRICS, sleep=sleeps.append)
    assert len(platform.requests) == 1 and sleeps == []
    with pytest.raises(CredentialError):
        fetch_raw_csv(cto_creds(platform, "wrong"), ExportRequest(SID), SURVEYCTO, sleep=sleeps.append)
    assert sleeps == []


def test_transient_failures_retry_with_backoff(platform):
    platform.fail_next = [503, 429, 500]
    sleeps = []
    data = fetch_raw_csv(q_creds(platform), ExportRequest(SID), QUALTRICS, sleep=sleeps.append)
    assert data == ORIGINAL
    assert sleeps[:3] == [1.0, 2.0, 4.0]


def test_retries_are_bounded(platform):
    platform.fail_next = [503] * 10
    with pytest.raises(TransientPlatformError):
        fetch_raw_csv(q_creds(platform), ExportRequest(SID), QUALTRICS, **NO_SLEEP)
    assert len(platform.requests) == 5


def test_polling_is_bounded(platform):
    platform.polls_until_complete = 100
    with pytest.raises(ExportTimeoutError):
        fetch_raw_csv(q_creds(platform), ExportRequest(SID), QUALTRICS,
                      policy=RetryPolicy(max_attempts=3), **NO_SLEEP)


def test_overall_timeout(platform):
    with pytest.raises(ExportTimeoutError):
        fetch_raw_csv(q_creds(platform), ExportRequest(SID), QUALTRICS,
                      policy=RetryPolicy(timeout=-1.0), **NO_SLEEP)


def test_repeat_downloads_are_identical(platform):
    platform.fail_next = [502]
    a = fetch_raw_csv(q_creds(platform), ExportRequest(SID), QUALTRICS, **NO_SLEEP)
    b = fetch_raw_csv(q_creds(platform), ExportRequest(SID), QUALTRICS, **NO_SLEEP)
    assert a == b == ORIGINAL


def test_unknown_survey(platform):
    with pytest.raises(PlatformError):
        fetch_raw_csv(q_creds(platform), ExportRequest("SV_none"), QUALTRICS, **NO_SLEEP)


def test_network_failure_is_transient():
    creds = PlatformCredentials("http://127.0.0.1:9", api_token="x")
    with pytest.raises(TransientPlatformError):
        fetch_raw_csv(creds, ExportRequest(SID), QUALTRICS,
                      policy=RetryPolicy(max_attempts=2), **NO_SLEEP)


def _zip(files):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        for name, data in files.items():
            z.writestr(name, data)
    return buf.getvalue()


@pytest.mark.parametrize("payload", [b"not a zip", _zip({"a.csv": b"x", "b.csv": b"y"}),
                                     _zip({"a.txt": b"x"})])
def test_bad_archive_is_protocol_error(payload):
    def handler(request: httpx.Request) -> httpx.Response:
        if request.method == "POST":
            return httpx.Response(200, json={"jobId": "J"})
        if request.url.path == "/export/J":
            return httpx.Response(200, json={"status": "complete", "fileId": "F"})
        return httpx.Response(200, content=payload)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    with pytest.raises(ProtocolError):
        fetch_raw_csv(PlatformCredentials("http://x", api_token="t"), ExportRequest(SID),
                      QUALTRICS, client=client, **NO_SLEEP)


def test_discard_param_comes_from_profile():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen.update(request.url.params)
        return httpx.Response(200, content=ORIGINAL, headers={"content-type": "text/csv"})

    profile = SURVEYCTO.__class__(platform_id="surveycto", discard_edits_param="raw")
    client = httpx.Client(transport=httpx.MockTransport(handler))
    fetch_raw_csv(PlatformCredentials("http://x", username="u", password="p"),
                  ExportRequest(SID), profile, client=client, **NO_SLEEP)
    assert seen == {"raw": "1"}


def test_missing_credentials(platform):
    with pytest.raises(CredentialError):
        fetch_raw_csv(PlatformCredentials(platform.base_url), ExportRequest(SID), QUALTRICS)
    with pytest.raises(CredentialError):
        fetch_raw_csv(PlatformCredentials(platform.base_url), ExportRequest(SID), SURVEYCTO)
    with pytest.raises(CredentialError):
        fetch_raw_csv(None, ExportRequest(SID), QUALTRICS)


def test_local_adapter(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_bytes(ORIGINAL)
    local = BUILTIN_PROFILES["local"]
    assert fetch_raw_csv(None, ExportRequest(SID, path=str(path)), local) == ORIGINAL
    with pytest.raises(ConfigurationError):
        fetch_raw_csv(None, ExportRequest(SID), local)
    with pytest.raises(PlatformError):
        fetch_raw_csv(None, ExportRequest(SID, path=str(tmp_path / "no.csv")), local)


def test_credentials_sources(tmp_path):
    creds = PlatformCredentials.from_env(
        {"DATANOMAD_BASE_URL": "http://h", "DATANOMAD_API_TOKEN": "sekrit-token"}
    )
    assert creds.api_token == "sekrit-token"
    assert "sekrit" not in repr(creds)
    with pytest.raises(ConfigurationError):
        PlatformCredentials.from_env({})
    ini = tmp_path / "c.ini"
    ini.write_text("[credentials]\nbase_url = http://h\nusername = u\npassword = pw-secret\n")
    creds = PlatformCredentials.from_file(ini)
    assert (creds.username, creds.password) == ("u", "pw-secret")
    assert "pw-secret" not in repr(creds)
    ini.write_text("[other]\n")
    with pytest.raises(ConfigurationError):
        PlatformCredentials.from_file(ini)


def test_export_request_needs_survey_id():
    with pytest.raises(ConfigurationError):
        ExportRequest("")


def test_retry_policy_delays():
    assert list(RetryPolicy().delays()) == [1.0, 2.0, 4.0, 8.0]
