from __future__ import annotations

import pytest

from datanomad.errors import ConfigurationError
from datanomad.profiles import BUILTIN_PROFILES, PlatformProfile, get_profile, load_profiles


def test_builtin_profiles():
    q = BUILTIN_PROFILES["qualtrics"]
    assert (q.header_row_count, q.status_column_name, q.ip_column_name) == (3, "Status", "IPAddress")
    assert BUILTIN_PROFILES["surveycto"].header_row_count == 1
    assert BUILTIN_PROFILES["surveycto"].status_column_name is None
    assert BUILTIN_PROFILES["local"].header_row_count == 1


@pytest.mark.parametrize("kwargs", [
    {"platform_id": "other"},
    {"platform_id": "local", "header_row_count": 0},
    {"platform_id": "local", "status_column_name": ""},
    {"platform_id": "local", "ip_column_name": ""},
])
def test_invalid_profiles(kwargs):
    with pytest.raises(ConfigurationError):
        PlatformProfile(**kwargs)


def test_header_override():
    assert get_profile("qualtrics", header_row_count=1).header_row_count == 1
    assert BUILTIN_PROFILES["qualtrics"].header_row_count == 3
    with pytest.raises(ConfigurationError):
        get_profile("nope")


def test_load_overrides(tmp_path):
    path = tmp_path / "p.ini"
    path.write_text(
        "[qualtrics]\nheader_row_count = 2\nip_column_name = IPaddress\nstatus_column_name = none\n"
        "[surveycto]\ndiscard_edits_param = raw\n"
    )
    profiles = load_profiles(path)
    q = profiles["qualtrics"]
    assert (q.header_row_count, q.ip_column_name, q.status_column_name) == (2, "IPaddress", None)
    assert profiles["surveycto"].discard_edits_param == "raw"
    assert profiles["local"] == BUILTIN_PROFILES["local"]


@pytest.mark.parametrize("text", [
    "[qualtrics]\nheader_rows = 2\n",
    "[qualtrics]\nheader_row_count = two\n",
    "[qualtrics]\nheader_row_count = 0\n",
    "[mystery]\nheader_row_count = 1\n",
    "not ini at all",
])
def test_bad_profile_files(tmp_path, text):
    path = tmp_path / "p.ini"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        load_profiles(path)


def test_missing_profile_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_profiles(tmp_path / "absent.ini")
