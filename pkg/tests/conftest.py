from __future__ import annotations

import pytest

from datanomad.lab import worked_example
from datanomad.profiles import BUILTIN_PROFILES
from datanomad.store import DigestStore
from datanomad.table import serialize_csv


@pytest.fixture
def qualtrics():
    return BUILTIN_PROFILES["qualtrics"]


@pytest.fixture
def local():
    return BUILTIN_PROFILES["local"]


@pytest.fixture
def surveycto():
    return BUILTIN_PROFILES["surveycto"]


@pytest.fixture
def store(tmp_path):
    return DigestStore(tmp_path / "store")


@pytest.fixture
def toy_table():
    return worked_example.raw_table()


@pytest.fixture
def toy_csv(toy_table):
    return serialize_csv(toy_table)


def scan_tree(root, needles):
    """Return (path, needle) pairs for every needle found in any file under root."""
    hits = []
    for path in root.rglob("*"):
        if path.is_file():
            data = path.read_bytes()
            hits.extend((path, n) for n in needles if n.encode("utf-8") in data)
    return hits
