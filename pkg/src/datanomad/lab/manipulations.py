"""Toy voting experiment and the deceptive/legitimate table manipulations.

Row indices in every manipulation refer to data rows (0-based), never to the
name row or metadata rows.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from datanomad.errors import ManipulationError
from datanomad.profiles import BUILTIN_PROFILES
from datanomad.table import CanonicalTable, Column

DECEPTIVE_KINDS = ("edit_cells", "delete_rows", "add_rows", "delete_column", "add_column")
LEGITIMATE_KINDS = ("legitimate_redaction", "legitimate_extraneous_deletion")
KINDS = DECEPTIVE_KINDS + LEGITIMATE_KINDS

CONTROL, TREATMENT = "control", "treatment"
YES, NO = "yes", "no"
EXPERIMENT_COLUMNS = ("subject_id", "condition", "intends_to_vote")

_FIRST_NAMES = (
    "Robert", "Jane", "Herman", "Frida", "Amara", "Tomasz", "Keiko", "Luis",
    "Priya", "Oskar", "Wanjiru", "Mateo", "Ingrid", "Chen", "Fatima", "Noah",
)


@dataclass(frozen=True)
class ExperimentConfig:
    n_control: int
    n_treatment: int
    yes_control: int
    yes_treatment: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_control < 0 or self.n_treatment < 0:
            raise ValueError("group sizes must be non-negative")
        if not 0 <= self.yes_control <= self.n_control:
            raise ValueError("yes_control must lie in [0, n_control]")
        if not 0 <= self.yes_treatment <= self.n_treatment:
            raise ValueError("yes_treatment must lie in [0, n_treatment]")


VOTING_EXPERIMENT = ExperimentConfig(n_control=48, n_treatment=52, yes_control=32, yes_treatment=40, seed=1)

_QUALTRICS_META = {
    "StartDate": ("Start Date", '{"ImportId":"startDate"}'),
    "EndDate": ("End Date", '{"ImportId":"endDate"}'),
    "Status": ("Response Type", '{"ImportId":"status"}'),
    "IPAddress": ("IP Address", '{"ImportId":"ipAddress"}'),
    "ResponseId": ("Response ID", '{"ImportId":"_recordId"}'),
    "name": ("What is your first name?", '{"ImportId":"QID1_TEXT"}'),
    "subject_id": ("Subject ID", '{"ImportId":"QID2_TEXT"}'),
    "condition": ("Assigned condition", '{"ImportId":"QID3"}'),
    "intends_to_vote": (
        "Do you intend to participate in the upcoming election (Yes/No)?",
        '{"ImportId":"QID4"}',
    ),
}


def generate_experiment(config: ExperimentConfig, with_metadata: bool = False) -> CanonicalTable:
    """Build the two-arm voting experiment with exactly the configured counts.

    With ``with_metadata`` the table is shaped like a Qualtrics export: three
    header rows and the usual StartDate/Status/IPAddress/... columns.
    """
    arms = (
        [(CONTROL, YES)] * config.yes_control
        + [(CONTROL, NO)] * (config.n_control - config.yes_control)
        + [(TREATMENT, YES)] * config.yes_treatment
        + [(TREATMENT, NO)] * (config.n_treatment - config.yes_treatment)
    )
    rng = random.Random(config.seed)
    rng.shuffle(arms)
    width = max(3, len(str(len(arms))))
    core = [(f"S{i + 1:0{width}d}", cond, vote) for i, (cond, vote) in enumerate(arms)]

    if not with_metadata:
        return CanonicalTable.from_rows(EXPERIMENT_COLUMNS, core, BUILTIN_PROFILES["local"])

    names = tuple(_QUALTRICS_META)
    rows: list[tuple[str, ...]] = [
        tuple(_QUALTRICS_META[n][0] for n in names),
        tuple(_QUALTRICS_META[n][1] for n in names),
    ]
    for i, (sid, cond, vote) in enumerate(core):
        minute, second = divmod(rng.randrange(3600), 60)
        start = f"2024-03-01 10:{minute:02d}:{second:02d}"
        end = f"2024-03-01 11:{minute:02d}:{second:02d}"
        ip = f"10.{rng.randrange(256)}.{rng.randrange(256)}.{rng.randrange(1, 255)}"
        response_id = f"R_{rng.getrandbits(60):015x}"
        name = f"{rng.choice(_FIRST_NAMES)}{i}"
        rows.append((start, end, "IP Address", ip, response_id, name, sid, cond, vote))
    return CanonicalTable.from_rows(names, rows, BUILTIN_PROFILES["qualtrics"])


def tabulate(table: CanonicalTable) -> tuple[int, int, int, int]:
    """Return ``(yes_control, n_control, yes_treatment, n_treatment)``."""
    counts = {CONTROL: [0, 0], TREATMENT: [0, 0]}
    for cond, vote in zip(table.data_cells("condition"), table.data_cells("intends_to_vote")):
        if cond in counts:
            counts[cond][1] += 1
            counts[cond][0] += vote == YES
    return counts[CONTROL][0], counts[CONTROL][1], counts[TREATMENT][0], counts[TREATMENT][1]


def select_rows(
    table: CanonicalTable,
    where: Mapping[str, str],
    count: int,
    seed: int | None = None,
) -> tuple[int, ...]:
    """Data-row indices matching every ``column == value`` pair.

    Takes the first ``count`` matches, or a seeded random sample when ``seed``
    is given.
    """
    cells = {col: table.data_cells(col) for col in where}
    hits = [
        i for i in range(table.data_row_count)
        if all(cells[col][i] == value for col, value in where.items())
    ]
    if len(hits) < count:
        raise ManipulationError(f"only {len(hits)} rows match {dict(where)}, need {count}")
    if seed is None:
        return tuple(hits[:count])
    return tuple(sorted(random.Random(seed).sample(hits, count)))


@dataclass(frozen=True)
class ManipulationSpec:
    """A transformation kind plus its parameters.

    Parameters by kind:

    - ``edit_cells``: ``column``, ``rows``, ``values`` (one per row, or a single
      value applied to all rows)
    - ``delete_rows``: ``rows``
    - ``add_rows``: ``rows`` (sequence of ``{column: value}`` mappings) or
      ``count`` for seed-generated rows
    - ``delete_column``: ``column``; ``replace=True`` substitutes a fabricated
      column, named ``replacement_name`` (default: the same name)
    - ``add_column``: ``name``, optional ``values`` and ``position``
    - ``legitimate_redaction`` / ``legitimate_extraneous_deletion``: ``columns``
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ManipulationError(f"unknown manipulation kind {self.kind!r}")
        required = {
            "edit_cells": ("column", "rows", "values"),
            "delete_rows": ("rows",),
            "delete_column": ("column",),
            "add_column": ("name",),
            "legitimate_redaction": ("columns",),
            "legitimate_extraneous_deletion": ("columns",),
        }.get(self.kind, ())
        missing = [k for k in required if k not in self.params]
        if self.kind == "add_rows" and not ({"rows", "count"} & set(self.params)):
            missing.append("rows or count")
        if missing:
            raise ManipulationError(f"{self.kind} is missing parameter(s): {', '.join(missing)}")

    @property
    def deceptive(self) -> bool:
        return self.kind in DECEPTIVE_KINDS


def _require_column(table: CanonicalTable, name: str) -> int:
    try:
        return table.index_of(name)
    except KeyError:
        raise ManipulationError(f"no column named {name!r}") from None


def _require_rows(table: CanonicalTable, rows: Sequence[int]) -> list[int]:
    out = sorted(set(int(r) for r in rows))
    if not out:
        raise ManipulationError("at least one row index is required")
    if out[0] < 0 or out[-1] >= table.data_row_count:
        raise ManipulationError(
            f"row index out of range (table has {table.data_row_count} data rows)"
        )
    return out


def _value_pool(column: Column, skip: int) -> list[str]:
    return sorted(set(column.cells[skip:])) or [""]


def _edit_cells(table: CanonicalTable, p: Mapping[str, Any]) -> CanonicalTable:
    idx = _require_column(table, p["column"])
    rows = list(p["rows"])
    _require_rows(table, rows)
    values = p["values"]
    if isinstance(values, str):
        values = [values] * len(rows)
    if len(values) != len(rows):
        raise ManipulationError("edit_cells needs one value per row")
    skip = table.metadata_row_count
    cells = list(table.columns[idx].cells)
    for r, v in zip(rows, values):
        cells[skip + r] = v
    if tuple(cells) == table.columns[idx].cells:
        raise ManipulationError("edit_cells would not change any cell")
    columns = list(table.columns)
    columns[idx] = Column(columns[idx].name, tuple(cells))
    return table.with_columns(columns)


def _delete_rows(table: CanonicalTable, p: Mapping[str, Any]) -> CanonicalTable:
    skip = table.metadata_row_count
    drop = {skip + r for r in _require_rows(table, p["rows"])}
    columns = [
        Column(c.name, tuple(v for i, v in enumerate(c.cells) if i not in drop))
        for c in table.columns
    ]
    return table.with_columns(columns)


def _add_rows(table: CanonicalTable, p: Mapping[str, Any], rng: random.Random) -> CanonicalTable:
    status = table.profile.status_column_name
    skip = table.metadata_row_count
    if "rows" in p:
        new_rows = [dict(r) for r in p["rows"]]
        for r in new_rows:
            for name in r:
                _require_column(table, name)
    else:
        count = int(p["count"])
        pools = {c.name: _value_pool(c, skip) for c in table.columns if c.name != status}
        new_rows = [{n: rng.choice(pool) for n, pool in pools.items()} for _ in range(count)]
    if not new_rows:
        raise ManipulationError("add_rows needs at least one row")
    if status is not None and table.has_column(status):
        for r in new_rows:
            r.setdefault(status, "Imported")
    columns = [
        Column(c.name, c.cells + tuple(r.get(c.name, "") for r in new_rows))
        for c in table.columns
    ]
    return table.with_columns(columns)


def _fabricate(column: Column, skip: int, rng: random.Random) -> tuple[str, ...]:
    pool = _value_pool(column, skip)
    data = [rng.choice(pool) for _ in column.cells[skip:]]
    if data == list(column.cells[skip:]):
        if data:
            data[rng.randrange(len(data))] = "fabricated"
        else:
            data = ["fabricated"]
    return column.cells[:skip] + tuple(data)


def _delete_column(table: CanonicalTable, p: Mapping[str, Any], rng: random.Random) -> CanonicalTable:
    idx = _require_column(table, p["column"])
    columns = list(table.columns)
    old = columns.pop(idx)
    if p.get("replace"):
        name = p.get("replacement_name", old.name)
        if name != old.name and table.has_column(name):
            raise ManipulationError(f"column {name!r} already exists")
        cells = _fabricate(old, table.metadata_row_count, rng)
        if len(cells) != len(old.cells):
            raise ManipulationError("cannot fabricate a replacement for an empty table")
        columns.insert(idx, Column(name, cells))
    elif len(columns) == 0:
        raise ManipulationError("cannot delete the only column")
    return table.with_columns(columns)


def _add_column(table: CanonicalTable, p: Mapping[str, Any], rng: random.Random) -> CanonicalTable:
    name = p["name"]
    if table.has_column(name):
        raise ManipulationError(f"column {name!r} already exists")
    skip = table.metadata_row_count
    if "values" in p:
        data = tuple(p["values"])
        if len(data) != table.data_row_count:
            raise ManipulationError("add_column needs one value per data row")
    else:
        # a random dichotomous variable
        data = tuple(rng.choice("01") for _ in range(table.data_row_count))
    cells = ("",) * skip + data
    columns = list(table.columns)
    position = int(p.get("position", len(columns)))
    columns.insert(position, Column(name, cells))
    return table.with_columns(columns)


def _delete_columns(table: CanonicalTable, p: Mapping[str, Any]) -> CanonicalTable:
    names = set(p["columns"])
    for n in names:
        _require_column(table, n)
    columns = [c for c in table.columns if c.name not in names]
    if not columns:
        raise ManipulationError("cannot delete every column")
    return table.with_columns(columns)


def apply_manipulation(
    table: CanonicalTable, spec: ManipulationSpec, seed: int = 0
) -> CanonicalTable:
    """Return a new table with ``spec`` applied; ``table`` is not modified."""
    rng = random.Random(seed)
    p = spec.params
    if spec.kind == "edit_cells":
        return _edit_cells(table, p)
    if spec.kind == "delete_rows":
        return _delete_rows(table, p)
    if spec.kind == "add_rows":
        return _add_rows(table, p, rng)
    if spec.kind == "delete_column":
        return _delete_column(table, p, rng)
    if spec.kind == "add_column":
        return _add_column(table, p, rng)
    return _delete_columns(table, p)
