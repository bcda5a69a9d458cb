"""Detection benchmark: random deceptive manipulations vs. the verifier.

Each scenario derives its own RNG from ``(seed, index)`` so results do not
depend on execution order or on how scenarios are spread over workers.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any

from datanomad.digest import DigestOptions, digest_table
from datanomad.lab.manipulations import (
    DECEPTIVE_KINDS,
    ExperimentConfig,
    ManipulationSpec,
    apply_manipulation,
    generate_experiment,
)
from datanomad.table import CanonicalTable, parse_csv, serialize_csv
from datanomad.verify import GREEN, RED, VerificationReport, verify


@dataclass(frozen=True)
class ScenarioOutcome:
    index: int
    kind: str
    detected: bool
    signature_ok: bool
    control_green: bool
    control_exact: bool


def _random_config(rng: random.Random) -> ExperimentConfig:
    n_c = rng.randint(5, 60)
    n_t = rng.randint(5, 60)
    return ExperimentConfig(
        n_control=n_c,
        n_treatment=n_t,
        yes_control=rng.randint(0, n_c),
        yes_treatment=rng.randint(0, n_t),
        seed=rng.getrandbits(32),
    )


def _random_spec(table: CanonicalTable, kind: str, rng: random.Random) -> ManipulationSpec:
    names = table.names
    n_rows = table.data_row_count
    if kind == "edit_cells":
        column = rng.choice(names)
        row = rng.randrange(n_rows)
        current = table.data_cells(column)[row]
        pool = sorted(set(table.data_cells(column)) - {current})
        value = rng.choice(pool) if pool else current + "x"
        return ManipulationSpec(kind, {"column": column, "rows": [row], "values": [value]})
    if kind == "delete_rows":
        k = rng.randint(1, max(1, n_rows // 4))
        return ManipulationSpec(kind, {"rows": rng.sample(range(n_rows), k)})
    if kind == "add_rows":
        return ManipulationSpec(kind, {"count": rng.randint(1, 9)})
    if kind == "delete_column":
        column = rng.choice(names)
        params: dict[str, Any] = {"column": column, "replace": True}
        if rng.random() < 0.5:
            params["replacement_name"] = f"{column}_v2"
        return ManipulationSpec(kind, params)
    if kind == "add_column":
        return ManipulationSpec(
            kind, {"name": "eye_color_blue", "position": rng.randint(0, len(names))}
        )
    raise ValueError(kind)


def _signature_ok(spec: ManipulationSpec, report: VerificationReport, all_names: tuple[str, ...]) -> bool:
    p = spec.params
    if spec.kind == "edit_cells":
        return report.modified == (p["column"],) and not report.added and not report.removed
    if spec.kind in ("delete_rows", "add_rows"):
        return set(report.modified) == set(all_names) and report.row_count_changed
    if spec.kind == "delete_column":
        new = p.get("replacement_name", p["column"])
        if new == p["column"]:
            return report.modified == (new,) and not report.added and not report.removed
        return report.removed == (p["column"],) and report.added == (new,) and not report.modified
    if spec.kind == "add_column":
        return report.added == (p["name"],) and not report.modified and not report.removed
    return False


def _roundtrip(table: CanonicalTable) -> CanonicalTable:
    return parse_csv(serialize_csv(table), table.profile)


def run_scenario(seed: int, index: int) -> ScenarioOutcome:
    rng = random.Random(f"{seed}:{index}")
    table = generate_experiment(_random_config(rng), with_metadata=True)
    record, _ = digest_table(table, DigestOptions(survey_id=f"SIM_{seed}_{index}"))

    kind = rng.choice(DECEPTIVE_KINDS)
    spec = _random_spec(table, kind, rng)
    tampered = apply_manipulation(table, spec, seed=rng.getrandbits(32))
    report = verify(record, _roundtrip(tampered))

    # legitimate control: redact a random non-empty proper subset of columns
    k = rng.randint(1, len(table.names) - 1)
    redacted_names = set(rng.sample(table.names, k))
    redacted = apply_manipulation(
        table, ManipulationSpec("legitimate_redaction", {"columns": sorted(redacted_names)})
    )
    control = verify(record, _roundtrip(redacted))

    return ScenarioOutcome(
        index=index,
        kind=kind,
        detected=report.verdict == RED,
        signature_ok=_signature_ok(spec, report, record.column_names),
        control_green=control.verdict == GREEN,
        control_exact=set(control.removed) == redacted_names
        and not control.added
        and not control.modified,
    )


def _run_many(args: tuple[int, range]) -> list[ScenarioOutcome]:
    seed, indices = args
    return [run_scenario(seed, i) for i in indices]


def run_scenario_suite(n_scenarios: int, seed: int = 0, workers: int = 1) -> dict[str, Any]:
    """Run ``n_scenarios`` tamper/verify rounds and summarize detection rates."""
    if n_scenarios < 1:
        raise ValueError("n_scenarios must be >= 1")
    if workers <= 1:
        outcomes = [run_scenario(seed, i) for i in range(n_scenarios)]
    else:
        chunks = [(seed, range(i, n_scenarios, workers)) for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = sorted(
                (o for batch in pool.map(_run_many, chunks) for o in batch),
                key=lambda o: o.index,
            )

    kinds: dict[str, dict[str, Any]] = {}
    for kind in DECEPTIVE_KINDS:
        subset = [o for o in outcomes if o.kind == kind]
        detected = sum(o.detected for o in subset)
        kinds[kind] = {
            "scenarios": len(subset),
            "detected": detected,
            "signature_matches": sum(o.signature_ok for o in subset),
            "detection_rate": detected / len(subset) if subset else None,
        }
    false_positives = sum(not o.control_green for o in outcomes)
    return {
        "n_scenarios": n_scenarios,
        "seed": seed,
        "deceptive": kinds,
        "legitimate_redaction": {
            "controls": len(outcomes),
            "false_positives": false_positives,
            "false_positive_rate": false_positives / len(outcomes),
            "exact_removed_sets": sum(o.control_exact for o in outcomes),
        },
        "all_detected": all(o.detected for o in outcomes),
        "all_signatures_match": all(o.signature_ok for o in outcomes),
    }
