"""Reproduce the voting-experiment p-values and the toy verify reports."""

from __future__ import annotations

from datanomad.digest import DigestOptions, digest_table
from datanomad.lab import worked_example
from datanomad.lab.manipulations import (
    CONTROL,
    NO,
    VOTING_EXPERIMENT,
    TREATMENT,
    YES,
    ManipulationSpec,
    apply_manipulation,
    generate_experiment,
    select_rows,
    tabulate,
)
from datanomad.lab.stats import two_proportion_z
from datanomad.table import CanonicalTable
from datanomad.verify import VerificationReport, verify

PUBLISHED_P = {
    "baseline": 0.26,
    "response editing": 0.047,
    "row deletion": 0.038,
    "row addition": 0.047,
}


def voting_tables() -> dict[str, CanonicalTable]:
    """The baseline experiment and its three manipulated versions."""
    base = generate_experiment(VOTING_EXPERIMENT)
    flip = select_rows(base, {"condition": CONTROL, "intends_to_vote": YES}, 4)
    edited = apply_manipulation(
        base, ManipulationSpec("edit_cells", {"column": "intends_to_vote", "rows": flip, "values": NO})
    )
    drop = select_rows(base, {"condition": CONTROL, "intends_to_vote": YES}, 3) + select_rows(
        base, {"condition": TREATMENT, "intends_to_vote": NO}, 4
    )
    deleted = apply_manipulation(base, ManipulationSpec("delete_rows", {"rows": drop}))
    n = base.data_row_count
    fake = [
        {"subject_id": f"S{n + i + 1:03d}", "condition": CONTROL, "intends_to_vote": NO}
        for i in range(4)
    ] + [
        {"subject_id": f"S{n + i + 5:03d}", "condition": TREATMENT, "intends_to_vote": YES}
        for i in range(5)
    ]
    added = apply_manipulation(base, ManipulationSpec("add_rows", {"rows": fake}))
    return {
        "baseline": base,
        "response editing": edited,
        "row deletion": deleted,
        "row addition": added,
    }


def p_value_rows() -> list[dict]:
    rows = []
    for scenario, table in voting_tables().items():
        yc, nc, yt, nt = tabulate(table)
        rows.append(
            {
                "scenario": scenario,
                "yes1": yc,
                "n1": nc,
                "yes2": yt,
                "n2": nt,
                "published": PUBLISHED_P[scenario],
                "t_p": two_proportion_z(yc, nc, yt, nt, method="t").p,
                "z_p": two_proportion_z(yc, nc, yt, nt, method="z").p,
            }
        )
    return rows


def worked_example_reports() -> list[tuple[str, VerificationReport]]:
    table = worked_example.raw_table()
    record, _ = digest_table(table, DigestOptions(survey_id=worked_example.SURVEY_ID))
    return [
        ("tampered archive", verify(record, worked_example.tampered_archive(table))),
        ("ideal archive", verify(record, worked_example.ideal_archive(table))),
    ]
