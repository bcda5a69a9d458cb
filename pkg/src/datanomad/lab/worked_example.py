"""The toy name/color/age/drink survey in Qualtrics export shape.

``tampered_archive`` drops the identifying and blank reserved columns and
changes Robert's favourite color; ``ideal_archive`` drops only the two
identifying columns.
"""

from __future__ import annotations

from datanomad.lab.manipulations import ManipulationSpec, apply_manipulation
from datanomad.profiles import BUILTIN_PROFILES
from datanomad.table import CanonicalTable

SURVEY_ID = "SV_0q9y0TA1fUsvrkG"

COLUMNS = (
    "StartDate", "EndDate", "Status", "IPaddress", "RecipientID", "hookType",
    "hookParams", "PanelID", "EmbeddedData", "PanelMemberID",
    "name", "color", "age", "drink",
)

_QUESTION_ROW = (
    "Start Date", "End Date", "Response Type", "IP Address", "Recipient ID",
    "hookType", "hookParams", "PanelID", "EmbeddedData", "PanelMemberID",
    "What is your first name?", "What is your favorite color?",
    "How old are you?", "Do you prefer coffee or tea?",
)

_IMPORT_ROW = (
    '{"ImportId":"startDate","timeZone":"America/Denver"}',
    '{"ImportId":"endDate","timeZone":"America/Denver"}',
    '{"ImportId":"status"}',
    '{"ImportId":"ipAddress"}',
    '{"ImportId":"recipientId"}',
    '{"ImportId":"hookType"}',
    '{"ImportId":"hookParams"}',
    '{"ImportId":"panelId"}',
    '{"ImportId":"embeddedData"}',
    '{"ImportId":"panelMemberId"}',
    '{"ImportId":"QID1_TEXT"}',
    '{"ImportId":"QID2_TEXT"}',
    '{"ImportId":"QID3_TEXT"}',
    '{"ImportId":"QID4"}',
)

_RESPONSES = (
    ("2024-02-05 09:12:44", "2024-02-05 09:14:02", "IP Address", "203.0.113.17", "Robert", "green", "52", "coffee"),
    ("2024-02-05 10:01:09", "2024-02-05 10:02:31", "IP Address", "198.51.100.4", "Jane", "Topaz", "27", "tea"),
    ("2024-02-05 11:47:30", "2024-02-05 11:49:12", "IP Address", "192.0.2.233", "Herman", "Chartreuse", "36", "tea"),
    ("2024-02-06 08:20:55", "2024-02-06 08:22:40", "IP Address", "203.0.113.90", "Frida", "taupe", "19", "coffee"),
)

REMOVED_IN_TAMPERED = (
    "IPaddress", "hookParams", "name", "RecipientID",
    "hookType", "PanelID", "EmbeddedData", "PanelMemberID",
)
REMOVED_IN_IDEAL = ("IPaddress", "name")


def raw_table() -> CanonicalTable:
    rows = [_QUESTION_ROW, _IMPORT_ROW]
    for start, end, status, ip, name, color, age, drink in _RESPONSES:
        rows.append((start, end, status, ip, "", "", "", "", "", "", name, color, age, drink))
    return CanonicalTable.from_rows(COLUMNS, rows, BUILTIN_PROFILES["qualtrics"])


def tampered_archive(table: CanonicalTable) -> CanonicalTable:
    robert = table.data_cells("name").index("Robert")
    edited = apply_manipulation(
        table,
        ManipulationSpec("edit_cells", {"column": "color", "rows": [robert], "values": ["brown"]}),
    )
    return apply_manipulation(
        edited, ManipulationSpec("legitimate_redaction", {"columns": list(REMOVED_IN_TAMPERED)})
    )


def ideal_archive(table: CanonicalTable) -> CanonicalTable:
    return apply_manipulation(
        table, ManipulationSpec("legitimate_redaction", {"columns": list(REMOVED_IN_IDEAL)})
    )
