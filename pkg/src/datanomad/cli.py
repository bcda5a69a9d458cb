"""Command-line front end.

Exit codes: 0 success / GREEN verdict, 1 RED verdict (added or modified
columns) or failed simulation, 2 usage or configuration error, 3 I/O, input
or platform error.

Secrets are read from the environment (DATANOMAD_API_TOKEN,
DATANOMAD_USERNAME, DATANOMAD_PASSWORD, DATANOMAD_BASE_URL) or from a
``--credentials-file``; they are never accepted as flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence, TextIO

from datanomad import __version__
from datanomad.digest import DigestOptions
from datanomad.errors import ConfigurationError, DataNomadError
from datanomad.lab import worked_example
from datanomad.lab.demo import p_value_rows, worked_example_reports
from datanomad.lab.scenarios import run_scenario_suite
from datanomad.profiles import PLATFORM_IDS, get_profile, load_profiles
from datanomad.store import STORE_ENV_VAR, DigestStore
from datanomad.table import parse_csv, serialize_csv
from datanomad.verify import RED, render_report, verify
from datanomad.workflow import digest_bytes, profile_for_record

EXIT_OK = 0
EXIT_RED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _store(args: argparse.Namespace) -> DigestStore:
    return DigestStore(args.store) if args.store else DigestStore.from_env()


def _digested_path(args: argparse.Namespace) -> Path:
    if args.output:
        return Path(args.output)
    if args.input:
        src = Path(args.input)
        return src.with_name(src.stem + ".digested.csv")
    safe = "".join(ch if ch.isalnum() or ch in "_-" else "_" for ch in args.survey_id)
    return Path(f"{safe}.digested.csv")


def _fetch(args: argparse.Namespace, profile) -> bytes:
    # httpx is only needed when actually talking to a platform
    from datanomad.platforms.client import ExportRequest, PlatformCredentials, fetch_raw_csv

    if args.input:
        try:
            return Path(args.input).read_bytes()
        except OSError as exc:
            raise DataNomadError(f"cannot read {args.input}: {exc}") from exc
    if profile.platform_id == "local":
        raise ConfigurationError("--input is required for the local platform")
    if args.credentials_file:
        creds = PlatformCredentials.from_file(args.credentials_file, base_url=args.base_url)
    else:
        creds = PlatformCredentials.from_env(base_url=args.base_url)
    request = ExportRequest(
        survey_id=args.survey_id,
        fetch_unedited=not args.include_edits,
        include_ips=True,
    )
    return fetch_raw_csv(creds, request, profile)


def cmd_digest(args: argparse.Namespace, out: TextIO) -> int:
    profiles = load_profiles(args.profiles)
    profile = get_profile(args.platform, header_row_count=args.header_rows, profiles=profiles)
    store = _store(args)
    raw = _fetch(args, profile)
    options = DigestOptions(
        survey_id=args.survey_id,
        ip_option=args.ip_option,
        delete_requested_column=args.delete_requested,
    )
    outcome = digest_bytes(raw, profile, options, store, force=args.force)
    del raw
    target = _digested_path(args)
    try:
        target.write_bytes(serialize_csv(outcome.table))
    except OSError as exc:
        raise DataNomadError(f"cannot write {target}: {exc}") from exc

    summary = outcome.summary()
    summary["local_csv"] = str(target)
    if args.format == "json":
        out.write(json.dumps(summary, indent=2, ensure_ascii=False) + "\n")
        return EXIT_OK
    r = outcome.record
    out.write(f"Digest stored for survey {r.survey_id} (revision {outcome.revision})\n")
    out.write(f"Platform: {r.platform_id}, header rows: {r.header_row_count}, data rows: {r.data_row_count}\n")
    if r.delete_requested_column:
        out.write(
            f"Rows removed on request ({r.delete_requested_column}): {r.deleted_requested_row_count}\n"
        )
    if r.ip_pseudonym_column:
        out.write(f"IP addresses replaced by salted codes in column {r.ip_pseudonym_column}\n")
    out.write(f"Local copy: {target}\n")
    out.write("Columns:\n")
    width = max(len(c.name) for c in r.columns)
    for c in r.columns:
        out.write(f"  {c.name:<{width}}  {c.hash}\n")
    for w in outcome.table.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, out: TextIO) -> int:
    store = _store(args)
    record, revision = store.get_with_revision(args.survey_id, args.revision)
    profiles = load_profiles(args.profiles)
    profile = profile_for_record(record, profiles)
    if args.header_rows is not None:
        profile = profile.with_header_rows(args.header_rows)
    try:
        raw = Path(args.input).read_bytes()
    except OSError as exc:
        raise DataNomadError(f"cannot read {args.input}: {exc}") from exc
    report = verify(record, parse_csv(raw, profile), revision=revision)
    out.write(render_report(report, args.format).decode("utf-8"))
    return EXIT_RED if report.verdict == RED else EXIT_OK


def cmd_inspect(args: argparse.Namespace, out: TextIO) -> int:
    store = _store(args)
    if args.all:
        records = store.revisions(args.survey_id)
        doc = [{"revision": i, "record": r.to_dict()} for i, r in enumerate(records, 1)]
    else:
        record, revision = store.get_with_revision(args.survey_id, args.revision)
        doc = {"revision": revision, "record": record.to_dict()}
    out.write(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, out: TextIO) -> int:
    summary = run_scenario_suite(args.scenarios, seed=args.seed, workers=args.workers)
    out.write(json.dumps(summary, indent=2) + "\n")
    ok = summary["all_detected"] and summary["legitimate_redaction"]["false_positives"] == 0
    return EXIT_OK if ok else EXIT_RED


def cmd_demo(args: argparse.Namespace, out: TextIO) -> int:
    out.write("Two-group tests on the voting experiment\n")
    out.write(f"{'scenario':<18}{'counts (yc/nc, yt/nt)':<24}{'published':>10}{'t-test p':>11}{'z-test p':>11}\n")
    for row in p_value_rows():
        counts = f"{row['yes1']}/{row['n1']}, {row['yes2']}/{row['n2']}"
        out.write(
            f"{row['scenario']:<18}{counts:<24}{row['published']:>10.3f}"
            f"{row['t_p']:>11.4f}{row['z_p']:>11.4f}\n"
        )
    out.write("\nWorked example: survey " + worked_example.SURVEY_ID + "\n")
    for title, report in worked_example_reports():
        out.write(f"\n[{title}]\n")
        out.write(render_report(report, "text").decode("utf-8"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="datanomad",
        description="Column-hash digests of survey exports and verification of archived copies.",
        epilog=(
            f"Environment: {STORE_ENV_VAR} (store directory), DATANOMAD_BASE_URL, "
            "DATANOMAD_API_TOKEN, DATANOMAD_USERNAME, DATANOMAD_PASSWORD. "
            "Exit codes: 0 ok/GREEN, 1 RED, 2 usage/config error, 3 I/O or platform error."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def store_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--store", help=f"store directory (default: ${STORE_ENV_VAR})")

    p = sub.add_parser("digest", help="hash every column of a fresh export and store the digest")
    p.add_argument("--survey-id", required=True)
    p.add_argument("--platform", choices=PLATFORM_IDS, default="local")
    p.add_argument("--input", help="read the export from this file instead of fetching it")
    p.add_argument("--header-rows", type=int, help="override the profile's header row count")
    p.add_argument("--base-url", help="platform API base URL")
    p.add_argument("--credentials-file", help="INI file with a [credentials] section")
    p.add_argument("--include-edits", action="store_true",
                   help="fetch the in-platform edited data instead of the unedited original")
    p.add_argument("--ip-option", action="store_true",
                   help="replace the IP column by salted pseudonyms (IPHash)")
    p.add_argument("--delete-requested", metavar="COLUMN",
                   help="drop rows flagged 1/true/yes in COLUMN before hashing")
    p.add_argument("--force", action="store_true", help="add a new revision for a known survey id")
    p.add_argument("--output", help="local CSV path (default: <input>.digested.csv)")
    p.add_argument("--profiles", help="profile override file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    store_args(p)
    p.set_defaults(func=cmd_digest)

    p = sub.add_parser("verify", help="compare an archived CSV with the stored digest")
    p.add_argument("--survey-id", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--revision", type=int)
    p.add_argument("--header-rows", type=int)
    p.add_argument("--profiles")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    store_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("inspect", help="print a stored digest record")
    p.add_argument("--survey-id", required=True)
    p.add_argument("--revision", type=int)
    p.add_argument("--all", action="store_true", help="print every revision")
    store_args(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("simulate", help="run randomized tampering scenarios against the verifier")
    p.add_argument("--scenarios", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo", help="reproduce the worked p-values and the toy verify reports")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args, out)
    except DataNomadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
