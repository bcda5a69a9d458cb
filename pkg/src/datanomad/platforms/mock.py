"""In-process mock survey platform speaking export protocol v1.

Qualtrics-style endpoints (header ``X-API-TOKEN``)::

    POST /export             {"surveyId", "format", <discard-edits param>: bool}
                             -> 200 {"jobId"}
    GET  /export/{jobId}     -> 200 {"status": "inProgress"|"complete", "fileId"?}
    GET  /file/{fileId}      -> 200 application/zip holding one CSV

SurveyCTO-style endpoint (HTTP basic auth)::

    GET  /data/csv/{surveyId}?<discard-edits param>=1|0 -> 200 text/csv

Each survey has an original payload and optionally an edited one; the
discard-edits flag selects between them. ``fail_next`` injects status codes
for upcoming requests, and ``requests`` logs (method, path) pairs.
"""

from __future__ import annotations

import base64
import hmac
import io
import itertools
import json
import threading
import zipfile
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from datanomad.profiles import BUILTIN_PROFILES

PROTOCOL_VERSION = 1


@dataclass
class MockSurvey:
    original: bytes
    edited: bytes | None = None

    def payload(self, unedited: bool) -> bytes:
        if unedited or self.edited is None:
            return self.original
        return self.edited


class MockPlatform:
    def __init__(
        self,
        surveys: dict[str, MockSurvey],
        *,
        token: str = "mock-token",
        username: str = "mock-user",
        password: str = "mock-pass",
        polls_until_complete: int = 2,
        qualtrics_param: str = BUILTIN_PROFILES["qualtrics"].discard_edits_param,
        surveycto_param: str = BUILTIN_PROFILES["surveycto"].discard_edits_param,
    ) -> None:
        self.surveys = surveys
        self.token = token
        self.username = username
        self.password = password
        self.polls_until_complete = polls_until_complete
        self.qualtrics_param = qualtrics_param
        self.surveycto_param = surveycto_param
        self.fail_next: list[int] = []
        self.requests: list[tuple[str, str]] = []
        self._jobs: dict[str, dict] = {}
        self._files: dict[str, bytes] = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle --------------------------------------------------------
    @property
    def base_url(self) -> str:
        if self._server is None:
            raise RuntimeError("mock platform not started")
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> MockPlatform:
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), _make_handler(self))
        self._server.daemon_threads = True
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> MockPlatform:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- request handling -------------------------------------------------
    def handle(self, method: str, target: str, headers, body: bytes) -> tuple[int, str, bytes]:
        parts = urlsplit(target)
        path = parts.path
        with self._lock:
            self.requests.append((method, path))
            if self.fail_next:
                return self.fail_next.pop(0), "application/json", b'{"error":"injected"}'

            segments = [s for s in path.split("/") if s]
            if segments[:2] == ["data", "csv"] and len(segments) == 3 and method == "GET":
                if not self._basic_ok(headers.get("Authorization", "")):
                    return 401, "application/json", b'{"error":"unauthorized"}'
                survey = self.surveys.get(segments[2])
                if survey is None:
                    return 404, "application/json", b'{"error":"unknown survey"}'
                query = parse_qs(parts.query)
                unedited = query.get(self.surveycto_param, ["1"])[0] == "1"
                return 200, "text/csv; charset=utf-8", survey.payload(unedited)

            if not hmac.compare_digest(headers.get("X-API-TOKEN", ""), self.token):
                return 401, "application/json", b'{"error":"unauthorized"}'

            if segments == ["export"] and method == "POST":
                try:
                    req = json.loads(body or b"{}")
                except ValueError:
                    return 400, "application/json", b'{"error":"bad json"}'
                survey = self.surveys.get(req.get("surveyId", ""))
                if survey is None:
                    return 404, "application/json", b'{"error":"unknown survey"}'
                job_id = f"ES_{next(self._ids)}"
                self._jobs[job_id] = {
                    "survey": survey,
                    "survey_id": req["surveyId"],
                    "unedited": bool(req.get(self.qualtrics_param, False)),
                    "polls": 0,
                }
                return 200, "application/json", json.dumps({"jobId": job_id}).encode()

            if len(segments) == 2 and segments[0] == "export" and method == "GET":
                job = self._jobs.get(segments[1])
                if job is None:
                    return 404, "application/json", b'{"error":"unknown job"}'
                job["polls"] += 1
                if job["polls"] < self.polls_until_complete:
                    pct = int(100 * job["polls"] / self.polls_until_complete)
                    doc = {"status": "inProgress", "percentComplete": pct}
                else:
                    file_id = job.get("file_id")
                    if file_id is None:
                        file_id = job["file_id"] = f"F_{next(self._ids)}"
                        self._files[file_id] = _zip_csv(
                            f"{job['survey_id']}.csv", job["survey"].payload(job["unedited"])
                        )
                    doc = {"status": "complete", "percentComplete": 100, "fileId": file_id}
                return 200, "application/json", json.dumps(doc).encode()

            if len(segments) == 2 and segments[0] == "file" and method == "GET":
                data = self._files.get(segments[1])
                if data is None:
                    return 404, "application/json", b'{"error":"unknown file"}'
                return 200, "application/zip", data

            return 404, "application/json", b'{"error":"no such endpoint"}'

    def _basic_ok(self, header: str) -> bool:
        if not header.startswith("Basic "):
            return False
        try:
            user, _, pw = base64.b64decode(header[6:]).decode("utf-8").partition(":")
        except (ValueError, UnicodeDecodeError):
            return False
        return hmac.compare_digest(user, self.username) and hmac.compare_digest(pw, self.password)


def _zip_csv(name: str, payload: bytes) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as archive:
        archive.writestr(name, payload)
    return buf.getvalue()


def _make_handler(platform: MockPlatform):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _dispatch(self, method: str) -> None:
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            status, ctype, payload = platform.handle(method, self.path, self.headers, body)
            self.send_response(status)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("X-Mock-Protocol", str(PROTOCOL_VERSION))
            self.end_headers()
            self.wfile.write(payload)

        def do_GET(self) -> None:
            self._dispatch("GET")

        def do_POST(self) -> None:
            self._dispatch("POST")

        def log_message(self, format, *args) -> None:
            pass

    return Handler
