"""Single-tenant HTTP service exposing digest and verify (wire contract v1).

    POST /api/v1/digests              multipart: file + options, or platform fetch fields
    POST /api/v1/verify               multipart: survey_id + file [+ revision]
    GET  /api/v1/digests/{survey_id}  [?revision=n]

All endpoints require ``Authorization: Bearer <token>``. Uploads are parsed in
memory (or the framework's spooled temp file) and dropped after the request;
only digest records reach the store. Run with::

    DATANOMAD_SERVICE_TOKEN=... python -m datanomad.service --store ./store
"""

from __future__ import annotations

import argparse
import hmac
import logging
import os
import uuid
from typing import Callable, Mapping, Optional

from fastapi import Depends, FastAPI, File, Form, Query, Request, UploadFile
from fastapi.responses import JSONResponse

from datanomad.digest import DigestOptions
from datanomad.errors import (
    ConfigurationError,
    DataNomadError,
    DuplicateDigestError,
    InputError,
    ManipulationError,
    NotFoundError,
    PlatformError,
    StoreLockedError,
)
from datanomad.platforms.client import ExportRequest, PlatformCredentials, fetch_raw_csv
from datanomad.profiles import PlatformProfile, get_profile
from datanomad.store import DigestStore
from datanomad.table import serialize_csv
from datanomad.workflow import digest_bytes, verify_bytes

logger = logging.getLogger("datanomad.service")

TOKEN_ENV_VAR = "DATANOMAD_SERVICE_TOKEN"
DEFAULT_MAX_UPLOAD = 100 * 1024 * 1024

_STATUS_BY_ERROR: tuple[tuple[type[DataNomadError], int], ...] = (
    (NotFoundError, 404),
    (DuplicateDigestError, 409),
    (InputError, 422),
    (ConfigurationError, 422),
    (ManipulationError, 422),
    (StoreLockedError, 503),
    (PlatformError, 502),
)


class _Unauthorized(Exception):
    pass


class _TooLarge(Exception):
    pass


def create_app(
    store: DigestStore,
    token: str,
    *,
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD,
    profiles: Mapping[str, PlatformProfile] | None = None,
    fetcher: Callable[..., bytes] = fetch_raw_csv,
) -> FastAPI:
    if not token:
        raise ConfigurationError("the service needs a non-empty bearer token")
    expected = token.encode("utf-8")
    app = FastAPI(title="datanomad", version="1")

    @app.middleware("http")
    async def request_context(request: Request, call_next):
        request_id = request.headers.get("x-request-id") or uuid.uuid4().hex
        request.state.request_id = request_id
        length = request.headers.get("content-length")
        if length is not None and length.isdigit() and int(length) > max_upload_bytes:
            response = JSONResponse({"detail": "upload too large"}, status_code=413)
        else:
            response = await call_next(request)
        response.headers["X-Request-ID"] = request_id
        logger.info(
            "request_id=%s %s %s -> %d",
            request_id, request.method, request.url.path, response.status_code,
        )
        return response

    @app.exception_handler(_Unauthorized)
    async def unauthorized(request: Request, exc: _Unauthorized):
        return JSONResponse(
            {"detail": "missing or invalid bearer token"},
            status_code=401,
            headers={"WWW-Authenticate": "Bearer"},
        )

    @app.exception_handler(_TooLarge)
    async def too_large(request: Request, exc: _TooLarge):
        return JSONResponse({"detail": "upload too large"}, status_code=413)

    @app.exception_handler(DataNomadError)
    async def domain_error(request: Request, exc: DataNomadError):
        status = next((code for cls, code in _STATUS_BY_ERROR if isinstance(exc, cls)), 500)
        logger.warning(
            "request_id=%s failed: %s", request.state.request_id, type(exc).__name__
        )
        return JSONResponse({"detail": str(exc), "error": type(exc).__name__}, status_code=status)

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        logger.error(
            "request_id=%s internal error: %s", request.state.request_id, type(exc).__name__
        )
        return JSONResponse({"detail": "internal error"}, status_code=500)

    def authorize(request: Request) -> None:
        header = request.headers.get("authorization", "")
        scheme, _, presented = header.partition(" ")
        if scheme.lower() != "bearer" or not hmac.compare_digest(
            presented.strip().encode("utf-8"), expected
        ):
            raise _Unauthorized()

    def read_upload(upload: UploadFile) -> bytes:
        data = upload.file.read(max_upload_bytes + 1)
        if len(data) > max_upload_bytes:
            raise _TooLarge()
        return data

    @app.post("/api/v1/digests", status_code=201, dependencies=[Depends(authorize)])
    def create_digest(
        survey_id: str = Form(...),
        platform: str = Form("local"),
        header_rows: Optional[int] = Form(None),
        ip_option: bool = Form(False),
        delete_requested_column: Optional[str] = Form(None),
        force: bool = Form(False),
        return_csv: bool = Form(False),
        file: Optional[UploadFile] = File(None),
        base_url: Optional[str] = Form(None),
        api_token: Optional[str] = Form(None),
        username: Optional[str] = Form(None),
        password: Optional[str] = Form(None),
        fetch_unedited: bool = Form(True),
    ):
        profile = get_profile(platform, header_row_count=header_rows, profiles=profiles)
        if file is not None:
            raw = read_upload(file)
        else:
            if not base_url:
                raise ConfigurationError("either a CSV file or platform fetch parameters are required")
            creds = PlatformCredentials(base_url, api_token, username, password)
            raw = fetcher(creds, ExportRequest(survey_id, fetch_unedited=fetch_unedited), profile)
        options = DigestOptions(
            survey_id=survey_id,
            ip_option=ip_option,
            delete_requested_column=delete_requested_column or None,
        )
        outcome = digest_bytes(raw, profile, options, store, force=force)
        del raw
        body = outcome.summary()
        if return_csv:
            body["digested_csv"] = serialize_csv(outcome.table).decode("utf-8")
        return body

    @app.post("/api/v1/verify", dependencies=[Depends(authorize)])
    def verify_upload(
        survey_id: str = Form(...),
        file: UploadFile = File(...),
        revision: Optional[int] = Form(None),
    ):
        report = verify_bytes(store, survey_id, read_upload(file), revision, profiles)
        return report.to_dict()

    @app.get("/api/v1/digests/{survey_id}", dependencies=[Depends(authorize)])
    def get_digest(survey_id: str, revision: Optional[int] = Query(None)):
        record, rev = store.get_with_revision(survey_id, revision)
        return {"survey_id": survey_id, "revision": rev, "record": record.to_dict()}

    return app


def main(argv: list[str] | None = None) -> None:
    import uvicorn

    parser = argparse.ArgumentParser(prog="datanomad-service")
    parser.add_argument("--store", default=os.environ.get("DATANOMAD_STORE"), required=False)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--max-upload-mb", type=int, default=100)
    args = parser.parse_args(argv)
    token = os.environ.get(TOKEN_ENV_VAR)
    if not args.store or not token:
        parser.error(f"--store (or DATANOMAD_STORE) and {TOKEN_ENV_VAR} are required")
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    app = create_app(DigestStore(args.store), token, max_upload_bytes=args.max_upload_mb * 1024 * 1024)
    uvicorn.run(app, host=args.host, port=args.port, access_log=False)


if __name__ == "__main__":
    main()
