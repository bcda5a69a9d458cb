from datanomad.platforms.client import (
    ExportRequest,
    PlatformCredentials,
    RetryPolicy,
    fetch_raw_csv,
)

__all__ = ["ExportRequest", "PlatformCredentials", "RetryPolicy", "fetch_raw_csv"]
