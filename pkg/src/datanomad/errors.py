"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures without a
lookup table: 2 for usage/configuration problems, 3 for I/O, input-data and
platform failures.
"""

from __future__ import annotations


class DataNomadError(Exception):
    exit_code = 3


class ConfigurationError(DataNomadError):
    exit_code = 2


class InputError(DataNomadError):
    """The input bytes could not be turned into a table."""


class EncodingError(InputError):
    pass


class CsvParseError(InputError):
    def __init__(self, message: str, row: int) -> None:
        super().__init__(f"row {row}: {message}")
        self.row = row


class StructureError(InputError):
    pass


class DuplicateDigestError(DataNomadError):
    exit_code = 2


class NotFoundError(DataNomadError):
    exit_code = 2


class StoreLockedError(DataNomadError):
    pass


class PlatformError(DataNomadError):
    retryable = False


class CredentialError(PlatformError):
    pass


class TransientPlatformError(PlatformError):
    retryable = True


class ExportTimeoutError(TransientPlatformError):
    pass


class ProtocolError(PlatformError):
    pass


class ManipulationError(DataNomadError):
    exit_code = 2


class UndefinedStatisticError(DataNomadError):
    exit_code = 2
