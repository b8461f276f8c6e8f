"""Exception types shared across the harness.

Exit-code mapping for the CLI lives in cli.py; every error raised by the
library derives from ProveError so callers can catch one root type.
"""


class ProveError(Exception):
    """Root of all harness errors."""


class DataError(ProveError):
    """Problems with input data: datasets, fixtures, report files."""


class MalformedRecord(DataError):
    """A dataset record failed validation; carries the 1-based line/index."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownSubsetId(DataError):
    pass


class MarkerMissing(DataError):
    pass


class BoxedMissing(DataError):
    pass


class UnbalancedBraces(DataError):
    pass


class ValueUnparseable(DataError):
    pass


class EmptyInput(DataError):
    pass


class InsufficientPool(DataError):
    """A sample sweep asked for more candidates than a pool holds."""


class BackendError(ProveError):
    """Problems talking to a generation backend or its cache."""


class BackendUnreachable(BackendError):
    pass


class HttpStatusError(BackendError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"HTTP {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class ReplayMiss(BackendError):
    def __init__(self, key: str):
        super().__init__(f"no replay entry for key {key}")
        self.key = key


class CacheConflict(BackendError):
    def __init__(self, key: str):
        super().__init__(f"conflicting write for key {key}")
        self.key = key


class LaunchError(ProveError):
    """The sandbox runner itself could not be started."""
