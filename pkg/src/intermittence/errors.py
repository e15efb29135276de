"""Exception hierarchy shared by every module."""


class IntermittenceError(Exception):
    """Base class for all errors raised by this package."""


class DataError(IntermittenceError):
    """Bad input data (CLI exit code 2)."""


class ConfigError(IntermittenceError):
    """Bad configuration or arguments (CLI exit code 1)."""


class EmptyWindow(DataError):
    pass


class NoTransitions(DataError):
    """q-score requested for a window holding a single verdict."""


class WindowTooSmall(ConfigError):
    pass


class MissingExclusionPartner(ConfigError):
    """A consistent-failure group has no intermittent group of the same window size."""


class InvalidModel(ConfigError):
    pass


class NotErgodic(DataError):
    pass


class ParseError(DataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ConflictingVerdict(DataError):
    def __init__(self, key, night):
        super().__init__(f"conflicting verdicts for {key} on {night}")
        self.key = key
        self.night = night


class EmptyLog(DataError):
    pass


class SeriesMismatch(DataError):
    pass


class UnknownCategory(DataError):
    pass
