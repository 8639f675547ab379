class HsRefactorError(Exception):
    """Base class for every error raised by this package."""


class NoSources(HsRefactorError):
    """A directory or snapshot contains no ``.hs`` files."""
