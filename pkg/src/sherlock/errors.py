"""Exception hierarchy shared across the toolkit."""


class SherlockError(Exception):
    """Base class for all toolkit errors."""


class DataError(SherlockError):
    """Malformed or unusable input data (bad file, bad line, empty corpus)."""


class ModelError(SherlockError):
    """Model-level failure (non-finite loss, wrong input width, bad container)."""
