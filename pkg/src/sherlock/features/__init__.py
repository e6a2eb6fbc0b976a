from . import chars, paragraph, stats, words  # noqa: F401
