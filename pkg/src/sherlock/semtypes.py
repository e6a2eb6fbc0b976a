"""The 78-type semantic vocabulary and header normalization.

Canonical names are lowercase, space-separated. Type ids are the index into
SEMANTIC_TYPES (alphabetical order), so id 0 is "address" and id 77 is "year".
"""

from __future__ import annotations

import re

SEMANTIC_TYPES: tuple[str, ...] = (
    "address",
    "affiliate",
    "affiliation",
    "age",
    "album",
    "area",
    "artist",
    "birth date",
    "birth place",
    "brand",
    "capacity",
    "category",
    "city",
    "class",
    "classification",
    "club",
    "code",
    "collection",
    "command",
    "company",
    "component",
    "continent",
    "country",
    "county",
    "creator",
    "credit",
    "currency",
    "day",
    "depth",
    "description",
    "director",
    "duration",
    "education",
    "elevation",
    "family",
    "file size",
    "format",
    "gender",
    "genre",
    "grades",
    "industry",
    "isbn",
    "jockey",
    "language",
    "location",
    "manufacturer",
    "name",
    "nationality",
    "notes",
    "operator",
    "order",
    "organisation",
    "origin",
    "owner",
    "person",
    "plays",
    "position",
    "product",
    "publisher",
    "range",
    "rank",
    "ranking",
    "region",
    "religion",
    "requirement",
    "result",
    "sales",
    "service",
    "sex",
    "species",
    "state",
    "status",
    "symbol",
    "team",
    "team name",
    "type",
    "weight",
    "year",
)

N_TYPES = len(SEMANTIC_TYPES)

TYPE_TO_ID: dict[str, int] = {name: i for i, name in enumerate(SEMANTIC_TYPES)}

# "release date" and "releaseDate" and "RELEASE_DATE" must all collapse to the
# same key: separators ("_", "-", " ") are removable and camelCase humps are
# word boundaries, which vanish anyway once spaces are stripped.
_SEPARATORS = re.compile(r"[ _\-]+")

_KEY_TO_ID: dict[str, int] = {
    _SEPARATORS.sub("", name): i for i, name in enumerate(SEMANTIC_TYPES)
}


def normalize_header(header: str) -> int | None:
    """Map a raw column header onto a type id, or None if it matches no type.

    Matching case-folds the header and removes spaces, underscores and
    hyphens, then compares against the concatenated words of each canonical
    type name.
    """
    key = _SEPARATORS.sub("", header.strip()).casefold()
    return _KEY_TO_ID.get(key)


def type_name(type_id: int) -> str:
    return SEMANTIC_TYPES[type_id]


def type_id(name: str) -> int | None:
    """Resolve a canonical (or separator/case-altered) type name to its id."""
    return normalize_header(name)
