"""Shared domain records: raw rows, unified reviews, rejects, result tables.

Records are NamedTuples: immutable, cheap to construct, and they pickle as
plain tuples, which keeps cross-process transport fast.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from typing import NamedTuple

#: Supported review sources, in canonical order.
SOURCES = ("amazon", "imdb", "steam", "yelp")

#: Closed set of machine-readable reasons a row can be dropped for.
REJECT_REASONS = frozenset(
    {
        "ragged_row",
        "bad_json",
        "unsupported_shape",
        "missing_column",
        "null_field",
        "oversize_field",
        "bad_encoding",
        "neutral_dropped",
        "bad_label",
        "bad_date",
        "date_out_of_range",
        "bad_upvotes",
        "empty_after_clean",
    }
)


class RawRecord(NamedTuple):
    """One parsed source row, before any mapping or cleaning.

    ``row_number`` is 1-based and counts physical data lines (the CSV header
    is not counted). ``fields`` maps column name to the raw string value, in
    header order.
    """

    source: str
    row_number: int
    fields: dict[str, str]


class UnifiedDraft(NamedTuple):
    """The six unified fields as raw strings, plus provenance."""

    name_raw: str
    date_raw: str
    sentiment_raw: str
    upvotes_raw: str
    text_raw: str
    source: str
    row_number: int


class UnifiedReview(NamedTuple):
    """A fully cleaned review record.

    Invariants (enforced by the cleaning pipeline and revalidated on lake
    load): non-empty name; date within 1970-01-01..2029-12-31; sentiment in
    {0, 1}; upvotes >= 0; review_text is letters and single interior spaces.
    """

    name: str
    creation_date: _dt.date
    sentiment: int
    upvotes: int
    review_text: str
    source: str


class RejectRecord(NamedTuple):
    """A dropped input row and why it was dropped."""

    source: str
    row_number: int
    reason: str
    detail: str = ""


#: Earliest and latest creation dates considered sane.
DATE_WINDOW_LO = _dt.date(1970, 1, 1)
DATE_WINDOW_HI = _dt.date(2029, 12, 31)


@dataclass
class AggTable:
    """Result of a group-by query: a header plus ordered, sorted rows.

    Rows are tuples whose leading entries are the group-key fields; they are
    sorted ascending by those fields so serialized output is deterministic.
    ``notes`` carries non-tabular side information (e.g. omitted undefined
    cells) and is never serialized into the table itself.
    """

    name: str
    columns: tuple[str, ...]
    rows: list[tuple]
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        bad = [r for r in self.rows if len(r) != len(self.columns)]
        if bad:
            raise ValueError(
                f"table {self.name!r}: row arity {len(bad[0])} != {len(self.columns)} columns"
            )
