"""Cleaning rules: raw unified drafts in, validated review records out.

Every step is a pure function. Fallible steps raise :class:`CleanRejection`
carrying one reason from the closed reject enum; :func:`clean_review` turns
that into a :class:`RejectRecord`, so callers never see exceptions for
ordinary dirty data.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import os
import re
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from reviewlake import civil
from reviewlake.errors import ConfigurationError
from reviewlake.model import DATE_WINDOW_HI, DATE_WINDOW_LO, RejectRecord, UnifiedDraft, UnifiedReview

#: Recognized date format identifiers, in the notation mappings use.
DATE_FORMAT_IDS = ("iso", "iso_datetime", "us_slash", "long_month", "epoch_seconds")

SENTIMENT_SCHEMES = ("binary_label", "five_class_label", "star_rating")


class CleanRejection(Exception):
    """Control-flow signal: the row cannot be cleaned, with a closed reason."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail


# ---------------------------------------------------------------------------
# scalar cleaning steps
# ---------------------------------------------------------------------------

_TRIM_CHARS = string.whitespace + '"'
_NON_ALPHA = re.compile(r"[^A-Za-z]+")


def trim_outer(s: str) -> str:
    """Remove leading/trailing whitespace and straight double quotes.

    Interior characters are untouched: ``'"a "b" c"'`` keeps its inner quotes.
    """
    return s.strip(_TRIM_CHARS)


def strip_non_alpha(s: str) -> str:
    """Replace every non-ASCII-alphabetic character run with a single space.

    Digits are non-alphabetic and vanish with the rest; the result is trimmed,
    so it is either empty or letters separated by single spaces.
    """
    return _NON_ALPHA.sub(" ", s).strip()


def remove_stopwords(s: str, stops: "Stoplist") -> str:
    """Drop tokens whose lowercase form is a stopword; keep original casing.

    Expects ``s`` already alphabetic-with-single-spaces (pipeline order).
    """
    if not s:
        return ""
    words = stops.words
    kept = [t for t in s.split(" ") if t.lower() not in words]
    return " ".join(kept)


_FIVE_CLASS = {"very negative": 0, "negative": 0, "positive": 1, "very positive": 1}
_BINARY = {"negative": 0, "false": 0, "0": 0, "positive": 1, "true": 1, "1": 1}
_STARS = {"1": 0, "2": 0, "4": 1, "5": 1}


def map_sentiment(raw: str, scheme: str) -> int:
    """Collapse a source sentiment label onto {0, 1}.

    Matching is case-insensitive for every scheme. Neutral labels (the middle
    five-class label, 3 stars) have no side and are rejected as
    ``neutral_dropped``; anything unrecognized is ``bad_label``.
    """
    label = raw.lower()
    if scheme == "five_class_label":
        got = _FIVE_CLASS.get(label)
        if got is not None:
            return got
        if label == "neutral":
            raise CleanRejection("neutral_dropped", raw)
    elif scheme == "binary_label":
        got = _BINARY.get(label)
        if got is not None:
            return got
    elif scheme == "star_rating":
        got = _STARS.get(label)
        if got is not None:
            return got
        if label == "3":
            raise CleanRejection("neutral_dropped", raw)
    else:
        raise ConfigurationError(f"unknown sentiment scheme: {scheme!r}")
    raise CleanRejection("bad_label", raw)


def _dec(s: str) -> bool:
    return s.isdecimal()


def _match_iso(s: str) -> tuple[int, int, int] | None:
    if len(s) == 10 and s[4] == "-" and s[7] == "-":
        y, m, d = s[0:4], s[5:7], s[8:10]
        if _dec(y) and _dec(m) and _dec(d):
            return int(y), int(m), int(d)
    return None


def _match_iso_datetime(s: str) -> tuple[int, int, int] | None:
    if len(s) == 19 and s[10] == " " and s[13] == ":" and s[16] == ":":
        ymd = _match_iso(s[:10])
        hh, mm, ss = s[11:13], s[14:16], s[17:19]
        if ymd and _dec(hh) and _dec(mm) and _dec(ss):
            if int(hh) <= 23 and int(mm) <= 59 and int(ss) <= 59:
                return ymd
            raise CleanRejection("bad_date", s)  # shape matched, time impossible
    return None


def _match_us_slash(s: str) -> tuple[int, int, int] | None:
    if len(s) == 10 and s[2] == "/" and s[5] == "/":
        m, d, y = s[0:2], s[3:5], s[6:10]
        if _dec(m) and _dec(d) and _dec(y):
            return int(y), int(m), int(d)
    return None


_MONTH_BY_NAME = {name.lower(): i + 1 for i, name in enumerate(civil.MONTH_NAMES)}


def _match_long_month(s: str) -> tuple[int, int, int] | None:
    # "July 4, 2019" / "December 25, 2020"
    sp = s.find(" ")
    if sp < 0:
        return None
    month = _MONTH_BY_NAME.get(s[:sp].lower())
    if month is None:
        return None
    rest = s[sp + 1 :]
    comma = rest.find(", ")
    if comma < 1:
        return None
    day_s, year_s = rest[:comma], rest[comma + 2 :]
    if len(day_s) <= 2 and _dec(day_s) and len(year_s) == 4 and _dec(year_s):
        return int(year_s), month, int(day_s)
    return None


def _match_epoch_seconds(s: str) -> tuple[int, int, int] | None:
    body = s[1:] if s[:1] == "-" else s
    if not body or not _dec(body):
        return None
    return civil.civil_from_days(int(s) // 86400)


_FORMAT_MATCHERS = {
    "iso": _match_iso,
    "iso_datetime": _match_iso_datetime,
    "us_slash": _match_us_slash,
    "long_month": _match_long_month,
    "epoch_seconds": _match_epoch_seconds,
}

_WINDOW_LO = (DATE_WINDOW_LO.year, DATE_WINDOW_LO.month, DATE_WINDOW_LO.day)
_WINDOW_HI = (DATE_WINDOW_HI.year, DATE_WINDOW_HI.month, DATE_WINDOW_HI.day)


def normalize_date(raw: str, formats: tuple[str, ...]) -> _dt.date:
    """Parse with the first lexically matching format, then validate.

    A lexical match is final: a string shaped like a known format but naming
    an impossible day (Feb 30) is ``bad_date``, not a fall-through to later
    formats. Valid dates outside 1970-01-01..2029-12-31 are
    ``date_out_of_range``.
    """
    for fmt in formats:
        ymd = _FORMAT_MATCHERS[fmt](raw)
        if ymd is None:
            continue
        y, m, d = ymd
        if not civil.is_valid_date(y, m, d):
            raise CleanRejection("bad_date", raw)
        if not (_WINDOW_LO <= ymd <= _WINDOW_HI):
            raise CleanRejection("date_out_of_range", raw)
        return _dt.date(y, m, d)
    raise CleanRejection("bad_date", raw)


def parse_upvotes(raw: str) -> int:
    """Decimal upvote count; an empty string means zero engagement.

    Strictly ASCII digits: int() alone would wave through signs,
    surrounding whitespace, underscores, and non-ASCII digits.
    """
    if raw == "":
        return 0
    if not (raw.isascii() and raw.isdecimal()):
        raise CleanRejection("bad_upvotes", raw)
    return int(raw, 10)


# ---------------------------------------------------------------------------
# stoplist
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stoplist:
    """Lowercase stopword set plus provenance for the lake manifest."""

    words: frozenset[str]
    source_path: str
    checksum: str


def load_stoplist(path: str) -> Stoplist:
    """Load a one-word-per-line stoplist; ``#`` starts a comment line."""
    with open(path, "rb") as fh:
        blob = fh.read()
    words = set()
    for lineno, line in enumerate(blob.decode("utf-8").splitlines(), start=1):
        token = line.strip()
        if not token or token.startswith("#"):
            continue
        if not token.isascii() or not token.isalpha() or token != token.lower():
            raise ConfigurationError(
                f"{path}:{lineno}: stoplist entries must be lowercase alphabetic, got {token!r}"
            )
        words.add(token)
    return Stoplist(frozenset(words), path, hashlib.sha256(blob).hexdigest())


@lru_cache(maxsize=1)
def default_stoplist() -> Stoplist:
    """The bundled list of 127 common English function words."""
    res = resources.files("reviewlake").joinpath("data/stopwords.txt")
    with resources.as_file(res) as path:
        return load_stoplist(str(path))


def resolve_stoplist(configured_path: str | None = None) -> Stoplist:
    """Pick the active stoplist: REVIEWLAKE_STOPLIST env, then config, then bundled."""
    env = os.environ.get("REVIEWLAKE_STOPLIST")
    if env:
        return load_stoplist(env)
    if configured_path:
        return load_stoplist(configured_path)
    return default_stoplist()


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def clean_review(draft: UnifiedDraft, stops: Stoplist, mapping) -> UnifiedReview | RejectRecord:
    """Apply the full cleaning pipeline to one draft.

    Order: outer trim on every field, empty name/text check, date, sentiment,
    upvotes, then the text pipeline (alphabetic strip, stopword removal,
    empty check). The first failure wins and names its reason.
    """
    name = trim_outer(draft.name_raw)
    text = trim_outer(draft.text_raw)
    try:
        if not name or not text:
            raise CleanRejection("null_field", "name" if not name else "text")
        date = normalize_date(trim_outer(draft.date_raw), mapping.date_formats)
        sentiment = map_sentiment(trim_outer(draft.sentiment_raw), mapping.sentiment_scheme)
        upvotes = parse_upvotes(trim_outer(draft.upvotes_raw))
        cleaned = remove_stopwords(strip_non_alpha(text), stops)
        if not cleaned:
            raise CleanRejection("empty_after_clean", text[:40])
    except CleanRejection as rej:
        return RejectRecord(draft.source, draft.row_number, rej.reason, rej.detail)
    return UnifiedReview(name, date, sentiment, upvotes, cleaned, draft.source)
