"""Streaming source-export parsers and the per-source column adapters.

The CSV reader works on raw bytes in bounded memory: a quote-aware scan
finds record boundaries (quoted fields may hold delimiters, doubled-quote
escapes, and embedded newlines), each record is split and UTF-8 decoded on
its own, and a malformed row costs exactly one reject instead of the file.
Records that outgrow the size cap are dropped in a resynchronizing discard
mode, so a runaway quote cannot buffer the rest of the file.

Leniencies, chosen to match what common exporters emit: LF and CRLF line
endings both end records, a UTF-8 BOM before the header is ignored, quotes
opened mid-field are literal characters, and bytes between a closing quote
and the next delimiter are kept as-is.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from reviewlake.clean import DATE_FORMAT_IDS, SENTIMENT_SCHEMES
from reviewlake.errors import ConfigurationError, CsvParseError, MappingFileError
from reviewlake.model import RawRecord, RejectRecord, SOURCES, UnifiedDraft

FIELD_CAP = 1 << 20  # one field may not exceed 1 MiB
_CHUNK = 1 << 18
_MAX_JSON_LINE = 1 << 24
_QUOTE = 0x22
_CR = 0x0D


def _check_source(source: str) -> None:
    if source not in SOURCES:
        raise ConfigurationError(f"unknown source {source!r}, expected one of {SOURCES}")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _scan_records(stream, dl: int, caps: list[int]):
    """Yield ("rec", record_bytes) per CSV record, ("big", None) for records
    dropped at the size cap (caps[0], readable each check so the caller can
    widen it once the header fixes the column count).

    Boundaries honor RFC-4180 quoting. A quote opens a field only at a field
    start (record start or right after a delimiter); elsewhere it is content.
    Unterminated quote at end of input aborts with the opening quote's byte
    offset. Zero-length records (blank lines) come out as ("blank", None) so
    the caller can keep a conservation count.
    """
    read = stream.read
    buf = b""
    base = 0  # file offset of buf[0]
    rstart = 0  # record start within buf
    spos = 0  # scan resume position
    inq = False
    qopen = -1
    discard = False
    eof = False
    while True:
        blen = len(buf)
        stalled = False
        while spos < blen:
            if inq:
                k = buf.find(b'"', spos)
                if k < 0:
                    spos = blen
                elif k + 1 < blen:
                    if buf[k + 1] == _QUOTE:
                        spos = k + 2  # doubled quote, stay inside
                    else:
                        inq = False
                        spos = k + 1
                elif eof:
                    inq = False
                    spos = k + 1
                else:
                    stalled = True  # quote is the last byte: escape or close?
                    break
            else:
                n = buf.find(b"\n", spos)
                limit = n if n >= 0 else blen
                q = buf.find(b'"', spos, limit)
                while q >= 0 and q != rstart and buf[q - 1] != dl:
                    q = buf.find(b'"', q + 1, limit)  # literal mid-field quote
                if q >= 0:
                    inq = True
                    qopen = base + q
                    spos = q + 1
                elif n >= 0:
                    end = n
                    if end > rstart and buf[end - 1] == _CR:
                        end -= 1
                    if discard:
                        discard = False
                        yield ("big", None)
                    elif end > rstart:
                        yield ("rec", buf[rstart:end])
                    else:
                        yield ("blank", None)
                    rstart = spos = n + 1
                else:
                    spos = blen
            blen = len(buf)
        if eof and not stalled:
            if inq:
                raise CsvParseError("unterminated quoted field", byte_offset=qopen)
            if discard:
                yield ("big", None)
            else:
                end = len(buf)
                if end > rstart and buf[end - 1] == _CR:
                    end -= 1
                if end > rstart:
                    yield ("rec", buf[rstart:end])
            return
        if not discard and len(buf) - rstart > caps[0]:
            discard = True
        if discard:
            # keep one byte of context so the field-start test stays valid
            keep = spos - 1 if spos > 0 else 0
            base += keep
            buf = buf[keep:]
            spos -= keep
            rstart = 0
        elif rstart > 0:
            base += rstart
            buf = buf[rstart:]
            spos -= rstart
            rstart = 0
        chunk = read(_CHUNK)
        if chunk:
            buf += chunk
        else:
            eof = True


def _split_fields(rec: bytes, dl: bytes) -> list[bytes] | None:
    """Split one complete record into raw field bytes.

    Returns None only if quoting desynchronizes from the boundary scan,
    which would be a parser bug, not an input problem.
    """
    if rec.find(b'"') < 0:
        return rec.split(dl)
    out = []
    i = 0
    length = len(rec)
    while True:
        if i < length and rec[i] == _QUOTE:
            j = i + 1
            parts = []
            while True:
                k = rec.find(b'"', j)
                if k < 0:
                    return None
                if rec[k + 1 : k + 2] == b'"':
                    parts.append(rec[j : k + 1])  # slice keeps one of the pair
                    j = k + 2
                else:
                    parts.append(rec[j:k])
                    i = k + 1
                    break
            d = rec.find(dl, i)
            if d < 0:
                parts.append(rec[i:])
                out.append(b"".join(parts))
                return out
            parts.append(rec[i:d])
            out.append(b"".join(parts))
            i = d + 1
        else:
            d = rec.find(dl, i)
            if d < 0:
                out.append(rec[i:])
                return out
            out.append(rec[i:d])
            i = d + 1


def parse_csv(stream, delimiter: str = ",", *, source: str, stats: dict | None = None):
    """Parse a CSV byte stream into RawRecords, yielding RejectRecords for
    rows that fail structurally (ragged_row, oversize_field, bad_encoding).

    The first record is the header and sets the expected field count. Row
    numbers are 1-based over non-blank data records. Blank lines consume no
    row number; when a stats dict is given its "blank_lines" entry counts
    them. File-level damage (no header, duplicate header names,
    unterminated quote) raises CsvParseError instead of rejecting.
    """
    _check_source(source)
    if len(delimiter) != 1 or delimiter in '"\r\n' or ord(delimiter) > 126:
        raise ConfigurationError(f"delimiter must be one printable ASCII char, got {delimiter!r}")
    dlb = delimiter.encode("ascii")
    caps = [2 * FIELD_CAP + 65536]
    header: tuple[str, ...] | None = None
    ncols = 0
    row = 0
    for kind, rec in _scan_records(stream, dlb[0], caps):
        if kind == "blank":
            if stats is not None:
                stats["blank_lines"] = stats.get("blank_lines", 0) + 1
            continue
        if header is None:
            if kind == "big":
                raise CsvParseError(f"header record exceeds {caps[0]} bytes")
            if rec.startswith(b"\xef\xbb\xbf"):
                rec = rec[3:]
            fields = _split_fields(rec, dlb)
            if fields is None:
                raise CsvParseError("quoting desynchronized in header")
            try:
                header = tuple(f.decode("utf-8") for f in fields)
            except UnicodeDecodeError as exc:
                raise CsvParseError(f"header is not valid UTF-8: {exc}") from None
            if len(set(header)) != len(header):
                raise CsvParseError("duplicate column names in header")
            ncols = len(header)
            caps[0] = ncols * (2 * FIELD_CAP + 3) + 65536  # worst case: all-quote fields
            continue
        row += 1
        if kind == "big":
            yield RejectRecord(source, row, "oversize_field", "record exceeds size cap")
            continue
        fields = _split_fields(rec, dlb)
        if fields is None:
            raise CsvParseError(f"quoting desynchronized at row {row}")
        if len(fields) != ncols:
            yield RejectRecord(source, row, "ragged_row", f"{len(fields)} fields, expected {ncols}")
            continue
        if max(map(len, fields)) > FIELD_CAP:
            yield RejectRecord(source, row, "oversize_field", f"field over {FIELD_CAP} bytes")
            continue
        try:
            values = [f.decode("utf-8") for f in fields]
        except UnicodeDecodeError as exc:
            yield RejectRecord(source, row, "bad_encoding", str(exc)[:120])
            continue
        yield RawRecord(source, row, dict(zip(header, values)))
    if header is None:
        raise CsvParseError("empty input: a header row is required")


# ---------------------------------------------------------------------------
# JSON lines
# ---------------------------------------------------------------------------


def parse_jsonl(stream, *, source: str, stats: dict | None = None):
    """Parse one flat JSON object per line into RawRecords.

    Numbers keep their source spelling (parse hooks return the literal
    text), booleans become "true"/"false", null becomes the empty string.
    Nested objects or arrays reject the line as unsupported_shape; malformed
    JSON is bad_json; blank lines are skipped without a row number and
    counted under "blank_lines" in the optional stats dict.
    """
    _check_source(source)
    readline = stream.readline
    row = 0
    while True:
        line = readline(_MAX_JSON_LINE + 1)
        if not line:
            return
        if len(line) > _MAX_JSON_LINE and not line.endswith(b"\n"):
            row += 1
            while True:  # swallow the rest of the physical line
                more = readline(_MAX_JSON_LINE)
                if not more or more.endswith(b"\n"):
                    break
            yield RejectRecord(source, row, "oversize_field", "line exceeds size cap")
            continue
        stripped = line.strip()
        if not stripped:
            if stats is not None:
                stats["blank_lines"] = stats.get("blank_lines", 0) + 1
            continue
        row += 1
        try:
            text = stripped.decode("utf-8")
        except UnicodeDecodeError as exc:
            yield RejectRecord(source, row, "bad_encoding", str(exc)[:120])
            continue
        try:
            obj = json.loads(text, parse_int=str, parse_float=str, parse_constant=str)
        except ValueError as exc:
            yield RejectRecord(source, row, "bad_json", str(exc)[:120])
            continue
        if obj.__class__ is not dict:
            yield RejectRecord(source, row, "unsupported_shape", "top-level value is not an object")
            continue
        fields: dict[str, str] = {}
        bad: RejectRecord | None = None
        for key, val in obj.items():
            cls = val.__class__
            if cls is str:
                sval = val
            elif val is True:
                sval = "true"
            elif val is False:
                sval = "false"
            elif val is None:
                sval = ""
            else:
                bad = RejectRecord(source, row, "unsupported_shape", f"nested value under {key!r}")
                break
            if len(sval) > FIELD_CAP:
                bad = RejectRecord(source, row, "oversize_field", f"field {key!r} over cap")
                break
            fields[key] = sval
        yield bad if bad is not None else RawRecord(source, row, fields)


# ---------------------------------------------------------------------------
# source mappings and the adapter
# ---------------------------------------------------------------------------

UNIFIED_FIELDS = ("name", "date", "sentiment", "upvotes", "text")

#: Unified fields that must be non-empty at adaptation time. Upvotes is
#: exempt: an empty count later parses as zero engagement.
_REQUIRED = ("name", "date", "sentiment", "text")


@dataclass(frozen=True)
class SourceMapping:
    """How one source's columns project onto the unified draft schema."""

    source: str
    column_map: dict[str, str] = field(hash=False)
    sentiment_scheme: str
    date_formats: tuple[str, ...]
    delimiter: str = ","


def _mapping_from_obj(obj, origin: str) -> SourceMapping:
    if not isinstance(obj, dict):
        raise MappingFileError(f"{origin}: mapping must be a JSON object")
    allowed = {"source", "column_map", "sentiment_scheme", "date_formats", "delimiter"}
    unknown = set(obj) - allowed
    if unknown:
        raise MappingFileError(f"{origin}: unknown keys {sorted(unknown)}")
    missing = {"source", "column_map", "sentiment_scheme", "date_formats"} - set(obj)
    if missing:
        raise MappingFileError(f"{origin}: missing keys {sorted(missing)}")
    source = obj["source"]
    if source not in SOURCES:
        raise MappingFileError(f"{origin}: source must be one of {SOURCES}, got {source!r}")
    cmap = obj["column_map"]
    if not isinstance(cmap, dict) or set(cmap) != set(UNIFIED_FIELDS):
        raise MappingFileError(f"{origin}: column_map must map exactly {UNIFIED_FIELDS}")
    for k, v in cmap.items():
        if not isinstance(v, str) or not v:
            raise MappingFileError(f"{origin}: column_map[{k!r}] must be a non-empty string")
    scheme = obj["sentiment_scheme"]
    if scheme not in SENTIMENT_SCHEMES:
        raise MappingFileError(f"{origin}: sentiment_scheme must be one of {SENTIMENT_SCHEMES}")
    fmts = obj["date_formats"]
    if (
        not isinstance(fmts, list)
        or not fmts
        or len(set(fmts)) != len(fmts)
        or any(f not in DATE_FORMAT_IDS for f in fmts)
    ):
        raise MappingFileError(
            f"{origin}: date_formats must be a non-empty list without repeats, ids from {DATE_FORMAT_IDS}"
        )
    delim = obj.get("delimiter", ",")
    if not isinstance(delim, str) or len(delim) != 1:
        raise MappingFileError(f"{origin}: delimiter must be a single character")
    return SourceMapping(source, dict(cmap), scheme, tuple(fmts), delim)


def load_mapping(path: str) -> SourceMapping:
    """Read and validate a mapping file; bad shape or values raise MappingFileError."""
    try:
        with open(path, "rb") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise MappingFileError(f"{path}: {exc}") from None
    except ValueError as exc:
        raise MappingFileError(f"{path}: not valid JSON: {exc}") from None
    return _mapping_from_obj(obj, path)


@lru_cache(maxsize=None)
def default_mapping(source: str) -> SourceMapping:
    """The bundled mapping for a source; user mapping files override it."""
    _check_source(source)
    blob = resources.files("reviewlake").joinpath(f"data/mappings/{source}.json").read_text("utf-8")
    return _mapping_from_obj(json.loads(blob), f"builtin mapping {source!r}")


def adapt(record: RawRecord, mapping: SourceMapping) -> UnifiedDraft | RejectRecord:
    """Project one raw record onto the unified draft fields.

    Columns the mapping does not mention are dropped. A mapped column absent
    from the record is missing_column; an empty value in a required field is
    null_field already at this stage.
    """
    if record.source != mapping.source:
        raise ConfigurationError(
            f"adapter for {mapping.source!r} applied to a {record.source!r} record"
        )
    fields = record.fields
    cmap = mapping.column_map
    vals = []
    for unified in UNIFIED_FIELDS:
        col = cmap[unified]
        v = fields.get(col)
        if v is None:
            return RejectRecord(record.source, record.row_number, "missing_column", col)
        vals.append(v)
    for unified, v in zip(UNIFIED_FIELDS, vals):
        if not v and unified in _REQUIRED:
            return RejectRecord(record.source, record.row_number, "null_field", unified)
    return UnifiedDraft(vals[0], vals[1], vals[2], vals[3], vals[4], record.source, record.row_number)
