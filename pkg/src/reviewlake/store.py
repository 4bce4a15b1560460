"""The local review lake: JSON-lines staging with a manifest, replacing a
distributed store at desk scale.

Layout inside a lake directory: ``manifest.json``, one ``<source>.jsonl``
per source that contributed accepted records, and ``rejects.jsonl``. Writes
build the whole lake in a hidden temp directory next to the target and
rename it into place, so readers never observe a partial lake. Reads
revalidate every record against the unified-schema invariants and
cross-check counts against the manifest, refusing corrupted lakes loudly.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import re
import shutil
import tempfile
from dataclasses import dataclass

from reviewlake import engine
from reviewlake.clean import normalize_date, CleanRejection
from reviewlake.engine import PartitionedDataset
from reviewlake.errors import ConfigurationError, CorruptLakeError
from reviewlake.model import REJECT_REASONS, RejectRecord, SOURCES, UnifiedReview

MANIFEST_NAME = "manifest.json"
REJECTS_NAME = "rejects.jsonl"

_dumps = json.dumps
_TEXT_SHAPE = re.compile(r"[A-Za-z]+(?: [A-Za-z]+)*")


@dataclass
class SourceStats:
    accepted: int = 0
    blank_lines: int = 0
    rejected_by_reason: dict[str, int] | None = None

    def __post_init__(self):
        if self.rejected_by_reason is None:
            self.rejected_by_reason = {}


@dataclass
class LakeManifest:
    created_at: str
    per_source: dict[str, SourceStats]
    record_files: tuple[str, ...]
    stoplist_checksum: str


def lake_timestamp() -> str:
    """Manifest timestamp; SOURCE_DATE_EPOCH pins it for reproducible runs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = int(epoch) if epoch else None
    now = _dt.datetime.now(_dt.timezone.utc) if when is None else _dt.datetime.fromtimestamp(
        when, _dt.timezone.utc
    )
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def review_to_json(r: UnifiedReview) -> str:
    """One lake line, keys in fixed order, no extra whitespace."""
    return (
        f'{{"name":{_dumps(r.name)},"creation_date":"{r.creation_date.isoformat()}"'
        f',"sentiment":{r.sentiment},"upvotes":{r.upvotes}'
        f',"review_text":{_dumps(r.review_text)},"source":"{r.source}"}}'
    )


def reject_to_json(r: RejectRecord) -> str:
    return (
        f'{{"source":"{r.source}","row_number":{r.row_number}'
        f',"reason":"{r.reason}","detail":{_dumps(r.detail)}}}'
    )


def manifest_to_json(m: LakeManifest) -> str:
    doc = {
        "created_at": m.created_at,
        "per_source": {
            src: {
                "accepted": st.accepted,
                "blank_lines": st.blank_lines,
                "rejected_by_reason": dict(sorted(st.rejected_by_reason.items())),
            }
            for src, st in sorted(m.per_source.items())
        },
        "record_files": list(m.record_files),
        "stoplist_checksum": m.stoplist_checksum,
    }
    return json.dumps(doc, indent=2) + "\n"


class LakeWriter:
    """Builds a lake in a temp directory; commit() renames it into place.

    Used directly by the streaming ingest path so records go straight to
    disk as they are cleaned; write_lake wraps it for in-memory datasets.
    """

    def __init__(self, target_dir: str):
        self.target = os.path.abspath(target_dir)
        parent = os.path.dirname(self.target) or "."
        os.makedirs(parent, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".lake-tmp-", dir=parent)
        self._open: dict[str, object] = {}
        self._done = False

    def path_for(self, filename: str) -> str:
        return os.path.join(self.tmp, filename)

    def writer_for(self, filename: str):
        fh = self._open.get(filename)
        if fh is None:
            fh = open(self.path_for(filename), "w", encoding="utf-8", newline="\n")
            self._open[filename] = fh
        return fh

    def write_manifest(self, manifest: LakeManifest) -> None:
        with open(self.path_for(MANIFEST_NAME), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest_to_json(manifest))

    def commit(self) -> None:
        for fh in self._open.values():
            fh.flush()
            os.fsync(fh.fileno())
            fh.close()
        self._open.clear()
        target = self.target
        if os.path.exists(target):
            if not os.path.isdir(target):
                raise ConfigurationError(f"{target}: exists and is not a directory")
            if os.listdir(target) and not os.path.exists(os.path.join(target, MANIFEST_NAME)):
                raise ConfigurationError(
                    f"{target}: refusing to replace a non-empty directory that is not a lake"
                )
            graveyard = target + f".old-{os.getpid()}"
            os.rename(target, graveyard)
            os.rename(self.tmp, target)
            shutil.rmtree(graveyard)
        else:
            os.rename(self.tmp, target)
        self._done = True

    def abort(self) -> None:
        if not self._done:
            for fh in self._open.values():
                fh.close()
            self._open.clear()
            shutil.rmtree(self.tmp, ignore_errors=True)


def write_lake(
    reviews: PartitionedDataset,
    rejects: list[RejectRecord],
    lake_dir: str,
    *,
    stoplist_checksum: str = "",
    blanks: dict[str, int] | None = None,
) -> LakeManifest:
    """Stage a cleaned dataset as a lake directory, atomically.

    One JSONL file per source with accepted records (insertion order),
    all rejects in rejects.jsonl, counts in manifest.json. An interrupted
    write leaves the target untouched.
    """
    stats: dict[str, SourceStats] = {}
    writer = LakeWriter(lake_dir)
    try:
        for rec in reviews.to_list():
            st = stats.get(rec.source)
            if st is None:
                st = stats[rec.source] = SourceStats()
            st.accepted += 1
            writer.writer_for(rec.source + ".jsonl").write(review_to_json(rec) + "\n")
        rej_fh = writer.writer_for(REJECTS_NAME)
        for rej in rejects:
            st = stats.get(rej.source)
            if st is None:
                st = stats[rej.source] = SourceStats()
            st.rejected_by_reason[rej.reason] = st.rejected_by_reason.get(rej.reason, 0) + 1
            rej_fh.write(reject_to_json(rej) + "\n")
        for src, n in (blanks or {}).items():
            st = stats.get(src)
            if st is None:
                st = stats[src] = SourceStats()
            st.blank_lines = n
        manifest = LakeManifest(
            created_at=lake_timestamp(),
            per_source=stats,
            record_files=tuple(sorted(s + ".jsonl" for s, st in stats.items() if st.accepted)),
            stoplist_checksum=stoplist_checksum,
        )
        writer.write_manifest(manifest)
        writer.commit()
    except BaseException:
        writer.abort()
        raise
    return manifest


def load_manifest(lake_dir: str) -> LakeManifest:
    path = os.path.join(lake_dir, MANIFEST_NAME)
    try:
        with open(path, "rb") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CorruptLakeError(f"{lake_dir}: no readable manifest: {exc}") from None
    except ValueError as exc:
        raise CorruptLakeError(f"{path}: not valid JSON: {exc}") from None
    try:
        per_source = {}
        for src, st in doc["per_source"].items():
            if src not in SOURCES:
                raise CorruptLakeError(f"{path}: unknown source {src!r}")
            rejected = st["rejected_by_reason"]
            bad = set(rejected) - REJECT_REASONS
            if bad:
                raise CorruptLakeError(f"{path}: unknown reject reasons {sorted(bad)}")
            per_source[src] = SourceStats(
                accepted=int(st["accepted"]),
                blank_lines=int(st.get("blank_lines", 0)),
                rejected_by_reason={k: int(v) for k, v in rejected.items()},
            )
        return LakeManifest(
            created_at=str(doc["created_at"]),
            per_source=per_source,
            record_files=tuple(doc["record_files"]),
            stoplist_checksum=str(doc["stoplist_checksum"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptLakeError(f"{path}: malformed manifest: {exc!r}") from None


def _validate_line(doc, source: str, path: str, lineno: int) -> UnifiedReview:
    if doc.__class__ is not dict or list(doc) != [
        "name",
        "creation_date",
        "sentiment",
        "upvotes",
        "review_text",
        "source",
    ]:
        raise CorruptLakeError(f"{path}:{lineno}: wrong record shape")
    name = doc["name"]
    text = doc["review_text"]
    sentiment = doc["sentiment"]
    upvotes = doc["upvotes"]
    if doc["source"] != source:
        raise CorruptLakeError(f"{path}:{lineno}: source mismatch: {doc['source']!r}")
    if name.__class__ is not str or not name:
        raise CorruptLakeError(f"{path}:{lineno}: name must be a non-empty string")
    if sentiment.__class__ is not int or sentiment not in (0, 1):
        raise CorruptLakeError(f"{path}:{lineno}: sentiment must be 0 or 1, got {sentiment!r}")
    if upvotes.__class__ is not int or upvotes < 0:
        raise CorruptLakeError(f"{path}:{lineno}: upvotes must be a non-negative integer")
    if text.__class__ is not str or not _TEXT_SHAPE.fullmatch(text):
        raise CorruptLakeError(f"{path}:{lineno}: review_text is not cleaned text")
    raw_date = doc["creation_date"]
    try:
        date = normalize_date(raw_date, ("iso",))
    except CleanRejection:
        raise CorruptLakeError(f"{path}:{lineno}: bad creation_date {raw_date!r}") from None
    except TypeError:
        raise CorruptLakeError(f"{path}:{lineno}: bad creation_date {raw_date!r}") from None
    return UnifiedReview(name, date, sentiment, upvotes, text, source)


def read_lake(lake_dir: str, partitions: int = 1) -> PartitionedDataset:
    """Load a lake back into a partitioned dataset, checking as it goes.

    Structural invariants are enforced per record (shape, sentiment domain,
    date window, cleaned-text alphabet); whether the text is stopword-free
    under some list is only knowable through the manifest checksum, so it is
    not re-judged here. Counts must match the manifest exactly.
    """
    manifest = load_manifest(lake_dir)
    records: list[UnifiedReview] = []
    for fname in manifest.record_files:
        source = fname[: -len(".jsonl")]
        if not fname.endswith(".jsonl") or source not in SOURCES:
            raise CorruptLakeError(f"{lake_dir}: unexpected record file {fname!r}")
        path = os.path.join(lake_dir, fname)
        expected = manifest.per_source.get(source, SourceStats()).accepted
        n = 0
        try:
            fh = open(path, "rb")
        except OSError as exc:
            raise CorruptLakeError(f"{path}: listed in manifest but unreadable: {exc}") from None
        with fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    raise CorruptLakeError(f"{path}:{lineno}: blank line inside lake file")
                try:
                    doc = json.loads(line)
                except ValueError as exc:
                    raise CorruptLakeError(f"{path}:{lineno}: bad JSON: {exc}") from None
                records.append(_validate_line(doc, source, path, lineno))
                n += 1
        if n != expected:
            raise CorruptLakeError(f"{path}: manifest claims {expected} records, file has {n}")
    for src, st in manifest.per_source.items():
        if st.accepted and src + ".jsonl" not in manifest.record_files:
            raise CorruptLakeError(f"{lake_dir}: {src} has accepted records but no listed file")
    _check_rejects(lake_dir, manifest)
    return PartitionedDataset.from_records(records, partitions)


def _check_rejects(lake_dir: str, manifest: LakeManifest) -> None:
    path = os.path.join(lake_dir, REJECTS_NAME)
    expected = sum(
        n for st in manifest.per_source.values() for n in st.rejected_by_reason.values()
    )
    if not os.path.exists(path):
        if expected:
            raise CorruptLakeError(f"{path}: missing but manifest counts {expected} rejects")
        return
    n = 0
    with open(path, "rb") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except ValueError as exc:
                raise CorruptLakeError(f"{path}:{lineno}: bad JSON: {exc}") from None
            if doc.get("reason") not in REJECT_REASONS:
                raise CorruptLakeError(f"{path}:{lineno}: unknown reject reason {doc.get('reason')!r}")
            n += 1
    if n != expected:
        raise CorruptLakeError(f"{path}: manifest counts {expected} rejects, file has {n}")


def merge_lakes(lake_dirs: list[str], partitions: int = 1) -> PartitionedDataset:
    """Union several lakes into one dataset; zero lakes is an empty dataset."""
    if not lake_dirs:
        return PartitionedDataset.from_records([], max(partitions, 1))
    return engine.union([read_lake(d, partitions) for d in lake_dirs])
