"""Command line front end: ingest, query, report, gen-fixtures.

Configuration comes from an optional JSON file plus flags, with flags
winning field by field. Relative paths inside the config file resolve
against the file's own directory, so a config can travel with its data.

Exit codes: 0 on success, 1 on unreadable input or a corrupt mapping or
lake, 2 on configuration errors (argparse uses 2 for bad flags already).
Rejected rows are never fatal; they are tallied and land in the lake's
reject file.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from dataclasses import dataclass, field

from reviewlake import analytics, clean, fixtures, ingest, report, store
from reviewlake.errors import (
    ConfigurationError,
    CorruptLakeError,
    CsvParseError,
    MappingFileError,
    QueryTypeError,
    ReviewLakeError,
    SchemaError,
)
from reviewlake.model import SOURCES, RawRecord, RejectRecord


@dataclass
class SourceSpec:
    source: str
    path: str
    mapping_path: str | None = None


@dataclass
class RunConfig:
    """Fully resolved run settings; every command reads from this."""

    sources: list[SourceSpec] = field(default_factory=list)
    lake_dir: str = "lake"
    out_dir: str = "out"
    partitions: int = 0  # 0 means "number of available cores"
    threads: int = 1
    fmt: str = "csv"
    stoplist_path: str | None = None

    def resolved_partitions(self) -> int:
        if self.partitions > 0:
            return self.partitions
        return os.cpu_count() or 1


_CONFIG_KEYS = {
    "sources", "lake_dir", "out_dir", "partitions", "threads",
    "format", "stoplist", "neutral_policy",
}


def load_config_file(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except ValueError as exc:
        raise ConfigurationError(f"config {path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"config {path}: top level must be an object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"config {path}: unknown keys {sorted(unknown)}")
    # the neutral handling is fixed; a config may state it but not change it
    if doc.get("neutral_policy", "drop") != "drop":
        raise ConfigurationError(
            f"config {path}: neutral_policy must be \"drop\", got {doc['neutral_policy']!r}"
        )
    base = os.path.dirname(os.path.abspath(path))

    def rel(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    cfg = RunConfig()
    seen = set()
    for i, entry in enumerate(doc.get("sources", [])):
        if not isinstance(entry, dict) or "source" not in entry or "path" not in entry:
            raise ConfigurationError(f"config {path}: sources[{i}] needs source and path")
        src = entry["source"]
        if src not in SOURCES:
            raise ConfigurationError(f"config {path}: unknown source {src!r}, expected one of {SOURCES}")
        if src in seen:
            raise ConfigurationError(f"config {path}: duplicate source {src!r}")
        seen.add(src)
        mp = entry.get("mapping")
        cfg.sources.append(SourceSpec(src, rel(entry["path"]), rel(mp) if mp else None))
    if "lake_dir" in doc:
        cfg.lake_dir = rel(doc["lake_dir"])
    if "out_dir" in doc:
        cfg.out_dir = rel(doc["out_dir"])
    if "partitions" in doc:
        cfg.partitions = _positive_int(doc["partitions"], "partitions")
    if "threads" in doc:
        cfg.threads = _positive_int(doc["threads"], "threads")
    if "format" in doc:
        cfg.fmt = _check_format(doc["format"])
    if "stoplist" in doc:
        cfg.stoplist_path = rel(doc["stoplist"])
    return cfg


def _positive_int(v, name: str) -> int:
    if v.__class__ is not int or v < 1:
        raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
    return v


def _check_format(v) -> str:
    if v not in report.TABLE_FORMATS:
        raise ConfigurationError(f"format must be one of {report.TABLE_FORMATS}, got {v!r}")
    return v


def resolve_config(args) -> RunConfig:
    cfg = load_config_file(args.config) if args.config else RunConfig()
    if args.lake:
        cfg.lake_dir = args.lake
    if args.out:
        cfg.out_dir = args.out
    if args.format:
        cfg.fmt = _check_format(args.format)
    if args.partitions is not None:
        cfg.partitions = _positive_int(args.partitions, "partitions")
    if args.threads is not None:
        cfg.threads = _positive_int(args.threads, "threads")
    return cfg


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

_WORK: dict = {}  # worker state shared into forked children


def _parser_for(path: str, fh, source: str, delimiter: str, stats: dict):
    if path.endswith((".jsonl", ".ndjson")):
        return ingest.parse_jsonl(fh, source=source, stats=stats)
    return ingest.parse_csv(fh, delimiter=delimiter, source=source, stats=stats)


def _ingest_source(job: tuple[str, str, str | None]) -> tuple[str, int, int, dict]:
    """Parse, adapt, and clean one source file into the staging directory.

    Runs in the parent or in a forked worker; everything it needs beyond
    the job tuple is reachable through the module global set just before
    the pool starts.
    """
    source, path, mapping_path = job
    tmp_dir = _WORK["tmp"]
    stops = _WORK["stops"]
    mapping = ingest.load_mapping(mapping_path) if mapping_path else ingest.default_mapping(source)
    if mapping.source != source:
        raise MappingFileError(f"mapping {mapping_path} is for {mapping.source!r}, not {source!r}")
    stats: dict = {}
    accepted = 0
    reasons: dict[str, int] = {}
    cleaner = clean.clean_review
    adapt = ingest.adapt
    to_json = store.review_to_json
    rj_json = store.reject_to_json
    with open(path, "rb") as fh, open(
        os.path.join(tmp_dir, f"{source}.jsonl"), "w", encoding="utf-8", newline="\n"
    ) as out, open(
        os.path.join(tmp_dir, f"rejects-{source}.part"), "w", encoding="utf-8", newline="\n"
    ) as rej:
        for item in _parser_for(path, fh, source, mapping.delimiter, stats):
            if item.__class__ is RawRecord:
                item = adapt(item, mapping)
                if item.__class__ is not RejectRecord:
                    item = cleaner(item, stops, mapping)
            if item.__class__ is RejectRecord:
                reasons[item.reason] = reasons.get(item.reason, 0) + 1
                rej.write(rj_json(item))
                rej.write("\n")
            else:
                accepted += 1
                out.write(to_json(item))
                out.write("\n")
    if accepted == 0:
        os.remove(os.path.join(tmp_dir, f"{source}.jsonl"))
    return source, accepted, stats.get("blank_lines", 0), reasons


def cmd_ingest(cfg: RunConfig) -> int:
    if not cfg.sources:
        raise ConfigurationError("no sources configured; provide a config file with a sources list")
    stops = clean.resolve_stoplist(cfg.stoplist_path)
    jobs = [(s.source, s.path, s.mapping_path) for s in sorted(cfg.sources, key=lambda s: s.source)]
    writer = store.LakeWriter(cfg.lake_dir)
    try:
        _WORK["tmp"] = writer.tmp
        _WORK["stops"] = stops
        results = None
        if cfg.threads > 1 and len(jobs) > 1:
            ctx = _fork_context()
            if ctx is not None:
                with ctx.Pool(min(cfg.threads, len(jobs))) as pool:
                    results = pool.map(_ingest_source, jobs)
        if results is None:
            results = [_ingest_source(j) for j in jobs]
        _WORK.clear()

        per_source: dict[str, store.SourceStats] = {}
        record_files = []
        with open(os.path.join(writer.tmp, store.REJECTS_NAME), "w", encoding="utf-8", newline="\n") as merged:
            for source, accepted, blanks, reasons in results:
                per_source[source] = store.SourceStats(accepted, blanks, reasons)
                if accepted:
                    record_files.append(f"{source}.jsonl")
                part = os.path.join(writer.tmp, f"rejects-{source}.part")
                with open(part, "r", encoding="utf-8") as fh:
                    merged.write(fh.read())
                os.remove(part)
        manifest = store.LakeManifest(store.lake_timestamp(), per_source, record_files, stops.checksum)
        writer.write_manifest(manifest)
        writer.commit()
    except BaseException:
        writer.abort()
        raise
    print(store.manifest_to_json(manifest), end="")
    return 0


def _fork_context():
    try:
        return multiprocessing.get_context("fork")
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# query and report
# ---------------------------------------------------------------------------

_QUERY_FNS = {
    "per_year": analytics.reviews_per_year,
    "yoy": analytics.yoy_percent_change,
    "per_weekday": analytics.reviews_per_weekday,
    "per_month": analytics.reviews_per_month,
    "length_upvotes": analytics.length_upvote_profile,
    "sentiment_profile": analytics.sentiment_profile,
}


def cmd_query(cfg: RunConfig, ids: list[str]) -> int:
    for qid in ids:
        if qid not in _QUERY_FNS:
            raise ConfigurationError(f"unknown query {qid!r}, expected one of {analytics.QUERY_IDS}")
    if not ids:
        ids = list(analytics.QUERY_IDS)
    ds = store.read_lake(cfg.lake_dir, partitions=cfg.resolved_partitions())
    os.makedirs(cfg.out_dir, exist_ok=True)
    for qid in ids:
        table = _QUERY_FNS[qid](ds, workers=cfg.threads)
        path = report.emit_table(table, cfg.fmt, os.path.join(cfg.out_dir, f"{qid}.{cfg.fmt}"))
        print(f"{qid}: {len(table.rows)} rows -> {path}")
        for note in table.notes:
            print(f"  note: {note}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    ds = store.read_lake(cfg.lake_dir, partitions=cfg.resolved_partitions())
    os.makedirs(cfg.out_dir, exist_ok=True)
    tables = analytics.run_all(ds, workers=cfg.threads)
    specs = report.default_chart_specs()
    for qid, table in tables.items():
        tpath = report.emit_table(table, cfg.fmt, os.path.join(cfg.out_dir, f"{qid}.{cfg.fmt}"))
        chart_table = table
        if qid == "yoy":
            chart_table = report.filter_rows(table, "sentiment_split", "overall")
            chart_table = report.filter_rows(chart_table, "year", "median", invert=True)
        spath = report.emit_bar_chart(specs[qid], chart_table, os.path.join(cfg.out_dir, f"{qid}.svg"))
        print(f"{qid}: {len(table.rows)} rows -> {tpath}, {spath}")
    return 0


def cmd_gen_fixtures(cfg: RunConfig, seed: int, profile: str, rows: int) -> int:
    truth = fixtures.generate(cfg.out_dir, seed=seed, profile=profile, rows_per_source=rows)
    for source in sorted(truth["per_source"]):
        t = truth["per_source"][source]
        print(f"{source}: {t['rows']} rows, {t['accepted']} clean -> {t['file']}")
    print(f"ground truth -> {os.path.join(cfg.out_dir, 'ground_truth.json')}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON config file")
    shared.add_argument("--lake", help="lake directory (overrides config)")
    shared.add_argument("--out", help="output directory (overrides config)")
    shared.add_argument("--format", choices=report.TABLE_FORMATS, help="table format")
    shared.add_argument("--partitions", type=int, help="dataset partition count")
    shared.add_argument("--threads", type=int, help="worker process count")
    shared.add_argument("--seed", type=int, default=1, help="fixture generator seed")

    p = argparse.ArgumentParser(prog="reviewlake", description="review ETL and analytics")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[shared], help="parse, clean, and stage all configured sources")
    q = sub.add_parser("query", parents=[shared], help="run analytic views over the lake")
    q.add_argument("ids", nargs="*", metavar="query", help=f"one of {', '.join(analytics.QUERY_IDS)} (default: all)")
    sub.add_parser("report", parents=[shared], help="emit all tables plus charts")
    g = sub.add_parser("gen-fixtures", parents=[shared], help="write synthetic source files with ground truth")
    g.add_argument("--rows", type=int, default=1000, help="rows per source")
    g.add_argument("--profile", choices=fixtures.PROFILES, default="paper_shaped")
    return p


def run(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "query":
            return cmd_query(cfg, args.ids)
        if args.command == "report":
            return cmd_report(cfg)
        return cmd_gen_fixtures(cfg, args.seed, args.profile, args.rows)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MappingFileError, CsvParseError, CorruptLakeError, SchemaError, QueryTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ReviewLakeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        name = getattr(exc, "filename", None)
        where = f" ({name})" if name else ""
        print(f"error: {exc.strerror or exc}{where}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(run())
