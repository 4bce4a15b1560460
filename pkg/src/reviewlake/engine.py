"""Partitioned in-memory datasets with exact, scheduling-independent queries.

Records live in N round-robin partitions. Transformations are pure and
element-wise; aggregation folds each partition separately and merges the
partials single-threaded, so results are byte-identical for any partition
count and any worker count. Exactness rules that make the merge truly
order-independent:

* integer sums stay integers; float contributions accumulate as
  :class:`fractions.Fraction`, which is associative, and collapse to a
  correctly rounded float only at finalization
* mean is sum/count at finalization, never a merged running average
* median gathers the group's values and sorts them under a canonical key
  (ints before equal floats), so the middle element does not depend on
  which partition contributed it
* NaN and infinities are refused (they would poison ordering), -0.0 is
  normalized to 0.0, and bool is not a number here

Workers are forked processes; partitions reach them by copy-on-write through
a module global set just before the pool spawns, so nothing is pickled on
the way out and only small per-group partials come back. ``workers=1`` runs
the same fold inline and is the reference baseline.
"""

from __future__ import annotations

import itertools
import multiprocessing
from fractions import Fraction
from math import isfinite
from operator import attrgetter, itemgetter
from typing import Any, Callable, NamedTuple

from reviewlake.errors import ConfigurationError, QueryTypeError, SchemaError
from reviewlake.model import AggTable, RejectRecord

METRIC_KINDS = ("count", "sum", "min", "max", "mean", "median")


class Metric(NamedTuple):
    """One aggregate to compute: ``Metric("count")`` or ``Metric("mean", "upvotes")``."""

    kind: str
    field: str | None = None


class AggSpec(NamedTuple):
    """A group-by query: key columns, a key function, and the metrics per group.

    ``key_extractor`` should return a tuple matching ``key_columns``; a bare
    scalar is accepted for single-column keys.
    """

    name: str
    key_columns: tuple[str, ...]
    key_extractor: Callable[[Any], Any]
    metrics: tuple[Metric, ...]


class PartitionedDataset:
    """Records split round-robin into a fixed number of partitions."""

    __slots__ = ("partitions", "partition_count", "total_len")

    def __init__(self, partitions):
        partitions = tuple(partitions)
        if not partitions:
            raise ConfigurationError("a dataset needs at least one partition")
        self.partitions = partitions
        self.partition_count = len(partitions)
        self.total_len = sum(len(p) for p in partitions)

    @classmethod
    def from_records(cls, records, partition_count: int) -> "PartitionedDataset":
        """Distribute records round-robin: partition p gets indices p, p+N, p+2N, ..."""
        if partition_count.__class__ is not int or partition_count < 1:
            raise ConfigurationError(
                f"partition_count must be a positive integer, got {partition_count!r}"
            )
        records = list(records)
        return cls(records[i::partition_count] for i in range(partition_count))

    def __len__(self) -> int:
        return self.total_len

    def __repr__(self) -> str:
        return f"PartitionedDataset({self.partition_count} partitions, {self.total_len} records)"

    def map(self, f) -> "PartitionedDataset":
        """Element-wise image under a pure total function; structure preserved."""
        return PartitionedDataset([f(r) for r in part] for part in self.partitions)

    def filter_map(self, f) -> tuple["PartitionedDataset", list[RejectRecord]]:
        """Apply a fallible transform; rows it rejects come back separately.

        ``f`` returns either the transformed record or a RejectRecord.
        Conservation holds: kept + rejected == input count.
        """
        kept_parts = []
        rejects: list[RejectRecord] = []
        for part in self.partitions:
            kept = []
            for rec in part:
                out = f(rec)
                if isinstance(out, RejectRecord):
                    rejects.append(out)
                else:
                    kept.append(out)
            kept_parts.append(kept)
        return PartitionedDataset(kept_parts), rejects

    def to_list(self) -> list:
        """Insertion order, undone round-robin: row j of partition p was index j*N+p."""
        parts = self.partitions
        if len(parts) == 1:
            return list(parts[0])
        out = []
        append = out.append
        for j in range(max(map(len, parts))):
            for part in parts:
                if j < len(part):
                    append(part[j])
        return out

    def group_aggregate(self, spec: AggSpec, workers: int = 1) -> AggTable:
        return _aggregate(self, spec, workers)


def from_records(records, partition_count: int) -> PartitionedDataset:
    return PartitionedDataset.from_records(records, partition_count)


def union(datasets) -> PartitionedDataset:
    """Pool several datasets into one; every input record appears exactly once.

    Partition lists are adopted as-is (cheap, layout does not affect query
    results). Record shapes must agree, judged by the leading record of each
    dataset: NamedTuple field names, dict keys, or tuple arity.
    """
    datasets = list(datasets)
    if not datasets:
        raise ConfigurationError("union of zero datasets")
    shape = None
    parts: list = []
    for ds in datasets:
        sig = _shape_signature(ds)
        if sig is not None:
            if shape is None:
                shape = sig
            elif sig != shape:
                raise SchemaError(f"union of mixed record shapes: {shape} vs {sig}")
        parts.extend(ds.partitions)
    return PartitionedDataset(parts)


def _shape_signature(ds: PartitionedDataset):
    for part in ds.partitions:
        if part:
            rec = part[0]
            fields = getattr(rec, "_fields", None)
            if fields is not None:
                return ("fields",) + tuple(fields)
            if isinstance(rec, dict):
                return ("dict",) + tuple(sorted(rec))
            if isinstance(rec, tuple):
                return ("tuple", len(rec))
            return ("type", rec.__class__.__name__)
    return None  # empty dataset matches anything


def group_aggregate(ds: PartitionedDataset, spec: AggSpec, workers: int = 1) -> AggTable:
    """Group records by key and compute the spec's metrics exactly.

    Output rows are sorted ascending by group key. ``workers`` > 1 folds
    partitions in forked processes; any worker count yields identical bytes.
    """
    return _aggregate(ds, spec, workers)


# ---------------------------------------------------------------------------
# implementation
# ---------------------------------------------------------------------------

_K_COUNT, _K_SUM, _K_MIN, _K_MAX, _K_MEAN, _K_MEDIAN = range(6)
_KCODE = {
    "count": _K_COUNT,
    "sum": _K_SUM,
    "min": _K_MIN,
    "max": _K_MAX,
    "mean": _K_MEAN,
    "median": _K_MEDIAN,
}
# slots per metric in a group's flat state list
_WIDTH = {_K_COUNT: 1, _K_SUM: 2, _K_MIN: 1, _K_MAX: 1, _K_MEAN: 3, _K_MEDIAN: 1}

_NOVAL = object()


def _compile_metrics(metrics) -> tuple[tuple[int, str | None, int], ...]:
    compiled = []
    offset = 0
    for m in metrics:
        code = _KCODE.get(m.kind)
        if code is None:
            raise ConfigurationError(f"unknown metric kind {m.kind!r}, expected one of {METRIC_KINDS}")
        if code == _K_COUNT:
            if m.field is not None:
                raise ConfigurationError("count takes no field")
        elif not m.field:
            raise ConfigurationError(f"{m.kind} needs a field name")
        compiled.append((code, m.field, offset))
        offset += _WIDTH[code]
    if not compiled:
        raise ConfigurationError("an aggregation needs at least one metric")
    return tuple(compiled)


def _metric_label(m: Metric) -> str:
    return "count" if m.kind == "count" else f"{m.kind}_{m.field}"


def _fresh_state(compiled) -> list:
    st: list = []
    for code, _field, _off in compiled:
        if code == _K_COUNT:
            st.append(0)
        elif code == _K_SUM:
            st += [0, 0]  # int sum, float sum (int 0 until a float arrives)
        elif code == _K_MEAN:
            st += [0, 0, 0]
        elif code == _K_MEDIAN:
            st.append([])
        else:
            st.append(_NOVAL)
    return st


def _fold_partition(records, keyf, compiled, pindex: int) -> dict:
    """Fold one partition into {group key: flat metric state}."""
    groups: dict = {}
    if not records:
        return groups

    if len(compiled) == 1 and compiled[0][0] == _K_COUNT:
        # pure counting, the common case for the calendar views
        get_count = groups.get
        for rec in records:
            k = keyf(rec)
            st = get_count(k)
            if st is None:
                groups[k] = [1]
            else:
                st[0] += 1
        return groups

    first = records[0]
    runtime = []
    for code, field, off in compiled:
        if field is None:
            get = None
        elif hasattr(first, field):
            get = attrgetter(field)
        else:
            get = itemgetter(field)
        runtime.append((code, get, off, field))

    for pos, rec in enumerate(records):
        key = keyf(rec)
        st = groups.get(key)
        if st is None:
            groups[key] = st = _fresh_state(compiled)
        try:
            for code, get, off, field in runtime:
                if code == _K_COUNT:
                    st[off] += 1
                    continue
                v = get(rec)
                cls = v.__class__
                if cls is int:
                    is_int = True
                elif cls is float:
                    if not isfinite(v):
                        raise QueryTypeError(
                            f"metric field {field!r} is non-finite ({v!r})",
                            partition=pindex,
                            position=pos,
                        )
                    if v == 0.0:
                        v = 0.0  # collapse -0.0 so min/max ties cannot flip sign
                    is_int = False
                else:
                    raise QueryTypeError(
                        f"metric field {field!r} is not a number: {v!r} ({cls.__name__})",
                        partition=pindex,
                        position=pos,
                    )
                if code == _K_SUM:
                    if is_int:
                        st[off] += v
                    else:
                        st[off + 1] = st[off + 1] + Fraction(v)
                elif code == _K_MEAN:
                    st[off] += 1
                    if is_int:
                        st[off + 1] += v
                    else:
                        st[off + 2] = st[off + 2] + Fraction(v)
                elif code == _K_MEDIAN:
                    st[off].append(v)
                elif code == _K_MIN:
                    cur = st[off]
                    if cur is _NOVAL or v < cur or (v == cur and is_int and cur.__class__ is float):
                        st[off] = v
                else:
                    cur = st[off]
                    if cur is _NOVAL or v > cur or (v == cur and is_int and cur.__class__ is float):
                        st[off] = v
        except (AttributeError, KeyError, IndexError, TypeError) as exc:
            raise QueryTypeError(
                f"metric field unreadable: {exc}", partition=pindex, position=pos
            ) from exc
    return groups


def _merge_into(target: dict, part: dict, compiled) -> None:
    for key, st in part.items():
        cur = target.get(key)
        if cur is None:
            target[key] = st
            continue
        for code, _field, off in compiled:
            if code == _K_COUNT:
                cur[off] += st[off]
            elif code == _K_SUM:
                cur[off] += st[off]
                cur[off + 1] = cur[off + 1] + st[off + 1]
            elif code == _K_MEAN:
                cur[off] += st[off]
                cur[off + 1] += st[off + 1]
                cur[off + 2] = cur[off + 2] + st[off + 2]
            elif code == _K_MEDIAN:
                cur[off].extend(st[off])
            else:
                v, have = st[off], cur[off]
                if v is _NOVAL:
                    continue
                if have is _NOVAL:
                    cur[off] = v
                    continue
                better = v < have if code == _K_MIN else v > have
                if better or (v == have and v.__class__ is int and have.__class__ is float):
                    cur[off] = v


def _median_key(v):
    # ints sort before numerically equal floats: deterministic middle element
    return (v, 0 if v.__class__ is int else 1)


def _finalize(groups: dict, spec: AggSpec, compiled) -> AggTable:
    rows = []
    for key in sorted(groups):
        st = groups[key]
        vals = []
        for code, _field, off in compiled:
            if code == _K_COUNT:
                vals.append(st[off])
            elif code == _K_SUM:
                fsum = st[off + 1]
                vals.append(st[off] if fsum.__class__ is int else float(st[off] + fsum))
            elif code == _K_MEAN:
                n, isum, fsum = st[off], st[off + 1], st[off + 2]
                vals.append(isum / n if fsum.__class__ is int else float((isum + fsum) / n))
            elif code == _K_MEDIAN:
                xs = sorted(st[off], key=_median_key)
                h = len(xs) // 2
                vals.append(xs[h] if len(xs) % 2 else (xs[h - 1] + xs[h]) / 2)
            else:
                vals.append(st[off])
        krow = key if isinstance(key, tuple) else (key,)
        rows.append(krow + tuple(vals))
    columns = tuple(spec.key_columns) + tuple(_metric_label(m) for m in spec.metrics)
    return AggTable(spec.name, columns, rows)


# Fork handoff: the dataset and spec are parked here before the pool spawns,
# so children inherit them by copy-on-write and tasks carry only (token, index).
_SHARED: dict[int, tuple] = {}
_TOKENS = itertools.count(1)


def _pool_fold(task):
    token, pindex = task
    ds, keyf, compiled = _SHARED[token]
    return _fold_partition(ds.partitions[pindex], keyf, compiled, pindex)


def _fork_context():
    try:
        return multiprocessing.get_context("fork")
    except ValueError:
        return None


def _aggregate(ds: PartitionedDataset, spec: AggSpec, workers: int) -> AggTable:
    compiled = _compile_metrics(spec.metrics)
    keyf = spec.key_extractor
    nparts = ds.partition_count
    use = min(workers, nparts) if workers and workers > 1 else 1
    ctx = _fork_context() if use > 1 else None
    if ctx is None:
        partials = [
            _fold_partition(part, keyf, compiled, i) for i, part in enumerate(ds.partitions)
        ]
    else:
        token = next(_TOKENS)
        _SHARED[token] = (ds, keyf, compiled)
        try:
            with ctx.Pool(use) as pool:
                partials = pool.map(_pool_fold, [(token, i) for i in range(nparts)])
        finally:
            _SHARED.pop(token, None)
    merged = partials[0] if partials else {}
    for part in partials[1:]:
        _merge_into(merged, part, compiled)
    return _finalize(merged, spec, compiled)
