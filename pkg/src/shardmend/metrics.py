"""Normalized distance-factor evaluation (CDF/HDF) and corpus statistics.

The distance factor divides the distance between a generated repair and a
random downsample of its ground truth by the distance between two independent
random downsamples of the ground truth. A value near 1 means the repair is as
close to the ground truth as the ground truth is to itself under resampling;
lower is better. The factor depends on the point count m, so m is recorded
with every measurement and comparisons are only meaningful at equal m.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .distances import CHAMFER_VARIANT, chamfer, hausdorff
from .errors import DegenerateDenominatorError
from .geometry import as_cloud, load_xyz, random_downsample
from .util import derived_seed, parallel_map, seed_to_int

DEGENERATE_FLAG = "degenerate_denominator"
DENOMINATOR_FLOOR = 1e-12

_METRICS = {"chamfer": chamfer, "hausdorff": hausdorff}


def distance_factor(s_r, s_g, m: int, metric: str = "chamfer", seed: int = 0) -> float:
    """Distance factor of a repair s_r against its ground truth s_g at count m.

    The ground truth must have more than m points. A repair larger than m is
    downsampled to m; smaller is an error. All three ground-truth draws (one
    for the numerator, two independent ones for the denominator) derive from
    `seed`, so the value is deterministic to the last bit.
    """
    if metric not in _METRICS:
        raise ValueError(f"metric must be one of {sorted(_METRICS)}, got {metric!r}")
    dist = _METRICS[metric]
    s_r = as_cloud(s_r)
    s_g = as_cloud(s_g)
    if s_g.shape[0] <= m:
        raise ValueError(f"ground truth must have more than m={m} points, has {s_g.shape[0]}")
    if s_r.shape[0] < m:
        raise ValueError(f"repair has {s_r.shape[0]} points, fewer than m={m}")
    seeds = [seed_to_int(c) for c in np.random.SeedSequence(seed & (2**64 - 1)).spawn(4)]
    if s_r.shape[0] > m:
        s_r = random_downsample(s_r, m, seeds[0])
    numerator = dist(s_r, random_downsample(s_g, m, seeds[1]))
    denominator = dist(
        random_downsample(s_g, m, seeds[2]), random_downsample(s_g, m, seeds[3])
    )
    if denominator < DENOMINATOR_FLOOR:
        raise DegenerateDenominatorError(
            f"degenerate denominator ({denominator!r}): ground truth downsamples coincide"
        )
    return numerator / denominator


@dataclass(frozen=True)
class EvaluationRecord:
    """Per-instance distance factors; flag is empty or names a failure mode."""

    object_id: str
    class_label: str
    m: int
    cdf: float | None
    hdf: float | None
    flag: str = ""
    seed: int | None = None  # per-instance seed the downsamples derive from


def evaluate_pair(object_id: str, pred, gt, m: int, corpus_seed: int,
                  class_label: str = "") -> EvaluationRecord:
    """Evaluate one prediction/ground-truth pair with both factors.

    The per-instance seed derives from (corpus_seed, object_id) so corpus
    results do not depend on listing order; CDF and HDF draw their
    downsamples independently from it.
    """
    inst = derived_seed(corpus_seed, object_id)
    cdf_seed, hdf_seed = (seed_to_int(c) for c in inst.spawn(2))
    try:
        cdf = distance_factor(pred, gt, m, "chamfer", cdf_seed)
        hdf = distance_factor(pred, gt, m, "hausdorff", hdf_seed)
    except DegenerateDenominatorError:
        return EvaluationRecord(object_id, class_label, m, None, None,
                                flag=DEGENERATE_FLAG, seed=seed_to_int(inst))
    return EvaluationRecord(object_id, class_label, m, cdf, hdf, seed=seed_to_int(inst))


def evaluate_corpus(pred_dir, gt_dir, m: int, seed: int, class_labels=None):
    """Evaluate every matched stem between two directories of .xyz files.

    Returns (records, unmatched) with records sorted by object_id. Unmatched
    stems are skipped and reported; degenerate denominators become flagged
    rows instead of failures.
    """
    def stems(d):
        return {os.path.splitext(n)[0] for n in os.listdir(d) if n.endswith(".xyz")}

    pred_stems = stems(pred_dir)
    gt_stems = stems(gt_dir)
    matched = sorted(pred_stems & gt_stems)
    unmatched = sorted((pred_stems | gt_stems) - set(matched))
    labels = class_labels or {}

    def one(stem):
        pred = load_xyz(os.path.join(pred_dir, stem + ".xyz"))
        gt = load_xyz(os.path.join(gt_dir, stem + ".xyz"))
        return evaluate_pair(stem, pred, gt, m, seed, class_label=labels.get(stem, ""))

    return parallel_map(one, matched), unmatched


def _median_lower(values: np.ndarray) -> float:
    """Median pinned to the lower-middle element for even counts."""
    s = np.sort(values)
    return float(s[(len(s) - 1) // 2])


@dataclass(frozen=True)
class MetricStats:
    min: float
    max: float
    avg: float
    med: float
    std: float  # population standard deviation


@dataclass(frozen=True)
class StatsSummary:
    group: str
    count: int
    cdf: MetricStats
    hdf: MetricStats


def _stats(values) -> MetricStats:
    arr = np.asarray(values, dtype=np.float64)
    return MetricStats(
        min=float(arr.min()),
        max=float(arr.max()),
        avg=float(arr.mean()),
        med=_median_lower(arr),
        std=float(arr.std(ddof=0)),
    )


def aggregate_stats(records, group_by: str = "none") -> list[StatsSummary]:
    """Per-group min/max/avg/med/std of both factors; flagged rows excluded.

    group_by is "none" (one row labelled "all") or "class_label". Summaries
    are sorted ascending by CDF median (lower is better).
    """
    if group_by not in ("none", "class_label"):
        raise ValueError(f"group_by must be 'none' or 'class_label', got {group_by!r}")
    usable = [r for r in records if not r.flag]
    if not usable:
        raise ValueError("no usable records to aggregate")
    groups: dict[str, list[EvaluationRecord]] = {}
    for r in usable:
        key = "all" if group_by == "none" else r.class_label
        groups.setdefault(key, []).append(r)
    summaries = [
        StatsSummary(
            group=key,
            count=len(rs),
            cdf=_stats([r.cdf for r in rs]),
            hdf=_stats([r.hdf for r in rs]),
        )
        for key, rs in groups.items()
    ]
    summaries.sort(key=lambda s: (s.cdf.med, s.group))
    return summaries


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_records_csv(path, records) -> None:
    """Records CSV: object_id,class_label,m,cdf,hdf,flag (one row per instance)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# chamfer_variant: {CHAMFER_VARIANT}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["object_id", "class_label", "m", "cdf", "hdf", "flag"])
        for r in sorted(records, key=lambda r: r.object_id):
            writer.writerow([r.object_id, r.class_label, r.m, _fmt(r.cdf), _fmt(r.hdf), r.flag])


def read_records_csv(path) -> list[EvaluationRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows)
        expected = ["object_id", "class_label", "m", "cdf", "hdf", "flag"]
        if header != expected:
            raise ValueError(f"{path}: expected columns {expected}, got {header}")
        for row in rows:
            oid, label, m, cdf, hdf, flag = row
            records.append(EvaluationRecord(
                object_id=oid,
                class_label=label,
                m=int(m),
                cdf=float(cdf) if cdf else None,
                hdf=float(hdf) if hdf else None,
                flag=flag,
            ))
    return records


_STAT_COLUMNS = ("min", "max", "avg", "med", "std")


def write_summary_csv(path, summaries) -> None:
    """Summary CSV, one row per group: count then CDF and HDF min/max/avg/med/std."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# chamfer_variant: {CHAMFER_VARIANT}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["group", "count"]
            + [f"cdf_{c}" for c in _STAT_COLUMNS]
            + [f"hdf_{c}" for c in _STAT_COLUMNS]
        )
        for s in summaries:
            writer.writerow(
                [s.group, s.count]
                + [repr(getattr(s.cdf, c)) for c in _STAT_COLUMNS]
                + [repr(getattr(s.hdf, c)) for c in _STAT_COLUMNS]
            )


def write_summary_table(path, summaries) -> None:
    """Aligned text table: group | CDF min max avg med std | HDF min max avg med std."""
    rows = [["group"] + [f"cdf_{c}" for c in _STAT_COLUMNS] + [f"hdf_{c}" for c in _STAT_COLUMNS]]
    for s in summaries:
        rows.append(
            [s.group]
            + [f"{getattr(s.cdf, c):.4g}" for c in _STAT_COLUMNS]
            + [f"{getattr(s.hdf, c):.4g}" for c in _STAT_COLUMNS]
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [r[i].ljust(widths[i]) for i in range(len(r))]
        line = cells[0] + "  " + " ".join(cells[1:6]) + " | " + " ".join(cells[6:])
        lines.append(line.rstrip())
    lines.insert(1, "-" * max(len(ln) for ln in lines))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def write_barplot_csv(path, summaries) -> None:
    """Bar-plot companion CSV: class_label,metric,avg,std (one bar per row)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class_label", "metric", "avg", "std"])
        for s in sorted(summaries, key=lambda s: s.group):
            writer.writerow([s.group, "cdf", repr(s.cdf.avg), repr(s.cdf.std)])
            writer.writerow([s.group, "hdf", repr(s.hdf.avg), repr(s.hdf.std)])
