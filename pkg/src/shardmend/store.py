"""Dataset persistence: directory layout, manifests, splits, and dedup search.

A dataset root holds complete/, broken/, repair/ directories of .xyz files
matched by filename stem, plus manifest.json describing every triplet.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import CutSpec
from .distances import CHAMFER_VARIANT, chamfer
from .geometry import load_xyz
from .util import parallel_map

MANIFEST_FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"

SPLIT_TRAIN = "train"
SPLIT_TEST = "test"
SPLIT_TEST_ONLY = "test-only"
SPLIT_UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class ManifestEntry:
    object_id: str
    base_id: str
    class_label: str
    paths: dict[str, str]  # complete/broken/repair, relative to the manifest dir
    cut: CutSpec | None  # None means "external" (no synthetic cut on record)
    split: str = SPLIT_UNASSIGNED
    seed: int | None = None


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def base_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.base_id)
        return sorted(seen)

    def check(self, root) -> None:
        """Validate invariants: unique ids, consistent per-base splits, files exist."""
        ids = [e.object_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest has duplicate object_ids")
        per_base: dict[str, str] = {}
        for e in self.entries:
            prev = per_base.setdefault(e.base_id, e.split)
            if prev != e.split:
                raise ValueError(f"base object {e.base_id} has mixed split values")
            for kind, rel in e.paths.items():
                p = os.path.join(root, rel)
                if not os.path.exists(p):
                    raise FileNotFoundError(f"manifest entry {e.object_id}: missing {kind} file {p}")


def _entry_to_json(e: ManifestEntry) -> dict:
    cut = "external" if e.cut is None else {
        "theta_x": e.cut.theta_x,
        "theta_z": e.cut.theta_z,
        "height_fraction": e.cut.height_fraction,
        "seed": e.cut.seed,
    }
    return {
        "object_id": e.object_id,
        "base_id": e.base_id,
        "class_label": e.class_label,
        "paths": dict(sorted(e.paths.items())),
        "cut": cut,
        "split": e.split,
        "seed": e.seed,
    }


def _entry_from_json(d: dict) -> ManifestEntry:
    cut = d["cut"]
    spec = None
    if cut != "external":
        spec = CutSpec(cut["theta_x"], cut["theta_z"], cut["height_fraction"], cut["seed"])
    return ManifestEntry(
        object_id=d["object_id"],
        base_id=d["base_id"],
        class_label=d["class_label"],
        paths=dict(d["paths"]),
        cut=spec,
        split=d["split"],
        seed=d["seed"],
    )


def write_manifest(path, manifest: Manifest) -> None:
    doc = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "entries": [_entry_to_json(e) for e in sorted(manifest.entries, key=lambda e: e.object_id)],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def read_manifest(path) -> Manifest:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != MANIFEST_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported manifest format_version {version}")
    return Manifest([_entry_from_json(d) for d in doc["entries"]])


def _stems(directory) -> set[str]:
    return {
        os.path.splitext(name)[0]
        for name in os.listdir(directory)
        if name.endswith(".xyz")
    }


def ingest_manifest(complete_dir, broken_dir, repair_dir, root=None, class_label: str = "",
                    include_broken_only: bool = False):
    """Build a manifest from three directories matched by filename stem.

    Returns (manifest, mismatches) where mismatches maps each unmatched stem
    to the directory kinds it was found in. Unmatched stems are excluded;
    with include_broken_only=True, stems that exist only as broken clouds
    become test-only entries (shapes without ground truth, evaluated
    qualitatively). Manifest paths are stored relative to `root` (default:
    the parent of the complete directory).
    """
    if root is None:
        root = os.path.dirname(os.path.abspath(str(complete_dir)))
    dirs = {"complete": str(complete_dir), "broken": str(broken_dir), "repair": str(repair_dir)}
    stems = {kind: _stems(d) for kind, d in dirs.items()}
    matched = sorted(stems["complete"] & stems["broken"] & stems["repair"])
    unmatched = (stems["complete"] | stems["broken"] | stems["repair"]) - set(matched)
    mismatches = {
        stem: sorted(kind for kind, s in stems.items() if stem in s) for stem in sorted(unmatched)
    }

    def rel(kind, stem):
        return os.path.relpath(os.path.join(dirs[kind], stem + ".xyz"), root)

    entries = []
    for stem in matched:
        entries.append(ManifestEntry(
            object_id=stem,
            base_id=stem,
            class_label=class_label,
            paths={kind: rel(kind, stem) for kind in ("complete", "broken", "repair")},
            cut=None,
        ))
    if include_broken_only:
        for stem, kinds in mismatches.items():
            if kinds == ["broken"]:
                entries.append(ManifestEntry(
                    object_id=stem,
                    base_id=stem,
                    class_label=class_label,
                    paths={"broken": rel("broken", stem)},
                    cut=None,
                    split=SPLIT_TEST_ONLY,
                ))
    return Manifest(entries), mismatches


def assign_split(manifest: Manifest, train_fraction: float, seed: int) -> Manifest:
    """Deterministically split base objects into train/test.

    All entries of a base object land on the same side; the first
    ceil(train_fraction * B) shuffled bases train. Test-only entries keep
    their flag and never train.
    """
    if not manifest.entries:
        raise ValueError("manifest is empty")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    test_only = {e.base_id for e in manifest.entries if e.split == SPLIT_TEST_ONLY}
    bases = [b for b in manifest.base_ids() if b not in test_only]
    rng = np.random.default_rng(seed)
    shuffled = [bases[i] for i in rng.permutation(len(bases))]
    n_train = math.ceil(train_fraction * len(bases))
    train_bases = set(shuffled[:n_train])
    entries = []
    for e in manifest.entries:
        if e.split == SPLIT_TEST_ONLY:
            entries.append(e)
        else:
            entries.append(replace(e, split=SPLIT_TRAIN if e.base_id in train_bases else SPLIT_TEST))
    return Manifest(entries)


def dedup_candidates(set_a, set_b, k: int, ids_a=None, ids_b=None):
    """Rank, for every cloud of set_a, the k chamfer-nearest clouds of set_b.

    Clouds must already be normalized and sampled to a common count. Computes
    the full |A| x |B| distance matrix; parallel over pairs.
    """
    set_a = list(set_a)
    set_b = list(set_b)
    if k < 1 or k > len(set_b):
        raise ValueError(f"k must be in [1, {len(set_b)}], got {k}")
    ids_a = [str(i) for i in range(len(set_a))] if ids_a is None else list(ids_a)
    ids_b = [str(i) for i in range(len(set_b))] if ids_b is None else list(ids_b)
    pairs = [(i, j) for i in range(len(set_a)) for j in range(len(set_b))]
    dists = parallel_map(lambda ij: chamfer(set_a[ij[0]], set_b[ij[1]]), pairs)
    matrix = np.asarray(dists).reshape(len(set_a), len(set_b))
    report = []
    for i, qid in enumerate(ids_a):
        ranked = sorted(range(len(set_b)), key=lambda j: (matrix[i, j], j))[:k]
        report.append((qid, [(ids_b[j], float(matrix[i, j])) for j in ranked]))
    return report


def write_dedup_csv(path, report) -> None:
    """Dedup report CSV: query_id,rank,candidate_id,chamfer (rank 1 = closest)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# chamfer_variant: {CHAMFER_VARIANT}\n")
        fh.write("# preprocessing: normalize-then-compare (clouds normalized and downsampled "
                 "to a common count before distances)\n")
        fh.write("query_id,rank,candidate_id,chamfer\n")
        for qid, candidates in report:
            for rank, (cid, dist) in enumerate(candidates, start=1):
                fh.write(f"{qid},{rank},{cid},{dist!r}\n")


def load_entry_clouds(root, entry: ManifestEntry) -> dict[str, np.ndarray]:
    """Load the triplet clouds named by a manifest entry."""
    return {kind: load_xyz(os.path.join(root, rel)) for kind, rel in entry.paths.items()}
