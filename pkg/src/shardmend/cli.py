"""Command-line pipeline: prepare, augment, dedup, split, train, complete,
evaluate, report.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Every randomized subcommand requires an explicit seed (--seed flag, or the
matching config field for train/evaluate). SHARDMEND_THREADS caps internal
parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys

from .augment import AugmentBounds, make_triplets
from .config import PipelineConfig, load_config, override
from .completion import complete_directory
from .errors import ConfigError, ShardmendError
from .geometry import load_xyz, normalize, random_downsample, save_xyz
from .mesh import load_mesh, poisson_disk_sample
from .metrics import (
    aggregate_stats,
    evaluate_corpus,
    read_records_csv,
    write_barplot_csv,
    write_records_csv,
    write_summary_csv,
    write_summary_table,
)
from .store import (
    MANIFEST_NAME,
    Manifest,
    ManifestEntry,
    assign_split,
    dedup_candidates,
    ingest_manifest,
    read_manifest,
    write_dedup_csv,
    write_manifest,
)
from .training import train
from .util import derived_seed, seed_to_int


def _load_cfg(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    updates = {}
    for flag, key in (
        ("points_broken", "points_broken"),
        ("points_repair", "points_repair"),
        ("epochs", "training_epochs"),
        ("batch_size", "training_batch_size"),
        ("learning_rate", "training_learning_rate"),
        ("t_steps", "schedule_T"),
        ("beta_start", "schedule_beta_start"),
        ("beta_end", "schedule_beta_end"),
        ("cuts", "augmentation_cuts_per_object"),
        ("max_angle", "augmentation_max_angle"),
        ("m", "evaluation_m"),
    ):
        if hasattr(args, flag) and getattr(args, flag) is not None:
            updates[key] = getattr(args, flag)
    if getattr(args, "low", None) is not None or getattr(args, "high", None) is not None:
        low = args.low if args.low is not None else cfg.augmentation.height_bounds[0]
        high = args.high if args.high is not None else cfg.augmentation.height_bounds[1]
        updates["augmentation_height_bounds"] = (low, high)
    return override(cfg, **updates)


def _require_seed(args, fallback=None) -> int:
    seed = args.seed if args.seed is not None else fallback
    if seed is None:
        raise ConfigError("this subcommand is randomized: pass an explicit --seed")
    return int(seed)


def _xyz_stems(directory):
    return sorted(
        os.path.splitext(n)[0] for n in os.listdir(directory) if n.endswith(".xyz")
    )


def cmd_prepare(args) -> int:
    seed = _require_seed(args)
    os.makedirs(args.out, exist_ok=True)
    names = sorted(
        n for n in os.listdir(args.infile) if os.path.splitext(n)[1].lower() in (".obj", ".off")
    )
    if not names:
        print(f"prepare: no .obj/.off meshes in {args.infile}", file=sys.stderr)
    for name in names:
        stem = os.path.splitext(name)[0]
        mesh = load_mesh(os.path.join(args.infile, name))
        cloud = poisson_disk_sample(mesh, args.count, seed_to_int(derived_seed(seed, stem)))
        cloud, _ = normalize(cloud)
        save_xyz(os.path.join(args.out, stem + ".xyz"), cloud)
        print(f"prepare: {stem} -> {args.count} points")
    return 0


def cmd_augment(args) -> int:
    cfg = _load_cfg(args)
    seed = _require_seed(args)
    bounds = AugmentBounds(
        cuts_per_object=cfg.augmentation.cuts_per_object,
        height_low=cfg.augmentation.height_bounds[0],
        height_high=cfg.augmentation.height_bounds[1],
        max_angle=cfg.augmentation.max_angle,
        points_broken=None if args.no_count_fix else cfg.points_broken,
        points_repair=None if args.no_count_fix else cfg.points_repair,
    )
    for sub in ("complete", "broken", "repair"):
        os.makedirs(os.path.join(args.out, sub), exist_ok=True)
    entries = []
    for stem in _xyz_stems(args.infile):
        cloud = load_xyz(os.path.join(args.infile, stem + ".xyz"))
        obj_seed = seed_to_int(derived_seed(seed, stem))
        triplets = make_triplets(cloud, stem, bounds.cuts_per_object, bounds, obj_seed)
        for t in triplets:
            save_xyz(os.path.join(args.out, "complete", t.object_id + ".xyz"), t.complete)
            save_xyz(os.path.join(args.out, "broken", t.object_id + ".xyz"), t.broken)
            save_xyz(os.path.join(args.out, "repair", t.object_id + ".xyz"), t.repair)
            entries.append(ManifestEntry(
                object_id=t.object_id,
                base_id=stem,
                class_label=args.class_label,
                paths={kind: os.path.join(kind, t.object_id + ".xyz")
                       for kind in ("complete", "broken", "repair")},
                cut=t.cut,
                seed=obj_seed,
            ))
        print(f"augment: {stem} -> {len(triplets)} triplets")
    write_manifest(os.path.join(args.out, MANIFEST_NAME), Manifest(entries))
    return 0


def cmd_dedup(args) -> int:
    seed = _require_seed(args)

    def load_set(directory):
        stems = _xyz_stems(directory)
        clouds = []
        for stem in stems:
            cloud, _ = normalize(load_xyz(os.path.join(directory, stem + ".xyz")))
            clouds.append(random_downsample(
                cloud, args.count, seed_to_int(derived_seed(seed, stem))
            ))
        return stems, clouds

    ids_a, set_a = load_set(args.set_a)
    ids_b, set_b = load_set(args.set_b)
    if not set_a or not set_b:
        raise ShardmendError("dedup: both directories must contain .xyz clouds")
    report = dedup_candidates(set_a, set_b, args.k, ids_a=ids_a, ids_b=ids_b)
    write_dedup_csv(args.out, report)
    print(f"dedup: {len(set_a)}x{len(set_b)} pairs -> {args.out}")
    return 0


def cmd_split(args) -> int:
    seed = _require_seed(args)
    manifest = read_manifest(args.manifest)
    manifest = assign_split(manifest, args.train_fraction, seed)
    write_manifest(args.out or args.manifest, manifest)
    n_train = sum(e.split == "train" for e in manifest.entries)
    n_test = sum(e.split == "test" for e in manifest.entries)
    print(f"split: {n_train} train / {n_test} test entries")
    return 0


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    seed = _require_seed(args, fallback=cfg.training.seed)
    root = args.data
    manifest = read_manifest(os.path.join(root, MANIFEST_NAME))
    manifest.check(root)
    log_path = args.loss_log or (str(args.out) + ".loss.csv")
    _, _, steps = train(
        root, manifest, cfg, seed, args.out,
        resume=args.resume, log_path=log_path, log_every=args.log_every,
    )
    print(f"train: {steps} total steps -> {args.out}")
    return 0


def cmd_complete(args) -> int:
    cfg = _load_cfg(args)
    seed = _require_seed(args)
    m = args.m if args.m is not None else cfg.points_repair
    stems = complete_directory(args.checkpoint, args.infile, args.out, m, seed)
    print(f"complete: {len(stems)} clouds -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    seed = _require_seed(args, fallback=cfg.evaluation.seed)
    m = args.m if args.m is not None else cfg.evaluation.m
    labels = {}
    if args.manifest:
        for e in read_manifest(args.manifest).entries:
            labels[e.object_id] = e.class_label
    records, unmatched = evaluate_corpus(args.pred, args.gt, m, seed, class_labels=labels)
    for stem in unmatched:
        print(f"evaluate: unmatched stem skipped: {stem}", file=sys.stderr)
    if not records:
        raise ShardmendError("evaluate: no matched prediction/ground-truth pairs")
    write_records_csv(args.out, records)
    flagged = sum(1 for r in records if r.flag)
    print(f"evaluate: {len(records)} records ({flagged} flagged) -> {args.out}")
    return 0


def cmd_report(args) -> int:
    records = read_records_csv(args.records)
    summaries = aggregate_stats(records, group_by="none")
    by_class = None
    if any(r.class_label for r in records):
        by_class = aggregate_stats(records, group_by="class_label")
        if args.group_by == "class_label":
            summaries = by_class
    write_summary_csv(args.out_summary, summaries)
    write_summary_table(args.out_table, summaries)
    write_barplot_csv(args.out_bars, by_class or summaries)
    print(f"report: {len(summaries)} summary rows -> {args.out_summary}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shardmend",
        description="Repair fractured point clouds with a conditional diffusion model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True, seed=True):
        if config:
            p.add_argument("--config", help="JSON pipeline profile")
        if seed:
            p.add_argument("--seed", type=int, help="explicit 64-bit seed (required when randomized)")

    p = sub.add_parser("prepare", help="sample meshes into normalized clouds")
    p.add_argument("--in", dest="infile", required=True, help="directory of .obj/.off meshes")
    p.add_argument("--out", required=True, help="output directory for .xyz clouds")
    p.add_argument("--count", type=int, required=True, help="points per cloud")
    add_common(p, config=False)
    p.set_defaults(fn=cmd_prepare)

    p = sub.add_parser("augment", help="cut clouds into complete/broken/repair triplets")
    p.add_argument("--in", dest="infile", required=True, help="directory of normalized .xyz clouds")
    p.add_argument("--out", required=True, help="dataset root to create")
    p.add_argument("--cuts", type=int, help="cuts per object")
    p.add_argument("--low", type=float, help="lowest cut height fraction")
    p.add_argument("--high", type=float, help="highest cut height fraction")
    p.add_argument("--max-angle", type=float, dest="max_angle", help="max |rotation| in degrees")
    p.add_argument("--points-broken", type=int, dest="points_broken")
    p.add_argument("--points-repair", type=int, dest="points_repair")
    p.add_argument("--no-count-fix", action="store_true",
                   help="keep raw fragment sizes instead of fixing point counts")
    p.add_argument("--class-label", default="", help="class label recorded in the manifest")
    add_common(p)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("dedup", help="rank cross-dataset near-duplicates by chamfer distance")
    p.add_argument("--a", dest="set_a", required=True, help="query cloud directory")
    p.add_argument("--b", dest="set_b", required=True, help="candidate cloud directory")
    p.add_argument("--k", type=int, default=5, help="candidates per query")
    p.add_argument("--count", type=int, required=True, help="common point count for comparison")
    p.add_argument("--out", required=True, help="report CSV path")
    add_common(p, config=False)
    p.set_defaults(fn=cmd_dedup)

    p = sub.add_parser("split", help="assign train/test by base object")
    p.add_argument("--manifest", required=True)
    p.add_argument("--train-fraction", type=float, default=0.7, dest="train_fraction")
    p.add_argument("--out", help="write here instead of updating in place")
    add_common(p, config=False)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("train", help="train the denoiser on a dataset's train split")
    p.add_argument("--data", required=True, help="dataset root with manifest.json")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--loss-log", dest="loss_log", help="loss log CSV (default <out>.loss.csv)")
    p.add_argument("--log-every", type=int, default=1, dest="log_every")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--t-steps", type=int, dest="t_steps", help="diffusion steps T")
    p.add_argument("--beta-start", type=float, dest="beta_start")
    p.add_argument("--beta-end", type=float, dest="beta_end")
    add_common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("complete", help="generate repairs for broken clouds")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="infile", required=True, help="directory of broken .xyz clouds")
    p.add_argument("--out", required=True, help="output root (repair/ and composite/)")
    p.add_argument("--m", type=int, help="points per generated repair")
    add_common(p)
    p.set_defaults(fn=cmd_complete)

    p = sub.add_parser("evaluate", help="distance-factor records for predictions vs ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted repairs")
    p.add_argument("--gt", required=True, help="directory of ground-truth repairs")
    p.add_argument("--m", type=int, help="evaluation point count")
    p.add_argument("--manifest", help="manifest supplying class labels")
    p.add_argument("--out", required=True, help="records CSV path")
    add_common(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("report", help="summary table and bar-plot data from records")
    p.add_argument("--records", required=True, help="records CSV from evaluate")
    p.add_argument("--out-summary", required=True, dest="out_summary")
    p.add_argument("--out-table", required=True, dest="out_table")
    p.add_argument("--out-bars", required=True, dest="out_bars")
    p.add_argument("--group-by", choices=["none", "class_label"], default="none", dest="group_by")
    add_common(p, config=False, seed=False)
    p.set_defaults(fn=cmd_report)

    return parser


def execute_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ShardmendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
