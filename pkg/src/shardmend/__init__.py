"""shardmend: point-cloud repair via conditional denoising diffusion.

Pipeline pieces: mesh sampling and fracture augmentation, a desk-scale
conditional denoiser trained with exact analytic gradients, the reverse
diffusion sampler, and chamfer/hausdorff distance-factor evaluation.
"""

from .augment import AugmentBounds, CutSpec, Triplet, apply_cut, fix_counts, make_triplets
from .diffusion import (
    DiffusionState,
    NoiseSchedule,
    make_schedule,
    q_sample,
    reverse_step,
    sample_repair,
    training_loss,
)
from .distances import SpatialIndex, chamfer, hausdorff
from .geometry import (
    NormalizationRecord,
    load_xyz,
    normalize,
    random_downsample,
    rotate_xz,
    save_xyz,
)
from .mesh import Mesh, load_mesh, poisson_disk_sample
from .metrics import EvaluationRecord, aggregate_stats, distance_factor, evaluate_corpus

__version__ = "0.1.0"

__all__ = [
    "AugmentBounds",
    "CutSpec",
    "DiffusionState",
    "EvaluationRecord",
    "Mesh",
    "NoiseSchedule",
    "NormalizationRecord",
    "SpatialIndex",
    "Triplet",
    "aggregate_stats",
    "apply_cut",
    "chamfer",
    "distance_factor",
    "evaluate_corpus",
    "fix_counts",
    "hausdorff",
    "load_mesh",
    "load_xyz",
    "make_schedule",
    "make_triplets",
    "normalize",
    "poisson_disk_sample",
    "q_sample",
    "random_downsample",
    "reverse_step",
    "rotate_xz",
    "sample_repair",
    "save_xyz",
    "training_loss",
]
