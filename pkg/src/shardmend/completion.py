"""Repair generation: drive the reverse sampler over a directory of broken clouds."""

from __future__ import annotations

import os

import numpy as np

from .denoiser import DenoiserNet, load_checkpoint
from .diffusion import sample_repair
from .geometry import load_xyz, save_xyz
from .util import derived_seed, seed_to_int


def complete_cloud(net: DenoiserNet, broken, m: int, seed: int):
    """Sample an m-point repair for one broken cloud; returns (repair, composite)."""
    repair = sample_repair(net, broken, m, net.schedule, seed)
    composite = np.concatenate([np.asarray(broken, dtype=np.float64), repair])
    return repair, composite


def complete_directory(checkpoint_path, in_dir, out_dir, m: int, seed: int):
    """Repair every .xyz cloud in in_dir; writes out_dir/repair and out_dir/composite.

    Per-file seeds derive from (seed, stem) so results are independent of
    listing order. Returns the processed stems.
    """
    params, schedule, _ = load_checkpoint(checkpoint_path)
    net = DenoiserNet(params, schedule)
    repair_dir = os.path.join(out_dir, "repair")
    composite_dir = os.path.join(out_dir, "composite")
    os.makedirs(repair_dir, exist_ok=True)
    os.makedirs(composite_dir, exist_ok=True)
    stems = sorted(
        os.path.splitext(n)[0] for n in os.listdir(in_dir) if n.endswith(".xyz")
    )
    for stem in stems:
        broken = load_xyz(os.path.join(in_dir, stem + ".xyz"))
        repair, composite = complete_cloud(
            net, broken, m, seed_to_int(derived_seed(seed, stem))
        )
        save_xyz(os.path.join(repair_dir, stem + ".xyz"), repair)
        save_xyz(os.path.join(composite_dir, stem + ".xyz"), composite)
    return stems
