"""Training loop: manifest-driven batches, Adam updates, loss log, checkpoint."""

from __future__ import annotations

import os

import numpy as np

from .config import PipelineConfig
from .denoiser import (
    DenoiserParameters,
    NetDescriptor,
    adam_init,
    adam_step,
    init_params,
    load_checkpoint,
    loss_and_grad,
    save_checkpoint,
)
from .diffusion import make_schedule
from .store import SPLIT_TRAIN, Manifest, load_entry_clouds


def load_training_set(root, manifest: Manifest):
    """Load (repair, broken) pairs for every train-split entry, id-sorted."""
    entries = sorted(
        (e for e in manifest.entries if e.split == SPLIT_TRAIN), key=lambda e: e.object_id
    )
    if not entries:
        raise ValueError("manifest has no train-split entries; run `split` first")
    items = []
    for e in entries:
        clouds = load_entry_clouds(root, e)
        items.append((clouds["repair"], clouds["broken"]))
    return items


def train(root, manifest: Manifest, cfg: PipelineConfig, seed: int, out_path,
          descriptor: NetDescriptor | None = None, resume=None, log_path=None,
          log_every: int = 1):
    """Train the denoiser on the manifest's train split and write a checkpoint.

    Deterministic for fixed inputs: epoch e draws its shuffle, steps, and
    noise from SeedSequence([seed, e]). Resuming continues epoch numbering
    (and the loss-log step numbering) from the checkpoint's trained step
    count; fresh Adam accumulators are used after a resume.
    """
    items = load_training_set(root, manifest)
    n = len(items)
    batch_size = min(cfg.training.batch_size, n)
    steps_per_epoch = (n + batch_size - 1) // batch_size

    if resume is not None:
        params, schedule, trained_steps = load_checkpoint(resume)
        if trained_steps % steps_per_epoch:
            raise ValueError(
                f"checkpoint at step {trained_steps} does not align with "
                f"{steps_per_epoch} steps/epoch; was it trained on this dataset?"
            )
        start_epoch = trained_steps // steps_per_epoch
    else:
        schedule = make_schedule(cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end,
                                 cfg.schedule.kind)
        params = init_params(descriptor or NetDescriptor(), seed)
        trained_steps = 0
        start_epoch = 0

    state = adam_init(params.vector.size, lr=cfg.training.learning_rate)
    step = trained_steps

    log = None
    if log_path is not None:
        # fresh runs overwrite (idempotence); resumed runs append monotone steps
        append = resume is not None and os.path.exists(log_path)
        log = open(log_path, "a" if append else "w", encoding="utf-8", newline="\n")
        if not append:
            log.write("step,loss\n")
    try:
        for epoch in range(start_epoch, cfg.training.epochs):
            rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), epoch]))
            perm = rng.permutation(n)
            for lo in range(0, n, batch_size):
                idx = perm[lo : lo + batch_size]
                batch = [items[i] for i in idx]
                ts = rng.integers(1, schedule.T + 1, size=len(idx))
                epses = [rng.standard_normal(items[i][0].shape) for i in idx]
                loss, grad = loss_and_grad(params, batch, ts, epses, schedule)
                vector, state = adam_step(params.vector, grad, state)
                params = params.with_vector(vector)
                step += 1
                if log is not None and (step % log_every == 0):
                    log.write(f"{step},{loss!r}\n")
    finally:
        if log is not None:
            log.close()
    save_checkpoint(out_path, params, schedule, trained_steps=step)
    return params, schedule, step
