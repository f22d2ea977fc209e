"""Conditional denoising diffusion over the repair fragment.

The forward process adds Gaussian noise to the M-point repair cloud under a
fixed variance schedule while the N-point condition cloud stays untouched.
The trained network predicts the injected noise; the reverse sampler removes
it step by step to turn pure noise into a repair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_cloud


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise variances: beta_t, alpha_t = 1 - beta_t, and the running
    product alpha_bar_t."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray


def make_schedule(
    T: int, beta_start: float = 1e-4, beta_end: float = 0.02, kind: str = "linear"
) -> NoiseSchedule:
    """Linear variance schedule from beta_start to beta_end inclusive over T steps."""
    if kind != "linear":
        raise ValueError(f"unsupported schedule kind {kind!r}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]")
    beta = np.linspace(beta_start, beta_end, T)
    alpha = 1.0 - beta
    return NoiseSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=np.cumprod(alpha))


# Desk-scale test profile; the full-scale default lives in config.py.
TEST_PROFILE = dict(T=100, beta_start=1e-4, beta_end=0.05)


@dataclass(frozen=True)
class DiffusionState:
    """Noisy repair cloud at step t plus the untouched condition cloud."""

    x_tilde: np.ndarray
    condition: np.ndarray
    t: int


def _check_step(t: int, schedule: NoiseSchedule) -> None:
    if not 1 <= t <= schedule.T:
        raise ValueError(f"step t={t} outside [1, {schedule.T}]")


def q_sample(x0_repair, t: int, eps, schedule: NoiseSchedule) -> np.ndarray:
    """Closed-form forward sample: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    x0 = as_cloud(x0_repair)
    eps = np.asarray(eps, dtype=np.float64)
    _check_step(t, schedule)
    if eps.shape != x0.shape:
        raise ValueError(f"noise shape {eps.shape} != repair shape {x0.shape}")
    ab = schedule.alpha_bar[t - 1]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def training_loss(net, batch, ts, epses, schedule: NoiseSchedule) -> float:
    """Noise-prediction MSE, averaged over batch items and all M x 3 coordinates.

    `net` is any callable (x_tilde_t, condition, t) -> predicted noise. Each
    batch item is a (repair, condition) pair with its own step t and noise.
    """
    if len(batch) == 0:
        raise ValueError("batch is empty")
    losses = []
    for (x0, cond), t, eps in zip(batch, ts, epses):
        x_t = q_sample(x0, int(t), eps, schedule)
        resid = eps - net(x_t, cond, int(t))
        losses.append(float(np.mean(resid * resid)))
    return float(np.mean(losses))


def reverse_step(net, state: DiffusionState, z, schedule: NoiseSchedule) -> DiffusionState:
    """One reverse transition from step t to t-1.

    x_{t-1} = (x_t - (1-alpha_t)/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t)
              + sqrt(beta_t) * z, with z forced to zero at the final step t=1.
    The condition cloud passes through untouched.
    """
    t = state.t
    _check_step(t, schedule)
    z = np.asarray(z, dtype=np.float64)
    if z.shape != state.x_tilde.shape:
        raise ValueError(f"noise shape {z.shape} != repair shape {state.x_tilde.shape}")
    if t == 1 and np.any(z != 0.0):
        raise ValueError("z must be zero at the final step t=1")
    a = schedule.alpha[t - 1]
    ab = schedule.alpha_bar[t - 1]
    b = schedule.beta[t - 1]
    eps_hat = net(state.x_tilde, state.condition, t)
    x_prev = (state.x_tilde - ((1.0 - a) / np.sqrt(1.0 - ab)) * eps_hat) / np.sqrt(a)
    x_prev = x_prev + np.sqrt(b) * z
    return DiffusionState(x_tilde=x_prev, condition=state.condition, t=t - 1)


def sample_repair(net, condition, M: int, schedule: NoiseSchedule, seed: int) -> np.ndarray:
    """Run the full reverse chain from Gaussian noise to an M-point repair cloud."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    cond = as_cloud(condition)
    rng = np.random.default_rng(seed)
    state = DiffusionState(rng.standard_normal((M, 3)), cond, schedule.T)
    zero = np.zeros((M, 3))
    for t in range(schedule.T, 0, -1):
        z = rng.standard_normal((M, 3)) if t > 1 else zero
        state = reverse_step(net, state, z, schedule)
    return state.x_tilde
