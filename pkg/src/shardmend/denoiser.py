"""Desk-scale conditional noise predictor with exact analytic gradients.

The network maps (noisy repair cloud, condition cloud, step) to predicted
noise. A shared per-point stack encodes the condition; channel-wise max
pooling produces a global feature that, together with a sinusoidal time
embedding, conditions a per-point trunk over the noisy repair points.
All math is float64 numpy; backprop is written out by hand so gradients can
be verified coordinate-by-coordinate against finite differences.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, replace

import numpy as np

from .diffusion import NoiseSchedule, make_schedule, q_sample
from .geometry import as_cloud

TIME_MAX_FREQ = 1000.0
CHECKPOINT_MAGIC = b"PCDF"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetDescriptor:
    """Architecture descriptor; the parameter layout is derived from it alone."""

    cond_widths: tuple[int, ...] = (64, 128)
    trunk_widths: tuple[int, ...] = (256, 256, 128)
    time_dim: int = 64

    def check(self) -> None:
        if len(self.cond_widths) < 1 or len(self.trunk_widths) < 1:
            raise ValueError("descriptor needs at least one layer per stack")
        if any(w < 1 for w in self.cond_widths + self.trunk_widths):
            raise ValueError("all widths must be >= 1")
        if self.time_dim < 2 or self.time_dim % 2:
            raise ValueError("time_dim must be even and >= 2")

    def layers(self) -> list[tuple[str, int, int]]:
        """Ordered (name, fan_in, fan_out) of every affine layer."""
        out = []
        prev = 3
        for i, w in enumerate(self.cond_widths):
            out.append((f"cond{i}", prev, w))
            prev = w
        g_dim = prev
        prev = 3 + g_dim + self.time_dim
        for i, w in enumerate(self.trunk_widths):
            out.append((f"trunk{i}", prev, w))
            prev = w
        out.append(("out", prev, 3))
        return out

    def param_count(self) -> int:
        return sum(fi * fo + fo for _, fi, fo in self.layers())


def reduced_descriptor() -> NetDescriptor:
    """Small profile for gradient checks and overfit runs (widths 8/16)."""
    return NetDescriptor(cond_widths=(8, 16), trunk_widths=(16, 8), time_dim=8)


@dataclass(frozen=True)
class DenoiserParameters:
    descriptor: NetDescriptor
    vector: np.ndarray  # flat float64, sliced per descriptor.layers()

    def views(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """Weight/bias views into the flat vector, keyed by layer name."""
        out = {}
        off = 0
        for name, fi, fo in self.descriptor.layers():
            w = self.vector[off : off + fi * fo].reshape(fi, fo)
            off += fi * fo
            b = self.vector[off : off + fo]
            off += fo
            out[name] = (w, b)
        return out

    def with_vector(self, vector: np.ndarray) -> "DenoiserParameters":
        if vector.shape != self.vector.shape:
            raise ValueError("parameter vector shape mismatch")
        return replace(self, vector=vector)


def init_params(descriptor: NetDescriptor, seed: int) -> DenoiserParameters:
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    descriptor.check()
    rng = np.random.default_rng(seed)
    chunks = []
    for _, fi, fo in descriptor.layers():
        limit = np.sqrt(6.0 / (fi + fo))
        chunks.append(rng.uniform(-limit, limit, size=fi * fo))
        chunks.append(np.zeros(fo))
    return DenoiserParameters(descriptor, np.concatenate(chunks))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _silu(x: np.ndarray) -> np.ndarray:
    return x * _sigmoid(x)


def _silu_grad(x: np.ndarray) -> np.ndarray:
    s = _sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def time_embedding(t: int, T: int, dim: int) -> np.ndarray:
    """Sinusoidal embedding of t/T; frequencies geometric from 1 to TIME_MAX_FREQ."""
    half = dim // 2
    if half == 1:
        freqs = np.ones(1)
    else:
        freqs = TIME_MAX_FREQ ** (np.arange(half) / (half - 1))
    ang = freqs * (t / T)
    return np.concatenate([np.sin(ang), np.cos(ang)])


def encode_condition(params: DenoiserParameters, condition) -> np.ndarray:
    """Global condition feature: shared per-point stack + channel-wise max pool."""
    views = params.views()
    a = as_cloud(condition)
    for i in range(len(params.descriptor.cond_widths)):
        w, b = views[f"cond{i}"]
        a = _silu(a @ w + b)
    return a.max(axis=0)


def forward(params: DenoiserParameters, x_tilde, condition, t: int, T: int, g=None) -> np.ndarray:
    """Predicted noise for every repair point, shape (M, 3).

    Pass a precomputed `g` from encode_condition() to skip re-encoding a
    condition that has not changed (the sampler does this every step).
    """
    views = params.views()
    x = as_cloud(x_tilde)
    if g is None:
        g = encode_condition(params, condition)
    temb = time_embedding(t, T, params.descriptor.time_dim)
    m = x.shape[0]
    h = np.concatenate(
        [x, np.broadcast_to(g, (m, g.shape[0])), np.broadcast_to(temb, (m, temb.shape[0]))],
        axis=1,
    )
    for i in range(len(params.descriptor.trunk_widths)):
        w, b = views[f"trunk{i}"]
        h = _silu(h @ w + b)
    w, b = views["out"]
    return h @ w + b


class DenoiserNet:
    """Callable (x_tilde, condition, t) wrapper binding parameters + schedule.

    Caches the condition feature per condition object, so the reverse sampler
    pays for the condition encoder once per cloud instead of once per step.
    """

    def __init__(self, params: DenoiserParameters, schedule: NoiseSchedule):
        self.params = params
        self.schedule = schedule
        self._cached_condition = None
        self._cached_g = None

    def __call__(self, x_tilde, condition, t: int) -> np.ndarray:
        if condition is not self._cached_condition:
            self._cached_g = encode_condition(self.params, condition)
            self._cached_condition = condition
        return forward(self.params, x_tilde, condition, t, self.schedule.T, g=self._cached_g)


def _item_loss_grad(params, x0, cond, t, eps, schedule):
    views = params.views()
    desc = params.descriptor
    n_cond = len(desc.cond_widths)
    n_trunk = len(desc.trunk_widths)

    x_t = q_sample(x0, t, eps, schedule)

    # condition encoder forward, caching pre-activations
    cond_pre, cond_act = [], [as_cloud(cond)]
    a = cond_act[0]
    for i in range(n_cond):
        w, b = views[f"cond{i}"]
        z = a @ w + b
        cond_pre.append(z)
        a = _silu(z)
        cond_act.append(a)
    g = a.max(axis=0)
    pool_arg = a.argmax(axis=0)

    temb = time_embedding(t, schedule.T, desc.time_dim)
    m = x_t.shape[0]
    c_dim = g.shape[0]
    trunk_in = np.concatenate(
        [x_t, np.broadcast_to(g, (m, c_dim)), np.broadcast_to(temb, (m, desc.time_dim))], axis=1
    )

    trunk_pre, trunk_act = [], [trunk_in]
    h = trunk_in
    for i in range(n_trunk):
        w, b = views[f"trunk{i}"]
        z = h @ w + b
        trunk_pre.append(z)
        h = _silu(z)
        trunk_act.append(h)
    w_out, b_out = views["out"]
    out = h @ w_out + b_out

    resid = eps - out
    loss = float(np.mean(resid * resid))

    # backprop; d loss / d out
    grads: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    d = -2.0 * resid / resid.size
    grads["out"] = (trunk_act[-1].T @ d, d.sum(axis=0))
    d = d @ w_out.T
    for i in reversed(range(n_trunk)):
        d = d * _silu_grad(trunk_pre[i])
        w, _ = views[f"trunk{i}"]
        grads[f"trunk{i}"] = (trunk_act[i].T @ d, d.sum(axis=0))
        d = d @ w.T

    # split the trunk-input gradient; xyz and time rows carry no parameters
    dg = d[:, 3 : 3 + c_dim].sum(axis=0)
    # max pool routes each channel's gradient to its argmax point
    d = np.zeros_like(cond_act[-1])
    d[pool_arg, np.arange(c_dim)] = dg
    for i in reversed(range(n_cond)):
        d = d * _silu_grad(cond_pre[i])
        w, _ = views[f"cond{i}"]
        grads[f"cond{i}"] = (cond_act[i].T @ d, d.sum(axis=0))
        d = d @ w.T

    flat = np.concatenate(
        [np.concatenate([grads[name][0].ravel(), grads[name][1]]) for name, _, _ in desc.layers()]
    )
    return loss, flat


def loss_and_grad(params: DenoiserParameters, batch, ts, epses, schedule: NoiseSchedule):
    """Batch loss and its exact gradient with respect to every parameter.

    The loss equals diffusion.training_loss on the same inputs; the gradient
    is the mean of the per-item gradients, accumulated in batch order.
    """
    if len(batch) == 0:
        raise ValueError("batch is empty")
    total = 0.0
    grad = np.zeros_like(params.vector)
    for (x0, cond), t, eps in zip(batch, ts, epses):
        eps = np.asarray(eps, dtype=np.float64)
        if eps.shape != np.shape(x0):
            raise ValueError(f"noise shape {eps.shape} != repair shape {np.shape(x0)}")
        loss_i, grad_i = _item_loss_grad(params, as_cloud(x0), cond, int(t), eps, schedule)
        total += loss_i
        grad += grad_i
    n = len(batch)
    return total / n, grad / n


@dataclass
class AdamState:
    """Adam accumulators; step counts completed updates."""

    step: int
    m: np.ndarray
    v: np.ndarray
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(n_params: int, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(0, np.zeros(n_params), np.zeros(n_params), lr, beta1, beta2, eps)


def adam_step(vector: np.ndarray, grad: np.ndarray, state: AdamState):
    """One bias-corrected Adam update; returns (new vector, new state)."""
    if grad.shape != vector.shape or state.m.shape != vector.shape:
        raise ValueError("gradient/state shape mismatch")
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_vector = vector - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_vector, AdamState(t, m, v, state.lr, state.beta1, state.beta2, state.eps)


def save_checkpoint(path, params: DenoiserParameters, schedule: NoiseSchedule,
                    trained_steps: int = 0) -> None:
    """Versioned binary checkpoint; see load_checkpoint for the layout."""
    desc = params.descriptor
    meta = {
        "cond_widths": list(desc.cond_widths),
        "trunk_widths": list(desc.trunk_widths),
        "time_dim": desc.time_dim,
        "trained_steps": int(trained_steps),
    }
    desc_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    kind_bytes = b"linear"
    buf = bytearray()
    buf += CHECKPOINT_MAGIC
    buf += struct.pack("<I", CHECKPOINT_VERSION)
    buf += struct.pack("<I", len(desc_bytes))
    buf += desc_bytes
    buf += struct.pack("<IddI", schedule.T, float(schedule.beta[0]), float(schedule.beta[-1]),
                       len(kind_bytes))
    buf += kind_bytes
    buf += params.vector.astype("<f8").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)))
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


def load_checkpoint(path):
    """Read a checkpoint; returns (params, schedule, trained_steps).

    Layout: magic 'PCDF', u32 version, u32-length-prefixed descriptor JSON,
    u32 T, f64 beta_start, f64 beta_end, u32-length-prefixed kind, parameter
    float64s little-endian in descriptor order, trailing CRC32 of all
    preceding bytes.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    (crc,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(raw[:-4]) != crc:
        raise ValueError(f"{path}: checksum mismatch")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    (desc_len,) = struct.unpack_from("<I", raw, 8)
    off = 12
    meta = json.loads(raw[off : off + desc_len].decode("utf-8"))
    off += desc_len
    t_steps, beta_start, beta_end, kind_len = struct.unpack_from("<IddI", raw, off)
    off += struct.calcsize("<IddI")
    kind = raw[off : off + kind_len].decode("utf-8")
    off += kind_len
    descriptor = NetDescriptor(
        cond_widths=tuple(meta["cond_widths"]),
        trunk_widths=tuple(meta["trunk_widths"]),
        time_dim=int(meta["time_dim"]),
    )
    n_params = descriptor.param_count()
    body = raw[off:-4]
    if len(body) != 8 * n_params:
        raise ValueError(f"{path}: expected {n_params} parameters, found {len(body) // 8}")
    vector = np.frombuffer(body, dtype="<f8").astype(np.float64)
    schedule = make_schedule(t_steps, beta_start, beta_end, kind)
    return (
        DenoiserParameters(descriptor, vector),
        schedule,
        int(meta.get("trained_steps", 0)),
    )
