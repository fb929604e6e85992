"""Minimal dense neural-network engine.

Fully connected layers with tanh/sigmoid/identity activations, MSE loss,
reverse-mode gradients, ADAM with bias correction, and a stepped
learning-rate schedule. Everything runs in float64; parameter containers
are immutable tuples, so an optimizer step returns fresh arrays and a
snapshot can be read concurrently while training continues.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("identity", "tanh", "sigmoid")


class TrainingDiverged(RuntimeError):
    """Raised when a training loss stops being finite."""


@dataclass(frozen=True)
class LayerSpec:
    n_in: int
    n_out: int
    activation: str

    def __post_init__(self):
        if self.n_in <= 0 or self.n_out <= 0:
            raise ValueError("layer sizes must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class Network:
    """Layer specs plus their parameters: a tuple of (W, b) per layer."""

    specs: tuple[LayerSpec, ...]
    params: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        if len(self.specs) != len(self.params):
            raise ValueError("specs and params length mismatch")
        for spec, (W, b) in zip(self.specs, self.params):
            if W.shape != (spec.n_in, spec.n_out) or b.shape != (spec.n_out,):
                raise ValueError(f"parameter shapes {W.shape}, {b.shape} do not match {spec}")
        for prev, nxt in zip(self.specs, self.specs[1:]):
            if prev.n_out != nxt.n_in:
                raise ValueError("adjacent layer dimensions do not chain")

    @property
    def n_in(self) -> int:
        return self.specs[0].n_in

    @property
    def n_out(self) -> int:
        return self.specs[-1].n_out


def init_network(specs, seed=0) -> Network:
    """Glorot-uniform weights (suited to tanh), zero biases."""
    rng = np.random.default_rng(seed)
    params = []
    for spec in specs:
        bound = np.sqrt(6.0 / (spec.n_in + spec.n_out))
        W = rng.uniform(-bound, bound, (spec.n_in, spec.n_out))
        b = np.zeros(spec.n_out)
        params.append((W, b))
    return Network(specs=tuple(specs), params=tuple(params))


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "tanh":
        return np.tanh(z)
    # numerically stable sigmoid
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activation_grad_from_output(name: str, a: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(a)
    if name == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Forward pass. Accepts a single vector or a (batch, n_in) matrix."""
    y, _ = forward_cached(net, x, keep_cache=False)
    return y


def forward_cached(net: Network, x: np.ndarray, keep_cache: bool = True):
    """Forward pass returning (output, cache) for a later backward call."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.ndim != 2 or a.shape[1] != net.n_in:
        raise ValueError(f"input shape {x.shape} incompatible with first layer ({net.n_in} inputs)")
    inputs, outputs = [], []
    for spec, (W, b) in zip(net.specs, net.params):
        if keep_cache:
            inputs.append(a)
        z = a @ W + b
        a = _apply_activation(spec.activation, z)
        if keep_cache:
            outputs.append(a)
    y = a[0] if single else a
    cache = (tuple(inputs), tuple(outputs)) if keep_cache else None
    return y, cache


def backward(net: Network, cache, out_grad: np.ndarray):
    """Backpropagate ``out_grad`` (dL/dy) through the cached forward pass.

    Returns per-layer (dW, db) gradients with shapes mirroring the network
    parameters. The cache must come from a matching forward_cached call.
    """
    if cache is None:
        raise ValueError("no cache: run forward_cached first")
    inputs, outputs = cache
    if len(inputs) != len(net.specs) or len(outputs) != len(net.specs):
        raise ValueError("stale cache: layer count does not match network")
    for spec, x_l, a_l in zip(net.specs, inputs, outputs):
        if x_l.shape[1] != spec.n_in or a_l.shape[1] != spec.n_out:
            raise ValueError("stale cache: layer shapes do not match network")
    g = np.asarray(out_grad, dtype=np.float64)
    single = g.ndim == 1
    if single:
        g = g[None, :]
    if g.shape != outputs[-1].shape:
        raise ValueError(f"out_grad shape {out_grad.shape} does not match output {outputs[-1].shape}")
    grads = [None] * len(net.specs)
    for i in range(len(net.specs) - 1, -1, -1):
        spec = net.specs[i]
        W, _ = net.params[i]
        delta = g * _activation_grad_from_output(spec.activation, outputs[i])
        grads[i] = (inputs[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            g = delta @ W.T
    return tuple(grads)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over all components (and batch rows, if any)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("empty inputs")
    return float(np.mean((target - pred) ** 2))


def mse_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of mse_loss with respect to ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return 2.0 * (pred - target) / pred.size


# -- ADAM -----------------------------------------------------------------

@dataclass(frozen=True)
class AdamState:
    m: tuple
    v: tuple
    t: int


def adam_init(net: Network) -> AdamState:
    zeros = tuple((np.zeros_like(W), np.zeros_like(b)) for W, b in net.params)
    return AdamState(m=zeros, v=tuple((np.zeros_like(W), np.zeros_like(b)) for W, b in net.params), t=0)


def adam_step(
    net: Network,
    grads,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[Network, AdamState]:
    """One bias-corrected ADAM update. Pure: returns a new network and state.

    Non-finite gradients are rejected before any parameter is touched.
    """
    if lr < 0:
        raise ValueError("learning rate must be nonnegative")
    if len(grads) != len(net.params):
        raise ValueError("gradient count does not match parameter count")
    for (dW, db), (W, b) in zip(grads, net.params):
        if dW.shape != W.shape or db.shape != b.shape:
            raise ValueError("gradient shapes do not match parameters")
        if not (np.all(np.isfinite(dW)) and np.all(np.isfinite(db))):
            raise ValueError("non-finite gradient")
    t = state.t + 1
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    new_params, new_m, new_v = [], [], []
    for (W, b), (dW, db), (mW, mb), (vW, vb) in zip(net.params, grads, state.m, state.v):
        mW = beta1 * mW + (1 - beta1) * dW
        mb = beta1 * mb + (1 - beta1) * db
        vW = beta2 * vW + (1 - beta2) * dW**2
        vb = beta2 * vb + (1 - beta2) * db**2
        W = W - lr * (mW / bc1) / (np.sqrt(vW / bc2) + eps)
        b = b - lr * (mb / bc1) / (np.sqrt(vb / bc2) + eps)
        new_params.append((W, b))
        new_m.append((mW, mb))
        new_v.append((vW, vb))
    return (
        Network(specs=net.specs, params=tuple(new_params)),
        AdamState(m=tuple(new_m), v=tuple(new_v), t=t),
    )


# -- training loop --------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 128
    lr0: float = 0.005
    decay: float = 0.5
    decay_every: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    full_pass: bool = False  # False: one minibatch update per epoch

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not (0.0 < self.decay <= 1.0):
            raise ValueError("decay must lie in (0, 1]")
        if self.lr0 < 0 or self.decay_every < 1:
            raise ValueError("lr0 must be >= 0 and decay_every >= 1")


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """Stepped schedule: lr0 * decay ** floor(epoch / decay_every)."""
    if epoch < 0:
        raise ValueError("epoch must be nonnegative")
    return cfg.lr0 * cfg.decay ** (epoch // cfg.decay_every)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    lr: float
    train_mse: float
    test_mse: float


def evaluate_mse(net: Network, x: np.ndarray, y: np.ndarray, batch: int = 512) -> float:
    """MSE of the network over a dataset, computed in batches."""
    total = 0.0
    n = x.shape[0]
    for i in range(0, n, batch):
        pred = forward(net, x[i : i + batch])
        total += float(np.sum((y[i : i + batch] - pred) ** 2))
    return total / (n * y.shape[1])


def train(
    net: Network,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_test: np.ndarray,
    y_test: np.ndarray,
    cfg: TrainConfig,
    on_epoch=None,
) -> tuple[Network, list[EpochStats]]:
    """Train with ADAM and the stepped schedule; track both splits per epoch.

    Each epoch draws either one random minibatch (default) or a full
    shuffled pass over the training set (``cfg.full_pass``). A requested
    batch larger than the dataset is drawn with replacement. Deterministic
    given the config seed. ``on_epoch(epoch, net, stats)`` runs after each
    epoch, e.g. to save checkpoints.
    """
    n = x_train.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(cfg.seed)
    state = adam_init(net)
    history: list[EpochStats] = []
    for epoch in range(cfg.epochs):
        lr = lr_at_epoch(cfg, epoch)
        if cfg.full_pass and cfg.batch_size <= n:
            order = rng.permutation(n)
            batches = [order[i : i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]
        else:
            batches = [rng.choice(n, size=cfg.batch_size, replace=cfg.batch_size > n)]
        for idx in batches:
            xb, yb = x_train[idx], y_train[idx]
            pred, cache = forward_cached(net, xb)
            loss = mse_loss(pred, yb)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss {loss} at epoch {epoch}")
            grads = backward(net, cache, mse_grad(pred, yb))
            net, state = adam_step(net, grads, state, lr, cfg.beta1, cfg.beta2, cfg.eps)
        stats = EpochStats(
            epoch=epoch,
            lr=lr,
            train_mse=evaluate_mse(net, x_train, y_train),
            test_mse=evaluate_mse(net, x_test, y_test) if x_test.shape[0] else float("nan"),
        )
        if not np.isfinite(stats.train_mse):
            raise TrainingDiverged(f"non-finite training MSE at epoch {epoch}")
        history.append(stats)
        if on_epoch is not None:
            on_epoch(epoch, net, stats)
    return net, history


# -- serialization --------------------------------------------------------

_MAGIC = b"MMNN"
_FORMAT_VERSION = 1
_ACT_CODES = {name: i for i, name in enumerate(ACTIVATIONS)}


class CorruptModelFile(ValueError):
    """Model file failed its integrity check."""


def save_network(net: Network, path) -> None:
    """Versioned binary: magic, layer dims, little-endian float64 payload,
    sha256 checksum. A JSON sidecar (.json) mirrors the layer specs."""
    path = str(path)
    parts = [_MAGIC, struct.pack("<II", _FORMAT_VERSION, len(net.specs))]
    for spec in net.specs:
        parts.append(struct.pack("<III", spec.n_in, spec.n_out, _ACT_CODES[spec.activation]))
    for W, b in net.params:
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    blob = b"".join(parts)
    digest = hashlib.sha256(blob).digest()
    with open(path, "wb") as f:
        f.write(blob + digest)
    sidecar = {
        "format": "mirrormark-network",
        "version": _FORMAT_VERSION,
        "layers": [
            {"n_in": s.n_in, "n_out": s.n_out, "activation": s.activation} for s in net.specs
        ],
    }
    with open(path + ".json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def load_network(path) -> Network:
    with open(str(path), "rb") as f:
        blob = f.read()
    if len(blob) < 44 or blob[:4] != _MAGIC:
        raise CorruptModelFile(f"{path}: not a mirrormark network file")
    payload, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise CorruptModelFile(f"{path}: checksum failure, file is corrupt")
    version, n_layers = struct.unpack_from("<II", payload, 4)
    if version != _FORMAT_VERSION:
        raise CorruptModelFile(f"{path}: unsupported format version {version}")
    off = 12
    specs = []
    for _ in range(n_layers):
        n_in, n_out, act = struct.unpack_from("<III", payload, off)
        off += 12
        specs.append(LayerSpec(n_in, n_out, ACTIVATIONS[act]))
    params = []
    for spec in specs:
        nw = spec.n_in * spec.n_out
        W = np.frombuffer(payload, dtype="<f8", count=nw, offset=off).reshape(spec.n_in, spec.n_out)
        off += nw * 8
        b = np.frombuffer(payload, dtype="<f8", count=spec.n_out, offset=off)
        off += spec.n_out * 8
        params.append((W.copy(), b.copy()))
    if off != len(payload):
        raise CorruptModelFile(f"{path}: trailing bytes in payload")
    return Network(specs=tuple(specs), params=tuple(params))
