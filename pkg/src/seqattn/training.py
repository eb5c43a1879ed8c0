"""Loss, rmsprop, the mini-batch training loop, and checkpoint files.

Training is fully determined by (seed, data, config): shuffling uses one
seeded generator, per-example gradients accumulate in batch order, and the
optimizer touches parameters in a fixed order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import model as model_mod
from .corpus import PAD_ID
from .numerics import Node, ShapeError, Tape

LOG_CLAMP = 1e-12
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    """Training aborted (non-finite loss); message carries batch diagnostics."""


class CheckpointError(RuntimeError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointIntegrityError(CheckpointError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    rms_decay: float = 0.9
    rms_epsilon: float = 1e-8
    gradient_clip: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.rms_decay < 1.0:
            raise ValueError("rms_decay must lie strictly between 0 and 1")
        if self.rms_epsilon <= 0:
            raise ValueError("rms_epsilon must be positive")
        if self.gradient_clip <= 0:
            raise ValueError("gradient_clip must be positive")


@dataclass
class EpochStats:
    mean_loss: float
    examples_seen: int


def cross_entropy(predicted, target, tape=None):
    """-sum(target * log(predicted)) as a scalar node, log clamped at 1e-12."""
    target = np.asarray(target, dtype=np.float64)
    p = predicted.value
    if p.shape != target.shape:
        raise ShapeError(f"cross entropy of shapes {p.shape} and {target.shape}")
    clamped = np.maximum(p, LOG_CLAMP)
    out = Node(-np.dot(target, np.log(clamped)))
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            predicted.ensure_grad()
            # entries pinned by the clamp are locally constant
            local = np.where(p >= LOG_CLAMP, -target / clamped, 0.0)
            predicted.grad += float(g) * local
        tape.record(backward)
    return out


def cross_entropy_loss(predicted, target):
    """Value-level cross entropy between two distributions."""
    return float(cross_entropy(Node(predicted), target).value)


def rmsprop_update(param, cfg):
    """One rmsprop step; the gradient is consumed (zeroed) afterwards."""
    g = param.grad
    param.rms_cache *= cfg.rms_decay
    param.rms_cache += (1.0 - cfg.rms_decay) * g * g
    param.value -= cfg.learning_rate * g / (np.sqrt(param.rms_cache) + cfg.rms_epsilon)
    param.grad = np.zeros_like(param.value)


def clip_global_norm(params, max_norm):
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    total = np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params))
    if total > max_norm:
        scale = max_norm / total
        for p in params:
            p.grad *= scale
    return total


def pad_batch(examples, pad_id=PAD_ID):
    """Pad every sequence in the batch to the longest one with PAD."""
    width = max(len(ex.token_ids) for ex in examples)
    return [list(ex.token_ids) + [pad_id] * (width - len(ex.token_ids)) for ex in examples]


def train_epoch(model, examples, cfg, rng, epoch=0):
    """One shuffled pass: accumulate mean-loss gradients per batch, clip, update."""
    if not examples:
        raise ValueError("cannot train on an empty dataset")
    params = model.parameters()
    order = rng.permutation(len(examples))
    total_loss = 0.0
    for batch_index in range(0, len(order), cfg.batch_size):
        batch = [examples[i] for i in order[batch_index:batch_index + cfg.batch_size]]
        padded = pad_batch(batch)
        for ids, ex in zip(padded, batch):
            tape = Tape()
            probs = model.forward_ids(ids, tape)
            loss = cross_entropy(probs, ex.target, tape)
            value = float(loss.value)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss {value} in epoch {epoch}, "
                    f"batch {batch_index // cfg.batch_size}")
            total_loss += value
            tape.backward(loss, seed=1.0 / len(batch))
        clip_global_norm(params, cfg.gradient_clip)
        for p in params:
            rmsprop_update(p, cfg)
    return EpochStats(total_loss / len(examples), len(examples))


def train(model, examples, cfg, log=None):
    """Run cfg.epochs epochs; returns per-epoch statistics."""
    rng = np.random.default_rng(cfg.seed)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        stats = train_epoch(model, examples, cfg, rng, epoch=epoch)
        history.append(stats)
        if log is not None:
            log(f"epoch {epoch}/{cfg.epochs} mean_loss {stats.mean_loss:.6f} "
                f"examples {stats.examples_seen}")
    return history


# ---------------------------------------------------------------------------
# checkpoints: one JSON manifest line, then raw little-endian float64 arrays


def _describe(model, task, labels, context_n):
    if model.kind == "sequence":
        cfg = model.config
        spec = {"vocab_size": cfg.vocab_size, "num_classes": cfg.num_classes,
                "embed_dim": cfg.embed_dim, "hidden_dim": cfg.hidden_dim,
                "fc_dim": cfg.fc_dim, "attention": cfg.attention, "seed": cfg.seed}
    else:
        spec = {"vocab_size": model.vocab_size, "num_classes": model.num_classes,
                "hidden_dim": model.hidden_dim, "num_layers": model.num_layers,
                "seed": model.seed}
    return {"kind": model.kind, "task": task, "labels": list(labels),
            "context_n": context_n, "spec": spec}


def _rebuild(descriptor):
    spec = descriptor["spec"]
    if descriptor["kind"] == "sequence":
        return model_mod.SequenceClassifier(model_mod.ModelConfig(**spec))
    if descriptor["kind"] == "mlp":
        return model_mod.BagOfWordsClassifier(
            spec["vocab_size"], spec["num_classes"], hidden_dim=spec["hidden_dim"],
            num_layers=spec["num_layers"], seed=spec["seed"])
    raise CheckpointError(f"unknown model kind {descriptor['kind']!r}")


def save_checkpoint(path, model, task, labels, context_n=0, metadata=None):
    """Write manifest + parameter blob; identical state gives identical bytes."""
    params = model.parameters()
    header = {
        "format_version": CHECKPOINT_VERSION,
        "model": _describe(model, task, labels, context_n),
        "metadata": metadata or {},
        "arrays": [{"name": p.name, "shape": list(p.value.shape)} for p in params],
    }
    blob = b"".join(np.ascontiguousarray(p.value, dtype="<f8").tobytes() for p in params)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(blob)


def load_checkpoint(path):
    """Rebuild the model from a checkpoint; returns (model, descriptor, metadata)."""
    with open(path, "rb") as fh:
        head = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointIntegrityError(f"unreadable checkpoint manifest: {exc}") from None
    version = header.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint format {version!r} is not supported (expected {CHECKPOINT_VERSION})")

    model = _rebuild(header["model"])
    params = {p.name: p for p in model.parameters()}
    offset = 0
    loaded = {}
    for entry in header["arrays"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in params:
            raise CheckpointIntegrityError(f"unexpected parameter {name!r} in checkpoint")
        if params[name].value.shape != shape:
            raise CheckpointIntegrityError(
                f"parameter {name!r} has shape {shape}, "
                f"model expects {params[name].value.shape}")
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * 8
        if end > len(blob):
            raise CheckpointIntegrityError("checkpoint truncated: parameter data missing")
        loaded[name] = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(blob):
        raise CheckpointIntegrityError("checkpoint corrupt: trailing bytes after parameters")
    if set(loaded) != set(params):
        missing = sorted(set(params) - set(loaded))
        raise CheckpointIntegrityError(f"checkpoint missing parameters: {missing}")
    for name, value in loaded.items():
        params[name].value = value
    return model, header["model"], header["metadata"]
