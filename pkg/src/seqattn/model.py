"""Sequence classifiers: LSTM encoder with optional cosine attention, MLP baseline.

The attention variant scores every embedded input position by cosine
similarity against the projected encoder summary, normalizes the scores
either with softmax (sharpening) or with sum-normalized sigmoids
(smoothing), and classifies the attention-weighted sum of the embeddings.
One embedding table serves both the encoder input and the attention
targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import numerics
from .corpus import PAD_ID
from .numerics import Node, Parameter, ShapeError

ATTENTION_MODES = ("none", "sharpening", "smoothing")


@dataclass
class ModelConfig:
    vocab_size: int
    num_classes: int
    embed_dim: int = 400
    hidden_dim: int = 128
    fc_dim: int = 500
    attention: str = "none"
    seed: int = 0

    def __post_init__(self):
        for name in ("vocab_size", "num_classes", "embed_dim", "hidden_dim", "fc_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.attention not in ATTENTION_MODES:
            raise ValueError(
                f"attention must be one of {ATTENTION_MODES}, got {self.attention!r}")


@dataclass
class EncoderOutput:
    """Embedded input vectors, final hidden state, and validity mask."""

    vectors: list
    final: Node
    mask: np.ndarray


@dataclass
class AttentionTrace:
    """Per-position scores and weights of one attention forward pass.

    Masked (PAD) positions hold weight exactly 0 and score 0; the weights
    sum to 1 over the valid positions.
    """

    scores: np.ndarray
    weights: np.ndarray
    mode: str


def glorot(rng, shape):
    fan_out, fan_in = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def normalize_sharpening(scores, mask=None):
    """Softmax over the valid positions; masked weights are exactly 0."""
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.ones(scores.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("no valid positions to normalize over")
    out = np.zeros_like(scores)
    out[mask] = numerics.softmax_stable(scores[mask])
    return out


def normalize_smoothing(scores, mask=None):
    """Sum-normalized sigmoids over the valid positions; masked weights are 0."""
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.ones(scores.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("no valid positions to normalize over")
    s = expit(scores[mask])
    out = np.zeros_like(scores)
    out[mask] = s / s.sum()
    return out


def attention_readout(weights, vectors):
    """Weighted sum of position vectors with plain arrays (analysis helper)."""
    return np.asarray(weights, dtype=np.float64) @ np.asarray(vectors, dtype=np.float64)


def bag_of_words(token_ids, vocab_size):
    """Token counts over the vocabulary; PAD never counts."""
    counts = np.zeros(vocab_size)
    np.add.at(counts, np.asarray(token_ids, dtype=int), 1.0)
    counts[PAD_ID] = 0.0
    return counts


class SequenceClassifier:
    """Embedding + LSTM encoder + optional cosine attention + softmax head."""

    kind = "sequence"

    def __init__(self, config: ModelConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        V, E, H, F, C = (config.vocab_size, config.embed_dim, config.hidden_dim,
                         config.fc_dim, config.num_classes)

        embed = rng.uniform(-0.05, 0.05, size=(V, E))
        embed[PAD_ID] = 0.0  # PAD embeds to the zero vector and stays frozen
        self.embedding = Parameter("embedding", embed)

        def gate(name, bias=0.0):
            W = Parameter(f"lstm_W{name}", glorot(rng, (H, E + H)))
            b = Parameter(f"lstm_b{name}", np.full(H, bias))
            return W, b

        self.Wi, self.bi = gate("i")
        self.Wf, self.bf = gate("f", bias=1.0)  # forget bias 1 stabilizes early training
        self.Wg, self.bg = gate("g")
        self.Wo, self.bo = gate("o")

        self.projection = None
        readout_dim = H
        if config.attention != "none":
            # cosine needs equal dims: project the summary into embedding space
            self.projection = Parameter("attn_projection", glorot(rng, (E, H)))
            readout_dim = E

        self.fc_W = Parameter("fc_W", glorot(rng, (F, readout_dim)))
        self.fc_b = Parameter("fc_b", np.zeros(F))
        self.out_W = Parameter("out_W", glorot(rng, (C, F)))
        self.out_b = Parameter("out_b", np.zeros(C))

    def parameters(self):
        params = [self.embedding,
                  self.Wi, self.bi, self.Wf, self.bf,
                  self.Wg, self.bg, self.Wo, self.bo]
        if self.projection is not None:
            params.append(self.projection)
        params.extend([self.fc_W, self.fc_b, self.out_W, self.out_b])
        return params

    # ----- encoding -----

    def embed_sequence(self, token_ids, tape=None):
        """One embedding row per token; PAD positions are detached zeros."""
        V = self.config.vocab_size
        vectors = []
        for tid in token_ids:
            if not 0 <= tid < V:
                raise IndexError(f"token id {tid} out of range for vocabulary of {V}")
            if tid == PAD_ID:
                vectors.append(Node(np.zeros(self.config.embed_dim)))
            else:
                vectors.append(numerics.pick_row(self.embedding, tid, tape))
        return vectors

    def lstm_step(self, v, h_prev, c_prev, tape=None):
        """Standard LSTM cell without peepholes."""
        z = numerics.concat(v, h_prev, tape)
        i = numerics.activate(numerics.affine(self.Wi, z, self.bi, tape), "sigmoid", tape)
        f = numerics.activate(numerics.affine(self.Wf, z, self.bf, tape), "sigmoid", tape)
        g = numerics.activate(numerics.affine(self.Wg, z, self.bg, tape), "tanh", tape)
        o = numerics.activate(numerics.affine(self.Wo, z, self.bo, tape), "sigmoid", tape)
        c = numerics.add(numerics.mul(f, c_prev, tape), numerics.mul(i, g, tape), tape)
        h = numerics.mul(o, numerics.activate(c, "tanh", tape), tape)
        return h, c

    def encode_sequence(self, token_ids, tape=None):
        """Run the LSTM over the valid positions; the summary is the last hidden state."""
        token_ids = list(token_ids)
        if not token_ids:
            raise ValueError("cannot encode an empty sequence")
        vectors = self.embed_sequence(token_ids, tape)
        mask = np.array([tid != PAD_ID for tid in token_ids])
        h = Node(np.zeros(self.config.hidden_dim))
        c = Node(np.zeros(self.config.hidden_dim))
        for t, v in enumerate(vectors):
            if mask[t]:
                h, c = self.lstm_step(v, h, c, tape)
        return EncoderOutput(vectors, h, mask)

    # ----- attention -----

    def attention_scores(self, summary, vectors, tape=None):
        """Cosine of the projected summary against each given embedding."""
        query = numerics.matvec(self.projection, summary, tape)
        return [numerics.cosine(query, v, tape) for v in vectors]

    def classify(self, features, tape=None):
        """relu fully-connected layer, then affine to class probabilities."""
        hidden = numerics.activate(
            numerics.affine(self.fc_W, features, self.fc_b, tape), "relu", tape)
        logits = numerics.affine(self.out_W, hidden, self.out_b, tape)
        return numerics.softmax(logits, tape)

    # ----- full pass -----

    def forward(self, token_ids, tape=None):
        """Class probabilities plus an AttentionTrace when attention is active."""
        mode = self.config.attention
        enc = self.encode_sequence(token_ids, tape)
        if mode == "none":
            return self.classify(enc.final, tape), None

        valid = np.flatnonzero(enc.mask)
        if valid.size == 0:
            raise ValueError("no valid positions to attend over")
        vectors = [enc.vectors[i] for i in valid]
        scores = self.attention_scores(enc.final, vectors, tape)
        packed = numerics.stack_scalars(scores, tape)
        if mode == "sharpening":
            alpha = numerics.softmax(packed, tape)
        else:
            alpha = numerics.normalize_sum(
                numerics.activate(packed, "sigmoid", tape), tape)
        readout = numerics.weighted_sum(alpha, vectors, tape)
        probs = self.classify(readout, tape)

        full_scores = np.zeros(len(enc.mask))
        full_weights = np.zeros(len(enc.mask))
        full_scores[valid] = packed.value
        full_weights[valid] = alpha.value
        return probs, AttentionTrace(full_scores, full_weights, mode)

    def forward_ids(self, token_ids, tape=None):
        return self.forward(token_ids, tape)[0]


class BagOfWordsClassifier:
    """MLP over bag-of-words counts: stacked relu layers, then softmax."""

    kind = "mlp"

    def __init__(self, vocab_size, num_classes, hidden_dim=512, num_layers=3, seed=0):
        if min(vocab_size, num_classes, hidden_dim, num_layers) < 1:
            raise ValueError("all MLP dimensions must be at least 1")
        self.vocab_size = vocab_size
        self.num_classes = num_classes
        self.hidden_dim = hidden_dim
        self.num_layers = num_layers
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.layers = []
        fan_in = vocab_size
        for i in range(num_layers):
            self.layers.append((
                Parameter(f"mlp_W{i}", glorot(rng, (hidden_dim, fan_in))),
                Parameter(f"mlp_b{i}", np.zeros(hidden_dim)),
            ))
            fan_in = hidden_dim
        self.out_W = Parameter("out_W", glorot(rng, (num_classes, fan_in)))
        self.out_b = Parameter("out_b", np.zeros(num_classes))

    def parameters(self):
        params = []
        for W, b in self.layers:
            params.extend([W, b])
        params.extend([self.out_W, self.out_b])
        return params

    def forward(self, counts, tape=None):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.shape != (self.vocab_size,):
            raise ShapeError(
                f"expected counts of shape ({self.vocab_size},), got {counts.shape}")
        x = Node(counts)
        for W, b in self.layers:
            x = numerics.activate(numerics.affine(W, x, b, tape), "relu", tape)
        logits = numerics.affine(self.out_W, x, self.out_b, tape)
        return numerics.softmax(logits, tape)

    def forward_ids(self, token_ids, tape=None):
        return self.forward(bag_of_words(token_ids, self.vocab_size), tape)
