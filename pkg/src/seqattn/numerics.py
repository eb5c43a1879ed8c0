"""Float64 array primitives and a minimal reverse-mode tape.

The classifier is assembled from the differentiable primitives in this
module.  Each primitive computes its forward value with numpy and, when
handed a Tape, records one closure implementing its analytic backward rule.
The backward pass replays the closures in exact reverse of forward order.

All arithmetic stays in double precision: the gradient acceptance gate
(central differences at h = 1e-5, relative error < 1e-4) is only meaningful
in float64.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

# Guard in the cosine denominator: zero vectors score 0 instead of NaN.
COSINE_EPSILON = 1e-8

ACTIVATION_KINDS = ("sigmoid", "tanh", "relu")


class ShapeError(ValueError):
    """Operand shapes do not line up."""


class DeterminismError(RuntimeError):
    """The gradient checker saw two different baseline evaluations."""


def as_array(x):
    """Coerce to a float64 ndarray (the only dtype used anywhere)."""
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# value-level math (no gradient bookkeeping)


def apply_activation(x, kind):
    """Elementwise sigmoid / tanh / relu on a raw array."""
    x = as_array(x)
    if kind == "sigmoid":
        return expit(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATION_KINDS}")


def softmax_stable(e):
    """exp(e_i - max e) / sum_j exp(e_j - max e); safe for huge scores."""
    e = as_array(e)
    if e.size == 0:
        raise ValueError("softmax over an empty score vector")
    w = np.exp(e - e.max())
    return w / w.sum()


def cosine_similarity(a, b):
    """a.b / (|a||b| + eps); zero vectors score 0 through the eps guard."""
    a = as_array(a)
    b = as_array(b)
    if a.shape != b.shape:
        raise ShapeError(f"cosine similarity of shapes {a.shape} and {b.shape}")
    denom = np.linalg.norm(a) * np.linalg.norm(b) + COSINE_EPSILON
    return float(a @ b / denom)


# ---------------------------------------------------------------------------
# reverse-mode tape


class Node:
    """A value in the computation graph; grad is allocated on first use."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = as_array(value)
        self.grad = None

    def ensure_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        return self.grad


class Parameter(Node):
    """A named trainable array with gradient and rmsprop cache."""

    __slots__ = ("name", "rms_cache")

    def __init__(self, name, value):
        super().__init__(value)
        self.name = name
        self.grad = np.zeros_like(self.value)
        self.rms_cache = np.zeros_like(self.value)


class Tape:
    """Ordered record of executed primitives.

    backward() visits the recorded steps in exact reverse of forward order.
    A tape belongs to a single forward/backward pass and is then discarded.
    """

    def __init__(self):
        self._steps = []

    def record(self, backward_fn):
        self._steps.append(backward_fn)

    def __len__(self):
        return len(self._steps)

    def backward(self, root, seed=1.0):
        """Seed d(root)/d(root) = seed and propagate to every input."""
        root.ensure_grad()
        root.grad += seed
        for fn in reversed(self._steps):
            fn()


# ---------------------------------------------------------------------------
# differentiable primitives (Node in, Node out)


def affine(W, x, b, tape=None):
    """W @ x + b for a matrix W and vectors x, b."""
    Wv, xv, bv = W.value, x.value, b.value
    if Wv.ndim != 2 or xv.ndim != 1 or bv.ndim != 1 \
            or Wv.shape[1] != xv.shape[0] or Wv.shape[0] != bv.shape[0]:
        raise ShapeError(f"affine with W {Wv.shape}, x {xv.shape}, b {bv.shape}")
    out = Node(Wv @ xv + bv)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            W.ensure_grad()
            W.grad += np.outer(g, xv)
            x.ensure_grad()
            x.grad += Wv.T @ g
            b.ensure_grad()
            b.grad += g
        tape.record(backward)
    return out


def matvec(W, x, tape=None):
    """W @ x without a bias term."""
    Wv, xv = W.value, x.value
    if Wv.ndim != 2 or xv.ndim != 1 or Wv.shape[1] != xv.shape[0]:
        raise ShapeError(f"matvec with W {Wv.shape}, x {xv.shape}")
    out = Node(Wv @ xv)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            W.ensure_grad()
            W.grad += np.outer(g, xv)
            x.ensure_grad()
            x.grad += Wv.T @ g
        tape.record(backward)
    return out


def activate(x, kind, tape=None):
    """Elementwise activation; derivative is computed from the output."""
    out = Node(apply_activation(x.value, kind))
    if tape is not None:
        y = out.value

        def backward():
            g = out.grad
            if g is None:
                return
            if kind == "sigmoid":
                local = y * (1.0 - y)
            elif kind == "tanh":
                local = 1.0 - y * y
            else:  # relu
                local = (y > 0).astype(np.float64)
            x.ensure_grad()
            x.grad += g * local
        tape.record(backward)
    return out


def add(a, b, tape=None):
    if a.value.shape != b.value.shape:
        raise ShapeError(f"add of shapes {a.value.shape} and {b.value.shape}")
    out = Node(a.value + b.value)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            a.ensure_grad()
            a.grad += g
            b.ensure_grad()
            b.grad += g
        tape.record(backward)
    return out


def mul(a, b, tape=None):
    """Elementwise (Hadamard) product."""
    if a.value.shape != b.value.shape:
        raise ShapeError(f"mul of shapes {a.value.shape} and {b.value.shape}")
    out = Node(a.value * b.value)
    if tape is not None:
        av, bv = a.value, b.value

        def backward():
            g = out.grad
            if g is None:
                return
            a.ensure_grad()
            a.grad += g * bv
            b.ensure_grad()
            b.grad += g * av
        tape.record(backward)
    return out


def concat(a, b, tape=None):
    """Concatenate two vectors."""
    if a.value.ndim != 1 or b.value.ndim != 1:
        raise ShapeError(f"concat of shapes {a.value.shape} and {b.value.shape}")
    out = Node(np.concatenate([a.value, b.value]))
    if tape is not None:
        split = a.value.shape[0]

        def backward():
            g = out.grad
            if g is None:
                return
            a.ensure_grad()
            a.grad += g[:split]
            b.ensure_grad()
            b.grad += g[split:]
        tape.record(backward)
    return out


def stack_scalars(items, tape=None):
    """Pack scalar nodes into one vector node."""
    if not items:
        raise ValueError("cannot stack an empty list of scalars")
    out = Node(np.array([float(n.value) for n in items]))
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            for i, n in enumerate(items):
                n.ensure_grad()
                n.grad += g[i]
        tape.record(backward)
    return out


def softmax(e, tape=None):
    """Shift-stable softmax over a vector node."""
    out = Node(softmax_stable(e.value))
    if tape is not None:
        y = out.value

        def backward():
            g = out.grad
            if g is None:
                return
            e.ensure_grad()
            e.grad += y * (g - np.dot(g, y))
        tape.record(backward)
    return out


def normalize_sum(x, tape=None):
    """x / sum(x) for a strictly positive vector (sigmoid outputs in practice)."""
    s = float(x.value.sum())
    if s <= 0.0:
        raise ValueError("normalize_sum needs a positive total")
    out = Node(x.value / s)
    if tape is not None:
        y = out.value

        def backward():
            g = out.grad
            if g is None:
                return
            x.ensure_grad()
            x.grad += (g - np.dot(g, y)) / s
        tape.record(backward)
    return out


def cosine(a, b, tape=None):
    """Cosine similarity as a scalar node, eps-guarded like cosine_similarity."""
    av, bv = a.value, b.value
    if av.shape != bv.shape:
        raise ShapeError(f"cosine similarity of shapes {av.shape} and {bv.shape}")
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    denom = na * nb + COSINE_EPSILON
    dot = float(av @ bv)
    out = Node(dot / denom)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            # d/da [s / (|a||b|+eps)]; the |a|-direction term vanishes at a = 0
            a.ensure_grad()
            b.ensure_grad()
            a.grad += float(g) * (bv / denom
                                  - (dot * nb / denom ** 2) * (av / na if na > 0 else 0.0))
            b.grad += float(g) * (av / denom
                                  - (dot * na / denom ** 2) * (bv / nb if nb > 0 else 0.0))
        tape.record(backward)
    return out


def weighted_sum(weights, vectors, tape=None):
    """sum_i weights[i] * vectors[i] for a vector node and a list of vector nodes."""
    if weights.value.shape[0] != len(vectors):
        raise ShapeError(f"{weights.value.shape[0]} weights for {len(vectors)} vectors")
    V = np.stack([v.value for v in vectors])
    w = weights.value
    out = Node(w @ V)
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            weights.ensure_grad()
            weights.grad += V @ g
            for i, v in enumerate(vectors):
                v.ensure_grad()
                v.grad += w[i] * g
        tape.record(backward)
    return out


def pick_row(M, row, tape=None):
    """Select one row of a matrix node; the gradient scatters back to that row."""
    out = Node(M.value[row].copy())
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            M.ensure_grad()
            M.grad[row] += g
        tape.record(backward)
    return out


def sum_all(x, tape=None):
    """Sum of all entries, as a scalar node."""
    out = Node(x.value.sum())
    if tape is not None:
        def backward():
            g = out.grad
            if g is None:
                return
            x.ensure_grad()
            x.grad += g
        tape.record(backward)
    return out


# ---------------------------------------------------------------------------
# gradient verification


def finite_difference_check(f, params, h=1e-5):
    """Compare analytic gradients of f against central finite differences.

    f(tape) must rebuild its forward pass from the current parameter values
    and return a scalar Node, recording on the tape when one is given.  The
    return value is the worst relative error
    |g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|, 1e-8) over
    every entry of every parameter in `params`.
    """
    if h <= 0:
        raise ValueError("finite-difference step h must be positive")
    base1 = float(f(None).value)
    base2 = float(f(None).value)
    if base1 != base2:
        raise DeterminismError(
            f"f is not deterministic: baseline evaluations {base1!r} != {base2!r}")

    for p in params:
        p.grad = np.zeros_like(p.value)
    tape = Tape()
    tape.backward(f(tape))

    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        gflat = p.grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f(None).value)
            flat[i] = orig - h
            fm = float(f(None).value)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * h)
            analytic = gflat[i]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            if rel > worst:
                worst = rel
    return worst
