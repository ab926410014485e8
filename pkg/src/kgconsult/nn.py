"""Dense 3-layer network, losses, gradients and a finite-difference checker.

Everything is float64 numpy. The same Mlp3 record backs the diagnosis,
decision and question-policy models; only shapes and the output head differ.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SOFTMAX = "softmax"
SIGMOID = "sigmoid"

EPS = 1e-12


@dataclass
class Mlp3:
    """Fully connected d_in -> d_h -> d_out net with a ReLU hidden layer."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    head: str

    def __post_init__(self):
        if self.head not in (SOFTMAX, SIGMOID):
            raise ValueError(f"unknown output head {self.head!r}")
        d_in, d_h = self.W1.shape
        if self.b1.shape != (d_h,):
            raise ValueError("b1 shape does not match W1")
        if self.W2.shape[0] != d_h:
            raise ValueError("W2 input dim does not match hidden dim")
        if self.b2.shape != (self.W2.shape[1],):
            raise ValueError("b2 shape does not match W2")
        for arr in (self.W1, self.b1, self.W2, self.b2):
            if not np.isfinite(arr).all():
                raise ValueError("non-finite parameter")

    @property
    def d_in(self) -> int:
        return self.W1.shape[0]

    @property
    def d_out(self) -> int:
        return self.W2.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def copy(self) -> "Mlp3":
        return Mlp3(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(), self.head)


@dataclass
class Mlp3Cache:
    x: np.ndarray
    z1: np.ndarray
    logits: np.ndarray


@dataclass
class Mlp3Grads:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]


def init_mlp3(d_in: int, d_h: int, d_out: int, head: str, rng: np.random.Generator) -> Mlp3:
    """Glorot-uniform weights, zero biases."""
    def glorot(fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    return Mlp3(
        W1=glorot(d_in, d_h),
        b1=np.zeros(d_h),
        W2=glorot(d_h, d_out),
        b2=np.zeros(d_out),
        head=head,
    )


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax along the last axis (max subtraction)."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape[-1] == 0:
        raise ValueError("softmax of an empty vector")
    if not np.isfinite(logits).all():
        raise ValueError("non-finite logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def forward(net: Mlp3, x: np.ndarray) -> tuple[np.ndarray, Mlp3Cache]:
    """Run the net on x, which may be a single vector or a (batch, d_in) matrix.

    Returns the head output and the cache needed by backward().
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.d_in:
        raise ValueError(f"input dim {x.shape[-1]} does not match net d_in {net.d_in}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite input")
    z1 = x @ net.W1 + net.b1
    h1 = relu(z1)
    logits = h1 @ net.W2 + net.b2
    if net.head == SOFTMAX:
        out = softmax(logits)
    else:
        out = sigmoid(logits)
    return out, Mlp3Cache(x=x, z1=z1, logits=logits)


def backward(net: Mlp3, cache: Mlp3Cache, d_logits: np.ndarray) -> Mlp3Grads:
    """Backpropagate the gradient taken at the pre-head logits.

    d_logits must have the same shape as cache.logits; for a batched cache
    the returned gradients are summed over the batch, so callers scale
    d_logits (e.g. by 1/B) to get mean-loss gradients.
    """
    d_logits = np.asarray(d_logits, dtype=np.float64)
    if d_logits.shape != cache.logits.shape:
        raise ValueError("d_logits shape does not match the cached forward pass")
    h1 = relu(cache.z1)
    if d_logits.ndim == 1:
        dW2 = np.outer(h1, d_logits)
        db2 = d_logits.copy()
        dh1 = net.W2 @ d_logits
        dz1 = dh1 * (cache.z1 > 0)
        dW1 = np.outer(cache.x, dz1)
        db1 = dz1
    else:
        dW2 = h1.T @ d_logits
        db2 = d_logits.sum(axis=0)
        dh1 = d_logits @ net.W2.T
        dz1 = dh1 * (cache.z1 > 0)
        dW1 = cache.x.T @ dz1
        db1 = dz1.sum(axis=0)
    return Mlp3Grads(dW1, db1, dW2, db2)


def input_gradient(net: Mlp3, cache: Mlp3Cache, d_logits: np.ndarray) -> np.ndarray:
    """Gradient of the loss w.r.t. the input vector(s); used for fine-tuning embeddings."""
    d_logits = np.asarray(d_logits, dtype=np.float64)
    dh1 = d_logits @ net.W2.T if d_logits.ndim > 1 else net.W2 @ d_logits
    dz1 = dh1 * (cache.z1 > 0)
    return dz1 @ net.W1.T if dz1.ndim > 1 else net.W1 @ dz1


def cross_entropy_softmax(probs: np.ndarray, target: int) -> float:
    """-log p[target] for a softmax output, clamped away from log(0)."""
    probs = np.asarray(probs, dtype=np.float64)
    if not (0 <= target < probs.shape[-1]):
        raise ValueError(f"target {target} out of range for {probs.shape[-1]} classes")
    return float(-np.log(max(probs[target], EPS)))


def binary_cross_entropy(p: float, y: int) -> float:
    """Logistic loss, -log p if y=1 else -log (1-p)."""
    if y not in (0, 1):
        raise ValueError("y must be 0 or 1")
    p = min(max(float(p), EPS), 1.0 - EPS)
    return -np.log(p) if y == 1 else -np.log(1.0 - p)


def sgd_step(params, grads, lr: float):
    """p <- p - lr * g elementwise. Accepts arrays, lists of arrays, or Mlp3 + Mlp3Grads.

    Arrays are updated in place and returned.
    """
    if lr < 0:
        raise ValueError("lr must be >= 0")
    if isinstance(params, Mlp3):
        pairs = zip(params.params(), grads.params())
    elif isinstance(params, np.ndarray):
        pairs = [(params, grads)]
    else:
        pairs = zip(params, grads)
    for p, g in pairs:
        g = np.asarray(g, dtype=np.float64)
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
        p -= lr * g
    return params


def finite_diff_check(
    f, params: list[np.ndarray], analytic: list[np.ndarray], h: float = 1e-5
) -> float:
    """Max relative error between central finite differences of f and analytic grads.

    Relative error per coordinate is |fd - an| / max(1, |fd|, |an|). f is
    called with no arguments and must depend on params through aliasing;
    a repeated evaluation guards against nondeterministic f.
    """
    if abs(f() - f()) > 0:
        raise ValueError("f is not deterministic")
    worst = 0.0
    for p, g in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_g = np.asarray(g).reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = f()
            flat_p[i] = orig - h
            down = f()
            flat_p[i] = orig
            fd = (up - down) / (2.0 * h)
            err = abs(fd - flat_g[i]) / max(1.0, abs(fd), abs(flat_g[i]))
            worst = max(worst, err)
    return worst
