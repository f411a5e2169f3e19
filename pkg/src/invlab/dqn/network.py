"""A small fully-connected Q-network in plain numpy, with Adam and clipping."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from invlab.errors import NumericError

FORMAT_VERSION = 1


@dataclass
class Network:
    """ReLU hidden layers and a linear output layer.

    ``weights[i]`` has shape ``(fan_in, fan_out)``, so a batch of states
    ``X`` of shape ``(n, state_size)`` maps to ``X @ W + b``.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout_rate: float = 0.0

    @property
    def state_size(self) -> int:
        return self.weights[0].shape[0]

    @property
    def action_size(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [w.shape for w in self.weights]

    def parameter_count(self) -> int:
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    def params(self) -> list[np.ndarray]:
        """Flat parameter list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Network":
        return Network([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.dropout_rate)


def build_network(state_size: int, action_size: int, hidden_sizes=(64, 64), dropout_rate: float = 0.0,
                  seed=0) -> Network:
    """He-uniform weights (limit sqrt(6 / fan_in)) and zero biases."""
    sizes = [state_size, *hidden_sizes, action_size]
    if any(int(s) < 1 for s in sizes):
        raise ValueError(f"every layer needs at least one unit, got {sizes}")
    if not 0.0 <= dropout_rate < 1.0:
        raise ValueError("dropout_rate must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Network(weights, biases, float(dropout_rate))


def _as_batch(net: Network, states) -> tuple[np.ndarray, bool]:
    X = np.asarray(states, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != net.state_size:
        raise ValueError(f"expected states of width {net.state_size}, got shape {np.shape(states)}")
    return X, single


def _forward_cache(net: Network, X: np.ndarray, training: bool, rng):
    acts = [X]
    masks = []
    h = X
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        if i == last:
            return z, acts, masks
        h = np.maximum(z, 0.0)
        if training and net.dropout_rate > 0:
            keep = 1.0 - net.dropout_rate
            mask = (rng.random(h.shape) < keep) / keep
            h = h * mask
        else:
            mask = None
        masks.append(mask)
        acts.append(h)
    raise AssertionError("unreachable")


def forward(net: Network, states, training: bool = False, rng=None) -> np.ndarray:
    """Q-values for one state (1-D result) or a batch of states.

    In training mode hidden activations pass through inverted dropout
    drawn from ``rng`` (a Generator or seed).
    """
    X, single = _as_batch(net, states)
    if training and net.dropout_rate > 0:
        rng = np.random.default_rng(rng)
    q, _, _ = _forward_cache(net, X, training, rng)
    return q[0] if single else q


def loss_and_grad(net: Network, states, targets, training: bool = False, rng=None):
    """Mean squared error over all batch entries and actions, and its
    gradient as a list aligned with :meth:`Network.params`."""
    X, _ = _as_batch(net, states)
    Y = np.atleast_2d(np.asarray(targets, dtype=float))
    if Y.shape != (X.shape[0], net.action_size):
        raise ValueError(f"targets must have shape {(X.shape[0], net.action_size)}, got {Y.shape}")
    if training and net.dropout_rate > 0:
        rng = np.random.default_rng(rng)
    q, acts, masks = _forward_cache(net, X, training, rng)
    diff = q - Y
    loss = float(np.mean(diff ** 2))

    grads = [None] * (2 * len(net.weights))
    delta = 2.0 * diff / diff.size
    for i in range(len(net.weights) - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i == 0:
            break
        delta = delta @ net.weights[i].T
        if masks[i - 1] is not None:
            delta = delta * masks[i - 1]
        delta = delta * (acts[i] > 0)
    return loss, grads


def clip_by_global_norm(grads: list[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    """Scale all gradients together so their joint L2 norm is at most ``max_norm``.

    Returns the clipped gradients and the norm before clipping.
    """
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if not np.isfinite(norm):
        raise NumericError("gradient norm is not finite")
    if norm > max_norm:
        scale = max_norm / norm
        grads = [g * scale for g in grads]
    return grads, norm


class Adam:
    def __init__(self, params: list[np.ndarray], learning_rate: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Update ``params`` in place."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.learning_rate * np.sqrt(1.0 - b2 ** self.t) / (1.0 - b1 ** self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= lr_t * m / (np.sqrt(v) + self.eps)


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------


def network_to_dict(net: Network) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dropout_rate": net.dropout_rate,
        "layers": [
            {"shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
    }


def network_from_dict(data: dict, expected_shapes=None) -> Network:
    if not isinstance(data, dict) or data.get("format_version") != FORMAT_VERSION:
        raise ValueError("not a version-1 weights document")
    try:
        weights, biases = [], []
        for layer in data["layers"]:
            rows, cols = (int(s) for s in layer["shape"])
            w = np.asarray(layer["weights"], dtype=float)
            b = np.asarray(layer["bias"], dtype=float)
            if w.size != rows * cols or b.shape != (cols,):
                raise ValueError(f"layer values do not match declared shape {(rows, cols)}")
            weights.append(w.reshape(rows, cols))
            biases.append(b)
        dropout = float(data.get("dropout_rate", 0.0))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed weights document: {exc}") from exc
    if not weights:
        raise ValueError("weights document has no layers")
    for a, b in zip(weights[:-1], weights[1:]):
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"layer shapes {a.shape} and {b.shape} do not chain")
    net = Network(weights, biases, dropout)
    if expected_shapes is not None and [tuple(s) for s in expected_shapes] != net.shapes:
        raise ValueError(f"weights have shapes {net.shapes}, expected {list(expected_shapes)}")
    return net


def save_weights(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net)), encoding="utf-8")


def load_weights(path: str | Path, expected_shapes=None) -> Network:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed weights file {path}: {exc}") from exc
    return network_from_dict(data, expected_shapes)
