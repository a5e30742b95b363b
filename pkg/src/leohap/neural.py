"""Fully connected Q-network with tanh hidden layers, backprop and Adam.

Weights are stored as ``(fan_out, fan_in)`` matrices so a layer computes
``W @ h + b``; batches are handled as row-stacked inputs ``(n, fan_in)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

FORMAT_VERSION = 1


@dataclass
class MlpParams:
    layer_dims: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        dims = list(self.layer_dims)
        if len(dims) < 2:
            raise ValueError(f"need at least input and output dims, got {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("one weight matrix and bias vector per layer required")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[k + 1], dims[k]) or b.shape != (dims[k + 1],):
                raise ValueError(
                    f"layer {k}: expected W{(dims[k + 1], dims[k])} b({dims[k + 1]},), "
                    f"got W{w.shape} b{b.shape}"
                )
        self.layer_dims = [int(d) for d in dims]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def arrays(self) -> List[np.ndarray]:
        """Weights and biases interleaved: ``[W0, b0, W1, b1, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @classmethod
    def from_arrays(cls, layer_dims, arrays: Sequence[np.ndarray]) -> "MlpParams":
        return cls(list(layer_dims), list(arrays[0::2]), list(arrays[1::2]))

    def copy(self) -> "MlpParams":
        return MlpParams.from_arrays(self.layer_dims, [a.copy() for a in self.arrays()])

    def num_params(self) -> int:
        return sum(a.size for a in self.arrays())


def init_params(dims: Sequence[int], seed: int) -> MlpParams:
    """Xavier-uniform weights, zero biases."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or min(dims) < 1:
        raise ValueError(f"invalid layer dims {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(dims, weights, biases)


def _check_input(p: MlpParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.input_dim:
        raise ValueError(f"input has dim {x.shape[-1]}, network expects {p.input_dim}")
    return x


def _forward_cache(p: MlpParams, x: np.ndarray) -> List[np.ndarray]:
    acts = [x]
    h = x
    last = len(p.weights) - 1
    for k, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w.T + b
        h = z if k == last else np.tanh(z)
        acts.append(h)
    return acts


def forward(p: MlpParams, x) -> np.ndarray:
    """Q-values for one state ``(d,)`` or a batch ``(n, d)``."""
    x = _check_input(p, x)
    if x.ndim == 1:
        return _forward_cache(p, x[None, :])[-1][0]
    return _forward_cache(p, x)[-1]


def loss_and_grad(
    p: MlpParams, states, actions, targets, reduction: str = "sum"
) -> Tuple[float, List[np.ndarray]]:
    """Squared TD error on the taken actions and its exact gradient.

    Parameters
    ----------
    states : (n, d) array
    actions : (n,) int array
        Only these output units receive an error signal.
    targets : (n,) array
        Precomputed ``y`` values.
    reduction : {"sum", "mean"}

    Returns
    -------
    loss : float
    grads : list of arrays, in :meth:`MlpParams.arrays` order
    """
    states = _check_input(p, np.atleast_2d(states))
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    n = states.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    if actions.shape != (n,) or targets.shape != (n,):
        raise ValueError("states, actions and targets must have matching batch size")
    if reduction not in ("sum", "mean"):
        raise ValueError(f"unknown reduction {reduction!r}")

    acts = _forward_cache(p, states)
    rows = np.arange(n)
    resid = targets - acts[-1][rows, actions]
    scale = 1.0 / n if reduction == "mean" else 1.0
    loss = float(scale * np.dot(resid, resid))

    delta = np.zeros_like(acts[-1])
    delta[rows, actions] = -2.0 * scale * resid
    grads: List[np.ndarray] = [None] * (2 * len(p.weights))
    for k in range(len(p.weights) - 1, -1, -1):
        grads[2 * k] = delta.T @ acts[k]
        grads[2 * k + 1] = delta.sum(axis=0)
        if k:
            delta = (delta @ p.weights[k]) * (1.0 - acts[k] ** 2)
    return loss, grads


def td_targets(rewards, next_states, dones, target_p: MlpParams, gamma: float) -> np.ndarray:
    """``r + gamma * max_a Q(s', a; target)``, or just ``r`` at episode end."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    rewards = np.asarray(rewards, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    q_next = forward(target_p, np.atleast_2d(next_states)).max(axis=1)
    return rewards + gamma * np.where(dones, 0.0, q_next)


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, p: MlpParams, **kw) -> "AdamState":
        arrs = p.arrays()
        return cls([np.zeros_like(a) for a in arrs], [np.zeros_like(a) for a in arrs], **kw)


def adam_step(
    p: MlpParams, grads: Sequence[np.ndarray], st: AdamState, clip_norm: Optional[float] = None
) -> Tuple[MlpParams, AdamState]:
    arrs = p.arrays()
    if len(grads) != len(arrs) or any(g.shape != a.shape for g, a in zip(grads, arrs)):
        raise ValueError("gradient shapes do not match parameters")
    if clip_norm is not None:
        total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
        if total > clip_norm:
            grads = [g * (clip_norm / total) for g in grads]
    t = st.t + 1
    m = [st.beta1 * mi + (1 - st.beta1) * g for mi, g in zip(st.m, grads)]
    v = [st.beta2 * vi + (1 - st.beta2) * g * g for vi, g in zip(st.v, grads)]
    c1 = 1 - st.beta1**t
    c2 = 1 - st.beta2**t
    new = [a - st.lr * (mi / c1) / (np.sqrt(vi / c2) + st.eps) for a, mi, vi in zip(arrs, m, v)]
    st2 = AdamState(m, v, t, st.lr, st.beta1, st.beta2, st.eps)
    return MlpParams.from_arrays(p.layer_dims, new), st2


# -- checkpoints ------------------------------------------------------------


def params_to_dict(p: MlpParams) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "layer_dims": list(p.layer_dims),
        "layers": [
            {"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(p.weights, p.biases)
        ],
    }


def params_from_dict(doc: dict) -> MlpParams:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format_version {doc.get('format_version')!r}")
    dims = [int(d) for d in doc["layer_dims"]]
    layers = doc["layers"]
    weights = [np.array(layer["weight"], dtype=float).reshape(dims[k + 1], dims[k])
               for k, layer in enumerate(layers)]
    biases = [np.array(layer["bias"], dtype=float).reshape(dims[k + 1])
              for k, layer in enumerate(layers)]
    return MlpParams(dims, weights, biases)


def save_checkpoint(path, p: MlpParams, extra: Optional[dict] = None) -> None:
    """Write ``p`` as JSON; floats use ``repr`` so loading is bit-exact."""
    doc = params_to_dict(p)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc) + "\n")


def load_checkpoint(path) -> Tuple[MlpParams, dict]:
    """Returns the params and the whole document (for optimizer state etc.)."""
    try:
        doc = json.loads(Path(path).read_text())
        return params_from_dict(doc), doc
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"corrupt checkpoint {path}: {exc}") from exc
