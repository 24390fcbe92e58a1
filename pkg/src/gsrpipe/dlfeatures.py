"""From-scratch 1-D convolutional network for learned window features.

The network is a small stack of conv -> relu -> maxpool stages followed by
a single fully-connected layer producing 2 logits.  The learned feature
vector of a window is the flattened output of the last pooling stage, i.e.
the input to the fully-connected layer.  Everything (forward, backward,
SGD) is plain numpy, seeded and deterministic.

Trained parameters serialize to an .npz archive with a JSON architecture
header under the ``meta`` key and one array per tensor
(``conv_weight_<i>``, ``conv_bias_<i>``, ``fc_weight``, ``fc_bias``).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class ConvStage:
    """One conv(channels, kernel, stride 1, no padding) -> relu -> maxpool(pool)."""

    channels: int
    kernel: int
    pool: int

    def __post_init__(self):
        if self.channels < 1 or self.kernel < 1 or self.pool < 1:
            raise ValueError("channels, kernel, and pool must all be >= 1")


@dataclass(frozen=True)
class CnnArchitecture:
    """Stage list plus the fixed 2-logit head."""

    stages: tuple[ConvStage, ...] = (ConvStage(16, 8, 4), ConvStage(32, 8, 4))
    n_classes: int = 2

    def __post_init__(self):
        if not self.stages:
            raise ValueError("architecture needs at least one conv stage")
        if self.n_classes != 2:
            raise ValueError("the head is binary: n_classes must be 2")

    def stage_output_lengths(self, input_length: int) -> list[int]:
        """Post-pool length after each stage; raises naming the failing layer."""
        lengths = []
        length = input_length
        for i, stage in enumerate(self.stages, start=1):
            conv_len = length - stage.kernel + 1
            if conv_len < 1:
                raise ValueError(
                    f"conv {i}: kernel {stage.kernel} does not fit input of length {length}"
                )
            pooled = conv_len // stage.pool
            if pooled < 1:
                raise ValueError(
                    f"maxpool {i}: width {stage.pool} collapses length {conv_len} to 0"
                )
            lengths.append(pooled)
            length = pooled
        return lengths

    def feature_dim(self, input_length: int) -> int:
        """Flattened size of the last subsampling layer's output."""
        lengths = self.stage_output_lengths(input_length)
        return self.stages[-1].channels * lengths[-1]


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")


@dataclass
class CnnParameters:
    """All tensors of one network instance, tied to an input length."""

    arch: CnnArchitecture
    input_length: int
    conv_weights: list[np.ndarray]
    conv_biases: list[np.ndarray]
    fc_weight: np.ndarray
    fc_bias: np.ndarray
    seed: int

    @property
    def feature_dim(self) -> int:
        return self.arch.feature_dim(self.input_length)

    def copy(self) -> "CnnParameters":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class FeatureMatrix:
    """Feature rows with their aligned labels."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows vs {y.shape[0]} labels")
        if X.size and not np.isfinite(X).all():
            raise ValueError("feature matrix contains non-finite entries")


def init_cnn(
    arch: CnnArchitecture, input_length: int, seed: int = 0
) -> CnnParameters:
    """Seeded initialization: kernels scaled by 1/sqrt(fan-in), zero biases."""
    arch.stage_output_lengths(input_length)  # validates, names failing layer
    rng = np.random.default_rng(seed)
    conv_weights, conv_biases = [], []
    c_in = 1
    for stage in arch.stages:
        fan_in = c_in * stage.kernel
        conv_weights.append(
            rng.standard_normal((stage.channels, c_in, stage.kernel)) / np.sqrt(fan_in)
        )
        conv_biases.append(np.zeros(stage.channels))
        c_in = stage.channels
    d = arch.feature_dim(input_length)
    fc_weight = rng.standard_normal((arch.n_classes, d)) / np.sqrt(d)
    fc_bias = np.zeros(arch.n_classes)
    return CnnParameters(
        arch=arch,
        input_length=input_length,
        conv_weights=conv_weights,
        conv_biases=conv_biases,
        fc_weight=fc_weight,
        fc_bias=fc_bias,
        seed=seed,
    )


def _conv_valid(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Valid cross-correlation: (N, C_in, L) x (C_out, C_in, K) -> (N, C_out, L-K+1)."""
    windows = sliding_window_view(x, w.shape[2], axis=2)
    return np.einsum("oik,nitk->not", w, windows, optimize=True)


def _forward_batch(params: CnnParameters, X: np.ndarray):
    """Run the stack on a (N, L) batch, keeping caches for backprop."""
    act = X[:, None, :]
    caches = []
    for w, b, stage in zip(params.conv_weights, params.conv_biases, params.arch.stages):
        pre = _conv_valid(act, w) + b[None, :, None]
        relu = np.maximum(pre, 0.0)
        pooled_len = relu.shape[2] // stage.pool
        trimmed = relu[:, :, : pooled_len * stage.pool].reshape(
            relu.shape[0], relu.shape[1], pooled_len, stage.pool
        )
        argmax = trimmed.argmax(axis=3)
        pooled = np.take_along_axis(trimmed, argmax[..., None], axis=3)[..., 0]
        caches.append((act, pre, argmax, relu.shape[2]))
        act = pooled
    feats = act.reshape(act.shape[0], -1)
    logits = feats @ params.fc_weight.T + params.fc_bias
    return feats, logits, act.shape, caches


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(params: CnnParameters, window_samples: np.ndarray):
    """(feature_vector, logits, class probabilities) for one window."""
    x = np.asarray(window_samples, dtype=np.float64).ravel()
    if x.size != params.input_length:
        raise ValueError(f"window has {x.size} samples, network expects {params.input_length}")
    feats, logits, _, _ = _forward_batch(params, x[None, :])
    return feats[0], logits[0], _softmax(logits[0])


def extract_features(params: CnnParameters, windows: np.ndarray) -> np.ndarray:
    """One feature row per window; (0, feature_dim) for an empty batch."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 1:
        windows = windows[None, :]
    if windows.shape[0] == 0:
        return np.zeros((0, params.feature_dim))
    if windows.shape[1] != params.input_length:
        raise ValueError(
            f"windows have {windows.shape[1]} samples, network expects {params.input_length}"
        )
    feats, _, _, _ = _forward_batch(params, windows)
    return feats


def loss_and_gradients(params: CnnParameters, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and gradients for every tensor."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    feats, logits, act_shape, caches = _forward_batch(params, X)
    probs = _softmax(logits)
    loss = float(-np.log(probs[np.arange(n), y] + 1e-300).mean())

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grads = {
        "fc_weight": dlogits.T @ feats,
        "fc_bias": dlogits.sum(axis=0),
        "conv_weights": [None] * len(params.conv_weights),
        "conv_biases": [None] * len(params.conv_biases),
    }
    dact = (dlogits @ params.fc_weight).reshape(act_shape)
    for s in range(len(params.arch.stages) - 1, -1, -1):
        act_in, pre, argmax, relu_len = caches[s]
        stage = params.arch.stages[s]
        n_, c, pooled_len = dact.shape
        dtrim = np.zeros((n_, c, pooled_len, stage.pool))
        np.put_along_axis(dtrim, argmax[..., None], dact[..., None], axis=3)
        drelu = np.zeros((n_, c, relu_len))
        drelu[:, :, : pooled_len * stage.pool] = dtrim.reshape(n_, c, -1)
        dpre = drelu * (pre > 0.0)

        w = params.conv_weights[s]
        x_windows = sliding_window_view(act_in, w.shape[2], axis=2)
        grads["conv_weights"][s] = np.einsum("not,nitk->oik", dpre, x_windows, optimize=True)
        grads["conv_biases"][s] = dpre.sum(axis=(0, 2))

        if s > 0:
            k = w.shape[2]
            pad = np.pad(dpre, ((0, 0), (0, 0), (k - 1, k - 1)))
            g_windows = sliding_window_view(pad, k, axis=2)
            dact = np.einsum("oij,nosj->nis", w[:, :, ::-1], g_windows, optimize=True)
    return loss, grads


def train(
    params: CnnParameters,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainingConfig | None = None,
) -> tuple[CnnParameters, list[float]]:
    """Minibatch SGD on cross-entropy; returns (trained copy, per-epoch loss).

    The epoch loss is the sample-weighted mean of batch losses (each batch
    loss measured before its update), so every sample counts exactly once
    per epoch regardless of shuffling.
    """
    cfg = cfg or TrainingConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if np.unique(y).size < 2:
        raise ValueError("training needs at least one window per class")
    p = params.copy()
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    history: list[float] = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(p, X[batch], y[batch])
            epoch_loss += loss * batch.size
            lr = cfg.learning_rate
            p.fc_weight -= lr * grads["fc_weight"]
            p.fc_bias -= lr * grads["fc_bias"]
            for s in range(len(p.conv_weights)):
                p.conv_weights[s] -= lr * grads["conv_weights"][s]
                p.conv_biases[s] -= lr * grads["conv_biases"][s]
        history.append(epoch_loss / n)
    return p, history


def _param_arrays(params: CnnParameters) -> list[np.ndarray]:
    return [*params.conv_weights, *params.conv_biases, params.fc_weight, params.fc_bias]


def _grad_arrays(grads: dict) -> list[np.ndarray]:
    return [*grads["conv_weights"], *grads["conv_biases"], grads["fc_weight"], grads["fc_bias"]]


def save_params(path: str | Path, params: CnnParameters) -> None:
    """Write parameters as .npz with a JSON architecture header."""
    meta = json.dumps(
        {
            "stages": [[s.channels, s.kernel, s.pool] for s in params.arch.stages],
            "input_length": params.input_length,
            "seed": params.seed,
        }
    )
    tensors = {
        f"conv_weight_{i}": w for i, w in enumerate(params.conv_weights)
    } | {f"conv_bias_{i}": b for i, b in enumerate(params.conv_biases)}
    np.savez(
        path,
        meta=np.array(meta),
        fc_weight=params.fc_weight,
        fc_bias=params.fc_bias,
        **tensors,
    )


def load_params(path: str | Path) -> CnnParameters:
    """Inverse of :func:`save_params`."""
    with np.load(path, allow_pickle=False) as archive:
        meta = json.loads(str(archive["meta"][()]))
        arch = CnnArchitecture(
            stages=tuple(ConvStage(c, k, p) for c, k, p in meta["stages"])
        )
        return CnnParameters(
            arch=arch,
            input_length=int(meta["input_length"]),
            conv_weights=[archive[f"conv_weight_{i}"] for i in range(len(arch.stages))],
            conv_biases=[archive[f"conv_bias_{i}"] for i in range(len(arch.stages))],
            fc_weight=archive["fc_weight"],
            fc_bias=archive["fc_bias"],
            seed=int(meta["seed"]),
        )


def numerical_gradient_check(
    params: CnnParameters,
    window: np.ndarray,
    label: int,
    step: float = 1e-4,
    n_checks: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Checks a seeded random subset of at least ``n_checks`` coordinates (all
    of them when the network is smaller than that).
    """
    X = np.asarray(window, dtype=np.float64).reshape(1, -1)
    y = np.asarray([label], dtype=np.int64)
    _, grads = loss_and_gradients(params, X, y)
    analytic = _grad_arrays(grads)
    arrays = _param_arrays(params)

    sizes = np.array([a.size for a in arrays])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    if total <= n_checks:
        picks = np.arange(total)
    else:
        picks = rng.choice(total, size=n_checks, replace=False)

    probe = params.copy()
    probe_arrays = _param_arrays(probe)
    worst = 0.0
    for flat in picks:
        a_idx = int(np.searchsorted(offsets, flat, side="right") - 1)
        local = np.unravel_index(int(flat - offsets[a_idx]), arrays[a_idx].shape)
        original = probe_arrays[a_idx][local]
        probe_arrays[a_idx][local] = original + step
        loss_plus, _ = loss_and_gradients(probe, X, y)
        probe_arrays[a_idx][local] = original - step
        loss_minus, _ = loss_and_gradients(probe, X, y)
        probe_arrays[a_idx][local] = original
        fd = (loss_plus - loss_minus) / (2.0 * step)
        an = float(analytic[a_idx][local])
        scale = max(abs(fd), abs(an), 1e-6)
        worst = max(worst, abs(fd - an) / scale)
    return worst
