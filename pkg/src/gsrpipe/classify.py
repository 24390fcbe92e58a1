"""Four from-scratch binary classifiers and a deterministic k-fold harness.

kNN (standardized Euclidean majority vote), Gaussian naive Bayes, a random
forest over Gini-split trees, and a linear SVM trained by seeded
subgradient descent.  Every tie anywhere (neighbor votes, posterior argmax,
tree votes, zero SVM score) breaks toward the lowest class index, and all
randomness flows from explicit seeds so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dlfeatures import CnnArchitecture, TrainingConfig, extract_features, init_cnn, train

MODEL_KINDS = ("knn", "gaussian_nb", "random_forest", "linear_svm")


@dataclass(frozen=True)
class ModelSpec:
    """Classifier choice plus its hyperparameters.

    ``standardize = None`` resolves by kind: on for the distance/margin
    methods (knn, linear_svm), off for gaussian_nb and random_forest.
    """

    kind: str
    k: int = 1
    max_depth: int = 10
    n_trees: int = 100
    svm_lambda: float = 1e-4
    svm_epochs: int = 100
    standardize: bool | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if not 1 <= self.k <= 10:
            raise ValueError("k must be in 1..10")
        if not 1 <= self.max_depth <= 10:
            raise ValueError("max_depth must be in 1..10")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.svm_lambda <= 0:
            raise ValueError("svm_lambda must be positive")
        if self.svm_epochs < 1:
            raise ValueError("svm_epochs must be >= 1")

    @property
    def standardizes(self) -> bool:
        if self.standardize is not None:
            return self.standardize
        return self.kind in ("knn", "linear_svm")

    def params_dict(self) -> dict:
        """The hyperparameters relevant to this kind, for reports."""
        if self.kind == "knn":
            return {"k": self.k}
        if self.kind == "random_forest":
            return {"max_depth": self.max_depth, "n_trees": self.n_trees}
        if self.kind == "linear_svm":
            return {"lambda": self.svm_lambda, "epochs": self.svm_epochs}
        return {}

    def describe(self) -> str:
        params = ",".join(f"{k}={v}" for k, v in self.params_dict().items())
        return f"{self.kind}({params})" if params else self.kind


@dataclass(frozen=True)
class TrainedModel:
    """Fitted state plus the training-fold standardization statistics."""

    spec: ModelSpec
    n_features: int
    feature_mean: np.ndarray | None
    feature_scale: np.ndarray | None
    state: object

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.feature_mean is None:
            return X
        return (X - self.feature_mean) / self.feature_scale


@dataclass(frozen=True)
class CvReport:
    """Per-fold accuracies of one model on one feature set."""

    spec: ModelSpec
    feature_set: str
    fold_accuracies: tuple[float, ...]
    mean: float
    std: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "model": self.spec.kind,
            "params": self.spec.params_dict(),
            "feature_set": self.feature_set,
            "folds": list(self.fold_accuracies),
            "mean": self.mean,
            "std": self.std,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class _KnnState:
    X: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class _NbState:
    log_priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray


@dataclass(frozen=True)
class _SvmState:
    w: np.ndarray
    b: float


@dataclass
class _TreeNode:
    label: int = -1
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(frozen=True)
class _ForestState:
    trees: tuple[_TreeNode, ...]


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Independent child seeds derived deterministically from a master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def _validate_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (rows = samples)")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} rows vs {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return X, y


def fit(spec: ModelSpec, X: np.ndarray, y: np.ndarray, seed: int = 0) -> TrainedModel:
    """Train one classifier; standardization statistics come from X alone."""
    X, y = _validate_xy(X, y)
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty dataset")
    if spec.kind != "knn" and np.unique(y).size < 2:
        raise ValueError(f"{spec.kind} requires both classes in the training data")

    mean = scale = None
    Xf = X
    if spec.standardizes:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        Xf = (X - mean) / scale

    if spec.kind == "knn":
        state: object = _KnnState(X=Xf, y=y)
    elif spec.kind == "gaussian_nb":
        state = _fit_nb(Xf, y)
    elif spec.kind == "random_forest":
        state = _fit_forest(Xf, y, spec, seed)
    else:
        state = _fit_svm(Xf, y, spec, seed)
    return TrainedModel(
        spec=spec, n_features=X.shape[1], feature_mean=mean, feature_scale=scale, state=state
    )


def _fit_nb(X: np.ndarray, y: np.ndarray) -> _NbState:
    """Per-class feature Gaussians with a variance floor.

    The floor is 1e-9 times the largest overall feature variance; a tiny
    absolute fallback keeps densities finite when every feature is constant.
    """
    n = y.size
    floor = max(1e-9 * float(X.var(axis=0).max()), 1e-30)
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.stack([np.maximum(X[y == c].var(axis=0), floor) for c in (0, 1)])
    priors = np.array([(y == 0).sum() / n, (y == 1).sum() / n])
    return _NbState(log_priors=np.log(priors), means=means, variances=variances)


def _gini_best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Best (feature, threshold) by weighted Gini; None when nothing splits.

    Features are scanned in ascending order and only strictly better scores
    replace the incumbent, so ties resolve deterministically.
    """
    n = y.size
    total1 = int(y.sum())
    best = None
    for f in np.sort(features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        c1 = np.cumsum(y[order])
        cut = np.flatnonzero(xs[1:] > xs[:-1])
        if cut.size == 0:
            continue
        nl = (cut + 1).astype(np.float64)
        nr = n - nl
        l1 = c1[cut].astype(np.float64)
        r1 = total1 - l1
        gini_l = 1.0 - ((nl - l1) / nl) ** 2 - (l1 / nl) ** 2
        gini_r = 1.0 - ((nr - r1) / nr) ** 2 - (r1 / nr) ** 2
        weighted = (nl * gini_l + nr * gini_r) / n
        j = int(np.argmin(weighted))
        if best is None or weighted[j] < best[0]:
            threshold = 0.5 * (xs[cut[j]] + xs[cut[j] + 1])
            best = (float(weighted[j]), int(f), threshold)
    return best


def _grow_tree(
    X: np.ndarray, y: np.ndarray, depth: int, max_depth: int, n_candidates: int, rng
) -> _TreeNode:
    counts = np.bincount(y, minlength=2)
    majority = int(np.argmax(counts))
    if depth >= max_depth or counts.min() == 0:
        return _TreeNode(label=majority)
    features = rng.choice(X.shape[1], size=n_candidates, replace=False)
    split = _gini_best_split(X, y, features)
    if split is None:
        return _TreeNode(label=majority)
    _, feature, threshold = split
    mask = X[:, feature] <= threshold
    left = _grow_tree(X[mask], y[mask], depth + 1, max_depth, n_candidates, rng)
    right = _grow_tree(X[~mask], y[~mask], depth + 1, max_depth, n_candidates, rng)
    return _TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def _fit_forest(X: np.ndarray, y: np.ndarray, spec: ModelSpec, seed: int) -> _ForestState:
    """Bootstrap-resampled Gini trees with sqrt(d) feature candidates per split."""
    n, d = X.shape
    n_candidates = min(d, max(1, int(np.ceil(np.sqrt(d)))))
    trees = []
    for tree_seed in spawn_seeds(seed, spec.n_trees):
        rng = np.random.default_rng(tree_seed)
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[boot], y[boot], 0, spec.max_depth, n_candidates, rng))
    return _ForestState(trees=tuple(trees))


def _fit_svm(X: np.ndarray, y: np.ndarray, spec: ModelSpec, seed: int) -> _SvmState:
    """Hinge-loss subgradient descent with L2 regularization, 1/(lambda*t) steps."""
    rng = np.random.default_rng(seed)
    n, d = X.shape
    target = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(spec.svm_epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (spec.svm_lambda * t)
            if target[i] * (X[i] @ w + b) < 1.0:
                w = (1.0 - eta * spec.svm_lambda) * w + (eta * target[i]) * X[i]
                b += eta * target[i]
            else:
                w = (1.0 - eta * spec.svm_lambda) * w
    return _SvmState(w=w, b=b)


def _tree_apply(node: _TreeNode, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = node.label
        return
    mask = X[idx, node.feature] <= node.threshold
    _tree_apply(node.left, X, idx[mask], out)
    _tree_apply(node.right, X, idx[~mask], out)


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Predicted labels; ties always break toward class 0."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected (n, {model.n_features}) feature matrix, got {X.shape}")
    Xf = model.transform(X)
    state = model.state

    if isinstance(state, _KnnState):
        d2 = ((Xf[:, None, :] - state.X[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : model.spec.k]
        votes = state.y[nearest]
        counts = np.stack([(votes == 0).sum(axis=1), (votes == 1).sum(axis=1)], axis=1)
        return np.argmax(counts, axis=1).astype(np.int64)

    if isinstance(state, _NbState):
        scores = np.empty((Xf.shape[0], 2))
        for c in (0, 1):
            var = state.variances[c]
            log_density = -0.5 * (
                np.log(2.0 * np.pi * var) + (Xf - state.means[c]) ** 2 / var
            ).sum(axis=1)
            scores[:, c] = state.log_priors[c] + log_density
        return np.argmax(scores, axis=1).astype(np.int64)

    if isinstance(state, _ForestState):
        votes = np.zeros((Xf.shape[0], 2), dtype=np.int64)
        pred = np.empty(Xf.shape[0], dtype=np.int64)
        idx = np.arange(Xf.shape[0])
        for tree in state.trees:
            _tree_apply(tree, Xf, idx, pred)
            votes[idx, pred] += 1
        return np.argmax(votes, axis=1).astype(np.int64)

    scores = Xf @ state.w + state.b
    return (scores > 0.0).astype(np.int64)


def accuracy(predicted: np.ndarray, truth: np.ndarray) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValueError("cannot score an empty prediction vector")
    return float((predicted == truth).mean())


def _fold_partition(n: int, folds: int, rng) -> list[np.ndarray]:
    """Shuffled test-index arrays: disjoint, covering, sizes differing by <= 1."""
    perm = rng.permutation(n)
    base, extra = divmod(n, folds)
    out = []
    start = 0
    for i in range(folds):
        size = base + (1 if i < extra else 0)
        out.append(perm[start : start + size])
        start += size
    return out


def _run_cv(spec, y, folds, seed, feature_set, fold_features):
    """Shared CV engine.

    ``fold_features(train_idx, test_idx, fold_seed)`` returns the feature
    matrices for both sides of one split, letting the deep path refit its
    extractor per fold while the plain path just slices.
    """
    n = y.size
    if n < folds:
        raise ValueError(f"need at least {folds} samples for {folds}-fold CV, got {n}")
    if np.unique(y).size < 2:
        raise ValueError("cross-validation needs both classes present")
    seeds = spawn_seeds(seed, folds + 1)
    rng = np.random.default_rng(seeds[0])
    parts = _fold_partition(n, folds, rng)
    accuracies = []
    for i, test_idx in enumerate(parts):
        train_idx = np.concatenate([parts[j] for j in range(folds) if j != i])
        fit_seed, feat_seed = spawn_seeds(seeds[i + 1], 2)
        Xtr, Xte = fold_features(train_idx, test_idx, feat_seed)
        model = fit(spec, Xtr, y[train_idx], seed=fit_seed)
        accuracies.append(accuracy(predict(model, Xte), y[test_idx]))
    acc = np.array(accuracies)
    return CvReport(
        spec=spec,
        feature_set=feature_set,
        fold_accuracies=tuple(float(a) for a in acc),
        mean=float(acc.mean()),
        std=float(acc.std()),
        seed=seed,
    )


def cross_validate(
    spec: ModelSpec,
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 10,
    seed: int = 0,
    feature_set: str = "statistical",
) -> CvReport:
    """Seeded k-fold CV on a fixed feature matrix."""
    X, y = _validate_xy(X, y)

    def fold_features(train_idx, test_idx, _feat_seed):
        return X[train_idx], X[test_idx]

    return _run_cv(spec, y, folds, seed, feature_set, fold_features)


def cross_validate_deep(
    spec: ModelSpec,
    windows: np.ndarray,
    y: np.ndarray,
    folds: int = 10,
    seed: int = 0,
    arch: CnnArchitecture | None = None,
    train_cfg: TrainingConfig | None = None,
) -> CvReport:
    """Seeded k-fold CV with a per-fold CNN feature extractor.

    The network is initialized and trained on each fold's training windows
    only, then used to embed both sides, so learned features never see the
    test fold.  With the same seed and sample count, the fold partition
    matches :func:`cross_validate` exactly.
    """
    windows = np.asarray(windows, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    arch = arch or CnnArchitecture()
    train_cfg = train_cfg or TrainingConfig()

    def fold_features(train_idx, test_idx, feat_seed):
        init_seed, sgd_seed = spawn_seeds(feat_seed, 2)
        params = init_cnn(arch, windows.shape[1], seed=init_seed)
        trained, _ = train(
            params, windows[train_idx], y[train_idx], replace(train_cfg, seed=sgd_seed)
        )
        return extract_features(trained, windows[train_idx]), extract_features(
            trained, windows[test_idx]
        )

    return _run_cv(spec, y, folds, seed, "deep", fold_features)
