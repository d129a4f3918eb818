"""Supervised learners that map p lagged returns to the next return.

Four kinds share one ``fit`` / ``predict`` interface: ridge regression, a CART
regression tree, gradient-boosted trees and an MLP regressor.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScaleError, ShapeMismatchError
from .neuralnet import MlpNet, SgdConfig, fit_mse, init_mlp
from .timeseries import LaggedDataset, ScalerParams, fit_zscore

KINDS = ("ridge", "reg_tree", "gbt", "mlp")

DEFAULTS = {
    "ridge": {"shrinkage": 1.0},
    "reg_tree": {"max_depth": None, "min_samples_split": 2},
    "gbt": {"n_trees": 100, "learning_rate": 0.1, "max_depth": 3},
    "mlp": {
        "neurons": 200,
        "weight_decay": 1e-5,
        "activation": "tanh",
        "epochs": 200,
        "learning_rate": 0.01,
        "batch_size": 252,
    },
}

# Grid values in the order they are searched; ties resolve to the earliest entry.
TUNING_GRIDS = {
    "gbt": {
        "n_trees": [50, 100, 200],
        "learning_rate": [0.0001, 0.001, 0.01, 0.1, 1.0],
        "max_depth": [1, 3, 5],
    },
    "mlp": {
        "neurons": [20, 50, 100, 200],
        "weight_decay": [0.001, 0.01, 0.1, 1.0],
        "activation": ["tanh"],
    },
    "ridge": {
        "shrinkage": [0.00001, 0.00005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0],
    },
}

ENSEMBLE_LEARNERS = {
    "reg_tree": {"max_depth": None, "min_samples_split": 2},
    "mlp": {"neurons": 200, "weight_decay": 0.00001, "activation": "tanh"},
}


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.hyperparams) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        hp = {**DEFAULTS[self.kind], **self.hyperparams}
        _validate(self.kind, hp)
        object.__setattr__(self, "hyperparams", hp)

    @property
    def label(self):
        keys = sorted(self.hyperparams.keys() & _grid_keys(self.kind))
        return f"{self.kind}(" + ", ".join(f"{k}={self.hyperparams[k]}" for k in keys) + ")"


def _grid_keys(kind):
    return set(TUNING_GRIDS.get(kind, ENSEMBLE_LEARNERS.get(kind, {})))


def _validate(kind, hp):
    if kind == "ridge" and not hp["shrinkage"] > 0:
        raise ValueError("ridge shrinkage must be positive")
    if kind == "reg_tree":
        if hp["max_depth"] is not None and hp["max_depth"] < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if hp["min_samples_split"] < 2:
            raise ValueError("min_samples_split must be >= 2")
    if kind == "gbt":
        if hp["n_trees"] < 1 or hp["max_depth"] < 1:
            raise ValueError("gbt needs n_trees >= 1 and max_depth >= 1")
        if not 0 < hp["learning_rate"] <= 1:
            raise ValueError("gbt learning_rate must lie in (0, 1]")
    if kind == "mlp":
        if hp["neurons"] < 1 or hp["weight_decay"] < 0:
            raise ValueError("mlp needs neurons >= 1 and weight_decay >= 0")
        if hp["activation"] not in ("tanh", "relu"):
            raise ValueError("mlp activation must be tanh or relu")


def expand_grid(kind, grid=None):
    """Cartesian product of a hyperparameter grid as a list of specs.

    The last key varies fastest, matching the listing order of the grid.
    """
    grid = TUNING_GRIDS[kind] if grid is None else grid
    keys = list(grid)
    return [LearnerSpec(kind, dict(zip(keys, vals))) for vals in itertools.product(*(grid[k] for k in keys))]


# --------------------------------------------------------------------------- trees


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary regression tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    @property
    def depth(self):
        depth = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while np.any(active):
            r, n = rows[active], node[active]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return self.value[node]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d):
        ints = {k: np.array(d[k], dtype=int) for k in ("feature", "left", "right")}
        return cls(ints["feature"], np.array(d["threshold"], float), ints["left"], ints["right"],
                   np.array(d["value"], float))


def _best_split(X, y):
    """Best squared-error split of one node, or None.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    n = len(y)
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    cs = np.cumsum(y[order], axis=0)[:-1]
    n_left = np.arange(1, n)[:, None]
    total = y.sum()
    score = cs * cs / n_left + (total - cs) ** 2 / (n - n_left)
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score.T))  # feature-major: lowest feature, then lowest threshold
    j, i = divmod(flat, n - 1)
    if score[i, j] <= total * total / n:
        return None
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return j, thr


def fit_tree(X, y, max_depth=None, min_samples_split=2) -> Tree:
    """CART regression tree grown depth-first with squared-error splits."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[rows].mean()))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        yr = y[rows]
        if len(rows) < min_samples_split or (max_depth is not None and depth >= max_depth):
            continue
        if np.all(yr == yr[0]):
            continue
        split = _best_split(X[rows], yr)
        if split is None:
            continue
        j, thr = split
        mask = X[rows, j] <= thr
        lrows, rrows = rows[mask], rows[~mask]
        feature[node], threshold[node] = j, thr
        left[node], right[node] = new_node(lrows), new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right), np.array(value))


# --------------------------------------------------------------------------- fitted models


def _lenient_zscore(values):
    try:
        return fit_zscore(values)
    except DegenerateScaleError:
        v = np.asarray(values, dtype=float)
        return ScalerParams(float(v.mean()) if v.size else 0.0, 1.0)


@dataclass(frozen=True)
class FittedModel:
    spec: LearnerSpec
    params: dict
    feature_scaler: ScalerParams | None = None
    target_scaler: ScalerParams | None = None
    n_features: int = 0

    @property
    def kind(self):
        return self.spec.kind

    def predict(self, features):
        return predict(self, features)

    def to_dict(self):
        p = self.params
        if self.kind == "ridge":
            blob = {"coef": p["coef"].tolist(), "intercept": p["intercept"]}
        elif self.kind == "reg_tree":
            blob = {"tree": p["tree"].to_dict()}
        elif self.kind == "gbt":
            blob = {"init": p["init"], "trees": [t.to_dict() for t in p["trees"]]}
        else:
            blob = {"net": p["net"].to_dict()}
        return {
            "kind": self.kind,
            "hyperparams": self.spec.hyperparams,
            "n_features": self.n_features,
            "feature_scaler": self.feature_scaler.to_dict() if self.feature_scaler else None,
            "target_scaler": self.target_scaler.to_dict() if self.target_scaler else None,
            "params": blob,
        }

    @classmethod
    def from_dict(cls, d):
        kind, blob = d["kind"], d["params"]
        if kind == "ridge":
            params = {"coef": np.array(blob["coef"], float), "intercept": float(blob["intercept"])}
        elif kind == "reg_tree":
            params = {"tree": Tree.from_dict(blob["tree"])}
        elif kind == "gbt":
            params = {"init": float(blob["init"]), "trees": [Tree.from_dict(t) for t in blob["trees"]]}
        else:
            params = {"net": MlpNet.from_dict(blob["net"])}
        fs = ScalerParams.from_dict(d["feature_scaler"]) if d["feature_scaler"] else None
        ts = ScalerParams.from_dict(d["target_scaler"]) if d["target_scaler"] else None
        return cls(LearnerSpec(kind, d["hyperparams"]), params, fs, ts, int(d["n_features"]))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _xy(dataset):
    if isinstance(dataset, LaggedDataset):
        return np.asarray(dataset.features, float), np.asarray(dataset.targets, float)
    X, y = dataset
    return np.asarray(X, float), np.asarray(y, float)


def fit(spec: LearnerSpec, dataset, seed=0) -> FittedModel:
    """Fit ``spec`` on a :class:`LaggedDataset` or an ``(X, y)`` pair."""
    X, y = _xy(dataset)
    if len(y) == 0:
        raise ValueError("cannot fit on an empty dataset")
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeMismatchError(f"features {X.shape} vs targets {y.shape}")
    hp = spec.hyperparams
    n_features = X.shape[1]

    if spec.kind == "ridge":
        fs = _lenient_zscore(X)
        Z = fs.apply(X)
        # centring keeps the intercept out of the penalty
        z_mean = Z.mean(axis=0)
        Zc = Z - z_mean
        y_mean = float(y.mean())
        A = Zc.T @ Zc + hp["shrinkage"] * np.eye(n_features)
        coef = np.linalg.solve(A, Zc.T @ (y - y_mean))
        intercept = y_mean - float(z_mean @ coef)
        return FittedModel(spec, {"coef": coef, "intercept": intercept}, fs, None, n_features)

    if spec.kind == "reg_tree":
        tree = fit_tree(X, y, hp["max_depth"], hp["min_samples_split"])
        return FittedModel(spec, {"tree": tree}, None, None, n_features)

    if spec.kind == "gbt":
        init = float(y.mean())
        F = np.full(len(y), init)
        trees = []
        for _ in range(hp["n_trees"]):
            tree = fit_tree(X, y - F, hp["max_depth"], 2)
            F = F + hp["learning_rate"] * tree.predict(X)
            trees.append(tree)
        return FittedModel(spec, {"init": init, "trees": trees}, None, None, n_features)

    fs = _lenient_zscore(X)
    ts = _lenient_zscore(y)
    rng = np.random.default_rng(seed)
    net = init_mlp([n_features, hp["neurons"], 1], rng, hp["activation"], "linear", hp["weight_decay"])
    if np.all(y == y[0]):
        # nothing to learn: zero output layer reproduces the constant exactly
        net = MlpNet([net.weights[0], np.zeros_like(net.weights[1])], [net.biases[0], np.zeros(1)],
                     net.hidden_activation, net.output_activation, net.weight_decay)
    else:
        cfg = SgdConfig(hp["learning_rate"], hp["batch_size"], hp["epochs"], seed)
        net = fit_mse(net, fs.apply(X), ts.apply(y), cfg)
    return FittedModel(spec, {"net": net}, fs, ts, n_features)


def predict(model: FittedModel, features) -> np.ndarray:
    X = np.asarray(getattr(features, "features", features), dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeMismatchError(f"expected {model.n_features} feature columns, got shape {X.shape}")
    p = model.params
    if model.kind == "ridge":
        return model.feature_scaler.apply(X) @ p["coef"] + p["intercept"]
    if model.kind == "reg_tree":
        return p["tree"].predict(X)
    if model.kind == "gbt":
        lr = model.spec.hyperparams["learning_rate"]
        out = np.full(len(X), p["init"])
        for tree in p["trees"]:
            out += lr * tree.predict(X)
        return out
    return model.target_scaler.invert(p["net"].predict(model.feature_scaler.apply(X))[:, 0])
