"""One-class anomaly detectors fitted on negatives only: one-class SVM,
isolation forest, tail-ECDF (copula-style) scoring, angle-based factors,
minimum covariance determinant, and a variational autoencoder.

All detectors score with "higher = more anomalous" and cut decisions at the
(1 - contamination) quantile of their own training scores.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import chi2

from .data import Dataset
from .errors import ConfigError, DataError, ModelError
from .neural import LayerSpec, Network, NetworkSpec, Optimizer, layer_stack, init_network

KINDS = ("ocsvm", "iforest", "copod", "abod", "mcd", "vae")

OCSVM_KERNELS = ("linear", "rbf", "poly", "sigmoid")

# Published search grids for the detector hyperparameters.
TABLE_GRIDS: dict[str, dict[str, list]] = {
    "ocsvm": {"kernel": ["linear", "rbf", "poly", "sigmoid"]},
    "iforest": {
        "n_estimators": [10, 50, 100, 150, 200, 250, 300],
        "max_samples": [500, 1000, 1500, 2000],
    },
    "abod": {"n_neighbours": [5, 10, 20, 30, 40, 50]},
    "copod": {},
    "mcd": {},
    "vae": {},
}


def _validate_detector_params(kind: str, params: dict) -> None:
    if kind not in KINDS:
        raise ConfigError(f"unknown detector kind {kind!r}")
    enums = {"ocsvm": {"kernel": OCSVM_KERNELS}}.get(kind, {})
    numerics: dict[str, tuple[float, float]] = {
        "ocsvm": {"nu": (1e-9, 1.0), "tol": (0.0, 1.0), "max_iter": (1, 1e8)},
        "iforest": {"n_estimators": (1, 1e6), "max_samples": (2, 1e9)},
        "abod": {"n_neighbours": (2, 1e6)},
        "mcd": {"support_fraction": (0.5, 1.0)},
        "vae": {"epochs": (1, 1e7), "learning_rate": (0.0, 10.0), "latent_dim": (1, 1e4)},
        "copod": {},
    }[kind]
    for name, value in params.items():
        if name in enums:
            if value not in enums[name]:
                raise ConfigError(f"{kind}: {name} must be one of {enums[name]}")
        elif name in numerics:
            low, high = numerics[name]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{kind}: {name} must be numeric")
            if not (low <= value <= high):
                raise ConfigError(f"{kind}: {name}={value} outside [{low}, {high}]")
        else:
            raise ConfigError(f"{kind}: unknown hyperparameter {name!r}")


@dataclass(frozen=True)
class DetectorConfig:
    kind: str
    parameters: dict = field(default_factory=dict)
    contamination: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        _validate_detector_params(self.kind, self.parameters)
        if not 0.0 < self.contamination <= 0.5:
            raise ConfigError("contamination must lie in (0, 0.5]")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": dict(self.parameters),
            "contamination": self.contamination,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DetectorConfig":
        return cls(
            doc["kind"],
            dict(doc.get("parameters", {})),
            float(doc.get("contamination", 0.05)),
            int(doc.get("seed", 0)),
        )


def quantile_threshold(scores: np.ndarray, contamination: float) -> float:
    """(1 - contamination) quantile: the ceil((1-c)n)-th smallest score, so at
    most a contamination share of the fitting scores can exceed it."""
    s = np.sort(np.asarray(scores, dtype=float))
    n = len(s)
    idx = min(n - 1, max(0, math.ceil((1.0 - contamination) * n) - 1))
    return float(s[idx])


def _as_rows(rows, width: int) -> np.ndarray:
    if isinstance(rows, Dataset):
        rows = rows.matrix()
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != width:
        raise ModelError(f"expected rows of width {width}, got shape {x.shape}")
    return x


class TrainedDetector:
    kind: str = ""

    def __init__(self, n_features: int, threshold: float = 0.0):
        self.n_features = n_features
        self.threshold = threshold

    def score(self, rows) -> np.ndarray:
        raise NotImplementedError

    def classify(self, rows) -> np.ndarray:
        return (self.score(rows) > self.threshold).astype(int)

    def _state_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format": "fraudkit.detector/1",
            "kind": self.kind,
            "n_features": self.n_features,
            "threshold": self.threshold,
            "state": self._state_dict(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")


def classification_rate(predictions: Sequence[int] | np.ndarray) -> float:
    """Share of positive-only test rows flagged positive."""
    preds = np.asarray(predictions)
    if preds.size == 0:
        raise DataError("classification_rate needs a nonempty prediction vector")
    return float(np.mean(preds))


# ---------------------------------------------------------------------------
# One-class SVM

def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    inner = a @ b.T
    if kernel == "linear":
        return inner
    if kernel == "rbf":
        d2 = (
            np.sum(a * a, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * inner
        )
        return np.exp(-gamma * np.maximum(d2, 0.0))
    if kernel == "poly":
        return (inner + 1.0) ** 3
    if kernel == "sigmoid":
        return np.tanh(gamma * inner + 1.0)
    raise ConfigError(f"unknown kernel {kernel!r}")


class OcsvmDetector(TrainedDetector):
    kind = "ocsvm"

    def __init__(self, n_features, support_rows, alphas, rho, kernel, gamma, threshold=0.0):
        super().__init__(n_features, threshold)
        self.support_rows = np.asarray(support_rows, dtype=float)
        self.alphas = np.asarray(alphas, dtype=float)
        self.rho = float(rho)
        self.kernel = kernel
        self.gamma = float(gamma)

    def score(self, rows) -> np.ndarray:
        x = _as_rows(rows, self.n_features)
        k = kernel_matrix(x, self.support_rows, self.kernel, self.gamma)
        return self.rho - k @ self.alphas

    def _state_dict(self) -> dict:
        return {
            "support_rows": self.support_rows.tolist(),
            "alphas": self.alphas.tolist(),
            "rho": self.rho,
            "kernel": self.kernel,
            "gamma": self.gamma,
        }

    @classmethod
    def _from_state(cls, n_features, threshold, state):
        return cls(
            n_features,
            state["support_rows"],
            state["alphas"],
            state["rho"],
            state["kernel"],
            state["gamma"],
            threshold,
        )


def _fit_ocsvm(x: np.ndarray, config: DetectorConfig) -> OcsvmDetector:
    n, d = x.shape
    if n < 2:
        raise DataError("ocsvm needs >= 2 rows")
    params = config.parameters
    kernel = params.get("kernel", "rbf")
    nu = float(params.get("nu", 0.5))
    tol = float(params.get("tol", 1e-6))
    max_iter = int(params.get("max_iter", 20000))
    gamma = 1.0 / d

    k = kernel_matrix(x, x, kernel, gamma)
    cap = 1.0 / (nu * n)
    alpha = np.zeros(n)
    full = int(math.floor(nu * n))
    alpha[:full] = cap
    if full < n:
        alpha[full] = 1.0 - full * cap

    grad = k @ alpha
    for _ in range(max_iter):
        up = np.nonzero(alpha < cap - 1e-15)[0]
        down = np.nonzero(alpha > 1e-15)[0]
        if up.size == 0 or down.size == 0:
            break
        i = up[int(np.argmin(grad[up]))]
        j = down[int(np.argmax(grad[down]))]
        gap = grad[j] - grad[i]
        if gap < tol:
            break
        curv = k[i, i] + k[j, j] - 2.0 * k[i, j]
        step = gap / max(curv, 1e-12)
        step = min(step, cap - alpha[i], alpha[j])
        if step <= 0:
            break
        alpha[i] += step
        alpha[j] -= step
        grad += step * (k[:, i] - k[:, j])

    free = np.nonzero((alpha > 1e-9) & (alpha < cap - 1e-9))[0]
    anchors = free if free.size else np.nonzero(alpha > 1e-9)[0]
    rho = float(np.mean(grad[anchors]))

    support = np.nonzero(alpha > 1e-12)[0]
    return OcsvmDetector(d, x[support], alpha[support], rho, kernel, gamma)


# ---------------------------------------------------------------------------
# Isolation forest

def harmonic(k: int) -> float:
    return float(sum(1.0 / i for i in range(1, k + 1)))


def average_path_length(m: int) -> float:
    """Expected unsuccessful-search depth c(m) of a binary search tree."""
    if m <= 1:
        return 0.0
    return 2.0 * harmonic(m - 1) - 2.0 * (m - 1) / m


@dataclass
class _IsoNode:
    feature: int = -1
    split: float = 0.0
    left: "_IsoNode | None" = None
    right: "_IsoNode | None" = None
    size: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"size": self.size}
        return {
            "feature": self.feature,
            "split": self.split,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "_IsoNode":
        if "feature" not in doc:
            return cls(size=int(doc["size"]))
        return cls(
            feature=int(doc["feature"]),
            split=float(doc["split"]),
            left=cls.from_dict(doc["left"]),
            right=cls.from_dict(doc["right"]),
        )


def _grow_iso(x: np.ndarray, depth: int, limit: int, rng: np.random.Generator) -> _IsoNode:
    if x.shape[0] <= 1 or depth >= limit:
        return _IsoNode(size=x.shape[0])
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    usable = np.nonzero(hi > lo)[0]
    if usable.size == 0:
        return _IsoNode(size=x.shape[0])
    feature = int(usable[int(rng.integers(usable.size))])
    split = float(rng.uniform(lo[feature], hi[feature]))
    mask = x[:, feature] < split
    return _IsoNode(
        feature=feature,
        split=split,
        left=_grow_iso(x[mask], depth + 1, limit, rng),
        right=_grow_iso(x[~mask], depth + 1, limit, rng),
    )


def _iso_path(node: _IsoNode, row: np.ndarray) -> float:
    depth = 0.0
    while not node.is_leaf:
        node = node.left if row[node.feature] < node.split else node.right
        depth += 1.0
    return depth + average_path_length(node.size)


class IsolationForestDetector(TrainedDetector):
    kind = "iforest"

    def __init__(self, n_features, trees, subsample_size, threshold=0.0):
        super().__init__(n_features, threshold)
        self.trees = trees
        self.subsample_size = int(subsample_size)

    def score(self, rows) -> np.ndarray:
        x = _as_rows(rows, self.n_features)
        c = average_path_length(self.subsample_size)
        out = np.empty(x.shape[0])
        for i, row in enumerate(x):
            mean_path = np.mean([_iso_path(t, row) for t in self.trees])
            out[i] = 2.0 ** (-mean_path / c)
        return out

    def _state_dict(self) -> dict:
        return {
            "subsample_size": self.subsample_size,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def _from_state(cls, n_features, threshold, state):
        return cls(
            n_features,
            [_IsoNode.from_dict(t) for t in state["trees"]],
            state["subsample_size"],
            threshold,
        )


def _fit_iforest(x: np.ndarray, config: DetectorConfig) -> IsolationForestDetector:
    n, d = x.shape
    if n < 2:
        raise DataError("iforest needs >= 2 rows")
    params = config.parameters
    n_estimators = int(params.get("n_estimators", 100))
    max_samples = int(params.get("max_samples", 500))
    m = min(max_samples, n)
    limit = math.ceil(math.log2(max(m, 2)))
    trees = []
    for seq in np.random.SeedSequence(config.seed).spawn(n_estimators):
        rng = np.random.default_rng(seq)
        idx = rng.permutation(n)[:m]  # subsample without replacement
        trees.append(_grow_iso(x[idx], 0, limit, rng))
    return IsolationForestDetector(d, trees, m)


# ---------------------------------------------------------------------------
# Tail-ECDF detector (copula-style)

def _skewness(values: np.ndarray) -> float:
    centered = values - values.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return 0.0
    return float(np.mean(centered**3) / m2**1.5)


class CopodDetector(TrainedDetector):
    kind = "copod"

    def __init__(self, n_features, sorted_columns, skews, threshold=0.0):
        super().__init__(n_features, threshold)
        self.sorted_columns = [np.asarray(c, dtype=float) for c in sorted_columns]
        self.skews = np.asarray(skews, dtype=float)

    def score(self, rows) -> np.ndarray:
        x = _as_rows(rows, self.n_features)
        n = len(self.sorted_columns[0])
        # inside the fitted support tails are >= 1/n; a value outside it takes
        # the smallest positive probability, so its surprisal stays finite yet
        # dominates any combination of in-support terms
        floor = np.finfo(float).tiny
        left = np.empty_like(x)
        right = np.empty_like(x)
        for j, col in enumerate(self.sorted_columns):
            left[:, j] = np.searchsorted(col, x[:, j], side="right") / n
            right[:, j] = (n - np.searchsorted(col, x[:, j], side="left")) / n
        left = np.maximum(left, floor)
        right = np.maximum(right, floor)
        corrected = np.where(self.skews < 0, left, right)
        s_left = -np.log(left).sum(axis=1)
        s_right = -np.log(right).sum(axis=1)
        s_skew = -np.log(corrected).sum(axis=1)
        return np.maximum.reduce([s_left, s_right, s_skew])

    def _state_dict(self) -> dict:
        return {
            "sorted_columns": [c.tolist() for c in self.sorted_columns],
            "skews": self.skews.tolist(),
        }

    @classmethod
    def _from_state(cls, n_features, threshold, state):
        return cls(n_features, state["sorted_columns"], state["skews"], threshold)


def _fit_copod(x: np.ndarray, config: DetectorConfig) -> CopodDetector:
    if x.shape[0] < 2:
        raise DataError("copod needs >= 2 rows")
    cols = [np.sort(x[:, j]) for j in range(x.shape[1])]
    skews = [_skewness(x[:, j]) for j in range(x.shape[1])]
    return CopodDetector(x.shape[1], cols, skews)


# ---------------------------------------------------------------------------
# Angle-based detector

class AbodDetector(TrainedDetector):
    kind = "abod"

    def __init__(self, n_features, train_rows, n_neighbours, threshold=0.0):
        super().__init__(n_features, threshold)
        self.train_rows = np.asarray(train_rows, dtype=float)
        self.n_neighbours = int(n_neighbours)

    def angle_factor(self, row: np.ndarray, k: int | None = None) -> float:
        """Variance of inverse-square-weighted angle terms over neighbor pairs."""
        k = self.n_neighbours if k is None else k
        diffs = self.train_rows - row
        dist2 = np.sum(diffs * diffs, axis=1)
        usable = np.nonzero(dist2 > 1e-24)[0]
        if usable.size < 2:
            return 0.0
        order = usable[np.argsort(dist2[usable], kind="stable")][:k]
        v = diffs[order] / dist2[order, None]
        w = v @ v.T
        iu = np.triu_indices(len(order), k=1)
        return float(np.var(w[iu]))

    def score(self, rows) -> np.ndarray:
        x = _as_rows(rows, self.n_features)
        return np.array([-self.angle_factor(row) for row in x])

    def _state_dict(self) -> dict:
        return {"train_rows": self.train_rows.tolist(), "n_neighbours": self.n_neighbours}

    @classmethod
    def _from_state(cls, n_features, threshold, state):
        return cls(n_features, state["train_rows"], state["n_neighbours"], threshold)


def _fit_abod(x: np.ndarray, config: DetectorConfig) -> AbodDetector:
    if x.shape[0] < 3:
        raise DataError("abod needs >= 3 rows")
    k = int(config.parameters.get("n_neighbours", 10))
    return AbodDetector(x.shape[1], x, k)


# ---------------------------------------------------------------------------
# Minimum covariance determinant

def _ml_cov(rows: np.ndarray):
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / rows.shape[0]
    return mean, cov


def _logdet(cov: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not math.isfinite(logdet):
        return math.inf
    return float(logdet)


def _mahalanobis2(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    centered = x - mean
    solved = np.linalg.solve(cov, centered.T).T
    return np.sum(centered * solved, axis=1)


def _c_step(x: np.ndarray, subset: np.ndarray, h: int, max_steps: int = 100):
    for _ in range(max_steps):
        mean, cov = _ml_cov(x[subset])
        if _logdet(cov) == math.inf:
            return subset, math.inf
        d2 = _mahalanobis2(x, mean, cov)
        new_subset = np.argsort(d2, kind="stable")[:h]
        if np.array_equal(np.sort(new_subset), np.sort(subset)):
            break
        subset = new_subset
    mean, cov = _ml_cov(x[subset])
    return np.sort(subset), _logdet(cov)


class McdDetector(TrainedDetector):
    kind = "mcd"

    def __init__(self, n_features, mean, cov, support_indices=(), raw_log_det=0.0, threshold=0.0):
        super().__init__(n_features, threshold)
        self.mean = np.asarray(mean, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        self.support_indices = tuple(int(i) for i in support_indices)
        self.raw_log_det = float(raw_log_det)

    def score(self, rows) -> np.ndarray:
        x = _as_rows(rows, self.n_features)
        return np.sqrt(np.maximum(_mahalanobis2(x, self.mean, self.cov), 0.0))

    def _state_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "support_indices": list(self.support_indices),
            "raw_log_det": self.raw_log_det,
        }

    @classmethod
    def _from_state(cls, n_features, threshold, state):
        return cls(
            n_features,
            state["mean"],
            state["cov"],
            state.get("support_indices", ()),
            state.get("raw_log_det", 0.0),
            threshold,
        )


EXHAUSTIVE_SUBSET_LIMIT = 20_000


def _fit_mcd(x: np.ndarray, config: DetectorConfig) -> McdDetector:
    n, p = x.shape
    if n < p + 2:
        raise DataError(f"mcd needs at least {p + 2} rows for {p} features")
    fraction = config.parameters.get("support_fraction")
    h = int(math.ceil(fraction * n)) if fraction is not None else (n + p + 1) // 2
    h = min(max(h, p + 1), n)

    best_subset = None
    best_logdet = math.inf
    if math.comb(n, h) <= EXHAUSTIVE_SUBSET_LIMIT:
        # the determinant-minimizing h-subset, by definition
        for combo in itertools.combinations(range(n), h):
            subset = np.array(combo)
            _, cov = _ml_cov(x[subset])
            ld = _logdet(cov)
            if ld < best_logdet:
                best_logdet, best_subset = ld, subset
    else:
        rng = np.random.default_rng(config.seed)
        trials = []
        for _ in range(250):
            start = rng.permutation(n)[: p + 1]
            mean, cov = _ml_cov(x[start])
            if _logdet(cov) == math.inf:
                continue
            d2 = _mahalanobis2(x, mean, cov)
            subset = np.argsort(d2, kind="stable")[:h]
            for _ in range(2):  # two cheap refinement steps
                mean, cov = _ml_cov(x[subset])
                if _logdet(cov) == math.inf:
                    break
                subset = np.argsort(_mahalanobis2(x, mean, cov), kind="stable")[:h]
            _, cov = _ml_cov(x[subset])
            trials.append((_logdet(cov), subset))
        trials.sort(key=lambda t: t[0])
        for _, subset in trials[:10]:
            refined, ld = _c_step(x, subset, h)
            if ld < best_logdet:
                best_logdet, best_subset = ld, refined

    if best_subset is None or best_logdet == math.inf:
        raise DataError("mcd: covariance is singular on every candidate subset")

    raw_mean, raw_cov = _ml_cov(x[best_subset])
    d2 = _mahalanobis2(x, raw_mean, raw_cov)
    raw_cov = raw_cov * (np.median(d2) / chi2.ppf(0.5, p))

    inliers = _mahalanobis2(x, raw_mean, raw_cov) <= chi2.ppf(0.975, p)
    if inliers.sum() > p:
        rw_mean, rw_cov = _ml_cov(x[inliers])
        if _logdet(rw_cov) < math.inf:
            d2 = _mahalanobis2(x, rw_mean, rw_cov)
            rw_cov = rw_cov * (np.median(d2) / chi2.ppf(0.5, p))
            return McdDetector(p, rw_mean, rw_cov, best_subset, best_logdet)
    return McdDetector(p, raw_mean, raw_cov, best_subset, best_logdet)


# ---------------------------------------------------------------------------
# Variational autoencoder

class VaeDetector(TrainedDetector):
    kind = "vae"

    def __init__(self, n_features, encoder, mu_head, logvar_head, decoder, threshold=0.0):
        super().__init__(n_features, threshold)
        self.encoder = encoder
        self.mu_head = mu_head
        self.logvar_head = logvar_head
        self.decoder = decoder

    def reconstruct(self, rows) -> np.ndarray:
        """Decode from the posterior mean (no sampling, deterministic)."""
        x = _as_rows(rows, self.n_features)
        hidden = self.encoder.forward(x)
        mu = self.mu_head.forward(hidden)
        return self.decoder.forward(mu)

    def score(self, rows) -> np.ndarray:
        x = _as_rows(rows, self.n_features)
        recon = self.reconstruct(x)
        return np.mean((x - recon) ** 2, axis=1)

    def _state_dict(self) -> dict:
        return {
            "encoder": self.encoder.to_dict(),
            "mu_head": self.mu_head.to_dict(),
            "logvar_head": self.logvar_head.to_dict(),
            "decoder": self.decoder.to_dict(),
        }

    @classmethod
    def _from_state(cls, n_features, threshold, state):
        return cls(
            n_features,
            Network.from_dict(state["encoder"]),
            Network.from_dict(state["mu_head"]),
            Network.from_dict(state["logvar_head"]),
            Network.from_dict(state["decoder"]),
            threshold,
        )


def _fit_vae(x: np.ndarray, config: DetectorConfig) -> VaeDetector:
    n, d = x.shape
    if n < 2:
        raise DataError("vae needs >= 2 rows")
    params = config.parameters
    epochs = int(params.get("epochs", 300))
    lr = float(params.get("learning_rate", 1e-3))
    latent = int(params.get("latent_dim", 2))

    # published layout: two ReLU layers of 9 and 10 units on each side
    encoder = init_network(
        NetworkSpec(d, layer_stack([9, 10], ["relu", "relu"]), "mse"), config.seed
    )
    mu_head = init_network(NetworkSpec(10, (LayerSpec(latent, "linear"),), "mse"), config.seed + 1)
    logvar_head = init_network(NetworkSpec(10, (LayerSpec(latent, "linear"),), "mse"), config.seed + 2)
    decoder = init_network(
        NetworkSpec(latent, layer_stack([9, 10, d], ["relu", "relu", "linear"]), "mse"),
        config.seed + 3,
    )
    opts = [
        Optimizer("adam", lr, net) for net in (encoder, mu_head, logvar_head, decoder)
    ]
    rng = np.random.default_rng(config.seed + 4)
    batch_size = min(int(params.get("batch_size", 64)) if "batch_size" in params else 64, n)

    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            batch = x[idx]
            m = batch.shape[0]

            hidden, enc_cache = encoder.forward_cached(batch)
            mu, mu_cache = mu_head.forward_cached(hidden)
            logvar, lv_cache = logvar_head.forward_cached(hidden)
            logvar = np.clip(logvar, -10.0, 10.0)
            eps = rng.standard_normal(mu.shape)
            std = np.exp(0.5 * logvar)
            z = mu + std * eps
            recon, dec_cache = decoder.forward_cached(z)

            # loss = mean over batch of [ mean_j (x - x_hat)^2 + KL / d ]
            recon_err = recon - batch
            loss = float(np.mean(recon_err**2)) + float(
                np.mean(0.5 * np.sum(mu**2 + np.exp(logvar) - logvar - 1.0, axis=1)) / d
            )
            if not math.isfinite(loss):
                raise ModelError(f"non-finite vae loss at epoch {epoch}")

            d_recon = 2.0 * recon_err / (m * d)
            dec_grads, dz = decoder.backward(dec_cache, d_recon)
            d_mu = dz + mu / (m * d)
            d_logvar = dz * (0.5 * std * eps) + (np.exp(logvar) - 1.0) / (2.0 * m * d)
            mu_grads, dh1 = mu_head.backward(mu_cache, d_mu)
            lv_grads, dh2 = logvar_head.backward(lv_cache, d_logvar)
            enc_grads, _ = encoder.backward(enc_cache, dh1 + dh2)

            for opt, net, grads in zip(
                opts, (encoder, mu_head, logvar_head, decoder), (enc_grads, mu_grads, lv_grads, dec_grads)
            ):
                opt.step(net, grads)

    return VaeDetector(d, encoder, mu_head, logvar_head, decoder)


# ---------------------------------------------------------------------------
# Fit dispatch + persistence

_FITTERS = {
    "ocsvm": _fit_ocsvm,
    "iforest": _fit_iforest,
    "copod": _fit_copod,
    "abod": _fit_abod,
    "mcd": _fit_mcd,
    "vae": _fit_vae,
}

_DETECTOR_CLASSES = {
    "ocsvm": OcsvmDetector,
    "iforest": IsolationForestDetector,
    "copod": CopodDetector,
    "abod": AbodDetector,
    "mcd": McdDetector,
    "vae": VaeDetector,
}


def fit_detector(config: DetectorConfig, negatives: Dataset | np.ndarray) -> TrainedDetector:
    """Fit config.kind on negative rows and cut the decision threshold at the
    (1 - contamination) quantile of the training scores."""
    x = negatives.matrix() if isinstance(negatives, Dataset) else np.asarray(negatives, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("need a nonempty 2-D matrix of negative rows")
    detector = _FITTERS[config.kind](x, config)
    detector.threshold = quantile_threshold(detector.score(x), config.contamination)
    return detector


def score(detector: TrainedDetector, rows) -> np.ndarray:
    return detector.score(rows)


def classify(detector: TrainedDetector, rows) -> np.ndarray:
    return detector.classify(rows)


def detector_from_dict(doc: dict) -> TrainedDetector:
    if doc.get("format") != "fraudkit.detector/1":
        raise ModelError(f"unsupported detector document {doc.get('format')!r}")
    kind = doc["kind"]
    try:
        cls = _DETECTOR_CLASSES[kind]
    except KeyError as exc:
        raise ModelError(f"unknown detector kind {kind!r}") from exc
    return cls._from_state(int(doc["n_features"]), float(doc["threshold"]), doc["state"])


def load_detector(path: str | Path) -> TrainedDetector:
    return detector_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
