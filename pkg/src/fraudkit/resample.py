"""Training-set imbalance correction: SMOTE, ENN filtering, Tomek-link
removal, the two SMOTE composites, ADASYN, and the method dispatcher that
also routes to the GAN oversamplers.

All distances are Euclidean over the (normalized) feature matrix; neighbor
ties break toward the lowest row index so every method is deterministic for
a fixed (data, config) pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, dataset_from_matrix, round_half_up
from .errors import ConfigError, DataError

METHODS = ("none", "smote", "smote_enn", "smote_tomek", "adasyn", "vgan", "wgan")
SMOTE_FAMILY = ("smote", "smote_enn", "smote_tomek", "adasyn")


@dataclass(frozen=True)
class BalancerConfig:
    method: str = "none"
    k_neighbors: int = 5
    target_ratio: float = 1.0
    enn_k: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown balancing method {self.method!r}")
        if self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be positive")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ConfigError("target_ratio must lie in (0, 1]")
        if self.enn_k < 1:
            raise ConfigError("enn_k must be positive")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "k_neighbors": self.k_neighbors,
            "target_ratio": self.target_ratio,
            "enn_k": self.enn_k,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BalancerConfig":
        known = {"method", "k_neighbors", "target_ratio", "enn_k", "seed"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown balancer fields {sorted(extra)}")
        return cls(**doc)


@dataclass(frozen=True)
class SmoteDraw:
    """Provenance of one synthetic row: endpoints and interpolation factor."""

    base_index: int
    neighbor_index: int
    u: float


def _pairwise_distances(a: np.ndarray, b: np.ndarray, chunk: int = 1024) -> np.ndarray:
    out = np.empty((a.shape[0], b.shape[0]))
    for start in range(0, a.shape[0], chunk):
        block = a[start : start + chunk]
        d2 = (
            np.sum(block * block, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * block @ b.T
        )
        np.maximum(d2, 0.0, out=d2)
        out[start : start + chunk] = np.sqrt(d2)
    return out


def _k_nearest(dist_row: np.ndarray, k: int, exclude: int | None = None) -> np.ndarray:
    """Indices of the k nearest points; ties resolved toward lower index."""
    d = dist_row.copy()
    if exclude is not None:
        d[exclude] = np.inf
    order = np.argsort(d, kind="stable")
    return order[:k]


def _classes(data: Dataset) -> tuple[np.ndarray, np.ndarray, int, int]:
    labels = data.require_labels()
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("both classes must be nonempty")
    if len(pos) <= len(neg):
        minority_label, majority_label = 1, 0
    else:
        minority_label, majority_label = 0, 1
    return pos, neg, minority_label, majority_label


def project_onehot(matrix: np.ndarray, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """Snap each one-hot column group to its nearest valid indicator vector."""
    out = matrix.copy()
    for group in groups:
        cols = list(group)
        block = out[:, cols]
        winners = np.argmax(block, axis=1)
        block[:] = 0.0
        block[np.arange(block.shape[0]), winners] = 1.0
        out[:, cols] = block
    return out


def _check_unit_box(x: np.ndarray) -> None:
    if x.size and (x.min() < -1e-9 or x.max() > 1.0 + 1e-9):
        raise DataError("features must be normalized to [0, 1] before resampling")


def smote(
    data: Dataset,
    cfg: BalancerConfig,
    onehot_groups: Sequence[Sequence[int]] | None = None,
    with_provenance: bool = False,
):
    """Append interpolated minority rows until minority/majority hits the
    target ratio. Each synthetic row is x_i + u * (x_nn - x_i) with u ~ U[0,1]
    and x_nn one of the k nearest minority neighbors of a random minority row.
    """
    x = data.matrix()
    _check_unit_box(x)
    labels = data.require_labels()
    pos, neg, minority_label, _ = _classes(data)
    minority_idx = pos if minority_label == 1 else neg
    majority_count = data.n - len(minority_idx)
    if len(minority_idx) <= cfg.k_neighbors:
        raise DataError(
            f"minority size {len(minority_idx)} must exceed k_neighbors {cfg.k_neighbors}"
        )

    wanted = round_half_up(majority_count * cfg.target_ratio) - len(minority_idx)
    minority = x[minority_idx]
    dist = _pairwise_distances(minority, minority)
    neighbor_table = [
        _k_nearest(dist[i], cfg.k_neighbors, exclude=i) for i in range(len(minority_idx))
    ]

    rng = np.random.default_rng(cfg.seed)
    synth_rows = []
    draws: list[SmoteDraw] = []
    for _ in range(max(wanted, 0)):
        i = int(rng.integers(len(minority_idx)))
        nn_local = int(neighbor_table[i][int(rng.integers(cfg.k_neighbors))])
        u = float(rng.uniform())
        row = minority[i] + u * (minority[nn_local] - minority[i])
        synth_rows.append(row)
        draws.append(SmoteDraw(int(minority_idx[i]), int(minority_idx[nn_local]), u))

    if synth_rows:
        synth = np.vstack(synth_rows)
        if onehot_groups:
            synth = project_onehot(synth, onehot_groups)
        new_x = np.vstack([x, synth])
        new_labels = np.concatenate([labels, np.full(len(synth_rows), minority_label)])
    else:
        new_x, new_labels = x, labels
    out = dataset_from_matrix(new_x, new_labels, schema=data.schema)
    if with_provenance:
        return out, draws
    return out


def enn_filter(data: Dataset, enn_k: int = 3, majority_label: int | None = None) -> Dataset:
    """Drop majority rows whose class loses the vote of their enn_k nearest
    neighbors. Votes are computed against the original dataset and the
    removals applied atomically. Vote ties keep the row.
    """
    x = data.matrix()
    labels = data.require_labels()
    if data.n <= enn_k:
        raise DataError("need more rows than enn_k")
    if majority_label is None:
        counts = np.bincount(labels, minlength=2)
        majority_label = 0 if counts[0] >= counts[1] else 1
    dist = _pairwise_distances(x, x)
    keep = []
    for i in range(data.n):
        if labels[i] != majority_label:
            keep.append(i)
            continue
        nn = _k_nearest(dist[i], enn_k, exclude=i)
        votes = int(np.sum(labels[nn] == labels[i]))
        if 2 * votes >= enn_k:  # row's own class wins or ties the vote
            keep.append(i)
    return data.subset(keep)


def tomek_remove(data: Dataset, majority_label: int | None = None) -> Dataset:
    """Remove the majority member of every Tomek link (mutual single nearest
    neighbors of opposite class)."""
    x = data.matrix()
    labels = data.require_labels()
    if len(np.unique(labels)) < 2:
        raise DataError("both classes must be nonempty")
    if majority_label is None:
        counts = np.bincount(labels, minlength=2)
        majority_label = 0 if counts[0] >= counts[1] else 1
    dist = _pairwise_distances(x, x)
    nn = np.empty(data.n, dtype=int)
    for i in range(data.n):
        nn[i] = _k_nearest(dist[i], 1, exclude=i)[0]
    drop = set()
    for a in range(data.n):
        b = int(nn[a])
        if b > a and nn[b] == a and labels[a] != labels[b]:
            drop.add(a if labels[a] == majority_label else b)
    return data.subset([i for i in range(data.n) if i not in drop])


def smote_enn(
    data: Dataset,
    cfg: BalancerConfig,
    onehot_groups: Sequence[Sequence[int]] | None = None,
) -> Dataset:
    """SMOTE, then ENN cleanup over the full augmented set."""
    _, _, _, majority_label = _classes(data)
    grown = smote(data, cfg, onehot_groups)
    return enn_filter(grown, cfg.enn_k, majority_label=majority_label)


def smote_tomek(
    data: Dataset,
    cfg: BalancerConfig,
    onehot_groups: Sequence[Sequence[int]] | None = None,
) -> Dataset:
    """SMOTE, then Tomek-link removal over the full augmented set."""
    _, _, _, majority_label = _classes(data)
    grown = smote(data, cfg, onehot_groups)
    return tomek_remove(grown, majority_label=majority_label)


def allocate_adaptive(r: np.ndarray | Sequence[float], total: int) -> np.ndarray:
    """Distribute `total` synthetic samples proportionally to hardness ratios,
    rounding half-up; uniform fallback when every ratio is zero."""
    r = np.asarray(r, dtype=float)
    if r.sum() > 0:
        weights = r / r.sum()
        return np.array([round_half_up(w * total) for w in weights], dtype=int)
    base, rem = divmod(max(total, 0), len(r))
    alloc = np.full(len(r), base, dtype=int)
    alloc[:rem] += 1
    return alloc


def _adasyn_plan(data: Dataset, cfg: BalancerConfig):
    """(minority global indices, minority matrix, per-row sample counts)."""
    x = data.matrix()
    labels = data.require_labels()
    pos, neg, minority_label, majority_label = _classes(data)
    minority_idx = pos if minority_label == 1 else neg
    if len(minority_idx) <= cfg.k_neighbors:
        raise DataError(
            f"minority size {len(minority_idx)} must exceed k_neighbors {cfg.k_neighbors}"
        )
    majority_count = data.n - len(minority_idx)
    total = round_half_up((majority_count - len(minority_idx)) * cfg.target_ratio)
    minority = x[minority_idx]

    # hardness ratio per minority row: majority share among its kNN over all rows
    dist_all = _pairwise_distances(minority, x)
    r = np.empty(len(minority_idx))
    for local, global_i in enumerate(minority_idx):
        nn = _k_nearest(dist_all[local], cfg.k_neighbors, exclude=int(global_i))
        r[local] = np.sum(labels[nn] == majority_label) / cfg.k_neighbors

    return minority_idx, minority, minority_label, allocate_adaptive(r, total)


def adasyn(
    data: Dataset,
    cfg: BalancerConfig,
    onehot_groups: Sequence[Sequence[int]] | None = None,
) -> Dataset:
    """Density-adaptive oversampling: minority rows with more majority-class
    neighbors receive proportionally more synthetic samples.
    """
    x = data.matrix()
    _check_unit_box(x)
    labels = data.require_labels()
    minority_idx, minority, minority_label, alloc = _adasyn_plan(data, cfg)

    dist_min = _pairwise_distances(minority, minority)
    neighbor_table = [
        _k_nearest(dist_min[i], cfg.k_neighbors, exclude=i) for i in range(len(minority_idx))
    ]
    rng = np.random.default_rng(cfg.seed)
    synth_rows = []
    for local, count in enumerate(alloc):
        for _ in range(int(count)):
            nn_local = int(neighbor_table[local][int(rng.integers(cfg.k_neighbors))])
            u = float(rng.uniform())
            synth_rows.append(minority[local] + u * (minority[nn_local] - minority[local]))

    if synth_rows:
        synth = np.vstack(synth_rows)
        if onehot_groups:
            synth = project_onehot(synth, onehot_groups)
        new_x = np.vstack([x, synth])
        new_labels = np.concatenate([labels, np.full(len(synth_rows), minority_label)])
    else:
        new_x, new_labels = x, labels
    return dataset_from_matrix(new_x, new_labels, schema=data.schema)


def adasyn_allocation(data: Dataset, cfg: BalancerConfig) -> np.ndarray:
    """Per-minority-row synthetic sample counts (exposed for verification)."""
    return _adasyn_plan(data, cfg)[3]


def balance(
    data: Dataset,
    cfg: BalancerConfig,
    onehot_groups: Sequence[Sequence[int]] | None = None,
    gan_overrides: dict | None = None,
) -> Dataset:
    """Dispatch on cfg.method; `none` returns the input unchanged."""
    if cfg.method == "none":
        return data
    if cfg.method == "smote":
        return smote(data, cfg, onehot_groups)
    if cfg.method == "smote_enn":
        return smote_enn(data, cfg, onehot_groups)
    if cfg.method == "smote_tomek":
        return smote_tomek(data, cfg, onehot_groups)
    if cfg.method == "adasyn":
        return adasyn(data, cfg, onehot_groups)
    from . import augment  # GAN methods live in their own module

    return augment.oversample_gan(data, cfg, onehot_groups, overrides=gan_overrides)


def save_balanced(
    original: Dataset,
    balanced: Dataset,
    cfg: BalancerConfig,
    out_dir: str | Path,
    label_column: str = "label",
) -> None:
    """Persist the balanced set plus a manifest of method, counts and seed."""
    from .data import save_csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_csv(balanced, out / "balanced.csv", label_column)

    def counts(ds: Dataset) -> dict:
        labels = ds.require_labels()
        return {"negative": int(np.sum(labels == 0)), "positive": int(np.sum(labels == 1))}

    manifest = {
        "format": "fraudkit.balance/1",
        "method": cfg.method,
        "seed": cfg.seed,
        "before": counts(original),
        "after": counts(balanced),
    }
    (out / "balance_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
