"""SMOTE: synthetic minority oversampling in feature space."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from csmescreen.dataset import LabeledDataset
from csmescreen.neighbors import nearest_rows, squared_distances
from csmescreen.seeding import rng_for


@dataclass(frozen=True)
class OversampleConfig:
    r: float = 1.0
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"oversampling ratio r must be >= 0, got {self.r}")
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


@dataclass(frozen=True)
class SyntheticDraw:
    """Provenance of one synthetic row: ``parent + lam * (neighbor - parent)``.

    ``parent`` and ``neighbor`` are row indices into the input dataset.
    """

    visit: int
    parent: int
    neighbor: int
    lam: float


def synthetic_count(n_minority: int, r: float) -> int:
    """Number of synthetic rows for ratio ``r`` (half-up rounding)."""
    if n_minority < 0 or not r >= 0:
        raise ValueError("n_minority and r must be non-negative")
    return int(math.floor(r * n_minority + 0.5))


def minority_neighbors(ds: LabeledDataset, k: int) -> np.ndarray:
    """For each minority row, its k nearest other minority rows (dataset row indices).

    Ties in distance go to the lower row index.
    """
    minority = ds.class_indices(1)
    x = ds.features[minority]
    d = squared_distances(x, x)
    np.fill_diagonal(d, np.inf)
    return minority[nearest_rows(d, k)]


def plan_synthetic(ds: LabeledDataset, cfg: OversampleConfig) -> list[SyntheticDraw]:
    """Decide parent, neighbour and interpolation weight for every synthetic row.

    Minority rows are visited cyclically, one synthetic sample per visit. The
    draws for visit ``v`` come from a generator keyed on (seed, parent row, v),
    so each row is independent of how many others are produced or in what order.
    """
    minority = ds.class_indices(1)
    if cfg.r > 0 and minority.size == 0:
        raise ValueError("r > 0 but the dataset has no minority samples")
    if cfg.r == 0:
        return []
    if minority.size < cfg.k_neighbors + 1:
        raise ValueError(
            f"minority class has {minority.size} samples; k_neighbors={cfg.k_neighbors} needs at least {cfg.k_neighbors + 1}"
        )
    count = synthetic_count(minority.size, cfg.r)
    nbrs = minority_neighbors(ds, cfg.k_neighbors)
    plan = []
    for v in range(count):
        slot = v % minority.size
        parent = int(minority[slot])
        rng = rng_for(cfg.seed, parent, v)
        neighbor = int(nbrs[slot, rng.integers(cfg.k_neighbors)])
        plan.append(SyntheticDraw(visit=v, parent=parent, neighbor=neighbor, lam=float(rng.random())))
    return plan


def smote(ds: LabeledDataset, cfg: OversampleConfig) -> LabeledDataset:
    """Append ``synthetic_count(n_minority, r)`` interpolated minority rows.

    Original rows are kept unchanged and in order; synthetic rows follow with
    ids ``syn:<visit>:<parent id>``.
    """
    plan = plan_synthetic(ds, cfg)
    if not plan:
        return ds
    x = ds.features
    parents = np.array([p.parent for p in plan])
    neighbors = np.array([p.neighbor for p in plan])
    lam = np.array([p.lam for p in plan])[:, None]
    syn = x[parents] + lam * (x[neighbors] - x[parents])
    ids = ds.ids + tuple(f"syn:{p.visit}:{ds.ids[p.parent]}" for p in plan)
    return LabeledDataset(
        ids=ids,
        features=np.vstack([x, syn]),
        labels=np.concatenate([ds.labels, np.ones(len(plan), dtype=np.int8)]),
        source_tag=ds.source_tag,
    )
