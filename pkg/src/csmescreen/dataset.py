"""Labeled feature datasets: file I/O, stratified splitting and column projection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from csmescreen.seeding import rng_for


class FeatureFileError(ValueError):
    """Raised for a malformed feature file; the message names the offending line."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix with aligned sample ids and binary labels (1 = minority)."""

    ids: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim == 1 and len(ids) == 0:
            feats = feats.reshape(0, 0)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValueError("labels must be a 1-D vector")
        if not (feats.shape[0] == len(ids) == labels.shape[0]):
            raise ValueError(
                f"row count mismatch: {feats.shape[0]} feature rows, "
                f"{len(ids)} ids, {labels.shape[0]} labels"
            )
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if not np.isfinite(feats).all():
            raise ValueError("features contain NaN or Inf")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int8)))

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_minority(self) -> int:
        return int(self.labels.sum())

    @property
    def n_majority(self) -> int:
        return len(self) - self.n_minority

    def class_indices(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def subset(self, rows: Sequence[int] | np.ndarray) -> LabeledDataset:
        rows = np.asarray(rows, dtype=int)
        return LabeledDataset(
            ids=tuple(self.ids[i] for i in rows),
            features=self.features[rows],
            labels=self.labels[rows],
            source_tag=self.source_tag,
        )

    def equals(self, other: LabeledDataset) -> bool:
        return (
            self.ids == other.ids
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    def require_both_classes(self) -> None:
        if self.n_minority == 0 or self.n_majority == 0:
            raise ValueError("dataset must contain both classes")


@dataclass(frozen=True, eq=False)
class FeatureMask:
    """Binary inclusion vector over the n feature columns."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1:
            raise ValueError("mask must be a 1-D bit vector")
        if bits.size and not np.isin(bits, (0, 1, True, False)).all():
            raise ValueError("mask bits must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(bits.astype(bool)))

    @classmethod
    def all_ones(cls, n: int) -> FeatureMask:
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> FeatureMask:
        """Build from 1-based feature indices."""
        bits = np.zeros(n, dtype=bool)
        for i in indices:
            if not 1 <= i <= n:
                raise ValueError(f"feature index {i} outside 1..{n}")
            bits[i - 1] = True
        return cls(bits)

    def __len__(self) -> int:
        return self.bits.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureMask) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    @property
    def cardinality(self) -> int:
        return int(self.bits.sum())

    def indices(self) -> list[int]:
        """Selected features as ascending 1-based indices."""
        return [int(i) + 1 for i in np.flatnonzero(self.bits)]

    def to_text(self) -> str:
        return f"n={len(self)}\n" + " ".join(str(i) for i in self.indices()) + "\n"

    @classmethod
    def from_text(cls, text: str) -> FeatureMask:
        lines = text.splitlines()
        if not lines or not lines[0].strip().startswith("n="):
            raise ValueError("mask file must start with 'n=<int>'")
        try:
            n = int(lines[0].strip()[2:])
            idx = [int(tok) for tok in " ".join(lines[1:]).split()]
        except ValueError as exc:
            raise ValueError(f"malformed mask file: {exc}") from None
        if idx != sorted(set(idx)):
            raise ValueError("mask indices must be strictly ascending")
        return cls.from_indices(n, idx)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> FeatureMask:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def __post_init__(self):
        object.__setattr__(self, "fold_of", _frozen(np.asarray(self.fold_of, dtype=int)))

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


# -- file format ---------------------------------------------------------------


def _format_real(x: float) -> str:
    # repr is the shortest string that round-trips the double exactly
    return repr(float(x))


def save_feature_file(ds: LabeledDataset, path: str | Path) -> None:
    lines = []
    if ds.source_tag:
        lines.append(f"#source={ds.source_tag}")
    lines.append(",".join(["id", "label"] + [f"f{j + 1}" for j in range(ds.n)]))
    for sid, lab, row in zip(ds.ids, ds.labels, ds.features):
        lines.append(",".join([sid, str(int(lab))] + [_format_real(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_feature_file(path: str | Path) -> LabeledDataset:
    """Parse a comma-delimited feature file.

    Layout: optional ``#source=<tag>`` line, header ``id,label,f1,...,fn``, then
    one row per sample. Any violation raises :class:`FeatureFileError` naming the
    1-based line number.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"feature file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()

    source_tag = ""
    lineno = 0
    if lines and lines[0].startswith("#"):
        if not lines[0].startswith("#source="):
            raise FeatureFileError("malformed metadata at line 1 (expected '#source=')")
        source_tag = lines[0][len("#source="):].strip()
        lineno = 1
    if lineno >= len(lines):
        raise FeatureFileError(f"missing header at line {lineno + 1}")

    header = [c.strip() for c in lines[lineno].split(",")]
    lineno += 1
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise FeatureFileError(f"malformed header at line {lineno}")
    n = len(header) - 2
    if header[2:] != [f"f{j + 1}" for j in range(n)]:
        raise FeatureFileError(f"malformed header at line {lineno}: feature columns must be f1..f{n}")

    ids: list[str] = []
    labels: list[int] = []
    rows: list[list[float]] = []
    seen: dict[str, int] = {}
    for offset, raw in enumerate(lines[lineno:]):
        ln = lineno + offset + 1
        if not raw.strip():
            continue
        cells = [c.strip() for c in raw.split(",")]
        if len(cells) != n + 2:
            raise FeatureFileError(f"ragged row at line {ln}: expected {n + 2} cells, got {len(cells)}")
        sid = cells[0]
        if not sid:
            raise FeatureFileError(f"empty id at line {ln}")
        if sid in seen:
            raise FeatureFileError(f"duplicate id {sid!r} at line {ln} (first seen at line {seen[sid]})")
        seen[sid] = ln
        if cells[1] not in ("0", "1"):
            raise FeatureFileError(f"label outside {{0,1}} at line {ln}: {cells[1]!r}")
        try:
            vals = [float(c) for c in cells[2:]]
        except ValueError:
            raise FeatureFileError(f"non-numeric cell at line {ln}") from None
        if not all(math.isfinite(v) for v in vals):
            raise FeatureFileError(f"non-finite value at line {ln}")
        ids.append(sid)
        labels.append(int(cells[1]))
        rows.append(vals)

    feats = np.array(rows, dtype=float).reshape(len(rows), n)
    return LabeledDataset(ids=tuple(ids), features=feats, labels=np.array(labels, dtype=np.int8), source_tag=source_tag)


# -- splitting -----------------------------------------------------------------


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: LabeledDataset, test_fraction: float, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Hold out ``round(count * test_fraction)`` samples of each class.

    Each class's indices are shuffled with a generator seeded from ``seed``;
    both halves keep the original row order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    test_rows = []
    for label in (1, 0):
        idx = ds.class_indices(label)
        if idx.size < 2:
            raise ValueError(f"class {label} has {idx.size} samples; at least 2 required")
        perm = rng_for(seed, label).permutation(idx)
        test_rows.append(perm[: _round_half_up(idx.size * test_fraction)])
    is_test = np.zeros(len(ds), dtype=bool)
    is_test[np.concatenate(test_rows)] = True
    return ds.subset(np.flatnonzero(~is_test)), ds.subset(np.flatnonzero(is_test))


def stratified_kfold(ds: LabeledDataset, k: int, seed: int) -> FoldAssignment:
    """Deal each shuffled class round-robin over ``k`` folds.

    The majority deal starts where the minority deal stopped so fold sizes stay
    within one of each other.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    fold_of = np.full(len(ds), -1, dtype=int)
    start = 0
    for label in (1, 0):
        idx = ds.class_indices(label)
        if idx.size < k:
            raise ValueError(f"class {label} has {idx.size} samples; at least k={k} required")
        perm = rng_for(seed, label).permutation(idx)
        fold_of[perm] = (start + np.arange(perm.size)) % k
        start = (start + perm.size) % k
    return FoldAssignment(fold_of=fold_of, k=k)


def project(ds: LabeledDataset, mask: FeatureMask) -> LabeledDataset:
    """Keep the columns whose mask bit is set, in original order."""
    if len(mask) != ds.n:
        raise ValueError(f"mask length {len(mask)} does not match feature count {ds.n}")
    if mask.cardinality == 0:
        raise ValueError("empty subset: mask selects no features")
    return LabeledDataset(
        ids=ds.ids,
        features=ds.features[:, mask.bits],
        labels=ds.labels,
        source_tag=ds.source_tag,
    )
