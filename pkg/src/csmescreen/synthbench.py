"""Synthetic benchmarks with a planted informative-feature subset, plus exhaustive oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from csmescreen.dataset import FeatureMask, FoldAssignment, LabeledDataset
from csmescreen.neighbors import KnnConfig
from csmescreen.search import criterion
from csmescreen.seeding import rng_for

MAX_EXHAUSTIVE_FEATURES = 16


@dataclass(frozen=True)
class SynthSpec:
    """Gaussian planted-subset design.

    ``informative`` holds 0-based column indices. Informative columns have
    class means at +/- ``class_separation``/2 with unit SD (``minority_sd``
    for the minority class); the rest are N(0, ``noise_sd``) for both classes.
    """

    n_features: int = 12
    informative: tuple[int, ...] = (0, 1, 2)
    n_minority: int = 40
    n_majority: int = 60
    class_separation: float = 2.0
    noise_sd: float = 1.0
    seed: int = 0
    minority_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "informative", tuple(int(i) for i in self.informative))
        if not self.informative:
            raise ValueError("informative must be non-empty")
        if any(not 0 <= i < self.n_features for i in self.informative):
            raise ValueError("informative indices must lie in [0, n_features)")
        if len(set(self.informative)) != len(self.informative):
            raise ValueError("informative indices must be distinct")
        if self.n_minority < 1 or self.n_majority < 1:
            raise ValueError("class counts must be >= 1")
        if self.class_separation < 0 or self.noise_sd < 0 or self.minority_sd < 0:
            raise ValueError("class_separation, noise_sd and minority_sd must be >= 0")

    def planted_mask(self) -> FeatureMask:
        return FeatureMask.from_indices(self.n_features, [i + 1 for i in self.informative])


def generate(spec: SynthSpec) -> LabeledDataset:
    rng = rng_for(spec.seed, 7)
    n_total = spec.n_minority + spec.n_majority
    labels = np.r_[np.ones(spec.n_minority, dtype=np.int8), np.zeros(spec.n_majority, dtype=np.int8)]
    x = rng.normal(0.0, spec.noise_sd, (n_total, spec.n_features))
    inf = list(spec.informative)
    sign = np.where(labels == 1, 0.5, -0.5)[:, None]
    sd = np.where(labels == 1, spec.minority_sd, 1.0)[:, None]
    x[:, inf] = rng.normal(0.0, 1.0, (n_total, len(inf))) * sd + sign * spec.class_separation
    order = rng.permutation(n_total)
    return LabeledDataset(
        ids=tuple(f"s{i:05d}" for i in range(n_total)),
        features=x[order],
        labels=labels[order],
        source_tag=f"synthbench:seed={spec.seed}",
    )


def mask_from_int(code: int, n: int) -> FeatureMask:
    """Bit m-1 of ``code`` switches feature m on."""
    return FeatureMask(((code >> np.arange(n)) & 1).astype(bool))


def all_subset_scores(train: LabeledDataset, folds: FoldAssignment, knn: KnnConfig = KnnConfig()) -> np.ndarray:
    """Criterion of every non-empty mask; entry ``c - 1`` belongs to ``mask_from_int(c)``."""
    n = train.n
    if n > MAX_EXHAUSTIVE_FEATURES:
        raise ValueError(f"exhaustive search limited to n <= {MAX_EXHAUSTIVE_FEATURES}, got {n}")
    return np.array([criterion(mask_from_int(c, n), train, folds, knn) for c in range(1, 2**n)])


def exhaustive_best_subset(
    train: LabeledDataset, folds: FoldAssignment, knn: KnnConfig = KnnConfig()
) -> tuple[FeatureMask, float]:
    """Global minimum of the criterion; ties to fewer features, then lower mask code."""
    n = train.n
    scores = all_subset_scores(train, folds, knn)
    codes = np.arange(1, 2**n)
    card = np.array([bin(c).count("1") for c in codes])
    best = int(np.lexsort((codes, card, scores))[0])
    return mask_from_int(int(codes[best]), n), float(scores[best])


# -- presets used by the test suite and the CLI ---------------------------------


def planted_spec(seed: int) -> SynthSpec:
    """12 features, 3 informative, 40/60 classes."""
    return SynthSpec(n_features=12, informative=(0, 1, 2), n_minority=40, n_majority=60,
                     class_separation=1.5, noise_sd=1.0, seed=seed)


def imbalanced_spec(seed: int) -> SynthSpec:
    """1:3 minority/majority in 32 dimensions with a dispersed minority class.

    Minority rows have SD 2 on the 24 informative columns against unit SD for
    the majority, so at this dimension isolated minority points mostly see
    majority neighbours until the minority class is densified.
    """
    return SynthSpec(n_features=32, informative=tuple(range(24)), n_minority=60, n_majority=180,
                     class_separation=1.0, noise_sd=1.0, seed=seed, minority_sd=2.0)
