"""Wrapper feature selection: cross-validated AUC criterion, GA and binary PSO.

Each run fixes its fold assignment once (derived from the run seed), so the
criterion is a deterministic function of the mask inside a run and can be
memoised. All random draws happen in the driving process in a fixed order;
only criterion evaluations are pure, which keeps results independent of the
number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from csmescreen.dataset import FeatureMask, FoldAssignment, LabeledDataset, stratified_kfold
from csmescreen.metrics import auc, improvement_pi, reduction_xi, roc_curve
from csmescreen.neighbors import KnnConfig, knn_scores, nearest_rows, squared_distances
from csmescreen.seeding import derive_seed, rng_for

ALGORITHMS = ("ga", "bpso")


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 30
    fe_budget: int = 6000
    runs_R: int = 40
    cv_folds: int = 10
    knn: KnnConfig = field(default_factory=KnnConfig)
    ga_pc: float = 0.8
    ga_pm: float | None = None  # None -> 1/n
    ga_mix: float = 0.5
    bpso_omega: float = 1.0
    bpso_c1: float = 2.0
    bpso_c2: float = 2.0
    bpso_vmax: float = 6.0
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.fe_budget < self.population_size:
            raise ValueError("fe_budget must be >= population_size")
        if self.runs_R < 1:
            raise ValueError("runs_R must be >= 1")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        for name in ("ga_pc", "ga_mix"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.ga_pm is not None and not 0.0 <= self.ga_pm <= 1.0:
            raise ValueError("ga_pm must lie in [0, 1]")
        if not self.bpso_vmax > 0:
            raise ValueError("bpso_vmax must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def generations(self) -> int:
        return self.fe_budget // self.population_size

    def mutation_rate(self, n: int) -> float:
        return 1.0 / n if self.ga_pm is None else self.ga_pm


@dataclass(frozen=True)
class RunResult:
    best_mask: FeatureMask
    best_j: float
    cardinality: int
    history: tuple[float, ...]
    evaluations: int
    run_seed: int


@dataclass(frozen=True)
class SelectionReport:
    algorithm: str
    n: int
    per_run: tuple[RunResult, ...]
    best_overall: FeatureMask
    best_run: int
    j_prime: float
    j_mean: float
    j_sd: float
    j_best: float
    xi_mean: float
    xi_sd: float
    xi_best: int
    pi_percent: float
    xi_percent: float

    def to_text(self) -> str:
        """Key-value block followed by a per-run table; floats are written with repr."""
        kv = [
            ("algorithm", self.algorithm),
            ("n", self.n),
            ("runs", len(self.per_run)),
            ("j_prime", repr(self.j_prime)),
            ("j_mean", repr(self.j_mean)),
            ("j_sd", repr(self.j_sd)),
            ("j_best", repr(self.j_best)),
            ("pi_percent", repr(self.pi_percent)),
            ("xi_mean", repr(self.xi_mean)),
            ("xi_sd", repr(self.xi_sd)),
            ("xi_best", self.xi_best),
            ("xi_percent", repr(self.xi_percent)),
            ("best_run", self.best_run),
            ("best_overall", " ".join(map(str, self.best_overall.indices()))),
        ]
        lines = [f"{k}={v}" for k, v in kv]
        lines.append("")
        lines.append("run,run_seed,best_j,cardinality,evaluations,selected")
        for i, r in enumerate(self.per_run):
            sel = " ".join(map(str, r.best_mask.indices()))
            lines.append(f"{i},{r.run_seed},{r.best_j!r},{r.cardinality},{r.evaluations},{sel}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        """Aligned human-readable rendering with the same numbers as :meth:`to_text`."""
        rows = [
            ("J mean", f"{self.j_mean:.6g}"),
            ("J SD", f"{self.j_sd:.6g}"),
            ("J best", f"{self.j_best:.6g}"),
            ("J full set", f"{self.j_prime:.6g}"),
            ("PI (%)", f"{self.pi_percent:.2f}"),
            ("xi mean", f"{self.xi_mean:.2f}"),
            ("xi SD", f"{self.xi_sd:.2f}"),
            ("xi best", f"{self.xi_best}"),
            ("Xi (%)", f"{self.xi_percent:.2f}"),
        ]
        width = max(len(r[0]) for r in rows)
        out = [f"{self.algorithm.upper()} feature selection, n={self.n}, R={len(self.per_run)}"]
        out += [f"  {k:<{width}}  {v}" for k, v in rows]
        out.append(f"  best subset (run {self.best_run}): {self.best_overall.cardinality} features")
        return "\n".join(out) + "\n"


# -- criterion -------------------------------------------------------------------


def _fold_aucs_reference(x: np.ndarray, labels: np.ndarray, folds: FoldAssignment, knn: KnnConfig) -> list[float]:
    out = []
    for f in range(folds.k):
        te, tr = folds.test_rows(f), folds.train_rows(f)
        train = LabeledDataset(ids=tuple(map(str, tr)), features=x[tr], labels=labels[tr])
        scores = knn_scores(train, x[te], knn)
        out.append(auc(roc_curve(labels[te], scores)))
    return out


def fold_aucs(mask: FeatureMask, train: LabeledDataset, folds: FoldAssignment, knn: KnnConfig = KnnConfig()) -> np.ndarray:
    """Held-out AUC of each fold for the features selected by ``mask``.

    All folds are scored from one distance matrix in which same-fold pairs are
    set to +inf, so every sample's k neighbours come from the other folds with
    the same lower-index tie-break as a per-fold search. Each fold's AUC is the
    rank statistic over the k+1 possible score levels.
    """
    if folds.fold_of.shape[0] != len(train):
        raise ValueError("fold assignment does not match dataset size")
    if len(mask) != train.n:
        raise ValueError(f"mask length {len(mask)} does not match feature count {train.n}")
    if mask.cardinality == 0:
        raise ValueError("empty subset: mask selects no features")
    x = train.features[:, mask.bits]
    labels = train.labels
    if knn.normalize:
        return np.array(_fold_aucs_reference(x, labels, folds, knn))
    fold_of = folds.fold_of
    train_size = len(train) - np.bincount(fold_of, minlength=folds.k)
    if knn.k > train_size.min():
        raise ValueError(f"k={knn.k} exceeds fold training size {train_size.min()}")
    d = squared_distances(x, x)
    d[fold_of[:, None] == fold_of[None, :]] = np.inf
    votes = labels[nearest_rows(d, knn.k)].sum(axis=1)

    levels = knn.k + 1
    pos = np.bincount(fold_of[labels == 1] * levels + votes[labels == 1], minlength=folds.k * levels)
    neg = np.bincount(fold_of[labels == 0] * levels + votes[labels == 0], minlength=folds.k * levels)
    pos = pos.reshape(folds.k, levels)
    neg = neg.reshape(folds.k, levels)
    n_pos = pos.sum(axis=1)
    n_neg = neg.sum(axis=1)
    if (n_pos == 0).any() or (n_neg == 0).any():
        raise ValueError("every fold needs both classes")
    neg_below = np.cumsum(neg, axis=1) - neg
    wins = (pos * neg_below).sum(axis=1) + 0.5 * (pos * neg).sum(axis=1)
    return wins / (n_pos * n_neg)


def criterion_from_aucs(aucs) -> float:
    """Criterion value from per-fold AUCs: one minus their mean."""
    aucs = np.asarray(aucs, dtype=float)
    return float(1.0 - aucs.sum() / aucs.size)


def criterion(mask: FeatureMask, train: LabeledDataset, folds: FoldAssignment, knn: KnnConfig = KnnConfig()) -> float:
    """1 - mean held-out AUC over the folds; lower is better."""
    return criterion_from_aucs(fold_aucs(mask, train, folds, knn))


class CriterionEvaluator:
    """Memoised criterion for one (dataset, folds, k-NN) triple.

    ``evaluations`` counts logical function evaluations, cache hits included.
    """

    def __init__(self, train: LabeledDataset, folds: FoldAssignment, knn: KnnConfig):
        self.train = train
        self.folds = folds
        self.knn = knn
        self.evaluations = 0
        self._cache: dict[bytes, float] = {}

    def __call__(self, bits: np.ndarray) -> float:
        self.evaluations += 1
        key = np.packbits(bits).tobytes()
        j = self._cache.get(key)
        if j is None:
            j = criterion(FeatureMask(bits), self.train, self.folds, self.knn)
            self._cache[key] = j
        return j


def run_fold_seed(run_seed: int) -> int:
    """Seed of the fold assignment a run uses for every criterion call."""
    return derive_seed(run_seed, 0)


def run_folds(train: LabeledDataset, cfg: SearchConfig, run_seed: int) -> FoldAssignment:
    return stratified_kfold(train, cfg.cv_folds, run_fold_seed(run_seed))


def _repair(bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # an empty subset cannot be evaluated; switch on one random feature
    if not bits.any():
        bits[rng.integers(bits.size)] = True
    return bits


class _BestTracker:
    """Best-ever mask; equal J prefers the smaller subset."""

    def __init__(self):
        self.j = math.inf
        self.bits: np.ndarray | None = None

    def offer(self, bits: np.ndarray, j: float) -> None:
        if j < self.j or (j == self.j and bits.sum() < self.bits.sum()):
            self.j = j
            self.bits = bits.copy()


def _better(j_a: float, card_a: int, j_b: float, card_b: int) -> bool:
    return j_a < j_b or (j_a == j_b and card_a < card_b)


def _check(train: LabeledDataset) -> None:
    if train.n < 2:
        raise ValueError("feature selection needs at least two features")
    train.require_both_classes()


def ga_run(train: LabeledDataset, cfg: SearchConfig, run_seed: int, evaluate: Callable | None = None) -> RunResult:
    """One generational GA run.

    Binary tournament selection, parameterised-uniform crossover (applied with
    probability ``ga_pc``, each bit exchanged with probability ``ga_mix``),
    per-bit flip mutation and single-individual elitism. Each generation costs
    ``population_size`` evaluations.
    """
    _check(train)
    n, size = train.n, cfg.population_size
    if evaluate is None:
        evaluate = CriterionEvaluator(train, run_folds(train, cfg, run_seed), cfg.knn)
    rng = rng_for(run_seed, 1)
    pm = cfg.mutation_rate(n)
    best = _BestTracker()
    history = []
    used = 0

    pop = rng.random((size, n)) < 0.5
    for i in range(size):
        while not pop[i].any():
            pop[i] = rng.random(n) < 0.5
    fit = np.empty(size)
    for i in range(size):
        fit[i] = evaluate(pop[i])
        best.offer(pop[i], fit[i])
    used += size
    history.append(best.j)

    def tournament() -> int:
        a, b = (int(i) for i in rng.choice(size, 2, replace=False))
        return b if _better(fit[b], pop[b].sum(), fit[a], pop[a].sum()) else a

    for _ in range(1, cfg.generations):
        elite = int(np.lexsort((pop.sum(axis=1), fit))[0])
        children = []
        while len(children) < size:
            pa, pb = pop[tournament()], pop[tournament()]
            c1, c2 = pa.copy(), pb.copy()
            if rng.random() < cfg.ga_pc:
                swap = rng.random(n) < cfg.ga_mix
                c1[swap], c2[swap] = pb[swap], pa[swap]
            for c in (c1, c2):
                c ^= rng.random(n) < pm
                children.append(_repair(c, rng))
        new_pop = np.array(children[:size])
        new_fit = np.empty(size)
        for i in range(size):
            new_fit[i] = evaluate(new_pop[i])
            best.offer(new_pop[i], new_fit[i])
        used += size
        best_child = int(np.lexsort((new_pop.sum(axis=1), new_fit))[0])
        if _better(fit[elite], pop[elite].sum(), new_fit[best_child], new_pop[best_child].sum()):
            worst = int(np.lexsort((-new_pop.sum(axis=1), -new_fit))[0])
            new_pop[worst] = pop[elite]
            new_fit[worst] = fit[elite]
        pop, fit = new_pop, new_fit
        history.append(best.j)

    mask = FeatureMask(best.bits)
    return RunResult(mask, float(best.j), mask.cardinality, tuple(history), used, run_seed)


def bpso_run(train: LabeledDataset, cfg: SearchConfig, run_seed: int, evaluate: Callable | None = None) -> RunResult:
    """One binary PSO run with global-best topology and sigmoid position sampling."""
    _check(train)
    n, size = train.n, cfg.population_size
    if evaluate is None:
        evaluate = CriterionEvaluator(train, run_folds(train, cfg, run_seed), cfg.knn)
    rng = rng_for(run_seed, 2)
    vmax = cfg.bpso_vmax
    best = _BestTracker()
    history = []
    used = 0

    x = rng.random((size, n)) < 0.5
    for i in range(size):
        _repair(x[i], rng)
    v = rng.uniform(-vmax, vmax, (size, n))
    pbest = x.copy()
    pbest_j = np.empty(size)
    for i in range(size):
        pbest_j[i] = evaluate(x[i])
        best.offer(x[i], pbest_j[i])
    used += size
    history.append(best.j)

    for _ in range(1, cfg.generations):
        gbest = best.bits.astype(float)
        u1 = rng.random((size, n))
        u2 = rng.random((size, n))
        xf = x.astype(float)
        v = cfg.bpso_omega * v + cfg.bpso_c1 * u1 * (pbest - xf) + cfg.bpso_c2 * u2 * (gbest - xf)
        np.clip(v, -vmax, vmax, out=v)
        x = rng.random((size, n)) < 1.0 / (1.0 + np.exp(-v))
        for i in range(size):
            _repair(x[i], rng)
        for i in range(size):
            j = evaluate(x[i])
            if _better(j, x[i].sum(), pbest_j[i], pbest[i].sum()):
                pbest[i] = x[i]
                pbest_j[i] = j
            best.offer(x[i], j)
        used += size
        history.append(best.j)

    mask = FeatureMask(best.bits)
    return RunResult(mask, float(best.j), mask.cardinality, tuple(history), used, run_seed)


_RUNNERS = {"ga": ga_run, "bpso": bpso_run}


def run_seeds(cfg: SearchConfig) -> list[int]:
    return [derive_seed(cfg.master_seed, k) for k in range(cfg.runs_R)]


def _one_run(args) -> tuple[RunResult, float]:
    algorithm, train, cfg, seed = args
    evaluate = CriterionEvaluator(train, run_folds(train, cfg, seed), cfg.knn)
    result = _RUNNERS[algorithm](train, cfg, seed, evaluate)
    j_full = criterion(FeatureMask.all_ones(train.n), train, evaluate.folds, cfg.knn)
    return result, j_full


def multi_run_select(algorithm: str, train: LabeledDataset, cfg: SearchConfig) -> SelectionReport:
    """R independent runs, aggregated.

    The full-set criterion is averaged over the same per-run fold assignments
    the runs themselves used. With ``cfg.workers > 1`` runs are spread over a
    process pool; results do not depend on the worker count.
    """
    if algorithm not in _RUNNERS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {{{', '.join(ALGORITHMS)}}}")
    jobs = [(algorithm, train, cfg, s) for s in run_seeds(cfg)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as ex:
            outcomes = list(ex.map(_one_run, jobs))
    else:
        outcomes = [_one_run(job) for job in jobs]
    per_run = tuple(o[0] for o in outcomes)
    j_prime = float(np.mean([o[1] for o in outcomes]))
    return summarize_runs(algorithm, train.n, per_run, j_prime)


def summarize_runs(algorithm: str, n: int, per_run: tuple[RunResult, ...], j_prime: float) -> SelectionReport:
    js = np.array([r.best_j for r in per_run])
    xis = np.array([r.cardinality for r in per_run], dtype=float)
    ddof = 1 if len(per_run) > 1 else 0
    best_run = min(range(len(per_run)), key=lambda i: (per_run[i].best_j, per_run[i].cardinality, i))
    j_mean = float(js.mean())
    xi_mean = float(xis.mean())
    return SelectionReport(
        algorithm=algorithm,
        n=n,
        per_run=per_run,
        best_overall=per_run[best_run].best_mask,
        best_run=best_run,
        j_prime=j_prime,
        j_mean=j_mean,
        j_sd=float(js.std(ddof=ddof)),
        j_best=float(js.min()),
        xi_mean=xi_mean,
        xi_sd=float(xis.std(ddof=ddof)),
        xi_best=per_run[best_run].cardinality,
        pi_percent=improvement_pi(j_prime, j_mean) if j_prime > 0 else math.nan,
        xi_percent=reduction_xi(n, xi_mean),
    )


def with_desk_scale(cfg: SearchConfig) -> SearchConfig:
    """Shrunken budget for quick runs: R=4, 600 evaluations per run."""
    return replace(cfg, runs_R=4, fe_budget=max(cfg.population_size, 600))
