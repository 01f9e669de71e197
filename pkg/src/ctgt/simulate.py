"""Synthetic data generation and family-wise error rate simulation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bnb import DEFAULT_MAX_ITERATIONS, REJECT, analyze_collection
from .linmodel import Dataset, SpectrumProvider, feature_stats, fit_null
from .shortcut import DEFAULT_EPSILON

MAX_REDRAWS = 100


def logistic_dataset(n: int, m: int, effect: float = 0.0, n_signal: int = 1,
                     rng: np.random.Generator | None = None,
                     confounders: int = 0) -> Dataset:
    """Draw a dataset with standard-normal features and a logistic response.

    The log-odds are `effect * (sum of the first n_signal feature
    columns) / sqrt(n_signal)`, so the per-dataset signal strength does
    not grow with n_signal; effect 0 gives a global null with response
    probability one half.  Confounder columns, when requested, are extra
    standard-normal covariates with no effect on the response.  Draws
    where the response lands in a single class are redrawn (response
    only) so the result is always a valid two-class dataset.
    """
    if rng is None:
        rng = np.random.default_rng()
    if n_signal < 1 or n_signal > m:
        raise ValueError("n_signal must be in [1, m]")
    X = rng.standard_normal((n, m))
    C = rng.standard_normal((n, confounders)) if confounders else None
    logit = effect * X[:, :n_signal].sum(axis=1) / np.sqrt(n_signal)
    p = 1.0 / (1.0 + np.exp(-logit))
    for _ in range(MAX_REDRAWS):
        y = (rng.uniform(size=n) < p).astype(float)
        if 0.0 < y.mean() < 1.0:
            break
    else:
        raise RuntimeError("could not draw a two-class response; "
                           "n may be too small for this effect size")
    Z = np.ones((n, 1)) if C is None else np.column_stack([np.ones(n), C])
    names = tuple(f"f{j + 1}" for j in range(m))
    ids = tuple(f"s{i + 1}" for i in range(n))
    return Dataset(y=y, Z=Z, X=X, feature_names=names, sample_ids=ids)


def random_index_sets(m: int, n_sets: int, rng: np.random.Generator,
                      min_size: int = 2, max_size: int | None = None
                      ) -> list[tuple[int, ...]]:
    """Random feature-index sets, sizes uniform on [min_size, max_size]."""
    if max_size is None:
        max_size = max(min_size, m // 2)
    max_size = min(max_size, m)
    if min_size > max_size:
        raise ValueError("min_size exceeds max_size")
    out = []
    for _ in range(n_sets):
        k = int(rng.integers(min_size, max_size + 1))
        out.append(tuple(sorted(rng.choice(m, size=k, replace=False))))
    return out


@dataclass(frozen=True)
class FwerSummary:
    """Outcome of a family-wise error rate simulation."""
    replicates: int
    n_failed: int                 # replicates aborted by numerical errors
    n_any_false_rejection: int
    fwer_estimate: float
    std_error: float              # binomial SE of the estimate
    total_null_rejections: int
    total_null_sets: int
    avg_true_rejections: float    # rejected signal-overlapping sets/replicate
    alpha: float
    effect: float

    def __str__(self) -> str:
        return (f"FWER {self.fwer_estimate:.4f} +/- {self.std_error:.4f} "
                f"({self.n_any_false_rejection}/{self.replicates} replicates "
                f"with a false rejection; alpha={self.alpha})")


def _one_replicate(seed_seq, n, m, n_pathways, effect, n_signal, alpha,
                   epsilon, max_iterations):
    rng = np.random.default_rng(seed_seq)
    data = logistic_dataset(n, m, effect=effect, n_signal=n_signal, rng=rng)
    null = fit_null(data)
    stats = feature_stats(data, null)
    provider = SpectrumProvider(data, null)
    sets = random_index_sets(m, n_pathways, rng)
    collection = [(f"p{j + 1}", members) for j, members in enumerate(sets)]
    rows = analyze_collection(stats, provider, collection, alpha,
                              epsilon=epsilon, max_iterations=max_iterations)
    signal = set(range(n_signal)) if effect != 0.0 else set()
    false_hits = 0
    null_sets = 0
    true_hits = 0
    for row, members in zip(rows, sets):
        if signal & set(members):
            if row.decision == REJECT:
                true_hits += 1    # set overlaps the signal: not a true null
            continue
        null_sets += 1
        if row.decision == REJECT:
            false_hits += 1
    return false_hits, null_sets, true_hits


def fwer_simulation(n: int = 50, m: int = 20, n_pathways: int = 30,
                    replicates: int = 1000, effect: float = 0.0,
                    n_signal: int = 1, alpha: float = 0.05,
                    epsilon: float = DEFAULT_EPSILON,
                    max_iterations: int = DEFAULT_MAX_ITERATIONS,
                    seed: int | None = None, workers: int = 1
                    ) -> FwerSummary:
    """Estimate the family-wise error rate over true-null pathway sets.

    Each replicate draws a fresh dataset and a fresh random pathway
    collection, runs the iterative shortcut on every set, and counts a
    family-wise error when any set containing no signal feature is
    rejected.  With effect 0 every set is a true null.  Replicates use
    independent spawned seeds, so results are reproducible for a given
    seed regardless of worker count.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    children = np.random.SeedSequence(seed).spawn(replicates)

    def run(child):
        try:
            return _one_replicate(child, n, m, n_pathways, effect, n_signal,
                                  alpha, epsilon, max_iterations)
        except (RuntimeError, ValueError):
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, children))
    else:
        outcomes = [run(child) for child in children]

    ok = [o for o in outcomes if o is not None]
    n_failed = replicates - len(ok)
    if not ok:
        raise RuntimeError("every replicate failed")
    any_false = sum(1 for hits, _, _ in ok if hits > 0)
    est = any_false / len(ok)
    se = float(np.sqrt(est * (1.0 - est) / len(ok)))
    return FwerSummary(replicates=len(ok), n_failed=n_failed,
                       n_any_false_rejection=any_false, fwer_estimate=est,
                       std_error=se,
                       total_null_rejections=sum(h for h, _, _ in ok),
                       total_null_sets=sum(s for _, s, _ in ok),
                       avg_true_rejections=sum(t for _, _, t in ok) / len(ok),
                       alpha=alpha, effect=effect)
