"""Single-step shortcut for closed testing of one feature set.

Closed testing rejects a set R (within universe F) only if every
superset S with R <= S <= F has its statistic above its own critical
value.  Instead of enumerating supersets, this module compares two
curves indexed by the level (weight sum) of a superset:

* a piecewise-linear convex lower envelope of superset statistics,
  built by adding complement features in ascending ratio order, and
* an upper envelope of superset critical values, obtained from a vector
  majorizing every superset spectrum at that level.

If the lower envelope stays above the upper one across the level range
(located by a monotone fixed-point iteration), every superset test must
reject and R is rejected.  If the curves cross, only the "staircase"
sets realizing the lower envelope are tested exactly: a failure among
them is a concrete non-rejection witness; if all pass, the comparison is
inconclusive (Unsure) and callers may branch (see bnb).

The upper envelope is conservative only for significance levels below
the pairwise validity threshold (see wchi2.alpha0_diagnostic); decisions
returned here assume alpha is below it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linmodel import FeatureStats, Spectrum, SpectrumProvider
from .wchi2 import WeightedChiSq, condense_weights

REJECT = "reject"
NOT_REJECT = "not_reject"
UNSURE = "unsure"

ABOVE = "above"
CROSS = "cross"

DEFAULT_EPSILON = 1e-4
CMAX_LEVEL_ROUND = 1e-9
# majorizing-vector entries below this fraction of the largest get merged;
# caps the weight ratio the mixture series must absorb
CONDENSE_REL_TOL = 5e-3


class InfeasibleLevelError(ValueError):
    """No majorizing vector exists at the requested level."""


class TargetOutOfRangeError(ValueError):
    """Curve inversion target lies outside the curve's value range."""


def _alpha_checked(alpha: float) -> float:
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    return float(alpha)


def _active_sorted(stats: FeatureStats, S, name: str) -> tuple[int, ...]:
    idx = tuple(sorted(set(int(i) for i in S)))
    if not idx:
        raise ValueError(f"{name} must be nonempty")
    if idx[0] < 0 or idx[-1] >= stats.g.size:
        raise ValueError(f"{name} contains an out-of-range feature index")
    if not stats.active[list(idx)].all():
        raise ValueError(f"{name} contains inactive features")
    return idx


def level(stats: FeatureStats, R) -> float:
    """Weight sum of the set; equals its spectrum's eigenvalue sum."""
    idx = _active_sorted(stats, R, "set")
    return float(stats.w[list(idx)].sum())


@dataclass(frozen=True)
class PiecewiseCurve:
    """Lower envelope of superset statistics as a function of level.

    Breakpoint k corresponds to the staircase set R plus the first k
    complement features in ascending ratio order (ties by index).  The
    curve is the linear interpolation of the breakpoints; segment slopes
    are exactly the ratios of the features being added, so the curve is
    convex and nondecreasing.
    """

    base: tuple[int, ...]              # R, ascending indices
    order: tuple[int, ...]             # complement in ascending-ratio order
    levels: np.ndarray                 # (v+1,) breakpoint levels
    stats: np.ndarray                  # (v+1,) breakpoint statistics
    slopes: np.ndarray                 # (v,) segment slopes

    def __post_init__(self):
        for name in ("levels", "stats", "slopes"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def base_level(self) -> float:
        return float(self.levels[0])

    @property
    def base_stat(self) -> float:
        return float(self.stats[0])

    @property
    def top_level(self) -> float:
        return float(self.levels[-1])

    @property
    def top_stat(self) -> float:
        return float(self.stats[-1])

    @property
    def breakpoints(self) -> list[tuple[float, float, float]]:
        """(level, stat, slope-of-next-segment) per breakpoint; last slope nan."""
        slopes = np.append(self.slopes, np.nan)
        return [(float(l), float(s), float(q))
                for l, s, q in zip(self.levels, self.stats, slopes)]

    def staircase(self, k: int) -> tuple[int, ...]:
        """The set realizing breakpoint k: base plus first k ordered features."""
        if not 0 <= k <= len(self.order):
            raise ValueError("staircase index out of range")
        return tuple(sorted(self.base + self.order[:k]))

    def evaluate(self, lvl):
        """Curve value at one or more levels inside [base_level, top_level]."""
        arr = np.asarray(lvl, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        tol = 1e-9 * max(1.0, self.top_level)
        if np.any(arr < self.base_level - tol) or np.any(arr > self.top_level + tol):
            raise TargetOutOfRangeError("level outside the curve's range")
        arr = np.clip(arr, self.base_level, self.top_level)
        out = np.interp(arr, self.levels, self.stats)
        return float(out[0]) if scalar else out


def gmin_curve(stats: FeatureStats, R, F) -> PiecewiseCurve:
    """Build the statistic lower envelope for supersets of R within F.

    Complement features enter in ascending ratio order; among equal
    ratios the lower feature index goes first.  Requires R to be a proper
    subset of F (an empty complement leaves no curve to build).
    """
    base = _active_sorted(stats, R, "base set")
    top = _active_sorted(stats, F, "universe")
    if not set(base) <= set(top):
        raise ValueError("base set must be contained in the universe")
    comp = np.array(sorted(set(top) - set(base)), dtype=int)
    if comp.size == 0:
        raise ValueError("universe equals the base set; no curve to build")
    order = comp[np.argsort(stats.q[comp], kind="stable")]
    levels = np.concatenate(([stats.w[list(base)].sum()],
                             stats.w[order])).cumsum()
    stat_vals = np.concatenate(([stats.g[list(base)].sum()],
                                stats.g[order])).cumsum()
    return PiecewiseCurve(base=base, order=tuple(int(i) for i in order),
                          levels=levels, stats=stat_vals,
                          slopes=np.asarray(stats.q[order], dtype=float))


def inverse_gmin(curve: PiecewiseCurve, target: float) -> float:
    """Largest level at which the curve equals `target`.

    On flat segments this is the supremum (right edge of the flat run).
    Targets outside [base_stat, top_stat] raise TargetOutOfRangeError;
    a 1e-9-relative float tolerance is absorbed by clipping.
    """
    tol = 1e-9 * max(1.0, curve.top_stat)
    if target < curve.base_stat - tol or target > curve.top_stat + tol:
        raise TargetOutOfRangeError(
            f"target {target!r} outside curve value range "
            f"[{curve.base_stat!r}, {curve.top_stat!r}]")
    target = min(max(target, curve.base_stat), curve.top_stat)
    k = int(np.searchsorted(curve.stats, target, side="right")) - 1
    if k >= curve.stats.size - 1:
        return curve.top_level
    # stats[k] <= target < stats[k+1], so this segment has positive slope
    return float(curve.levels[k] + (target - curve.stats[k]) / curve.slopes[k])


def _pad_descending(spec: Spectrum, n: int) -> np.ndarray:
    lam = np.asarray(spec.lambdas, dtype=float)
    return np.pad(lam, (0, n - lam.size))


def majorizing_vector(lambda_R: Spectrum, lambda_F: Spectrum,
                      ell: float, condense_tol: float = CONDENSE_REL_TOL) -> Spectrum:
    """Weight vector at level `ell` majorizing every superset spectrum there.

    The vector takes a head from the universe spectrum, a tail from the
    base spectrum, and one connecting entry eta in between, bounded by
    the two spectra's values at the slot it occupies.  Feasible levels
    for head length i form contiguous windows tiling [level_R, level_F],
    so the construction picks the shortest feasible head.

    Entries below condense_tol times the largest are merged pairwise into
    lumps (see wchi2.condense_weights).  The connecting entry can sit
    arbitrarily close to zero, which would blow up the series length of
    the resulting distribution; merging keeps the returned vector a
    majorant of everything the raw vector majorized while bounding the
    weight ratio.  Pass condense_tol=0 to disable.  Without merging the
    endpoint identities are exact: the vector at level_R is the base
    spectrum, at level_F the universe spectrum; with it they hold
    whenever the spectrum at the endpoint has no sub-threshold entries.
    """
    n = max(lambda_R.ambient_n, lambda_F.ambient_n,
            lambda_R.n_nonzero, lambda_F.n_nonzero)
    lam_r = _pad_descending(lambda_R, n)
    lam_f = _pad_descending(lambda_F, n)
    scale = max(1.0, float(lam_f[0]))
    if np.any(lam_r > lam_f + 1e-8 * scale):
        raise InfeasibleLevelError(
            "base spectrum exceeds universe spectrum entrywise; "
            "inputs are not a nested pair")
    lo, hi = float(lam_r.sum()), float(lam_f.sum())
    tol = 1e-9 * max(1.0, hi)
    if ell < lo - tol or ell > hi + tol:
        raise InfeasibleLevelError(
            f"level {ell!r} outside the feasible range [{lo!r}, {hi!r}]")
    ell = min(max(float(ell), lo), hi)

    # window(i): sum(lam_f[:i]) + sum(lam_r[i:]) <= ell <= same with i+1
    cum_f = np.concatenate(([0.0], np.cumsum(lam_f)))
    tail_r = np.concatenate((np.cumsum(lam_r[::-1])[::-1], [0.0]))
    lower = cum_f[:-1] + tail_r[:-1]           # lower[i], i = 0..n-1
    upper = cum_f[1:] + tail_r[1:]             # upper[i] = lower[i+1]
    i = int(np.searchsorted(upper, ell, side="left"))
    i = min(i, n - 1)
    eta = ell - (cum_f[i] + tail_r[i + 1])
    eta = min(max(eta, float(lam_r[i])), float(lam_f[i]))
    vec = np.concatenate((lam_f[:i], [eta], lam_r[i + 1:]))
    vec = vec[vec > 0.0]
    if condense_tol > 0.0 and vec.size:
        vec = condense_weights(vec, condense_tol)
    return Spectrum(lambdas=vec, ambient_n=n, level=float(vec.sum()))


def cmax(lambda_R: Spectrum, lambda_F: Spectrum, ell: float, alpha: float,
         trunc_tol: float = 1e-12,
         condense_tol: float = CONDENSE_REL_TOL) -> float:
    """Critical-value upper envelope at level `ell`: the (1 - alpha)-quantile
    of the majorizing vector's distribution."""
    _alpha_checked(alpha)
    vec = majorizing_vector(lambda_R, lambda_F, ell, condense_tol=condense_tol)
    return WeightedChiSq(vec, trunc_tol=trunc_tol).quantile(1.0 - alpha)


class _CmaxCache:
    """cmax evaluations for one (R, F) pair, memoized by rounded level.

    The crossing iteration and the branch-and-bound revisit nearby
    levels; quantiles are cached under the level rounded to 1e-9.
    `n_evals` counts calls (hits included), matching the iteration count.
    """

    def __init__(self, lambda_R: Spectrum, lambda_F: Spectrum, alpha: float,
                 trunc_tol: float):
        self._lam_r = lambda_R
        self._lam_f = lambda_F
        self._alpha = alpha
        self._trunc_tol = trunc_tol
        self._values: dict[int, float] = {}
        self.n_evals = 0

    def seed(self, ell: float, value: float) -> None:
        self._values[round(ell / CMAX_LEVEL_ROUND)] = value

    def __call__(self, ell: float) -> float:
        self.n_evals += 1
        key = round(ell / CMAX_LEVEL_ROUND)
        hit = self._values.get(key)
        if hit is None:
            hit = cmax(self._lam_r, self._lam_f, ell, self._alpha,
                       self._trunc_tol)
            self._values[key] = hit
        return hit


@dataclass(frozen=True)
class CrossingOutcome:
    kind: str                  # ABOVE or CROSS
    level: float               # level where the iteration stopped
    n_cmax_evals: int


def crossing_test(curve: PiecewiseCurve, cmax_fn, epsilon: float = DEFAULT_EPSILON) -> CrossingOutcome:
    """Decide whether the statistic envelope clears the critical envelope.

    Fixed-point iteration: starting at the top level, repeatedly map the
    current critical value through the inverse statistic curve and
    re-evaluate the critical envelope there.  The critical value is run
    through a running minimum, so the used sequence is nonincreasing
    even if the evaluated envelope wobbles slightly (weight merging in
    the majorizing vector can introduce tiny non-monotone steps); any
    upper bound of the true envelope stays an upper bound under the
    minimum, so validity is unaffected and levels cannot oscillate.
    The iteration either drives the critical value to or below the base
    statistic (ABOVE: every superset must reject) or stops making
    progress of more than `epsilon` per step (CROSS at that level).

    Requires the caller to have verified base and top exact tests pass;
    an immediate ABOVE after one evaluation means the top critical value
    already sits at or below the base statistic.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    g_base = curve.base_stat
    g_top = curve.top_stat
    l0 = curve.top_level
    c1 = cmax_fn(l0)
    n = 1
    if c1 <= g_base:
        return CrossingOutcome(kind=ABOVE, level=l0, n_cmax_evals=n)
    max_steps = 10 * int(np.ceil((curve.top_level - curve.base_level)
                                 / epsilon)) + 50
    for _ in range(max_steps):
        l1 = l0
        l0 = inverse_gmin(curve, min(max(c1, g_base), g_top))
        c1 = min(c1, cmax_fn(l0))
        n += 1
        if c1 <= g_base or l1 - l0 <= epsilon:
            break
    else:  # pragma: no cover - progress is forced, bound is generous
        raise RuntimeError("crossing iteration failed to terminate")
    kind = ABOVE if c1 <= g_base else CROSS
    return CrossingOutcome(kind=kind, level=l0, n_cmax_evals=n)


class ExactTester:
    """Exact superset tests against their own spectra, memoized per set.

    The decision `statistic >= critical value` is evaluated as
    `cdf(statistic) >= 1 - alpha` on the set's own null distribution,
    which is the same comparison through the same cdf without a quantile
    search.  `n_tests` counts distinct sets actually evaluated.
    """

    def __init__(self, stats: FeatureStats, provider: SpectrumProvider,
                 alpha: float):
        self._stats = stats
        self._provider = provider
        self._alpha = alpha
        self._seen: dict[frozenset, bool] = {}
        self.n_tests = 0

    def statistic(self, S) -> float:
        return float(self._stats.g[list(S)].sum())

    def reject(self, S) -> bool:
        key = frozenset(int(i) for i in S)
        hit = self._seen.get(key)
        if hit is None:
            dist = self._provider.dist(key)
            hit = bool(dist.cdf(self.statistic(key)) >= 1.0 - self._alpha)
            self._seen[key] = hit
            self.n_tests += 1
        return hit


@dataclass(frozen=True)
class SingleStepResult:
    decision: str                         # REJECT / NOT_REJECT / UNSURE
    witness: tuple[int, ...] | None       # failing superset when NOT_REJECT
    n_cmax_evals: int
    n_exact_tests: int

    def __post_init__(self):
        if (self.witness is not None) != (self.decision == NOT_REJECT):
            raise ValueError("witness must accompany exactly the NOT_REJECT decision")


def single_step(stats: FeatureStats, provider: SpectrumProvider, R, F,
                alpha: float, epsilon: float = DEFAULT_EPSILON,
                trunc_tol: float | None = None) -> SingleStepResult:
    """One shortcut pass for R within universe F.

    Decision order: exact tests of R and F (either failing is a witness);
    immediate rejection when R's statistic clears F's critical value; the
    crossing test; on a crossing, exact tests of every staircase set
    (first failure is a witness, all passing leaves UNSURE).

    REJECT and NOT_REJECT are final under closed testing at level alpha
    (assuming alpha is within the majorization validity range); UNSURE
    only means this one comparison could not decide.
    """
    alpha = _alpha_checked(alpha)
    if trunc_tol is None:
        trunc_tol = provider.trunc_tol
    base = _active_sorted(stats, R, "tested set")
    top = _active_sorted(stats, F, "universe")
    if not set(base) <= set(top):
        raise ValueError("tested set must be contained in the universe")

    exact = ExactTester(stats, provider, alpha)
    if not exact.reject(base):
        return SingleStepResult(NOT_REJECT, base, 0, exact.n_tests)
    if not exact.reject(top):
        return SingleStepResult(NOT_REJECT, top, 0, exact.n_tests)
    if base == top:
        return SingleStepResult(REJECT, None, 0, exact.n_tests)

    g_base = exact.statistic(base)
    dist_top = provider.dist(top)
    if dist_top.cdf(g_base) >= 1.0 - alpha:
        # R's statistic alone beats the universe's critical value
        return SingleStepResult(REJECT, None, 0, exact.n_tests)

    curve = gmin_curve(stats, base, top)
    lam_base = provider.spectrum(base)
    lam_top = provider.spectrum(top)
    cache = _CmaxCache(lam_base, lam_top, alpha, trunc_tol)
    cache.seed(curve.top_level, dist_top.quantile(1.0 - alpha))
    outcome = crossing_test(curve, cache, epsilon)
    if outcome.kind == ABOVE:
        return SingleStepResult(REJECT, None, outcome.n_cmax_evals,
                                exact.n_tests)

    for k in range(len(curve.order) + 1):
        step_set = curve.staircase(k)
        if not exact.reject(step_set):
            return SingleStepResult(NOT_REJECT, step_set,
                                    outcome.n_cmax_evals, exact.n_tests)
    return SingleStepResult(UNSURE, None, outcome.n_cmax_evals, exact.n_tests)


def curve_table(stats: FeatureStats, provider: SpectrumProvider, R, F,
                alpha: float, samples: int = 200,
                trunc_tol: float | None = None) -> list[dict]:
    """Sampled curve data for diagnostics and export.

    Rows of kind "grid" carry (level, gmin, cmax) at evenly spaced levels
    plus every breakpoint; rows of kind "exact" carry each staircase
    set's (level, statistic, critical value).  Sorted by level, grid rows
    first within ties, so the first and last rows are the base and
    universe endpoints.
    """
    alpha = _alpha_checked(alpha)
    if samples < 2:
        raise ValueError("need at least two sample points")
    if trunc_tol is None:
        trunc_tol = provider.trunc_tol
    curve = gmin_curve(stats, R, F)
    lam_base = provider.spectrum(curve.base)
    lam_top = provider.spectrum(curve.staircase(len(curve.order)))
    cache = _CmaxCache(lam_base, lam_top, alpha, trunc_tol)
    grid = np.unique(np.concatenate((
        np.linspace(curve.base_level, curve.top_level, samples),
        curve.levels)))
    rows = [{"kind": "grid", "level": float(l),
             "gmin": float(curve.evaluate(l)), "cmax": float(cache(l))}
            for l in grid]
    for k in range(len(curve.order) + 1):
        members = curve.staircase(k)
        dist = provider.dist(members)
        rows.append({"kind": "exact",
                     "level": level(stats, members),
                     "statistic": float(stats.g[list(members)].sum()),
                     "critical": dist.quantile(1.0 - alpha),
                     "members": members})
    rows.sort(key=lambda r: (r["level"], r["kind"] != "grid"))
    return rows
