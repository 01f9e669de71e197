"""Test one feature set, step by step.

Builds a synthetic case/control cohort, fits the confounder-only
logistic null, and walks through everything that goes into a single
closed-testing decision: the set's own score test, the statistic
envelope over its supersets, the conservative critical-value bound, and
the final verdict.  Ends by re-deriving the same answer from the
exhaustive oracle so you can see that the shortcut gave it up for free.

Run:  python3 demos/walkthrough_one_set.py
"""

import numpy as np

import ctgt

rng = np.random.default_rng(19)
data = ctgt.logistic_dataset(n=40, m=8, effect=1.4, n_signal=2, rng=rng)
print(f"cohort: {data.X.shape[0]} samples, {data.X.shape[1]} features, "
      f"{int(data.y.sum())} cases")

null = ctgt.fit_null(data)
stats = ctgt.feature_stats(data, null)
provider = ctgt.SpectrumProvider(data, null)

universe = stats.active_indices
print(f"active universe: {universe}")

# the set under test: the first signal feature plus an innocent bystander
R = (0, 4)
F = universe
alpha = 0.05

own = ctgt.globaltest(stats, provider, R, alpha)
print(f"\nset {R}: statistic {own.statistic:.3f}, "
      f"own critical value {own.critical_value:.3f}, p = {own.p_value:.4f}")
print("the set's own test rejects" if own.reject
      else "the set's own test does not reject")

# that alone is not enough: closed testing asks for every superset too
curve = ctgt.gmin_curve(stats, R, F)
print(f"\nsuperset statistic envelope: {len(curve.order)} segments "
      f"from level {curve.base_level:.2f} to {curve.top_level:.2f}")
for lvl, st, slope in curve.breakpoints:
    print(f"  level {lvl:7.3f}  envelope {st:7.3f}"
          + ("" if np.isnan(slope) else f"  next slope {slope:.3f}"))

res = ctgt.single_step(stats, provider, R, F, alpha)
print(f"\nsingle pass: {res.decision} "
      f"({res.n_cmax_evals} bound evaluations, "
      f"{res.n_exact_tests} exact superset tests)")
if res.witness is not None:
    print(f"blocking superset: {res.witness}")

final = ctgt.iterative_shortcut(stats, provider, R, F, alpha)
print(f"after refinement: {final.decision} "
      f"in {final.iterations_used} iteration(s)")

oracle = ctgt.full_closed_test(stats, provider, R, F, alpha)
print(f"\nexhaustive check over all supersets: {oracle.decision} "
      f"({oracle.n_tests} exact tests)")
assert oracle.decision == final.decision
print("shortcut and oracle agree")
