"""Screen a collection of named pathways with family-wise error control.

The point of the closed-testing construction: every set in the
collection is tested at the same level alpha, any number of sets can be
declared significant, and the chance of even one false declaration
stays below alpha.  No multiplicity penalty is paid for the size of the
collection, only for the structure of the supersets.

Run:  python3 demos/pathway_screen.py
"""

import numpy as np

import ctgt

rng = np.random.default_rng(28)
data = ctgt.logistic_dataset(n=60, m=12, effect=1.6, n_signal=3, rng=rng)
null = ctgt.fit_null(data)
stats = ctgt.feature_stats(data, null)
provider = ctgt.SpectrumProvider(data, null)

# overlapping pathways, some touching the signal features 0..2
collection = [
    ("energy", (0, 1, 5)),
    ("transport", (3, 4, 6, 7)),
    ("signaling", (1, 2, 8)),
    ("ribosome", (9, 10, 11)),
    ("stress", (2, 5, 6, 10)),
    ("adhesion", (7, 11)),
]

rows = ctgt.analyze_collection(stats, provider, collection, alpha=0.05)

print(f"{'pathway':<12}{'size':>5}{'stat':>9}{'crit':>9}  decision")
for row in rows:
    print(f"{row.name:<12}{row.n_members:>5}{row.statistic:>9.2f}"
          f"{row.critical_value:>9.2f}  {row.decision}"
          + (f"  (blocked by {row.witness})" if row.witness else ""))

n_rej = sum(1 for r in rows if r.decision == "reject")
print(f"\n{n_rej} of {len(rows)} pathways rejected; the probability that "
      "any true-null pathway appears in such a list is at most 0.05")
