"""Which correlation vectors are even possible?

A synthetic sample built from the basis columns cannot carry an arbitrary
correlation vector: the expanded correlation matrix must stay positive
semi-definite. Choosing entries one at a time, every previous choice
narrows the interval for the next; this script walks those intervals and
shows the saturation effect that makes samples exact.

Run:  python3 demos/03_correlation_bounds.py
"""

import numpy as np

from synthfid import begin, sample_random

# a typical basis correlation matrix: two strongly related fidelities plus
# one nearly independent prior draw
corr = np.array([
    [1.00, 0.85, 0.10],
    [0.85, 1.00, 0.05],
    [0.10, 0.05, 1.00],
])
labels = ("low", "high", "prior")

print("basis correlation matrix:")
print(corr, end="\n\n")

# the first entry is always free; later ones are pinned by earlier choices
print("walking entries with mid-interval choices:")
session = begin(corr)
while session.remaining:
    lo, hi = session.bounds_for_next()
    value = 0.5 * (lo + hi)
    print(f"  corr to {labels[session.position]:5s}: "
          f"allowed [{lo:+.4f}, {hi:+.4f}]  ->  choosing {value:+.4f}")
    session.choose(value)
spec = session.finalize()
print(f"finalized; expanded matrix min eigenvalue: {spec.min_eigenvalue():.2e}")
print(f"boundary gap: {spec.boundary_gap:.4f} "
      "(> 0: a basis-spanned sample cannot hit this vector exactly)\n")

# choosing 0.99 correlation to 'low' drags the allowed correlation to
# 'high' up with it: the fidelities are themselves correlated
session = begin(corr)
session.choose(0.99)
lo, hi = session.bounds_for_next()
print(f"after corr(low) = 0.99, corr(high) must lie in [{lo:+.4f}, {hi:+.4f}]\n")

# random specs saturate the final entry (they sit on the feasible
# boundary), which is exactly the condition for exact reproduction
spec = sample_random(begin(corr), seed=0)
print("random spec:", spec.values.round(4))
print(f"boundary gap: {spec.boundary_gap:.2e}  ->  exact: {spec.is_exact}")
