"""Couple a compound Poisson process with its noise reinforced version.

Kept jumps are repeated at Yule-Simon times, discarded ones never reach the
reinforced path, and both marginals at t = 1 keep the same mean.
Run with ``python3 demos/reinforced_vs_levy.py``.
"""
import numpy as np

from nrlp import poisson_triplet, sample_coupled_pair
from nrlp.coupling import coupled_marginals

rng = np.random.default_rng(7)
triplet = poisson_triplet(rate=3.0)
p = 0.5

pair = sample_coupled_pair(triplet, p, rng=rng)
print(f"one coupled pair with p = {p}")
for i, (u, kept) in pair.shared_jump_map.items():
    copies = np.sum(pair.reinforced.jumps.innovation_id == i)
    print(f"  base jump {i} at t={u:.3f}: {'kept' if kept else 'discarded'}, "
          f"{copies} atom(s) in the reinforced path")

base, reinf = coupled_marginals(triplet, p, [1.0], 100_000, rng)
print("\nmarginals at t = 1 over 100000 pairs")
print(f"  Levy:       mean {base.mean():.3f}  P(zero) {np.mean(base == 0):.4f}  "
      f"exact {np.exp(-3.0):.4f}")
# the reinforced path is zero iff no jump was kept; its variance is infinite for p >= 1/2
print(f"  reinforced: mean {reinf.mean():.3f}  P(zero) {np.mean(reinf == 0):.4f}  "
      f"exact {np.exp(-3.0 * (1 - p)):.4f}")
