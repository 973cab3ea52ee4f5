"""Walk through the Yule-Simon clock that drives every reinforced process.

Run with ``python3 demos/yule_simon_clock.py``.
"""
import numpy as np

from nrlp import sample_ys_values, ys_cov, ys_mean, ys_pmf

rng = np.random.default_rng(2024)
p = 0.25
times = np.array([0.25, 0.5, 1.0])
y = sample_ys_values(p, times, 200_000, rng)

print(f"memory parameter p = {p}")
for j, t in enumerate(times):
    print(f"  E[Y({t})]  empirical {y[:, j].mean():.4f}   exact {ys_mean(p, t):.4f}")
# the product has a heavy tail for p = 1/4, so this estimate converges slowly
print(f"  E[Y(0.5)Y(1)]  empirical {np.mean(y[:, 1] * y[:, 2]):.4f}   exact {ys_cov(p, 0.5, 1.0):.4f}")

k = np.arange(1, 6)
freq = np.array([np.mean(y[:, 2] == kk) for kk in k])
print("\nP(Y(1) = k) for k = 1..5")
for kk, f, e in zip(k, freq, ys_pmf(p, k)):
    print(f"  k={kk}: empirical {f:.4f}   pmf {e:.4f}")
