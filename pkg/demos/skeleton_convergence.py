"""Reinforced random-walk skeletons approach the reinforced Levy process.

For Poisson steps the law of the skeleton and of its limit can be computed
exactly on the integer lattice, so the distance shrinks without Monte Carlo
noise.  Run with ``python3 demos/skeleton_convergence.py``.
"""
from nrlp import poisson_triplet
from nrlp.skeleton import lattice_ks_distance

triplet = poisson_triplet(1.0)
print("exact KS distance between the reinforced Poisson skeleton at n and its limit (p = 0.5)")
for n in (16, 64, 256, 1024, 4096):
    print(f"  n = {n:5d}: {lattice_ks_distance(triplet, 0.5, n):.5f}")
