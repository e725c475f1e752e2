"""Two inputs differing in one qubit become locally indistinguishable.

Runs one random circuit on |000000> and on |000001> and tracks the largest
single-site trace distance between the two trajectories. It starts at 1
and drops quickly, then levels off at the size typical of independent
random states on 6 qubits.
"""

import numpy as np

from histgap import QuditRegister, make_rng, sample_local_random_circuit
from histgap.analysis import fh_decay_profile
from histgap.analysis.experiments import haar_cross_overlaps

n = 6
depths = [0, 10, 25, 50, 100, 200]
profiles = np.array([
    fh_decay_profile(sample_local_random_circuit(QuditRegister(n, 2), max(depths), seed), 1, depths)["values"]
    for seed in range(8)
])
for t, col in zip(depths, profiles.T):
    print(f"depth {t:>4}: median {np.median(col):.3f}  min {col.min():.3f}  max {col.max():.3f}")

haar = haar_cross_overlaps(n, 2, 1, samples=10, seed=int(make_rng(0).integers(2**31)))
print(f"\nindependent Haar states, max single-site cross overlap: median {np.median(haar):.3f}")
print(f"2^(-n/2) = {2 ** (-n / 2):.3f}")
