"""Watch the gap of a compiled clock Hamiltonian close as the circuit grows.

Compiles random nearest-neighbour circuits on 3 qubits, solves for the two
lowest levels, and compares the gap with the energy of the truncated
history state started from a flipped input, which is orthogonal to the
ground state and therefore bounds the gap from above.
"""

import math

import numpy as np

from histgap import QuditRegister, assemble, compile_feynman_kitaev, ground_and_gap, sample_local_random_circuit
from histgap.analysis.experiments import power_law_fit
from histgap.history import standard_history_state, truncated_states
from histgap.spectral import energy

reg = QuditRegister(3, 2)
Ts = [4, 8, 16, 32, 64]
gaps = []
print(f"{'T':>4} {'gap':>12} {'witness':>12} {'1-cos(pi/(T+1))':>16}")
for T in Ts:
    circuit = sample_local_random_circuit(reg, T, T)
    H = assemble(compile_feynman_kitaev(circuit))
    res = ground_and_gap(H)
    _, phi, _ = truncated_states(standard_history_state(circuit), T // 4)
    witness = energy(phi.to_vector(), H) - res.E0
    gaps.append(res.gap)
    print(f"{T:>4} {res.gap:12.3e} {witness:12.3e} {1 - math.cos(math.pi / (T + 1)):16.3e}")

slope, r2 = power_law_fit(Ts, gaps)
print(f"\nlog-log slope of gap vs T: {slope:.2f} (r^2 = {r2:.4f})")
assert np.all(np.diff(gaps) < 0)
