"""The failure-probability bounds at desk scale.

Evaluates the design order and the two failure-probability bounds for a
6-qubit instance while the truncation depth grows by powers of ten. With
only 64 amplitudes the base of the concentration factor exceeds 1, so a
higher design order makes the bounds larger rather than smaller: they only
become informative once d^n dominates the design order.
"""

from fractions import Fraction

from histgap.analysis import BoundParams, bhh_design_length, design_order, lemma_failure_bounds, plugin_delta

print("design length for 2-designs on 6 qubits, eps = 1e-3:", bhh_design_length(6, 2, 2, 1e-3))
print()
print(f"{'r':>8} {'s1':>4} {'s':>4} {'log10 P7':>14} {'log10 P9':>14}")
for e in range(8, 40, 4):
    r = 10**e
    p = BoundParams(n=6, d=2, k=2, m=7, T=40, q=40, q1=41, r=r, r1=r, delta=Fraction(1, 4),
                    alpha_mass=Fraction(1, 10))
    p.delta = plugin_delta(p)
    b = lemma_failure_bounds(p)
    print(f"1e{e:<6} {b['s1']:>4} {b['s']:>4} {b['lemma7_bound_log10']:14.1f} {b['lemma9_bound_log10']:14.1f}")
print("\nenergy bound at the plug-in threshold:", b["lemma9_energy_rhs"], "= gamma (1 - alpha) / T")
print("order reached at r = 11050 n^2 ln 2:", design_order(11050 * 36 * 0.6931471805599453, 6, 2, "s1_lemma8"))
