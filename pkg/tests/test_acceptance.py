"""Acceptance checks, one test per criterion, each reporting a PASS/FAIL line.

Seeds and thresholds live in ``fixtures/calibration.json``.
"""

import json
import math
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
import pytest

from histgap.analysis import (BoundParams, DesignConfig, FHConfig, GapConfig, SplitConfig, bhh_design_length,
                              bonus_ground_amplitudes, design_experiment, design_order, fh_experiment,
                              gap_experiment, lemma_failure_bounds, low_energy_witnesses, net_sizes,
                              plugin_delta, split_experiment)
from histgap.analysis.experiments import calibrated_witness_constant
from histgap.hamiltonian import assemble, compile_feynman_kitaev
from histgap.history import (AmplitudeCheckParams, check_amplitudes_case1, check_amplitudes_case2,
                             random_generalized_instance, reduction_report, standard_history_state,
                             zero_window_profile)
from histgap.qcircuit import QuditRegister, identity_circuit, sample_local_random_circuit
from histgap.rng import make_rng
from histgap.spectral import ground_and_gap

from conftest import CRITERION_LINES
from oracles import bhh_length_hp, nets_hp

CAL = json.loads((Path(__file__).parent / "fixtures" / "calibration.json").read_text())


def report(number, passed, detail):
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}"
    CRITERION_LINES.append(line)
    print(line)
    return passed


def as_mpf(x):
    x = Fraction(x)
    return mpmath.mpf(x.numerator) / x.denominator


@pytest.fixture(scope="module")
def gap_scaling_run():
    c = CAL["gap_scaling"]
    cfg = GapConfig(n=c["n"], d=c["d"], T=c["T"], seeds=c["seeds"], master_seed=c["master_seed"],
                    rescale=c["rescale"])
    start = time.perf_counter()
    rep = gap_experiment(cfg)
    return rep, time.perf_counter() - start


def test_criterion_1_closed_form_gap():
    c = CAL["closed_form_gap"]
    start = time.perf_counter()
    worst = 0.0
    for T in c["T"]:
        circuit = identity_circuit(QuditRegister(c["n"], c["d"]), T)
        H = assemble(compile_feynman_kitaev(circuit, include_input_penalty=False))
        res = ground_and_gap(H)
        worst = max(worst, abs(res.level_gap - (1 - math.cos(math.pi / (T + 1)))))
    elapsed = time.perf_counter() - start
    ok = worst <= c["tol"] and elapsed < 60
    assert report(1, ok, f"max |gap - (1 - cos(pi/(T+1)))| = {worst:.2e} (tol {c['tol']}), {elapsed:.1f}s")


def test_criterion_2_gap_scaling(gap_scaling_run):
    rep, elapsed = gap_scaling_run
    agg = rep.aggregates
    Ts = sorted(int(t) for t in agg["medians"])
    med = [agg["medians"][str(t)]["gap"] for t in Ts]
    monotone = all(b <= a for a, b in zip(med, med[1:]))
    ok = (agg["errors"] == 0 and monotone and agg["fit_exponent"] <= CAL["gap_scaling"]["max_exponent"]
          and elapsed < 15 * 60)
    detail = (f"medians {[f'{m:.4g}' for m in med]}, exponent {agg['fit_exponent']:.3f} "
              f"(r2 {agg['fit_r2']:.4f}), {elapsed:.0f}s")
    assert report(2, ok, detail)


def test_criterion_3_orthogonal_witness(gap_scaling_run):
    rep, _ = gap_scaling_run
    c = CAL["orthogonal_witness"]
    rows = [r for r in rep.rows if r["error"] is None]
    max_overlap = max(r["phi_psi_overlap"] for r in rows)
    violations = [r for r in rows if r["gap"] > r["phi_energy_gap"] + c["variational_slack"]]
    ok = len(rows) == len(rep.rows) and max_overlap <= c["overlap_tol"] and not violations
    assert report(3, ok, f"{len(rows)} cells, max overlap {max_overlap:.1e}, "
                          f"variational violations {len(violations)}")


def test_criterion_4_reduction_gap_inequality():
    c = CAL["reduction"]
    start = time.perf_counter()
    failures, worst_margin, max_dim = [], -math.inf, 0
    for seed in range(c["first_seed"], c["first_seed"] + c["instances"]):
        gen, H = random_generalized_instance(seed, max_dim=c["max_dim"])
        rep = reduction_report(gen, H)
        max_dim = max(max_dim, rep["dim"])
        worst_margin = max(worst_margin, rep["gap"] - rep["reduced_gap"])
        if rep["gap"] > rep["reduced_gap"] + c["gap_slack"] or not rep["locality_pass"]:
            failures.append(seed)
    elapsed = time.perf_counter() - start
    ok = not failures and max_dim <= c["max_dim"] and elapsed < 5 * 60
    assert report(4, ok, f"{c['instances']} instances (max dim {max_dim}), failures {failures}, "
                          f"max gap - reduced gap {worst_margin:.2e}, {elapsed:.0f}s")


def test_criterion_5_split_identity():
    c = CAL["split_identity"]
    cfg = SplitConfig(n=c["n"], d=c["d"], T=c["T"], r=c["r"], x0=c["x0"], profile=c["profile"], seeds=c["seeds"],
                      master_seed=c["master_seed"], witness_rider=False)
    rep = split_experiment(cfg)
    agg = rep.aggregates
    ok = agg["errors"] == 0 and len(rep.rows) == c["seeds"] and agg["max_identity_residual"] <= c["tol"]
    assert report(5, ok, f"corrected-coefficient residual {agg['max_identity_residual']:.1e}, "
                          f"2*lam*(1-lam) variant residual {agg['max_product_coefficient_residual']:.2e}")


def test_criterion_6_local_indistinguishability():
    c = CAL["local_indistinguishability"]
    cfg = FHConfig(n=c["n"], d=c["d"], k=c["k"], depths=c["depths"], seeds=c["seeds"],
                   master_seed=c["master_seed"], haar_samples=c["haar_samples"], threshold=c["threshold"])
    rep = fh_experiment(cfg)
    agg = rep.aggregates
    deepest = str(max(c["depths"]))
    # 3-sigma band of the median from the sample spread at the deepest checkpoint
    vals = np.array([r["value"] for r in rep.rows if str(r["depth"]) == deepest])
    band = 3 * 1.2533 * vals.std(ddof=1) / math.sqrt(len(vals))
    decays = agg["medians"][deepest] - band < c["threshold"]
    ref = agg["haar_reference"]
    haar_ok = ref / c["haar_factor"] <= agg["haar_cross_median"] <= ref * c["haar_factor"]
    medians = {t: round(v, 4) for t, v in agg["medians"].items()}
    detail = (f"median by depth {medians}, depth-{deepest} median {agg['medians'][deepest]:.3f} +- {band:.3f} "
              f"vs {c['threshold']}; Haar cross median {agg['haar_cross_median']:.3f} in "
              f"[{ref / c['haar_factor']:.4f}, {ref * c['haar_factor']:.3f}]: {haar_ok}")
    assert report(6, decays and haar_ok, detail)


def test_criterion_7_design_convergence():
    c = CAL["design_convergence"]
    start = time.perf_counter()
    lrc = design_experiment(DesignConfig("local_random_circuit", c["n"], c["d"], c["depth"], c["samples"], c["s"],
                                         c["seed"]))
    haar = design_experiment(DesignConfig("haar", c["n"], c["d"], 0, c["samples"], c["s"], c["seed"]))
    elapsed = time.perf_counter() - start
    a, h = lrc.rows[0], haar.rows[0]
    lrc_ok = a["relative_error"] <= c["relative_tol"]
    haar_ok = abs(h["estimate"] - h["haar_value"]) <= c["haar_sigmas"] * h["stderr"]
    ok = lrc_ok and haar_ok and elapsed < 10 * 60
    assert report(7, ok, f"circuits {a['estimate']:.3f} +- {a['stderr']:.3f} (rel err {a['relative_error']:.3f}), "
                          f"Haar {h['estimate']:.3f} +- {h['stderr']:.3f} vs {h['haar_value']}, {elapsed:.0f}s")


def test_criterion_8_bound_evaluators():
    c = CAL["bound_evaluators"]
    checks = {}
    units = []
    for n, d in ((2, 2), (4, 2), (6, 2), (3, 3)):
        base = 11050 * n**2 * math.log(d)
        units.append(design_order(base, n, d, "s1_lemma8") == 1 and
                     design_order(base * 2**11, n, d, "s1_lemma8") == 2)
    checks["design_order"] = all(units)

    p = BoundParams(n=6, d=2, k=2, m=7, T=20, q=20, q1=21, r=10**9, r1=10**9, delta=Fraction(1, 4),
                    gamma=Fraction(3, 2), alpha_mass=Fraction(1, 5))
    p.delta = plugin_delta(p)
    rhs = lemma_failure_bounds(p)["lemma9_energy_rhs"]
    checks["plugin_energy"] = rhs == p.gamma * (1 - p.alpha_mass) / p.T

    rng = make_rng(c["sample_seed"])
    nets_ok, bhh_ok = [], []
    for _ in range(c["points"]):
        k = int(rng.integers(1, 3))
        m = int(rng.integers(k, 7))
        d = int(rng.integers(2, 4))
        n = int(rng.integers(2, 6))
        r = int(rng.integers(0, 3))
        den = int(rng.integers(2, 9))
        num = int(rng.integers(1, den))
        out = net_sizes(m, k, d, Fraction(num, den), n=n, r_circ=r)
        ham, circ = nets_hp(m, k, d, num, den, n, r)
        with mpmath.workdps(100):
            nets_ok.append(abs(as_mpf(out["hamiltonian_net_bound"]) / ham - 1) < mpmath.mpf("1e-80")
                           and abs(as_mpf(out["circuit_net_bound"]) / circ - 1) < mpmath.mpf("1e-80"))
        s = int(rng.integers(1, 6))
        eps = float(10 ** rng.uniform(-12, -0.5))
        bhh_ok.append(bhh_design_length(n, d, s, eps) == bhh_length_hp(n, d, s, eps))
    checks["net_sizes"] = all(nets_ok)
    checks["bhh_design_length"] = all(bhh_ok)
    assert report(8, all(checks.values()), ", ".join(f"{k} {v}" for k, v in checks.items()))


def test_criterion_9_low_energy_subspace():
    c = CAL["low_energy_subspace"]
    T = c["T"]
    const = calibrated_witness_constant(T)
    counts, offdiag = [], 0.0
    for seed in c["seeds"]:
        circuit = sample_local_random_circuit(QuditRegister(c["n"], c["d"]), T, seed)
        w = low_energy_witnesses(circuit, T // 4, const, max_count=c["max_count"])
        counts.append(w["count"])
        offdiag = max(offdiag, w["max_gram_offdiag"])
    target = min(c["max_count"], c["d"] ** c["n"])
    ok = min(counts) >= target and offdiag < 1e-12
    assert report(9, ok, f"states below E0 + c/T per seed {counts} (target {target}), c = {const:.4f}, "
                          f"max Gram off-diagonal {offdiag:.1e}")


def test_criterion_10_amplitude_checkers():
    c = CAL["amplitude_checkers"]
    T, r = c["uniform_T"], c["r"]
    uni = check_amplitudes_case1(standard_history_state(identity_circuit(QuditRegister(2, 2), T)),
                                 AmplitudeCheckParams(r=r, r1=r))
    uniform_ok = (abs(uni["ratio"] - Fraction(110, 90)) <= 1e-12 and
                  abs(uni["tail_mass"] - Fraction(90, 101)) <= 1e-12)

    circuit = sample_local_random_circuit(QuditRegister(c["bonus_n"], 2), c["bonus_T"], c["bonus_seed"])
    bonus = standard_history_state(circuit, amplitudes=bonus_ground_amplitudes(circuit))
    bonus_fails = [not check_amplitudes_case1(bonus, AmplitudeCheckParams(r=b, r1=b))["pass"]
                   for b in c["bonus_r"]]

    Tw, rw, x0 = c["window_T"], c["window_r"], c["window_x0"]
    window = standard_history_state(identity_circuit(QuditRegister(2, 2), Tw),
                                    amplitudes=zero_window_profile(Tw, (x0 - 1) * rw, 2 * rw))
    row = check_amplitudes_case2(window, AmplitudeCheckParams(r=rw))["candidates"][0]
    window_ok = row["x0"] == x0 and row["slice_mass"] == 0.0 and row["slice_pass"]
    ok = uniform_ok and all(bonus_fails) and window_ok
    assert report(10, ok, f"uniform ratio {uni['ratio']!r} tail {uni['tail_mass']!r}; "
                           f"bonus fixture fails case 1 at r={c['bonus_r']}: {bonus_fails}; "
                           f"zero window slice mass {row['slice_mass']} at x0={row['x0']}")
