import csv
import io
import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from histgap.analysis import (BoundParams, DesignEnsembleSpec, GapConfig, SplitConfig, bhh_design_length,
                              concentration_plugin, design_order, fh_decay_profile, frame_potential,
                              gap_experiment, haar_frame_potential, lemma_failure_bounds,
                              local_cross_overlap_max, low_energy_witnesses, low_tail_bound, net_sizes,
                              plugin_delta, split_experiment)
from histgap.analysis.designs import ceil_log
from histgap.analysis.experiments import amplitude_profile, power_law_fit
from histgap.analysis.overlap import haar_state, maximize_over_local
from histgap.errors import ValidationError
from histgap.qcircuit import QuditRegister, identity_circuit, sample_local_random_circuit
from histgap.rng import make_rng

from oracles import bhh_length_hp, count_permutations_lis, nets_hp, single_qubit_cross_max


def basis(n, bits):
    v = np.zeros(2**n, dtype=complex)
    v[int(bits, 2)] = 1
    return v


# -- local overlaps ---------------------------------------------------------------

def test_overlap_of_a_state_with_itself_is_one():
    psi = haar_state(8, make_rng(0))
    assert local_cross_overlap_max(psi, psi, 1, 3, 2).value == pytest.approx(1, abs=1e-12)


def test_orthogonal_products():
    assert local_cross_overlap_max(basis(3, "000"), basis(3, "111"), 1, 3, 2).value == pytest.approx(0, abs=1e-14)
    res = local_cross_overlap_max(basis(3, "000"), basis(3, "001"), 1, 3, 2)
    assert res.value == pytest.approx(1, abs=1e-12) and res.subset == (2,)
    assert local_cross_overlap_max(basis(3, "000"), basis(3, "011"), 2, 3, 2).value == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_haar_pairs_match_direct_optimisation(seed):
    rng = make_rng(seed)
    psi, phi = haar_state(8, rng), haar_state(8, rng)
    res = local_cross_overlap_max(psi, phi, 1, 3, 2, grid_size=128)
    direct = single_qubit_cross_max(psi, phi, 3)
    assert res.value <= direct + 1e-7
    assert direct <= res.value / math.cos(res.resolution / 2) + 1e-7
    assert res.value <= res.envelope + 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), phase=st.floats(0, 2 * math.pi))
def test_overlap_symmetry_and_phase_invariance(seed, phase):
    rng = make_rng(seed)
    psi, phi = haar_state(8, rng), haar_state(8, rng)
    a = local_cross_overlap_max(psi, phi, 1, 3, 2).value
    b = local_cross_overlap_max(phi, psi, 1, 3, 2).value
    c = local_cross_overlap_max(psi, np.exp(1j * phase) * phi, 1, 3, 2, grid_size=64).value
    res = math.pi / 64
    assert b == pytest.approx(a, rel=1e-9)
    assert math.cos(res) * a - 1e-12 <= c <= a / math.cos(res) + 1e-12


def test_refining_the_angle_grid_never_lowers_the_value():
    rng = make_rng(9)
    psi, phi = haar_state(16, rng), haar_state(16, rng)
    vals = [local_cross_overlap_max(psi, phi, 2, 4, 2, grid_size=g).value for g in (8, 16, 32, 64)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_overlap_validation():
    psi = basis(2, "00")
    with pytest.raises(ValidationError):
        local_cross_overlap_max(psi, psi, 0, 2, 2)
    with pytest.raises(ValidationError):
        local_cross_overlap_max(2 * psi, psi, 1, 2, 2)
    with pytest.raises(ValidationError):
        local_cross_overlap_max(psi[:3], psi, 1, 2, 2)
    with pytest.raises(ValidationError):
        maximize_over_local([], grid_size=2)


def test_fh_profile_depth_zero_and_identity():
    c = sample_local_random_circuit(QuditRegister(4, 2), 20, 3)
    prof = fh_decay_profile(c, 1, [0, 10, 20])
    assert prof["values"][0] == pytest.approx(1, abs=1e-12)
    assert np.allclose(prof["raw"], 2 * prof["values"])
    ident = fh_decay_profile(identity_circuit(QuditRegister(4, 2), 10), 1, [0, 5, 10])
    assert np.allclose(ident["values"], 1, atol=1e-12)
    with pytest.raises(ValidationError):
        fh_decay_profile(c, 1, [19], lag=2)


# -- designs ----------------------------------------------------------------------

@pytest.mark.parametrize("dim,s", [(1, 3), (2, 3), (2, 4), (3, 4), (1, 5)])
def test_haar_frame_potential_matches_permutation_count(dim, s):
    assert haar_frame_potential(dim, s) == count_permutations_lis(dim, s)


@pytest.mark.parametrize("s,expected", [(1, 1), (2, 2)])
def test_haar_ensemble_frame_potential(s, expected):
    fp = frame_potential(DesignEnsembleSpec("haar", 2, 2, samples=4000, seed=3), s)
    assert fp["haar_value"] == expected
    assert abs(fp["estimate"] - expected) <= 3 * fp["stderr"]


def test_shallow_circuits_are_far_from_designs():
    fp = frame_potential(DesignEnsembleSpec("local_random_circuit", 3, 2, depth=1, samples=200, seed=0), 2)
    assert fp["estimate"] > 5 * fp["haar_value"]


def test_design_spec_validation():
    with pytest.raises(ValidationError):
        DesignEnsembleSpec("gaussian", 2, 2)
    with pytest.raises(ValidationError):
        DesignEnsembleSpec("haar", 2, 2, samples=1)
    with pytest.raises(ValidationError):
        frame_potential(DesignEnsembleSpec("haar", 2, 2, samples=10), 4)


def test_ceil_log_is_exact():
    assert ceil_log(2, 8) == 3 and ceil_log(2, 9) == 4 and ceil_log(3, 1) == 0


@pytest.mark.parametrize("n,d,s,eps", [(1, 2, 1, 0.5), (2, 2, 2, 1e-3), (4, 3, 3, 0.1), (6, 2, 5, 1e-9),
                                       (3, 5, 2, 0.25)])
def test_bhh_length_matches_high_precision(n, d, s, eps):
    assert bhh_design_length(n, d, s, eps) == bhh_length_hp(n, d, s, eps)


def test_bhh_validation():
    with pytest.raises(ValidationError):
        bhh_design_length(2, 2, 2, 1.0)


@pytest.mark.parametrize("n,d", [(2, 2), (4, 2), (3, 3)])
def test_design_order_unit_points(n, d):
    base = 11050 * n**2 * math.log(d)
    assert design_order(base, n, d, "s1_lemma8") == 1
    assert design_order(base * 2**11, n, d, "s1_lemma8") == 2
    assert design_order(base * 0.999, n, d, "s1_lemma8") == 0
    with pytest.raises(ValidationError):
        design_order(base, n, d, "unknown")


# -- bound formulas -----------------------------------------------------------------

@pytest.mark.parametrize("m,k,d,eps,n,r", [(4, 1, 2, Fraction(1, 2), 2, 1), (4, 1, 2, Fraction(1, 4), 2, 1),
                                           (5, 2, 2, Fraction(3, 4), 3, 2), (3, 1, 3, Fraction(1, 3), 4, 1)])
def test_net_sizes_match_high_precision(m, k, d, eps, n, r):
    out = net_sizes(m, k, d, eps, n=n, r_circ=r)
    ham, circ = nets_hp(m, k, d, eps.numerator, eps.denominator, n, r)
    with mpmath.workdps(100):
        assert abs(mpmath.mpf(out["hamiltonian_net_bound"]) / ham - 1) < mpmath.mpf("1e-90")
        assert abs(mpmath.mpf(out["circuit_net_bound"]) / circ - 1) < mpmath.mpf("1e-90")
    assert out["hamiltonian_net_log10"] == pytest.approx(float(mpmath.log10(ham)), rel=1e-12)
    assert out["circuit_net_log10"] == pytest.approx(float(mpmath.log10(circ)), rel=1e-12)


def test_net_sizes_string_and_validation():
    assert net_sizes(2, 1, 2, "1/2")["hamiltonian_net_bound"] == 2 * 6**4
    assert net_sizes(2, 1, 2, 0.25) == net_sizes(2, 1, 2, "1/4")
    with pytest.raises(ValidationError):
        net_sizes(2, 1, 2, 1.5)
    with pytest.raises(ValidationError):
        net_sizes(2, 3, 2, 0.5)


def test_low_tail_bound_limits_and_scaling():
    assert low_tail_bound(0, 1, 2, 0.1, 0, 3, 0.5) == 0
    a = low_tail_bound(2, 5, 3, 0.1, 1e-6, 3, 0.1)
    b = low_tail_bound(2, 5, 3, 0.1, 1e-6, 3, 0.2)
    assert float(a / b) == pytest.approx(2**6, rel=1e-40)
    with pytest.raises(ValidationError):
        low_tail_bound(1, 0, 1, 0, 0, 1, 0.1)


@pytest.mark.parametrize("n,d,s1,delta", [(2, 2, 4, 0.1), (6, 2, 10, 0.05), (3, 3, 7, 0.3)])
def test_concentration_plugin_closed_form(n, d, s1, delta):
    with mpmath.workdps(60):
        expected = 4 * (24 * mpmath.mpf(s1) / (mpmath.mpf(d) ** n * mpmath.mpf(delta) ** 2)) ** (mpmath.mpf(s1) / 2)
        assert abs(concentration_plugin(n, d, s1, delta) / expected - 1) < mpmath.mpf("1e-50")


def bound_params(**kw):
    base = dict(n=4, d=2, k=2, m=6, T=10, q=10, q1=11, r=10**12, r1=10**12, delta=Fraction(1, 100),
                gamma=Fraction(3, 2), alpha_mass=Fraction(1, 4))
    base.update(kw)
    return BoundParams(**base)


def test_plugin_delta_gives_exact_energy():
    p = bound_params()
    p.delta = plugin_delta(p)
    out = lemma_failure_bounds(p)
    assert out["lemma9_energy_rhs"] == p.gamma * (1 - p.alpha_mass) / p.T
    assert isinstance(out["lemma7_energy_rhs"], Fraction)


def test_failure_bounds_structure():
    out = lemma_failure_bounds(bound_params())
    assert out["s1"] == design_order(10**12, 4, 2, "s1_lemma8")
    assert out["lemma7_bound_log10"] == pytest.approx(float(mpmath.log10(out["lemma7_bound"])), rel=1e-12)
    wider = lemma_failure_bounds(bound_params(q=20))
    assert wider["lemma7_bound_log10"] > out["lemma7_bound_log10"]
    four = lemma_failure_bounds(bound_params(lemma7_prefactor=4))
    assert out["lemma7_bound_log10"] - four["lemma7_bound_log10"] == pytest.approx(math.log10(4), abs=1e-12)
    odd = lemma_failure_bounds(bound_params(n=3))
    assert isinstance(odd["lemma7_energy_rhs"], float)
    with pytest.raises(ValidationError):
        bound_params(delta=Fraction(3, 4))
    with pytest.raises(ValidationError):
        bound_params(k=7)


# -- experiments --------------------------------------------------------------------

def test_identity_gap_fit_exponent():
    rep = gap_experiment(GapConfig(n=2, T=[32, 64, 128, 256], seeds=1, circuit="identity",
                                   include_input_penalty=False))
    assert -2.05 <= rep.aggregates["fit_exponent"] <= -1.95
    for row in rep.rows:
        assert row["level_gap"] == pytest.approx(1 - math.cos(math.pi / (row["T"] + 1)), abs=1e-9)


def test_gap_report_serialisation_and_determinism(tmp_path):
    cfg = {"n": 2, "T": [4, 8], "seeds": 2, "master_seed": 7}
    a = gap_experiment(cfg)
    b = gap_experiment(cfg, threads=2)
    assert a.to_json() == b.to_json()
    doc = json.loads(a.to_json())
    assert doc["config"]["master_seed"] == 7 and len(doc["rows"]) == 4
    rows = list(csv.reader(io.StringIO(a.to_csv())))
    assert rows[0] == a.columns and len(rows) == 5
    paths = a.write(tmp_path, "gap")
    assert sorted(p.name for p in paths) == ["gap.csv", "gap.json"]
    assert a.aggregates["variational_all"] and a.aggregates["max_phi_psi_overlap"] < 1e-12
    with pytest.raises(ValidationError):
        gap_experiment({"n": 2, "bogus": 1})


def test_split_experiment_identity_residual():
    rep = split_experiment(SplitConfig(n=2, T=12, r=3, x0=2, profile="random", seeds=3, witness_rider=False))
    assert rep.aggregates["max_identity_residual"] < 1e-10
    assert rep.aggregates["split_bound_all"]


def test_low_energy_witnesses_are_orthogonal():
    c = sample_local_random_circuit(QuditRegister(2, 2), 16, 1)
    w = low_energy_witnesses(c, 4)
    assert w["target"] == 4 and w["max_gram_offdiag"] < 1e-12
    assert w["count"] == 4


def test_amplitude_profiles_and_fit():
    a = amplitude_profile(10, "random", rng=0)
    assert np.linalg.norm(a) == pytest.approx(1) and np.all(a > 0)
    with pytest.raises(ValidationError):
        amplitude_profile(10, "triangle")
    slope, r2 = power_law_fit([1, 2, 4], [1, 0.25, 0.0625])
    assert slope == pytest.approx(-2) and r2 == pytest.approx(1)
