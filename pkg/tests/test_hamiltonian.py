import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from histgap.errors import DimensionError, HermiticityError, ResourceError, ValidationError
from histgap.hamiltonian import (LocalHamiltonian, LocalTerm, ancilla_amplified, assemble,
                                 compile_feynman_kitaev, duplicated_terms, gamma_norm, hermitian_norm,
                                 hypercube_clock_hamiltonian, initial_projector_hamiltonian,
                                 input_bonus_hamiltonian, one_hot_configs, permute_qudits, quasi_local_norm)
from histgap.qcircuit import QuditRegister, identity_circuit, sample_local_random_circuit
from histgap.rng import make_rng

from oracles import dense_feynman_kitaev, dense_hamiltonian, history_vector


def random_hermitian(dim, rng):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


@st.composite
def local_hamiltonians(draw):
    m = draw(st.integers(1, 4))
    dims = tuple(draw(st.lists(st.integers(2, 3), min_size=m, max_size=m)))
    rng = make_rng(draw(st.integers(0, 2**31)))
    terms = []
    for _ in range(draw(st.integers(1, 4))):
        k = draw(st.integers(1, m))
        support = tuple(sorted(rng.choice(m, size=k, replace=False).tolist()))
        dim = math.prod(dims[q] for q in support)
        terms.append(LocalTerm(support, random_hermitian(dim, rng)))
    return LocalHamiltonian(dims, terms)


def test_term_validation():
    with pytest.raises(ValidationError):
        LocalTerm((1, 0), np.eye(4))
    with pytest.raises(DimensionError):
        LocalTerm((0,), np.ones((2, 3)))
    with pytest.raises(DimensionError):
        LocalHamiltonian((2, 2), [LocalTerm((0,), np.eye(3))])
    with pytest.raises(ValidationError):
        LocalHamiltonian((2,), [LocalTerm((1,), np.eye(2))])


def test_non_hermitian_term_is_reported_with_index():
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    H = LocalHamiltonian((2, 2), [LocalTerm((0,), np.eye(2)), LocalTerm((1,), bad)])
    with pytest.raises(HermiticityError) as info:
        H.check_hermitian()
    assert info.value.index == 1
    with pytest.raises(HermiticityError):
        assemble(H)


@settings(max_examples=30, deadline=None)
@given(H=local_hamiltonians())
def test_assembly_matches_kronecker_oracle(H):
    dense = dense_hamiltonian(H)
    assert np.allclose(assemble(H).toarray(), dense, atol=1e-12)
    v = make_rng(1).standard_normal(H.dim) + 0j
    assert np.allclose(H.apply(v), dense @ v, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(H=local_hamiltonians(), seed=st.integers(0, 1000))
def test_permuting_qudits_preserves_spectrum(H, seed):
    perm = make_rng(seed).permutation(H.m)
    a = np.linalg.eigvalsh(assemble(H).toarray())
    b = np.linalg.eigvalsh(assemble(permute_qudits(H, perm)).toarray())
    assert np.allclose(a, b, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(H=local_hamiltonians())
def test_json_round_trip(H):
    H2 = LocalHamiltonian.from_json(H.to_json())
    assert H2.dims == H.dims
    assert all(np.array_equal(a.matrix, b.matrix) and a.support == b.support for a, b in zip(H.terms, H2.terms))


def test_hermitian_norm_blocks_match_dense():
    rng = make_rng(4)
    M = np.zeros((130, 130), dtype=complex)
    M[:5, :5] = random_hermitian(5, rng)
    M[70:72, 70:72] = random_hermitian(2, rng)
    M[100, 100] = -7.5
    assert hermitian_norm(M) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(M))), abs=1e-12)


def test_compress_restricts_to_configurations():
    H = hypercube_clock_hamiltonian(3)
    block = H.compress(one_hot_configs(8))
    w = np.linalg.eigvalsh(block)
    assert w[0] == pytest.approx(0, abs=1e-12)
    assert w[1] == pytest.approx(1.0, abs=1e-12)


def test_hypercube_gamma_grows_while_gap_stays():
    for k in (2, 3, 4):
        H = hypercube_clock_hamiltonian(k)
        assert gamma_norm(H).gamma == pytest.approx(k)
        w = np.linalg.eigvalsh(H.compress(one_hot_configs(2**k)))
        assert w[1] - w[0] == pytest.approx(1.0)


def test_duplicated_terms_scale_gamma_and_gap():
    c = sample_local_random_circuit(QuditRegister(2, 2), 3, 1)
    H = compile_feynman_kitaev(c)
    H3 = duplicated_terms(H, 3)
    assert gamma_norm(H3).gamma == pytest.approx(3 * gamma_norm(H).gamma)
    w1 = np.linalg.eigvalsh(assemble(H).toarray())
    w3 = np.linalg.eigvalsh(assemble(H3).toarray())
    assert np.allclose(w3, 3 * w1, atol=1e-10)


def test_ancilla_amplification_keeps_supports_disjoint():
    H = LocalHamiltonian((2,), [LocalTerm((0,), np.diag([0.0, 1.0]))])
    A = ancilla_amplified(H, 3)
    assert gamma_norm(A).gamma == pytest.approx(3)
    assert len({t.support for t in A.terms}) == 3
    zero_block = A.compress([(b, 0, 0, 0) for b in (0, 1)])
    assert np.allclose(np.diag(zero_block), [0, 3])


def test_quasi_local_norm():
    H = LocalHamiltonian((2, 2), [LocalTerm((0, 1), np.eye(4)), LocalTerm((0,), np.eye(2))])
    rep = quasi_local_norm(H, 0.5)
    assert rep.gamma == pytest.approx(math.exp(2**1.5) + math.e)
    assert list(rep.per_qudit) == [2.0, 1.0]
    assert rep.to_csv().splitlines()[0] == "qudit_index,sum,weighted_sum"
    with pytest.raises(ValidationError):
        quasi_local_norm(H, 0)


@pytest.mark.parametrize("rescale", ["none", "by_T"])
def test_register_clock_matches_dense_oracle(rescale):
    c = sample_local_random_circuit(QuditRegister(3, 2), 5, 8)
    H = compile_feynman_kitaev(c, rescale=rescale)
    assert np.allclose(assemble(H).toarray(), dense_feynman_kitaev(c, rescale=rescale), atol=1e-12)


def test_history_state_is_zero_energy_ground_state():
    c = sample_local_random_circuit(QuditRegister(3, 2), 6, 2)
    H = assemble(compile_feynman_kitaev(c)).toarray()
    psi = history_vector(c)
    assert np.linalg.norm(H @ psi) < 1e-12
    w = np.linalg.eigvalsh(H)
    assert w[0] == pytest.approx(0, abs=1e-12) and w[1] > 1e-3


@pytest.mark.parametrize("T", [1, 2, 3, 5])
def test_unary_clock_matches_register_low_spectrum(T):
    c = sample_local_random_circuit(QuditRegister(2, 2), T, T)
    reg = np.linalg.eigvalsh(assemble(compile_feynman_kitaev(c)).toarray())
    una = np.linalg.eigvalsh(assemble(compile_feynman_kitaev(c, clock="unary")).toarray())
    assert una[0] == pytest.approx(0, abs=1e-12)
    # the legal-clock sector reproduces the register spectrum below the illegal-clock penalties
    low = reg[reg < 0.5]
    assert np.allclose(una[:len(low)], low, atol=1e-10)


def test_propagation_only_spectrum_is_clock_spectrum():
    T = 6
    c = identity_circuit(QuditRegister(2, 2), T)
    H = compile_feynman_kitaev(c, include_input_penalty=False)
    w = np.unique(np.round(np.linalg.eigvalsh(assemble(H).toarray()), 10))
    expected = np.round(1 - np.cos(np.arange(T + 1) * np.pi / (T + 1)), 10)
    assert np.allclose(np.sort(w), np.sort(expected), atol=1e-9)
    assert gamma_norm(H).gamma == pytest.approx(T)


def test_compile_errors():
    c = identity_circuit(QuditRegister(2, 2), 4)
    with pytest.raises(ResourceError):
        compile_feynman_kitaev(c, cap=10)
    with pytest.raises(ValidationError):
        compile_feynman_kitaev(c, rescale="by_n")
    with pytest.raises(ValidationError):
        compile_feynman_kitaev(c, witness=[True])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        compile_feynman_kitaev(c, witness=[True, True])
    assert caught


def test_gapped_counterexamples():
    for T in (4, 8, 16):
        c = sample_local_random_circuit(QuditRegister(2, 2), T, T)
        w = np.linalg.eigvalsh(assemble(input_bonus_hamiltonian(c)).toarray())
        assert w[1] - w[0] > 0.3
        w = np.linalg.eigvalsh(assemble(initial_projector_hamiltonian(c)).toarray())
        assert w[1] - w[0] == pytest.approx(1.0)
