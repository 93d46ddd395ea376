import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from htnqmc.htn import (DenseExpander, HtnState, expand_dense, hadamard_test_lower, htn_circuit,
                        htn_energy, htn_overlap_basis, htn_overlap_vector, lower_state,
                        measurement_count, svd_2x2, transition_amplitude, transition_matrix)
from htnqmc.models import (Decomposition, build_heisenberg_chain, cluster_decomposition,
                           even_odd_decomposition)
from htnqmc.pauli import PauliSum
from htnqmc.statevector import apply_circuit, basis_state

from _dense import hamiltonian_matrix, htn_dense, pauli_matrix, real_amplitude_unitary


def random_state(dec, depth, rng, mask=0):
    return HtnState.from_vector(dec, depth, rng.uniform(0, 2 * np.pi, HtnState.n_params_for(dec, depth)),
                                mask)


def oracle(s: HtnState):
    masks = [s.local_mask(m) for m in range(s.dec.k)]
    return htn_dense(s.dec.groups, s.depth, s.lower_params, s.upper_params, masks)


def random_pauli_sum(n, rng, n_terms=5):
    terms = [(float(rng.normal()), "".join(rng.choice(list("IXYZ"), n))) for _ in range(n_terms)]
    return PauliSum(n, terms)


DECS = [cluster_decomposition(2, 3), cluster_decomposition(2), even_odd_decomposition(8),
        Decomposition(((5, 0, 3), (1, 4, 2))), cluster_decomposition(3, 2)]


# -- structure --------------------------------------------------------------------

def test_parameter_count():
    dec = cluster_decomposition(2)
    assert HtnState.n_params_for(dec, 4) == 8 * 5 + 2 * 5
    assert HtnState.zeros(dec, 4).to_vector().size == 50


def test_parameter_vector_round_trip():
    rng = np.random.default_rng(0)
    dec = cluster_decomposition(2)
    vec = rng.uniform(size=HtnState.n_params_for(dec, 2))
    assert np.array_equal(HtnState.from_vector(dec, 2, vec).to_vector(), vec)


def test_wrong_parameter_length_rejected():
    with pytest.raises(ValueError):
        HtnState.from_vector(cluster_decomposition(2), 1, np.zeros(5))


def test_parameters_are_read_only():
    s = HtnState.zeros(cluster_decomposition(2), 1)
    with pytest.raises(ValueError):
        s.upper_params[0] = 1.0


# -- lower states ---------------------------------------------------------------------

def test_lower_state_zero_angles():
    s = HtnState.zeros(cluster_decomposition(2), 0)
    assert np.allclose(lower_state(s, 0, 0), basis_state(4, 0))
    assert np.allclose(lower_state(s, 1, 1), basis_state(4, 1))  # leg qubit is local qubit 0
    # with entanglers the CNOT chain propagates the leg bit: |1000> -> |1111> after one layer
    s1 = HtnState.zeros(cluster_decomposition(2), 1)
    assert np.allclose(lower_state(s1, 1, 1), basis_state(4, 15))


def test_lower_states_orthonormal_for_random_angles():
    s = random_state(cluster_decomposition(2), 3, np.random.default_rng(1))
    for m in range(2):
        phi = s.lower_states(m)
        assert np.allclose(phi @ phi.T, np.eye(2), atol=1e-12)


def test_lower_state_matches_kronecker_unitary():
    s = random_state(cluster_decomposition(2), 2, np.random.default_rng(2))
    U = real_amplitude_unitary(4, 2, s.lower_params[1])
    assert np.allclose(lower_state(s, 1, 1), U[:, 1])


# -- transition matrices ------------------------------------------------------------------

def test_transition_identity_same_state():
    s = random_state(cluster_decomposition(2), 2, np.random.default_rng(3))
    assert np.allclose(transition_matrix(s, s, 0, "IIII"), np.eye(2), atol=1e-12)


def test_transition_z_on_leg_zero_angles():
    s = HtnState.zeros(cluster_decomposition(2), 2)
    assert np.allclose(transition_matrix(s, s, 1, "ZIII"), np.diag([1, -1]))


def test_transition_entries_equal_dense_inner_products():
    rng = np.random.default_rng(4)
    dec = cluster_decomposition(2)
    bra, ket = random_state(dec, 2, rng), random_state(dec, 2, rng)
    N = transition_matrix(bra, ket, 0, "XIII")
    Ub = real_amplitude_unitary(4, 2, bra.lower_params[0])
    Uk = real_amplitude_unitary(4, 2, ket.lower_params[0])
    assert np.allclose(N, Ub[:, :2].T @ pauli_matrix("XIII") @ Uk[:, :2], atol=1e-12)


def test_transition_decomposition_mismatch():
    a = HtnState.zeros(cluster_decomposition(2), 1)
    b = HtnState.zeros(even_odd_decomposition(8), 1)
    with pytest.raises(ValueError):
        transition_matrix(a, b, 0, "IIII")


# -- 2x2 SVD -----------------------------------------------------------------------------------

def test_svd_identity_and_zero():
    _, D, _ = svd_2x2(np.eye(2))
    assert np.allclose(D, [1, 1])
    U, D, V = svd_2x2(np.zeros((2, 2)))
    assert np.allclose(D, 0) and np.allclose(U, np.eye(2)) and np.allclose(V, np.eye(2))


def test_svd_permutation_scaled():
    _, D, _ = svd_2x2(np.array([[0, 2], [1, 0]]))
    assert np.allclose(sorted(D), [1, 2])


def test_svd_reconstruction_many_random_matrices():
    rng = np.random.default_rng(5)
    N = rng.normal(size=(100_000, 2, 2)) + 1j * rng.normal(size=(100_000, 2, 2))
    U, D, V = svd_2x2(N)
    rec = np.conj(np.swapaxes(U, -1, -2)) @ (D[..., :, None] * V)
    assert np.max(np.abs(rec - N)) <= 1e-12
    eye = np.eye(2)
    assert np.allclose(np.conj(np.swapaxes(U, -1, -2)) @ U, eye)
    assert np.allclose(np.conj(np.swapaxes(V, -1, -2)) @ V, eye)
    assert np.all(D >= 0)


# -- contraction ----------------------------------------------------------------------------------

@pytest.mark.parametrize("dec", DECS, ids=lambda d: str(d.groups))
def test_expand_dense_matches_kronecker_oracle(dec):
    s = random_state(dec, 2, np.random.default_rng(6), mask=5)
    psi = expand_dense(s)
    assert np.allclose(psi, oracle(s), atol=1e-12)
    assert abs(np.linalg.norm(psi) - 1) <= 1e-10


@pytest.mark.parametrize("dec", DECS, ids=lambda d: str(d.groups))
def test_circuit_form_equals_network(dec):
    s = random_state(dec, 3, np.random.default_rng(7))
    circ, params = htn_circuit(s)
    assert np.allclose(apply_circuit(circ, params, basis_state(dec.n_qubits, 0)), expand_dense(s), atol=1e-12)


def test_dense_expander_batches():
    dec = cluster_decomposition(2)
    rng = np.random.default_rng(8)
    batch = rng.uniform(0, 6, (4, HtnState.n_params_for(dec, 2)))
    out = DenseExpander(dec, 2, basis_mask=3)(batch)
    for b in range(4):
        assert np.allclose(out[b], expand_dense(HtnState.from_vector(dec, 2, batch[b], 3)))


def test_single_subsystem_reduces_to_lower_circuit_after_leg_rotation():
    dec = Decomposition(((0, 1, 2),))
    s = random_state(dec, 0, np.random.default_rng(9))
    theta = s.upper_params[0]
    leg = np.cos(theta / 2) * basis_state(3, 0) + np.sin(theta / 2) * basis_state(3, 1)
    U = real_amplitude_unitary(3, 0, s.lower_params[0])
    assert np.allclose(expand_dense(s), U @ leg)


def test_zero_angles_expand_to_zero_state():
    assert np.allclose(expand_dense(HtnState.zeros(cluster_decomposition(2), 3)), basis_state(8, 0))


@given(st.sampled_from(range(len(DECS))), st.integers(0, 3), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_transition_amplitude_matches_dense(idx, depth, seed):
    dec = DECS[idx]
    rng = np.random.default_rng(seed)
    bra, ket = random_state(dec, depth, rng), random_state(dec, depth, rng)
    O = random_pauli_sum(dec.n_qubits, rng)
    want = oracle(bra) @ hamiltonian_matrix(O.terms, dec.n_qubits) @ oracle(ket)
    assert abs(transition_amplitude(bra, ket, O) - want) <= 1e-10


@given(st.integers(0, 3), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_normalization_identity(depth, seed):
    s = random_state(cluster_decomposition(2), depth, np.random.default_rng(seed))
    assert abs(transition_amplitude(s, s, PauliSum.identity(8)) - 1) <= 1e-10


def test_htn_energy_examples():
    dec = cluster_decomposition(2)
    zsum = PauliSum(8, [(1.0, "".join("Z" if q == p else "I" for q in range(8))) for p in range(8)])
    assert htn_energy(HtnState.zeros(dec, 2), zsum) == pytest.approx(8.0)
    H = build_heisenberg_chain(2, 1.0)
    s = random_state(dec, 4, np.random.default_rng(10))
    psi = oracle(s)
    assert htn_energy(s, H) == pytest.approx(psi @ hamiltonian_matrix(H.terms, 8).real @ psi, abs=1e-10)


# -- overlaps --------------------------------------------------------------------------------------

def test_overlap_zero_angles():
    s = HtnState.zeros(cluster_decomposition(2), 2)
    assert htn_overlap_basis(s, 0) == pytest.approx(1.0)
    assert htn_overlap_basis(s, 17) == pytest.approx(0.0)


def test_overlap_masked_initial_state():
    h = 0b01010101
    s = HtnState.zeros(cluster_decomposition(2), 2, basis_mask=h)
    ov = htn_overlap_vector(s)
    assert ov[h] == pytest.approx(1.0)
    assert np.allclose(np.delete(ov, h), 0)


@pytest.mark.parametrize("dec", DECS[:3], ids=lambda d: str(d.groups))
def test_overlap_vector_matches_dense_and_is_complete(dec):
    s = random_state(dec, 2, np.random.default_rng(11))
    ov = htn_overlap_vector(s)
    assert np.allclose(ov, oracle(s), atol=1e-12)
    assert np.sum(ov ** 2) == pytest.approx(1.0, abs=1e-10)


# -- Hadamard-test emulation ---------------------------------------------------------------------------

def test_hadamard_circuits_reproduce_real_and_imaginary_parts():
    rng = np.random.default_rng(12)
    dec = cluster_decomposition(2)
    bra, ket = random_state(dec, 2, rng), random_state(dec, 2, rng)
    N = transition_matrix(bra, ket, 1, "XYZI")
    for ip in (0, 1):
        for i in (0, 1):
            assert hadamard_test_lower(bra, ket, 1, "XYZI", ip, i, "x") == pytest.approx(N[ip, i].real, abs=1e-12)
            assert hadamard_test_lower(bra, ket, 1, "XYZI", ip, i, "y") == pytest.approx(-N[ip, i].imag, abs=1e-12)


def test_shot_estimates_converge_at_inverse_sqrt_rate():
    rng = np.random.default_rng(13)
    dec = cluster_decomposition(2)
    bra, ket = random_state(dec, 2, rng), random_state(dec, 2, rng)
    exact = transition_matrix(bra, ket, 0, "ZXII")
    spread = {}
    for shots in (10_000, 1_000_000):
        est = np.array([transition_matrix(bra, ket, 0, "ZXII", shots=shots, rng=rng) for _ in range(60)])
        assert np.max(np.abs(est - exact)) <= 5 / np.sqrt(shots)
        spread[shots] = np.std(est.real, axis=0).mean()
    # 100x more shots -> 10x smaller spread
    assert 6 < spread[10_000] / spread[1_000_000] < 16


def test_sampled_transition_amplitude_close_to_exact():
    rng = np.random.default_rng(14)
    dec = cluster_decomposition(2)
    s = random_state(dec, 2, rng)
    O = PauliSum(8, [(1.0, "XXIIIZZI")])
    exact = transition_amplitude(s, s, O)
    est = transition_amplitude(s, s, O, shots=1_000_000, rng=rng, real_only=True)
    assert abs(est - exact.real) <= 5e-3


@pytest.mark.parametrize("k,L,real,count", [(2, 1, False, 18), (2, 1, True, 9), (3, 2, False, 98)])
def test_measurement_count(k, L, real, count):
    assert measurement_count(k, L, real) == count
