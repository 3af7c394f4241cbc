from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from opspread import ed
from opspread.dynamics import XXZParams, sample_disorder
from opspread.pauli import I, X, Y, Z, amplitude, dense_to_choi, index_to_string, pauli_string_matrix

seeds = st.integers(0, 2**31 - 1)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return a + a.conj().T


def test_two_site_hamiltonian():
    params = XXZParams(2, 0.0, 0.0)
    h = ed.dense_hamiltonian(params, sample_disorder(params, 0))
    expected = np.zeros((4, 4))
    expected[1, 2] = expected[2, 1] = 0.5
    np.testing.assert_allclose(h, expected, atol=1e-15)


def test_hamiltonian_is_hermitian_and_decomposes():
    params = XXZParams(5, 1.0, 6.5)
    h = ed.dense_hamiltonian(params, sample_disorder(params, 3))
    assert np.max(np.abs(h - h.conj().T)) < 1e-14
    np.testing.assert_allclose(ed.spectral_decomposition(h).reconstruct(), h, atol=1e-12)


def test_evolve_exact_trivial_cases():
    params = XXZParams(4, 1.0, 2.0)
    h = ed.dense_hamiltonian(params, sample_disorder(params, 1))
    o = ed.initial_dense_operator(4)
    np.testing.assert_allclose(ed.evolve_exact(o, h, 0.0), o, atol=1e-12)
    np.testing.assert_allclose(ed.evolve_exact(h, h, 3.7), h, atol=1e-11)


def test_evolve_exact_matches_matrix_exponential():
    params = XXZParams(4, 1.0, 6.5)
    h = ed.dense_hamiltonian(params, sample_disorder(params, 2))
    o = ed.initial_dense_operator(4)
    u = expm(1j * 1.3 * h)
    np.testing.assert_allclose(ed.evolve_exact(o, h, 1.3), u @ o @ u.conj().T, atol=1e-9)


def test_heisenberg_schrodinger_duality():
    rng = np.random.default_rng(4)
    params = XXZParams(4, 1.0, 6.5)
    h = ed.dense_hamiltonian(params, sample_disorder(params, 4))
    a = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    o = ed.initial_dense_operator(4)
    lhs = np.trace(ed.evolve_exact(o, h, 0.7) @ rho)
    rhs = np.trace(o @ ed.evolve_exact(rho, h, -0.7))
    assert lhs == pytest.approx(rhs, abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_fast_amplitudes_match_single_sum(seed):
    rng = np.random.default_rng(seed)
    o = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    fast = ed.all_raw_amplitudes(o)
    for k in range(64):
        assert fast[k] == pytest.approx(amplitude(o, index_to_string(k, 3)), abs=1e-10)


def test_amplitudes_match_normalized_vector():
    rng = np.random.default_rng(5)
    o = random_hermitian(16, rng)
    np.testing.assert_allclose(ed.all_raw_amplitudes(o).real / 4, dense_to_choi(o), atol=1e-12)


def test_norm_is_conserved():
    params = XXZParams(5, 1.0, 6.5)
    sd = ed.spectral_decomposition(ed.dense_hamiltonian(params, sample_disorder(params, 6)))
    o = ed.initial_dense_operator(5)
    norms = [np.sum(np.abs(ed.all_raw_amplitudes(ed.evolve_exact(o, sd, t))) ** 2) for t in (0, 1, 10)]
    np.testing.assert_allclose(norms, norms[0], rtol=1e-9)


def test_marginal_examples():
    o = ed.initial_dense_operator(3)
    em = ed.exact_marginals(o)
    np.testing.assert_allclose(em.length.probs, [0, 1, 0, 0])
    assert em.h == 1.0 and em.m == 1.0
    two = (pauli_string_matrix((Z, I, I)) + pauli_string_matrix((I, Z, I))) / np.sqrt(2)
    em2 = ed.exact_marginals(two)
    assert em2.h == pytest.approx(1.5) and em2.m == pytest.approx(1.0)


def test_partial_trace_path_matches_enumeration():
    params = XXZParams(4, 1.0, 3.0)
    sd = ed.spectral_decomposition(ed.dense_hamiltonian(params, sample_disorder(params, 8)))
    for t in (0.0, 0.8, 5.0):
        ot = ed.evolve_exact(ed.initial_dense_operator(4), sd, t)
        np.testing.assert_allclose(
            ed.length_distribution_partial_trace(ot).probs, ed.exact_marginals(ot).length.probs, atol=1e-12
        )
        assert ed.exact_marginals(ot).length.probs[0] == pytest.approx(0.0, abs=1e-12)


def test_operator_magic():
    assert ed.operator_magic(pauli_string_matrix((X, Z))) == pytest.approx(0.0, abs=1e-12)
    two = pauli_string_matrix((X, I)) + pauli_string_matrix((I, Y))
    assert ed.operator_magic(two) == pytest.approx(np.log(2))
    four = sum(pauli_string_matrix(s) for s in ((X, I), (I, Y), (Z, Z), (Y, X)))
    assert ed.operator_magic(four) == pytest.approx(np.log(4))


def test_enumeration_limit():
    with pytest.raises(ValueError):
        ed.pauli_weights(np.eye(2**9))


def test_choi_entanglement_of_product():
    v = dense_to_choi(ed.initial_dense_operator(3))
    vn, r2 = ed.choi_entanglement(v / np.linalg.norm(v))
    np.testing.assert_allclose(vn, 0, atol=1e-12)
    np.testing.assert_allclose(r2, 0, atol=1e-12)


def test_series_matches_pointwise_evolution():
    params = XXZParams(4, 1.0, 6.5)
    sd = ed.spectral_decomposition(ed.dense_hamiltonian(params, sample_disorder(params, 9)))
    o = ed.initial_dense_operator(4)
    times = [0.0, 0.3, 40.0]
    for t, ot in zip(times, ed.evolve_exact_series(o, sd, times)):
        np.testing.assert_allclose(ot, ed.evolve_exact(o, sd, t), atol=1e-12)
