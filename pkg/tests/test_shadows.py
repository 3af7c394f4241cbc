from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opspread import ed
from opspread.dynamics import XXZParams, sample_disorder
from opspread.marginals import length_distribution, mass_distribution
from opspread.mps import mps_from_choi
from opspread.pauli import (
    I,
    X,
    Y,
    Z,
    dense_to_choi,
    length_table,
    mass_table,
    pauli_matrix,
    pauli_string_matrix,
    string_index,
)
from opspread.shadows import (
    OUTCOME_TO_CODE,
    ChoiState,
    ShadowSnapshots,
    apply_pair_cliffords,
    apply_random_pair_cliffords,
    bell_probabilities,
    bell_sample,
    choi_state_of,
    clifford_group,
    estimate_marginals,
    exact_state_marginals,
    outcome_code_table,
    shadow_protocol,
    write_snapshots,
)

seeds = st.integers(0, 2**31 - 1)


def random_hermitian(L: int, rng: np.random.Generator) -> np.ndarray:
    d = 2**L
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return a + a.conj().T


def snapshots_from_codes(codes) -> ShadowSnapshots:
    codes = np.asarray(codes, dtype=np.int8)
    return ShadowSnapshots(np.zeros(codes.shape + (2,), dtype=np.uint8), codes)


def evolved_operator(L: int = 4, t: float = 1.5, seed: int = 0) -> np.ndarray:
    params = XXZParams(L, 1.0, 6.5)
    h = ed.dense_hamiltonian(params, sample_disorder(params, seed))
    return ed.evolve_exact(ed.initial_dense_operator(L), h, t)


def test_clifford_group_has_24_distinct_unitaries():
    group = clifford_group()
    assert len(group) == 24
    for u in group:
        np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
        # every element maps Paulis to Paulis up to sign
        for c in (1, 2, 3):
            img = u @ pauli_matrix(c) @ u.conj().T
            overlaps = [abs(np.trace(img @ pauli_matrix(k))) / 2 for k in (1, 2, 3)]
            assert sorted(np.round(overlaps, 10)) == [0, 0, 1]


def test_single_pair_states():
    phi_minus = np.array([1, 0, 0, -1]) / np.sqrt(2)
    phi_plus = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(choi_state_of(pauli_matrix(Z)).amplitudes, phi_minus, atol=1e-15)
    np.testing.assert_allclose(choi_state_of(np.eye(2)).amplitudes, phi_plus, atol=1e-15)


def test_single_pair_decoding():
    for code in (I, X, Y, Z):
        p = bell_probabilities(choi_state_of(pauli_matrix(code)))
        assert OUTCOME_TO_CODE[int(np.argmax(p))] == code
        assert p.max() == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(1, 3))
def test_bell_probabilities_are_squared_amplitudes(seed, L):
    o = random_hermitian(L, np.random.default_rng(seed))
    v = dense_to_choi(o)
    p = bell_probabilities(choi_state_of(o))
    codes = outcome_code_table(L)
    idx = np.array([string_index(c) for c in codes])
    np.testing.assert_allclose(p, v[idx] ** 2 / np.dot(v, v), atol=1e-12)


def test_choi_state_from_mps_matches_dense():
    o = evolved_operator(3, 0.7)
    v = dense_to_choi(o)
    a = choi_state_of(mps_from_choi(v / np.linalg.norm(v))).amplitudes
    np.testing.assert_allclose(a, choi_state_of(o).amplitudes, atol=1e-12)


def test_identity_rotation_and_transpose_trick():
    state = choi_state_of(random_hermitian(2, np.random.default_rng(1)))
    identity = [k for k, u in enumerate(clifford_group()) if np.allclose(u, np.eye(2))][0]
    np.testing.assert_allclose(apply_pair_cliffords(state, [identity] * 2).amplitudes, state.amplitudes, atol=1e-14)
    bell = choi_state_of(np.eye(2))
    for k in range(24):
        np.testing.assert_allclose(apply_pair_cliffords(bell, [k]).amplitudes, bell.amplitudes, atol=1e-14)


def test_exact_marginals_are_clifford_invariant():
    state = choi_state_of(random_hermitian(2, np.random.default_rng(2)))
    pl0, pm0 = exact_state_marginals(state)
    for seed in range(1000):
        rotated, _ = apply_random_pair_cliffords(state, seed)
        pl, pm = exact_state_marginals(rotated)
        np.testing.assert_allclose(pl, pl0, atol=1e-12)
        np.testing.assert_allclose(pm, pm0, atol=1e-12)


def test_sampling_single_strings_is_deterministic():
    snaps = bell_sample(choi_state_of(pauli_string_matrix((X, I, Z))), 50, seed=0)
    assert np.all(snaps.codes == [X, I, Z])
    ident = bell_sample(choi_state_of(np.eye(8)), 50, seed=1)
    assert np.all(ident.codes == 0)
    assert snaps[3].decoded == (X, I, Z)


def test_bell_sampling_frequencies():
    L = 3
    o = random_hermitian(L, np.random.default_rng(3))
    state = choi_state_of(o)
    n = 1_000_000
    snaps = bell_sample(state, n, seed=4)
    idx = (snaps.codes.astype(int) * 4 ** np.arange(L - 1, -1, -1)).sum(axis=1)
    freq = np.bincount(idx, minlength=4**L) / n
    v = dense_to_choi(o)
    w = v**2 / np.dot(v, v)
    sigma = np.sqrt(w * (1 - w) / n)
    assert np.all(np.abs(freq - w) <= 4 * sigma + 1e-12)


def test_estimator_examples():
    est = estimate_marginals(snapshots_from_codes([[I, Z, I]] * 10))
    np.testing.assert_array_equal(est.length.probs, [0, 0, 1, 0])
    np.testing.assert_array_equal(est.length_stderr, [0, 0, 0, 0])
    est = estimate_marginals(snapshots_from_codes([[Z, I, I], [X, Y, I], [Y, I, I], [I, Z, I]]))
    np.testing.assert_allclose(est.length.probs, [0, 0.5, 0.5, 0])
    np.testing.assert_allclose(est.length_stderr[1:3], [0.25, 0.25])
    with pytest.raises(ValueError):
        estimate_marginals(snapshots_from_codes(np.zeros((0, 3))))


def test_protocol_matches_exact_marginals():
    o = evolved_operator()
    v = dense_to_choi(o)
    mps = mps_from_choi(v / np.linalg.norm(v))
    truth_l, truth_m = length_distribution(mps).probs, mass_distribution(mps).probs
    est = estimate_marginals(shadow_protocol(choi_state_of(o), 100_000, seed=5))
    assert np.max(np.abs(est.length.probs - truth_l)) < 5e-3
    assert np.max(np.abs(est.mass.probs - truth_m)) < 5e-3


def test_estimator_is_unbiased():
    o = evolved_operator(3, 2.0, 1)
    state = choi_state_of(o)
    truth, _ = exact_state_marginals(state)
    reps = np.array([estimate_marginals(shadow_protocol(state, 1000, seed=s)).length.probs for s in range(200)])
    sem = reps.std(axis=0, ddof=1) / np.sqrt(len(reps))
    assert np.all(np.abs(reps.mean(axis=0) - truth) <= 3 * sem + 1e-12)


def test_snapshot_lengths_and_masses():
    snaps = snapshots_from_codes([[I, I, I], [X, I, Y], [I, Z, I]])
    np.testing.assert_array_equal(snaps.lengths, [0, 3, 2])
    np.testing.assert_array_equal(snaps.masses, [0, 2, 1])
    codes = outcome_code_table(2)
    idx = [string_index(c) for c in codes]
    ref = snapshots_from_codes(codes)
    np.testing.assert_array_equal(ref.lengths, length_table(2)[idx])
    np.testing.assert_array_equal(ref.masses, mass_table(2)[idx])


def test_write_snapshots(tmp_path):
    snaps = bell_sample(choi_state_of(pauli_string_matrix((Z, X))), 3, seed=0)
    path = tmp_path / "shots.csv"
    write_snapshots(snaps, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "shot_index,bitstring,decoded_string,h,m"
    assert lines[1] == "0,1001,ZX,2,2"
    assert len(lines) == 4


def test_state_size_limit():
    with pytest.raises(ValueError):
        choi_state_of(np.eye(2**7))
    with pytest.raises(ValueError):
        choi_state_of(np.zeros((4, 4)))
    assert isinstance(choi_state_of(np.eye(4)), ChoiState)
