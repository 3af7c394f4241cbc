from __future__ import annotations

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opspread.marginals import (
    clip_probabilities,
    entanglement_profile,
    entropies_from_schmidt,
    length_distribution,
    mass_distribution,
    mass_generating_function,
    mean_length,
    mean_mass,
    partial_purity_profile,
)
from opspread.mps import canonicalize, mps_from_choi, mps_to_choi, product_operator_mps, random_operator_mps
from opspread.pauli import I, X, Y, Z, length_table, mass_table, string_index

seeds = st.integers(0, 2**31 - 1)


def two_string_state(a, b) -> np.ndarray:
    L = len(a)
    v = np.zeros(4**L)
    v[string_index(a)] = v[string_index(b)] = 1 / np.sqrt(2)
    return v


def test_partial_purity_examples():
    np.testing.assert_allclose(partial_purity_profile(product_operator_mps([Z, I, I])), [0, 1, 1, 1])
    np.testing.assert_allclose(partial_purity_profile(product_operator_mps([I, I, Z])), [0, 0, 0, 1])


def test_length_distribution_examples():
    np.testing.assert_allclose(length_distribution(product_operator_mps([Z, I, I])).probs, [0, 1, 0, 0])
    mixed = mps_from_choi(two_string_state((Z, I), (I, Z)))
    np.testing.assert_allclose(length_distribution(mixed).probs, [0, 0.5, 0.5], atol=1e-14)


def test_mean_values_of_products():
    for L in (1, 4, 9):
        assert mean_length(product_operator_mps([Z] + [I] * (L - 1))) == 1.0
    assert mean_length(product_operator_mps([I, I, I])) == 0.0
    assert mean_mass(product_operator_mps([Z, I, I])) == 1.0
    assert mean_mass(product_operator_mps([X, Y, Z])) == 3.0


def test_generating_function_examples():
    mps = random_operator_mps(4, 4, np.random.default_rng(0))
    assert mass_generating_function(mps, 0.0) == pytest.approx(1.0, abs=1e-12)
    prod = product_operator_mps([X, I, Y, Z])
    assert mass_generating_function(prod, 0.4) == pytest.approx(np.exp(1.2j), abs=1e-14)


def test_mass_distribution_examples():
    np.testing.assert_allclose(mass_distribution(product_operator_mps([X, I, Y])).probs, [0, 0, 1, 0], atol=1e-14)
    mixed = mps_from_choi(two_string_state((Z, I, I), (Z, X, I)))
    np.testing.assert_allclose(mass_distribution(mixed).probs, [0, 0.5, 0.5, 0], atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_marginals_match_enumeration(seed):
    L = 4
    mps = random_operator_mps(L, 6, np.random.default_rng(seed))
    w = mps_to_choi(mps) ** 2
    lengths, masses = length_table(L), mass_table(L)
    s2 = [w[lengths <= l].sum() for l in range(L + 1)]
    np.testing.assert_allclose(partial_purity_profile(mps), s2, atol=1e-12)
    np.testing.assert_allclose(length_distribution(mps).probs, np.bincount(lengths, w, L + 1), atol=1e-12)
    np.testing.assert_allclose(mass_distribution(mps).probs, np.bincount(masses, w, L + 1), atol=1e-12)
    assert mean_mass(mps) == pytest.approx(np.dot(w, masses), abs=1e-12)
    ref_g = np.sum(w * np.exp(0.7j * masses))
    assert mass_generating_function(mps, 0.7) == pytest.approx(ref_g, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 7), st.integers(1, 12))
def test_consistency_triangles(seed, L, chi):
    mps = random_operator_mps(L, chi, np.random.default_rng(seed))
    pl = length_distribution(mps).probs
    pm = mass_distribution(mps).probs
    s2 = partial_purity_profile(mps)
    h = mean_length(mps)
    assert h == pytest.approx(np.dot(np.arange(L + 1), pl), abs=1e-10)
    assert h == pytest.approx(L - s2[:-1].sum(), abs=1e-10)
    m = mean_mass(mps)
    assert m == pytest.approx(np.dot(np.arange(L + 1), pm), abs=1e-8)
    eps = 1e-6
    deriv = (mass_generating_function(mps, eps) - mass_generating_function(mps, -eps)) / (2 * eps)
    assert m == pytest.approx((-1j * deriv).real, abs=1e-4)
    for p in (pl, pm):
        assert np.all(p >= 0)
        assert p.sum() == pytest.approx(1.0, abs=1e-10)
    if pl[0] == 0:
        assert m <= h + 1e-10


def test_marginals_accept_any_canonical_form():
    mps = random_operator_mps(5, 5, np.random.default_rng(3))
    right = canonicalize(mps, "right")
    np.testing.assert_allclose(length_distribution(right).probs, length_distribution(mps).probs, atol=1e-12)
    assert mean_mass(right) == pytest.approx(mean_mass(mps), abs=1e-12)


def test_clip_probabilities():
    np.testing.assert_allclose(clip_probabilities(np.array([-1e-10, 0.5, 0.5])), [0, 0.5, 0.5])
    with pytest.raises(ValueError):
        clip_probabilities(np.array([-1e-6, 0.5, 0.5]))


def test_entanglement_examples():
    prod = entanglement_profile(product_operator_mps([Z, I, X]))
    np.testing.assert_array_equal(prod.vn, [0, 0])
    np.testing.assert_array_equal(prod.renyi2, [0, 0])
    pair = entanglement_profile(mps_from_choi(two_string_state((Z, I), (I, Z))))
    assert pair.vn[0] == pytest.approx(np.log(2), abs=1e-12)
    assert pair.renyi2[0] == pytest.approx(np.log(2), abs=1e-12)


def test_entanglement_matches_reduced_density_matrix():
    mps = random_operator_mps(4, 6, np.random.default_rng(9))
    v = mps_to_choi(mps)
    prof = entanglement_profile(mps)
    for bond in range(1, 4):
        m = v.reshape(4**bond, -1)
        rho = m @ m.T
        ev = np.linalg.eigvalsh(rho)
        ev = ev[ev > 1e-15]
        assert prof.vn[bond - 1] == pytest.approx(-np.sum(ev * np.log(ev)), abs=1e-10)
        assert prof.renyi2[bond - 1] == pytest.approx(-np.log(np.trace(rho @ rho)), abs=1e-10)
    assert prof.integrated_renyi2 == pytest.approx(prof.renyi2.sum())


def test_entropies_of_uniform_spectrum():
    vn, r2 = entropies_from_schmidt(np.full(4, 0.5))
    assert vn == pytest.approx(np.log(4))
    assert r2 == pytest.approx(np.log(4))


def _best_time(mps, repeats: int = 50) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        partial_purity_profile(mps)
        best = min(best, time.perf_counter() - t0)
    return best


def test_partial_purity_cost_is_quadratic_in_chi():
    # At these sizes a fixed per-site interpreter overhead is comparable to the
    # matrix-vector work, so it is measured at chi=1 and removed before fitting.
    L = 16
    overhead = _best_time(random_operator_mps(L, 1, np.random.default_rng(0)))
    chis = np.array([32, 64, 128])
    timings = np.array([_best_time(random_operator_mps(L, c, np.random.default_rng(c))) for c in chis])
    slope = np.polyfit(np.log(chis), np.log(timings - overhead), 1)[0]
    assert 1.7 <= slope <= 2.3, f"measured scaling exponent {slope:.2f}"
