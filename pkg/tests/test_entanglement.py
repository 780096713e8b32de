import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sptchain.ed import build_hamiltonian, builtin_interaction, low_spectrum
from sptchain.entanglement import (
    degeneracy_clusters,
    entropy,
    kramers_check,
    kramers_structure,
    random_kramers_tensor,
    schmidt_spectrum_mps,
    schmidt_spectrum_vector,
)
from sptchain.errors import BadCut, DegeneracyViolated, NotPrimitive, ValidationError
from sptchain.mps import MpsTensor, invariant_state, mps_vector, random_tensor, right_normalize
from sptchain.symmetry import tr_index

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_aklt_spectrum(aklt):
    p = schmidt_spectrum_mps(aklt)
    assert np.allclose(p, [0.5, 0.5], atol=1e-12)
    assert entropy(p) == pytest.approx(np.log(2), abs=1e-12)
    assert np.allclose(schmidt_spectrum_mps(aklt, cuts=2), [0.25] * 4, atol=1e-12)


def test_product_spectrum(product):
    p = schmidt_spectrum_mps(product)
    assert p.tolist() == pytest.approx([1.0])
    assert entropy(p) == 0.0


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_spectrum_is_gauge_invariant(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    v = right_normalize(random_tensor(1, k, rng))[0]
    # right-normalized: the spectrum is that of the invariant state
    rho = invariant_state(v)
    expected = np.sort(np.linalg.eigvalsh(rho / np.trace(rho).real))[::-1]
    p = schmidt_spectrum_mps(v)
    assert np.allclose(p, expected, atol=1e-9)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    g = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)) + 3 * np.eye(k)
    moved = MpsTensor(1, np.linalg.inv(g) @ v.mats @ g)
    assert np.allclose(schmidt_spectrum_mps(moved), p, atol=1e-8)


def test_spectrum_needs_primitive_tensor():
    diag = MpsTensor(1, np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.zeros((2, 2))]))
    with pytest.raises(NotPrimitive):
        schmidt_spectrum_mps(diag)
    with pytest.raises(ValidationError):
        schmidt_spectrum_mps(MpsTensor(1, np.array([np.eye(1)] * 3) / np.sqrt(3)), cuts=3)


def test_periodic_ground_state_half_chain(aklt):
    H = build_hamiltonian(builtin_interaction("aklt"), 8, "periodic")
    _, vecs = low_spectrum(H, 1, return_vectors=True)
    p = schmidt_spectrum_vector(vecs[:, 0], 4)
    # oracle: the same cut of the periodic MPS vector
    oracle = schmidt_spectrum_vector(mps_vector(aklt, 8), 4)
    assert np.allclose(p[:4], oracle[:4], atol=1e-8)
    # four values near 1/4: one above, a triplet below
    assert p[0] == pytest.approx(0.2687, abs=1e-4)
    assert np.allclose(p[1:4], 0.2438, atol=1e-4)
    assert p[4:].sum() <= 1e-10


@pytest.mark.slow
def test_ring_block_spectrum_approaches_two_cut_limit(aklt):
    H = build_hamiltonian(builtin_interaction("aklt"), 10, "periodic")
    _, vecs = low_spectrum(H, 1, return_vectors=True)
    p = schmidt_spectrum_vector(vecs[:, 0], 5)
    limit = schmidt_spectrum_mps(aklt, cuts=2)
    assert 0.5 * np.abs(p[:4] - limit).sum() <= 2e-2
    assert entropy(p) == pytest.approx(entropy(limit), abs=2e-2)


def test_vector_spectrum_checks():
    psi = np.zeros(27)
    psi[0] = 1
    assert schmidt_spectrum_vector(psi, 1).tolist()[0] == 1.0
    with pytest.raises(BadCut):
        schmidt_spectrum_vector(psi, 3)
    with pytest.raises(BadCut):
        schmidt_spectrum_vector(psi, 0)
    with pytest.raises(ValidationError):
        schmidt_spectrum_vector(2 * psi, 1)
    with pytest.raises(ValidationError):
        schmidt_spectrum_vector(np.ones(10) / np.sqrt(10), 1)


def test_clusters():
    assert degeneracy_clusters([0.4, 0.4, 0.2 + 1e-12, 0.2, 1e-15]) == [
        pytest.approx((0.4, 2)),
        pytest.approx((0.2, 2)),
    ]
    assert degeneracy_clusters([0.5, 0.3, 0.2]) == [(0.5, 1), (0.3, 1), (0.2, 1)]


def test_kramers_check_outcomes(aklt):
    verdict = kramers_check(schmidt_spectrum_mps(aklt), -1)
    assert verdict.applicable and verdict.passed
    assert verdict.to_dict()["clusters"] == [{"value": pytest.approx(0.5), "multiplicity": 2}]
    trivial = kramers_check([0.7, 0.3], 1)
    assert not trivial.applicable and trivial.passed is None
    with pytest.raises(DegeneracyViolated) as info:
        kramers_check([0.5, 0.25, 0.25 - 1e-3, 1e-3], -1)
    assert info.value.multiplicity == 1
    with pytest.raises(ValidationError):
        kramers_check([0.5, 0.4], -1)
    with pytest.raises(ValidationError):
        kramers_check([0.5, 0.5], 0)


def test_kramers_structure():
    U = kramers_structure(4)
    assert np.allclose(U.conj() @ U, -np.eye(4))
    assert np.allclose(U @ U.T, np.eye(4))
    with pytest.raises(ValidationError):
        kramers_structure(3)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_random_kramers_tensors_have_even_spectra(seed):
    rng = np.random.default_rng(seed)
    v = random_kramers_tensor(rng, k=4)
    assert tr_index(v).zeta == -1
    p = schmidt_spectrum_mps(v)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    verdict = kramers_check(p, -1)
    assert verdict.passed
    assert verdict.entropy >= np.log(2) - 1e-10
    assert all(m % 2 == 0 for _, m in verdict.clusters)
