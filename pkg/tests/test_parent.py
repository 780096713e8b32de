import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sptchain.ed import builtin_interaction, spin_matrices
from sptchain.errors import BadParameters
from sptchain.mps import mps_vector, random_tensor, right_normalize
from sptchain.parent import (
    default_interval,
    ed_kernel,
    frustration_free_residual,
    interval_ground_space,
    parent_interaction,
)


def spin2_projector():
    ops = spin_matrices(1)
    total = [np.kron(a, np.eye(3)) + np.kron(np.eye(3), a) for a in (ops.S1, ops.S2, ops.S3)]
    c = sum(t @ t for t in total)
    return c @ (c - 2 * np.eye(9)) / 24


def test_two_site_ground_space(aklt):
    g = interval_ground_space(aklt, 2)
    assert g.dim == 4 and g.full
    assert np.allclose(g.basis.conj().T @ g.basis, np.eye(4), atol=1e-12)
    # spin-0 plus spin-1 sectors: annihilated by the spin-2 projector
    assert np.abs(spin2_projector() @ g.basis).max() < 1e-12


def test_three_site_ground_space(aklt):
    assert interval_ground_space(aklt, 3).dim == 4


def test_short_interval_is_flagged(aklt, caplog):
    g = interval_ground_space(aklt, 1)
    assert g.dim == 3 and not g.full
    assert "not k^2" in caplog.text


def test_parent_is_spin2_projector(aklt):
    h = parent_interaction(aklt, 2)
    assert h.rank == 5
    assert np.allclose(h.h, spin2_projector(), atol=1e-12)
    ops = spin_matrices(1)
    ss = sum(np.kron(a, a) for a in (ops.S1, ops.S2, ops.S3))
    assert np.allclose(h.h, ss / 2 + ss @ ss / 6 + np.eye(9) / 3, atol=1e-12)
    assert np.allclose(h.h, builtin_interaction("aklt").bulk / 2 + np.eye(9) / 3, atol=1e-12)


def test_default_interval(aklt):
    assert default_interval(aklt) == 3
    assert parent_interaction(aklt).m == 3


def test_three_site_parent_kernel(aklt):
    h3 = parent_interaction(aklt, 3)
    dim, _ = ed_kernel(h3, 3, "open")
    assert dim == 4
    # the m = 3 ground space is the intersection of the two m = 2 ground spaces
    p2 = spin2_projector()
    H = np.kron(p2, np.eye(3)) + np.kron(np.eye(3), p2)
    w, vecs = np.linalg.eigh(H)
    kernel = vecs[:, w < 1e-10]
    assert np.allclose(h3.h, np.eye(27) - kernel @ kernel.conj().T, atol=1e-10)


def test_frustration_freeness(aklt):
    h = parent_interaction(aklt, 2)
    assert frustration_free_residual(aklt, h, range(4)) <= 1e-12


def test_product_state_energy(product, aklt):
    h = parent_interaction(aklt, 2)
    assert frustration_free_residual(product, h) == pytest.approx(2 / 3, abs=1e-12)


def test_negative_position_rejected(aklt):
    with pytest.raises(BadParameters):
        frustration_free_residual(aklt, parent_interaction(aklt, 2), [-1])


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_kernel_contains_mps(aklt, n):
    h = parent_interaction(aklt, 2)
    dim, basis = ed_kernel(h, n, "open")
    assert dim == 4
    for x in (np.eye(2), np.array([[0, 1], [0, 0]]), np.array([[1, 0], [0, -1]])):
        psi = mps_vector(aklt, n, x)
        assert np.linalg.norm(basis.conj().T @ psi) ** 2 > 1 - 1e-9


def test_periodic_kernel_is_unique(aklt):
    dim, basis = ed_kernel(parent_interaction(aklt, 2), 6, "periodic")
    assert dim == 1
    assert abs(np.vdot(basis[:, 0], mps_vector(aklt, 6))) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_random_parent_is_frustration_free_projector(seed):
    rng = np.random.default_rng(seed)
    v = right_normalize(random_tensor(1, 2, rng))[0]
    h = parent_interaction(v)
    assert h.projector_defect() <= 1e-10
    assert np.linalg.eigvalsh(h.h).min() >= -1e-12
    assert frustration_free_residual(v, h, range(3)) <= 1e-10


def test_complex_tensor_kernel_contains_mps_vector():
    rng = np.random.default_rng(12)
    v = right_normalize(random_tensor(1, 2, rng))[0]
    h = parent_interaction(v)
    dim, basis = ed_kernel(h, 5, "open")
    assert dim == 4
    for x in (np.eye(2), rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))):
        psi = mps_vector(v, 5, x)
        assert np.linalg.norm(basis.conj().T @ psi) ** 2 > 1 - 1e-9
