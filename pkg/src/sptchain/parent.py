"""Frustration-free parent interaction of a primitive MPS.

On an interval of m sites the state is supported on
``G = span{ sum conj tr(X v_{mu_1} ... v_{mu_m}) |mu_1 ... mu_m> : X in M_k }``
(the conjugate because ``omega(|mu><nu|) = rho(v_mu v_nu^*)``); the parent
term is the projector ``h = 1 - P_G``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .ed import Interaction, build_hamiltonian, low_spectrum
from .errors import BadParameters, NotPrimitive
from .mps import MpsTensor, expectation, invariant_state, primitivity_length, word_products

log = logging.getLogger(__name__)

SPAN_CUTOFF = 1e-12


class GroundSpace(NamedTuple):
    basis: np.ndarray
    dim: int
    full: bool


def interval_ground_space(v: MpsTensor, m: int, cutoff: float = SPAN_CUTOFF) -> GroundSpace:
    """Orthonormal basis (columns) of the m-site MPS subspace.

    ``full`` is False when the dimension differs from k^2 (m shorter than the
    injectivity length); the actual span is returned either way.
    """
    if m < 1:
        raise BadParameters("interval length must be positive")
    words = word_products(v, m)
    spanning = words.reshape(words.shape[0], -1).conj()
    u, s, _ = np.linalg.svd(spanning, full_matrices=False)
    rank = int(np.sum(s > cutoff * s[0])) if s.size and s[0] > 0 else 0
    full = rank == v.bond_dim**2
    if not full:
        log.warning("interval of %d sites spans %d dimensions, not k^2 = %d", m, rank, v.bond_dim**2)
    return GroundSpace(u[:, :rank], rank, full)


@dataclass(frozen=True)
class LocalProjector:
    spin_S: float
    m: int
    h: np.ndarray
    rank: int

    def projector_defect(self) -> float:
        return float(np.linalg.norm(self.h @ self.h - self.h, 2))

    def as_interaction(self) -> Interaction:
        return Interaction(self.spin_S, self.m, self.h)


def default_interval(v: MpsTensor) -> int:
    l = primitivity_length(v)
    if l is None:
        raise NotPrimitive("tensor is not primitive")
    m = l + 1
    if not (interval_ground_space(v, m).full and interval_ground_space(v, m + 1).full):
        log.warning("interval ground space has not stabilized at k^2 for m = %d", m)
    return m


def parent_interaction(v: MpsTensor, m: int | None = None) -> LocalProjector:
    """h = 1 - projection onto the m-site ground space; m defaults to primitivity length + 1."""
    if m is None:
        m = default_interval(v)
    g = interval_ground_space(v, m)
    h = np.eye(v.d**m, dtype=complex) - g.basis @ g.basis.conj().T
    h = (h + h.conj().T) / 2
    return LocalProjector(v.spin_S, m, h, v.d**m - g.dim)


def frustration_free_residual(
    v: MpsTensor, h: LocalProjector, positions: Sequence[int] = (0,), rho: np.ndarray | None = None
) -> float:
    """max over x of |omega_v(beta_x(h))|, evaluated on the window [0, x + m - 1]."""
    if rho is None:
        rho = invariant_state(v)
    worst = 0.0
    for x in positions:
        if x < 0:
            raise BadParameters("positions must be non-negative")
        op = np.kron(np.eye(v.d**x), h.h)
        worst = max(worst, abs(expectation(v, op, rho)))
    return worst


def ed_kernel(h: LocalProjector, n: int, boundary: str = "open", q: int | None = None, threshold: float = 1e-8):
    """Kernel of the n-site parent Hamiltonian: (dimension, orthonormal basis columns)."""
    H = build_hamiltonian(h.as_interaction(), n, boundary)
    dim = H.shape[0]
    if q is None:
        q = min(dim, 2 * (h.h.shape[0] - h.rank) + 2)
    w, vecs = low_spectrum(H, q, return_vectors=True)
    if np.all(w < threshold) and q < dim:
        return ed_kernel(h, n, boundary, min(dim, 2 * q), threshold)
    mask = w < threshold
    return int(mask.sum()), vecs[:, mask]
