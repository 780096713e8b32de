"""Schmidt spectra of MPS and of state vectors, and the Kramers degeneracy check.

For a primitive tensor with right fixed point R (``sum v R v^* = R``) and
left fixed point L (``sum v^* L v = L``), the half-infinite chain has Schmidt
probabilities equal to the eigenvalues of ``R^{1/2} L R^{1/2}`` normalized to
unit trace.  This is invariant under any gauge transform of v.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import BadCut, DegeneracyViolated, NotPrimitive, SptError, ValidationError
from .mps import MpsTensor, TransferMap, leading_eigenpair, primitivity_length, psd_sqrt, right_normalize, spin_dim
from .symmetry import tr_index

log = logging.getLogger(__name__)

CLUSTER_RTOL = 1e-8
ZERO_CUTOFF = 1e-13


def _hermitian_psd(x: np.ndarray) -> np.ndarray:
    x = (x + x.conj().T) / 2
    if np.trace(x).real < 0:
        x = -x
    return x


def schmidt_spectrum_mps(v: MpsTensor, cuts: int = 1) -> np.ndarray:
    """Descending Schmidt probabilities of the generated state.

    ``cuts=2`` gives the spectrum of a block cut out of a ring, the outer
    product of the single-cut spectrum with itself (the long-block limit).
    """
    if cuts not in (1, 2):
        raise ValidationError("cuts must be 1 or 2")
    if primitivity_length(v) is None:
        raise NotPrimitive("tensor is not primitive")
    R = _hermitian_psd(leading_eigenpair(TransferMap.self_map(v, "right")).matrix)
    L = _hermitian_psd(leading_eigenpair(TransferMap.self_map(v, "left")).matrix)
    r_half = psd_sqrt(R)
    p = la.eigvalsh(_hermitian_psd(r_half @ L @ r_half.conj().T))
    p = np.clip(p.real, 0.0, None)
    p = np.sort(p / p.sum())[::-1]
    if cuts == 2:
        p = np.sort(np.outer(p, p).ravel())[::-1]
    return p


def schmidt_spectrum_vector(psi: np.ndarray, cut: int, d: int = 3, tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of the reduced density matrix of sites 0 .. cut-1, descending."""
    psi = np.asarray(psi)
    n = int(round(np.log(psi.size) / np.log(d)))
    if d**n != psi.size:
        raise ValidationError(f"vector length {psi.size} is not a power of {d}")
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise ValidationError("state vector is not normalized")
    if not 0 < cut < n:
        raise BadCut(f"cut {cut} outside 1..{n - 1}")
    s = la.svdvals(psi.reshape(d**cut, d ** (n - cut)))
    return np.sort(s**2)[::-1]


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def degeneracy_clusters(p, rtol: float = CLUSTER_RTOL, zero_cutoff: float = ZERO_CUTOFF) -> list:
    """[(value, multiplicity)] of the nonzero entries, grouped within relative tolerance."""
    vals = np.sort(np.asarray(p, dtype=float))[::-1]
    vals = vals[vals > zero_cutoff]
    clusters: list = []
    for x in vals:
        if clusters and abs(clusters[-1][0] - x) <= rtol * clusters[-1][0]:
            value, mult = clusters[-1]
            clusters[-1] = ((value * mult + x) / (mult + 1), mult + 1)
        else:
            clusters.append((float(x), 1))
    return clusters


@dataclass
class KramersVerdict:
    applicable: bool
    passed: bool | None
    entropy: float
    clusters: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "passed": self.passed,
            "entropy": self.entropy,
            "clusters": [{"value": v, "multiplicity": m} for v, m in self.clusters],
        }


def kramers_check(spectrum, zeta: int, tol: float = CLUSTER_RTOL) -> KramersVerdict:
    """Even degeneracy of every Schmidt value and entropy >= log 2 when zeta = -1."""
    p = np.asarray(spectrum, dtype=float)
    if abs(p.sum() - 1) > 1e-8:
        raise ValidationError(f"spectrum sums to {p.sum():.12f}, not 1")
    clusters = degeneracy_clusters(p, tol)
    S = entropy(p)
    if zeta not in (1, -1):
        raise ValidationError("zeta must be +1 or -1")
    if zeta == 1:
        return KramersVerdict(False, None, S, clusters)
    for value, mult in clusters:
        if mult % 2:
            raise DegeneracyViolated(value, mult)
    if S < np.log(2) - tol:
        raise DegeneracyViolated(clusters[0][0] if clusters else 0.0, clusters[0][1] if clusters else 0)
    return KramersVerdict(True, True, S, clusters)


def kramers_structure(k: int) -> np.ndarray:
    """Real U with U^2 = -1 on C^k (k even): i sigma_y x 1."""
    if k % 2:
        raise ValidationError("a Kramers structure needs even bond dimension")
    return np.kron(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(k // 2))


def random_kramers_tensor(rng: np.random.Generator, k: int = 4, spin_S=1, max_tries: int = 20) -> MpsTensor:
    """Random right-normalized tensor whose time-reversed tensors equal U v U^* with conj(U) U = -1.

    A random draw a is symmetrized as ``v = a + R(a)`` with the involution
    ``R(a)_mu = (-1)^{S+mu} U^* conj(a_{-mu}) U``; draws that are not primitive or
    do not give zeta = -1 are rejected.
    """
    if abs(spin_S - round(spin_S)) > 1e-12:
        raise ValidationError("integer spin required")
    d = spin_dim(spin_S)
    U = kramers_structure(k)
    signs = (-1.0) ** np.rint(spin_S + (-spin_S + np.arange(d)))
    for _ in range(max_tries):
        a = rng.standard_normal((d, k, k)) + 1j * rng.standard_normal((d, k, k))
        flipped = signs[:, None, None] * (U.T @ a[::-1].conj() @ U)
        raw = MpsTensor(spin_S, a + flipped)
        try:
            v, _, _ = right_normalize(raw)
            if tr_index(v).zeta == -1:
                return v
        except SptError as exc:  # rejection sampling
            log.debug("rejected Kramers draw: %s", exc)
    raise NotPrimitive(f"no admissible Kramers tensor after {max_tries} draws")
