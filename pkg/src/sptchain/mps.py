"""Translation-invariant matrix product states generated by a tuple of k x k matrices.

Conventions
-----------
The physical index mu runs over -S, ..., S in ascending order, so ``mats[0]``
is v_{-S}.  Matrices are stored as a complex array of shape ``(d, k, k)``.

The right-acting transfer map of a pair (a, b) is ``x -> sum_mu a_mu x b_mu^*``
and the left-acting one is ``x -> sum_mu a_mu^* x b_mu``.  A tensor is
right-normalized when the right-acting self map is unital,
``sum_mu v_mu v_mu^* = 1``; the generated state is then

    omega(e_{mu_1 nu_1} x ... x e_{mu_l nu_l})
        = tr(rho v_{mu_1} ... v_{mu_l} v_{nu_l}^* ... v_{nu_1}^*)

with rho the unique fixed point of the left-acting self map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as sla

from .errors import (
    BadParameters,
    DimensionMismatch,
    IndexOutOfRange,
    NoConvergence,
    NotNormalizable,
    NotPrimitive,
    ValidationError,
)

TOL_NORM = 1e-10
SPAN_CUTOFF = 1e-10
DEGENERACY_RTOL = 1e-9
DENSE_MAX_K = 16
MAX_K = 64


def spin_dim(spin_S) -> int:
    two_s = float(spin_S) * 2
    if two_s < 0 or abs(two_s - round(two_s)) > 1e-12:
        raise ValidationError(f"spin must be a non-negative half-integer, got {spin_S!r}")
    return int(round(two_s)) + 1


def spin_labels(spin_S) -> np.ndarray:
    """Ascending labels -S, ..., S."""
    d = spin_dim(spin_S)
    return -float(spin_S) + np.arange(d)


@dataclass(frozen=True)
class MpsTensor:
    """Generator v = (v_mu) of an MPS.

    Parameters
    ----------
    spin_S : float
        Local spin; the physical dimension is 2S + 1.
    mats : array_like, shape (2S+1, k, k)
        One k x k matrix per label, ordered mu = -S, ..., S.
    right_normalized : bool
        Set when ``sum_mu v_mu v_mu^* = 1``; checked at construction.
    """

    spin_S: float
    mats: np.ndarray
    right_normalized: bool = False
    tol: float = field(default=TOL_NORM, repr=False, compare=False)

    def __post_init__(self):
        d = spin_dim(self.spin_S)
        mats = np.array(self.mats, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValidationError(f"mats must have shape (d, k, k), got {mats.shape}")
        if mats.shape[0] != d:
            raise DimensionMismatch(f"spin {self.spin_S} needs {d} matrices, got {mats.shape[0]}")
        if mats.shape[1] == 0:
            raise ValidationError("bond dimension must be positive")
        if not np.all(np.isfinite(mats)):
            raise ValidationError("mats contain non-finite entries")
        mats.setflags(write=False)
        object.__setattr__(self, "spin_S", float(self.spin_S))
        object.__setattr__(self, "mats", mats)
        if self.right_normalized:
            defect = self.normalization_defect()
            if defect > self.tol:
                raise ValidationError(f"tensor flagged right_normalized has defect {defect:.3e}")

    @property
    def d(self) -> int:
        return self.mats.shape[0]

    @property
    def bond_dim(self) -> int:
        return self.mats.shape[1]

    @property
    def labels(self) -> np.ndarray:
        return spin_labels(self.spin_S)

    def index_of(self, mu) -> int:
        i = int(round(float(mu) + self.spin_S))
        if i < 0 or i >= self.d or abs(float(mu) + self.spin_S - i) > 1e-12:
            raise IndexOutOfRange(f"label {mu} outside -{self.spin_S}..{self.spin_S}")
        return i

    def __getitem__(self, mu) -> np.ndarray:
        return self.mats[self.index_of(mu)]

    def normalization_defect(self) -> float:
        gram = np.einsum("mij,mkj->ik", self.mats, self.mats.conj())
        return float(np.linalg.norm(gram - np.eye(self.bond_dim), 2))

    def conjugated(self, g: np.ndarray) -> "MpsTensor":
        """Gauge transform v_mu -> g v_mu g^{-1}."""
        g = np.asarray(g, dtype=complex)
        ginv = np.linalg.inv(g)
        return MpsTensor(self.spin_S, g @ self.mats @ ginv, right_normalized=False)


def aklt_tensor() -> MpsTensor:
    """Spin-1 AKLT generator: sqrt(2/3) s+, -sqrt(1/3) s_z, -sqrt(2/3) s- for mu = +1, 0, -1."""
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    mats = [-np.sqrt(2 / 3) * sp.T, -np.sqrt(1 / 3) * sz, np.sqrt(2 / 3) * sp]
    return MpsTensor(1, mats, right_normalized=True)


def product_tensor(spin_S=1, mu=0) -> MpsTensor:
    """k = 1 generator of the product state with every site in |mu>."""
    mats = np.zeros((spin_dim(spin_S), 1, 1), dtype=complex)
    mats[int(round(mu + spin_S)), 0, 0] = 1.0
    return MpsTensor(spin_S, mats, right_normalized=True)


def random_tensor(spin_S, k: int, rng: np.random.Generator) -> MpsTensor:
    d = spin_dim(spin_S)
    mats = rng.standard_normal((d, k, k)) + 1j * rng.standard_normal((d, k, k))
    return MpsTensor(spin_S, mats)


def random_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# --------------------------------------------------------------------------
# transfer maps


@dataclass(frozen=True)
class TransferMap:
    a: MpsTensor
    b: MpsTensor
    direction: str = "right"

    def __post_init__(self):
        if self.direction not in ("right", "left"):
            raise ValidationError(f"direction must be 'right' or 'left', got {self.direction!r}")
        if self.a.mats.shape != self.b.mats.shape:
            raise DimensionMismatch(f"tensor shapes differ: {self.a.mats.shape} vs {self.b.mats.shape}")

    @classmethod
    def self_map(cls, v: MpsTensor, direction: str = "right") -> "TransferMap":
        return cls(v, v, direction)

    @property
    def k(self) -> int:
        return self.a.bond_dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return transfer_apply(self, x)

    def matrix(self) -> np.ndarray:
        """Dense k^2 x k^2 matrix acting on row-major vec(x)."""
        a, b = self.a.mats, self.b.mats
        if self.direction == "right":
            # vec(a x b^*) = (a kron conj(b)) vec(x)
            return np.einsum("mij,mkl->ikjl", a, b.conj()).reshape(self.k**2, self.k**2)
        # vec(a^* x b) = (a^* kron b^T) vec(x)
        return np.einsum("mji,mlk->ikjl", a.conj(), b).reshape(self.k**2, self.k**2)


def transfer_apply(tmap: TransferMap, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (tmap.k, tmap.k):
        raise DimensionMismatch(f"expected a {tmap.k}x{tmap.k} matrix, got shape {x.shape}")
    a, b = tmap.a.mats, tmap.b.mats
    if tmap.direction == "right":
        return np.einsum("mij,jk,mlk->il", a, x, b.conj())
    return np.einsum("mji,jk,mkl->il", a.conj(), x, b)


class LeadingEigenpair(NamedTuple):
    value: complex
    matrix: np.ndarray
    degenerate: bool
    second_modulus: float
    residual: float


def _fix_phase(x: np.ndarray, tol: float) -> np.ndarray:
    tr = np.trace(x)
    if abs(tr) > max(tol, 1e-8) * np.linalg.norm(x):
        return x * (abs(tr) / tr)
    flat = x.ravel()
    i = int(np.argmax(np.abs(flat) > (1 - 1e-8) * np.abs(flat).max()))
    return x * (abs(flat[i]) / flat[i])


def leading_eigenpair(tmap: TransferMap, tol: float = 1e-10, max_iter: int = 2000) -> LeadingEigenpair:
    """Maximal-modulus eigenvalue of a transfer map and its eigenmatrix.

    Dense eigendecomposition of the k^2 x k^2 matrix for k <= 16, ARPACK above.
    The eigenmatrix has unit Frobenius norm and a phase fixed so its trace is
    real positive (or, for traceless X, its first largest entry).  Ties in
    modulus within a relative 1e-9 set ``degenerate``; the caller decides.
    """
    k = tmap.k
    if k > MAX_K:
        raise BadParameters(f"bond dimension {k} exceeds the supported maximum {MAX_K}")
    if k <= DENSE_MAX_K:
        evals, evecs = np.linalg.eig(tmap.matrix())
        order = np.lexsort((-evals.real, -np.round(np.abs(evals), 12)))
        lam, vec = evals[order[0]], evecs[:, order[0]]
        second = float(np.abs(evals[order[1]])) if len(evals) > 1 else 0.0
    else:
        op = sla.LinearOperator(
            (k * k, k * k),
            matvec=lambda y: transfer_apply(tmap, y.reshape(k, k)).ravel(),
            dtype=complex,
        )
        v0 = np.ones(k * k, dtype=complex) / k
        try:
            evals, evecs = sla.eigs(op, k=2, which="LM", tol=tol, maxiter=max_iter, v0=v0)
        except sla.ArpackNoConvergence as exc:
            raise NoConvergence(f"leading eigenpair did not converge: {exc}") from exc
        order = np.lexsort((-evals.real, -np.abs(evals)))
        lam, vec = evals[order[0]], evecs[:, order[0]]
        second = float(np.abs(evals[order[1]]))
    x = vec.reshape(k, k)
    x = _fix_phase(x / np.linalg.norm(x), tol)
    residual = float(np.linalg.norm(transfer_apply(tmap, x) - lam * x))
    if residual > max(tol, 1e-12) * max(1.0, abs(lam)) * 1e3:
        raise NoConvergence(f"eigen-residual {residual:.3e} too large")
    top = abs(lam)
    degenerate = k > 1 and top > 0 and (top - second) < DEGENERACY_RTOL * top
    return LeadingEigenpair(complex(lam), x, bool(degenerate), second, residual)


def psd_sqrt(x: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(x)
    return (u * np.sqrt(np.clip(w, 0, None))) @ u.conj().T


def right_normalize(raw: MpsTensor, tol: float = TOL_NORM):
    """Rescale and gauge ``raw`` so that ``sum_mu w_mu w_mu^* = 1``.

    Returns ``(w, gauge, scale)`` with ``w_mu = gauge^{-1} v_mu gauge / scale``;
    the gauge is the square root of the leading right eigenmatrix normalized to
    trace k, so an already normalized tensor comes back with gauge 1.
    """
    pair = leading_eigenpair(TransferMap.self_map(raw), tol=tol)
    if pair.degenerate:
        raise NotNormalizable("leading eigenvalue of the transfer map is degenerate")
    lam = pair.value
    if lam.real <= 0 or abs(lam.imag) > 1e-8 * abs(lam):
        raise NotNormalizable(f"leading eigenvalue {lam} is not real positive")
    x = pair.matrix
    x = (x + x.conj().T) / 2
    x = x * (raw.bond_dim / np.trace(x).real)
    w_eig = np.linalg.eigvalsh(x)
    if w_eig.min() <= max(tol, 1e-12) * w_eig.max():
        raise NotNormalizable("leading eigenmatrix is singular")
    gauge = psd_sqrt(x)
    scale = float(np.sqrt(lam.real))
    mats = np.linalg.solve(gauge, raw.mats) @ gauge / scale
    mats = np.asarray(mats)
    w = MpsTensor(raw.spin_S, mats)
    if w.normalization_defect() > max(tol, 1e3 * np.finfo(float).eps * raw.bond_dim):
        raise NotNormalizable(f"normalization defect {w.normalization_defect():.3e} exceeds tol")
    return MpsTensor(raw.spin_S, mats, right_normalized=True, tol=max(tol, 1e-9)), gauge, scale


def _require_normalized(v: MpsTensor, tol: float):
    defect = v.normalization_defect()
    if defect > max(tol, TOL_NORM) * 10:
        raise ValidationError(f"tensor is not right-normalized (defect {defect:.3e}); call right_normalize")


def invariant_state(v: MpsTensor, tol: float = TOL_NORM) -> np.ndarray:
    """Density matrix rho with ``sum_mu v_mu^* rho v_mu = rho``, trace 1."""
    _require_normalized(v, tol)
    pair = leading_eigenpair(TransferMap.self_map(v, "left"), tol=tol)
    if pair.degenerate:
        raise NotPrimitive("fixed point of the transfer map is not unique")
    if abs(pair.value - 1) > 1e-6:
        raise NoConvergence(f"leading eigenvalue {pair.value} differs from 1")
    rho = pair.matrix
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    if np.linalg.eigvalsh(rho).min() < -max(tol, 1e-10) * 10:
        raise NotPrimitive("fixed point is not positive semidefinite")
    return rho


def primitivity_length(v: MpsTensor, l_max: int | None = None, cutoff: float = SPAN_CUTOFF) -> int | None:
    """Smallest l with span{v_{mu_1} ... v_{mu_l}} = M_k, or None if not reached by ``l_max``.

    The default cap is 2 k^4.  Iteration stops early once the span sequence
    revisits a subspace, since it is then periodic and can never become full.
    """
    k = v.bond_dim
    full = k * k
    if l_max is None:
        l_max = 2 * k**4
    scale = max(np.linalg.norm(v.mats.reshape(v.d, -1), axis=1).max(), 1e-300)
    mats = v.mats / scale

    def orth(vectors):
        if vectors.shape[0] == 0:
            return vectors
        _, s, vh = np.linalg.svd(vectors, full_matrices=False)
        if s.size == 0 or s[0] == 0:
            return vectors[:0]
        return vh[s > cutoff * s[0]]

    basis = orth(mats.reshape(v.d, full))  # rows span K_1
    seen = []
    for l in range(1, l_max + 1):
        if basis.shape[0] == full:
            return l
        if basis.shape[0] == 0:
            return None
        proj = basis.conj().T @ basis
        for old in seen:
            if old.shape == proj.shape and np.linalg.norm(old - proj) < 1e-8:
                return None
        seen.append(proj)
        elems = basis.reshape(-1, k, k)
        grown = np.einsum("mij,bjk->mbik", mats, elems).reshape(-1, full)
        basis = orth(grown)
    return None


def word_products(v: MpsTensor, length: int) -> np.ndarray:
    """All products v_{mu_1} ... v_{mu_l} in lexicographic label order, shape (d^l, k, k)."""
    out = np.broadcast_to(np.eye(v.bond_dim, dtype=complex), (1, v.bond_dim, v.bond_dim))
    for _ in range(length):
        out = np.einsum("aij,mjk->amik", out, v.mats).reshape(-1, v.bond_dim, v.bond_dim)
    return out


def evaluate_state(v: MpsTensor, sites: Sequence[tuple], rho: np.ndarray | None = None) -> complex:
    """omega_v(e_{mu_1 nu_1} x ... x e_{mu_l nu_l}) for ``sites = [(mu_1, nu_1), ...]``."""
    idx = [(v.index_of(mu), v.index_of(nu)) for mu, nu in sites]
    if rho is None:
        rho = invariant_state(v)
    left = np.eye(v.bond_dim, dtype=complex)
    right = np.eye(v.bond_dim, dtype=complex)
    for i, j in idx:
        left = left @ v.mats[i]
        right = v.mats[j].conj().T @ right
    return complex(np.trace(rho @ left @ right))


def expectation(v: MpsTensor, op: np.ndarray, rho: np.ndarray | None = None) -> complex:
    """omega_v(A) for a matrix A on l consecutive sites (lexicographic basis)."""
    op = np.asarray(op)
    dim = op.shape[0]
    length = int(round(np.log(dim) / np.log(v.d))) if v.d > 1 else 0
    if op.shape != (dim, dim) or v.d**length != dim:
        raise DimensionMismatch(f"operator of shape {op.shape} is not a matrix on whole sites of dimension {v.d}")
    if rho is None:
        rho = invariant_state(v)
    words = word_products(v, length)
    return complex(np.einsum("mn,ab,mbc,nac->", op, rho, words, words.conj()))


def mps_vector(v: MpsTensor, n: int, boundary_matrix: np.ndarray | None = None) -> np.ndarray:
    """Normalized n-site vector with amplitudes conj tr(X v_{mu_1} ... v_{mu_n}).

    The conjugate makes ``<psi| A |psi>`` follow the convention
    ``omega(|mu><nu|) = rho(v_mu v_nu^*)`` of :func:`evaluate_state`.  X defaults
    to the identity, the translation-invariant periodic vector.
    """
    x = np.eye(v.bond_dim, dtype=complex) if boundary_matrix is None else np.asarray(boundary_matrix, dtype=complex)
    if x.shape != (v.bond_dim, v.bond_dim):
        raise DimensionMismatch(f"boundary matrix must be {v.bond_dim}x{v.bond_dim}")
    psi = np.einsum("ij,mji->m", x, word_products(v, n)).conj()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValidationError("boundary matrix annihilates the state")
    return psi / norm
