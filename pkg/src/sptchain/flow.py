"""Quasi-adiabatic continuation on finite chains.

The generator of a path H(s) is

    D(s) = int W(t) exp(iHt) H'(s) exp(-iHt) dt

with W a real odd filter whose sine transform is 1/omega for |omega| >= gamma.
In the eigenbasis of H this is ``D_ab = i g(E_a - E_b) H'_ab`` with
``g(omega) = int W(t) sin(omega t) dt``, so D moves any spectral projection
separated from the rest by a gap of at least gamma by parallel transport:
``P(s) = U(s) P(0) U(s)^*`` for ``-i dU/ds = D U``.

Sign convention: the transform reported by :meth:`FilterFunction.transform`
is ``i int W(t) exp(i omega t) dt = -g(omega)``, equal to -1/omega outside
the gap window.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.integrate import quad, simpson
from scipy.sparse.linalg import ArpackError, svds
from scipy.special import erfc

from .ed import Interaction, build_hamiltonian, local_operator, spin_matrices
from .errors import BadParameters, GapClosed, OdeStepFailure, QuadratureFailure
from .mps import spin_labels

log = logging.getLogger(__name__)

TAIL_TOL = 1e-6
WIDTH_RATIO = 5.0


@dataclass(frozen=True)
class FilterFunction:
    """W(t) = sign(t) erfc(sigma |t| / sqrt 2) / 2 with sigma = gamma / 5.

    Its sine transform is ``g(omega) = (1 - exp(-omega^2 / 2 sigma^2)) / omega``,
    within ``exp(-12.5) / gamma`` of 1/omega for |omega| >= gamma.  Values are
    tabulated on [0, t_max] (the negative half follows by oddness).
    """

    gamma: float
    sigma: float
    t_max: float
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * np.sign(t) * erfc(self.sigma * np.abs(t) / np.sqrt(2))

    def sine_transform(self, omega):
        """g(omega) = int W(t) sin(omega t) dt in closed form, g(0) = 0."""
        omega = np.asarray(omega, dtype=float)
        x = omega**2 / (2 * self.sigma**2)
        safe = np.where(omega == 0, 1.0, omega)
        small = np.abs(x) < 1e-8
        # (1 - exp(-x)) / omega, with its series near 0
        g = np.where(small, omega / (2 * self.sigma**2), -np.expm1(-x) / safe)
        return np.where(omega == 0, 0.0, g)

    def transform(self, omega):
        return -self.sine_transform(omega)

    def tail(self, t: float) -> float:
        """I(t) = int_t^inf |W(u)| du."""
        t = abs(float(t))
        val, _ = quad(lambda u: 0.5 * erfc(self.sigma * u / np.sqrt(2)), t, np.inf, epsabs=1e-14)
        return float(val)

    def quadrature_sine_transform(self, omega) -> np.ndarray:
        """g(omega) by composite Simpson on the tabulated grid (twice the half-line integral)."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        h = self.grid[1] - self.grid[0]
        if omega.size and np.abs(omega).max() * h > 0.25:
            raise QuadratureFailure(
                f"grid step {h:.3e} too coarse for frequency {np.abs(omega).max():.3e}; raise grid_size"
            )
        out = np.empty(omega.shape)
        for i0 in range(0, omega.size, 256):
            chunk = omega[i0 : i0 + 256]
            out[i0 : i0 + 256] = 2 * simpson(self.values[None, :] * np.sin(chunk[:, None] * self.grid[None, :]), x=self.grid)
        return out


def make_filter(gamma: float, t_max: float | None = None, grid_size: int = 8193) -> FilterFunction:
    if not gamma > 0 or not np.isfinite(gamma):
        raise BadParameters("gamma must be positive")
    if grid_size < 3:
        raise BadParameters("grid_size must be at least 3")
    sigma = gamma / WIDTH_RATIO
    if t_max is None:
        # tail of erfc(sigma t / sqrt 2) / 2 falls below TAIL_TOL
        t_max = 1.0 / sigma
        probe = FilterFunction(gamma, sigma, t_max, np.zeros(1), np.zeros(1))
        while probe.tail(t_max) > TAIL_TOL:
            t_max *= 1.25
    elif t_max <= 0:
        raise BadParameters("t_max must be positive")
    if grid_size % 2 == 0:
        grid_size += 1
    grid = np.linspace(0.0, t_max, grid_size)
    values = 0.5 * erfc(sigma * grid / np.sqrt(2))
    values[0] = 0.5
    grid.setflags(write=False)
    values.setflags(write=False)
    return FilterFunction(float(gamma), sigma, float(t_max), grid, values)


def _generator_from_eig(E, vecs, dH, filt: FilterFunction, method: str) -> np.ndarray:
    omega = E[:, None] - E[None, :]
    if method == "spectral":
        g = filt.sine_transform(omega)
    elif method == "quadrature":
        uniq, inv = np.unique(np.round(omega, 13), return_inverse=True)
        g = filt.quadrature_sine_transform(uniq)[inv].reshape(omega.shape)
    else:
        raise BadParameters(f"method must be 'spectral' or 'quadrature', got {method!r}")
    dh = vecs.conj().T @ dH @ vecs
    if np.isrealobj(vecs) and np.isrealobj(dh):
        # real symmetric data: D = i K with K real antisymmetric
        K = vecs @ (g * dh) @ vecs.T
        return 1j * (K - K.T) / 2
    D = vecs @ (1j * g * dh) @ vecs.conj().T
    return (D + D.conj().T) / 2


def _dense(M) -> np.ndarray:
    M = np.asarray(M.toarray() if hasattr(M, "toarray") else M)
    if np.iscomplexobj(M) and not np.any(M.imag):
        M = M.real
    return M


def quasi_adiabatic_generator(H, dH, filt: FilterFunction, method: str = "spectral") -> np.ndarray:
    """Hermitian D = int W(t) e^{iHt} dH e^{-iHt} dt.

    ``method="spectral"`` uses the closed-form transform of the filter in the
    eigenbasis of H; ``"quadrature"`` integrates the tabulated filter by
    composite Simpson and serves as the oracle.
    """
    H = _dense(H)
    dH = _dense(dH)
    if H.shape != dH.shape or H.shape[0] != H.shape[1]:
        raise BadParameters("H and dH/ds must be square of equal size")
    if np.iscomplexobj(H) or np.iscomplexobj(dH):
        H, dH = H.astype(complex), dH.astype(complex)
    E, vecs = la.eigh(H)
    return _generator_from_eig(E, vecs, dH, filt, method)


# --------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class LinearPath:
    """H(s) = (1 - s) H0 + s H1 as dense matrices."""

    H0: np.ndarray
    H1: np.ndarray

    def __call__(self, s: float):
        return (1 - s) * self.H0 + s * self.H1, self.H1 - self.H0

    @classmethod
    def from_interactions(
        cls, phi0: Interaction, phi1: Interaction, n: int, boundary: str = "open", sector: np.ndarray | None = None
    ):
        """Path between two chain Hamiltonians, optionally restricted to a conserved sector.

        ``sector`` lists basis indices of an invariant subspace of both
        Hamiltonians (see :func:`sz_sector`); the flow then acts on that block only.
        """
        H0 = _dense(build_hamiltonian(phi0, n, boundary, dense=True))
        H1 = _dense(build_hamiltonian(phi1, n, boundary, dense=True))
        if sector is not None:
            idx = np.asarray(sector)
            for H in (H0, H1):
                leak = np.abs(np.delete(H[:, idx], idx, axis=0)).max(initial=0.0)
                if leak > 1e-12:
                    raise BadParameters(f"sector is not invariant (leak {leak:.3e})")
            H0, H1 = H0[np.ix_(idx, idx)], H1[np.ix_(idx, idx)]
        return cls(H0, H1)


def sz_sector(n: int, spin_S, m: float = 0.0) -> np.ndarray:
    """Basis indices with total S^z = m (lexicographic basis, labels ascending)."""
    labels = spin_labels(spin_S)
    d = len(labels)
    digits = (np.arange(d**n)[:, None] // d ** np.arange(n - 1, -1, -1)[None, :]) % d
    total = labels[digits].sum(axis=1)
    return np.flatnonzero(np.abs(total - m) < 1e-9)


def unitarity_defect(U: np.ndarray) -> float:
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))


def _reproject(U):
    # Newton-Schulz steps towards the polar factor; U is already close to unitary
    for _ in range(2):
        U = 1.5 * U - 0.5 * U @ (U.conj().T @ U)
    return U


class _Rk4:
    """Classical RK4 for dY/ds = rhs(A(s), Y) (Y a tuple of matrices) with step doubling.

    ``gens(s)`` returns the generators A(s), cached per s; the default
    right-hand side is ``i A_j Y_j`` componentwise.  The local error estimate
    is ``|Y_h - Y_{h/2,h/2}| / 15``; steps are accepted when it is at most
    ``ode_tol * h``.
    """

    def __init__(self, gens: Callable[[float], tuple], ode_tol: float, h0: float = 0.02, h_min: float = 1e-7, rhs=None):
        self.gens = gens
        self.rhs = rhs or (lambda A, Y: tuple(1j * a @ y for a, y in zip(A, Y)))
        self.tol = ode_tol
        self.h = h0
        self.h_min = h_min
        self.cache: dict = {}
        self.steps = 0
        self.rejected = 0
        self.reprojections = 0

    def _A(self, s):
        key = round(s, 14)
        if key not in self.cache:
            if len(self.cache) > 64:
                self.cache.clear()
            self.cache[key] = self.gens(s)
        return self.cache[key]

    def _step(self, s, Y, h):
        def f(s_, Y_):
            return self.rhs(self._A(s_), Y_)

        k1 = f(s, Y)
        k2 = f(s + h / 2, tuple(y + h / 2 * k for y, k in zip(Y, k1)))
        k3 = f(s + h / 2, tuple(y + h / 2 * k for y, k in zip(Y, k2)))
        k4 = f(s + h, tuple(y + h * k for y, k in zip(Y, k3)))
        return tuple(y + h / 6 * (a + 2 * b + 2 * c + d) for y, a, b, c, d in zip(Y, k1, k2, k3, k4))

    def advance(self, s, Y, s_end, unitary=True):
        while s < s_end - 1e-14:
            h = min(self.h, s_end - s)
            full = self._step(s, Y, h)
            half = self._step(s + h / 2, self._step(s, Y, h / 2), h / 2)
            err = max(float(np.abs(a - b).max()) for a, b in zip(full, half)) / 15
            if err <= self.tol * max(h, 1e-3) or h <= self.h_min:
                if h <= self.h_min and err > self.tol * max(h, 1e-3):
                    raise OdeStepFailure(f"step size underflow at s={s:.6f} (error {err:.3e})")
                # Richardson extrapolation of the accepted pair
                Y = tuple(b + (b - a) / 15 for a, b in zip(full, half))
                s += h
                self.steps += 1
                if unitary and self.steps % 10 == 0:
                    Y = tuple(_reproject(y) for y in Y)
                    self.reprojections += 1
            else:
                self.rejected += 1
            ratio = (self.tol * max(h, 1e-3) / err) ** 0.2 if err > 0 else 2.0
            self.h = float(np.clip(0.9 * ratio, 0.2, 2.0)) * h
        return s, Y


@dataclass
class FlowState:
    s: float
    U: np.ndarray
    P: np.ndarray
    fidelity_defect: float
    unitarity_defect: float
    V: np.ndarray | None = None
    W_fact: np.ndarray | None = None


@dataclass
class FlowTrajectory:
    states: list
    steps: int
    rejected: int
    reprojections: int

    @property
    def max_fidelity_defect(self) -> float:
        return max(st.fidelity_defect for st in self.states)

    def report(self) -> list:
        return [
            {"s": st.s, "fidelity_defect": st.fidelity_defect, "unitarity_defect": st.unitarity_defect}
            for st in self.states
        ]


def low_projection(H: np.ndarray, rank: int, gamma: float) -> np.ndarray:
    """Spectral projection onto the ``rank`` lowest levels; GapClosed below gamma."""
    E, vecs = la.eigh(H)
    if rank < len(E) and E[rank] - E[rank - 1] < gamma:
        raise GapClosed(f"gap {E[rank] - E[rank - 1]:.3e} above the tracked cluster is below gamma = {gamma}")
    V = vecs[:, :rank]
    return V @ V.conj().T


def flow_projection(
    path: Callable[[float], tuple],
    checkpoints: Sequence[float],
    filt: FilterFunction,
    P0: np.ndarray | None = None,
    rank: int = 1,
    ode_tol: float = 1e-8,
    method: str = "spectral",
) -> FlowTrajectory:
    """Integrate -i dU/ds = D(s) U from the first checkpoint and compare U P0 U^* with ED.

    ``path(s)`` returns (H(s), dH/ds).  P0 defaults to the projection onto the
    ``rank`` lowest levels of H at the first checkpoint.
    """
    checkpoints = [float(s) for s in checkpoints]
    if not checkpoints or any(b < a for a, b in zip(checkpoints, checkpoints[1:])):
        raise BadParameters("checkpoints must be a non-empty ascending sequence")
    H, _ = path(checkpoints[0])
    dim = H.shape[0]
    if P0 is None:
        P0 = low_projection(H, rank, filt.gamma)
    rank = int(round(np.trace(P0).real))

    def gens(s):
        Hs, dHs = path(s)
        return (quasi_adiabatic_generator(Hs, dHs, filt, method),)

    rk = _Rk4(gens, ode_tol)
    U = np.eye(dim, dtype=complex)
    s = checkpoints[0]
    states = []
    for target in checkpoints:
        s, (U,) = rk.advance(s, (U,), target)
        P = U @ P0 @ U.conj().T
        Hs, _ = path(target)
        exact = low_projection(Hs, rank, filt.gamma)
        defect = float(np.linalg.norm(exact - P, 2))
        drift = abs(np.trace(P).real - np.trace(P0).real)
        if drift > 1e-8:
            log.warning("projection trace drifted by %.3e at s=%.4f", drift, target)
        states.append(FlowState(target, U.copy(), P, defect, unitarity_defect(U)))
    return FlowTrajectory(states, rk.steps, rk.rejected, rk.reprojections)


# --------------------------------------------------------------------------
# boundary generator and factorization


@dataclass(frozen=True)
class SplitPath:
    """Interpolating path (1 - s) phi0 + s phi1 on an open chain of n sites cut at the centre.

    Sites 0 .. n/2 - 1 form the left half and n/2 .. n - 1 the right half, so
    the cut sits between the two middle sites.  The half Hamiltonians keep the
    terms inside each half and act on the half's own space.  ``decoupled``
    drops every term crossing the cut from the full Hamiltonian as well.
    """

    phi0: Interaction
    phi1: Interaction
    n: int
    decoupled: bool = False

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise BadParameters("the split chain needs an even number of sites")
        if self.phi0.spin_S != self.phi1.spin_S:
            raise BadParameters("interactions act on different spins")
        if max(self.phi0.range, self.phi1.range) > self.n // 2:
            raise BadParameters("interaction range exceeds the half chain")

    @property
    def cut(self) -> int:
        return self.n // 2

    @property
    def d(self) -> int:
        return self.phi0.d

    def _parts(self, phi):
        left = _dense(build_hamiltonian(phi, self.cut, "open", dense=True))
        right = _dense(build_hamiltonian(phi, self.n - self.cut, "open", dense=True))
        if self.decoupled:
            full = sp.kron(left, sp.identity(right.shape[0])) + sp.kron(sp.identity(left.shape[0]), right)
        else:
            full = build_hamiltonian(phi, self.n, "open")
        full = sp.csr_matrix(full)
        if np.iscomplexobj(full.data) and not np.any(full.data.imag):
            full = full.real
        return full, left, right

    @cached_property
    def _endpoints(self):
        return self._parts(self.phi0), self._parts(self.phi1)

    def hamiltonians(self, s: float):
        """((H_o, H_L, H_R), (dH_o, dH_L, dH_R)) at s; the full-chain pair is sparse."""
        a, b = self._endpoints
        Hs = tuple((1 - s) * x + s * y for x, y in zip(a, b))
        dHs = tuple(y - x for x, y in zip(a, b))
        return Hs, dHs

    @cached_property
    def blocks(self) -> list:
        """Index sets of total S^z when both interactions conserve it, else one block."""
        labels = spin_labels(self.phi0.spin_S)
        d, n = len(labels), self.n
        digits = (np.arange(d**n)[:, None] // d ** np.arange(n - 1, -1, -1)[None, :]) % d
        total = labels[digits].sum(axis=1)
        for full, _, _ in self._endpoints:
            coo = full.tocoo()
            mask = np.abs(coo.data) > 1e-14
            if np.any(total[coo.row[mask]] != total[coo.col[mask]]):
                return [np.arange(d**n)]
        return [np.flatnonzero(total == m) for m in np.unique(total)]


def _assemble(blocks, mats, dim) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=np.result_type(*mats))
    for idx, m in zip(blocks, mats):
        out[np.ix_(idx, idx)] = m
    return out


def _block_norm(X, blocks) -> float:
    return max(_op_norm(X[np.ix_(idx, idx)]) for idx in blocks)


def locality_profile(V: np.ndarray, n: int, d: int, cut: int, blocks=None, atol: float = 0.0) -> np.ndarray:
    """Relative weight ``|V - E_r(V)| / |V|`` for r = 0 .. max distance.

    E_r is the normalized partial trace onto the sites at distance < r from the
    cut (distance of site j: j - cut on the right, cut - 1 - j on the left).
    ``blocks`` lists charge sectors preserved by V, used to split the norms.
    V with norm at most ``atol`` counts as zero and gets an all-zero profile.
    """
    if np.iscomplexobj(V) and not np.any(V.real):
        V = V.imag
    blocks = blocks or [np.arange(V.shape[0])]
    norm = _block_norm(V, blocks)
    rmax = max(cut, n - cut)
    out = np.zeros(rmax + 1)
    if norm <= atol:
        return out
    T = V.reshape((d,) * (2 * n))
    for r in range(rmax + 1):
        lo, hi = max(cut - r, 0), min(cut + r, n)
        keep = list(range(lo, hi))
        # trace out sites outside the window, then re-embed with identities
        letters = list(range(2 * n))
        for j in range(n):
            if j not in keep:
                letters[n + j] = letters[j]
        sub = np.einsum(T, letters, keep + [n + j for j in keep]) / d ** (n - len(keep))
        sub = sub.reshape(d ** len(keep), d ** len(keep))
        approx = np.kron(np.kron(np.eye(d**lo), sub), np.eye(d ** (n - hi)))
        approx -= V
        out[r] = _block_norm(approx, blocks) / norm
        del approx
    return out


@dataclass
class BoundaryGenerator:
    """Generators at one s.  D_L and D_R act on their half spaces; D_o and V on the whole chain."""

    D_o: np.ndarray
    D_L: np.ndarray
    D_R: np.ndarray
    V: np.ndarray
    profile: np.ndarray | None = None
    V_norm: float = 0.0


def _sector_generators(path: SplitPath, s: float, filt: FilterFunction, method: str = "spectral"):
    """(D_L, D_R, [D_o per block], [V per block])."""
    (Ho, HL, HR), (dHo, dHL, dHR) = path.hamiltonians(s)
    D_L = quasi_adiabatic_generator(HL, dHL, filt, method)
    D_R = quasi_adiabatic_generator(HR, dHR, filt, method)
    diag_L, diag_R = np.diag(D_L), np.diag(D_R)
    d_R = D_R.shape[0]
    D_o, V = [], []
    for idx in path.blocks:
        sub = np.ix_(idx, idx)
        D = quasi_adiabatic_generator(Ho[sub], dHo[sub], filt, method)
        # block of D_L x 1 + 1 x D_R without forming the full embedding
        iL, iR = np.divmod(idx, d_R)
        halves = D_L[iL[:, None], iL[None, :]] * (iR[:, None] == iR[None, :])
        halves = halves + D_R[iR[:, None], iR[None, :]] * (iL[:, None] == iL[None, :])
        D_o.append(D)
        V.append(halves - D)
    return D_L, D_R, D_o, V


def boundary_generator(
    path: SplitPath, s: float, filt: FilterFunction, method: str = "spectral", profile: bool = True
) -> BoundaryGenerator:
    """Generators on the whole chain and on each half, and V = D_L + D_R - D_o."""
    D_L, D_R, D_o, V = _sector_generators(path, s, filt, method)
    dim = path.d**path.n
    V_norm = max(_op_norm(v) for v in V)
    V_full = _assemble(path.blocks, V, dim)
    # V below roundoff of the half generators is zero
    atol = 1e-12 * max(1.0, _op_norm(D_L) + _op_norm(D_R))
    prof = locality_profile(V_full, path.n, path.d, path.cut, path.blocks, atol) if profile else None
    return BoundaryGenerator(_assemble(path.blocks, D_o, dim), D_L, D_R, V_full, prof, V_norm)


def default_probes(n: int, spin_S, cut: int | None = None) -> list:
    """Single-site spin components on every site plus S.S across the cut."""
    ops = spin_matrices(spin_S)
    d = ops.S1.shape[0]
    probes = [local_operator(a, (j,), n, d) for j in range(n) for a in (ops.S1, ops.S2, ops.S3)]
    if cut is not None and 0 < cut < n:
        ss = sum(np.kron(a, a) for a in (ops.S1, ops.S2, ops.S3))
        probes.append(local_operator(ss, (cut - 1, cut), n, d))
    return probes


@dataclass
class FactorizationResult:
    checkpoints: list
    defects: list
    W: list
    steps: int

    @property
    def max_defect(self) -> float:
        return max(self.defects)


def _op_norm(X) -> float:
    if not np.any(X):
        return 0.0
    if X.shape[0] <= 200:
        return float(np.linalg.norm(X, 2))
    v0 = np.random.default_rng(0).standard_normal(min(X.shape))
    try:
        return float(svds(X, k=1, v0=v0, tol=1e-10, return_singular_vectors=False)[0])
    except ArpackError:
        return float(np.linalg.norm(X, 2))


def factorization_check(
    path: SplitPath,
    checkpoints: Sequence[float],
    filt: FilterFunction,
    ode_tol: float = 1e-8,
    probes: Sequence[np.ndarray] | None = None,
) -> FactorizationResult:
    """Integrate the full, left and right flows together with dW/ds = i U_o^* V U_o W.

    With Heisenberg automorphisms alpha(A) = U^* A U, the composite
    alpha_o o (alpha_L^{-1} x alpha_R^{-1}) should equal Ad W.  The defect is
    the largest deviation of that identity over the probe operators.  When
    total S^z is conserved, U_o and W are integrated block by block.
    """
    checkpoints = [float(s) for s in checkpoints]
    if not checkpoints or checkpoints[0] < 0 or any(b < a for a, b in zip(checkpoints, checkpoints[1:])):
        raise BadParameters("checkpoints must be ascending and non-negative")
    if probes is None:
        probes = default_probes(path.n, path.phi0.spin_S, path.cut)
    blocks = path.blocks
    nb = len(blocks)
    dim = path.d**path.n

    def gens(s):
        return _sector_generators(path, s, filt)

    def rhs(A, Y):
        D_L, D_R, D_o, V = A
        U_L, U_R, U_o, W = Y[0], Y[1], Y[2 : 2 + nb], Y[2 + nb :]
        dU_o = [1j * d @ u for d, u in zip(D_o, U_o)]
        dW = [1j * (u.conj().T @ (v @ (u @ w))) for u, v, w in zip(U_o, V, W)]
        return (1j * D_L @ U_L, 1j * D_R @ U_R, *dU_o, *dW)

    rk = _Rk4(gens, ode_tol, rhs=rhs)
    d_half = path.d**path.cut
    Y = (np.eye(d_half, dtype=complex), np.eye(dim // d_half, dtype=complex))
    Y = Y + tuple(np.eye(len(idx), dtype=complex) for idx in blocks) * 2
    s = 0.0
    defects, Ws = [], []
    for target in checkpoints:
        s, Y = rk.advance(s, Y, target)
        U_o = _assemble(blocks, Y[2 : 2 + nb], dim)
        W = _assemble(blocks, Y[2 + nb :], dim)
        # |C A C^* - W A W^*| = |M A - A M| with M = W^* C unitary
        M = W.conj().T @ (U_o.conj().T @ np.kron(Y[0], Y[1]))
        worst = max(_op_norm(M @ A - A @ M) for A in probes)
        defects.append(worst)
        Ws.append(W)
    return FactorizationResult(checkpoints, defects, Ws, rk.steps)
