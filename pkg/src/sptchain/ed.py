"""Exact diagonalization of finite spin-S chains.

Basis states are lexicographic in the site labels with site 0 most
significant and each label ascending (mu = -S first), i.e. the ordering of
``np.kron(A_0, A_1, ...)``.
"""

from __future__ import annotations

import logging
import os
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.optimize import minimize_scalar

from .errors import BadParameters, DimensionMismatch, NoConvergence, NoSplit, SizeCap, ValidationError
from .mps import spin_dim

log = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 3**12
DENSE_MAX_DIM = 2000
HERMITIAN_TOL = 1e-12


class SpinOperators(NamedTuple):
    S: float
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray

    @property
    def Splus(self) -> np.ndarray:
        return self.S1 + 1j * self.S2

    @property
    def Sminus(self) -> np.ndarray:
        return self.S1 - 1j * self.S2


def spin_matrices(S) -> SpinOperators:
    d = spin_dim(S)
    S = float(S)
    mu = -S + np.arange(d)
    splus = np.zeros((d, d), dtype=complex)
    for i in range(d - 1):
        splus[i + 1, i] = np.sqrt(S * (S + 1) - mu[i] * (mu[i] + 1))
    s1 = (splus + splus.conj().T) / 2
    s2 = (splus - splus.conj().T) / 2j
    s3 = np.diag(mu).astype(complex)
    return SpinOperators(S, s1, s2, s3)


def max_dim() -> int:
    value = os.environ.get("SPT_MAX_DIM")
    if value is None:
        return DEFAULT_MAX_DIM
    try:
        return int(value)
    except ValueError:
        raise ValidationError(f"SPT_MAX_DIM must be an integer, got {value!r}") from None


def _check_hermitian(m: np.ndarray, what: str, tol: float = 1e-10):
    if np.abs(m - m.conj().T).max(initial=0.0) > tol * max(1.0, np.abs(m).max(initial=0.0)):
        raise ValidationError(f"{what} is not Hermitian")


@dataclass(frozen=True)
class Interaction:
    """Translation-invariant term on ``range`` consecutive sites plus explicit boundary terms.

    ``boundary`` holds ``(sites, matrix)`` pairs, added as given whenever the
    chain is built with ``boundary="custom"``.
    """

    spin_S: float
    range: int
    bulk: np.ndarray
    boundary: tuple = ()

    def __post_init__(self):
        d = spin_dim(self.spin_S)
        bulk = np.array(self.bulk, dtype=complex)
        if self.range < 1 or bulk.shape != (d**self.range, d**self.range):
            raise DimensionMismatch(f"bulk term must be {d**self.range}x{d**self.range} for range {self.range}")
        _check_hermitian(bulk, "bulk term")
        terms = []
        for sites, mat in self.boundary:
            sites = tuple(int(s) for s in sites)
            mat = np.array(mat, dtype=complex)
            if len(set(sites)) != len(sites) or mat.shape != (d ** len(sites),) * 2:
                raise DimensionMismatch(f"boundary term on sites {sites} has shape {mat.shape}")
            _check_hermitian(mat, f"boundary term on {sites}")
            terms.append((sites, mat))
        bulk.setflags(write=False)
        object.__setattr__(self, "spin_S", float(self.spin_S))
        object.__setattr__(self, "bulk", bulk)
        object.__setattr__(self, "boundary", tuple(terms))

    @property
    def d(self) -> int:
        return spin_dim(self.spin_S)

    def scaled(self, c: float) -> "Interaction":
        return Interaction(self.spin_S, self.range, c * self.bulk, tuple((s, c * m) for s, m in self.boundary))


def builtin_interaction(name: str, S=1) -> Interaction:
    """``aklt``: S.S + (S.S)^2 / 3 on neighbours; ``trivial``: (S^3)^2 on one site."""
    if float(S) != 1:
        raise BadParameters("built-in interactions are spin-1")
    ops = spin_matrices(S)
    if name == "aklt":
        ss = sum(np.kron(a, a) for a in (ops.S1, ops.S2, ops.S3))
        return Interaction(S, 2, ss + ss @ ss / 3)
    if name == "trivial":
        return Interaction(S, 1, ops.S3 @ ops.S3)
    raise BadParameters(f"unknown built-in interaction {name!r}; expected 'aklt' or 'trivial'")


def _digits(n: int, d: int) -> np.ndarray:
    idx = np.arange(d**n)
    return (idx[:, None] // d ** (n - 1 - np.arange(n))) % d


def local_operator(matrix: np.ndarray, sites: Sequence[int], n: int, d: int, digits=None) -> sp.csr_matrix:
    """Sparse embedding of ``matrix`` acting on ``sites`` (in that order) of an n-site chain."""
    sites = list(sites)
    m = len(sites)
    matrix = np.asarray(matrix)
    if matrix.shape != (d**m, d**m):
        raise DimensionMismatch(f"matrix shape {matrix.shape} does not act on {m} sites of dimension {d}")
    if len(set(sites)) != m or min(sites) < 0 or max(sites) >= n:
        raise ValidationError(f"invalid site list {sites} for a chain of {n} sites")
    dim = d**n
    if digits is None:
        digits = _digits(n, d)
    idx = np.arange(dim)
    weights = d ** (n - 1 - np.array(sites))
    local = digits[:, sites] @ (d ** (m - 1 - np.arange(m)))
    base = idx - digits[:, sites] @ weights
    local_digits = (np.arange(d**m)[:, None] // d ** (m - 1 - np.arange(m))) % d
    offsets = local_digits @ weights
    rows, cols, vals = [], [], []
    for b in range(d**m):
        col = idx[local == b]
        if col.size == 0:
            continue
        for a in np.flatnonzero(matrix[:, b]):
            rows.append(base[col] + offsets[a])
            cols.append(col)
            vals.append(np.full(col.size, matrix[a, b]))
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=complex)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim), dtype=complex
    )


def chain_terms(phi: Interaction, n: int, boundary: str = "open", extra_terms: Sequence = ()) -> list:
    """List of (sites, matrix) terms of the n-site Hamiltonian."""
    m = phi.range
    if boundary not in ("open", "periodic", "custom"):
        raise BadParameters(f"boundary must be open, periodic or custom, got {boundary!r}")
    if n < m:
        raise BadParameters(f"chain of {n} sites is shorter than the interaction range {m}")
    if boundary == "periodic":
        if m > 1 and n < m + 1:
            raise BadParameters("periodic chain must be longer than the interaction range")
        terms = [(tuple((x + j) % n for j in range(m)), phi.bulk) for x in range(n)]
    else:
        terms = [(tuple(range(x, x + m)), phi.bulk) for x in range(n - m + 1)]
    if boundary == "custom":
        terms.extend(phi.boundary)
    terms.extend((tuple(s), np.asarray(mat, dtype=complex)) for s, mat in extra_terms)
    return terms


def check_size(d: int, n: int):
    cap = max_dim()
    if d**n > cap:
        raise SizeCap(f"Hilbert space dimension {d}**{n} = {d**n} exceeds the cap {cap} (SPT_MAX_DIM)")


def build_hamiltonian(
    phi: Interaction, n: int, boundary: str = "open", extra_terms: Sequence = (), dense: bool = False
):
    """(H_Phi)_Lambda = sum of all terms on the n-site chain; sparse CSR unless ``dense``."""
    d = phi.d
    check_size(d, n)
    digits = _digits(n, d)
    H = sp.csr_matrix((d**n, d**n), dtype=complex)
    for sites, mat in chain_terms(phi, n, boundary, extra_terms):
        H = H + local_operator(mat, sites, n, d, digits)
    H.sum_duplicates()
    if not np.any(H.data.imag):
        H = H.real.tocsr()
    return H.toarray() if dense else H


def hermiticity_defect(H) -> float:
    diff = H - H.conj().T
    if sp.issparse(diff):
        return float(np.abs(diff.data).max(initial=0.0))
    return float(np.abs(diff).max(initial=0.0))


def _start_block(dim: int, size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((dim, size))


def low_spectrum(
    H,
    q: int,
    tol: float = 1e-7,
    method: str = "auto",
    seed: int = 0,
    maxiter: int = 5000,
    return_vectors: bool = False,
):
    """q lowest eigenvalues of a Hermitian matrix, ascending.

    ``method`` is ``dense``, ``lobpcg`` (block iteration, resolves exact
    degeneracies), ``arpack`` (single-vector Lanczos) or ``auto``, which is
    dense up to dimension 2000 and LOBPCG above.  ``tol`` bounds the residual
    norm of every returned eigenpair, so eigenvalues are accurate to roughly
    tol^2 / gap.
    """
    dim = H.shape[0]
    if q < 1 or q > dim:
        raise BadParameters(f"cannot compute {q} eigenvalues of a {dim}-dimensional matrix")
    if method == "auto":
        method = "dense" if dim <= DENSE_MAX_DIM else "lobpcg"
    if method == "dense" or dim <= 8 * (q + 4):
        Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
        w, v = np.linalg.eigh(Hd)
        w, v = w[:q], v[:, :q]
    elif method == "lobpcg":
        block = q + max(3, q // 2)
        X = _start_block(dim, block, seed).astype(H.dtype)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            w, v = sla.lobpcg(H, X, largest=False, tol=tol, maxiter=maxiter)
        order = np.argsort(w)
        w, v = w[order][:q], v[:, order][:, :q]
        w, v = _rayleigh_ritz(H, v)
        res = np.linalg.norm(H @ v - v * w, axis=0)
        if res.max() > 10 * tol:
            raise NoConvergence(f"LOBPCG residual {res.max():.2e} exceeds {10 * tol:.1e}")
    elif method == "arpack":
        w, v = _lanczos_deflated(H, q, tol, seed, maxiter)
    else:
        raise BadParameters(f"unknown eigensolver {method!r}")
    w = np.asarray(w, dtype=float)
    return (w, v) if return_vectors else w


def _lanczos_deflated(H, q, tol, seed, maxiter, max_rounds: int = 20):
    """ARPACK with deflation.

    A single Krylov vector sees one direction per distinct eigenvalue, so
    degenerate copies are easily missed.  Found eigenvectors are shifted far
    up and the search repeated until a round adds nothing below the current
    q-th level.  ARPACK runs in largest-magnitude mode on ``c - H`` with c
    above the spectrum; its smallest-algebraic mode can lose an isolated
    lowest level when the Krylov space becomes invariant (few distinct
    eigenvalues, as for diagonal Hamiltonians).
    """
    dim = H.shape[0]
    rng = np.random.default_rng(seed)
    bound = float(abs(H).sum(axis=1).max()) if sp.issparse(H) else float(np.abs(H).sum(axis=1).max())
    shift = 2 * bound + 1
    top_shift = bound + shift + 1  # above every eigenvalue of the deflated operator
    found = np.zeros((dim, 0), dtype=H.dtype if np.iscomplexobj(H) else float)
    for _ in range(max_rounds):
        basis = found

        def matvec(x, basis=basis):
            y = H @ x
            if basis.shape[1]:
                y = y + shift * (basis @ (basis.conj().T @ x))
            return top_shift * x - y

        op = sla.LinearOperator((dim, dim), matvec=matvec, dtype=found.dtype)
        try:
            w, v = sla.eigsh(op, k=q, which="LA", tol=tol * 1e-3, v0=rng.standard_normal(dim), maxiter=maxiter)
            w = top_shift - w
        except sla.ArpackNoConvergence as exc:
            raise NoConvergence(str(exc)) from exc
        fresh = w < shift / 2
        if found.shape[1] >= q:
            top = np.sort(_rayleigh_ritz(H, found)[0])[q - 1]
            fresh &= w < top - max(1e-10, 1e3 * np.finfo(float).eps * bound)
        if not np.any(fresh):
            break
        found, _ = np.linalg.qr(np.hstack([found, v[:, fresh]]))
    else:
        raise NoConvergence(f"deflated Lanczos did not settle after {max_rounds} rounds")
    w, v = _rayleigh_ritz(H, found)
    return w[:q], v[:, :q]


def _rayleigh_ritz(H, v):
    q, _ = np.linalg.qr(v)
    hq = H @ q
    w, c = np.linalg.eigh(q.conj().T @ hq)
    return w, q @ c


@dataclass
class SpectrumReport:
    size: int
    boundary: str
    eigenvalues: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    gap: float
    diameter: float

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "boundary": self.boundary,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "sigma1": [float(x) for x in self.sigma1],
            "sigma2": [float(x) for x in self.sigma2],
            "gap": self.gap,
            "sigma1_diameter": self.diameter,
        }


def detect_split(eigs, gamma_guess: float = 0.1, min_ratio: float = 2.0):
    """Split an ascending low spectrum into a low cluster and the rest.

    Candidate split points are those whose low cluster has diameter at most
    ``gamma_guess`` times the spread of ``eigs``; the widest spacing among them
    wins (first one on ties).  NoSplit is raised when that spacing is less than
    ``min_ratio`` times every other spacing in ``eigs``.

    Returns ``(sigma1, sigma2, gap, diameter)``.
    """
    e = np.asarray(eigs, dtype=float)
    if e.size < 2:
        raise NoSplit("need at least two eigenvalues to split")
    if np.any(np.diff(e) < -1e-12):
        raise ValidationError("eigenvalues must be ascending")
    spacings = np.diff(e)
    spread = e[-1] - e[0]
    candidates = [i for i in range(e.size - 1) if e[i] - e[0] <= gamma_guess * spread + 1e-12]
    best = max(candidates, key=lambda i: (spacings[i], -i))
    gap = float(spacings[best])
    others = np.delete(spacings, best)
    if gap <= 0 or (others.size and gap < min_ratio * others.max()):
        raise NoSplit(f"no isolated low cluster: widest admissible spacing {gap:.3g}")
    sigma1, sigma2 = e[: best + 1], e[best + 1 :]
    return sigma1, sigma2, gap, float(sigma1[-1] - sigma1[0])


def spectrum_report(H, n: int, boundary: str, q: int, gamma_guess: float = 0.1, **solver) -> SpectrumReport:
    eigs = low_spectrum(H, q, **solver)
    s1, s2, gap, diam = detect_split(eigs, gamma_guess)
    return SpectrumReport(n, boundary, eigs, s1, s2, gap, diam)


def time_reversal_onsite(A: np.ndarray, S) -> np.ndarray:
    """Xi(A) = Theta conj(A) Theta^* with Theta = exp(-i pi S_2) on every site."""
    from scipy.linalg import expm

    d = spin_dim(S)
    A = np.asarray(A)
    dim = A.shape[0]
    length = int(round(np.log(dim) / np.log(d))) if dim > 1 else 0
    if A.shape != (dim, dim) or d**length != dim:
        raise DimensionMismatch(f"matrix of shape {A.shape} is not an operator on spin-{S} sites")
    rot = expm(-1j * np.pi * spin_matrices(S).S2)
    theta = np.eye(1, dtype=complex)
    for _ in range(length):
        theta = np.kron(theta, rot)
    return theta @ A.conj() @ theta.conj().T


# --------------------------------------------------------------------------
# interpolation paths


@dataclass
class SweepResult:
    rows: list
    summary: dict = field(default_factory=dict)

    columns = ("s", "n", "boundary", "e0", "e1", "gap", "sigma1_diameter")


def _sweep_point(H0, H1, s, n, boundary, q, gamma_guess, solver):
    H = (1 - s) * H0 + s * H1
    eigs = low_spectrum(H, q, **solver)
    try:
        _, _, gap, diam = detect_split(eigs, gamma_guess)
    except NoSplit:
        gap, diam = float(eigs[1] - eigs[0]), float("nan")
    return {
        "s": float(s),
        "n": int(n),
        "boundary": boundary,
        "e0": float(eigs[0]),
        "e1": float(eigs[1]),
        "gap": gap,
        "sigma1_diameter": diam,
    }


def gap_sweep(
    phi0: Interaction,
    phi1: Interaction,
    s_grid: Sequence[float] | None = None,
    n_list: Sequence[int] = (6, 8, 10),
    boundary: str = "periodic",
    q: int = 2,
    gamma_guess: float = 0.1,
    refine: bool = True,
    threads: int = 1,
    solver: dict | None = None,
) -> SweepResult:
    """Low spectrum of (1 - s) Phi0 + s Phi1 over a grid of s and chain lengths.

    One row per (n, s) in grid order.  The summary records, per n, the grid
    minimum of the gap and, with ``refine``, a bounded scalar minimization
    between the neighbouring grid points.
    """
    if phi0.spin_S != phi1.spin_S:
        raise BadParameters("interactions act on different spins")
    s_grid = np.linspace(0, 1, 41) if s_grid is None else np.asarray(s_grid, dtype=float)
    solver = dict(solver or {})
    rows, summary = [], {"sizes": {}}
    for n in n_list:
        H0 = build_hamiltonian(phi0, n, boundary)
        H1 = build_hamiltonian(phi1, n, boundary)
        if threads > 1:
            from joblib import Parallel, delayed

            block = Parallel(n_jobs=threads)(
                delayed(_sweep_point)(H0, H1, s, n, boundary, q, gamma_guess, solver) for s in s_grid
            )
        else:
            block = [_sweep_point(H0, H1, s, n, boundary, q, gamma_guess, solver) for s in s_grid]
        rows.extend(block)
        gaps = np.array([r["gap"] for r in block])
        i = int(np.argmin(gaps))
        entry = {"grid_argmin_s": float(s_grid[i]), "grid_min_gap": float(gaps[i])}
        if refine and len(s_grid) > 2:
            lo = s_grid[max(i - 1, 0)]
            hi = s_grid[min(i + 1, len(s_grid) - 1)]

            def gap_at(s):
                return _sweep_point(H0, H1, s, n, boundary, q, gamma_guess, solver)["gap"]

            opt = minimize_scalar(gap_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-4})
            if opt.fun < gaps[i]:
                entry.update(argmin_s=float(opt.x), min_gap=float(opt.fun))
            else:
                entry.update(argmin_s=float(s_grid[i]), min_gap=float(gaps[i]))
        else:
            entry.update(argmin_s=entry["grid_argmin_s"], min_gap=entry["grid_min_gap"])
        log.info("n=%d: min gap %.6f at s=%.4f", n, entry["min_gap"], entry["argmin_s"])
        summary["sizes"][str(n)] = entry
    mins = [summary["sizes"][str(n)]["min_gap"] for n in n_list]
    summary["min_gap_decreasing"] = bool(all(b < a for a, b in zip(mins, mins[1:])))
    summary["interior_minimum"] = bool(
        all(0 < summary["sizes"][str(n)]["argmin_s"] < 1 for n in n_list)
    )
    return SweepResult(rows, summary)
