"""Time-reversal Z2 index and finite-group cocycles of matrix product states.

Both invariants come from the same primitive: two right-normalized primitive
tensors a, b generate the same state iff the mixed transfer map
``x -> sum_mu a_mu x b_mu^*`` has an eigenvalue of modulus one, and its
eigenmatrix is then ``U^*`` for the unitary with ``U a_mu = e^{i theta} b_mu U``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.linalg as la

from .errors import (
    AmbiguousSymmetry,
    DegenerateLeading,
    DimensionMismatch,
    NonScalar,
    NonScalarDefect,
    NotGroupInvariant,
    NotPrimitive,
    NotTimeReversalInvariant,
    NumericalError,
    ValidationError,
)
from .mps import MpsTensor, TransferMap, leading_eigenpair, primitivity_length

SYMMETRIC_MODULUS = 1 - 1e-8
ASYMMETRIC_MODULUS = 1 - 1e-3


def _check_conjugation(conjugation, k):
    if conjugation is None:
        return np.eye(k, dtype=complex)
    c = np.asarray(conjugation, dtype=complex)
    if c.shape != (k, k):
        raise DimensionMismatch(f"conjugation matrix must be {k}x{k}")
    # x -> C conj(x) is a conjugation iff C is unitary and C conj(C) = 1
    if np.linalg.norm(c @ c.conj().T - np.eye(k)) > 1e-10 or np.linalg.norm(c @ c.conj() - np.eye(k)) > 1e-10:
        raise ValidationError("conjugation matrix C must be unitary with C conj(C) = 1")
    return c


def time_reverse_tensors(v: MpsTensor, conjugation: np.ndarray | None = None) -> MpsTensor:
    """w_mu = (-1)^{S+mu} c v_{-mu} c.

    ``conjugation`` is the matrix C of the antiunitary ``x -> C conj(x)``; the
    default C = 1 is entrywise complex conjugation, giving
    ``w_mu = (-1)^{S+mu} conj(v_{-mu})``.
    """
    c = _check_conjugation(conjugation, v.bond_dim)
    signs = (-1.0) ** np.rint(v.spin_S + v.labels)
    flipped = v.mats[::-1].conj()
    mats = signs[:, None, None] * (c @ flipped @ c.conj())
    return MpsTensor(v.spin_S, mats, right_normalized=v.right_normalized, tol=max(v.tol, 1e-9))


class Equivalence(NamedTuple):
    U: np.ndarray
    theta: float
    modulus: float
    residual: float


def _require_normalized(v: MpsTensor, tol: float):
    defect = v.normalization_defect()
    if defect > max(tol, 1e-10) * 10:
        raise ValidationError(f"tensor is not right-normalized (defect {defect:.3e})")


def mps_equivalence_unitary(
    a: MpsTensor,
    b: MpsTensor,
    tol: float = 1e-8,
    symmetric_modulus: float = SYMMETRIC_MODULUS,
    asymmetric_modulus: float = ASYMMETRIC_MODULUS,
    check_primitive: bool = True,
) -> Equivalence | None:
    """Unitary U and phase with ``U a_mu = e^{i theta} b_mu U``, or None if a and b generate different states.

    Primitivity is required of ``a`` only; ``b`` is compared against it.
    Raises AmbiguousSymmetry when the mixed modulus lies between the two
    thresholds, and DegenerateLeading when a unit-modulus eigenvalue is not
    simple.
    """
    if a.mats.shape != b.mats.shape:
        if a.d == b.d:
            return None
        raise DimensionMismatch(f"tensor shapes differ: {a.mats.shape} vs {b.mats.shape}")
    _require_normalized(a, tol)
    _require_normalized(b, tol)
    if check_primitive and primitivity_length(a) is None:
        raise NotPrimitive("reference tensor is not primitive")
    pair = leading_eigenpair(TransferMap(a, b, "right"))
    modulus = abs(pair.value)
    if modulus < asymmetric_modulus:
        return None
    if modulus < symmetric_modulus:
        raise AmbiguousSymmetry(f"mixed transfer modulus {modulus:.10f} is neither 1 nor clearly below 1")
    if pair.degenerate:
        raise DegenerateLeading("unit-modulus mixed eigenvalue is degenerate")
    # eigenmatrix is proportional to U^*; project onto the unitary group
    w, _ = la.polar(pair.matrix)
    U = w.conj().T
    theta = float(np.angle(pair.value))
    phase = np.exp(1j * theta)
    residual = max(float(np.linalg.norm(U @ am - phase * bm @ U)) for am, bm in zip(a.mats, b.mats))
    if residual > tol:
        raise NumericalError(f"equivalence residual {residual:.3e} exceeds tol {tol:.1e}")
    return Equivalence(U, theta, float(modulus), residual)


def tr_invariance_check(v: MpsTensor, tol: float = 1e-8, conjugation=None) -> bool:
    return mps_equivalence_unitary(time_reverse_tensors(v, conjugation), v, tol, check_primitive=False) is not None


@dataclass
class TimeReversalResult:
    zeta: int
    U: np.ndarray
    theta: float
    residual: float
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "zeta": self.zeta,
            "theta": self.theta,
            "residual": self.residual,
            "certificates": dict(self.certificate),
        }


def tr_index(v: MpsTensor, tol: float = 1e-8, conjugation: np.ndarray | None = None) -> TimeReversalResult:
    """Z2 index zeta from ``c U c U = zeta 1``.

    U solves ``(-1)^{S+mu} c v_{-mu} c = e^{i theta} U v_mu U^*``.  The sign
    does not depend on the phase of U, on the gauge of v or on the choice of
    conjugation c (passed as the matrix C of ``x -> C conj(x)``).
    """
    if abs(v.spin_S - round(v.spin_S)) > 1e-12:
        raise ValidationError("the time-reversal index is defined for integer spin only")
    k = v.bond_dim
    c = _check_conjugation(conjugation, k)
    w = time_reverse_tensors(v, c)
    if primitivity_length(v) is None:
        raise NotPrimitive("tensor is not primitive")
    eq = mps_equivalence_unitary(v, w, tol, check_primitive=False)
    if eq is None:
        raise NotTimeReversalInvariant("time-reversed tensors generate a different state")
    U, theta = eq.U, -eq.theta
    phase = np.exp(1j * theta)
    residual = max(float(np.linalg.norm(wm - phase * U @ vm @ U.conj().T)) for vm, wm in zip(v.mats, w.mats))
    # cUcU as a matrix: C conj(U) conj(C) U
    cucu = c @ U.conj() @ c.conj() @ U
    scalar = np.trace(cucu) / k
    zeta = 1 if scalar.real >= 0 else -1
    defect = float(np.linalg.norm(cucu - zeta * np.eye(k), 2))
    if defect > tol:
        raise NonScalarDefect(f"||cUcU - zeta 1|| = {defect:.3e} exceeds tol {tol:.1e}")
    certificate = {
        "mixed_modulus": eq.modulus,
        "unitarity_defect": float(np.linalg.norm(U @ U.conj().T - np.eye(k), 2)),
        "scalar_defect": defect,
        "cucu_trace": [float(scalar.real), float(scalar.imag)],
    }
    return TimeReversalResult(zeta, U, theta, residual, certificate)


# --------------------------------------------------------------------------
# finite groups


@dataclass(frozen=True)
class FiniteGroup:
    """Finite group given by element names and a multiplication table ``mult[i][j] = index of g_i g_j``."""

    elements: tuple
    mult: np.ndarray

    def __post_init__(self):
        names = tuple(str(e) for e in self.elements)
        if len(set(names)) != len(names) or not names:
            raise ValidationError("group element names must be unique and non-empty")
        try:
            table = np.array(self.mult, dtype=int)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed multiplication table: {exc}") from exc
        n = len(names)
        if table.shape != (n, n):
            raise ValidationError(f"multiplication table must be {n}x{n}, got shape {table.shape}")
        if table.min() < 0 or table.max() >= n:
            raise ValidationError("multiplication table entries out of range")
        for row in (*table, *table.T):
            if len(set(row.tolist())) != n:
                raise ValidationError("multiplication table is not a Latin square")
        ident = [i for i in range(n) if np.array_equal(table[i], np.arange(n))]
        if not ident or not np.array_equal(table[:, ident[0]], np.arange(n)):
            raise ValidationError("multiplication table has no identity element")
        # (gh)k == g(hk)
        lhs = table[table[:, :, None], np.arange(n)[None, None, :]]
        rhs = table[np.arange(n)[:, None, None], table[None, :, :]]
        if not np.array_equal(lhs, rhs):
            raise ValidationError("multiplication table is not associative")
        table.setflags(write=False)
        object.__setattr__(self, "elements", names)
        object.__setattr__(self, "mult", table)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> int:
        return next(i for i in range(self.order) if np.array_equal(self.mult[i], np.arange(self.order)))

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.T))

    def index(self, name) -> int:
        try:
            return self.elements.index(str(name))
        except ValueError:
            raise ValidationError(f"unknown group element {name!r}") from None


def z2xz2_group() -> FiniteGroup:
    """Dihedral group of pi rotations, elements (e, x, y, z)."""
    bits = {"e": 0, "x": 1, "z": 2, "y": 3}
    names = ["e", "x", "y", "z"]
    rev = {b: n for n, b in bits.items()}
    table = [[names.index(rev[bits[g] ^ bits[h]]) for h in names] for g in names]
    return FiniteGroup(tuple(names), np.array(table))


def cyclic_group(n: int) -> FiniteGroup:
    names = ["e"] + [f"g{i}" for i in range(1, n)]
    return FiniteGroup(tuple(names), (np.arange(n)[:, None] + np.arange(n)[None, :]) % n)


def pi_rotation_rep(spin_S=1) -> dict:
    """On-site matrices exp(i pi S_a) for the Z2 x Z2 group of pi rotations."""
    from .ed import spin_matrices

    ops = spin_matrices(spin_S)
    d = ops.S1.shape[0]
    return {
        "e": np.eye(d, dtype=complex),
        "x": la.expm(1j * np.pi * ops.S1),
        "y": la.expm(1j * np.pi * ops.S2),
        "z": la.expm(1j * np.pi * ops.S3),
    }


def group_act_tensors(v: MpsTensor, w_g: np.ndarray) -> MpsTensor:
    """mats'_mu = sum_nu (w_g)_{mu nu} v_nu."""
    w_g = np.asarray(w_g, dtype=complex)
    if w_g.shape != (v.d, v.d):
        raise DimensionMismatch(f"on-site matrix must be {v.d}x{v.d}, got {w_g.shape}")
    if np.linalg.norm(w_g @ w_g.conj().T - np.eye(v.d)) > 1e-10:
        raise ValidationError("on-site matrix is not unitary")
    mats = np.einsum("mn,nij->mij", w_g, v.mats)
    return MpsTensor(v.spin_S, mats, right_normalized=v.right_normalized, tol=max(v.tol, 1e-9))


@dataclass
class ProjectiveData:
    group: FiniteGroup
    U: dict
    theta: dict
    sigma: np.ndarray
    invariant_phases: np.ndarray | None
    associativity_defect: float
    scalar_defect: float

    def sigma_of(self, g, h) -> complex:
        return complex(self.sigma[self.group.index(g), self.group.index(h)])

    def phase_of(self, g, h) -> complex:
        if self.invariant_phases is None:
            raise ValidationError("invariant phases are only defined for abelian groups")
        return complex(self.invariant_phases[self.group.index(g), self.group.index(h)])

    def to_dict(self) -> dict:
        names = self.group.elements

        def table(m):
            return {g: {h: [float(m[i, j].real), float(m[i, j].imag)] for j, h in enumerate(names)} for i, g in enumerate(names)}

        out = {
            "elements": list(names),
            "sigma": table(self.sigma),
            "theta": {g: self.theta[g] for g in names},
            "associativity_defect": self.associativity_defect,
            "scalar_defect": self.scalar_defect,
        }
        if self.invariant_phases is not None:
            out["invariant_phases"] = table(self.invariant_phases)
        trivial = cocycle_trivialization(self.group, self.sigma)
        out["class_trivial"] = trivial is not None
        return out


def cocycle_associativity_defect(group: FiniteGroup, sigma: np.ndarray) -> float:
    m = group.mult
    n = group.order
    g, h, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    lhs = sigma[g, h] * sigma[m[g, h], k]
    rhs = sigma[h, k] * sigma[g, m[h, k]]
    return float(np.abs(lhs - rhs).max())


def projective_rep(
    v: MpsTensor,
    group: FiniteGroup,
    rep: Mapping[str, np.ndarray],
    tol: float = 1e-8,
) -> ProjectiveData:
    """Projective representation U_g on the bond space induced by an on-site symmetry.

    ``U_g (w_g v)_mu = e^{i theta_g} v_mu U_g``; the cocycle is the scalar
    ``sigma(g, h) = U_g U_h U_{gh}^*``, normalized so the identity maps to 1.
    """
    missing = [g for g in group.elements if g not in rep]
    if missing:
        raise ValidationError(f"representation lacks matrices for {missing}")
    if primitivity_length(v) is None:
        raise NotPrimitive("tensor is not primitive")
    k = v.bond_dim
    Us, thetas = {}, {}
    for g in group.elements:
        acted = group_act_tensors(v, rep[g])
        eq = mps_equivalence_unitary(acted, v, tol, check_primitive=False)
        if eq is None:
            modulus = abs(leading_eigenpair(TransferMap(acted, v)).value)
            raise NotGroupInvariant(g, modulus)
        Us[g], thetas[g] = eq.U, eq.theta
    e = group.elements[group.identity]
    Us[e] = np.eye(k, dtype=complex)

    n = group.order
    sigma = np.ones((n, n), dtype=complex)
    worst = 0.0
    for i, g in enumerate(group.elements):
        for j, h in enumerate(group.elements):
            gh = group.elements[group.mult[i, j]]
            prod = Us[g] @ Us[h] @ Us[gh].conj().T
            s = np.trace(prod) / k
            defect = float(np.linalg.norm(prod - s * np.eye(k), 2))
            worst = max(worst, defect)
            if defect > tol or abs(abs(s) - 1) > tol:
                raise NonScalar(g, h, defect)
            sigma[i, j] = s / abs(s)
    inv = None
    if group.is_abelian():
        inv = sigma / sigma.T
    return ProjectiveData(
        group=group,
        U=Us,
        theta=thetas,
        sigma=sigma,
        invariant_phases=inv,
        associativity_defect=cocycle_associativity_defect(group, sigma),
        scalar_defect=worst,
    )


def cocycle_trivialization(
    group: FiniteGroup, sigma: np.ndarray, tol: float = 1e-8, seed: int = 0
) -> np.ndarray | None:
    """Phases beta with ``sigma(g, h) = beta_g beta_h / beta_gh``, or None if the class is nontrivial.

    beta is a one-dimensional sigma-representation; those are exactly the
    common eigenvectors of the twisted left-regular operators
    ``L_g e_h = sigma(g, h) e_gh``, found among the eigenvectors of a random
    combination of the L_g.
    """
    n = group.order
    L = np.zeros((n, n, n), dtype=complex)
    for g in range(n):
        for h in range(n):
            L[g, group.mult[g, h], h] = sigma[g, h]
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    _, vecs = np.linalg.eig(np.einsum("g,gij->ij", coeffs, L))
    for x in vecs.T:
        x = x / np.linalg.norm(x)
        lam = np.einsum("i,gij,j->g", x.conj(), L, x)
        if np.abs(np.einsum("gij,j->gi", L, x) - lam[:, None] * x).max() < tol:
            return lam / np.abs(lam)
    return None
