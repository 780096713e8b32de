"""The eight acceptance criteria, each printing one PASS/FAIL line."""

import csv
import json
import time

import numpy as np
import pytest
from scipy.integrate import quad

from sptchain import cli, io
from sptchain.ed import build_hamiltonian, builtin_interaction, low_spectrum, spin_matrices
from sptchain.entanglement import entropy, kramers_check, random_kramers_tensor, schmidt_spectrum_mps
from sptchain.flow import (
    LinearPath,
    SplitPath,
    factorization_check,
    flow_projection,
    low_projection,
    make_filter,
    quasi_adiabatic_generator,
    sz_sector,
)
from sptchain.mps import TransferMap, leading_eigenpair, random_tensor, random_unitary, right_normalize
from sptchain.parent import ed_kernel, frustration_free_residual, parent_interaction
from sptchain.symmetry import tr_index


def run_cli(capsys, *argv):
    start = time.perf_counter()
    code = cli.main(list(argv))
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None), elapsed


def test_criterion_1_time_reversal_index(capsys, acceptance_line):
    code_a, rep_a, t_a = run_cli(capsys, "index-tr", str(io.builtin_path("aklt")))
    code_t, rep_t, t_t = run_cli(capsys, "index-tr", str(io.builtin_path("trivial")))
    ok = (
        code_a == 0
        and code_t == 0
        and rep_a["zeta"] == -1
        and rep_a["residual"] <= 1e-8
        and rep_t["zeta"] == 1
        and max(t_a, t_t) < 1.0
    )
    with capsys.disabled():
        acceptance_line(
            1,
            "time-reversal index of AKLT and trivial tensors",
            ok,
            f"zeta {rep_a['zeta']}/{rep_t['zeta']}, residual {rep_a['residual']:.1e}, {max(t_a, t_t):.3f} s",
        )
    assert ok


def test_criterion_2_z2z2_cocycle(capsys, acceptance_line):
    group = str(io.builtin_path("z2z2"))
    code_a, rep_a, t_a = run_cli(capsys, "index-group", str(io.builtin_path("aklt")), group)
    code_t, rep_t, t_t = run_cli(capsys, "index-group", str(io.builtin_path("trivial")), group)
    names = rep_a["elements"]
    nontrivial = [g for g in names if g != names[0]]
    aklt_ok = all(
        np.allclose(rep_a["invariant_phases"][g][h], [-1.0, 0.0], atol=1e-10)
        for g in nontrivial
        for h in nontrivial
        if g != h
    )
    triv_ok = all(np.allclose(rep_t["invariant_phases"][g][h], [1.0, 0.0], atol=1e-10) for g in names for h in names)
    defect = max(rep_a["associativity_defect"], rep_t["associativity_defect"])
    ok = code_a == 0 and code_t == 0 and aklt_ok and triv_ok and defect <= 1e-10 and max(t_a, t_t) < 1.0
    with capsys.disabled():
        acceptance_line(
            2,
            "Z2xZ2 invariant phases",
            ok,
            f"associativity defect {defect:.1e}, {max(t_a, t_t):.3f} s",
        )
    assert ok


def _conjugations(k, rng):
    # C with C conj(C) = 1: identity, sigma_x, and u u^T for random unitaries u
    out = [np.eye(k), np.array([[0, 1], [1, 0]], dtype=complex)]
    while len(out) < 5:
        u = random_unitary(k, rng)
        out.append(u @ u.T)
    return out


def test_criterion_3_gauge_and_conjugation_invariance(aklt, product, rng, acceptance_line, capsys):
    zetas = {"aklt": set(), "trivial": set()}
    conj = _conjugations(2, rng)
    for name, v in (("aklt", aklt), ("trivial", product)):
        k = v.bond_dim
        # on C^1 every conjugation is x -> c conj(x) with |c| = 1
        cs = conj if k == 2 else [np.exp(1j * t) * np.eye(1) for t in (0.0, 0.7, 1.9, np.pi, 4.1)]
        for _ in range(20):
            g = random_unitary(k, rng)
            gauged = v.conjugated(g)
            for c in cs:
                zetas[name].add(tr_index(gauged, conjugation=c).zeta)
    ok = zetas["aklt"] == {-1} and zetas["trivial"] == {1}
    with capsys.disabled():
        acceptance_line(3, "zeta constant over 20 gauges x 5 conjugations", ok, f"aklt {zetas['aklt']}, trivial {zetas['trivial']}")
    assert ok


def test_criterion_4_parent_hamiltonian(aklt, acceptance_line, capsys):
    h = parent_interaction(aklt, 2)
    ops = spin_matrices(1)
    total = [np.kron(a, np.eye(3)) + np.kron(np.eye(3), a) for a in (ops.S1, ops.S2, ops.S3)]
    casimir = sum(t @ t for t in total)
    spin2 = casimir @ (casimir - 2 * np.eye(9)) / 24  # S_tot^2 eigenvalues 0, 2, 6
    proj_err = float(np.abs(h.h - spin2).max())

    bulk = builtin_interaction("aklt").bulk
    design = np.stack([bulk.ravel(), np.eye(9).ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(design, h.h.ravel(), rcond=None)
    fit_err = float(np.abs(design @ coef - h.h.ravel()).max())
    positive = coef[0].real > 0

    ff = frustration_free_residual(aklt, h, (0, 1, 2))
    dims = {n: ed_kernel(h, n, "open")[0] for n in range(2, 9)}
    ok = proj_err <= 1e-10 and fit_err <= 1e-10 and positive and ff <= 1e-10 and set(dims.values()) == {4}
    with capsys.disabled():
        acceptance_line(
            4,
            "parent projector and kernel dimension",
            ok,
            f"projector err {proj_err:.1e}, fit err {fit_err:.1e}, FF {ff:.1e}, kernel dims {list(dims.values())}",
        )
    assert ok


def test_criterion_5_entanglement(aklt, acceptance_line, capsys):
    p = schmidt_spectrum_mps(aklt)
    spectrum_ok = len(p) == 2 and np.abs(p - 0.5).max() <= 1e-10
    ent_ok = abs(entropy(p) - np.log(2)) <= 1e-10
    rng = np.random.default_rng(7)
    passed = 0
    for _ in range(50):
        v = random_kramers_tensor(rng, k=4)
        verdict = kramers_check(schmidt_spectrum_mps(v), tr_index(v).zeta)
        passed += bool(verdict.applicable and verdict.passed)
    ok = spectrum_ok and ent_ok and passed == 50
    with capsys.disabled():
        acceptance_line(5, "AKLT Schmidt spectrum and Kramers ensemble", ok, f"spectrum {p.tolist()}, {passed}/50 Kramers")
    assert ok


@pytest.mark.slow
def test_criterion_6_gap_sweep(tmp_path, capsys, acceptance_line):
    csv_path = tmp_path / "sweep.csv"
    start = time.perf_counter()
    code = cli.main(["gap-sweep", "--csv", str(csv_path)])
    elapsed = time.perf_counter() - start
    summary = json.loads(capsys.readouterr().out)
    with open(csv_path) as handle:
        rows = list(csv.DictReader(handle))
    s0 = [float(r["gap"]) for r in rows if float(r["s"]) == 0.0]
    mins = [summary["sizes"][n]["min_gap"] for n in ("6", "8", "10")]
    argmins = [summary["sizes"][n]["argmin_s"] for n in ("6", "8", "10")]
    ok = (
        code == 0
        and len(rows) == 123
        and all(abs(g - 1.0) <= 1e-9 for g in s0)
        and all(0 < s < 1 for s in argmins)
        and mins[0] > mins[1] > mins[2]
        and summary["interior_minimum"]
        and summary["min_gap_decreasing"]
        and elapsed < 600
    )
    with capsys.disabled():
        acceptance_line(
            6,
            "gap sweep interior minimum, decreasing in n",
            ok,
            "min gaps " + ", ".join(f"{m:.4f}@{s:.3f}" for m, s in zip(mins, argmins)) + f", {elapsed:.0f} s",
        )
    assert ok


def test_criterion_7_spectral_flow(capsys, acceptance_line):
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0])
    two_level = 0.0
    for gamma in (0.1, 0.5, 1.0, 2.0):
        filt = make_filter(gamma)
        # e^{iHt} sx e^{-iHt} = cos(gt) sx - sin(gt) sy, so D = -sy int W(t) sin(gt) dt
        half, _ = quad(lambda t: filt(t), 0, np.inf, weight="sin", wvar=gamma)
        analytic = -2 * half * sy
        D = quasi_adiabatic_generator(gamma * sz / 2, sx, filt)
        two_level = max(two_level, float(np.abs(D - analytic).max()))

    filt = make_filter(0.2)
    sector = sz_sector(6, 1, 0)
    path = LinearPath.from_interactions(builtin_interaction("trivial"), builtin_interaction("aklt"), 6, "periodic", sector)
    checkpoints = np.linspace(0, 0.3, 11)
    for s in checkpoints:
        low_projection(path(s)[0], 1, filt.gamma)  # raises GapClosed if the gap drops below gamma
    traj = flow_projection(path, checkpoints, filt, rank=1, ode_tol=1e-6)

    phi0, phi1 = builtin_interaction("trivial"), builtin_interaction("aklt")
    coupled = factorization_check(SplitPath(phi0, phi1, 6), [0.0, 0.1, 0.2, 0.3], filt, ode_tol=1e-6)
    decoupled = factorization_check(SplitPath(phi0, phi1, 6, decoupled=True), [0.0, 0.1, 0.2, 0.3], filt, ode_tol=1e-6)
    ok = (
        two_level <= 1e-6
        and traj.max_fidelity_defect <= 1e-2
        and coupled.max_defect <= 5e-2
        and decoupled.max_defect <= 1e-6
    )
    with capsys.disabled():
        acceptance_line(
            7,
            "quasi-adiabatic generator, tracking and factorization",
            ok,
            f"two-level {two_level:.1e}, tracking {traj.max_fidelity_defect:.1e}, "
            f"coupled {coupled.max_defect:.1e}, decoupled {decoupled.max_defect:.1e}",
        )
    assert ok


def _dense_transfer(a, b):
    # independent construction: E[(i,k),(j,l)] = sum_mu a_mu[i,j] conj(b_mu[k,l])
    k = a.bond_dim
    E = np.zeros((k * k, k * k), dtype=complex)
    for mu in range(a.d):
        for i in range(k):
            for j in range(k):
                for kk in range(k):
                    for l in range(k):
                        E[i * k + kk, j * k + l] += a.mats[mu][i, j] * np.conj(b.mats[mu][kk, l])
    return E


def test_criterion_8_oracle_equivalence(capsys, acceptance_line):
    worst_ed = 0.0
    instances = 0
    trivial, aklt_phi = builtin_interaction("trivial"), builtin_interaction("aklt")
    for n in (4, 5, 6):
        for boundary in ("open", "periodic"):
            for s in (0.0, 0.3, 0.5, 1.0):
                H = (1 - s) * build_hamiltonian(trivial, n, boundary) + s * build_hamiltonian(aklt_phi, n, boundary)
                exact = np.linalg.eigvalsh(H.toarray())[:4]
                for method in ("lobpcg", "arpack"):
                    approx = low_spectrum(H, 4, method=method)
                    worst_ed = max(worst_ed, float(np.abs(approx - exact).max()))
                    instances += 1

    rng = np.random.default_rng(11)
    worst_tm = 0.0
    for k in (1, 2, 3, 4):
        for _ in range(5):
            v = right_normalize(random_tensor(1, k, rng))[0]
            pair = leading_eigenpair(TransferMap.self_map(v))
            evals = np.linalg.eigvals(_dense_transfer(v, v))
            top = evals[np.argmax(np.abs(evals))]
            X = pair.matrix
            residual = np.linalg.norm(_dense_transfer(v, v) @ X.ravel() - pair.value * X.ravel())
            worst_tm = max(worst_tm, abs(pair.value - top), residual)
    ok = worst_ed <= 1e-9 and worst_tm <= 1e-9
    with capsys.disabled():
        acceptance_line(
            8,
            "iterative vs dense eigensolvers",
            ok,
            f"{instances} ED instances max err {worst_ed:.1e}, transfer max err {worst_tm:.1e}",
        )
    assert ok
