"""Command-line entry point ``sptchain``.

Exit codes: 0 ok, 2 symmetry absent, 3 numerical failure, 4 invalid input,
5 size cap exceeded.  Reports go to stdout (or ``--out``) as canonical JSON;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import SptError, ValidationError

log = logging.getLogger("sptchain")

EXIT_OK = 0


def _tensor(arg: str, tol: float):
    """A tensor file, or one of the builtin names ``aklt`` / ``trivial``."""
    if arg in ("aklt", "trivial") and not Path(arg).exists():
        return io.load_mps(io.builtin_path(arg), tol)
    return io.load_mps(arg, tol)


def _normalized(v):
    from .mps import right_normalize

    if v.right_normalized:
        return v
    log.info("tensor is not right-normalized; normalizing")
    return right_normalize(v)[0]


def _emit(report: dict, out: str | None):
    text = io.canonical_dumps(report)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


# --------------------------------------------------------------------------
# verbs


def cmd_index_tr(args) -> int:
    from .symmetry import tr_index

    v = _normalized(_tensor(args.tensor, args.tol))
    result = tr_index(v, tol=args.tol)
    _emit(result.to_dict(), args.out)
    return EXIT_OK


def cmd_index_group(args) -> int:
    from .symmetry import projective_rep

    v = _normalized(_tensor(args.tensor, args.tol))
    group_src = io.builtin_path("z2z2") if args.group == "z2z2" and not Path(args.group).exists() else args.group
    group, rep = io.load_group(group_src)
    data = projective_rep(v, group, rep, tol=args.tol)
    _emit(data.to_dict(), args.out)
    return EXIT_OK


def cmd_primitivity(args) -> int:
    from .mps import invariant_state, primitivity_length

    v = _tensor(args.tensor, args.tol)
    length = primitivity_length(v)
    report = {
        "spin_S": v.spin_S,
        "bond_dim": v.bond_dim,
        "primitive": length is not None,
        "length": length,
        "normalization_defect": v.normalization_defect(),
    }
    if length is not None:
        rho = invariant_state(_normalized(v))
        report["invariant_state_eigenvalues"] = np.linalg.eigvalsh(rho).tolist()
    _emit(report, args.out)
    return EXIT_OK


def cmd_parent_ham(args) -> int:
    from .parent import frustration_free_residual, parent_interaction

    v = _normalized(_tensor(args.tensor, args.tol))
    h = parent_interaction(v, args.m)
    report = io.projector_to_json(h)
    report["projector_defect"] = h.projector_defect()
    report["frustration_free_residual"] = frustration_free_residual(v, h, range(3))
    _emit(report, args.out)
    return EXIT_OK


def _sweep_config(path) -> dict:
    cfg = io.read_json(path) if path else {}
    known = {"phi0", "phi1", "s_grid", "s_points", "n_list", "boundary", "q", "gamma_guess", "refine", "csv", "seed"}
    unknown = set(cfg) - known
    if unknown:
        raise ValidationError(f"unknown config keys {sorted(unknown)}")
    return cfg


def cmd_gap_sweep(args) -> int:
    from .ed import gap_sweep

    cfg = _sweep_config(args.config)
    phi0 = io.load_interaction(cfg.get("phi0", "trivial"))
    phi1 = io.load_interaction(cfg.get("phi1", "aklt"))
    s_grid = cfg.get("s_grid")
    if s_grid is None:
        s_grid = np.linspace(0, 1, int(cfg.get("s_points", 41)))
    n_list = [int(n) for n in cfg.get("n_list", (6, 8, 10))]
    solver = {"seed": args.seed}
    result = gap_sweep(
        phi0,
        phi1,
        s_grid=s_grid,
        n_list=n_list,
        boundary=cfg.get("boundary", "periodic"),
        q=int(cfg.get("q", 2)),
        gamma_guess=float(cfg.get("gamma_guess", 0.1)),
        refine=bool(cfg.get("refine", True)),
        threads=args.threads,
        solver=solver,
    )
    csv_path = args.csv or cfg.get("csv") or "gap_sweep.csv"
    io.write_csv(result.rows, result.columns, csv_path)
    summary = dict(result.summary)
    summary["csv"] = str(csv_path)
    summary["rows"] = len(result.rows)
    _emit(summary, args.out)
    return EXIT_OK


def cmd_entanglement(args) -> int:
    from .entanglement import entropy, kramers_check, schmidt_spectrum_mps
    from .errors import SymmetryAbsent
    from .symmetry import tr_index

    v = _normalized(_tensor(args.tensor, args.tol))
    p = schmidt_spectrum_mps(v)
    report = {"spectrum": p.tolist(), "entropy": entropy(p)}
    zeta = None
    if abs(v.spin_S - round(v.spin_S)) < 1e-12:
        try:
            zeta = tr_index(v, tol=args.tol).zeta
        except SymmetryAbsent:
            zeta = None
    report["zeta"] = zeta
    if zeta is not None:
        report["kramers"] = kramers_check(p, zeta).to_dict()
    if args.csv:
        io.write_csv([{"index": i, "probability": float(x)} for i, x in enumerate(p)], ("index", "probability"), args.csv)
    _emit(report, args.out)
    return EXIT_OK


def cmd_flow(args) -> int:
    from .flow import LinearPath, SplitPath, boundary_generator, flow_projection, make_filter, sz_sector

    phi0 = io.load_interaction(args.phi0)
    phi1 = io.load_interaction(args.phi1)
    filt = make_filter(args.gamma)
    sector = None
    if args.sz is not None:
        sector = sz_sector(args.n, phi0.spin_S, args.sz)
    path = LinearPath.from_interactions(phi0, phi1, args.n, args.boundary, sector)
    checkpoints = np.linspace(0.0, args.s_max, args.points)
    traj = flow_projection(path, checkpoints, filt, rank=args.rank, ode_tol=args.ode_tol)
    split = SplitPath(phi0, phi1, args.n) if args.n % 2 == 0 else None
    rows = []
    for st in traj.states:
        row = {"s": st.s, "fidelity_defect": st.fidelity_defect, "unitarity_defect": st.unitarity_defect}
        if split is not None:
            bg = boundary_generator(split, st.s, filt)
            row["V_norm"] = bg.V_norm
            row["V_locality_profile"] = bg.profile.tolist()
        rows.append(row)
    report = {
        "checkpoints": rows,
        "gamma": args.gamma,
        "n": args.n,
        "boundary": args.boundary,
        "ode_steps": traj.steps,
        "rejected_steps": traj.rejected,
        "reprojections": traj.reprojections,
        "max_fidelity_defect": traj.max_fidelity_defect,
    }
    _emit(report, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input (4); argparse's own 2 means symmetry absent here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ValidationError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-8, help="numerical tolerance (default 1e-8)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized solvers")
    common.add_argument("--threads", type=int, default=1, help="worker processes for independent work items")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sptchain", description="SPT indices and checks for spin-chain MPS")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("index-tr", parents=[common], help="time-reversal Z2 index")
    p.add_argument("tensor", help="MPS JSON file (or 'aklt' / 'trivial')")
    p.set_defaults(func=cmd_index_tr)

    p = sub.add_parser("index-group", parents=[common], help="projective cocycle of an on-site group")
    p.add_argument("tensor")
    p.add_argument("group", help="group JSON file (or 'z2z2')")
    p.set_defaults(func=cmd_index_group)

    p = sub.add_parser("primitivity", parents=[common], help="primitivity length and invariant state")
    p.add_argument("tensor")
    p.set_defaults(func=cmd_primitivity)

    p = sub.add_parser("parent-ham", parents=[common], help="frustration-free parent projector")
    p.add_argument("tensor")
    p.add_argument("--m", type=int, default=None, help="interval length (default: primitivity length + 1)")
    p.set_defaults(func=cmd_parent_ham)

    p = sub.add_parser("gap-sweep", parents=[common], help="ED gap along (1 - s) phi0 + s phi1")
    p.add_argument("config", nargs="?", help="JSON config; defaults to trivial -> aklt, 41 points, n = 6, 8, 10")
    p.add_argument("--csv", help="CSV output path (default from config, else gap_sweep.csv)")
    p.set_defaults(func=cmd_gap_sweep)

    p = sub.add_parser("entanglement", parents=[common], help="Schmidt spectrum and Kramers check")
    p.add_argument("tensor")
    p.add_argument("--csv", help="also write the spectrum as CSV")
    p.set_defaults(func=cmd_entanglement)

    p = sub.add_parser("flow", parents=[common], help="quasi-adiabatic flow along an interpolating path")
    p.add_argument("--phi0", default="trivial")
    p.add_argument("--phi1", default="aklt")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--boundary", default="periodic", choices=("open", "periodic"))
    p.add_argument("--s-max", type=float, default=0.3)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--rank", type=int, default=1, help="size of the tracked low cluster")
    p.add_argument("--ode-tol", type=float, default=1e-6)
    p.add_argument("--sz", type=float, default=None, help="restrict to the total S^z = SZ sector")
    p.set_defaults(func=cmd_flow)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except SptError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
