"""JSON and CSV formats for tensors, groups, interactions and reports.

Complex matrices are nested lists of ``[re, im]`` pairs (plain numbers are
read as real).  Reports are written canonically: sorted keys, floats with 17
significant digits, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ed import Interaction, builtin_interaction
from .errors import ValidationError
from .mps import MpsTensor
from .parent import LocalProjector
from .symmetry import FiniteGroup

BUILTIN_DATA = ("aklt", "trivial", "z2z2")


def complex_matrix(data, what: str = "matrix") -> np.ndarray:
    """Parse a 2-d list of numbers or [re, im] pairs."""
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: ragged or non-numeric entries ({exc})") from None
    if arr.ndim == 3 and arr.shape[2] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    elif arr.ndim != 2:
        raise ValidationError(f"{what}: expected a 2-d matrix of numbers or [re, im] pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: non-finite entries")
    return arr.astype(complex)


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def read_json(source) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def builtin_path(name: str) -> Path:
    if name not in BUILTIN_DATA:
        raise ValidationError(f"unknown builtin data set {name!r}")
    return Path(str(resources.files("sptchain") / "data" / f"{name}.json"))


def _require(obj: dict, keys: Sequence[str], what: str):
    if not isinstance(obj, dict):
        raise ValidationError(f"{what}: expected a JSON object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise ValidationError(f"{what}: missing keys {missing}")


# --------------------------------------------------------------------------
# tensors


def load_mps(source, tol: float = 1e-10) -> MpsTensor:
    obj = read_json(source)
    _require(obj, ("spin_S", "mats"), "MPS")
    if not isinstance(obj["mats"], list) or not obj["mats"]:
        raise ValidationError("MPS: mats must be a non-empty list")
    mats = [complex_matrix(m, f"MPS matrix {i}") for i, m in enumerate(obj["mats"])]
    if len({m.shape for m in mats}) != 1:
        raise ValidationError("MPS: matrices have different shapes")
    if "bond_dim" in obj and int(obj["bond_dim"]) != mats[0].shape[0]:
        raise ValidationError(f"MPS: bond_dim {obj['bond_dim']} does not match matrices of size {mats[0].shape[0]}")
    v = MpsTensor(obj["spin_S"], np.array(mats))
    if v.normalization_defect() <= tol:
        v = MpsTensor(v.spin_S, v.mats, right_normalized=True, tol=tol)
    return v


def mps_to_json(v: MpsTensor) -> dict:
    return {"spin_S": v.spin_S, "bond_dim": v.bond_dim, "mats": [matrix_to_json(m) for m in v.mats]}


# --------------------------------------------------------------------------
# groups


def load_group(source) -> tuple:
    """(FiniteGroup, {name: on-site matrix})."""
    obj = read_json(source)
    _require(obj, ("elements", "mult_table", "rep"), "group")
    table = obj["mult_table"]
    if not isinstance(table, list) or any(not isinstance(r, list) for r in table):
        raise ValidationError("group: mult_table must be a list of lists")
    if any(len(r) != len(table) for r in table):
        raise ValidationError("group: mult_table is ragged")
    group = FiniteGroup(tuple(obj["elements"]), np.array(table))
    if not isinstance(obj["rep"], dict):
        raise ValidationError("group: rep must map element names to matrices")
    rep = {str(g): complex_matrix(m, f"rep[{g}]") for g, m in obj["rep"].items()}
    unknown = set(rep) - set(group.elements)
    if unknown:
        raise ValidationError(f"group: rep names unknown elements {sorted(unknown)}")
    return group, rep


def group_to_json(group: FiniteGroup, rep: dict) -> dict:
    return {
        "elements": list(group.elements),
        "mult_table": group.mult.tolist(),
        "rep": {g: matrix_to_json(rep[g]) for g in group.elements},
    }


# --------------------------------------------------------------------------
# interactions and projectors


def load_interaction(source) -> Interaction:
    """Interaction from a builtin name or a JSON file/object."""
    if isinstance(source, str) and source in ("aklt", "trivial"):
        return builtin_interaction(source)
    obj = read_json(source)
    _require(obj, ("spin_S", "range", "bulk"), "interaction")
    boundary = []
    for i, term in enumerate(obj.get("boundary", [])):
        _require(term, ("sites", "matrix"), f"boundary term {i}")
        boundary.append((tuple(int(s) for s in term["sites"]), complex_matrix(term["matrix"], f"boundary term {i}")))
    return Interaction(obj["spin_S"], int(obj["range"]), complex_matrix(obj["bulk"], "bulk"), tuple(boundary))


def interaction_to_json(phi: Interaction) -> dict:
    return {
        "spin_S": phi.spin_S,
        "range": phi.range,
        "bulk": matrix_to_json(phi.bulk),
        "boundary": [{"sites": list(s), "matrix": matrix_to_json(m)} for s, m in phi.boundary],
    }


def projector_to_json(h: LocalProjector) -> dict:
    """Interaction JSON of the projector plus its rank, readable by :func:`load_interaction`."""
    out = interaction_to_json(h.as_interaction())
    out["rank"] = h.rank
    return out


def load_projector(source, tol: float = 1e-10) -> LocalProjector:
    obj = read_json(source)
    phi = load_interaction(obj)
    h = LocalProjector(phi.spin_S, phi.range, np.array(phi.bulk), int(obj.get("rank", round(np.trace(phi.bulk).real))))
    if h.projector_defect() > tol:
        raise ValidationError(f"matrix is not a projector (defect {h.projector_defect():.3e})")
    return h


# --------------------------------------------------------------------------
# output


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(k) + ": " + _encode(obj[k], indent, level + 1) for k in sorted(obj)]
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if not any(isinstance(v, (list, dict)) for v in obj):
            # leaf lists (numbers, [re, im] pairs) stay on one line
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj + 0.0, ".17g")
        if all(c not in text for c in ".en"):
            text += ".0"
        return text
    return json.dumps(obj)


def canonical_dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _encode(_canonical(obj), indent, 0)


def write_json(obj, path) -> None:
    Path(path).write_text(canonical_dumps(obj) + "\n")


def write_csv(rows: Iterable[dict], columns: Sequence[str], handle_or_path) -> None:
    def emit(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format(row[c], ".17g") if isinstance(row[c], float) else row[c] for c in columns])

    if hasattr(handle_or_path, "write"):
        emit(handle_or_path)
    else:
        with open(handle_or_path, "w", newline="") as handle:
            emit(handle)
