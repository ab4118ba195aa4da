"""Fixed-format MPS writer and a whitespace-tolerant reader.

Names longer than 8 characters, or colliding after truncation, are replaced
by deterministic ``C0000001``/``R0000001`` codes; the original names are kept
in ``*`` comment lines at the top of the file so the mapping travels with it.
"""
from __future__ import annotations

import math

from .model import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, LinExpr, MilpModel

_SENSE_CODE = {LE: "L", GE: "G", EQ: "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}
OBJ_ROW = "OBJ"


def _short_names(names: list[str], prefix: str, reserved: set[str]) -> list[str]:
    out: list[str] = []
    used = set(reserved)
    for k, name in enumerate(names):
        short = name[:8]
        ok = len(name) <= 8 and " " not in name and short not in used
        if not ok:
            short = f"{prefix}{k + 1:07d}"
        used.add(short)
        out.append(short)
    return out


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    for prec in range(12, 0, -1):
        s = f"{v:.{prec}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot format {v!r} in 12 characters")


def _field_line(code: str, name: str, entries: list[tuple[str, float]]) -> str:
    line = f" {code:<2} {name:<8}"
    for k, (n2, v) in enumerate(entries):
        line += "  " if k == 0 else "   "
        line += f"{n2:<8}  {_num(v):>12}"
    return line.rstrip()


def export_mps(model: MilpModel) -> tuple[str, dict[str, str]]:
    """Return the MPS text and a map ``short name -> original name``."""
    col_names = _short_names([v.name for v in model.variables], "C", {OBJ_ROW})
    row_names = _short_names([c.name for c in model.constraints], "R", {OBJ_ROW})
    mapping = {s: o for s, o in zip(col_names, (v.name for v in model.variables)) if s != o}
    mapping.update({s: o for s, o in zip(row_names, (c.name for c in model.constraints)) if s != o})

    cols: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for k, v in model.objective.terms.items():
        if v != 0.0:
            cols[k].append((OBJ_ROW, v))
    for i, con in enumerate(model.constraints):
        for k, v in sorted(con.coeffs.items()):
            cols[k].append((row_names[i], v))

    out = []
    for s, o in sorted(mapping.items()):
        out.append(f"* {s} {o}")
    out.append(f"NAME          {model.name[:8]}")
    out.append("ROWS")
    out.append(f" N  {OBJ_ROW}")
    for i, con in enumerate(model.constraints):
        out.append(f" {_SENSE_CODE[con.sense]}  {row_names[i]}")
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for k, var in enumerate(model.variables):
        is_int = var.kind != CONTINUOUS
        if is_int != in_int:
            tag = "INTORG" if is_int else "INTEND"
            out.append(f"    M{marker:07d}  'MARKER'                 '{tag}'")
            marker += 1
            in_int = is_int
        entries = cols[k] or [(OBJ_ROW, 0.0)]
        for j in range(0, len(entries), 2):
            out.append(_field_line("", col_names[k], entries[j:j + 2]))
    if in_int:
        out.append(f"    M{marker:07d}  'MARKER'                 'INTEND'")
    out.append("RHS")
    rhs = [(row_names[i], con.rhs) for i, con in enumerate(model.constraints) if con.rhs != 0.0]
    if model.objective.const != 0.0:
        rhs.insert(0, (OBJ_ROW, -model.objective.const))
    for j in range(0, len(rhs), 2):
        out.append(_field_line("", "RHS", rhs[j:j + 2]))
    out.append("RANGES")
    out.append("BOUNDS")
    for k, var in enumerate(model.variables):
        name = col_names[k]
        lb, ub = var.lb, var.ub
        if var.kind == BINARY and lb == 0.0 and ub == 1.0:
            out.append(f" BV BND       {name}")
            continue
        if lb == ub:
            out.append(_field_line("FX", "BND", [(name, lb)]))
            continue
        if math.isinf(lb) and math.isinf(ub):
            out.append(f" FR BND       {name}")
            continue
        if math.isinf(lb):
            out.append(f" MI BND       {name}")
        elif lb != 0.0 or var.kind != CONTINUOUS:
            out.append(_field_line("LO", "BND", [(name, lb)]))
        if math.isfinite(ub):
            out.append(_field_line("UP", "BND", [(name, ub)]))
        elif var.kind != CONTINUOUS:
            out.append(f" PL BND       {name}")
    out.append("ENDATA")
    return "\n".join(out) + "\n", mapping


def parse_mps(text: str) -> MilpModel:
    """Read fixed or free MPS (names without spaces) back into a model."""
    mapping: dict[str, str] = {}
    section = None
    name = "model"
    rows: list[tuple[str, str]] = []
    obj_row = None
    cols: dict[str, dict[str, float]] = {}
    col_order: list[str] = []
    kinds: dict[str, str] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    in_int = False
    for raw in text.splitlines():
        if not raw.strip():
            continue
        if raw.startswith("*"):
            parts = raw[1:].split()
            if len(parts) == 2:
                mapping[parts[0]] = parts[1]
            continue
        if not raw.startswith(" "):
            head = raw.split()
            section = head[0]
            if section == "NAME" and len(head) > 1:
                name = head[1]
            continue
        tok = raw.split()
        if section == "ROWS":
            code, rname = tok
            if code == "N":
                if obj_row is None:
                    obj_row = rname
            else:
                rows.append((rname, _CODE_SENSE[code]))
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            cname = tok[0]
            if cname not in cols:
                cols[cname] = {}
                col_order.append(cname)
                kinds[cname] = INTEGER if in_int else CONTINUOUS
            for j in range(1, len(tok), 2):
                cols[cname][tok[j]] = cols[cname].get(tok[j], 0.0) + float(tok[j + 1])
        elif section == "RHS":
            for j in range(1, len(tok), 2):
                rhs[tok[j]] = float(tok[j + 1])
        elif section == "RANGES":
            raise ValueError("RANGES entries are not supported")
        elif section == "BOUNDS":
            code, cname = tok[0], tok[2]
            val = float(tok[3]) if len(tok) > 3 else None
            lb, ub = bounds.setdefault(cname, [0.0, math.inf])
            if code == "UP":
                ub = val
                if val < 0 and lb == 0.0:
                    lb = -math.inf
            elif code == "LO":
                lb = val
            elif code == "FX":
                lb = ub = val
            elif code == "FR":
                lb, ub = -math.inf, math.inf
            elif code == "MI":
                lb = -math.inf
            elif code == "PL":
                ub = math.inf
            elif code == "BV":
                lb, ub = 0.0, 1.0
                kinds[cname] = BINARY
            elif code in ("LI", "UI"):
                kinds[cname] = INTEGER
                if code == "LI":
                    lb = val
                else:
                    ub = val
            bounds[cname] = [lb, ub]

    model = MilpModel(name)
    vars_ = {}
    for cname in col_order:
        lb, ub = bounds.get(cname, [0.0, math.inf])
        kind = kinds[cname]
        vars_[cname] = model.add_var(mapping.get(cname, cname), lb=lb, ub=ub, kind=kind)
    row_terms: dict[str, dict[int, float]] = {r: {} for r, _ in rows}
    obj = LinExpr()
    for cname in col_order:
        v = vars_[cname]
        for rname, a in cols[cname].items():
            if rname == obj_row:
                if a != 0.0:
                    obj.terms[v.index] = a
            else:
                row_terms[rname][v.index] = a
    obj.const = -rhs.get(obj_row, 0.0)
    model.minimize(obj)
    for rname, sense in rows:
        model.add_constr(LinExpr(row_terms[rname]), sense, rhs.get(rname, 0.0),
                         mapping.get(rname, rname))
    return model
