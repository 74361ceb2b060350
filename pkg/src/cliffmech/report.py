"""Rendering of derivations, verification results and trajectories.

Derivations are printed in block notation (``x_{i}``, ``x_{n+i}``, ...,
``x_{7n+i}``) so they can be read side by side with hand-written formulas.
"""

from __future__ import annotations

import io
import json
from fractions import Fraction
from typing import Iterable

import numpy as np

from .dynamics import EnergyDrift, EquationSet, Trajectory, symbolic_equations
from .forms import (
    ConstantTwoForm,
    LinearOneForm,
    canonical_one_form,
    check_nondegenerate,
    liouville_form,
    rational_rank,
    structure_form_identity,
    symplectic_form_of_structure,
)
from .structures import (
    DUAL,
    PRIMAL,
    STRUCTURE_INDICES,
    AnticommutatorEntry,
    Counterexample,
    StructureFamily,
    VerificationRecord,
    anticommutator_table,
    build_structure,
    check_orthogonality,
    check_square_minus_identity,
    dual_matches_primal,
)

MARKDOWN = "markdown"
LATEX = "latex"


def block_index(b: int) -> str:
    """Subscript for block ``b``: ``i``, ``n+i``, ``2n+i``, ..."""
    if b == 0:
        return "i"
    if b == 1:
        return "n+i"
    return f"{b}n+i"


def _join_terms(terms: list[tuple[Fraction, str]]) -> str:
    parts = []
    for c, body in terms:
        text = body if abs(c) == 1 else f"{abs(c)} {body}"
        if parts:
            parts.append(("- " if c < 0 else "+ ") + text)
        else:
            parts.append(("-" if c < 0 else "") + text)
    return " ".join(parts) or "0"


class _Notation:
    def __init__(self, fmt: str):
        self.latex = fmt == LATEX

    def x(self, b: int) -> str:
        return f"x_{{{block_index(b)}}}"

    def dx(self, b: int) -> str:
        return f"dx_{{{block_index(b)}}}"

    def wedge(self, a: int, b: int) -> str:
        op = r" \wedge " if self.latex else "∧"
        return f"{self.dx(a)}{op}{self.dx(b)}"

    def comp(self, b: int) -> str:
        return f"X^{{{block_index(b)}}}"

    def dH(self, b: int) -> str:
        if self.latex:
            return rf"\frac{{\partial H}}{{\partial {self.x(b)}}}"
        return f"∂H/∂{self.x(b)}"

    def dt(self, b: int) -> str:
        if self.latex:
            return rf"\frac{{d{self.x(b)}}}{{dt}}"
        return f"d{self.x(b)}/dt"

    def partial(self, b: int) -> str:
        if self.latex:
            return rf"\frac{{\partial}}{{\partial {self.x(b)}}}"
        return f"∂/∂{self.x(b)}"

    def name(self, symbol: str, k: int | None = None) -> str:
        if k is None:
            return {"omega": r"\omega" if self.latex else "ω"}[symbol]
        base = {"lambda": r"\lambda" if self.latex else "λ", "Phi": r"\Phi" if self.latex else "Φ"}[symbol]
        return f"{base}_{{J_{k}^*}}" if self.latex else f"{base}_{{J{k}*}}"


def one_form_terms(f: LinearOneForm, note: _Notation) -> list[tuple[Fraction, str]]:
    """Terms ``c x_a dx_b`` of a block-level (n = 1) 1-form, ordered by ``a``."""
    return [(c, f"{note.x(a)} {note.dx(b)}") for a, b, c in f.terms()]


def _factored_one_form(f: LinearOneForm, note: _Notation) -> str:
    terms = one_form_terms(f, note)
    common = {abs(c) for c, _ in terms}
    if len(common) == 1 and (scale := common.pop()) != 1:
        half = r"\frac{1}{2}" if note.latex and scale == Fraction(1, 2) else str(scale)
        inner = _join_terms([(c / scale, body) for c, body in terms])
        return f"{half}({inner})"
    return _join_terms(terms)


def two_form_terms(phi: ConstantTwoForm, note: _Notation) -> list[tuple[Fraction, str]]:
    """Wedge terms written with a positive coefficient, e.g. ``dx_{4n+i}∧dx_{i}``.

    A term ``c dx_a∧dx_b`` with ``c < 0`` is flipped to ``|c| dx_b∧dx_a``, and
    terms are ordered by their first differential.
    """
    return [(c, note.wedge(a, b)) for a, b, c in oriented_wedge_terms(phi)]


def interior_terms(phi: ConstantTwoForm, note: _Notation) -> list[tuple[Fraction, str]]:
    terms = []
    for a, b, c in oriented_wedge_terms(phi):
        terms.append((c, f"{note.comp(a)} {note.dx(b)}"))
        terms.append((-c, f"{note.comp(b)} {note.dx(a)}"))
    return terms


def oriented_wedge_terms(phi: ConstantTwoForm) -> list[tuple[int, int, Fraction]]:
    out = []
    for a, b, c in phi.wedge_terms():
        if c < 0:
            a, b, c = b, a, -c
        out.append((a, b, c))
    out.sort()
    return out


def equation_lines(eqs: EquationSet, note: _Notation) -> list[str]:
    lines = []
    for r in eqs.records:
        sign = "-" if r.sign < 0 else ""
        lines.append(f"{note.dt(r.lhs)} = {sign}{note.dH(r.rhs)}")
    return lines


def field_terms(eqs: EquationSet, note: _Notation) -> list[tuple[Fraction, str]]:
    return [
        (Fraction(r.sign), f"{note.dH(r.rhs)} {note.partial(r.lhs)}") for r in eqs.records
    ]


def render_derivation(k: int, fmt: str = MARKDOWN) -> str:
    """Term-by-term derivation of Hamilton's equations for ``J_k*``."""
    if fmt not in (MARKDOWN, LATEX):
        raise ValueError(f"derivations render as markdown or latex, not {fmt!r}")
    note = _Notation(fmt)
    omega = canonical_one_form(1)
    lam = liouville_form(k, 1)
    phi = symplectic_form_of_structure(k, 1)
    eqs = symbolic_equations(k)

    om, lm, ph = note.name("omega"), note.name("lambda", k), note.name("Phi", k)
    jstar = f"J_{k}^*" if note.latex else f"J{k}*"
    rows = [
        f"{om} = {_factored_one_form(omega, note)}",
        f"{lm} = {jstar}({om}) = {_factored_one_form(lam, note)}",
        f"{ph} = -d{lm} = {_join_terms(two_form_terms(phi, note))}",
        f"i_X {ph} = {_join_terms(interior_terms(phi, note))}",
        f"X = {_join_terms(field_terms(eqs, note))}",
    ]
    equations = equation_lines(eqs, note)
    if note.latex:
        out = [f"% Hamilton equations for the structure J_{k}^*, block index i = 1..n"]
        out += [r"\begin{align*}"]
        out += [r.replace(" = ", " &= ", 1) + r" \\" for r in rows]
        out += [r"\end{align*}", r"\begin{align*}"]
        out += [e.replace(" = ", " &= ", 1) + r" \\" for e in equations]
        out += [r"\end{align*}", f"% {ph} has constant coefficients, so d{ph} = 0."]
        return "\n".join(out) + "\n"
    out = [f"# Hamilton equations for J{k}*", "", "Block index i = 1..n.", ""]
    out += [f"- {r}" for r in rows]
    out += ["", f"{ph} has constant coefficients, so d{ph} = 0; it is nondegenerate, hence symplectic.", ""]
    out += ["## Equations", ""]
    out += [f"- {e}" for e in equations]
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------------------
# verification and tables


def hard_checks(n: int) -> list[VerificationRecord]:
    """The five hard checks per structure, in a stable order."""
    records = []
    for k in STRUCTURE_INDICES:
        J = build_structure(k, n, PRIMAL)
        phi = symplectic_form_of_structure(k, n)
        records.append(check_square_minus_identity(J))
        records.append(check_orthogonality(J))
        records.append(dual_matches_primal(k, n))
        records.append(structure_form_identity(k, n, phi))
        records.append(_nondegenerate_record(k, phi))
    return records


def _nondegenerate_record(k: int, phi: ConstantTwoForm) -> VerificationRecord:
    if check_nondegenerate(phi):
        return VerificationRecord(f"nondegenerate[Phi_J{k}*]")
    rank = rational_rank(phi.omega)
    return VerificationRecord(
        f"nondegenerate[Phi_J{k}*]", (Counterexample("rank", phi.dim, rank),)
    )


def dual_square_checks(n: int) -> list[VerificationRecord]:
    return [check_square_minus_identity(build_structure(k, n, DUAL)) for k in STRUCTURE_INDICES]


def verification_report(n: int) -> dict:
    records = hard_checks(n)
    table = anticommutator_table(StructureFamily.build(n))
    return {
        "n": n,
        "all_passed": all(r.passed for r in records),
        "hard_checks": [r.to_dict() for r in records],
        "informational": {
            "dual_square_minus_identity": [r.to_dict() for r in dual_square_checks(n)],
            "anticommutator_table": [e.to_dict() for e in table.values()],
        },
    }


def render_verification_markdown(report: dict) -> str:
    lines = [f"# Verification (n = {report['n']})", "", "| check | result | counterexamples |", "|---|---|---|"]
    for r in report["hard_checks"]:
        lines.append(f"| {r['check']} | {'pass' if r['pass'] else 'FAIL'} | {len(r['counterexamples'])} |")
    lines += ["", f"All hard checks passed: {report['all_passed']}", ""]
    return "\n".join(lines)


def table_rows(entries: Iterable[AnticommutatorEntry]) -> list[dict]:
    return [
        {
            "i": e.i,
            "j": e.j,
            "product_ij": e.product_ij,
            "product_ji": e.product_ji,
            "clifford_relation_holds": e.holds,
            "anticommutator_nonzero": len(e.nonzero()),
        }
        for e in entries
    ]


def table_report(n: int) -> dict:
    table = anticommutator_table(StructureFamily.build(n))
    return {"n": n, "relation": "J_i J_j + J_j J_i = -2 delta_ij I", "pairs": table_rows(table.values())}


def render_table_markdown(report: dict) -> str:
    lines = [
        f"# Anticommutator table (n = {report['n']})",
        "",
        f"Relation tested: {report['relation']}",
        "",
        "| i | j | J_i J_j | J_j J_i | relation | nonzero entries |",
        "|---|---|---|---|---|---|",
    ]
    for p in report["pairs"]:
        rel = ("-2I: holds" if p["i"] == p["j"] else "0: holds") if p["clifford_relation_holds"] else "fails"
        lines.append(
            f"| {p['i']} | {p['j']} | {p['product_ij']} | {p['product_ji']} | {rel} | {p['anticommutator_nonzero']} |"
        )
    return "\n".join(lines) + "\n"


def parse_table_markdown(text: str) -> list[dict]:
    """Inverse of :func:`render_table_markdown` for the pair rows."""
    rows = []
    for line in text.splitlines():
        cells = [c.strip() for c in line.strip().strip("|").split("|")]
        if len(cells) != 6 or not cells[0].isdigit():
            continue
        rows.append(
            {
                "i": int(cells[0]),
                "j": int(cells[1]),
                "product_ij": cells[2],
                "product_ji": cells[3],
                "clifford_relation_holds": cells[4].endswith("holds"),
                "anticommutator_nonzero": int(cells[5]),
            }
        )
    return rows


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


# ----------------------------------------------------------------------------
# trajectories


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_csv(traj: Trajectory) -> str:
    dim = traj.states.shape[1]
    buf = io.StringIO()
    buf.write(",".join(["t"] + [f"x{a}" for a in range(dim)] + ["H"]) + "\n")
    for t, x, h in zip(traj.times, traj.states, traj.energies):
        buf.write(",".join([_fmt(t)] + [_fmt(v) for v in x] + [_fmt(h)]) + "\n")
    return buf.getvalue()


def read_trajectory_csv(text: str) -> tuple[list[str], np.ndarray]:
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, data.reshape(len(lines) - 1, len(header))


def diagnostics(traj: Trajectory, drift: EnergyDrift, residual: float, steps: int) -> dict:
    return {
        "method": traj.method,
        "dt": traj.dt,
        "steps": steps,
        "max_energy_drift": drift.max_drift,
        "drift_slope": drift.slope,
        "symplecticity_residual": residual,
    }
