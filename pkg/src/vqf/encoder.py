"""Factoring-as-optimization encoding and classical presolve.

An odd semiprime N with two L-bit factors becomes the binary long
multiplication table: one clause per output column,

    sum of partial products + carries in - N's bit - weighted carries out = 0,

where carry z_{j,k} leaves column j with weight 2**(k-j) and enters column k
with weight 1.  The cost function is the sum of squared clauses, which is 0
exactly on assignments encoding the factor pairs.

Preprocessing shrinks the system before any quantum resources are spent:
interval bounds, single-clause tightening, a parity rule, and probing
(tentatively fix one variable or a pair, propagate, and discard values that
hit a contradiction).  All rules only ever remove assignments that satisfy
no clause system solution, so the solution set projected onto the surviving
variables is preserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import Infeasible, InfeasibleInstance, MissingVariable, ParseError
from .pboly import (BoolPoly, Var, carry, format_poly, merge_fixes, parse_poly,
                    pvar, qvar)

FixTarget = Union[int, Var]


@dataclass(frozen=True)
class FactoringInstance:
    """An integer to factor into two odd bit_length-bit multipliers."""

    n: int
    bit_length: int
    msb_lsb_fixed: bool = True

    def __post_init__(self):
        if self.bit_length < 2:
            raise InfeasibleInstance("bit_length must be at least 2")
        if self.n < 9 or self.n % 2 == 0:
            raise InfeasibleInstance(f"{self.n} is not an odd number >= 9")
        # product of two L-bit numbers with MSB set spans 2L-1 or 2L bits
        width = self.n.bit_length()
        if self.msb_lsb_fixed and not (2 * self.bit_length - 1 <= width <= 2 * self.bit_length):
            raise InfeasibleInstance(
                f"{self.n} has {width} bits, inconsistent with two "
                f"{self.bit_length}-bit factors")


@dataclass
class ClauseSystem:
    """Clauses over the free variables plus the accumulated fixes.

    Invariant: clauses mention only free variables; every entry of `fixes`
    maps an eliminated variable to 0, 1, or a still-free alias target.
    """

    clauses: List[BoolPoly]
    fixes: Dict[Var, FixTarget] = field(default_factory=dict)

    @property
    def free_vars(self) -> List[Var]:
        seen = set()
        for c in self.clauses:
            seen.update(c.variables())
        return sorted(seen)


def build_clauses(inst: FactoringInstance) -> ClauseSystem:
    """Column equations of the multiplication table for inst.n."""
    L = inst.bit_length
    fixes: Dict[Var, FixTarget] = {}
    if inst.msb_lsb_fixed:
        for v in (pvar(0), qvar(0), pvar(L - 1), qvar(L - 1)):
            fixes[v] = 1

    def bit_factor(v: Var) -> BoolPoly:
        t = fixes.get(v)
        return BoolPoly.const(t) if t is not None else BoolPoly.of(v)

    ncols = 2 * L
    col_pp: List[List[BoolPoly]] = [[] for _ in range(ncols)]
    for i in range(L):
        for j in range(L):
            col_pp[i + j].append(bit_factor(pvar(i)) * bit_factor(qvar(j)))

    carries_in: List[List[Var]] = [[] for _ in range(ncols)]
    clauses: List[BoolPoly] = []
    for c in range(ncols):
        n_c = (inst.n >> c) & 1
        max_sum = len(col_pp[c]) + len(carries_in[c])
        k_out = max_sum.bit_length() - 1 if max_sum >= 2 else 0
        targets = range(c + 1, min(c + k_out, ncols - 1) + 1)
        clause = BoolPoly.const(-n_c)
        for pp in col_pp[c]:
            clause = clause + pp
        for z in carries_in[c]:
            clause = clause + BoolPoly.of(z)
        for t in targets:
            z = carry(c, t)
            carries_in[t].append(z)
            clause = clause - (2 ** (t - c)) * BoolPoly.of(z)
        if clause.is_zero():
            continue
        if not clause.variables():
            raise Infeasible(f"column {c} reduces to {clause.constant} = 0")
        clauses.append(clause)
    return ClauseSystem(clauses, fixes)


def cost_function(cs: ClauseSystem) -> BoolPoly:
    """Sum of squared clauses; zero exactly on the system's solutions."""
    total = BoolPoly.zero()
    for c in cs.clauses:
        total = total + c * c
    return total


# -- presolve ----------------------------------------------------------------

def _excludes_zero(poly: BoolPoly) -> bool:
    lo, hi = poly.bounds()
    return lo > 0 or hi < 0


def _scan_fixes(clauses: Sequence[BoolPoly]) -> Dict[Var, int]:
    """One pass of the cheap rules over every clause.

    Raises Infeasible on a contradiction, otherwise returns variable fixes
    that hold in every solution of the system.
    """
    found: Dict[Var, int] = {}

    def record(v: Var, b: int):
        if found.get(v, b) != b:
            raise Infeasible(f"{v.name} forced to both 0 and 1")
        found[v] = b

    for clause in clauses:
        vs = clause.variables()
        if not vs:
            if clause.constant:
                raise Infeasible("constant clause is nonzero")
            continue
        if _excludes_zero(clause):
            raise Infeasible(f"bounds exclude 0: {format_poly(clause)}")

        # same-signed monomials summing to zero force each one to vanish
        coeffs = [c for m, c in clause.terms.items() if m]
        if not clause.constant and (all(c > 0 for c in coeffs) or all(c < 0 for c in coeffs)):
            for m in clause.terms:
                if len(m) == 1:
                    record(m[0], 0)

        # parity: reduce the clause mod 2 when all coefficients are integral
        if all(c.denominator == 1 for c in clause.terms.values()):
            odd = [m for m, c in clause.terms.items() if m and c.numerator % 2]
            k = clause.constant.numerator % 2
            if not odd and k:
                raise Infeasible(f"parity violation: {format_poly(clause)}")
            if len(odd) == 1 and k:
                for v in odd[0]:
                    record(v, 1)

        # single-clause tightening: a value whose substitution empties the
        # clause's value interval of 0 is impossible
        for v in vs:
            ex0 = _excludes_zero(clause.substitute({v: 0}))
            ex1 = _excludes_zero(clause.substitute({v: 1}))
            if ex0 and ex1:
                raise Infeasible(f"{v.name} has no feasible value")
            if ex0:
                record(v, 1)
            elif ex1:
                record(v, 0)
    return found


def _apply(clauses: List[BoolPoly], fixes: Dict[Var, FixTarget]) -> List[BoolPoly]:
    out = []
    for c in clauses:
        c2 = c.substitute(fixes)
        if c2.is_zero():
            continue
        if not c2.variables():
            if c2.constant:
                raise Infeasible("clause reduced to nonzero constant")
            continue
        out.append(c2)
    return out


def _propagate(clauses: List[BoolPoly]) -> Tuple[List[BoolPoly], Dict[Var, int]]:
    """Run the cheap rules to fixpoint.  Returns (clauses, derived fixes)."""
    derived: Dict[Var, int] = {}
    while True:
        found = _scan_fixes(clauses)
        if not found:
            return clauses, derived
        merge_fixes(derived, found)
        clauses = _apply(clauses, found)


def _feasible(clauses: Sequence[BoolPoly], assumption: Dict[Var, int]) -> bool:
    """Can propagation live with this tentative assignment?"""
    try:
        _propagate(_apply(list(clauses), assumption))
        return True
    except Infeasible:
        return False


def _annihilate_products(clauses: List[BoolPoly]) -> Tuple[List[BoolPoly], bool]:
    """Strip monomials whose variable pair is provably never (1,1).

    For every pair of variables sharing a monomial, probe the joint
    assignment (1,1); if propagation refutes it, the product uv is zero
    on every solution and each monomial containing both u and v (a
    multiple of uv) can be removed without losing solutions.  The
    reduced system is then re-probed: every pair actually used must
    still be refuted, which closes the reverse inclusion and makes the
    rewrite an exact solution-set-preserving step.  On any verification
    failure the original clauses are returned untouched.
    """
    co = set()
    for c in clauses:
        for m in c.terms:
            for a in range(len(m)):
                for b in range(a + 1, len(m)):
                    co.add((m[a], m[b]))
    zero = {pr for pr in co if not _feasible(clauses, {pr[0]: 1, pr[1]: 1})}
    if not zero:
        return clauses, False

    used = set()
    out: List[BoolPoly] = []
    for c in clauses:
        kept = BoolPoly.zero()
        for m, k in c.monomials():
            hit = next((pr for a in range(len(m)) for pr in
                        [(m[a], m[b]) for b in range(a + 1, len(m))]
                        if pr in zero), None)
            if hit is None:
                kept = kept + BoolPoly.monomial(m, k)
            else:
                used.add(hit)
        if kept.is_zero():
            continue
        if not kept.variables():
            if kept.constant:
                raise Infeasible("clause reduced to nonzero constant")
            continue
        out.append(kept)
    if not used:
        return clauses, False
    for u, v in sorted(used):
        if _feasible(out, {u: 1, v: 1}):
            return clauses, False
    return out, True


def preprocess(cs: ClauseSystem, probe_depth: int = 2) -> ClauseSystem:
    """Reduce the system with bounds, tightening, parity, and probing.

    probe_depth 0 runs only the propagation rules; depth 1 probes single
    variables; depth 2 additionally probes co-occurring pairs, fixing
    one-sided values and erasing products that can never switch on.
    Deterministic given probe_depth: scans follow the canonical variable
    order.
    """
    if probe_depth not in (0, 1, 2):
        raise ValueError("probe_depth must be 0, 1, or 2")
    clauses = list(cs.clauses)
    fixes: Dict[Var, FixTarget] = dict(cs.fixes)

    def absorb(new: Dict[Var, FixTarget]):
        nonlocal clauses
        merge_fixes(fixes, new)
        clauses = _apply(clauses, new)

    clauses, derived = _propagate(clauses)
    merge_fixes(fixes, derived)

    while True:
        changed = False
        if probe_depth >= 1:
            # single-variable probing with full propagation inside each probe
            progress = True
            while progress:
                progress = False
                for v in sorted({v for c in clauses for v in c.variables()}):
                    if not any(v in c2.variables() for c2 in clauses):
                        continue  # eliminated by an earlier fix in this pass
                    f0 = _feasible(clauses, {v: 0})
                    f1 = _feasible(clauses, {v: 1})
                    if not f0 and not f1:
                        raise Infeasible(f"{v.name} has no feasible value")
                    if f0 != f1:
                        absorb({v: 0 if f0 else 1})
                        clauses, derived = _propagate(clauses)
                        merge_fixes(fixes, derived)
                        progress = changed = True
        if probe_depth >= 2:
            pairs = sorted({tuple(sorted(pr))
                            for c in clauses
                            for vs in [c.variables()]
                            for a in range(len(vs))
                            for pr in [(vs[a], vs[b]) for b in range(a + 1, len(vs))]})
            for u, v in pairs:
                live = set()
                for bu in (0, 1):
                    for bv in (0, 1):
                        if _feasible(clauses, {u: bu, v: bv}):
                            live.add((bu, bv))
                if not live:
                    raise Infeasible(f"no joint value for {u.name},{v.name}")
                new: Dict[Var, FixTarget] = {}
                u_vals = {a for a, _ in live}
                v_vals = {b for _, b in live}
                if len(u_vals) == 1:
                    new[u] = u_vals.pop()
                if len(v_vals) == 1:
                    new[v] = v_vals.pop()
                if new:
                    absorb(new)
                    clauses, derived = _propagate(clauses)
                    merge_fixes(fixes, derived)
                    changed = True
                    break  # pair list is stale; rebuild
        if not changed and probe_depth >= 2:
            clauses, changed = _annihilate_products(clauses)
            if changed:
                clauses, derived = _propagate(clauses)
                merge_fixes(fixes, derived)
        if not changed:
            break

    # drop duplicate clauses, keeping first occurrences
    seen_keys = set()
    unique: List[BoolPoly] = []
    for c in clauses:
        key = tuple(sorted((m, c2) for m, c2 in c.terms.items()))
        if key not in seen_keys:
            seen_keys.add(key)
            unique.append(c)
    return ClauseSystem(unique, fixes)


def resolve_fix(fixes: Dict[Var, FixTarget], v: Var) -> FixTarget:
    """Follow alias chains to a 0/1 value or a still-free variable."""
    t: FixTarget = v
    seen = set()
    while isinstance(t, Var) and t in fixes:
        if t in seen:
            raise Infeasible(f"alias cycle through {t.name}")
        seen.add(t)
        t = fixes[t]
    return t


def decode_factors(cs: ClauseSystem, assignment: Dict[Var, int],
                   bit_length: int) -> Tuple[int, int]:
    """Read the factor pair off an assignment of the free variables."""
    def bit(v: Var) -> int:
        t = resolve_fix(cs.fixes, v)
        if isinstance(t, Var):
            if t not in assignment:
                raise MissingVariable(f"no value for {t.name}")
            return assignment[t]
        return t

    p = sum(bit(pvar(i)) << i for i in range(bit_length))
    q = sum(bit(qvar(i)) << i for i in range(bit_length))
    return p, q


# -- clause files ------------------------------------------------------------

def clause_file_text(cs: ClauseSystem, header: str = "") -> str:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append("# one clause per line, each implicitly = 0")
    for v in sorted(cs.fixes):
        t = cs.fixes[v]
        lines.append(f"# fix {v.name} = {t.name if isinstance(t, Var) else t}")
    for c in cs.clauses:
        lines.append(format_poly(c))
    return "\n".join(lines) + "\n"


def write_clause_file(cs: ClauseSystem, path) -> None:
    Path(path).write_text(clause_file_text(cs))


def load_clause_file(path) -> ClauseSystem:
    """Read a clause file.  `# fix` comment lines restore eliminated bits."""
    text = Path(path).read_text()
    clauses: List[BoolPoly] = []
    fixes: Dict[Var, FixTarget] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("# fix "):
            try:
                name, _, val = line[len("# fix "):].partition("=")
                v = Var.parse(name.strip())
                val = val.strip()
                fixes[v] = int(val) if val in ("0", "1") else Var.parse(val)
            except (ParseError, ValueError) as e:
                raise ParseError(f"{path}:{ln}: bad fix line: {e}") from None
            continue
        if not line or line.startswith("#"):
            continue
        try:
            poly = parse_poly(line)
        except ParseError as e:
            raise ParseError(f"{path}:{ln}: {e}") from None
        if not poly.is_zero():
            clauses.append(poly)
    return ClauseSystem(clauses, fixes)


# -- synthetic instances -------------------------------------------------------

def make_random_clause_system(seed: int, n_bits: int = 3,
                              n_clauses: int = 4) -> ClauseSystem:
    """A planted-solution clause system in the multiplication-table shape.

    Each clause mixes one or two p*q products with a few single bits and a
    constant chosen so a hidden random assignment satisfies it, so the
    squared-clause cost always has minimum value 0.
    """
    rng = np.random.default_rng(seed)
    ps = [pvar(i) for i in range(1, n_bits + 1)]
    qs = [qvar(i) for i in range(1, n_bits + 1)]
    planted = {v: int(rng.integers(2)) for v in ps + qs}

    clauses = []
    while len(clauses) < n_clauses:
        clause = BoolPoly.zero()
        for _ in range(int(rng.integers(1, 3))):
            a = ps[int(rng.integers(n_bits))]
            b = qs[int(rng.integers(n_bits))]
            clause = clause + BoolPoly.of(a) * BoolPoly.of(b)
        for _ in range(int(rng.integers(0, 3))):
            v = (ps + qs)[int(rng.integers(2 * n_bits))]
            sign = 1 if rng.integers(2) else -1
            clause = clause + sign * BoolPoly.of(v)
        clause = clause - clause.evaluate(planted)
        if clause.is_zero() or not clause.variables():
            continue
        clauses.append(clause)
    return ClauseSystem(clauses, {})
