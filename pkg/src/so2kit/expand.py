"""Universal-expansion decision engine for simple Horn/Krom prefixes ending
in an existential function block followed by universal propositions.

Outer quantifier blocks are eliminated by enumerating truth tables; each
leaf ``exists-functions forall-props matrix`` is expanded into a
propositional Horn or Krom problem over one proposition per (function,
input tuple) pair, then handed to unit propagation or the implication-graph
satisfiability check.  Large Krom leaves are decided on an implicit graph
whose clause batches are recomputed on demand; large Horn leaves by forward
chaining over the implicit clause set.  Both avoid materializing the
exponential expansion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

from .classify import FragmentError, block_structure, classify
from .core import (
    CapExceededError,
    Clause,
    Const,
    FixedTerm,
    Formula,
    Interpretation,
    So2Error,
    Term,
    TruthTable,
    Var,
    all_tables,
    matrix_clauses,
    prefix_formula,
    split_prefix,
    tuple_to_index,
)
from .kromgraph import tarjan_scc

CONST_TRUE = ("const", 1)
CONST_FALSE = ("const", 0)


@dataclass(frozen=True)
class ExpansionBudget:
    """Caps for the expansion engine; exceeding one raises a structured
    infeasibility error rather than producing a wrong answer."""

    outer_arity_cap: int = 4
    materialize_universal_cap: int = 12
    materialize_y_cap: int = 1 << 14
    stream_universal_cap: int = 20
    stream_clause_vars_cap: int = 16
    chain_facts_cap: int = 1 << 21


DEFAULT_BUDGET = ExpansionBudget()


@dataclass
class ExpansionProblem:
    """A fully materialized expansion.

    ``y_vars`` lists one proposition per function and input tuple (so its
    length is the sum of 2^arity over the functions).  ``clauses`` are
    ground over the y propositions and constants and keep the literal count
    of their source clause; ``provenance`` maps each to (source clause
    index, universal assignment).
    """

    functions: list
    y_vars: list  # keys (i, argbits)
    clauses: list  # tuple of (key, positive); key is a y key or CONST_*
    provenance: list  # (source index, b tuple)
    source_clauses: list

    def propositional_clauses(self) -> Optional[list]:
        """Clauses with constants folded; None when some clause is
        unsatisfiable outright (folds to the empty clause)."""
        out = []
        for clause in self.clauses:
            folded = _fold_clause(clause)
            if folded == "true":
                continue
            if folded == "empty":
                return None
            out.append(folded)
        return out


def _fold_clause(clause):
    lits = []
    for key, positive in clause:
        if key[0] == "const":
            if (key[1] == 1) == positive:
                return "true"
            continue
        lits.append((key, positive))
    if not lits:
        return "empty"
    return tuple(lits)


# ---------------------------------------------------------------------------
# Propositional subsolvers
# ---------------------------------------------------------------------------


def horn_sat(clauses) -> tuple[bool, Optional[set]]:
    """Satisfiability of a propositional Horn CNF by unit propagation.

    Returns (satisfiable, least model as the set of true variables).  The
    model is pointwise minimal among all satisfying assignments.
    Raises on a clause with more than one positive literal.
    """
    normalized = []
    for clause in clauses:
        pos = [key for key, positive in clause if positive]
        negs = {key for key, positive in clause if not positive}
        if len(pos) > 1:
            raise So2Error(f"non-Horn clause with {len(pos)} positive literals")
        head = pos[0] if pos else None
        if head is not None and head in negs:
            continue  # tautology
        normalized.append((frozenset(negs), head))

    true: set = set()
    # Count of body literals not yet satisfied, per clause.
    remaining = []
    watchers: dict = {}
    queue = []
    for idx, (body, head) in enumerate(normalized):
        remaining.append(len(body))
        if not body:
            if head is None:
                return False, None
            if head not in true:
                true.add(head)
                queue.append(head)
        for key in body:
            watchers.setdefault(key, []).append(idx)

    # Re-count bodies already partially satisfied by initial units.
    processed: set = set()
    while queue:
        var = queue.pop()
        if var in processed:
            continue
        processed.add(var)
        for idx in watchers.get(var, ()):
            remaining[idx] -= 1
            if remaining[idx] == 0:
                head = normalized[idx][1]
                if head is None:
                    return False, None
                if head not in true:
                    true.add(head)
                    queue.append(head)
    return True, true


def two_sat(clauses) -> tuple[bool, Optional[dict]]:
    """Satisfiability of a propositional Krom CNF via strongly connected
    components of the implication graph; returns a model when satisfiable.
    Raises on clauses with more than two literals.
    """
    variables: dict = {}

    def vid(key) -> int:
        i = variables.get(key)
        if i is None:
            i = len(variables)
            variables[key] = i
        return i

    edges: set = set()
    for clause in clauses:
        lits = list(clause)
        if len(lits) > 2:
            raise So2Error("clause with more than two literals")
        if len(lits) == 0:
            return False, None
        enc = [2 * vid(key) + (0 if positive else 1) for key, positive in lits]
        if len(enc) == 1:
            a = enc[0]
            edges.add((a ^ 1, a))
        else:
            a, b = enc
            edges.add((a ^ 1, b))
            edges.add((b ^ 1, a))

    n = 2 * len(variables)
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
    comp_of, _ = tarjan_scc(n, adj)
    model = {}
    for key, i in variables.items():
        cp, cn = comp_of[2 * i], comp_of[2 * i + 1]
        if cp == cn:
            return False, None
        # Components are emitted sinks-first; the earlier-emitted literal
        # component is downstream and safe to set true.
        model[key] = cp < cn
    return True, model


def brute_force_sat(clauses) -> bool:
    """Exhaustive propositional satisfiability; the subsolver oracle."""
    variables = sorted({key for clause in clauses for key, _ in clause}, key=repr)
    for bits in itertools.product((False, True), repeat=len(variables)):
        assignment = dict(zip(variables, bits))
        ok = True
        for clause in clauses:
            if not any(assignment[key] == positive for key, positive in clause):
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# Leaf analysis
# ---------------------------------------------------------------------------


def _leaf_parts(phi: Formula) -> tuple[list, list, list]:
    """Split ``exists... forall-props matrix`` into (existential variables,
    universal propositions, clauses)."""
    prefix, matrix = split_prefix(phi)
    clauses = matrix_clauses(matrix)
    if clauses is None:
        raise FragmentError("expansion needs a CNF matrix")
    xs: list[Var] = []
    while prefix and prefix[-1][0] == "forall" and prefix[-1][1].arity == 0:
        xs.insert(0, prefix.pop()[1])
    if any(kind == "forall" for kind, _ in prefix):
        raise FragmentError("expansion leaf must be existential up to the "
                            "universal propositional tail")
    evars = [v for _, v in prefix]
    return evars, xs, clauses


def _atom_value(atom, env: dict):
    """Value of a function-free atom under prop/const bindings; None if some
    variable is unbound."""
    if isinstance(atom, Const):
        return atom.value
    if isinstance(atom, FixedTerm):
        vals = [_atom_value(a, env) for a in atom.args]
        if any(v is None for v in vals):
            return None
        return atom.table.bits[tuple_to_index(vals)]
    if isinstance(atom, Term):
        table = env.get(atom.head)
        if table is None:
            return None
        vals = [_atom_value(a, env) for a in atom.args]
        if any(v is None for v in vals):
            return None
        return table.bits[tuple_to_index(vals)]
    return None


def _expand_literal(lit, fn_index: dict, env: dict):
    """One literal of an expanded clause copy: a y key or a constant."""
    atom = lit.atom
    if isinstance(atom, Term) and atom.head in fn_index:
        vals = []
        for a in atom.args:
            v = _atom_value(a, env)
            if v is None:
                raise FragmentError(
                    f"argument of {atom.head!r} not reducible to a constant; "
                    "simpleness violated or variable unbound"
                )
            vals.append(v)
        return ((fn_index[atom.head], tuple(vals)), lit.positive)
    value = _atom_value(atom, env)
    if value is None:
        raise FragmentError(f"unbound variable in literal {atom!r}")
    return (("const", value), lit.positive)


def universal_expansion(
    phi: Formula,
    interp: Optional[Interpretation] = None,
    budget: ExpansionBudget = DEFAULT_BUDGET,
) -> ExpansionProblem:
    """Materialize the expansion of ``exists f... forall x... matrix``.

    Every existential variable must be a proper function; free variables
    are valued through ``interp``.  Each universal assignment contributes a
    copy of every clause with universal propositions replaced by constants,
    function-free terms folded to their value, and remaining terms replaced
    by their (function, input tuple) proposition.  Horn/Krom shape is
    preserved clause by clause.
    """
    evars, xs, clauses = _leaf_parts(phi)
    for v in evars:
        if v.arity == 0:
            raise FragmentError(
                "universal_expansion requires proper functions only; "
                "loop propositional existentials out first"
            )
    if len(xs) > budget.materialize_universal_cap:
        raise CapExceededError(
            f"{len(xs)} universal propositions exceed the materialization "
            f"cap {budget.materialize_universal_cap}"
        )
    total_y = sum(1 << v.arity for v in evars)
    if total_y > budget.materialize_y_cap:
        raise CapExceededError(f"{total_y} expansion propositions exceed the cap")

    fn_index = {v: i for i, v in enumerate(evars)}
    y_vars = [
        (i, bits)
        for i, v in enumerate(evars)
        for bits in itertools.product((0, 1), repeat=v.arity)
    ]
    base_env = dict(interp) if interp else {}

    out_clauses = []
    provenance = []
    for b in itertools.product((0, 1), repeat=len(xs)):
        env = dict(base_env)
        for var, bit in zip(xs, b):
            env[var] = TruthTable(0, (bit,))
        for idx, clause in enumerate(clauses):
            expanded = tuple(_expand_literal(l, fn_index, env) for l in clause.literals)
            out_clauses.append(expanded)
            provenance.append((idx, b))
    return ExpansionProblem(
        functions=evars,
        y_vars=y_vars,
        clauses=out_clauses,
        provenance=provenance,
        source_clauses=clauses,
    )


# ---------------------------------------------------------------------------
# Implicit clause enumeration (shared by the streaming paths)
# ---------------------------------------------------------------------------


def _clause_projections(clause: Clause, xs: list, fn_index: dict, interp: dict,
                        budget: ExpansionBudget) -> Iterator:
    """Distinct expanded copies of one source clause.

    Copies for different universal assignments coincide unless the
    assignment differs on a variable the clause mentions, so enumerating
    the mentioned variables only yields every distinct copy.
    """
    x_set = set(xs)
    mentioned: list[Var] = []
    seen = set()

    def collect(atom):
        if isinstance(atom, Term):
            if atom.head in x_set and atom.head not in seen:
                seen.add(atom.head)
                mentioned.append(atom.head)
            for a in atom.args:
                collect(a)
        elif isinstance(atom, FixedTerm):
            for a in atom.args:
                collect(a)

    for lit in clause.literals:
        collect(lit.atom)
    mentioned.sort(key=lambda v: xs.index(v))
    if len(mentioned) > budget.stream_clause_vars_cap:
        raise CapExceededError(
            f"clause mentions {len(mentioned)} universal propositions; "
            f"streaming cap is {budget.stream_clause_vars_cap}"
        )
    emitted = set()
    for bits in itertools.product((0, 1), repeat=len(mentioned)):
        env = dict(interp)
        for var, bit in zip(mentioned, bits):
            env[var] = TruthTable(0, (bit,))
        expanded = tuple(_expand_literal(l, fn_index, env) for l in clause.literals)
        if expanded not in emitted:
            emitted.add(expanded)
            yield expanded


def _decide_krom_streaming(evars, xs, clauses, interp, budget) -> bool:
    """Two-literal satisfiability over the implicit expansion.

    Builds only the deduplicated implication edges between occurring
    expansion literals (memory independent of the number of universal
    assignments), then checks components for a complementary pair.
    """
    if len(xs) > budget.stream_universal_cap:
        raise CapExceededError(
            f"{len(xs)} universal propositions exceed the streaming cap "
            f"{budget.stream_universal_cap}"
        )
    fn_index = {v: i for i, v in enumerate(evars)}
    base_env = dict(interp) if interp else {}

    ids: dict = {}

    def literal_id(key, positive: bool) -> int:
        i = ids.get(key)
        if i is None:
            i = len(ids)
            ids[key] = i
        return 2 * i + (0 if positive else 1)

    edges = set()
    for clause in clauses:
        if len(clause.literals) > 2:
            raise FragmentError("non-Krom clause")
        for folded in map(
            _fold_clause,
            _clause_projections(clause, xs, fn_index, base_env, budget),
        ):
            if folded == "true":
                continue
            if folded == "empty":
                return False
            enc = [literal_id(key, positive) for key, positive in folded]
            if len(enc) == 1:
                edges.add((enc[0] ^ 1, enc[0]))
            else:
                a, b = enc
                edges.add((a ^ 1, b))
                edges.add((b ^ 1, a))

    n = 2 * len(ids)
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
    comp_of, _ = tarjan_scc(n, adj)
    return all(comp_of[2 * i] != comp_of[2 * i + 1] for i in range(len(ids)))


def _compile_slots(atom: Term, x_index: dict, base_env: dict):
    """Join plan for one function atom, over integer-encoded facts.

    A fact for an arity-r function is its argument tuple read as an r-bit
    big-endian integer.  The plan records the constant positions as a mask
    and value, and each variable position as (shift, variable bit index).
    """
    arity = atom.head.arity
    const_mask = 0
    const_val = 0
    var_positions = []
    distinct = []
    seen = set()
    for pos, a in enumerate(atom.args):
        shift = arity - 1 - pos
        if isinstance(a, Term) and a.head in x_index:
            vidx = x_index[a.head]
            var_positions.append((shift, vidx))
            if vidx not in seen:
                seen.add(vidx)
                distinct.append(vidx)
            continue
        v = _atom_value(a, base_env)
        if v is None:
            raise FragmentError(f"argument {a!r} not reducible to a constant")
        const_mask |= 1 << shift
        const_val |= v << shift
    return (const_mask, const_val, tuple(var_positions), tuple(distinct))


def _compile_value(atom, x_index: dict, base_env: dict):
    """Closure computing a function-free atom's value from the binding bits."""
    if isinstance(atom, Const):
        v = atom.value
        return lambda bits: v
    if isinstance(atom, Term) and atom.head in x_index:
        i = x_index[atom.head]
        return lambda bits: (bits >> i) & 1
    if isinstance(atom, (Term, FixedTerm)):
        if isinstance(atom, Term):
            table = base_env.get(atom.head)
            if table is None:
                raise FragmentError(f"unbound variable {atom.head!r}")
        else:
            table = atom.table
        if not atom.args:
            v = table.bits[0]
            return lambda bits: v
        getters = [_compile_value(a, x_index, base_env) for a in atom.args]

        def value(bits, table=table, getters=getters):
            idx = 0
            for g in getters:
                idx = (idx << 1) | g(bits)
            return table.bits[idx]

        return value
    raise FragmentError(f"cannot evaluate {atom!r}")


def _plan_key(plan, bits: int) -> int:
    const_mask, const_val, var_positions, _ = plan
    key = const_val
    for shift, vidx in var_positions:
        key |= ((bits >> vidx) & 1) << shift
    return key


def _match_fact(plan, fn_unused, mask: int, bits: int, key: int):
    """Extend (mask, bits) so the plan grounds to the fact key, or None."""
    const_mask, const_val, var_positions, _ = plan
    if key & const_mask != const_val:
        return None
    for shift, vidx in var_positions:
        bit = (key >> shift) & 1
        vbit = 1 << vidx
        if mask & vbit:
            if ((bits >> vidx) & 1) != bit:
                return None
        else:
            mask |= vbit
            bits |= bit << vidx
    return mask, bits


def _match_set(plan, mask: int, bits: int, fact_set):
    """Extensions of (mask, bits) for which the plan's key is in the set;
    2^(new variables) lookups, no scan."""
    _, _, var_positions, distinct = plan
    free = [v for v in distinct if not mask & (1 << v)]
    new_mask = mask
    for v in free:
        new_mask |= 1 << v
    for assignment in range(1 << len(free)):
        nbits = bits
        for i, v in enumerate(free):
            if (assignment >> i) & 1:
                nbits |= 1 << v
        key = _plan_key(plan, nbits)
        if key in fact_set:
            # Repeated variables may force equal bits; recheck via the key.
            yield new_mask, nbits


def _greedy_plan_order(plans: list, start: int):
    """Join order beginning at ``start``, then maximizing bound positions."""
    order = [plans[start]]
    bound = set(plans[start][3])
    remaining = [p for i, p in enumerate(plans) if i != start]
    while remaining:
        best = max(
            remaining,
            key=lambda p: sum(1 for v in p[3] if v in bound) - len(p[3]),
        )
        remaining.remove(best)
        order.append(best)
        bound |= set(best[3])
    return order


class _HornRule:
    __slots__ = ("body", "fns", "orders", "side", "head_fn", "head_plan",
                 "vars_mask", "var_count")

    def __init__(self, body, fns, side, head_fn, head_plan, vars_mask):
        self.body = body
        self.fns = fns
        self.orders = [_greedy_plan_order(body, i) for i in range(len(body))]
        self.side = side
        self.head_fn = head_fn
        self.head_plan = head_plan
        self.vars_mask = vars_mask
        self.var_count = bin(vars_mask).count("1")


def _decide_horn_chaining(evars, xs, clauses, interp, budget) -> bool:
    """Least-model computation over the implicit Horn expansion.

    Ground facts are integer-encoded argument tuples per function.  Definite
    clauses become rules joined semi-naively against the fact set, so only
    derivable facts are ever grounded; goal clauses are checked against the
    final model the same way.  Equivalent to materializing the expansion
    and running unit propagation.
    """
    fn_index = {v: i for i, v in enumerate(evars)}
    x_index = {v: i for i, v in enumerate(xs)}
    base_env = dict(interp) if interp else {}

    rules: list[_HornRule] = []
    for clause in clauses:
        pos_f = []
        body_atoms = []
        side_literals = []
        for lit in clause.literals:
            atom = lit.atom
            if isinstance(atom, Term) and atom.head in fn_index:
                (pos_f if lit.positive else body_atoms).append(atom)
            else:
                side_literals.append(lit)
        if len(pos_f) + sum(1 for l in side_literals if l.positive) > 1:
            raise FragmentError("non-Horn clause")
        head = pos_f[0] if pos_f else None

        vars_mask = 0

        def scan(node):
            nonlocal vars_mask
            if isinstance(node, Term):
                if node.head in x_index:
                    vars_mask |= 1 << x_index[node.head]
                for a in node.args:
                    scan(a)
            elif isinstance(node, FixedTerm):
                for a in node.args:
                    scan(a)

        for atom in body_atoms:
            scan(atom)
        for lit in side_literals:
            scan(lit.atom)
        if head is not None:
            scan(head)
        if bin(vars_mask).count("1") > budget.stream_clause_vars_cap:
            raise CapExceededError(
                "clause mentions more universal propositions than the "
                f"chaining cap {budget.stream_clause_vars_cap}"
            )

        body = [_compile_slots(a, x_index, base_env) for a in body_atoms]
        fns = [fn_index[a.head] for a in body_atoms]
        side = [
            (_compile_value(l.atom, x_index, base_env), l.positive)
            for l in side_literals
        ]
        rules.append(
            _HornRule(
                body=body,
                fns=fns,
                side=side,
                head_fn=fn_index[head.head] if head is not None else None,
                head_plan=(
                    _compile_slots(head, x_index, base_env) if head is not None else None
                ),
                vars_mask=vars_mask,
            )
        )

    facts: list[set] = [set() for _ in evars]
    fact_count = 0

    def side_blocks(rule: _HornRule, bits: int) -> bool:
        """True when no side literal already satisfies the clause."""
        for value, positive in rule.side:
            if (value(bits) == 1) == positive:
                return False
        return True

    def full_groundings(rule: _HornRule, mask: int, bits: int):
        """Enumerate the clause variables left unbound by the body join."""
        free = [i for i in range(len(xs)) if rule.vars_mask & (1 << i) and not mask & (1 << i)]
        for assignment in range(1 << len(free)):
            full = bits
            for i, v in enumerate(free):
                if (assignment >> i) & 1:
                    full |= 1 << v
            if side_blocks(rule, full):
                yield full

    def join(order, mask: int, bits: int):
        """All (mask, bits) making every planned atom a known fact."""
        states = [(mask, bits)]
        for plan, fn in order:
            fact_set = facts[fn]
            if not fact_set:
                return
            states = [
                ext
                for m, b in states
                for ext in _match_set(plan, m, b, fact_set)
            ]
            if not states:
                return
        yield from states

    def ordered_with_fns(rule: _HornRule, pivot: int):
        plans = rule.orders[pivot]
        fn_of = {id(p): f for p, f in zip(rule.body, rule.fns)}
        return [(p, fn_of[id(p)]) for p in plans]

    # Cache (plan, fn) sequences per rule and pivot.
    order_cache = {}

    def rule_order(rule: _HornRule, pivot: int):
        key = (id(rule), pivot)
        got = order_cache.get(key)
        if got is None:
            got = ordered_with_fns(rule, pivot)
            order_cache[key] = got
        return got

    def derive(rule: _HornRule, mask: int, bits: int, delta_out: list) -> None:
        nonlocal fact_count
        fn = rule.head_fn
        for full in full_groundings(rule, mask, bits):
            key = _plan_key(rule.head_plan, full)
            if key not in facts[fn]:
                facts[fn].add(key)
                fact_count += 1
                if fact_count > budget.chain_facts_cap:
                    raise CapExceededError("fact set exceeds the chaining cap")
                delta_out.append((fn, key))

    # Seeding: rules with no body fire unconditionally.
    delta: list = []
    for rule in rules:
        if rule.body:
            continue
        if rule.head_plan is None:
            for _ in full_groundings(rule, 0, 0):
                return False  # a purely side-literal clause is violated
            continue
        derive(rule, 0, 0, delta)

    while delta:
        delta_by_fn: dict = {}
        for fn, key in delta:
            delta_by_fn.setdefault(fn, []).append(key)
        delta = []
        for rule in rules:
            if rule.head_plan is None or not rule.body:
                continue
            for pivot in range(len(rule.body)):
                pivot_plan = rule.body[pivot]
                new_keys = delta_by_fn.get(rule.fns[pivot])
                if not new_keys:
                    continue
                rest = rule_order(rule, pivot)[1:]
                for key in new_keys:
                    start = _match_fact(pivot_plan, None, 0, 0, key)
                    if start is None:
                        continue
                    mask, bits = start
                    for m, b in join(rest, mask, bits):
                        derive(rule, m, b, delta)

    # Goal clauses against the least model.
    for rule in rules:
        if rule.head_plan is not None:
            continue
        if not rule.body:
            continue
        order = rule_order(rule, 0)
        for m, b in join(order, 0, 0):
            for _ in full_groundings(rule, m, b):
                return False
    return True


# ---------------------------------------------------------------------------
# Outer block elimination and the public deciders
# ---------------------------------------------------------------------------


def _split_blocks_for_outer(formula: Formula):
    prefix, matrix = split_prefix(formula)
    clauses = matrix_clauses(matrix)
    if clauses is None:
        raise FragmentError("expansion engines need a CNF matrix")
    blocks = block_structure(formula)
    xs: list[Var] = []
    if blocks and blocks[-1][0] == "forall" and all(v.arity == 0 for v in blocks[-1][1]):
        xs = blocks[-1][1]
        blocks = blocks[:-1]
    if not blocks or blocks[-1][0] != "exists":
        raise FragmentError(
            "prefix must end in an existential block, optionally followed "
            "by universal propositions"
        )
    return blocks, xs, clauses, matrix


def eliminate_outer_blocks(
    formula: Formula,
    budget: ExpansionBudget = DEFAULT_BUDGET,
    interp: Optional[Interpretation] = None,
) -> Iterator[tuple[Interpretation, Formula]]:
    """Enumerate assignments for every block before the final existential
    function block (and for propositional existentials of that block),
    yielding each leaf as (interpretation, residual formula).

    The residual keeps only the proper existential functions and the
    trailing universal propositions; everything enumerated is carried by
    the interpretation.  Tables are enumerated ascending by code.
    """
    blocks, xs, clauses, matrix = _split_blocks_for_outer(formula)
    outer = blocks[:-1]
    last = blocks[-1][1]
    fns = [v for v in last if v.arity >= 1]
    props = [v for v in last if v.arity == 0]
    enum_vars = [v for _, blk in outer for v in blk] + props
    for v in enum_vars:
        if v.arity > budget.outer_arity_cap:
            raise CapExceededError(
                f"outer variable {v!r} exceeds the arity cap {budget.outer_arity_cap}"
            )
    residual = prefix_formula(
        [("exists", v) for v in fns] + [("forall", x) for x in xs], matrix
    )
    base = dict(interp) if interp else {}
    spaces = [all_tables(v.arity) for v in enum_vars]
    for combo in itertools.product(*spaces):
        leaf = dict(base)
        leaf.update(zip(enum_vars, combo))
        yield Interpretation(leaf), residual


def _decide_leaf(evars, xs, clauses, interp, kind, budget, strategy) -> bool:
    fns = [v for v in evars if v.arity >= 1]
    props = [v for v in evars if v.arity == 0]
    base = dict(interp) if interp else {}
    for bits in itertools.product((0, 1), repeat=len(props)):
        env = dict(base)
        for var, bit in zip(props, bits):
            env[var] = TruthTable(0, (bit,))
        if _decide_expansion(fns, xs, clauses, env, kind, budget, strategy):
            return True
    return False


def _decide_expansion(fns, xs, clauses, env, kind, budget, strategy) -> bool:
    use_stream = strategy == "stream"
    if strategy == "auto":
        total_y = sum(1 << v.arity for v in fns)
        use_stream = (
            len(xs) > budget.materialize_universal_cap
            or total_y > budget.materialize_y_cap
        )
    if use_stream:
        if kind == "krom":
            return _decide_krom_streaming(fns, xs, clauses, env, budget)
        return _decide_horn_chaining(fns, xs, clauses, env, budget)
    phi = prefix_formula(
        [("exists", v) for v in fns] + [("forall", x) for x in xs],
        _clauses_formula(clauses),
    )
    problem = universal_expansion(phi, Interpretation(env), budget)
    folded = problem.propositional_clauses()
    if folded is None:
        return False
    if kind == "krom":
        sat, _ = two_sat(folded)
    else:
        sat, _ = horn_sat(folded)
    return sat


def _clauses_formula(clauses) -> Formula:
    from .core import And

    return And(tuple(c.to_formula() for c in clauses))


def _alternating_decide(blocks, xs, clauses, interp, kind, budget, strategy) -> bool:
    if len(blocks) == 1:
        return _decide_leaf(blocks[0][1], xs, clauses, interp, kind, budget, strategy)
    quant, variables = blocks[0]
    for v in variables:
        if v.arity > budget.outer_arity_cap:
            raise CapExceededError(
                f"outer variable {v!r} exceeds the arity cap {budget.outer_arity_cap}"
            )
    spaces = [all_tables(v.arity) for v in variables]
    want = quant == "exists"
    for combo in itertools.product(*spaces):
        env = dict(interp) if interp else {}
        env.update(zip(variables, combo))
        result = _alternating_decide(blocks[1:], xs, clauses, env, kind, budget, strategy)
        if result == want:
            return want
    return not want


def _matrix_kind(profile, prefer: Optional[str] = None) -> str:
    if prefer == "krom" and profile.is_krom:
        return "krom"
    if prefer == "horn" and profile.is_horn:
        return "horn"
    if profile.is_horn:
        return "horn"
    if profile.is_krom:
        return "krom"
    raise FragmentError("matrix is neither Horn nor Krom")


def decide_sigma1_sh(
    formula: Formula,
    interp: Optional[Interpretation] = None,
    budget: ExpansionBudget = DEFAULT_BUDGET,
    strategy: str = "auto",
) -> bool:
    """Truth of a simple Horn formula with one existential block and an
    optional universal propositional tail.  Uniqueness is not required.
    Closed inputs need no interpretation; free variables are read from
    ``interp``."""
    profile = classify(formula)
    if not profile.is_prenex or not profile.is_simple or not profile.is_horn:
        raise FragmentError("decide_sigma1_sh needs a prenex simple Horn formula")
    blocks, xs, clauses, _ = _split_blocks_for_outer(formula)
    if len(blocks) != 1:
        raise FragmentError("decide_sigma1_sh allows a single existential block")
    return _decide_leaf(blocks[0][1], xs, clauses, interp, "horn", budget, strategy)


def decide_sigma1_sk(
    formula: Formula,
    interp: Optional[Interpretation] = None,
    budget: ExpansionBudget = DEFAULT_BUDGET,
    strategy: str = "auto",
) -> bool:
    """Truth of a simple Krom formula with one existential block and an
    optional universal propositional tail.  ``strategy`` is ``auto``,
    ``materialize``, or ``stream``; the streaming path never stores the
    expansion."""
    profile = classify(formula)
    if not profile.is_prenex or not profile.is_simple or not profile.is_krom:
        raise FragmentError("decide_sigma1_sk needs a prenex simple Krom formula")
    blocks, xs, clauses, _ = _split_blocks_for_outer(formula)
    if len(blocks) != 1:
        raise FragmentError("decide_sigma1_sk allows a single existential block")
    return _decide_leaf(blocks[0][1], xs, clauses, interp, "krom", budget, strategy)


def decide_pik_horn_krom(
    formula: Formula,
    interp: Optional[Interpretation] = None,
    budget: ExpansionBudget = DEFAULT_BUDGET,
    strategy: str = "auto",
    prefer: Optional[str] = None,
) -> bool:
    """Truth of a simple Horn/Krom prenex formula whose prefix ends in an
    existential function block plus an optional universal propositional
    tail: outer blocks are eliminated by alternating table enumeration,
    each leaf by expansion and the matching subsolver."""
    profile = classify(formula)
    if not profile.is_prenex or not profile.is_simple:
        raise FragmentError("decide_pik_horn_krom needs a prenex simple formula")
    kind = _matrix_kind(profile, prefer)
    blocks, xs, clauses, _ = _split_blocks_for_outer(formula)
    return _alternating_decide(blocks, xs, clauses, dict(interp) if interp else {},
                               kind, budget, strategy)


def expansion_stats(formula: Formula, interp: Optional[Interpretation] = None,
                    budget: ExpansionBudget = DEFAULT_BUDGET) -> dict:
    """Size report for the CLI: y-variable count, clause copies, verdict."""
    blocks, xs, clauses, _ = _split_blocks_for_outer(formula)
    profile = classify(formula)
    kind = _matrix_kind(profile)
    if len(blocks) != 1:
        verdict = decide_pik_horn_krom(formula, interp, budget)
        return {"engine": "expansion", "verdict": verdict,
                "outer_blocks": len(blocks) - 1, "matrix": kind}
    evars = blocks[0][1]
    fns = [v for v in evars if v.arity >= 1]
    verdict = _decide_leaf(evars, xs, clauses, dict(interp) if interp else {},
                           kind, budget, "auto")
    return {
        "engine": "expansion",
        "verdict": verdict,
        "matrix": kind,
        "universal_propositions": len(xs),
        "expansion_variables": sum(1 << v.arity for v in fns),
        "clause_copies": len(clauses) * (1 << len(xs)),
    }
