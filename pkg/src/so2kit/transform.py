"""Equivalence-preserving rewrites: prenexing, CNF conversion, simpleness
normalization, argument elision, uniqueness rewriting, and the reduction of
an arbitrary CNF matrix to core form under one existential function block.

Every transform T here satisfies equivalent(phi, T(phi)) at oracle scale;
the test suite checks this on seeded corpora.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classify import block_structure, is_unique_formula
from .core import (
    And,
    Clause,
    Const,
    Exists,
    FixedTerm,
    Forall,
    Formula,
    Iff,
    Implies,
    Literal,
    Not,
    Or,
    So2Error,
    Term,
    Var,
    all_names,
    clause_of,
    conj,
    disj,
    free_vars,
    has_quantifier,
    literal_of,
    matrix_clauses,
    prefix_formula,
    rename_bound,
    rename_heads,
    split_prefix,
    subformulas,
)


class TransformError(So2Error):
    """A rewrite's precondition does not hold."""


@dataclass
class FreshNamePool:
    """Fresh variable names `base__k` from a global counter, never colliding
    with the names the pool was seeded with."""

    taken: set = field(default_factory=set)
    _counter: int = 0

    @classmethod
    def for_formula(cls, *formulas: Formula) -> "FreshNamePool":
        taken = set()
        for f in formulas:
            taken |= all_names(f)
        return cls(taken=taken)

    def fresh(self, base: str) -> str:
        while True:
            self._counter += 1
            cand = f"{base}__{self._counter}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand

    def fresh_var(self, base: str, arity: int = 0) -> Var:
        return Var(self.fresh(base), arity)


# ---------------------------------------------------------------------------
# Prenexing
# ---------------------------------------------------------------------------


def to_prenex(formula: Formula) -> Formula:
    """Pull all quantifiers to the front.

    Requires the formula to be closed or to have only propositional free
    variables.  Already-prenex input comes back unchanged.
    """
    for v in free_vars(formula):
        if v.arity != 0:
            raise TransformError(
                "to_prenex requires free variables to be propositional"
            )
    if not has_quantifier(split_prefix(formula)[1]):
        return formula
    renamed = rename_bound(formula)

    def pull(node: Formula) -> tuple[list, Formula]:
        if isinstance(node, (Term, Const, FixedTerm)):
            return [], node
        if isinstance(node, Exists):
            p, m = pull(node.body)
            return [("exists", node.var)] + p, m
        if isinstance(node, Forall):
            p, m = pull(node.body)
            return [("forall", node.var)] + p, m
        if isinstance(node, Not):
            p, m = pull(node.body)
            flipped = [("forall" if k == "exists" else "exists", v) for k, v in p]
            return flipped, Not(m)
        if isinstance(node, (And, Or)):
            if not has_quantifier(node):
                return [], node
            prefix: list = []
            matrices = []
            for item in node.items:
                p, m = pull(item)
                prefix.extend(p)
                matrices.append(m)
            joined = And(tuple(matrices)) if isinstance(node, And) else Or(tuple(matrices))
            return prefix, joined
        if isinstance(node, Implies):
            if not has_quantifier(node):
                return [], node
            return pull(Or((Not(node.lhs), node.rhs)))
        if isinstance(node, Iff):
            if not has_quantifier(node):
                return [], node
            # Duplicated sides need fresh binders to stay globally distinct.
            forward = Or((Not(node.lhs), node.rhs))
            backward = rename_bound_against(Or((Not(node.rhs), node.lhs)), renamed)
            return pull(And((forward, backward)))
        raise So2Error(f"unknown node {node!r}")

    prefix, matrix = pull(renamed)
    return prefix_formula(prefix, matrix)


def rename_bound_against(formula: Formula, context: Formula) -> Formula:
    """Rename every bound variable of ``formula`` away from all names used
    in ``context`` (and in the formula itself)."""
    pool = FreshNamePool.for_formula(formula, context)
    prefix_vars = [n for n in subformulas(formula) if isinstance(n, (Exists, Forall))]
    mapping = {}
    for node in prefix_vars:
        if node.var not in mapping:
            mapping[node.var] = pool.fresh_var(node.var.name, node.var.arity)
    return rename_heads(formula, mapping)


# ---------------------------------------------------------------------------
# CNF conversion
# ---------------------------------------------------------------------------


def _is_literal(node: Formula) -> bool:
    return literal_of(node) is not None


def _nnf(node: Formula, positive: bool) -> Formula:
    if _is_literal(node):
        lit = literal_of(node)
        if not positive:
            lit = lit.negated()
        return lit.to_formula()
    if isinstance(node, Not):
        return _nnf(node.body, not positive)
    if isinstance(node, And):
        items = tuple(_nnf(i, positive) for i in node.items)
        return And(items) if positive else Or(items)
    if isinstance(node, Or):
        items = tuple(_nnf(i, positive) for i in node.items)
        return Or(items) if positive else And(items)
    if isinstance(node, Implies):
        return _nnf(Or((Not(node.lhs), node.rhs)), positive)
    if isinstance(node, Iff):
        a, b = node.lhs, node.rhs
        if positive:
            return And((_nnf(Or((Not(a), b)), True), _nnf(Or((Not(b), a)), True)))
        return And((_nnf(Or((a, b)), True), _nnf(Or((Not(a), Not(b))), True)))
    raise TransformError(f"cannot normalize {type(node).__name__} inside a matrix")


def _clausify(matrix: Formula, pool: FreshNamePool) -> tuple[list[Clause], list[Var]]:
    """CNF clauses for an NNF matrix; auxiliaries only for non-clausal parts."""
    aux_vars: list[Var] = []
    clauses: list[Clause] = []

    def handle_conjunct(node: Formula) -> None:
        if isinstance(node, And):
            for item in node.items:
                handle_conjunct(item)
            return
        clauses.append(make_clause(node))

    def make_clause(node: Formula) -> Clause:
        direct = clause_of(node)
        if direct is not None:
            return direct
        if not isinstance(node, Or):
            # A bare conjunction under a clause position: definitional split.
            node = Or((node,))
        lits: list[Literal] = []
        stack = list(reversed(node.items))
        while stack:
            item = stack.pop()
            if isinstance(item, Or):
                stack.extend(reversed(item.items))
                continue
            lit = literal_of(item)
            if lit is not None:
                lits.append(lit)
                continue
            # item is an And: one fresh proposition, implication-only definition.
            z = pool.fresh_var("z")
            aux_vars.append(z)
            lits.append(Literal(Term(z), True))
            assert isinstance(item, And)
            for part in item.items:
                handle_implication(z, part)
        return Clause(tuple(lits))

    def handle_implication(z: Var, part: Formula) -> None:
        # clauses for (~z | part); part is NNF.
        guard = Literal(Term(z), False)
        direct = clause_of(part)
        if direct is not None:
            clauses.append(Clause((guard,) + direct.literals))
            return
        if isinstance(part, And):
            for sub in part.items:
                handle_implication(z, sub)
            return
        inner = make_clause(part)
        clauses.append(Clause((guard,) + inner.literals))

    handle_conjunct(matrix)
    return clauses, aux_vars


def to_cnf(formula: Formula) -> Formula:
    """Convert a prenex formula to an equivalent prenex CNF formula.

    Plain implications and biconditionals over literals expand directly;
    other non-clausal structure gets fresh existential propositions.  When
    the final quantifier block is universal, the auxiliaries become
    functions of that block's variables so the prefix stays prenex.
    """
    prefix, matrix = split_prefix(formula)
    if has_quantifier(matrix):
        raise TransformError("to_cnf requires a prenex formula")
    if matrix_clauses(matrix) is not None:
        return formula
    pool = FreshNamePool.for_formula(formula)
    nnf = _nnf(matrix, True)
    clauses, aux = _clausify(nnf, pool)
    new_matrix = conj(c.to_formula() for c in clauses)
    if not aux:
        return prefix_formula(prefix, new_matrix)

    trailing_universal: list[Var] = []
    idx = len(prefix)
    while idx > 0 and prefix[idx - 1][0] == "forall" and prefix[idx - 1][1].arity == 0:
        trailing_universal.insert(0, prefix[idx - 1][1])
        idx -= 1

    if not trailing_universal:
        new_prefix = prefix + [("exists", z) for z in aux]
        return prefix_formula(new_prefix, new_matrix)

    # Lift each auxiliary to a function of the trailing universal block.
    arity = len(trailing_universal)
    args = tuple(Term(v) for v in trailing_universal)
    mapping = {z: Var(z.name, arity) for z in aux}

    def lift(leaf):
        if isinstance(leaf, Term) and leaf.head in mapping:
            return Term(mapping[leaf.head], args)
        return leaf

    from .core import map_atoms

    lifted = map_atoms(new_matrix, lift)
    new_prefix = (
        prefix[:idx]
        + [("exists", mapping[z]) for z in aux]
        + prefix[idx:]
    )
    return prefix_formula(new_prefix, lifted)


# ---------------------------------------------------------------------------
# Simpleness
# ---------------------------------------------------------------------------


def make_simple(formula: Formula) -> Formula:
    """Flatten nested proper-function terms with fresh existential
    propositions defined by biconditional clauses.

    The defining conjuncts are emitted as the two clauses (~y | t) and
    (y | ~t), so Horn, Krom, core, and uniqueness survive the rewrite.
    Output propositions are appended after the existing prefix.
    """
    prefix, matrix = split_prefix(formula)
    if has_quantifier(matrix):
        raise TransformError("make_simple requires a prenex formula")

    # Nested proper terms in first-occurrence order, innermost first.
    order: list[Term] = []
    seen: set[Term] = set()

    def visit(term: Term, nested: bool) -> None:
        for arg in term.args:
            if isinstance(arg, Term) and arg.head.arity >= 1:
                visit(arg, True)
        if nested and term not in seen:
            seen.add(term)
            order.append(term)

    for node in subformulas(matrix):
        if isinstance(node, Term) and node.head.arity >= 1:
            visit(node, False)

    if not order:
        return formula

    pool = FreshNamePool.for_formula(formula)
    alias = {t: pool.fresh_var("y") for t in order}

    # Flattened image of each nested term; innermost-first order guarantees
    # the arguments' aliases already exist.
    flat: dict[Term, Term] = {}
    for t in order:
        flat[t] = Term(
            t.head,
            tuple(
                Term(alias[a]) if isinstance(a, Term) and a in alias else a
                for a in t.args
            ),
        )

    def rewrite(node: Formula) -> Formula:
        # Top-down: nested occurrences are matched by their original shape.
        if isinstance(node, Term):
            args = tuple(
                Term(alias[a]) if isinstance(a, Term) and a in alias else a
                for a in node.args
            )
            return Term(node.head, args)
        if isinstance(node, (Const, FixedTerm)):
            return node
        if isinstance(node, Not):
            return Not(rewrite(node.body))
        if isinstance(node, And):
            return And(tuple(rewrite(i) for i in node.items))
        if isinstance(node, Or):
            return Or(tuple(rewrite(i) for i in node.items))
        if isinstance(node, Implies):
            return Implies(rewrite(node.lhs), rewrite(node.rhs))
        if isinstance(node, Iff):
            return Iff(rewrite(node.lhs), rewrite(node.rhs))
        raise So2Error(f"unknown node {node!r}")

    body = rewrite(matrix)
    defs = []
    for t in order:
        y = Term(alias[t])
        defs.append(Or((Not(y), flat[t])))
        defs.append(Or((y, Not(flat[t]))))

    pieces = list(body.items) if isinstance(body, And) else [body]
    new_matrix = And(tuple(pieces + defs))
    new_prefix = prefix + [("exists", alias[t]) for t in order]
    return prefix_formula(new_prefix, new_matrix)


# ---------------------------------------------------------------------------
# Argument elision
# ---------------------------------------------------------------------------


def elide(formula: Formula, f: Var, t: Formula) -> Formula:
    """Remove every argument position of quantified ``f`` whose unique
    argument equals ``t``, replacing ``f`` by a fresh lower-arity variable.

    Sound when the formula has uniqueness and every variable of ``t`` is
    either free in the formula or quantified strictly before ``f``.
    """
    prefix, matrix = split_prefix(formula)
    if has_quantifier(matrix):
        raise TransformError("elide requires a prenex formula")
    if not is_unique_formula(formula):
        raise TransformError("elide requires uniqueness")

    blocks = block_structure(formula)
    position = {}
    for idx, (_, variables) in enumerate(blocks):
        for v in variables:
            position[v] = idx
    if f not in position:
        raise TransformError(f"{f!r} is not quantified in the formula")

    occurrence = None
    for node in subformulas(matrix):
        if isinstance(node, Term) and node.head == f:
            occurrence = node
            break
    if occurrence is None:
        return formula
    positions = [i for i, arg in enumerate(occurrence.args) if arg == t]
    if not positions:
        return formula

    freev = free_vars(formula)
    for v in free_vars(t):
        if v in freev:
            continue
        if v not in position or position[v] >= position[f]:
            raise TransformError(
                f"variable {v!r} of the elided term is not fixed before {f!r}"
            )

    pool = FreshNamePool.for_formula(formula)
    g = pool.fresh_var(f.name, f.arity - len(positions))
    removed = set(positions)

    def rewrite(leaf):
        if isinstance(leaf, Term) and leaf.head == f:
            kept = tuple(a for i, a in enumerate(leaf.args) if i not in removed)
            return Term(g, kept)
        return leaf

    from .core import map_atoms

    new_matrix = map_atoms(matrix, rewrite)
    new_prefix = [(k, g if v == f else v) for k, v in prefix]
    return prefix_formula(new_prefix, new_matrix)


# ---------------------------------------------------------------------------
# Uniqueness
# ---------------------------------------------------------------------------


def _vector_eq(left: list[Formula], right: list[Formula]) -> Formula:
    return conj(Iff(a, b) for a, b in zip(left, right))


def make_unique(formula: Formula) -> Formula:
    """Rewrite so every function variable occurs with one argument tuple.

    Handled prefix patterns: final function block existential with a
    universal propositional tail, or final function block universal with an
    existential propositional tail.  Each offending function h with distinct
    tuples a_1..a_n gets copies h_1..h_n pinned to h by guard constraints
    over fresh propositional vectors.
    """
    prefix, matrix = split_prefix(formula)
    if has_quantifier(matrix):
        raise TransformError("make_unique requires a prenex formula")
    if is_unique_formula(formula):
        return formula

    blocks = block_structure(formula)
    last_kind, last_vars = blocks[-1]
    if all(v.arity == 0 for v in last_vars) and len(blocks) >= 2:
        tail_kind = last_kind
        fn_kind = blocks[-2][0]
    else:
        # No propositional tail: treat it as empty with the opposite kind.
        fn_kind = last_kind
        tail_kind = "forall" if last_kind == "exists" else "exists"
    if fn_kind == tail_kind:
        raise TransformError("final two blocks must alternate")
    if fn_kind not in ("exists", "forall"):
        raise TransformError("unsupported prefix pattern")

    pool = FreshNamePool.for_formula(formula)

    while True:
        tuples: dict[Var, list[tuple]] = {}
        for node in subformulas(matrix):
            if isinstance(node, Term) and node.head.arity >= 1:
                lst = tuples.setdefault(node.head, [])
                if node.args not in lst:
                    lst.append(node.args)
        offender = next((h for h, ts in tuples.items() if len(ts) > 1), None)
        if offender is None:
            break
        arg_tuples = tuples[offender]
        n = len(arg_tuples)
        r = offender.arity
        copies = [pool.fresh_var(offender.name, r) for _ in range(n)]
        zs = [pool.fresh_var("z") for _ in range(r)]
        zis = [[pool.fresh_var("z") for _ in range(r)] for _ in range(n)]
        z_terms = [Term(v) for v in zs]
        zi_terms = [[Term(v) for v in row] for row in zis]
        tuple_index = {args: i for i, args in enumerate(arg_tuples)}

        def rewrite(node: Formula) -> Formula:
            # Top-down so a nested occurrence inside an argument tuple is
            # matched by its original shape before being replaced.
            if isinstance(node, Term):
                if node.head == offender:
                    i = tuple_index[node.args]
                    return Term(copies[i], tuple(zi_terms[i]))
                return Term(node.head, tuple(rewrite(a) for a in node.args))
            if isinstance(node, (Const, FixedTerm)):
                return node
            if isinstance(node, Not):
                return Not(rewrite(node.body))
            if isinstance(node, And):
                return And(tuple(rewrite(i) for i in node.items))
            if isinstance(node, Or):
                return Or(tuple(rewrite(i) for i in node.items))
            if isinstance(node, Implies):
                return Implies(rewrite(node.lhs), rewrite(node.rhs))
            if isinstance(node, Iff):
                return Iff(rewrite(node.lhs), rewrite(node.rhs))
            raise So2Error(f"unknown node {node!r}")

        rewritten = rewrite(matrix)
        h_z = Term(offender, tuple(z_terms))
        agree = [
            Implies(
                _vector_eq(z_terms, zi_terms[i]),
                Iff(h_z, Term(copies[i], tuple(zi_terms[i]))),
            )
            for i in range(n)
        ]
        # Pinned argument tuples are rewritten too: a nested occurrence of
        # the offender inside a tuple must refer to its own copy.
        pin = conj(
            _vector_eq(zi_terms[i], [rewrite(a) for a in arg_tuples[i]])
            for i in range(n)
        )
        if fn_kind == "exists":
            # Copies are chosen to equal h; the universal tail pins them.
            matrix = And(tuple(agree + [Implies(pin, rewritten)]))
            fn_extra = [("exists", c) for c in copies]
            tail_extra = [("forall", v) for v in zs] + [
                ("forall", v) for row in zis for v in row
            ]
        else:
            # Adversarial copies: either some copy disagrees with h
            # somewhere, or all tuples are pinned and the matrix must hold.
            disagree = disj(
                And((_vector_eq(z_terms, zi_terms[i]),
                     Not(Iff(h_z, Term(copies[i], tuple(zi_terms[i]))))))
                for i in range(n)
            )
            matrix = Or((disagree, And((pin, rewritten))))
            fn_extra = [("forall", c) for c in copies]
            tail_extra = [("exists", v) for v in zs] + [
                ("exists", v) for row in zis for v in row
            ]

        # Splice the new quantifiers into the final two blocks.
        tail: list = []
        rest = list(prefix)
        while rest and rest[-1][0] == tail_kind and rest[-1][1].arity == 0:
            tail.insert(0, rest.pop())
        prefix = rest + fn_extra + tail + tail_extra

    return prefix_formula(prefix, matrix)


# ---------------------------------------------------------------------------
# Core-form reduction
# ---------------------------------------------------------------------------


def to_core(theta: Formula) -> Formula:
    """Rewrite a quantifier-free CNF into an equivalent formula whose matrix
    is core (Horn and Krom), using one existential block of disjunction
    functions, per-literal proxies as functions of a universal pivot.

    Free variables of ``theta`` stay free; if ``theta`` is unique, the
    output is unique.
    """
    if has_quantifier(theta):
        raise TransformError("to_core takes a quantifier-free formula")
    raw = matrix_clauses(theta)
    if raw is None:
        raise TransformError("to_core requires a CNF matrix")

    pool = FreshNamePool.for_formula(theta)

    # Fold constant literals so every remaining literal is a proper atom.
    clauses: list[list[Literal]] = []
    empty = False
    for clause in raw:
        lits: list[Literal] = []
        satisfied = False
        for lit in clause.literals:
            if isinstance(lit.atom, Const):
                value = lit.atom.value if lit.positive else 1 - lit.atom.value
                if value == 1:
                    satisfied = True
                    break
                continue
            lits.append(lit)
        if satisfied:
            continue
        if not lits:
            empty = True
            break
        clauses.append(lits)

    b = pool.fresh_var("b")
    b_term = Term(b)
    if empty:
        # Falsum: a single unit clause on the universal pivot.
        h = pool.fresh_var("h", 1)
        return Exists(h, Forall(b, b_term))
    if not clauses:
        # Verum: a tautological core clause on the pivot.
        h = pool.fresh_var("h", 1)
        return Exists(h, Forall(b, Or((Not(b_term), b_term))))

    atoms: list[Formula] = []
    for lits in clauses:
        for lit in lits:
            if lit.atom not in atoms:
                atoms.append(lit.atom)

    proxy: dict[tuple, Term] = {}
    for atom in atoms:
        p_pos = pool.fresh_var("p", 1)
        p_neg = pool.fresh_var("p", 1)
        proxy[(atom, True)] = Term(p_pos, (b_term,))
        proxy[(atom, False)] = Term(p_neg, (b_term,))

    out: list[Formula] = []
    h_vars = []
    for lits in clauses:
        h = pool.fresh_var("h", len(lits))
        h_vars.append(h)
        h_app = Term(h, tuple(proxy[(l.atom, l.positive)] for l in lits))
        out.append(Or((Not(b_term), h_app)))
        out.append(Or((Not(h_app), b_term)))
        for l in lits:
            out.append(Or((Not(proxy[(l.atom, l.positive)]), h_app)))

    g_vars = []
    for atom in atoms:
        g = pool.fresh_var("g", 2)
        g_vars.append(g)
        p_t = proxy[(atom, True)]
        p_n = proxy[(atom, False)]
        g_app = Term(g, (p_t, p_n))
        out.extend(
            [
                Or((Not(b_term), g_app)),
                Or((Not(g_app), b_term)),
                Or((Not(p_t), g_app)),
                Or((Not(p_n), g_app)),
                Or((Not(p_t), Not(p_n))),
                Or((Not(p_t), atom)),
                Or((Not(p_n), Not(atom))),
            ]
        )

    prefix = (
        [("exists", h) for h in h_vars]
        + [("exists", g) for g in g_vars]
        + [("exists", p.head) for p in proxy.values()]
        + [("forall", b)]
    )
    return prefix_formula(prefix, And(tuple(out)))
