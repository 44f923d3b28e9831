"""Formula AST, truth tables, interpretations, and brute-force semantics.

Second-order Boolean formulas extend QBF with quantification over Boolean
functions.  This module holds the immutable syntax tree, the table-based
function values, and an exhaustive evaluator that every specialized engine
in this package is checked against.

All values are immutable after construction and safe to share across
threads; ``evaluate`` is externally pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Union


class So2Error(Exception):
    """Base class for every error raised by this package."""


class UnboundVariableError(So2Error):
    """A free variable had no assignment in the interpretation."""


class ArityMismatchError(So2Error):
    """A variable was used or assigned with the wrong arity."""


class CapExceededError(So2Error):
    """An enumeration would exceed the configured cap (oracle infeasible)."""


@dataclass(frozen=True)
class EnumerationCaps:
    """Limits for brute-force enumeration.

    ``max_quantifier_arity`` bounds the arity of any quantified variable the
    evaluator will enumerate tables for (arity 4 means 65536 tables).
    """

    max_quantifier_arity: int = 4


DEFAULT_CAPS = EnumerationCaps()

# Hard bound for all_tables(); above this the table space is never enumerable.
_ABSOLUTE_ARITY_LIMIT = 4


# ---------------------------------------------------------------------------
# Variables and truth tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Var:
    """A variable: (name, arity) pairs identify variables uniquely.

    Arity 0 is a propositional variable; arity >= 1 is a proper function
    variable.
    """

    name: str
    arity: int = 0

    def __post_init__(self) -> None:
        if self.arity < 0:
            raise ArityMismatchError(f"negative arity for {self.name}")
        object.__setattr__(self, "_hash", hash((self.name, self.arity)))

    def __eq__(self, other) -> bool:
        return (
            type(other) is Var
            and self.name == other.name
            and self.arity == other.arity
        )

    def __hash__(self) -> int:
        return self._hash

    @property
    def is_proposition(self) -> bool:
        return self.arity == 0

    def __repr__(self) -> str:
        return f"{self.name}/{self.arity}" if self.arity else self.name


def tuple_to_index(args: Iterable[int]) -> int:
    """Map an argument tuple to a table index, first argument most significant."""
    idx = 0
    for a in args:
        idx = (idx << 1) | (1 if a else 0)
    return idx


def index_to_tuple(index: int, arity: int) -> tuple[int, ...]:
    """Inverse of :func:`tuple_to_index` for tuples of the given length."""
    return tuple((index >> (arity - 1 - i)) & 1 for i in range(arity))


@dataclass(frozen=True)
class TruthTable:
    """An arity-n Boolean function as a 2^n-entry bit table.

    ``bits[tuple_to_index(args)]`` is the function value on ``args``.  The
    integer code of a table is ``sum(bits[i] << i)``; tables are enumerated
    in ascending code order.
    """

    arity: int
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) != 1 << self.arity:
            raise ArityMismatchError(
                f"table of arity {self.arity} needs {1 << self.arity} entries, "
                f"got {len(self.bits)}"
            )
        if any(b not in (0, 1) for b in self.bits):
            raise So2Error("table entries must be 0 or 1")

    def __call__(self, args: Iterable[int]) -> int:
        return self.bits[tuple_to_index(args)]

    @property
    def value(self) -> int:
        """The single entry of an arity-0 table."""
        if self.arity != 0:
            raise ArityMismatchError("value is only defined for arity-0 tables")
        return self.bits[0]

    def as_int(self) -> int:
        return sum(b << i for i, b in enumerate(self.bits))

    @classmethod
    def from_int(cls, arity: int, code: int) -> "TruthTable":
        return cls(arity, tuple((code >> i) & 1 for i in range(1 << arity)))

    @classmethod
    def constant(cls, arity: int, value: int) -> "TruthTable":
        return cls(arity, tuple([1 if value else 0] * (1 << arity)))

    @classmethod
    def from_function(cls, arity: int, fn) -> "TruthTable":
        return cls(
            arity,
            tuple(fn(*index_to_tuple(i, arity)) for i in range(1 << arity)),
        )

    @classmethod
    def identity(cls) -> "TruthTable":
        return cls(1, (0, 1))

    @classmethod
    def negation(cls) -> "TruthTable":
        return cls(1, (1, 0))

    @classmethod
    def nand(cls) -> "TruthTable":
        return cls.from_function(2, lambda a, b: 1 - (a & b))

    @classmethod
    def projection(cls, arity: int, position: int) -> "TruthTable":
        """The function returning its ``position``-th argument (0-based)."""
        return cls.from_function(arity, lambda *a: a[position])


_TABLE_CACHE: dict[int, list["TruthTable"]] = {}
FALSE_TABLE = TruthTable(0, (0,))
TRUE_TABLE = TruthTable(0, (1,))


def all_tables(arity: int) -> list[TruthTable]:
    """All truth tables of the given arity, ascending by integer code."""
    if arity > _ABSOLUTE_ARITY_LIMIT:
        raise CapExceededError(
            f"cannot enumerate 2^{1 << arity} tables of arity {arity}"
        )
    cached = _TABLE_CACHE.get(arity)
    if cached is None:
        cached = [TruthTable.from_int(arity, c) for c in range(1 << (1 << arity))]
        _TABLE_CACHE[arity] = cached
    return cached


class Interpretation(Mapping):
    """A finite map from variables to truth tables of matching arity.

    Looking up an unassigned variable raises :class:`UnboundVariableError`;
    there is no implicit default.
    """

    __slots__ = ("_map",)

    def __init__(self, assignments: Optional[Mapping[Var, TruthTable]] = None):
        m = {}
        if assignments:
            for var, table in assignments.items():
                if table.arity != var.arity:
                    raise ArityMismatchError(
                        f"table of arity {table.arity} assigned to {var!r}"
                    )
                m[var] = table
        object.__setattr__(self, "_map", m)

    def __getitem__(self, var: Var) -> TruthTable:
        try:
            return self._map[var]
        except KeyError:
            raise UnboundVariableError(f"no assignment for {var!r}") from None

    def __iter__(self):
        return iter(self._map)

    def __len__(self):
        return len(self._map)

    def bind(self, var: Var, table: TruthTable) -> "Interpretation":
        m = dict(self._map)
        m[var] = table
        return Interpretation(m)

    def __repr__(self):
        parts = ", ".join(f"{v!r}: {t.bits}" for v, t in self._map.items())
        return f"Interpretation({{{parts}}})"


EMPTY_INTERPRETATION = Interpretation()


# ---------------------------------------------------------------------------
# Formula AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    """A function application; arity-0 heads are bare propositions."""

    head: Var
    args: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.head.arity:
            raise ArityMismatchError(
                f"{self.head!r} applied to {len(self.args)} arguments"
            )


@dataclass(frozen=True)
class Const:
    value: int

    def __post_init__(self) -> None:
        if self.value not in (0, 1):
            raise So2Error("constants are 0 or 1")


@dataclass(frozen=True)
class FixedTerm:
    """A term whose head is a concrete table instead of a variable.

    Produced by :func:`instantiate` for occurrences whose arguments are not
    constant; never produced by the parser and not printable.
    """

    table: TruthTable
    args: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.table.arity:
            raise ArityMismatchError("fixed table applied with wrong arity")


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    items: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class Or:
    items: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"


Formula = Union[Term, Const, FixedTerm, Not, And, Or, Implies, Iff, Exists, Forall]

TRUE = Const(1)
FALSE = Const(0)


def prop(name: str) -> Term:
    """Shorthand for a propositional atom."""
    return Term(Var(name, 0), ())


def conj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(items)


def disj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(items)


def neg(formula: Formula) -> Formula:
    """Negation collapsing a double negative."""
    if isinstance(formula, Not):
        return formula.body
    return Not(formula)


# ---------------------------------------------------------------------------
# Literals, clauses, and structural CNF inspection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    """A possibly negated atom.  Negation is an involution."""

    atom: Formula  # Term | Const | FixedTerm
    positive: bool = True

    def negated(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def to_formula(self) -> Formula:
        return self.atom if self.positive else Not(self.atom)


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals; the empty clause denotes falsum."""

    literals: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "literals", tuple(self.literals))

    @property
    def width(self) -> int:
        return len(self.literals)

    @property
    def positive_count(self) -> int:
        return sum(1 for lit in self.literals if lit.positive)

    def to_formula(self) -> Formula:
        return disj(lit.to_formula() for lit in self.literals)


_ATOM_TYPES = (Term, Const, FixedTerm)


def literal_of(formula: Formula) -> Optional[Literal]:
    """View a formula as a literal, identifying doubly negated literals."""
    positive = True
    node = formula
    while isinstance(node, Not):
        positive = not positive
        node = node.body
    if isinstance(node, _ATOM_TYPES):
        return Literal(node, positive)
    return None


def clause_of(formula: Formula) -> Optional[Clause]:
    """View a formula as a clause (a literal or a disjunction of literals)."""
    lit = literal_of(formula)
    if lit is not None:
        return Clause((lit,))
    if not isinstance(formula, Or):
        return None
    lits = []
    stack = list(reversed(formula.items))
    while stack:
        item = stack.pop()
        if isinstance(item, Or):
            stack.extend(reversed(item.items))
            continue
        lit = literal_of(item)
        if lit is None:
            return None
        lits.append(lit)
    return Clause(tuple(lits))


def matrix_clauses(formula: Formula) -> Optional[list[Clause]]:
    """The clause list of a CNF formula, or None if it is not structural CNF."""
    clauses: list[Clause] = []
    stack = [formula]
    while stack:
        node = stack.pop()
        if isinstance(node, And):
            stack.extend(reversed(node.items))
            continue
        clause = clause_of(node)
        if clause is None:
            return None
        clauses.append(clause)
    return clauses


# ---------------------------------------------------------------------------
# Structure helpers
# ---------------------------------------------------------------------------


def split_prefix(formula: Formula) -> tuple[list[tuple[str, Var]], Formula]:
    """Peel the leading quantifier prefix; returns ([(kind, var), ...], matrix)."""
    prefix = []
    node = formula
    while isinstance(node, (Exists, Forall)):
        prefix.append(("exists" if isinstance(node, Exists) else "forall", node.var))
        node = node.body
    return prefix, node


def prefix_formula(prefix: Iterable[tuple[str, Var]], matrix: Formula) -> Formula:
    node = matrix
    for kind, var in reversed(list(prefix)):
        node = Exists(var, node) if kind == "exists" else Forall(var, node)
    return node


def subformulas(formula: Formula) -> Iterator[Formula]:
    """All nodes of the tree, preorder."""
    stack = [formula]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, (Term, FixedTerm)):
            stack.extend(node.args)
        elif isinstance(node, Not):
            stack.append(node.body)
        elif isinstance(node, (And, Or)):
            stack.extend(node.items)
        elif isinstance(node, (Implies, Iff)):
            stack.append(node.lhs)
            stack.append(node.rhs)
        elif isinstance(node, (Exists, Forall)):
            stack.append(node.body)


def has_quantifier(formula: Formula) -> bool:
    return any(isinstance(n, (Exists, Forall)) for n in subformulas(formula))


def is_prenex(formula: Formula) -> bool:
    _, matrix = split_prefix(formula)
    return not has_quantifier(matrix)


def free_vars(formula: Formula) -> frozenset:
    """Free variables; iterative so deep quantifier prefixes are fine."""
    out: set[Var] = set()
    bound: dict[Var, int] = {}
    stack: list = [("visit", formula)]
    while stack:
        action, payload = stack.pop()
        if action == "leave":
            count = bound[payload] - 1
            if count:
                bound[payload] = count
            else:
                del bound[payload]
            continue
        node = payload
        if isinstance(node, Term):
            if node.head not in bound:
                out.add(node.head)
            stack.extend(("visit", a) for a in node.args)
        elif isinstance(node, FixedTerm):
            stack.extend(("visit", a) for a in node.args)
        elif isinstance(node, Not):
            stack.append(("visit", node.body))
        elif isinstance(node, (And, Or)):
            stack.extend(("visit", i) for i in node.items)
        elif isinstance(node, (Implies, Iff)):
            stack.append(("visit", node.lhs))
            stack.append(("visit", node.rhs))
        elif isinstance(node, (Exists, Forall)):
            bound[node.var] = bound.get(node.var, 0) + 1
            stack.append(("leave", node.var))
            stack.append(("visit", node.body))
    return frozenset(out)


def all_names(formula: Formula) -> set[str]:
    """Every variable name occurring in the formula, bound or free."""
    names = set()
    for node in subformulas(formula):
        if isinstance(node, Term):
            names.add(node.head.name)
        elif isinstance(node, (Exists, Forall)):
            names.add(node.var.name)
    return names


def map_atoms(formula: Formula, fn) -> Formula:
    """Rebuild the tree, replacing each Term/Const/FixedTerm leaf by fn(leaf).

    ``fn`` receives the leaf after its arguments were already mapped.
    """
    if isinstance(formula, Term):
        mapped = Term(formula.head, tuple(map_atoms(a, fn) for a in formula.args))
        return fn(mapped)
    if isinstance(formula, FixedTerm):
        mapped = FixedTerm(formula.table, tuple(map_atoms(a, fn) for a in formula.args))
        return fn(mapped)
    if isinstance(formula, Const):
        return fn(formula)
    if isinstance(formula, Not):
        return Not(map_atoms(formula.body, fn))
    if isinstance(formula, And):
        return And(tuple(map_atoms(i, fn) for i in formula.items))
    if isinstance(formula, Or):
        return Or(tuple(map_atoms(i, fn) for i in formula.items))
    if isinstance(formula, Implies):
        return Implies(map_atoms(formula.lhs, fn), map_atoms(formula.rhs, fn))
    if isinstance(formula, Iff):
        return Iff(map_atoms(formula.lhs, fn), map_atoms(formula.rhs, fn))
    if isinstance(formula, Exists):
        return Exists(formula.var, map_atoms(formula.body, fn))
    if isinstance(formula, Forall):
        return Forall(formula.var, map_atoms(formula.body, fn))
    raise So2Error(f"unknown node {formula!r}")


def subst_prop(formula: Formula, var: Var, value: Formula) -> Formula:
    """Replace free occurrences of a propositional variable by a formula."""
    if var.arity != 0:
        raise ArityMismatchError("subst_prop only substitutes propositions")

    def fn(leaf):
        if isinstance(leaf, Term) and leaf.head == var:
            return value
        return leaf

    # Bound occurrences cannot exist when binders are globally distinct.
    return map_atoms(formula, fn)


def rename_heads(formula: Formula, mapping: Mapping[Var, Var]) -> Formula:
    """Rename variables at term heads and binders (arities must match)."""

    def go(node: Formula) -> Formula:
        if isinstance(node, Term):
            head = mapping.get(node.head, node.head)
            return Term(head, tuple(go(a) for a in node.args))
        if isinstance(node, FixedTerm):
            return FixedTerm(node.table, tuple(go(a) for a in node.args))
        if isinstance(node, Const):
            return node
        if isinstance(node, Not):
            return Not(go(node.body))
        if isinstance(node, And):
            return And(tuple(go(i) for i in node.items))
        if isinstance(node, Or):
            return Or(tuple(go(i) for i in node.items))
        if isinstance(node, Implies):
            return Implies(go(node.lhs), go(node.rhs))
        if isinstance(node, Iff):
            return Iff(go(node.lhs), go(node.rhs))
        if isinstance(node, Exists):
            return Exists(mapping.get(node.var, node.var), go(node.body))
        if isinstance(node, Forall):
            return Forall(mapping.get(node.var, node.var), go(node.body))
        raise So2Error(f"unknown node {node!r}")

    return go(formula)


def rename_bound(formula: Formula) -> Formula:
    """Make bound variable names pairwise distinct and distinct from free names."""
    taken = all_names(formula)
    counter = itertools.count(1)

    def fresh(base: str) -> str:
        while True:
            cand = f"{base}__{next(counter)}"
            if cand not in taken:
                taken.add(cand)
                return cand

    seen: set[str] = {v.name for v in free_vars(formula)}

    def go(node: Formula, sub: dict) -> Formula:
        if isinstance(node, Term):
            head = sub.get(node.head, node.head)
            return Term(head, tuple(go(a, sub) for a in node.args))
        if isinstance(node, FixedTerm):
            return FixedTerm(node.table, tuple(go(a, sub) for a in node.args))
        if isinstance(node, Const):
            return node
        if isinstance(node, Not):
            return Not(go(node.body, sub))
        if isinstance(node, And):
            return And(tuple(go(i, sub) for i in node.items))
        if isinstance(node, Or):
            return Or(tuple(go(i, sub) for i in node.items))
        if isinstance(node, Implies):
            return Implies(go(node.lhs, sub), go(node.rhs, sub))
        if isinstance(node, Iff):
            return Iff(go(node.lhs, sub), go(node.rhs, sub))
        if isinstance(node, (Exists, Forall)):
            var = node.var
            if var.name in seen:
                new = Var(fresh(var.name), var.arity)
                sub = dict(sub)
                sub[var] = new
                var = new
            seen.add(var.name)
            body = go(node.body, sub)
            return Exists(var, body) if isinstance(node, Exists) else Forall(var, body)
        raise So2Error(f"unknown node {node!r}")

    return go(formula, {})


def alpha_equivalent(left: Formula, right: Formula) -> bool:
    """Structural equality modulo renaming of bound variables."""

    def go(a: Formula, b: Formula, env: dict) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, Term):
            head_a = env.get(a.head, a.head)
            if head_a != b.head or len(a.args) != len(b.args):
                return False
            return all(go(x, y, env) for x, y in zip(a.args, b.args))
        if isinstance(a, FixedTerm):
            return a.table == b.table and all(
                go(x, y, env) for x, y in zip(a.args, b.args)
            )
        if isinstance(a, Const):
            return a.value == b.value
        if isinstance(a, Not):
            return go(a.body, b.body, env)
        if isinstance(a, (And, Or)):
            return len(a.items) == len(b.items) and all(
                go(x, y, env) for x, y in zip(a.items, b.items)
            )
        if isinstance(a, (Implies, Iff)):
            return go(a.lhs, b.lhs, env) and go(a.rhs, b.rhs, env)
        if isinstance(a, (Exists, Forall)):
            if a.var.arity != b.var.arity:
                return False
            env = dict(env)
            env[a.var] = b.var
            return go(a.body, b.body, env)
        return False

    return go(left, right, {})


# ---------------------------------------------------------------------------
# Desugaring to the {term, and, not, exists} kernel
# ---------------------------------------------------------------------------


def desugar(formula: Formula) -> Formula:
    """Rewrite into the kernel connectives: terms, conjunction, negation,
    existential quantification.

    Constants are eliminated by wrapping the result in two fresh existential
    propositions forced to 1 and 0 by unit conjuncts.
    """

    def go(node: Formula) -> Formula:
        if isinstance(node, (Term, Const, FixedTerm)):
            return (
                node
                if isinstance(node, Const)
                else type(node)(
                    node.head if isinstance(node, Term) else node.table,
                    tuple(go(a) for a in node.args),
                )
            )
        if isinstance(node, Not):
            return Not(go(node.body))
        if isinstance(node, And):
            return And(tuple(go(i) for i in node.items))
        if isinstance(node, Or):
            return Not(And(tuple(Not(go(i)) for i in node.items)))
        if isinstance(node, Implies):
            return Not(And((go(node.lhs), Not(go(node.rhs)))))
        if isinstance(node, Iff):
            a, b = go(node.lhs), go(node.rhs)
            return And((Not(And((a, Not(b)))), Not(And((b, Not(a))))))
        if isinstance(node, Exists):
            return Exists(node.var, go(node.body))
        if isinstance(node, Forall):
            return Not(Exists(node.var, Not(go(node.body))))
        raise So2Error(f"unknown node {node!r}")

    kernel = go(formula)
    if not any(isinstance(n, Const) for n in subformulas(kernel)):
        return kernel

    taken = all_names(kernel)
    counter = itertools.count(1)

    def fresh(base: str) -> Var:
        cand = base
        while cand in taken:
            cand = f"{base}__{next(counter)}"
        taken.add(cand)
        return Var(cand, 0)

    one, zero = fresh("one"), fresh("zero")

    def drop_const(leaf):
        if isinstance(leaf, Const):
            return Term(one if leaf.value else zero, ())
        return leaf

    body = map_atoms(kernel, drop_const)
    return Exists(one, Exists(zero, And((Term(one), Not(Term(zero)), body))))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_PROP_TABLES = (FALSE_TABLE, TRUE_TABLE)


def _peval(node: Formula, env: dict) -> Optional[int]:
    """Three-valued evaluation; None when the value is not yet determined.

    Variables absent from ``env`` are unknown, which makes this sound under
    any later assignment, including under quantifiers whose variable is not
    yet enumerated.
    """
    t = type(node)
    if t is Term:
        table = env.get(node.head)
        if table is None:
            return None
        idx = 0
        for a in node.args:
            v = _peval(a, env)
            if v is None:
                return None
            idx = (idx << 1) | v
        return table.bits[idx]
    if t is Const:
        return node.value
    if t is Not:
        v = _peval(node.body, env)
        return None if v is None else 1 - v
    if t is And:
        unknown = False
        for item in node.items:
            v = _peval(item, env)
            if v == 0:
                return 0
            if v is None:
                unknown = True
        return None if unknown else 1
    if t is Or:
        unknown = False
        for item in node.items:
            v = _peval(item, env)
            if v == 1:
                return 1
            if v is None:
                unknown = True
        return None if unknown else 0
    if t is Implies:
        a = _peval(node.lhs, env)
        if a == 0:
            return 1
        b = _peval(node.rhs, env)
        if b == 1:
            return 1
        if a is None or b is None:
            return None
        return 0
    if t is Iff:
        a = _peval(node.lhs, env)
        if a is None:
            return None
        b = _peval(node.rhs, env)
        if b is None:
            return None
        return 1 if a == b else 0
    if t is FixedTerm:
        idx = 0
        for a in node.args:
            v = _peval(a, env)
            if v is None:
                return None
            idx = (idx << 1) | v
        return node.table.bits[idx]
    if t is Exists or t is Forall:
        # Sound because the quantified variable is simply unknown here.
        return _peval(node.body, env)
    raise So2Error(f"unknown node {node!r}")


def _eval(node: Formula, env: dict, caps: EnumerationCaps) -> int:
    t = type(node)
    if t is Term:
        try:
            table = env[node.head]
        except KeyError:
            raise UnboundVariableError(f"no assignment for {node.head!r}") from None
        idx = 0
        for a in node.args:
            idx = (idx << 1) | _eval(a, env, caps)
        return table.bits[idx]
    if t is Const:
        return node.value
    if t is Not:
        return 1 - _eval(node.body, env, caps)
    if t is And:
        for item in node.items:
            if _eval(item, env, caps) == 0:
                return 0
        return 1
    if t is Or:
        for item in node.items:
            if _eval(item, env, caps) == 1:
                return 1
        return 0
    if t is Implies:
        if _eval(node.lhs, env, caps) == 0:
            return 1
        return _eval(node.rhs, env, caps)
    if t is Iff:
        return 1 if _eval(node.lhs, env, caps) == _eval(node.rhs, env, caps) else 0
    if t is FixedTerm:
        idx = 0
        for a in node.args:
            idx = (idx << 1) | _eval(a, env, caps)
        return node.table.bits[idx]
    if t is Exists or t is Forall:
        var = node.var
        # Short-circuit once assignments can decide the body.  Worth the
        # walk at propositional levels, where forced chains prune whole
        # subtrees; table levels rarely decide early.
        if env and var.arity == 0:
            decided = _peval(node, env)
            if decided is not None:
                return decided
        if var.arity > caps.max_quantifier_arity:
            raise CapExceededError(
                f"quantified arity {var.arity} exceeds cap "
                f"{caps.max_quantifier_arity} (oracle infeasible)"
            )
        tables = _PROP_TABLES if var.arity == 0 else all_tables(var.arity)
        target = 1 if t is Exists else 0
        saved = env.get(var)
        try:
            for table in tables:
                env[var] = table
                if _eval(node.body, env, caps) == target:
                    return target
            return 1 - target
        finally:
            if saved is None:
                env.pop(var, None)
            else:
                env[var] = saved
    raise So2Error(f"unknown node {node!r}")


def evaluate(
    formula: Formula,
    interp: Optional[Mapping[Var, TruthTable]] = None,
    caps: EnumerationCaps = DEFAULT_CAPS,
) -> int:
    """Brute-force valuation of a formula under an interpretation.

    Existential quantifiers range over every truth table of the quantified
    arity (max over 2^(2^n) tables), universals dually.  Enumeration is
    exhaustive, with sound three-valued short-circuiting when the remaining
    matrix is already decided.

    Raises :class:`UnboundVariableError` for unassigned free variables,
    :class:`ArityMismatchError` for bad assignments, and
    :class:`CapExceededError` when a quantified arity is above the cap.
    """
    env: dict = {}
    if interp:
        for var, table in interp.items():
            if table.arity != var.arity:
                raise ArityMismatchError(
                    f"table of arity {table.arity} assigned to {var!r}"
                )
            env[var] = table
    for var in free_vars(formula):
        if var not in env:
            raise UnboundVariableError(f"no assignment for free variable {var!r}")
    return _eval(formula, env, caps)


def equivalent(
    phi: Formula,
    psi: Formula,
    caps: EnumerationCaps = DEFAULT_CAPS,
) -> bool:
    """True iff both formulas evaluate equally under every interpretation of
    the union of their free variables."""
    shared = sorted(free_vars(phi) | free_vars(psi), key=lambda v: (v.name, v.arity))
    for var in shared:
        if var.arity > caps.max_quantifier_arity:
            raise CapExceededError(
                f"free variable {var!r} exceeds arity cap (oracle infeasible)"
            )
    spaces = [all_tables(v.arity) for v in shared]
    for combo in itertools.product(*spaces):
        interp = dict(zip(shared, combo))
        if _eval(phi, dict(interp), caps) != _eval(psi, dict(interp), caps):
            return False
    return True


def instantiate(formula: Formula, var: Var, table: TruthTable) -> Formula:
    """Fix a free variable to a concrete table.

    Occurrences applied to constant arguments fold to the table's value;
    other occurrences become anonymous fixed-table terms.  The variable is
    no longer free in the result.
    """
    if table.arity != var.arity:
        raise ArityMismatchError(
            f"table of arity {table.arity} for variable {var!r}"
        )

    def go(node: Formula) -> Formula:
        if isinstance(node, Term):
            args = tuple(go(a) for a in node.args)
            if node.head == var:
                vals = [_peval(a, {}) for a in args]
                if all(v is not None for v in vals):
                    return Const(table.bits[tuple_to_index(vals)])
                return FixedTerm(table, args)
            return Term(node.head, args)
        if isinstance(node, FixedTerm):
            return FixedTerm(node.table, tuple(go(a) for a in node.args))
        if isinstance(node, Const):
            return node
        if isinstance(node, Not):
            return Not(go(node.body))
        if isinstance(node, And):
            return And(tuple(go(i) for i in node.items))
        if isinstance(node, Or):
            return Or(tuple(go(i) for i in node.items))
        if isinstance(node, Implies):
            return Implies(go(node.lhs), go(node.rhs))
        if isinstance(node, Iff):
            return Iff(go(node.lhs), go(node.rhs))
        if isinstance(node, (Exists, Forall)):
            if node.var == var:
                raise So2Error(f"{var!r} is bound here, not free")
            body = go(node.body)
            return Exists(node.var, body) if isinstance(node, Exists) else Forall(node.var, body)
        raise So2Error(f"unknown node {node!r}")

    return go(formula)
