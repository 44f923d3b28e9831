"""Fragment classification: prefix shape, CNF/Horn/Krom/core flags,
simpleness, uniqueness, and braidedness.

The profile computed here routes formulas to the decision engines and lets
tests assert fragment membership.  All functions are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .core import (
    Const,
    FixedTerm,
    Formula,
    So2Error,
    Term,
    Var,
    free_vars,
    has_quantifier,
    matrix_clauses,
    split_prefix,
    subformulas,
)


class FragmentError(So2Error):
    """A formula is outside the fragment an operation requires."""


@dataclass(frozen=True)
class FragmentProfile:
    """Classification record for a single formula.

    ``prefix`` is ``"Sigma(k)"``, ``"Pi(k)"`` or ``"NotPrenex"``; k is the
    minimal number of alternating quantifier blocks, with a trailing
    all-propositional block not adding a level.  ``is_core`` always equals
    ``is_horn and is_krom``.
    """

    is_prenex: bool
    prefix: str
    final_prop_block: str  # "existential" | "universal" | "absent"
    is_cnf: bool
    is_horn: bool
    is_krom: bool
    is_core: bool
    is_simple: bool
    is_unique: bool
    is_braided: bool
    is_closed: bool

    def to_dict(self) -> dict:
        return {
            "is_prenex": self.is_prenex,
            "prefix": self.prefix,
            "final_prop_block": self.final_prop_block,
            "is_cnf": self.is_cnf,
            "is_horn": self.is_horn,
            "is_krom": self.is_krom,
            "is_core": self.is_core,
            "is_simple": self.is_simple,
            "is_unique": self.is_unique,
            "is_braided": self.is_braided,
            "is_closed": self.is_closed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _merge_blocks(prefix: list) -> list[tuple[str, list[Var]]]:
    blocks: list[tuple[str, list[Var]]] = []
    for kind, var in prefix:
        if blocks and blocks[-1][0] == kind:
            blocks[-1][1].append(var)
        else:
            blocks.append((kind, [var]))
    return blocks


def block_structure(formula: Formula) -> list[tuple[str, list[Var]]]:
    """Merged maximal same-quantifier blocks of a prenex formula, in order."""
    prefix, matrix = split_prefix(formula)
    if has_quantifier(matrix):
        raise FragmentError("formula is not prenex")
    return _merge_blocks(prefix)


def _prefix_descriptor(blocks: list[tuple[str, list[Var]]]) -> tuple[str, str]:
    """(prefix string, final propositional block) for merged blocks."""
    if not blocks:
        return "Sigma(0)", "absent"
    last_kind, last_vars = blocks[-1]
    trailing_prop = all(v.arity == 0 for v in last_vars)
    if trailing_prop:
        final = "existential" if last_kind == "exists" else "universal"
        function_blocks = blocks[:-1]
        if not function_blocks:
            # A purely propositional prefix counts as one level.
            head_kind = last_kind
            k = 1
        else:
            head_kind = function_blocks[0][0]
            k = len(function_blocks)
    else:
        final = "absent"
        head_kind = blocks[0][0]
        k = len(blocks)
    name = "Sigma" if head_kind == "exists" else "Pi"
    return f"{name}({k})", final


def is_simple_formula(formula: Formula) -> bool:
    """No function argument is anything but a proposition or a constant."""
    for node in subformulas(formula):
        if isinstance(node, (Term, FixedTerm)) and node.args:
            for arg in node.args:
                if isinstance(arg, Const):
                    continue
                if isinstance(arg, Term) and arg.head.arity == 0:
                    continue
                return False
    return True


def is_unique_formula(formula: Formula) -> bool:
    """Every proper function variable occurs with one fixed argument tuple."""
    seen: dict[Var, tuple] = {}
    for node in subformulas(formula):
        if isinstance(node, Term) and node.head.arity >= 1:
            prior = seen.get(node.head)
            if prior is None:
                seen[node.head] = node.args
            elif prior != node.args:
                return False
    return True


def classify(formula: Formula) -> FragmentProfile:
    """Compute the full fragment profile of a formula.

    Non-prenex inputs report ``NotPrenex`` with all matrix flags false.
    Krom/Horn/core are defined only on CNF matrices; a non-CNF matrix
    reports false for them with ``is_cnf`` distinguishing the cases.
    """
    prefix, matrix = split_prefix(formula)
    prenex = not has_quantifier(matrix)

    if not prenex:
        return FragmentProfile(
            is_prenex=False,
            prefix="NotPrenex",
            final_prop_block="absent",
            is_cnf=False,
            is_horn=False,
            is_krom=False,
            is_core=False,
            is_simple=is_simple_formula(formula),
            is_unique=is_unique_formula(formula),
            is_braided=False,
            is_closed=not free_vars(formula),
        )

    blocks = _merge_blocks(prefix)
    prefix_str, final_prop = _prefix_descriptor(blocks)
    position = {}
    kind_of = {}
    for idx, (kind, variables) in enumerate(blocks):
        for v in variables:
            position[v] = idx
            kind_of[v] = kind

    # One walk of the matrix: free variables, uniqueness, simpleness, and
    # braidedness together.  Binders are all in the prefix, so a head is
    # free exactly when it is not a prefix variable.
    closed = True
    simple = True
    unique = True
    braided = True
    tuples: dict[Var, tuple] = {}
    for node in subformulas(matrix):
        if isinstance(node, Term):
            head = node.head
            in_prefix = head in position
            if not in_prefix:
                closed = False
            if head.arity == 0:
                continue
            prior = tuples.get(head)
            if prior is None:
                tuples[head] = node.args
            elif prior != node.args:
                unique = False
            if not in_prefix:
                braided = False
            window = 1 if in_prefix and kind_of[head] == "exists" else 2
            i = position.get(head, 0)
            for arg in node.args:
                if isinstance(arg, Term) and arg.head.arity == 0:
                    j = position.get(arg.head)
                    if j is None or not (i <= j <= i + window):
                        braided = False
                elif isinstance(arg, Const):
                    # allowed for simpleness, conservatively not braided
                    braided = False
                else:
                    simple = False
                    braided = False
        elif isinstance(node, FixedTerm) and node.args:
            for arg in node.args:
                if not (
                    isinstance(arg, Const)
                    or (isinstance(arg, Term) and arg.head.arity == 0)
                ):
                    simple = False
            braided = False

    clauses = matrix_clauses(matrix)
    is_cnf = clauses is not None
    if is_cnf:
        # Unit clauses are Horn and Krom; the empty clause is both.
        horn = all(c.positive_count <= 1 for c in clauses)
        krom = all(c.width <= 2 for c in clauses)
    else:
        horn = krom = False

    return FragmentProfile(
        is_prenex=True,
        prefix=prefix_str,
        final_prop_block=final_prop,
        is_cnf=is_cnf,
        is_horn=horn,
        is_krom=krom,
        is_core=horn and krom,
        is_simple=simple,
        is_unique=unique,
        is_braided=closed and braided,
        is_closed=closed,
    )


def free_variable_listing(formula: Formula) -> list[str]:
    """Free variables rendered ``name/arity``, sorted; for the CLI report."""
    return sorted(f"{v.name}/{v.arity}" for v in free_vars(formula))
