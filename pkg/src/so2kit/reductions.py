"""Turing-machine-to-formula generators and the clause nand gadget.

Three constructions: a space-bounded machine becomes a simple core formula
with one existential function holding reachable configurations; a
time-bounded deterministic machine becomes a simple Horn formula over a
cell/timestep function plus a successor function; and a universal-first
formula with a 3CNF matrix becomes core form via a universally quantified
binary function forced to act as nand.

Ground truth for the encoders is direct simulation (``run_tm``).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Optional

from .classify import FragmentError, block_structure
from .core import (
    And,
    Clause,
    Const,
    Formula,
    Not,
    Or,
    So2Error,
    Term,
    Var,
    matrix_clauses,
    prefix_formula,
    split_prefix,
)
from .transform import FreshNamePool, make_simple

Move = int  # -1, 0, +1


@dataclass(frozen=True)
class TMSpec:
    """A deterministic single-tape machine.

    The transition function must be total on non-halting states; the accept
    and reject states halt.  ``delta`` maps (state, symbol) to
    (state, symbol, move).
    """

    states: tuple
    initial: str
    accept: str
    reject: str
    blank: str
    alphabet: tuple
    delta: dict

    def __post_init__(self) -> None:
        if self.blank not in self.alphabet:
            raise So2Error("blank symbol must be in the alphabet")
        for q in (self.initial, self.accept, self.reject):
            if q not in self.states:
                raise So2Error(f"state {q!r} not in the state set")
        halting = {self.accept, self.reject}
        for q in self.states:
            if q in halting:
                continue
            for a in self.alphabet:
                if (q, a) not in self.delta:
                    raise So2Error(f"transition missing for ({q!r}, {a!r})")
        for (q, a), (q2, a2, mv) in self.delta.items():
            if q in halting:
                raise So2Error("halting states have no transitions")
            if q2 not in self.states or a2 not in self.alphabet or mv not in (-1, 0, 1):
                raise So2Error(f"bad transition for ({q!r}, {a!r})")

    @property
    def deterministic(self) -> bool:
        return True  # delta is a function by construction

    def to_json(self) -> str:
        return json.dumps(
            {
                "states": list(self.states),
                "initial": self.initial,
                "accept": self.accept,
                "reject": self.reject,
                "blank": self.blank,
                "alphabet": list(self.alphabet),
                "delta": [
                    [q, a, q2, a2, mv]
                    for (q, a), (q2, a2, mv) in sorted(self.delta.items())
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "TMSpec":
        doc = json.loads(text)
        delta = {}
        for q, a, q2, a2, mv in doc["delta"]:
            key = (q, a)
            if key in delta:
                raise So2Error(f"duplicate transition for {key}: machine must be deterministic")
            delta[key] = (q2, a2, int(mv))
        return cls(
            states=tuple(doc["states"]),
            initial=doc["initial"],
            accept=doc["accept"],
            reject=doc["reject"],
            blank=doc["blank"],
            alphabet=tuple(doc["alphabet"]),
            delta=delta,
        )


def run_tm(m: TMSpec, word: str, time_cap: int = 10_000, space_cap: int = 10_000) -> str:
    """Simulate the machine on a word; 'accept', 'reject', or 'cap_exceeded'.

    The tape is 1-based; the head must stay within [1, space_cap].
    """
    verdict, _ = run_trace(m, word, time_cap, space_cap)
    return verdict


def run_trace(
    m: TMSpec, word: str, time_cap: int = 10_000, space_cap: int = 10_000
) -> tuple[str, list]:
    """Simulation that also returns the configuration sequence as
    (head, state, tape-dict) triples, the halting one included."""
    for ch in word:
        if ch not in m.alphabet or ch == m.blank:
            raise So2Error(f"input symbol {ch!r} outside the non-blank alphabet")
    tape = {i + 1: ch for i, ch in enumerate(word)}
    head, state = 1, m.initial
    configs = [(head, state, dict(tape))]
    for _ in range(time_cap):
        if state == m.accept:
            return "accept", configs
        if state == m.reject:
            return "reject", configs
        symbol = tape.get(head, m.blank)
        state, write, move = m.delta[(state, symbol)]
        tape[head] = write
        head += move
        if head < 1 or head > space_cap:
            return "cap_exceeded", configs
        configs.append((head, state, dict(tape)))
    if state == m.accept:
        return "accept", configs
    if state == m.reject:
        return "reject", configs
    return "cap_exceeded", configs


# ---------------------------------------------------------------------------
# Symbol coding
# ---------------------------------------------------------------------------

# Coding keys are tagged so state and tape-symbol names cannot collide:
# ("q", state), ("a", symbol), ("qa", state, symbol).


@dataclass(frozen=True)
class EncodingParams:
    """Space bound, code width, and the injective symbol coding table."""

    space_bound: int
    width: int
    coding: dict

    def __post_init__(self) -> None:
        if self.space_bound < 1:
            raise So2Error("space bound must be positive")
        needed = len(self.coding)
        if (1 << self.width) < needed:
            raise So2Error(f"width {self.width} cannot code {needed} symbols")
        if len(set(self.coding.values())) != needed:
            raise So2Error("coding table is not injective")
        for bits in self.coding.values():
            if len(bits) != self.width:
                raise So2Error("code width mismatch")

    def code(self, key) -> tuple:
        return self.coding[key]

    @classmethod
    def _make(cls, keys: list, space_bound: int) -> "EncodingParams":
        width = max(1, (len(keys) - 1).bit_length())
        coding = {
            key: tuple((i >> (width - 1 - b)) & 1 for b in range(width))
            for i, key in enumerate(keys)
        }
        return cls(space_bound=space_bound, width=width, coding=coding)

    @classmethod
    def for_pspace(cls, m: TMSpec, space_bound: int) -> "EncodingParams":
        keys = [("q", q) for q in m.states] + [("a", a) for a in m.alphabet]
        return cls._make(keys, space_bound)

    @classmethod
    def for_exp(cls, m: TMSpec, space_bound: int) -> "EncodingParams":
        keys = [("a", a) for a in m.alphabet] + [
            ("qa", q, a) for q in m.states for a in m.alphabet
        ]
        return cls._make(keys, space_bound)


def _unary_position(j: int, p: int) -> tuple:
    """Unary position code: a single 1 at slot j of p slots."""
    if not 1 <= j <= p:
        raise So2Error(f"position {j} outside 1..{p}")
    return tuple(1 if i == j else 0 for i in range(1, p + 1))


def _binary(j: int, p: int) -> tuple:
    """Big-endian p-bit encoding."""
    if not 0 <= j < (1 << p):
        raise So2Error(f"{j} not representable in {p} bits")
    return tuple((j >> (p - 1 - i)) & 1 for i in range(p))


# ---------------------------------------------------------------------------
# Space-bounded encoder
# ---------------------------------------------------------------------------


def encode_pspace_tm(m: TMSpec, word: str, params: EncodingParams) -> Formula:
    """A simple core formula, true iff the machine accepts the word within
    the space bound.

    One existential function holds a transition-closed set of encoded
    configurations containing the initial one and avoiding the canonical
    rejecting configuration (blank tape, head on cell 1, reject state).
    The machine must halt within the bound, rejecting only via that
    canonical configuration.
    """
    p = params.space_bound
    k = params.width
    n = len(word)
    if p < max(1, n):
        raise So2Error("space bound smaller than the input")

    f = Var("f", p + k + k * p)
    props = [Var(f"v{i}") for i in range(1, k * p + 1)]

    def tape_consts(content: dict) -> list:
        args: list = []
        for j in range(1, p + 1):
            sym = content.get(j, m.blank)
            args.extend(Const(b) for b in params.code(("a", sym)))
        return args

    def config_term(head: int, state: str, tape_args: list) -> Term:
        args = [Const(b) for b in _unary_position(head, p)]
        args += [Const(b) for b in params.code(("q", state))]
        args += tape_args
        return Term(f, tuple(args))

    clauses: list[Formula] = []
    init_tape = {i + 1: ch for i, ch in enumerate(word)}
    clauses.append(config_term(1, m.initial, tape_consts(init_tape)))

    for j in range(1, p + 1):
        for (q, a), (q2, a2, mv) in sorted(m.delta.items()):
            if not 1 <= j + mv <= p:
                continue
            before: list = []
            after: list = []
            for cell in range(1, p + 1):
                if cell == j:
                    before.extend(Const(b) for b in params.code(("a", a)))
                    after.extend(Const(b) for b in params.code(("a", a2)))
                else:
                    segment = props[(cell - 1) * k:cell * k]
                    before.extend(Term(v) for v in segment)
                    after.extend(Term(v) for v in segment)
            clauses.append(
                Or((Not(config_term(j, q, before)), config_term(j + mv, q2, after)))
            )

    clauses.append(Not(config_term(1, m.reject, tape_consts({}))))

    prefix = [("exists", f)] + [("forall", v) for v in props]
    return prefix_formula(prefix, And(tuple(clauses)))


# ---------------------------------------------------------------------------
# Windows and the time-bounded encoder
# ---------------------------------------------------------------------------


def compute_windows(m: TMSpec) -> set:
    """All legality-preserving local views: sixtuples (a1,a2,a3,b1,b2,b3)
    over plain symbols and (state, symbol) head compounds, such that three
    adjacent cells can evolve this way in one step.

    Head-free triples persist, with the head possibly arriving on an edge
    cell from outside; triples containing the head follow the transition
    function.  Halting head cells have no successor view.
    """
    plain = list(m.alphabet)
    windows: set = set()

    right_arrivals = sorted(
        {q2 for (q2, _, mv) in m.delta.values() if mv == 1}
    )
    left_arrivals = sorted(
        {q2 for (q2, _, mv) in m.delta.values() if mv == -1}
    )
    for a, b, c in itertools.product(plain, repeat=3):
        windows.add((a, b, c, a, b, c))
        for q in right_arrivals:
            windows.add((a, b, c, (q, a), b, c))
        for q in left_arrivals:
            windows.add((a, b, c, a, b, (q, c)))

    for (q, s), (q2, s2, mv) in m.delta.items():
        for b, c in itertools.product(plain, repeat=2):
            # head on the left cell
            if mv == 1:
                windows.add(((q, s), b, c, s2, (q2, b), c))
            elif mv == 0:
                windows.add(((q, s), b, c, (q2, s2), b, c))
            else:
                windows.add(((q, s), b, c, s2, b, c))
            # head on the middle cell
            if mv == 1:
                windows.add((b, (q, s), c, b, s2, (q2, c)))
            elif mv == 0:
                windows.add((b, (q, s), c, b, (q2, s2), c))
            else:
                windows.add((b, (q, s), c, (q2, b), s2, c))
            # head on the right cell
            if mv == 1:
                windows.add((b, c, (q, s), b, c, s2))
            elif mv == 0:
                windows.add((b, c, (q, s), b, c, (q2, s2)))
            else:
                windows.add((b, c, (q, s), b, (q2, c), s2))
    return windows


def _gamma_key(symbol) -> tuple:
    if isinstance(symbol, tuple):
        return ("qa", symbol[0], symbol[1])
    return ("a", symbol)


def encode_exp_tm(m: TMSpec, word: str, params: EncodingParams) -> Formula:
    """A simple Horn formula, true iff the deterministic machine accepts
    the word within 2^p steps on tape cells 1..2^p-2 (p = space bound).

    The cell function maps (symbol code; timestep; address) to truth; a
    successor function provides consecutive binary counters; window clauses
    close the cell function under transitions.  Rejection is reaching the
    reject state on a blank cell.
    """
    p = params.space_bound
    k = params.width
    n = len(word)
    if n > (1 << p) - 2:
        raise So2Error("input does not fit the padded tape")

    f = Var("f", k + 2 * p)
    suc = Var("suc", 2 * p)
    t = [Var(f"t{i}") for i in range(1, p + 1)]
    s = [Var(f"s{i}") for i in range(1, p + 1)]
    u = [Var(f"u{i}") for i in range(1, p + 1)]
    v = [Var(f"v{i}") for i in range(1, p + 1)]
    w = [Var(f"w{i}") for i in range(1, p + 1)]

    def f_term(symbol_key, time_args, pos_args) -> Term:
        args = [Const(b) for b in params.code(symbol_key)]
        args += list(time_args)
        args += list(pos_args)
        return Term(f, tuple(args))

    def consts(bits) -> list:
        return [Const(b) for b in bits]

    def terms(variables) -> list:
        return [Term(x) for x in variables]

    clauses: list[Formula] = []

    # Successor table: one unit per bit position, lower bits carried.
    for i in range(p):
        shared = terms(t[:i])
        first = shared + [Const(0)] + [Const(1)] * (p - i - 1)
        second = shared + [Const(1)] + [Const(0)] * (p - i - 1)
        clauses.append(Term(suc, tuple(first + second)))

    # Initial configuration on the first 2^ell cells at timestep 0.
    ell = max(1, n.bit_length())  # minimal with n < 2^ell, covering cells 0 and 1
    zero_t = consts(_binary(0, p))
    clauses.append(f_term(("a", m.blank), zero_t, consts(_binary(0, p))))
    head_symbol = word[0] if n >= 1 else m.blank
    clauses.append(f_term(("qa", m.initial, head_symbol), zero_t, consts(_binary(1, p))))
    for i in range(2, n + 1):
        clauses.append(f_term(("a", word[i - 1]), zero_t, consts(_binary(i, p))))
    for i in range(n + 1, 1 << ell):
        clauses.append(f_term(("a", m.blank), zero_t, consts(_binary(i, p))))

    # Remaining blanks: any address with a 1 among the first p-ell bits.
    for j in range(1, p - ell + 1):
        pos = terms(t[: j - 1]) + [Const(1)] + terms(t[j:])
        clauses.append(f_term(("a", m.blank), zero_t, pos))

    # The rejecting head symbol never appears.
    clauses.append(
        Not(f_term(("qa", m.reject, m.blank), terms(t), terms(u)))
    )

    # Window closure; one clause per distinct (left view, forced middle).
    forced: dict = {}
    for a1, a2, a3, _, b2, _ in sorted(compute_windows(m), key=repr):
        forced.setdefault((a1, a2, a3), set()).add(b2)
    suc_ts = Term(suc, tuple(terms(t) + terms(s)))
    suc_uv = Term(suc, tuple(terms(u) + terms(v)))
    suc_vw = Term(suc, tuple(terms(v) + terms(w)))
    for (a1, a2, a3), mids in sorted(forced.items(), key=repr):
        for b2 in sorted(mids, key=repr):
            clauses.append(
                Or(
                    (
                        Not(suc_ts),
                        Not(suc_uv),
                        Not(suc_vw),
                        Not(f_term(_gamma_key(a1), terms(t), terms(u))),
                        Not(f_term(_gamma_key(a2), terms(t), terms(v))),
                        Not(f_term(_gamma_key(a3), terms(t), terms(w))),
                        f_term(_gamma_key(b2), terms(s), terms(v)),
                    )
                )
            )

    # Padding cells stay blank at every timestep.
    clauses.append(f_term(("a", m.blank), terms(t), consts(_binary(0, p))))
    clauses.append(f_term(("a", m.blank), terms(t), consts(_binary((1 << p) - 1, p))))

    prefix = (
        [("exists", suc), ("exists", f)]
        + [("forall", x) for x in t + s + u + v + w]
    )
    return prefix_formula(prefix, And(tuple(clauses)))


def exp_configurations(m: TMSpec, word: str, p: int) -> Optional[list]:
    """Configuration words over the padded tape 0..2^p-1, one per timestep,
    or None when the run exceeds the time/space budget.  Cell values are
    plain symbols or (state, symbol) compounds; used to cross-check the
    window semantics against direct simulation."""
    verdict, configs = run_trace(m, word, time_cap=(1 << p) - 1, space_cap=(1 << p) - 2)
    if verdict == "cap_exceeded":
        return None
    words = []
    for head, state, tape in configs:
        row: list = []
        for cell in range(0, 1 << p):
            sym = tape.get(cell, m.blank)
            row.append((state, sym) if cell == head else sym)
        words.append(row)
    return words


# ---------------------------------------------------------------------------
# The nand gadget and the core-form encoder
# ---------------------------------------------------------------------------


def nand_of_clause(c: Clause, g: Var) -> Formula:
    """A term over ``g``, the clause's atoms, and constants that evaluates
    to the negation of the clause whenever ``g`` is the nand function."""
    if g.arity != 2:
        raise So2Error("the gadget function must be binary")
    if len(c.literals) > 3:
        raise So2Error("clause too large for the gadget")

    def negated_literal(lit) -> Formula:
        if lit.positive:
            return Term(g, (lit.atom, lit.atom))  # nand(x, x) = not x
        return lit.atom

    if not c.literals:
        return Term(g, (Const(0), Const(0)))  # constant true
    parts = [negated_literal(l) for l in c.literals]
    result = parts[0]
    for part in parts[1:]:
        pair = Term(g, (result, part))
        result = Term(g, (pair, pair))  # nand(nand(a,b), nand(a,b)) = a and b
    return result


def encode_pi1_core(phi: Formula) -> Formula:
    """Rewrite a universal-first formula with a 3CNF matrix into an
    equally true simple core formula.

    A fresh universally quantified binary function is constrained by four
    core clauses so that, across its possible interpretations, replacing
    every matrix clause C by (witness -> g(pivot, C*)) with C* the nand
    expression of C preserves truth; a final simpleness pass flattens the
    nested gadget terms.
    """
    prefix, matrix = split_prefix(phi)
    blocks = block_structure(phi)
    if not blocks or blocks[0][0] != "forall":
        raise FragmentError("encoder expects a universal-first prenex formula")
    if len(blocks) > 2 or (
        len(blocks) == 2 and any(x.arity != 0 for x in blocks[1][1])
    ):
        raise FragmentError("encoder expects one universal block then propositions")
    clauses = matrix_clauses(matrix)
    if clauses is None or any(cl.width > 3 for cl in clauses):
        raise FragmentError("matrix must be 3CNF")

    pool = FreshNamePool.for_formula(phi)
    g = pool.fresh_var("g", 2)
    d = Term(pool.fresh_var("d"))
    d2 = Term(pool.fresh_var("d"))
    e = Term(pool.fresh_var("e"))
    e2 = Term(pool.fresh_var("e"))

    zero, one = Const(0), Const(1)
    out: list[Formula] = [
        Or((Not(Term(g, (zero, zero))), d)),
        Or((Not(Term(g, (zero, zero))), e)),
        Or((Not(Term(g, (d, zero))), d2)),
        Or((Not(Term(g, (zero, e))), e2)),
    ]
    for cl in clauses:
        out.append(Or((Not(e2), Term(g, (d2, nand_of_clause(cl, g))))))

    new_prefix = (
        [("forall", g)]
        + prefix
        + [("exists", x.head) for x in (d, d2, e, e2)]
    )
    return make_simple(prefix_formula(new_prefix, And(tuple(out))))


# ---------------------------------------------------------------------------
# Machine zoo
# ---------------------------------------------------------------------------


def machine_zoo() -> dict:
    """Four small machines with hand-verified traces.

    Rejecting runs first blank the tape (a marker written on cell 1 lets
    the sweep find its way back), so they halt in the canonical rejecting
    configuration the space-bounded encoder forbids.
    """
    blank, mark = "_", "M"
    alphabet = ("0", "1", mark, blank)

    def sweep(states: dict) -> dict:
        states.update(
            {
                ("sw", "0"): ("sw", blank, 1),
                ("sw", "1"): ("sw", blank, 1),
                ("sw", mark): ("sw", blank, 1),
                ("sw", blank): ("bk", blank, -1),
                ("bk", "0"): ("bk", blank, -1),
                ("bk", "1"): ("bk", blank, -1),
                ("bk", blank): ("bk", blank, -1),
                ("bk", mark): ("qr", blank, 0),
            }
        )
        return states

    accept_now = TMSpec(
        states=("q0", "qf", "qr"),
        initial="q0",
        accept="qf",
        reject="qr",
        blank=blank,
        alphabet=("0", "1", blank),
        delta={("q0", a): ("qf", a, 0) for a in ("0", "1", blank)},
    )

    reject_now = TMSpec(
        states=("q0", "sw", "bk", "qf", "qr"),
        initial="q0",
        accept="qf",
        reject="qr",
        blank=blank,
        alphabet=alphabet,
        delta=sweep(
            {
                ("q0", "0"): ("sw", mark, 1),
                ("q0", "1"): ("sw", mark, 1),
                ("q0", mark): ("qr", blank, 0),
                ("q0", blank): ("qr", blank, 0),
            }
        ),
    )

    first_is_1 = TMSpec(
        states=("q0", "sw", "bk", "qf", "qr"),
        initial="q0",
        accept="qf",
        reject="qr",
        blank=blank,
        alphabet=alphabet,
        delta=sweep(
            {
                ("q0", "1"): ("qf", "1", 0),
                ("q0", "0"): ("sw", mark, 1),
                ("q0", mark): ("qr", blank, 0),
                ("q0", blank): ("qr", blank, 0),
            }
        ),
    )

    parity = TMSpec(
        states=("q0", "e", "o", "bk", "qf", "qr"),
        initial="q0",
        accept="qf",
        reject="qr",
        blank=blank,
        alphabet=alphabet,
        delta={
            ("q0", blank): ("qf", blank, 0),
            ("q0", "0"): ("e", mark, 1),
            ("q0", "1"): ("o", mark, 1),
            ("q0", mark): ("qr", blank, 0),
            ("e", "0"): ("e", "0", 1),
            ("e", "1"): ("o", "1", 1),
            ("e", mark): ("e", mark, 1),
            ("e", blank): ("qf", blank, 0),
            ("o", "0"): ("o", "0", 1),
            ("o", "1"): ("e", "1", 1),
            ("o", mark): ("o", mark, 1),
            ("o", blank): ("bk", blank, -1),
            ("bk", "0"): ("bk", blank, -1),
            ("bk", "1"): ("bk", blank, -1),
            ("bk", blank): ("bk", blank, -1),
            ("bk", mark): ("qr", blank, 0),
        },
    )

    return {
        "accept_now": accept_now,
        "reject_now": reject_now,
        "first_is_1": first_is_1,
        "parity": parity,
    }
