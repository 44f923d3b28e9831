"""Machine simulation, window computation, and the three encoders."""

import itertools
import json
import random

import pytest

from so2kit.classify import FragmentError, classify
from so2kit.core import (
    Clause,
    Literal,
    So2Error,
    TruthTable,
    Var,
    evaluate,
    prop,
)
from so2kit.expand import decide_sigma1_sh, decide_sigma1_sk
from so2kit.reductions import (
    EncodingParams,
    TMSpec,
    compute_windows,
    encode_exp_tm,
    encode_pi1_core,
    encode_pspace_tm,
    exp_configurations,
    machine_zoo,
    nand_of_clause,
    run_tm,
    run_trace,
)
from so2kit.textio import parse

ZOO = machine_zoo()


def test_run_tm_immediate_machines():
    assert run_tm(ZOO["accept_now"], "1") == "accept"
    assert run_tm(ZOO["reject_now"], "1") == "reject"
    assert run_tm(ZOO["reject_now"], "") == "reject"


def test_run_tm_first_symbol():
    m = ZOO["first_is_1"]
    assert run_tm(m, "1") == "accept"
    assert run_tm(m, "10") == "accept"
    assert run_tm(m, "01") == "reject"
    assert run_tm(m, "") == "reject"


def test_run_tm_parity_hand_trace():
    m = ZOO["parity"]
    # "11" has an even number of ones: mark cell 1, scan to the blank, accept.
    verdict, configs = run_trace(m, "11", time_cap=20, space_cap=5)
    assert verdict == "accept"
    states = [state for _, state, _ in configs]
    assert states == ["q0", "o", "e", "qf"]
    assert run_tm(m, "1") == "reject"
    assert run_tm(m, "111") == "reject"
    assert run_tm(m, "101") == "accept"


def test_rejecting_runs_end_in_canonical_configuration():
    for name, m in ZOO.items():
        for length in range(0, 4):
            for bits in itertools.product("01", repeat=length):
                word = "".join(bits)
                verdict, configs = run_trace(m, word, time_cap=50, space_cap=6)
                if verdict != "reject":
                    continue
                head, state, tape = configs[-1]
                assert head == 1 and state == m.reject
                assert all(v == m.blank for v in tape.values()), (name, word)


def test_run_tm_cap():
    m = ZOO["reject_now"]
    assert run_tm(m, "111", time_cap=2) == "cap_exceeded"
    assert run_tm(m, "111", space_cap=2) == "cap_exceeded"


def test_tmspec_json_round_trip():
    m = ZOO["parity"]
    again = TMSpec.from_json(m.to_json())
    assert again == m


def test_tmspec_rejects_nondeterminism():
    doc = json.loads(ZOO["accept_now"].to_json())
    doc["delta"].append(["q0", "1", "qr", "1", 0])
    with pytest.raises(So2Error):
        TMSpec.from_json(json.dumps(doc))


def test_tmspec_requires_total_delta():
    with pytest.raises(So2Error):
        TMSpec(
            states=("q0", "qf", "qr"),
            initial="q0",
            accept="qf",
            reject="qr",
            blank="_",
            alphabet=("1", "_"),
            delta={("q0", "1"): ("qf", "1", 0)},
        )


# -- windows -----------------------------------------------------------------


def test_windows_contain_all_noop_triples():
    m = ZOO["accept_now"]
    windows = compute_windows(m)
    for a, b, c in itertools.product(m.alphabet, repeat=3):
        assert (a, b, c, a, b, c) in windows


def test_windows_reject_spontaneous_change():
    m = ZOO["accept_now"]
    windows = compute_windows(m)
    assert ("0", "1", "0", "0", "1", "1") not in windows
    assert ("0", "1", "0", "0", "0", "0") not in windows


def test_windows_follow_transitions():
    m = ZOO["parity"]
    # (q0, "1") writes the marker and moves right
    q2, w, mv = m.delta[("q0", "1")]
    assert (q2, w, mv) == ("o", "M", 1)
    for a, c in itertools.product(m.alphabet, repeat=2):
        assert (a, ("q0", "1"), c, a, "M", ("o", c)) in compute_windows(m)


def test_window_stepping_matches_simulation():
    # Deriving each cell from the middle position of a window reproduces
    # the simulated configuration sequence on the padded tape.
    p = 3
    for name, m in ZOO.items():
        windows = compute_windows(m)
        forced = {}
        for a1, a2, a3, _, b2, _ in windows:
            forced.setdefault((a1, a2, a3), set()).add(b2)
        for word in ["", "1", "01", "110"]:
            rows = exp_configurations(m, word, p)
            assert rows is not None, (name, word)
            for before, after in zip(rows, rows[1:]):
                width = 1 << p
                for j in range(1, width - 1):
                    view = (before[j - 1], before[j], before[j + 1])
                    assert after[j] in forced.get(view, set()), (name, word, j)


# -- space-bounded encoder ---------------------------------------------------


def test_encode_pspace_profile():
    m = ZOO["accept_now"]
    params = EncodingParams.for_pspace(m, 2)
    phi = encode_pspace_tm(m, "1", params)
    prof = classify(phi)
    assert prof.prefix == "Sigma(1)"
    assert prof.is_core and prof.is_simple and prof.is_closed


def test_encode_pspace_small_faithfulness():
    for name in ("accept_now", "reject_now", "first_is_1"):
        m = ZOO[name]
        for word in ("", "1", "0"):
            bound = max(1, len(word) + 1)
            params = EncodingParams.for_pspace(m, bound)
            phi = encode_pspace_tm(m, word, params)
            expected = run_tm(m, word, time_cap=1000, space_cap=bound) == "accept"
            assert decide_sigma1_sk(phi, strategy="stream") == expected, (name, word)


def test_encode_pspace_validates_bound():
    m = ZOO["accept_now"]
    params = EncodingParams.for_pspace(m, 1)
    with pytest.raises(So2Error):
        encode_pspace_tm(m, "11", params)


# -- time-bounded encoder ----------------------------------------------------


def test_encode_exp_profile():
    m = ZOO["accept_now"]
    params = EncodingParams.for_exp(m, 3)
    phi = encode_exp_tm(m, "1", params)
    prof = classify(phi)
    assert prof.prefix == "Sigma(1)"
    assert prof.is_horn and prof.is_simple and prof.is_closed
    assert not prof.is_krom  # window clauses have seven literals


def test_encode_exp_small_faithfulness():
    for name in ("accept_now", "first_is_1"):
        m = ZOO[name]
        for word in ("", "1", "0"):
            params = EncodingParams.for_exp(m, 3)
            phi = encode_exp_tm(m, word, params)
            expected = run_tm(m, word, time_cap=7, space_cap=6) == "accept"
            assert decide_sigma1_sh(phi, strategy="stream") == expected, (name, word)


def test_encoding_params_validation():
    with pytest.raises(So2Error):
        EncodingParams(space_bound=0, width=1, coding={("a", "0"): (0,)})
    with pytest.raises(So2Error):
        EncodingParams(
            space_bound=1,
            width=1,
            coding={("a", "0"): (0,), ("a", "1"): (0,)},
        )


# -- nand gadget and the core-form encoder ------------------------------------


def test_nand_gadget_single_literal():
    g = Var("g", 2)
    clause = Clause((Literal(prop("a"), True),))
    expr = nand_of_clause(clause, g)
    for bit in (0, 1):
        interp = {Var("a"): TruthTable(0, (bit,)), g: TruthTable.nand()}
        assert evaluate(expr, interp) == 1 - bit


def test_nand_gadget_two_and_three_literals():
    g = Var("g", 2)
    nand = TruthTable.nand()
    cases = [
        Clause((Literal(prop("a"), True), Literal(prop("b"), True))),
        Clause(
            (
                Literal(prop("a"), True),
                Literal(prop("b"), False),
                Literal(prop("c"), True),
            )
        ),
    ]
    for clause in cases:
        expr = nand_of_clause(clause, g)
        for bits in itertools.product((0, 1), repeat=3):
            interp = {Var(n): TruthTable(0, (v,)) for n, v in zip("abc", bits)}
            interp[g] = nand
            assert evaluate(expr, interp) == 1 - evaluate(clause.to_formula(), interp)


def test_nand_gadget_rejects_oversized_clause():
    g = Var("g", 2)
    wide = Clause(tuple(Literal(prop(n), True) for n in "abcd"))
    with pytest.raises(So2Error):
        nand_of_clause(wide, g)


def test_encode_pi1_core_examples():
    refuted = parse("forall f/1 exists x (f(x) | f(x) | f(x))")
    out = encode_pi1_core(refuted)
    prof = classify(out)
    assert prof.prefix == "Pi(1)" and prof.is_core and prof.is_simple
    assert evaluate(out) == evaluate(refuted) == 0

    valid = parse("forall f/1 exists x (f(x) | ~f(x) | x)")
    out = encode_pi1_core(valid)
    assert evaluate(out) == evaluate(valid) == 1


def test_encode_pi1_core_requires_3cnf():
    with pytest.raises(FragmentError):
        encode_pi1_core(parse("forall f/1 exists x (f(x) | x | x | x)"))
    with pytest.raises(FragmentError):
        encode_pi1_core(parse("exists x forall f/1 (f(x))"))


def test_encode_pi1_core_random():
    from generators import random_pi1_3cnf

    rng = random.Random(91)
    for _ in range(40):
        phi = random_pi1_3cnf(rng)
        out = encode_pi1_core(phi)
        prof = classify(out)
        assert prof.prefix == "Pi(1)" and prof.is_core and prof.is_simple
        assert evaluate(out) == evaluate(phi)


def test_windows_include_head_arrivals():
    # The head may enter a window from outside on the next step.
    m = ZOO["parity"]
    windows = compute_windows(m)
    # some transition moves right into a cell holding "0"
    assert ("0", "1", "_", ("o", "0"), "1", "_") in windows
    # the cleanup sweep moves left, so the head can arrive on the right cell
    assert ("0", "1", "_", "0", "1", ("bk", "_")) in windows
