"""Fragment profile computation."""

import random

import pytest

from generators import random_braided_usk, random_closed_formula, random_qfree_cnf_for_core
from so2kit.classify import FragmentError, block_structure, classify
from so2kit.core import prefix_formula, split_prefix
from so2kit.textio import parse
from so2kit.transform import make_simple, to_cnf, to_core


def test_uniqueness_examples():
    # Same constraint, stated two ways; only the quantified form is unique.
    assert not classify(parse("f(0) = f(1)")).is_unique
    assert classify(parse("exists x forall y (x <-> f(y))")).is_unique


def test_simpleness_example():
    assert not classify(parse("f(g(x))")).is_simple
    assert classify(parse("f(x) & g(y)")).is_simple


def test_alternating_example_profile():
    phi = parse(
        "forall y1/1 forall y2/1 exists x1 exists x2 "
        "((y1(x2) <-> x1) & (y2(x1) <-> x2))"
    )
    prof = classify(phi)
    assert prof.prefix == "Pi(1)"
    assert prof.final_prop_block == "existential"
    assert prof.is_simple and prof.is_unique and prof.is_closed
    assert not prof.is_krom and not prof.is_cnf  # biconditional matrix
    cnf_prof = classify(to_cnf(phi))
    assert cnf_prof.is_cnf and cnf_prof.is_krom and cnf_prof.is_braided


def test_block_structure_merging():
    phi = parse("exists f/1 exists g/1 forall x (f(x) & g(x))")
    blocks = block_structure(phi)
    assert [(k, [v.name for v in vs]) for k, vs in blocks] == [
        ("exists", ["f", "g"]),
        ("forall", ["x"]),
    ]


def test_block_structure_alternations():
    phi = parse("forall f/1 exists g/1 forall x (g(x) | f(x))")
    blocks = block_structure(phi)
    assert [k for k, _ in blocks] == ["forall", "exists", "forall"]


def test_block_structure_example_formula():
    phi = parse(
        "forall y1/1 forall y2/1 exists x1 exists x2 "
        "((y1(x2) <-> x1) & (y2(x1) <-> x2))"
    )
    blocks = block_structure(phi)
    assert [(k, len(vs)) for k, vs in blocks] == [("forall", 2), ("exists", 2)]


def test_block_structure_requires_prenex():
    with pytest.raises(FragmentError):
        block_structure(parse("(exists x x) & y"))


def test_not_prenex_profile():
    prof = classify(parse("(exists x x) & (forall y (y | ~y))"))
    assert prof.prefix == "NotPrenex"
    assert not prof.is_prenex and not prof.is_cnf


def test_prefix_levels():
    assert classify(parse("exists f/1 forall g/1 exists h/1 (f(x))")).prefix == "Sigma(3)"
    assert classify(parse("exists f/1 exists x (f(x))")).prefix == "Sigma(1)"
    assert classify(parse("exists f/1 forall x (f(x))")).prefix == "Sigma(1)"
    assert classify(parse("forall x exists y (x & y)")).prefix == "Pi(1)"
    assert classify(parse("x & y")).prefix == "Sigma(0)"


def test_final_prop_block():
    assert classify(parse("exists f/1 forall x (f(x))")).final_prop_block == "universal"
    assert classify(parse("forall f/1 exists x (f(x))")).final_prop_block == "existential"
    assert classify(parse("exists f/1 exists g/1 (f(x) & g(y))")).final_prop_block == "absent"


def test_free_function_variables_do_not_raise_level():
    prof = classify(parse("exists x (f(x) & x)"))
    assert prof.prefix == "Sigma(1)"
    assert not prof.is_closed


def test_horn_krom_core_flags():
    prof = classify(parse("(~a | b) & (~b | ~c)"))
    assert prof.is_cnf and prof.is_horn and prof.is_krom and prof.is_core
    wide = classify(parse("(a | b | c)"))
    assert wide.is_cnf and not wide.is_krom and not wide.is_horn
    two_pos = classify(parse("(a | b)"))
    assert two_pos.is_krom and not two_pos.is_horn and not two_pos.is_core


def test_unit_and_empty_clauses_count():
    assert classify(parse("a & ~b")).is_core
    from so2kit.core import And, Or

    empty = And((Or(()),))
    prof = classify(empty)
    assert prof.is_cnf and prof.is_horn and prof.is_krom


def test_core_iff_horn_and_krom_on_corpus():
    rng = random.Random(31)
    for _ in range(500):
        prof = classify(random_closed_formula(rng))
        assert prof.is_core == (prof.is_horn and prof.is_krom)


def test_to_core_outputs_classify_core():
    rng = random.Random(32)
    for _ in range(50):
        theta = random_qfree_cnf_for_core(rng)
        prof = classify(to_core(theta))
        assert prof.prefix == "Sigma(1)" and prof.is_core


def test_make_simple_outputs_classify_simple():
    rng = random.Random(33)
    from generators import random_nested_term_formula

    for _ in range(100):
        phi = random_nested_term_formula(rng)
        assert classify(make_simple(phi)).is_simple


def test_braided_examples():
    assert classify(parse("exists f/1 forall x ((~f(x) | x) & (~x | f(x)))")).is_braided
    # argument quantified two blocks later is fine for a universal function
    assert classify(
        parse("forall g/1 exists f/1 forall x ((~f(x) | g(x)) & (~g(x) | f(x)))")
    ).is_braided
    # existential function taking an argument from two blocks later is not
    assert not classify(
        parse("exists f/1 forall g/1 exists x ((f(x) | g(x)) & ~x)")
    ).is_braided
    # free variables leave a formula outside the braided fragment
    assert not classify(parse("exists f/1 forall x (f(x) | y)")).is_braided


def test_braided_invariant_under_block_reordering():
    rng = random.Random(34)
    for _ in range(200):
        phi = random_braided_usk(rng)
        prefix, matrix = split_prefix(phi)
        # permute variables inside each maximal same-quantifier run
        blocks = block_structure(phi)
        reordered = []
        for kind, vs in blocks:
            vs = list(vs)
            rng.shuffle(vs)
            reordered.extend((kind, v) for v in vs)
        again = prefix_formula(reordered, matrix)
        assert classify(again).is_braided == classify(phi).is_braided


def test_profile_json_fields():
    payload = classify(parse("a & b")).to_dict()
    assert set(payload) == {
        "is_prenex",
        "prefix",
        "final_prop_block",
        "is_cnf",
        "is_horn",
        "is_krom",
        "is_core",
        "is_simple",
        "is_unique",
        "is_braided",
        "is_closed",
    }
