"""Equivalence-preserving rewrites."""

import random

import pytest

from generators import (
    oracle_work,
    random_closed_formula,
    random_nested_term_formula,
    random_nonunique_input,
    random_unique_sigma2_for_elide,
)
from so2kit.classify import classify
from so2kit.core import (
    Var,
    equivalent,
    free_vars,
    matrix_clauses,
    prop,
    split_prefix,
)
from so2kit.textio import parse
from so2kit.transform import (
    FreshNamePool,
    TransformError,
    elide,
    make_simple,
    make_unique,
    to_cnf,
    to_core,
    to_prenex,
)


# -- prenexing ---------------------------------------------------------------


def test_to_prenex_pulls_embedded_quantifiers():
    phi = parse("(exists x x) & (forall y (y | ~y))")
    out = to_prenex(phi)
    assert classify(out).is_prenex
    prefix, _ = split_prefix(out)
    assert [k for k, _ in prefix] == ["exists", "forall"]
    assert equivalent(phi, out)


def test_to_prenex_leaves_prenex_unchanged():
    phi = parse("exists f/1 forall x (f(x) <-> x)")
    assert to_prenex(phi) == phi


def test_to_prenex_random_equivalence():
    rng = random.Random(41)
    from generators import random_nonprenex_formula

    for _ in range(1000):
        phi = random_nonprenex_formula(rng)
        out = to_prenex(phi)
        assert classify(out).is_prenex
        assert equivalent(phi, out)


def test_to_prenex_rejects_free_functions():
    with pytest.raises(TransformError):
        to_prenex(parse("f(x) & (exists y y)"))


# -- CNF conversion ----------------------------------------------------------


def test_to_cnf_direct_iff_expansion():
    out = to_cnf(parse("a <-> b"))
    clauses = matrix_clauses(out)
    assert clauses is not None and len(clauses) == 2
    assert all(c.width == 2 for c in clauses)
    assert equivalent(parse("a <-> b"), out)


def test_to_cnf_example_formula_stays_krom():
    phi = parse(
        "forall y1/1 forall y2/1 exists x1 exists x2 "
        "((y1(x2) <-> x1) & (y2(x1) <-> x2))"
    )
    out = to_cnf(phi)
    prof = classify(out)
    assert prof.is_cnf and prof.is_krom
    _, matrix = split_prefix(out)
    clauses = matrix_clauses(matrix)
    assert len(clauses) == 4 and all(c.width == 2 for c in clauses)
    # no auxiliaries were needed
    assert len(split_prefix(out)[0]) == 4
    assert equivalent(phi, out)


def test_to_cnf_random_equivalence():
    rng = random.Random(42)
    done = 0
    while done < 400:
        phi = to_prenex(random_closed_formula(rng, depth=4))
        out = to_cnf(phi)
        if oracle_work([v for _, v in split_prefix(out)[0]]) > 1 << 14:
            continue  # lifted auxiliaries can make the oracle infeasible
        done += 1
        assert classify(out).is_cnf
        assert equivalent(phi, out)


def test_to_cnf_aux_after_existential_tail():
    phi = parse("forall f/1 exists x ((x & f(x)) | (~x & ~f(x)))")
    out = to_cnf(phi)
    prof = classify(out)
    assert prof.is_cnf and prof.prefix == "Pi(1)"
    assert equivalent(phi, out)


def test_to_cnf_aux_lifted_over_universal_tail():
    phi = parse("exists f/1 forall x ((x & f(x)) | ~x)")
    out = to_cnf(phi)
    assert classify(out).is_cnf and classify(out).is_prenex
    # the auxiliary became a function of the universal block
    lifted = [v for _, v in split_prefix(out)[0] if v.arity == 1 and v.name.startswith("z")]
    assert lifted
    assert equivalent(phi, out)


# -- simpleness --------------------------------------------------------------


def test_make_simple_shape():
    out = make_simple(parse("f(g(x))"))
    prefix, matrix = split_prefix(out)
    assert [k for k, _ in prefix] == ["exists"]
    clauses = matrix_clauses(matrix)
    assert clauses is not None and len(clauses) == 3
    assert classify(out).is_simple
    assert equivalent(parse("f(g(x))"), out)


def test_make_simple_unchanged_when_simple():
    phi = parse("exists f/1 forall x (f(x) & x)")
    assert make_simple(phi) == phi


def test_make_simple_idempotent():
    rng = random.Random(43)
    for _ in range(100):
        phi = random_nested_term_formula(rng)
        once = make_simple(phi)
        assert make_simple(once) == once


def test_make_simple_preserves_horn_krom_unique():
    # universal-first Krom inputs with nested unique terms keep their flags
    phi = parse(
        "forall f/1 forall g/1 exists x ((~f(g(x)) | x) & (~x | f(g(x))))"
    )
    prof_in = classify(phi)
    assert prof_in.is_krom and prof_in.is_unique
    out = make_simple(phi)
    prof = classify(out)
    assert prof.is_simple and prof.is_krom and prof.is_unique and prof.is_core == prof_in.is_core
    assert equivalent(phi, out)


# -- elision -----------------------------------------------------------------


def test_elide_fixed_first_argument():
    phi = parse("forall z forall x exists f/2 (f(z, x) <-> g(z))")
    f = Var("f", 2)
    out = elide(phi, f, prop("z"))
    new_f = [v for _, v in split_prefix(out)[0] if v.name.startswith("f")]
    assert new_f and new_f[0].arity == 1
    assert equivalent(phi, out)


def test_elide_no_matching_position():
    phi = parse("forall z forall x exists f/1 (f(x) <-> g(z))")
    assert elide(phi, Var("f", 1), prop("z")) == phi


def test_elide_arity_drops_by_match_count():
    phi = parse("forall z exists f/2 (f(z, z) | ~z)")
    out = elide(phi, Var("f", 2), prop("z"))
    fs = [v for _, v in split_prefix(out)[0] if v.arity == 0 and v.name.startswith("f")]
    assert fs, "both positions matched, arity drops to zero"
    assert equivalent(phi, out)


def test_elide_requires_uniqueness():
    phi = parse("forall z exists f/1 (f(z) & f(x))")
    with pytest.raises(TransformError):
        elide(phi, Var("f", 1), prop("z"))


def test_elide_rejects_late_argument():
    phi = parse("exists f/1 forall z (f(z))")
    with pytest.raises(TransformError):
        elide(phi, Var("f", 1), prop("z"))


def test_elide_random_equivalence():
    rng = random.Random(44)
    for _ in range(400):
        phi, f, t = random_unique_sigma2_for_elide(rng)
        out = elide(phi, f, t)
        assert classify(out).is_unique
        assert equivalent(phi, out)


# -- uniqueness --------------------------------------------------------------


def test_make_unique_copies_and_guards():
    phi = parse("exists h/1 forall x1 forall x2 ((h(x1) | h(x2)) & ~h(x1))")
    out = make_unique(phi)
    assert classify(out).is_unique
    prefix, _ = split_prefix(out)
    copies = [v for _, v in prefix if v.name.startswith("h__")]
    assert len(copies) == 2
    assert equivalent(phi, out)


def test_make_unique_unchanged_when_unique():
    phi = parse("exists h/1 forall x (h(x) <-> x)")
    assert make_unique(phi) == phi


def test_make_unique_universal_pattern():
    phi = parse("forall h/1 exists x1 exists x2 (h(x1) <-> ~h(x2))")
    out = make_unique(phi)
    assert classify(out).is_unique
    assert equivalent(phi, out)


def test_make_unique_classify_corpus():
    rng = random.Random(45)
    for _ in range(200):
        phi = random_nonunique_input(rng, rng.choice(["EA", "AE"]))
        out = make_unique(phi)
        assert classify(out).is_unique
        assert equivalent(phi, out)


def test_make_unique_handles_missing_tail():
    # no propositional tail: treated as an empty tail of the opposite kind
    phi = parse("exists h/1 exists x1 exists x2 (h(x1) & h(x2))")
    out = make_unique(phi)
    assert classify(out).is_unique
    assert equivalent(phi, out)


def test_make_unique_nested_occurrences():
    phi = parse("exists h/1 forall x (h(h(x)) | ~x)")
    out = make_unique(phi)
    assert classify(out).is_unique
    assert equivalent(phi, out)


# -- core form ---------------------------------------------------------------


def test_to_core_binary_clause():
    theta = parse("a | b")
    phi = to_core(theta)
    prefix, _ = split_prefix(phi)
    names = [v.name.split("__")[0] for _, v in prefix]
    assert names.count("h") == 1 and names.count("g") == 2
    assert [v.arity for _, v in prefix if v.name.startswith("h")] == [2]
    prof = classify(phi)
    assert prof.prefix == "Sigma(1)" and prof.is_core
    # slowest oracle check in the suite: two atoms mean ~2M interpretations
    assert equivalent(theta, phi)


def test_to_core_unit_clause():
    theta = parse("a")
    phi = to_core(theta)
    assert classify(phi).is_core
    assert equivalent(theta, phi)


def test_to_core_three_literal_clause():
    theta = parse("a | ~a | a")
    assert not classify(theta).is_krom
    phi = to_core(theta)
    prof = classify(phi)
    assert prof.prefix == "Sigma(1)" and prof.is_core
    assert equivalent(theta, phi)


def test_to_core_clause_shapes():
    theta = parse("(a | ~a) & a")
    phi = to_core(theta)
    _, matrix = split_prefix(phi)
    for clause in matrix_clauses(matrix):
        assert clause.width <= 2 and clause.positive_count <= 1


def test_to_core_preserves_uniqueness():
    theta = parse("(f(x) | ~f(x))")
    assert classify(theta).is_unique
    phi = to_core(theta)
    assert classify(phi).is_unique
    assert equivalent(theta, phi)


def test_to_core_keeps_free_variables():
    theta = parse("a & ~a")
    phi = to_core(theta)
    assert free_vars(phi) == free_vars(theta)
    assert equivalent(theta, phi)


def test_to_core_rejects_non_cnf():
    with pytest.raises(TransformError):
        to_core(parse("a <-> b"))
    with pytest.raises(TransformError):
        to_core(parse("exists x (x)"))


# -- fresh names -------------------------------------------------------------


def test_fresh_name_pool_avoids_collisions():
    phi = parse("exists y__1 (y__1 & z)")
    pool = FreshNamePool.for_formula(phi)
    assert pool.fresh("y") == "y__2"
    assert pool.fresh("y") == "y__3"
    assert pool.fresh("z") not in ("z",)
