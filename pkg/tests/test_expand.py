"""Universal expansion, the propositional subsolvers, and the deciders."""

import itertools
import random

import pytest

from generators import random_pi2, random_prop_cnf, random_sigma1
from so2kit.classify import FragmentError
from so2kit.core import (
    CapExceededError,
    Interpretation,
    So2Error,
    TruthTable,
    Var,
    evaluate,
)
from so2kit.expand import (
    ExpansionBudget,
    brute_force_sat,
    decide_pik_horn_krom,
    decide_sigma1_sh,
    decide_sigma1_sk,
    eliminate_outer_blocks,
    horn_sat,
    two_sat,
    universal_expansion,
)
from so2kit.textio import parse


def test_expansion_example_structure():
    problem = universal_expansion(parse("exists f/1 forall x (~x | f(x))"))
    assert problem.y_vars == [(0, (0,)), (0, (1,))]
    assert len(problem.clauses) == 2
    folded = problem.propositional_clauses()
    assert folded == [(((0, (1,)), True),)]
    sat, _ = horn_sat(folded)
    assert sat


def test_expansion_contradiction():
    problem = universal_expansion(parse("exists f/1 forall x (f(x) & ~f(x))"))
    folded = problem.propositional_clauses()
    sat, _ = horn_sat(folded)
    assert not sat


def test_expansion_folds_free_functions():
    g = Var("g", 1)
    phi = parse("exists f/1 forall x (~g(x) | f(x))")
    interp = Interpretation({g: TruthTable.negation()})
    problem = universal_expansion(phi, interp)
    # g(0) = 1 forces f(0); g(1) = 0 satisfies the second copy
    folded = problem.propositional_clauses()
    assert folded == [(((0, (0,)), True),)]
    assert decide_sigma1_sh(phi, interp) == bool(evaluate(phi, interp))


def test_expansion_y_count_invariant():
    phi = parse("exists f/1 exists g/2 forall x forall y (~f(x) | g(x, y))")
    problem = universal_expansion(phi)
    assert len(problem.y_vars) == 2 + 4


def test_expansion_preserves_clause_shape():
    rng = random.Random(81)
    for _ in range(200):
        phi = random_sigma1(rng, rng.choice(["horn", "krom"]))
        from so2kit.expand import _split_blocks_for_outer

        blocks, xs, clauses, _ = _split_blocks_for_outer(phi)
        if any(v.arity == 0 for v in blocks[0][1]):
            continue  # propositional existentials are looped, not expanded
        problem = universal_expansion(phi)
        for raw, (src_idx, _) in zip(problem.clauses, problem.provenance):
            src = clauses[src_idx]
            assert len(raw) == src.width
            assert sum(1 for _, positive in raw if positive) == src.positive_count


def test_expansion_requires_proper_functions():
    with pytest.raises(FragmentError):
        universal_expansion(parse("exists e forall x (~x | e)"))


def test_expansion_cap():
    budget = ExpansionBudget(materialize_universal_cap=2)
    phi = parse("exists f/1 forall a forall b forall c (f(a) | ~b)")
    with pytest.raises(CapExceededError):
        universal_expansion(phi, budget=budget)


def test_horn_sat_examples():
    a, b = "a", "b"
    unsat = [((a, True),), ((a, False), (b, True)), ((b, False),)]
    assert horn_sat(unsat) == (False, None)
    assert horn_sat([]) == (True, set())


def test_horn_sat_least_model():
    a, b, c = "a", "b", "c"
    sat, model = horn_sat([((a, True),), ((a, False), (b, True))])
    assert sat and model == {a, b}
    sat, model = horn_sat([((a, False), (c, True))])
    assert sat and model == set()


def test_horn_sat_rejects_non_horn():
    with pytest.raises(So2Error):
        horn_sat([(("a", True), ("b", True))])


def test_two_sat_examples():
    a, b = "a", "b"
    unsat = [
        ((a, True), (b, True)),
        ((a, False), (b, True)),
        ((a, True), (b, False)),
        ((a, False), (b, False)),
    ]
    assert two_sat(unsat) == (False, None)
    sat, model = two_sat([((a, True), (b, True))])
    assert sat and (model["a"] or model["b"])


def test_two_sat_rejects_wide_clauses():
    with pytest.raises(So2Error):
        two_sat([(("a", True), ("b", True), ("c", True))])


def test_subsolvers_against_brute_force():
    rng = random.Random(82)
    for _ in range(1500):
        horn = random_prop_cnf(rng, "horn", max_vars=8)
        sat, model = horn_sat(horn)
        assert sat == brute_force_sat(horn)
        if sat:
            assert _is_model(horn, model)
        krom = random_prop_cnf(rng, "krom", max_vars=8)
        sat, model = two_sat(krom)
        assert sat == brute_force_sat(krom)
        if sat:
            assert all(
                any(model[k] == positive for k, positive in clause)
                for clause in krom
            )


def _is_model(clauses, true_set):
    return all(
        any((key in true_set) == positive for key, positive in clause)
        for clause in clauses
    )


def test_horn_least_model_is_minimal():
    rng = random.Random(83)
    for _ in range(300):
        clauses = random_prop_cnf(rng, "horn", max_vars=6)
        sat, model = horn_sat(clauses)
        if not sat:
            continue
        names = sorted({key for clause in clauses for key, _ in clause})
        for bits in itertools.product((False, True), repeat=len(names)):
            assignment = dict(zip(names, bits))
            if all(
                any(assignment[k] == positive for k, positive in clause)
                for clause in clauses
            ):
                assert all(assignment[k] for k in model if k in assignment)


def test_decide_sigma1_sh_examples():
    assert decide_sigma1_sh(parse("exists f/1 forall x ((~x | f(x)) & (~f(x) | x))"))
    assert not decide_sigma1_sh(parse("exists f/1 forall x (f(x) & ~f(x))"))


def test_decide_sigma1_sh_corpus():
    rng = random.Random(84)
    for _ in range(1500):
        phi = random_sigma1(rng, "horn")
        assert decide_sigma1_sh(phi) == bool(evaluate(phi))


def test_decide_sigma1_sh_chaining_agrees():
    rng = random.Random(85)
    for _ in range(800):
        phi = random_sigma1(rng, "horn")
        assert decide_sigma1_sh(phi, strategy="stream") == decide_sigma1_sh(
            phi, strategy="materialize"
        )


def test_decide_sigma1_sk_examples():
    core = parse("exists f/1 forall x ((~x | f(x)) & (~f(x) | x))")
    assert decide_sigma1_sk(core)
    forced = parse(
        "exists f/1 forall x forall y "
        "((~f(x) | f(y)) & (f(x) | ~f(y)) & (f(x) | f(y)) & (~f(x) | ~f(y)))"
    )
    assert not decide_sigma1_sk(forced)
    assert evaluate(forced) == 0


def test_decide_sigma1_sk_dual_paths_agree():
    rng = random.Random(86)
    for _ in range(1500):
        phi = random_sigma1(rng, "krom")
        mat = decide_sigma1_sk(phi, strategy="materialize")
        stream = decide_sigma1_sk(phi, strategy="stream")
        assert mat == stream == bool(evaluate(phi))


def test_decide_sigma1_fragment_checks():
    with pytest.raises(FragmentError):
        decide_sigma1_sh(parse("exists f/1 forall x (f(x) | f(x) | x)"))  # not Horn
    with pytest.raises(FragmentError):
        decide_sigma1_sk(parse("exists f/1 forall x (f(f(x)))"))  # not simple


def test_eliminate_outer_blocks_pi2():
    phi = parse("forall g/1 exists f/1 forall x ((~f(x) | g(x)) & (~g(x) | f(x)))")
    leaves = list(eliminate_outer_blocks(phi))
    assert len(leaves) == 4  # one leaf per unary table for g
    g = Var("g", 1)
    for interp, residual in leaves:
        assert g in interp
        from so2kit.core import free_vars

        assert g in free_vars(residual)
    # every leaf is decided by expansion; the copy table works for each g
    assert all(
        decide_sigma1_sk(residual, interp) for interp, residual in leaves
    )


def test_eliminate_outer_blocks_single_leaf():
    phi = parse("exists f/1 forall x (~x | f(x))")
    leaves = list(eliminate_outer_blocks(phi))
    assert len(leaves) == 1
    interp, residual = leaves[0]
    assert len(interp) == 0 and residual == phi


def test_eliminate_outer_blocks_loops_propositions():
    phi = parse("exists f/1 exists e forall x (~e | f(x))")
    leaves = list(eliminate_outer_blocks(phi))
    assert len(leaves) == 2  # two values of the existential proposition


def test_decide_pik_examples():
    copy = parse("forall g/1 exists f/1 forall x ((~f(x) | g(x)) & (~g(x) | f(x)))")
    assert decide_pik_horn_krom(copy)
    refuted = parse("forall g/1 exists f/1 forall x (~f(x) & g(x))")
    assert not decide_pik_horn_krom(refuted)
    assert evaluate(refuted) == 0


def test_decide_pik_corpus():
    rng = random.Random(87)
    for _ in range(300):
        kind = rng.choice(["horn", "krom"])
        phi = random_pi2(rng, kind)
        assert decide_pik_horn_krom(phi) == bool(evaluate(phi))


def test_decide_pik_sigma3_horn():
    # an extra leading existential block on top of the level-2 pattern
    phi = parse(
        "exists h/1 forall g/1 exists f/1 forall x "
        "((~g(x) | f(x)) & (~f(x) | h(x)))"
    )
    assert decide_pik_horn_krom(phi) == bool(evaluate(phi))


def test_decide_pik_outer_arity_cap():
    budget = ExpansionBudget(outer_arity_cap=0)
    phi = parse("forall g/1 exists f/1 forall x (~f(x) | g(x))")
    with pytest.raises(CapExceededError):
        decide_pik_horn_krom(phi, budget=budget)


def test_streaming_handles_many_universals():
    xs = " ".join(f"forall x{i}" for i in range(1, 19))
    clauses = " & ".join(f"(~x{i} | f(x1, x2))" for i in range(1, 19))
    phi = parse(f"exists f/2 {xs} ({clauses})")
    assert decide_sigma1_sk(phi, strategy="stream")


def test_streaming_memory_independent_of_universal_count():
    # Peak allocation must not scale with 2^|universal block|.
    import tracemalloc

    def family(n):
        xs = " ".join(f"forall x{i}" for i in range(1, n + 1))
        clauses = " & ".join(f"(~x{i} | f(x1, x2))" for i in range(1, n + 1))
        return parse(f"exists f/2 {xs} ({clauses})")

    peaks = []
    for n in (14, 20):
        phi = family(n)
        tracemalloc.start()
        assert decide_sigma1_sk(phi, strategy="stream")
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        peaks.append(peak)
    # 2^20 / 2^14 = 64x the assignments; allow only linear clause-count growth
    assert peaks[1] < peaks[0] * 4 + (1 << 20)
