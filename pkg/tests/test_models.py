"""Finite intensional models: evaluation, satisfaction, enumeration, search."""

import random

import pytest

from elfol.core import (
    And,
    Atom,
    Const,
    Implies,
    Lambda,
    Modal,
    NECESSARILY,
    Not,
    Or,
    POSSIBLY,
    PredConst,
    QuantRef,
    RestrictedQuant,
    TrueF,
    Var,
    alpha_equivalent,
)
from elfol.kb import KnowledgeBase
from elfol.models import (
    EnumerationError,
    EvalError,
    IntensionalModel,
    ModelRejection,
    SearchBounds,
    dump_model,
    enumerate_models,
    eval_formula,
    find_counterexample,
    model_count,
    model_satisfies,
    parse_model,
    reified_key,
)
from elfol.quantifiers import DEFAULT_REGISTRY, UP
from elfol.schemas import Schema
from elfol.syntax import parse_formula, parse_term

from gen import AstGen


def single_world(pa=True):
    return IntensionalModel(
        worlds=("w0",),
        accessibility=frozenset(),
        domain=("d0",),
        constants={"a": "d0"},
        predicates={("P", "w0"): frozenset({("d0",)} if pa else set())},
    )


class TestEvalFormula:
    def test_possibility_needs_an_accessible_world(self):
        m = single_world(pa=True)
        f = parse_formula("(poss (P a))")
        assert eval_formula(m, "w0", {}, parse_formula("(P a)")) is True
        assert eval_formula(m, "w0", {}, f) is False

    def test_reflexive_accessibility_makes_it_possible(self):
        m = single_world(pa=True)
        m.accessibility = frozenset({("w0", "w0")})
        assert eval_formula(m, "w0", {}, parse_formula("(poss (P a))")) is True

    def test_conjunct_drop_holds_in_every_small_model(self):
        premise = parse_formula(
            "(quant (at-least 3) ?c (city ?c) (and (oj ?c) (big ?c)))"
        )
        conclusion = parse_formula("(quant (at-least 3) ?c (city ?c) (oj ?c))")
        f = Implies(premise, conclusion)
        assert find_counterexample(f, SearchBounds(max_domain=4)) is None

    def test_lambda_beta_reduces(self):
        m = single_world()
        f = Atom(Lambda(("x",), parse_formula("(P ?x)")), (Const("a"),))
        assert eval_formula(m, "w0", {}, f) is True

    def test_modifier_table_lookup(self):
        m = single_world()
        m.modifiers = {("m1", "P", "w0"): frozenset({("d0",)})}
        f = parse_formula("((mod m1 P) a)")
        assert eval_formula(m, "w0", {}, f) is True
        m.modifiers = {}
        assert eval_formula(m, "w0", {}, f) is False

    def test_modified_lambda_rejected(self):
        m = single_world()
        from elfol.core import Modified

        f = Atom(Modified("m1", Lambda(("x",), TrueF())), (Const("a"),))
        with pytest.raises(EvalError):
            eval_formula(m, "w0", {}, f)

    def test_unregistered_quantifier_is_an_error(self):
        m = single_world()
        f = RestrictedQuant(QuantRef("umpteen"), "x", TrueF(), parse_formula("(P ?x)"))
        with pytest.raises(EvalError):
            eval_formula(m, "w0", {}, f)

    def test_missing_reified_denotation_rejects_model(self):
        m = single_world()
        f = parse_formula("(P (that (P a)))")
        with pytest.raises(ModelRejection):
            eval_formula(m, "w0", {}, f)

    def test_reified_denotation_is_alpha_keyed(self):
        m = single_world()
        t1 = parse_term("(ka (lambda (?x) (P ?x)))")
        t2 = parse_term("(ka (lambda (?y) (P ?y)))")
        m.reified = {reified_key(t1, {}): "d0"}
        f1 = Atom(PredConst("P"), (t1,))
        f2 = Atom(PredConst("P"), (t2,))
        assert eval_formula(m, "w0", {}, f1) is True
        assert eval_formula(m, "w0", {}, f2) is True


class TestModelSatisfies:
    def kb(self, axioms=(), facts=(), schemas=()):
        from elfol.core import Signature

        sig = Signature(
            functions={"enter": 2},
            predicates={"result-state": 1, "contained-in": 2, "P": 1, "correct": 1},
            constants={"a", "b"},
        )
        return KnowledgeBase(sig, list(facts), list(axioms), list(schemas))

    def axiom1(self):
        return parse_formula(
            "(forall ?x (forall ?y (implies (result-state (enter ?x ?y))"
            " (contained-in ?x ?y))))"
        )

    def test_empty_kb_satisfied_by_anything(self):
        assert model_satisfies(single_world(), self.kb()) is True

    def test_result_state_without_containment_fails(self):
        m = IntensionalModel(
            worlds=("w0",),
            accessibility=frozenset(),
            domain=("d0", "d1", "ev"),
            constants={"a": "d0", "b": "d1"},
            predicates={
                ("result-state", "w0"): frozenset({("ev",)}),
                ("contained-in", "w0"): frozenset(),
            },
            functions={"enter": ({("d0", "d1"): "ev"}, "d0")},
        )
        assert model_satisfies(m, self.kb(axioms=[self.axiom1()])) is False
        m.predicates[("contained-in", "w0")] = frozenset({("d0", "d1")})
        assert model_satisfies(m, self.kb(axioms=[self.axiom1()])) is True

    def test_correct_extension_must_track_content(self):
        schema = Schema(
            "correct-iff-content", (), ("PHI",), (),
            parse_formula("(equiv (correct (that (PHI))) (PHI))"),
        )
        content = parse_formula("(P a)")
        that_term = parse_term("(that (P a))")
        base = dict(
            worlds=("w0",),
            accessibility=frozenset(),
            domain=("d0", "prop"),
            constants={"a": "d0", "b": "d0"},
            reified={reified_key(that_term, {}): "prop"},
        )
        agreeing = IntensionalModel(
            predicates={
                ("P", "w0"): frozenset({("d0",)}),
                ("correct", "w0"): frozenset({("prop",)}),
            },
            **base,
        )
        disagreeing = IntensionalModel(
            predicates={
                ("P", "w0"): frozenset({("d0",)}),
                ("correct", "w0"): frozenset(),
            },
            **base,
        )
        from elfol.schemas import InstanceBounds

        kb = self.kb(schemas=[schema])
        bounds = InstanceBounds(max_formula_instances=1)  # just PHI = (P a)
        assert model_satisfies(agreeing, kb, bounds=bounds) is True
        assert model_satisfies(disagreeing, kb, bounds=bounds) is False

    def test_axioms_checked_at_every_world_facts_at_w0(self):
        kb = self.kb(facts=[parse_formula("(P a)")])
        m = IntensionalModel(
            worlds=("w0", "w1"),
            accessibility=frozenset(),
            domain=("d0",),
            constants={"a": "d0", "b": "d0"},
            predicates={
                ("P", "w0"): frozenset({("d0",)}),
                ("P", "w1"): frozenset(),
            },
        )
        assert model_satisfies(m, kb) is True  # fact only needs w0
        kb2 = self.kb(axioms=[parse_formula("(P a)")])
        assert model_satisfies(m, kb2) is False  # axiom needs w1 too


class TestEnumeration:
    def test_counts_match_the_counting_oracle(self):
        ms = list(enumerate_models(2, 1, (("P", 1),)))
        assert len(ms) == 4 * 2  # 2^2 extensions x 2 accessibility subsets
        only_exts = {tuple(sorted(m.predicates[("P", "w0")])) for m in ms}
        assert len(only_exts) == 4

    def test_two_world_count(self):
        ms = list(enumerate_models(1, 2, (("P", 1),)))
        assert len(ms) == (2 ** 2) * (2 ** 4)  # extensions x accessibility
        assert model_count(1, 2, (("P", 1),), ()) == 64

    def test_degenerate_single_model(self):
        ms = list(enumerate_models(1, 1, ()))
        assert len(ms) == 2  # accessibility on one world: empty or reflexive
        assert model_count(1, 1, (), ()) == 2

    def test_ceiling_reports_count_formula(self):
        with pytest.raises(EnumerationError) as e:
            list(enumerate_models(4, 2, (("P", 2), ("Q", 2)), ceiling=10))
        assert "exceeds ceiling" in str(e.value)

    def test_deterministic_order(self):
        a = [dump_model(m) for m in enumerate_models(2, 1, (("P", 1),))]
        b = [dump_model(m) for m in enumerate_models(2, 1, (("P", 1),))]
        assert a == b


class TestFindCounterexample:
    def test_tautology_has_none(self):
        f = parse_formula("(implies (P a) (P a))")
        assert find_counterexample(f, SearchBounds(max_domain=3)) is None

    def test_conjunct_drop_with_downward_quantifier_refuted(self):
        f = parse_formula(
            "(implies (quant (fewer-than 2) ?x (P1 ?x) (and (P2 ?x) (P3 ?x)))"
            " (quant (fewer-than 2) ?x (P1 ?x) (P2 ?x)))"
        )
        cx = find_counterexample(f, SearchBounds(max_domain=4))
        assert cx is not None
        assert eval_formula(cx, cx.w0, {}, f) is False

    def test_requires_closed_formula(self):
        with pytest.raises(ValueError):
            find_counterexample(parse_formula("(P ?x)"))


class TestDumpParse:
    def test_round_trip(self):
        m = IntensionalModel(
            worlds=("w0", "w1"),
            accessibility=frozenset({("w0", "w1")}),
            domain=("d0", "d1"),
            constants={"a": "d0"},
            predicates={
                ("P", "w0"): frozenset({("d0",)}),
                ("P", "w1"): frozenset({("d0",), ("d1",)}),
            },
        )
        text = dump_model(m)
        back = parse_model(text)
        assert back.worlds == m.worlds
        assert back.accessibility == m.accessibility
        assert back.domain == m.domain
        assert back.predicates[("P", "w1")] == m.predicates[("P", "w1")]
        assert dump_model(back) == text

    def test_dump_is_stable(self):
        m = single_world()
        assert dump_model(m) == dump_model(m)

    def test_parse_rejects_non_injective_reification(self):
        text = (
            "(model (worlds w0) (acc) (domain d0)\n"
            "  (pred P (w0))\n"
            "  (reify (ka P) d0)\n"
            "  (reify (that (P d0)) d0))\n"
        )
        with pytest.raises(EnumerationError):
            parse_model(text)


# ---------------------------------------------------------------------------
# Semantic properties on random formulas and models


def random_models(rng, n):
    from itertools import product

    out = []
    preds = (("P", 1), ("Q", 1), ("R", 2))
    for _ in range(n):
        worlds = ("w0", "w1")[: rng.randint(1, 2)]
        domain = tuple(f"d{i}" for i in range(rng.randint(1, 3)))
        predicates = {}
        for name, arity in preds:
            for w in worlds:
                tuples = [t for t in product(domain, repeat=arity) if rng.random() < 0.5]
                predicates[(name, w)] = frozenset(tuples)
        acc = frozenset(
            (a, b) for a in worlds for b in worlds if rng.random() < 0.5
        )
        out.append(
            IntensionalModel(
                worlds=worlds,
                accessibility=acc,
                domain=domain,
                constants={c: domain[rng.randrange(len(domain))] for c in "abc"},
                predicates=predicates,
            )
        )
    return out


def test_eval_respects_alpha_equivalence(rng):
    g = AstGen(rng, reified=False, functions=False, modifiers=False)
    from elfol.core import RestrictedQuant, subst_map

    models = random_models(rng, 6)
    for _ in range(60):
        f = g.closed_formula(depth=2)
        g2 = _rename_bound(f)
        assert alpha_equivalent(f, g2)
        for m in models:
            assert eval_formula(m, m.w0, {}, f) == eval_formula(m, m.w0, {}, g2)


def _rename_bound(f, counter=[0]):
    from elfol.core import Lambda, RestrictedQuant, subst_map, Var

    match f:
        case RestrictedQuant(q, v, r, b):
            counter[0] += 1
            nv = f"rn{counter[0]}"
            return RestrictedQuant(
                q,
                nv,
                _rename_bound(subst_map(r, {v: Var(nv)})),
                _rename_bound(subst_map(b, {v: Var(nv)})),
            )
        case _:
            kids = getattr(f, "__dataclass_fields__", None)
            if kids is None:
                return f
            values = {}
            changed = False
            for name in kids:
                v = getattr(f, name)
                if hasattr(v, "__dataclass_fields__"):
                    nv = _rename_bound(v)
                    changed = changed or nv is not v
                    values[name] = nv
                else:
                    values[name] = v
            return type(f)(**values) if changed else f


def test_double_negation_demorgan_and_duality(rng):
    g = AstGen(rng, reified=False, functions=False, modifiers=False)
    models = random_models(rng, 5)
    for _ in range(50):
        a = g.closed_formula(depth=2)
        b = g.closed_formula(depth=1)
        checks = [
            (Not(Not(a)), a),
            (Not(And(a, b)), Or(Not(a), Not(b))),
            (Not(Or(a, b)), And(Not(a), Not(b))),
        ]
        for m in models:
            for w in m.worlds:
                for lhs, rhs in checks:
                    assert eval_formula(m, w, {}, lhs) == eval_formula(m, w, {}, rhs)
                # quantifier duality for all/some
                v1 = eval_formula(
                    m, w, {},
                    RestrictedQuant(QuantRef("all"), "qd", TrueF(), a),
                )
                v2 = eval_formula(
                    m, w, {},
                    Not(RestrictedQuant(QuantRef("some"), "qd", TrueF(), Not(a))),
                )
                assert v1 == v2


def test_modal_duality(rng):
    g = AstGen(rng, reified=False, functions=False, modifiers=False)
    models = random_models(rng, 5)
    for _ in range(40):
        f = g.closed_formula(depth=2)
        for m in models:
            for w in m.worlds:
                nec = eval_formula(m, w, {}, Modal(NECESSARILY, f))
                dual = eval_formula(m, w, {}, Not(Modal(POSSIBLY, Not(f))))
                assert nec == dual


def test_right_up_quantifiers_tolerate_conjunct_drop(rng):
    g = AstGen(rng, reified=False, functions=False, modifiers=False)
    models = random_models(rng, 4)
    right_up = [q for q in DEFAULT_REGISTRY.entries(3) if q.right == UP]
    for _ in range(25):
        r = g.formula(frozenset({"v"}), depth=0)
        b = g.formula(frozenset({"v"}), depth=0)
        c = g.formula(frozenset({"v"}), depth=0)
        for q in right_up:
            strong = RestrictedQuant(q.ref, "v", r, And(b, c))
            weak = RestrictedQuant(q.ref, "v", r, b)
            for m in models:
                for w in m.worlds:
                    if eval_formula(m, w, {}, strong):
                        assert eval_formula(m, w, {}, weak)
