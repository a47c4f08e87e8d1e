"""The bundled freight-planning knowledge base.

Ships as `.elf` files under `data/`: signature declarations, the lexical
axioms, the four axiom schemas, per-scenario fact sets, and the canonical
query suite. `load_bundle` parses and validates everything;
`witness_model` builds a finite intensional model satisfying the whole
bundle, used to certify joint satisfiability.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .. import syntax
from ..core import (
    Atom,
    Const,
    Formula,
    Ka,
    Lambda,
    PredConst,
    Signature,
    That,
    Var,
    free_vars,
    well_formed,
)
from ..kb import KbError, KnowledgeBase
from ..models import IntensionalModel, eval_formula, reified_key
from ..quantifiers import DEFAULT_REGISTRY, QuantRegistry
from ..schemas import InstanceBounds, Schema, ground_atoms, validate_schema

DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class QueryCase:
    name: str
    goal: Formula
    scenarios: tuple
    expect: str  # "provable" | "unprovable"
    max_lexical_steps: Optional[int]


@dataclass
class Bundle:
    signature: Signature
    registry: QuantRegistry
    axioms: list
    schemas: list
    scenarios: dict  # name -> list of facts
    queries: list  # QueryCase

    def kb_for(self, case: QueryCase) -> KnowledgeBase:
        facts = []
        for name in case.scenarios:
            facts.extend(self.scenarios[name])
        return KnowledgeBase(
            self.signature, facts, list(self.axioms), list(self.schemas),
            self.registry,
        )

    def full_kb(self) -> KnowledgeBase:
        facts = []
        for name in sorted(self.scenarios):
            facts.extend(self.scenarios[name])
        return KnowledgeBase(
            self.signature, facts, list(self.axioms), list(self.schemas),
            self.registry,
        )


def _parse_file(path: Path, sig: Signature) -> syntax.KbSource:
    src = syntax.KbSource(signature=sig)
    try:
        syntax.parse_kb(path.read_text(encoding="utf-8"), into=src)
    except syntax.ParseError as e:
        raise KbError(e.message, file=str(path), span=e.span) from e
    return src


def _check(kind: str, f: Formula, sig: Signature, path: Path, span) -> None:
    if free_vars(f):
        raise KbError(f"{kind} has free variables", str(path), span)
    diags = well_formed(f, sig)
    if diags:
        raise KbError(f"ill-formed {kind}: {diags[0]}", str(path), span)


def load_bundle(registry: Optional[QuantRegistry] = None) -> Bundle:
    """Parse and validate the shipped knowledge base and query suite."""
    registry = registry if registry is not None else DEFAULT_REGISTRY
    sig = Signature()
    core = _parse_file(DATA_DIR / "core.elf", sig)
    if core.axioms or core.facts or core.schemas:
        raise KbError("core.elf must contain declarations only")
    axioms_src = _parse_file(DATA_DIR / "axioms.elf", sig)
    schemas_src = _parse_file(DATA_DIR / "schemas.elf", sig)
    axioms = []
    for f, span in axioms_src.axioms:
        _check("axiom", f, sig, DATA_DIR / "axioms.elf", span)
        axioms.append(f)
    schemas = []
    for form in schemas_src.schemas:
        schema = Schema(
            form.name, form.pred_vars, form.formula_vars, form.quant_vars, form.body
        )
        problems = validate_schema(schema, sig)
        if problems:
            raise KbError(
                f"ill-formed schema {form.name}: {problems[0]}",
                str(DATA_DIR / "schemas.elf"),
                form.span,
            )
        schemas.append(schema)
    scenarios = {}
    for path in sorted(DATA_DIR.glob("scenario-*.elf")):
        src = _parse_file(path, sig)
        facts = []
        for f, span in src.facts:
            _check("fact", f, sig, path, span)
            facts.append(f)
        scenarios[path.stem] = facts
    queries = []
    qpath = DATA_DIR / "queries.elf"
    qsrc = _parse_file(qpath, sig)
    for form in qsrc.queries:
        _check("query goal", form.goal, sig, qpath, form.span)
        for name in form.scenarios:
            if name not in scenarios:
                raise KbError(
                    f"query {form.name} references unknown scenario {name}",
                    str(qpath),
                    form.span,
                )
        queries.append(
            QueryCase(
                form.name, form.goal, form.scenarios, form.expect,
                form.max_lexical_steps,
            )
        )
    if len(queries) < 6:
        raise KbError("query suite must hold at least six entries")
    return Bundle(sig, registry, axioms, schemas, scenarios, queries)


# ---------------------------------------------------------------------------
# The witness model


SEND_OFF_TYPE = Ka(
    Lambda(("x",), Atom(PredConst("send-off"), (Var("x"), Const("r1"))))
)


def witness_model(
    bundle: Bundle, bounds: Optional[InstanceBounds] = None
) -> IntensionalModel:
    """A finite model satisfying every axiom, every bounded schema instance,
    and every scenario fact of the bundle.

    Two worlds connected one way; three individuals double as the cities
    with juice factories and as the railcars (two of them tankers sitting
    in Elmira); the compatible action types are realized in the reachable
    world. The `correct` extension is computed from the truth values of the
    reified contents, and the `sounds` tables are full because nobody in
    the model ever considers anything.
    """
    bounds = bounds if bounds is not None else InstanceBounds()
    w0, w1 = "w0", "w1"
    worlds = (w0, w1)

    plain = [
        "b1", "f1", "i1", "i2", "i3", "ev-enter", "ev-none", "coll-cars",
        "coll-tie", "t1", "r1", "a1", "a2", "ev1", "tt", "p1",
    ]
    constants = {
        "b1": "b1", "f1": "f1", "cars": "coll-cars", "tie-coll": "coll-tie",
        "t1": "t1", "r1": "r1", "a1": "a1", "a2": "a2", "now": "tt",
        "two-pm": "tt", "p1": "p1", "t3": "t1", "src1": "f1",
    }
    functions = {
        "enter": ({("b1", "f1"): "ev-enter"}, "ev-none"),
        "end-of": ({}, "tt"),
    }

    # reified individuals: one per monadic predicate (kind/action types),
    # one for the bundled send-off action type, one per reified sentence
    # content we must interpret
    reified = {}
    reified_sources = {}
    reified_individuals = set()

    def reify(term, individual):
        key = reified_key(term, {})
        reified[key] = individual
        reified_sources[key] = term
        reified_individuals.add(individual)
        return individual

    sig = bundle.signature
    unary_preds = sorted(p for p, a in sig.predicates.items() if a == 1)
    kind_of = {}
    for p in unary_preds:
        kind_of[p] = reify(Ka(PredConst(p)), f"kind-{p}")
    do_send = reify(SEND_OFF_TYPE, "type-send-off")

    # sentence contents needed by schema instances and scenario facts
    content_atoms = ground_atoms(sig, bounds.max_formula_instances)
    content_of = {}
    for i, atom in enumerate(content_atoms):
        content_of[atom] = reify(That(atom), f"prop-{i + 1}")
    extra_contents = {}
    sources = [f for facts in bundle.scenarios.values() for f in facts]
    sources.extend(q.goal for q in bundle.queries)
    for f in sources:
        for t in _that_terms(f):
            key = reified_key(t, {})
            if key not in reified:
                label = f"prop-x{len(extra_contents) + 1}"
                extra_contents[key] = reify(t, label)

    domain = tuple(plain) + tuple(
        sorted(reified_individuals, key=lambda d: (len(d), d))
    )

    predicates = {}

    def uniform(pred, ext):
        for w in worlds:
            predicates[(pred, w)] = frozenset(ext)

    cities = ["i1", "i2", "i3"]
    uniform("city", {(c,) for c in cities})
    uniform("oj", {(c,) for c in cities})
    uniform("big", {(c,) for c in cities})
    uniform("car", {(c,) for c in cities})
    uniform("tanker", {("i1",), ("i2",)})
    uniform("in-elmira", {("i1",), ("i2",)})
    uniform(
        "member",
        {(c, "coll-cars") for c in cities} | {("i1", "coll-tie"), ("i2", "coll-tie")},
    )
    uniform("majority", {("coll-cars", "coll-tie")})
    uniform("result-state", {("ev-enter",)})
    uniform("contained-in", {("b1", "f1")})
    uniform("action-type", {("a1",), ("a2",)})
    predicates[("compatible-with", w0)] = frozenset({("a1", "a2")})
    predicates[("compatible-with", w1)] = frozenset()
    predicates[("realize", w0)] = frozenset()
    predicates[("realize", w1)] = frozenset({("ev1", "a1"), ("ev1", "a2")})
    uniform("person", set())
    uniform("consider", set())
    uniform("feel-that", set())
    uniform("reasonable", {("p1",)})
    uniform("reliable", {("p1",)})
    uniform("send-off", {("t1", "r1")})
    uniform("enough", {(kind_of["oranges"],)})
    uniform("fill-with", {("t1", kind_of["beer"])})
    uniform("source-of", {("f1", kind_of["oranges"])})
    uniform("beer", set())
    uniform("oranges", set())

    model = IntensionalModel(
        worlds=worlds,
        accessibility=frozenset({(w0, w1)}),
        domain=domain,
        constants=constants,
        predicates=predicates,
        functions=functions,
        reified=reified,
        reified_individuals=frozenset(reified_individuals),
        reified_sources=reified_sources,
    )

    # correct: a reified content is in the extension exactly where the
    # content itself is true
    for w in worlds:
        ext = set()
        for atom, ind in content_of.items():
            if eval_formula(model, w, {}, atom, bundle.registry):
                ext.add((ind,))
        for key, ind in extra_contents.items():
            content = reified_sources[key].body
            if eval_formula(model, w, {}, content, bundle.registry):
                ext.add((ind,))
        predicates[("correct", w)] = frozenset(ext)

    # graded attitudes: unconstrained by axioms; make the asserted ones true
    attitude_ext = {"probably": set(), "maybe": set()}
    for facts in bundle.scenarios.values():
        for f in facts:
            match f:
                case Atom(PredConst(pname), (That(_),)) if pname in attitude_ext:
                    attitude_ext[pname].add((reified[reified_key(f.args[0], {})],))
    for pname, ext in attitude_ext.items():
        uniform(pname, ext)

    # every monadic predicate sounds however you like: full extensions make
    # the modifier equivalence hold vacuously (nobody considers anything)
    modifiers = {}
    for p in unary_preds:
        for w in worlds:
            modifiers[("sounds", p, w)] = frozenset({(d,) for d in domain})
    model.modifiers = modifiers

    model.term_ops = {
        ("do", do_send, w0): frozenset({("t1",)}),
        ("do", do_send, w1): frozenset({("t1",)}),
    }
    return model


def _that_terms(f) -> list:
    out = []

    def walk(node):
        match node:
            case That(_):
                out.append(node)
            case Atom(pred, args):
                walk(pred)
                for a in args:
                    walk(a)
            case _:
                for attr in ("body", "left", "right", "restrictor", "base",
                             "arg", "pred"):
                    child = getattr(node, attr, None)
                    if child is not None and not isinstance(child, (str, tuple)):
                        walk(child)
                args = getattr(node, "args", None)
                if isinstance(args, tuple):
                    for a in args:
                        walk(a)

    walk(f)
    return out
