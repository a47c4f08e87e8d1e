"""Finite possible-worlds models and a total evaluator.

A model has a nonempty finite set of worlds with a designated current world,
an arbitrary accessibility relation, a constant domain of individuals (some
of which may be denotations of reified expressions), and a world-indexed
interpretation of predicates, modifiers, and term-derived operators.
Constants and functions are rigid (world-independent).

Reified terms denote through an injective table keyed by the term's
alpha-equivalence class together with the values of its free variables; a
missing entry rejects the model for that formula rather than defaulting to
false.

`enumerate_models` and `find_counterexample` drive bounded validity
checking by exhaustive search over small signatures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

from .core import (
    And,
    Atom,
    Const,
    Equal,
    Equiv,
    Formula,
    FunApp,
    Implies,
    Ka,
    Lambda,
    Modal,
    Modified,
    NECESSARILY,
    Not,
    Or,
    POSSIBLY,
    PredConst,
    RestrictedQuant,
    TermDerived,
    That,
    TrueF,
    Var,
    alpha_key,
    free_vars,
    free_vars_ordered,
)
from .quantifiers import DEFAULT_REGISTRY, QuantRegistry, UnknownQuantifierError
from .schemas import InstanceBounds, enumerate_instances


class EvalError(Exception):
    """The model cannot interpret the formula (not a truth value)."""


class ModelRejection(EvalError):
    """The model lacks a required reified-term denotation."""


@dataclass
class IntensionalModel:
    worlds: tuple  # world names; worlds[0] is the current world
    accessibility: frozenset  # pairs (w, w')
    domain: tuple  # individuals
    constants: dict = field(default_factory=dict)  # name -> individual
    predicates: dict = field(default_factory=dict)  # (name, world) -> set of tuples
    functions: dict = field(default_factory=dict)  # name -> (table dict, default)
    modifiers: dict = field(default_factory=dict)  # (mod, pred, world) -> set of tuples
    term_ops: dict = field(default_factory=dict)  # (op, individual, world) -> set
    reified: dict = field(default_factory=dict)  # (alpha key, env values) -> individual
    reified_individuals: frozenset = frozenset()
    reified_sources: dict = field(default_factory=dict)  # key -> source Term (closed)

    @property
    def w0(self):
        return self.worlds[0]

    def extension(self, pred: str, world) -> set:
        return self.predicates.get((pred, world), _EMPTY)


_EMPTY: frozenset = frozenset()


def reified_key(term, env: dict) -> tuple:
    names = free_vars_ordered(term)
    return (alpha_key(term), tuple(env[n] for n in names))


def eval_term(m: IntensionalModel, env: dict, term):
    match term:
        case Var(name):
            try:
                return env[name]
            except KeyError:
                raise EvalError(f"unbound variable ?{name}") from None
        case Const(name):
            try:
                return m.constants[name]
            except KeyError:
                raise EvalError(f"uninterpreted constant {name}") from None
        case FunApp(fn, args):
            vals = tuple(eval_term(m, env, a) for a in args)
            entry = m.functions.get(fn)
            if entry is None:
                raise EvalError(f"uninterpreted function {fn}")
            table, default = entry
            return table.get(vals, default)
        case Ka(_) | That(_):
            key = reified_key(term, env)
            try:
                return m.reified[key]
            except KeyError:
                raise ModelRejection(
                    f"no denotation for reified term class {key[0]}"
                ) from None
    raise EvalError(f"not a term: {term!r}")


def _atom_holds(m, w, env, pred, vals, registry) -> bool:
    match pred:
        case PredConst(name):
            return vals in m.extension(name, w)
        case Lambda(params, body):
            if len(params) != len(vals):
                raise EvalError("lambda arity mismatch")
            env2 = dict(env)
            env2.update(zip(params, vals))
            return eval_formula(m, w, env2, body, registry)
        case Modified(modifier, base):
            if not isinstance(base, PredConst):
                raise EvalError(
                    "modifiers apply to predicate constants in models"
                )
            return vals in m.modifiers.get((modifier, base.name, w), _EMPTY)
        case TermDerived(op, arg):
            ind = eval_term(m, env, arg)
            return vals in m.term_ops.get((op, ind, w), _EMPTY)
    raise EvalError(f"not a predicate expression: {pred!r}")


def eval_formula(
    m: IntensionalModel,
    w,
    env: dict,
    f: Formula,
    registry: Optional[QuantRegistry] = None,
) -> bool:
    registry = registry if registry is not None else DEFAULT_REGISTRY
    match f:
        case TrueF():
            return True
        case Atom(pred, args):
            vals = tuple(eval_term(m, env, a) for a in args)
            return _atom_holds(m, w, env, pred, vals, registry)
        case Equal(l, r):
            return eval_term(m, env, l) == eval_term(m, env, r)
        case Not(body):
            return not eval_formula(m, w, env, body, registry)
        case And(l, r):
            return eval_formula(m, w, env, l, registry) and eval_formula(
                m, w, env, r, registry
            )
        case Or(l, r):
            return eval_formula(m, w, env, l, registry) or eval_formula(
                m, w, env, r, registry
            )
        case Implies(l, r):
            return not eval_formula(m, w, env, l, registry) or eval_formula(
                m, w, env, r, registry
            )
        case Equiv(l, r):
            return eval_formula(m, w, env, l, registry) == eval_formula(
                m, w, env, r, registry
            )
        case RestrictedQuant(qref, var, restrictor, body):
            try:
                q = registry.resolve(qref)
            except UnknownQuantifierError as e:
                raise EvalError(str(e)) from None
            n_ab = 0
            n_anb = 0
            env2 = dict(env)
            for d in m.domain:
                env2[var] = d
                if eval_formula(m, w, env2, restrictor, registry):
                    if eval_formula(m, w, env2, body, registry):
                        n_ab += 1
                    else:
                        n_anb += 1
            return q.truth(n_ab, n_anb)
        case Modal(flavor, body):
            if flavor == POSSIBLY:
                return any(
                    (w, w2) in m.accessibility
                    and eval_formula(m, w2, env, body, registry)
                    for w2 in m.worlds
                )
            if flavor == NECESSARILY:
                return all(
                    (w, w2) not in m.accessibility
                    or eval_formula(m, w2, env, body, registry)
                    for w2 in m.worlds
                )
            raise EvalError(f"unknown modal flavor {flavor}")
    raise EvalError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Knowledge-base satisfaction


def model_satisfies(
    m: IntensionalModel,
    kb,
    registry: Optional[QuantRegistry] = None,
    bounds: Optional[InstanceBounds] = None,
) -> bool:
    """True iff every axiom and every bounded schema instance holds at every
    world, and every fact holds at the current world."""
    registry = registry if registry is not None else getattr(
        kb, "registry", DEFAULT_REGISTRY
    )
    for axiom in kb.axioms:
        for w in m.worlds:
            if not eval_formula(m, w, {}, axiom, registry):
                return False
    for schema in kb.schemas:
        for inst in enumerate_instances(schema, kb.signature, registry, bounds):
            for w in m.worlds:
                if not eval_formula(m, w, {}, inst, registry):
                    return False
    for fact in kb.facts:
        if not eval_formula(m, m.w0, {}, fact, registry):
            return False
    return True


# ---------------------------------------------------------------------------
# Bounded enumeration


class EnumerationError(Exception):
    pass


@dataclass(frozen=True)
class SearchBounds:
    max_domain: int = 4
    max_worlds: int = 1
    predicates: Optional[tuple] = None  # (name, arity) pairs; inferred if None
    constants: Optional[tuple] = None
    ceiling: int = 2_000_000


def model_count(domain_size, world_count, predicates, constants) -> int:
    count = 2 ** (world_count * world_count)
    for _, arity in predicates:
        count *= 2 ** ((domain_size ** arity) * world_count)
    count *= domain_size ** len(constants)
    return count


def enumerate_models(
    domain_size: int,
    world_count: int,
    predicates,
    constants=(),
    ceiling: int = 2_000_000,
):
    """Every model with exactly these sizes over the given predicate list,
    in a fixed deterministic order."""
    predicates = tuple(predicates)
    constants = tuple(constants)
    count = model_count(domain_size, world_count, predicates, constants)
    if count > ceiling:
        parts = [f"2^{world_count * world_count}"]
        for name, arity in predicates:
            parts.append(f"2^({domain_size}^{arity}*{world_count})")
        if constants:
            parts.append(f"{domain_size}^{len(constants)}")
        raise EnumerationError(
            f"model count {' * '.join(parts)} = {count} exceeds ceiling {ceiling}"
        )
    worlds = tuple(f"w{i}" for i in range(world_count))
    domain = tuple(f"d{i}" for i in range(domain_size))
    world_pairs = tuple(product(worlds, repeat=2))
    acc_options = list(_all_subsets(world_pairs))
    ext_keys = []
    ext_options = []
    for name, arity in predicates:
        tuples = tuple(product(domain, repeat=arity))
        for w in worlds:
            ext_keys.append((name, w))
            ext_options.append(list(_all_subsets(tuples)))
    const_options = [domain] * len(constants)
    for acc in acc_options:
        for exts in product(*ext_options):
            for cvals in product(*const_options):
                yield IntensionalModel(
                    worlds=worlds,
                    accessibility=frozenset(acc),
                    domain=domain,
                    constants=dict(zip(constants, cvals)),
                    predicates={
                        k: frozenset(e) for k, e in zip(ext_keys, exts)
                    },
                )


def _all_subsets(items: tuple):
    n = len(items)
    for mask in range(2 ** n):
        yield tuple(items[i] for i in range(n) if mask & (1 << i))


def formula_vocabulary(f: Formula):
    """(predicates, constants) mentioned by a formula; raises if the formula
    uses constructs outside the enumerable fragment."""
    preds: dict = {}
    consts: list = []

    def walk(node):
        match node:
            case Atom(PredConst(name), args):
                arity = len(args)
                if preds.get(name, arity) != arity:
                    raise EnumerationError(f"predicate {name} used at mixed arities")
                preds[name] = arity
                for a in args:
                    walk(a)
            case Atom(_, _):
                raise EnumerationError(
                    "model enumeration covers predicate-constant atoms only"
                )
            case Var(_) | TrueF():
                pass
            case Const(name):
                if name not in consts:
                    consts.append(name)
            case FunApp(_, _) | Ka(_) | That(_):
                raise EnumerationError(
                    "model enumeration covers function-free formulas only"
                )
            case Equal(l, r):
                walk(l)
                walk(r)
            case Not(b) | Modal(_, b):
                walk(b)
            case And(l, r) | Or(l, r) | Implies(l, r) | Equiv(l, r):
                walk(l)
                walk(r)
            case RestrictedQuant(_, _, r, b):
                walk(r)
                walk(b)
            case _:
                raise EnumerationError(f"unsupported node {node!r}")

    walk(f)
    return tuple(sorted(preds.items())), tuple(consts)


def find_counterexample(
    f: Formula,
    bounds: Optional[SearchBounds] = None,
    registry: Optional[QuantRegistry] = None,
) -> Optional[IntensionalModel]:
    """First enumerated model falsifying the closed formula f at the current
    world, or None if f holds in every model within bounds."""
    if free_vars(f):
        raise ValueError("find_counterexample requires a closed formula")
    bounds = bounds if bounds is not None else SearchBounds()
    registry = registry if registry is not None else DEFAULT_REGISTRY
    if bounds.predicates is None or bounds.constants is None:
        preds, consts = formula_vocabulary(f)
    if bounds.predicates is not None:
        preds = tuple(bounds.predicates)
    if bounds.constants is not None:
        consts = tuple(bounds.constants)
    for world_count in range(1, bounds.max_worlds + 1):
        for domain_size in range(1, bounds.max_domain + 1):
            for m in enumerate_models(
                domain_size, world_count, preds, consts, bounds.ceiling
            ):
                if not eval_formula(m, m.w0, {}, f, registry):
                    return m
    return None


# ---------------------------------------------------------------------------
# Textual model format (dump is re-parsable)


def dump_model(m: IntensionalModel) -> str:
    """Stable, diffable s-expression listing of a model."""
    lines = ["(model"]
    lines.append("  (worlds " + " ".join(m.worlds) + ")")
    acc = sorted(m.accessibility)
    lines.append(
        "  (acc" + "".join(f" ({a} {b})" for a, b in acc) + ")"
    )
    lines.append("  (domain " + " ".join(str(d) for d in m.domain) + ")")
    if m.reified_individuals:
        listed = [d for d in m.domain if d in m.reified_individuals]
        lines.append("  (reified-domain " + " ".join(str(d) for d in listed) + ")")
    for name in sorted(m.constants):
        lines.append(f"  (const {name} {m.constants[name]})")
    pred_names = sorted({name for name, _ in m.predicates})
    for name in pred_names:
        chunks = []
        for w in m.worlds:
            ext = sorted(m.predicates.get((name, w), ()))
            inner = "".join(" (" + " ".join(str(x) for x in t) + ")" for t in ext)
            chunks.append(f"({w}{inner})")
        lines.append(f"  (pred {name} " + " ".join(chunks) + ")")
    for fn in sorted(m.functions):
        table, default = m.functions[fn]
        entries = "".join(
            " ((" + " ".join(str(x) for x in args) + f") {val})"
            for args, val in sorted(table.items())
        )
        lines.append(f"  (fn {fn} (default {default}){entries})")
    mod_keys = sorted({(mo, p) for mo, p, _ in m.modifiers})
    for mo, p in mod_keys:
        chunks = []
        for w in m.worlds:
            ext = sorted(m.modifiers.get((mo, p, w), ()))
            inner = "".join(" (" + " ".join(str(x) for x in t) + ")" for t in ext)
            chunks.append(f"({w}{inner})")
        lines.append(f"  (mod {mo} {p} " + " ".join(chunks) + ")")
    op_names = sorted({op for op, _, _ in m.term_ops})
    for op in op_names:
        chunks = []
        for w in m.worlds:
            entries = sorted(
                (ind, tuple(sorted(ext)))
                for (o, ind, ww), ext in m.term_ops.items()
                if o == op and ww == w
            )
            inner = ""
            for ind, ext in entries:
                tuples = "".join(
                    " (" + " ".join(str(x) for x in t) + ")" for t in ext
                )
                inner += f" ({ind}{tuples})"
            chunks.append(f"({w}{inner})")
        lines.append(f"  (op {op} " + " ".join(chunks) + ")")
    for key in sorted(m.reified_sources, key=lambda k: (k[0], str(k[1]))):
        if key[1] == () and key in m.reified:
            from .syntax import render

            lines.append(f"  (reify {render(m.reified_sources[key])} {m.reified[key]})")
    lines.append(")")
    return "\n".join(lines)


def parse_model(text: str) -> IntensionalModel:
    """Parse the model file format used by the eval subcommand.

    Reified entries are written with the surface term, e.g.
    ``(reify (ka city) r0)``.
    """
    from . import syntax

    p = syntax._Parser(text)
    p.expect("(")
    head = p.expect_symbol("model")
    if head.text != "model":
        p.fail("expected (model ...)", span=head.span)
    worlds: list = []
    acc: list = []
    domain: list = []
    reified_dom: list = []
    constants: dict = {}
    predicates: dict = {}
    functions: dict = {}
    modifiers: dict = {}
    term_ops: dict = {}
    reified: dict = {}
    reified_sources: dict = {}

    def symbols_until_close():
        out = []
        while p.peek() is not None and p.peek().kind in ("symbol", "int"):
            out.append(p.next().text)
        p.expect(")")
        return out

    def tuple_list():
        out = []
        while p.peek() is not None and p.peek().kind == "(":
            p.next()
            out.append(tuple(symbols_until_close()))
        return out

    while p.peek() is not None and p.peek().kind == "(":
        p.next()
        kind = p.expect_symbol("model section").text
        if kind == "worlds":
            worlds = symbols_until_close()
        elif kind == "acc":
            acc = tuple_list()
            p.expect(")")
        elif kind == "domain":
            domain = symbols_until_close()
        elif kind == "reified-domain":
            reified_dom = symbols_until_close()
        elif kind == "const":
            name = p.expect_symbol().text
            val = p.expect_symbol().text
            constants[name] = val
            p.expect(")")
        elif kind == "pred":
            name = p.expect_symbol().text
            while p.peek() is not None and p.peek().kind == "(":
                p.next()
                w = p.expect_symbol("world").text
                predicates[(name, w)] = frozenset(tuple_list())
                p.expect(")")
            p.expect(")")
        elif kind == "fn":
            name = p.expect_symbol().text
            table: dict = {}
            default = None
            while p.peek() is not None and p.peek().kind == "(":
                p.next()
                tok = p.peek()
                if tok.kind == "symbol" and tok.text == "default":
                    p.next()
                    default = p.expect_symbol().text
                    p.expect(")")
                else:
                    p.expect("(")
                    args = tuple(symbols_until_close())
                    val = p.expect_symbol().text
                    p.expect(")")
                    table[args] = val
            if default is None:
                p.fail(f"function {name} needs a (default ...) entry")
            functions[name] = (table, default)
            p.expect(")")
        elif kind == "mod":
            mo = p.expect_symbol().text
            base = p.expect_symbol().text
            while p.peek() is not None and p.peek().kind == "(":
                p.next()
                w = p.expect_symbol("world").text
                modifiers[(mo, base, w)] = frozenset(tuple_list())
                p.expect(")")
            p.expect(")")
        elif kind == "op":
            op = p.expect_symbol().text
            while p.peek() is not None and p.peek().kind == "(":
                p.next()
                w = p.expect_symbol("world").text
                while p.peek() is not None and p.peek().kind == "(":
                    p.next()
                    ind = p.expect_symbol().text
                    term_ops[(op, ind, w)] = frozenset(tuple_list())
                    p.expect(")")
                p.expect(")")
            p.expect(")")
        elif kind == "reify":
            term = p.term()
            ind = p.expect_symbol().text
            key = reified_key(term, {})
            reified[key] = ind
            reified_sources[key] = term
            p.expect(")")
        else:
            p.fail(f"unknown model section {kind!r}")
    p.expect(")")
    if not p.at_end():
        p.fail("trailing input after model")
    if not worlds:
        raise EnumerationError("model needs at least one world")
    if not domain:
        raise EnumerationError("model needs a nonempty domain")
    if len(set(reified.values())) != len(reified):
        raise EnumerationError(
            "reified denotation must be injective on term classes"
        )
    return IntensionalModel(
        worlds=tuple(worlds),
        accessibility=frozenset((a, b) for a, b in acc),
        domain=tuple(domain),
        constants=constants,
        predicates=predicates,
        functions=functions,
        modifiers=modifiers,
        term_ops=term_ops,
        reified=reified,
        reified_individuals=frozenset(reified_dom),
        reified_sources=reified_sources,
    )
