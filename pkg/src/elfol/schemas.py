"""Axiom schemas: templates quantifying over predicates, closed formulas,
and quantifier classes.

A schema body is an ordinary formula in which declared metavariables stand
in for predicate expressions (written as predicate names), closed formulas
(written as zero-argument atoms), or quantifier symbols. Instantiation
replaces metavariables and beta-reduces lambda bindings at application
sites. Goal-directed matching is restricted to the pattern fragment: a
predicate metavariable is solved only where the template applies it to
distinct variables, by abstracting the goal over chosen argument terms.
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
    Not,
    Or,
    PredConst,
    PredExpr,
    QuantRef,
    RestrictedQuant,
    Signature,
    Term,
    TermDerived,
    That,
    TrueF,
    Var,
    alpha_equivalent,
    alpha_key,
    free_vars,
    strip_universals,
    subst_map,
)
from .quantifiers import DOWN, UP, QuantRegistry, UnknownQuantifierError


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class Schema:
    name: str
    pred_metavars: tuple  # (name, arity) pairs
    formula_metavars: tuple  # names
    quant_metavars: tuple  # (name, constraint) pairs; constraint right-up/right-down/any
    body: Formula

    @property
    def pred_arities(self) -> dict:
        return dict(self.pred_metavars)

    @property
    def quant_constraints(self) -> dict:
        return dict(self.quant_metavars)

    def metavar_names(self) -> set:
        return (
            {n for n, _ in self.pred_metavars}
            | set(self.formula_metavars)
            | {n for n, _ in self.quant_metavars}
        )


def validate_schema(s: Schema, sig: Signature) -> list:
    """Structural problems with a schema over sig, as strings."""
    problems = []
    names = [n for n, _ in s.pred_metavars] + list(s.formula_metavars) + [
        n for n, _ in s.quant_metavars
    ]
    if len(set(names)) != len(names):
        problems.append("duplicate metavariable names")
    clash = set(names) & sig.all_names()
    if clash:
        problems.append(f"metavariables shadow declared symbols: {sorted(clash)}")
    preds = s.pred_arities
    fvs = set(s.formula_metavars)

    def walk(node, path):
        match node:
            case Atom(PredConst(name), args) if name in preds:
                if len(args) != preds[name]:
                    problems.append(
                        f"{path}: metavariable {name} used at arity {len(args)}, "
                        f"declared {preds[name]}"
                    )
                for a in args:
                    walk(a, path)
            case Atom(PredConst(name), args) if name in fvs:
                if args:
                    problems.append(
                        f"{path}: formula metavariable {name} takes no arguments"
                    )
            case Atom(pred, args):
                walk(pred, path)
                for a in args:
                    walk(a, path)
            case Modified(_, base) | Ka(base):
                walk(base, path)
            case PredConst(name):
                if name in fvs:
                    problems.append(
                        f"{path}: formula metavariable {name} in predicate position"
                    )
            case TermDerived(_, arg):
                walk(arg, path)
            case FunApp(_, args):
                for a in args:
                    walk(a, path)
            case That(body) | Not(body) | Modal(_, body) | Lambda(_, body):
                walk(body, path)
            case And(l, r) | Or(l, r) | Implies(l, r) | Equiv(l, r):
                walk(l, path)
                walk(r, path)
            case Equal(l, r):
                walk(l, path)
                walk(r, path)
            case RestrictedQuant(q, _, restrictor, body):
                if q.name in preds or q.name in fvs:
                    problems.append(
                        f"{path}: {q.name} is not a quantifier metavariable"
                    )
                walk(restrictor, path)
                walk(body, path)
            case _:
                pass

    walk(s.body, "body")
    return problems


# ---------------------------------------------------------------------------
# Instantiation


def _quant_ok(constraint: str, ref: QuantRef, registry: QuantRegistry) -> bool:
    try:
        q = registry.resolve(ref)
    except UnknownQuantifierError:
        return False
    if constraint == "right-up":
        return q.right == UP
    if constraint == "right-down":
        return q.right == DOWN
    return True


def beta_reduce(lam: Lambda, args) -> Formula:
    if len(lam.params) != len(args):
        raise SchemaError(
            f"lambda of arity {len(lam.params)} applied to {len(args)} arguments"
        )
    return subst_map(lam.body, dict(zip(lam.params, args)))


def instantiate(s: Schema, binding: dict, registry: QuantRegistry) -> Formula:
    """Replace metavariables by their bindings; beta-reduce lambda bindings.

    The binding must be total and satisfy the schema's quantifier
    constraints; predicate bindings must match declared arities.
    """
    missing = s.metavar_names() - set(binding)
    if missing:
        raise SchemaError(f"binding is missing metavariables: {sorted(missing)}")
    preds = s.pred_arities
    for name, arity in s.pred_metavars:
        val = binding[name]
        if isinstance(val, Lambda) and len(val.params) != arity:
            raise SchemaError(f"{name} bound to lambda of wrong arity")
    for name, constraint in s.quant_metavars:
        ref = binding[name]
        if not isinstance(ref, QuantRef):
            raise SchemaError(f"{name} must be bound to a quantifier")
        if not _quant_ok(constraint, ref, registry):
            raise SchemaError(
                f"{name} bound to {ref.name}, which violates constraint {constraint}"
            )
    for name in s.formula_metavars:
        val = binding[name]
        if free_vars(val):
            raise SchemaError(f"{name} must be bound to a closed formula")

    fvs = set(s.formula_metavars)

    def walk(node):
        match node:
            case Atom(PredConst(name), args) if name in preds:
                val = binding[name]
                new_args = tuple(walk(a) for a in args)
                if isinstance(val, Lambda):
                    return beta_reduce(val, new_args)
                return Atom(val, new_args)
            case Atom(PredConst(name), ()) if name in fvs:
                return binding[name]
            case Atom(pred, args):
                return Atom(walk(pred), tuple(walk(a) for a in args))
            case PredConst(name) if name in preds:
                return binding[name]
            case Modified(m, base):
                return Modified(m, walk(base))
            case Ka(pred):
                return Ka(walk(pred))
            case That(body):
                return That(walk(body))
            case TermDerived(op, arg):
                return TermDerived(op, walk(arg))
            case FunApp(fn, args):
                return FunApp(fn, tuple(walk(a) for a in args))
            case Var(_) | Const(_) | TrueF() | PredConst(_):
                return node
            case Equal(l, r):
                return Equal(walk(l), walk(r))
            case Not(body):
                return Not(walk(body))
            case And(l, r):
                return And(walk(l), walk(r))
            case Or(l, r):
                return Or(walk(l), walk(r))
            case Implies(l, r):
                return Implies(walk(l), walk(r))
            case Equiv(l, r):
                return Equiv(walk(l), walk(r))
            case RestrictedQuant(q, var, restrictor, body):
                q2 = binding[q.name] if q.name in binding else q
                return RestrictedQuant(q2, var, walk(restrictor), walk(body))
            case Modal(fl, body):
                return Modal(fl, walk(body))
        raise SchemaError(f"cannot instantiate node {node!r}")

    return walk(s.body)


# ---------------------------------------------------------------------------
# Goal-directed matching (pattern fragment)


@dataclass
class _MatchState:
    metas: dict = field(default_factory=dict)  # metavar -> PredExpr|Formula|QuantRef
    fo: dict = field(default_factory=dict)  # stripped universal var -> Term
    pairs: tuple = ()  # (template bound var, goal bound var) pairs

    def child(self, **updates) -> "_MatchState":
        st = _MatchState(dict(self.metas), dict(self.fo), self.pairs)
        for k, v in updates.items():
            setattr(st, k, v)
        return st


def _subterms_in_order(node, out: list, seen: set) -> None:
    """Closed terms appearing in the goal, in discovery order."""

    def note(t):
        if not free_vars(t):
            k = alpha_key(t)
            if k not in seen:
                seen.add(k)
                out.append(t)

    match node:
        case Var(_) | Const(_):
            note(node)
        case FunApp(_, args):
            note(node)
            for a in args:
                _subterms_in_order(a, out, seen)
        case Ka(_) | That(_):
            note(node)
        case Atom(pred, args):
            _subterms_in_order(pred, out, seen)
            for a in args:
                _subterms_in_order(a, out, seen)
        case Modified(_, base):
            _subterms_in_order(base, out, seen)
        case TermDerived(_, arg):
            _subterms_in_order(arg, out, seen)
        case PredConst(_) | TrueF():
            pass
        case Equal(l, r):
            _subterms_in_order(l, out, seen)
            _subterms_in_order(r, out, seen)
        case Not(b) | Modal(_, b) | Lambda(_, b):
            _subterms_in_order(b, out, seen)
        case And(l, r) | Or(l, r) | Implies(l, r) | Equiv(l, r):
            _subterms_in_order(l, out, seen)
            _subterms_in_order(r, out, seen)
        case RestrictedQuant(_, _, r, b):
            _subterms_in_order(r, out, seen)
            _subterms_in_order(b, out, seen)


def _replace_term(node, target: Term, replacement: Term):
    """Replace alpha-equal occurrences of a closed term."""
    if isinstance(node, (Var, Const, FunApp, Ka, That)) and alpha_equivalent(
        node, target
    ):
        return replacement
    match node:
        case Var(_) | Const(_) | PredConst(_) | TrueF():
            return node
        case FunApp(fn, args):
            return FunApp(fn, tuple(_replace_term(a, target, replacement) for a in args))
        case Ka(p):
            return Ka(_replace_term(p, target, replacement))
        case That(b):
            return That(_replace_term(b, target, replacement))
        case Lambda(ps, b):
            return Lambda(ps, _replace_term(b, target, replacement))
        case Modified(m, base):
            return Modified(m, _replace_term(base, target, replacement))
        case TermDerived(op, arg):
            return TermDerived(op, _replace_term(arg, target, replacement))
        case Atom(p, args):
            return Atom(
                _replace_term(p, target, replacement),
                tuple(_replace_term(a, target, replacement) for a in args),
            )
        case Equal(l, r):
            return Equal(
                _replace_term(l, target, replacement),
                _replace_term(r, target, replacement),
            )
        case Not(b):
            return Not(_replace_term(b, target, replacement))
        case And(l, r):
            return And(
                _replace_term(l, target, replacement),
                _replace_term(r, target, replacement),
            )
        case Or(l, r):
            return Or(
                _replace_term(l, target, replacement),
                _replace_term(r, target, replacement),
            )
        case Implies(l, r):
            return Implies(
                _replace_term(l, target, replacement),
                _replace_term(r, target, replacement),
            )
        case Equiv(l, r):
            return Equiv(
                _replace_term(l, target, replacement),
                _replace_term(r, target, replacement),
            )
        case RestrictedQuant(q, v, rst, b):
            return RestrictedQuant(
                q,
                v,
                _replace_term(rst, target, replacement),
                _replace_term(b, target, replacement),
            )
        case Modal(fl, b):
            return Modal(fl, _replace_term(b, target, replacement))
    raise TypeError(f"cannot walk {node!r}")


def _eta(value: PredExpr) -> PredExpr:
    """lambda (?u...) (P ?u...) collapses to P.

    Not applied when P is itself a lambda: re-applying the collapsed value
    would beta-reduce one step further than the goal it was read off."""
    if isinstance(value, Lambda) and isinstance(value.body, Atom):
        body = value.body
        if (
            not isinstance(body.pred, Lambda)
            and len(body.args) == len(value.params)
            and all(
                isinstance(a, Var) and a.name == p
                for a, p in zip(body.args, value.params)
            )
            and not (free_vars(body.pred) & set(value.params))
        ):
            return body.pred
    return value


class _Matcher:
    def __init__(self, schema: Schema, registry: QuantRegistry, universals):
        self.schema = schema
        self.registry = registry
        self.universals = set(universals)
        self.pred_arities = schema.pred_arities
        self.formula_mvs = set(schema.formula_metavars)
        self.quant_constraints = schema.quant_constraints

    # Each match_* returns a list of updated states.

    def formula(self, template, goal, st: _MatchState) -> list:
        # predicate-metavar application: abstraction solving
        if isinstance(template, Atom) and isinstance(template.pred, PredConst):
            name = template.pred.name
            if name in self.pred_arities:
                return self._solve_pred_application(name, template.args, goal, st)
            if name in self.formula_mvs:
                if free_vars(goal):
                    return []  # formula metavars range over closed formulas
                if name in st.metas:
                    return [st] if alpha_equivalent(st.metas[name], goal) else []
                st2 = st.child()
                st2.metas[name] = goal
                return [st2]
        if type(template) is not type(goal):
            return []
        match template, goal:
            case TrueF(), TrueF():
                return [st]
            case Atom(p1, a1), Atom(p2, a2):
                if len(a1) != len(a2):
                    return []
                states = self.predexpr(p1, p2, st)
                for x, y in zip(a1, a2):
                    states = [s2 for s in states for s2 in self.term(x, y, s)]
                return states
            case Equal(l1, r1), Equal(l2, r2):
                states = self.term(l1, l2, st)
                return [s2 for s in states for s2 in self.term(r1, r2, s)]
            case Not(b1), Not(b2):
                return self.formula(b1, b2, st)
            case (And(l1, r1), And(l2, r2)) | (Or(l1, r1), Or(l2, r2)) | (
                Implies(l1, r1),
                Implies(l2, r2),
            ) | (Equiv(l1, r1), Equiv(l2, r2)):
                states = self.formula(l1, l2, st)
                return [s2 for s in states for s2 in self.formula(r1, r2, s)]
            case Modal(f1, b1), Modal(f2, b2):
                return self.formula(b1, b2, st) if f1 == f2 else []
            case RestrictedQuant(q1, v1, r1, b1), RestrictedQuant(q2, v2, r2, b2):
                states = self._quant(q1, q2, st)
                states = [s.child(pairs=s.pairs + ((v1, v2),)) for s in states]
                states = [s2 for s in states for s2 in self.formula(r1, r2, s)]
                return [s2 for s in states for s2 in self.formula(b1, b2, s)]
        return []

    def _quant(self, q1: QuantRef, q2: QuantRef, st: _MatchState) -> list:
        if q1.name in self.quant_constraints:
            if not _quant_ok(self.quant_constraints[q1.name], q2, self.registry):
                return []
            if q1.name in st.metas:
                return [st] if st.metas[q1.name] == q2 else []
            st2 = st.child()
            st2.metas[q1.name] = q2
            return [st2]
        return [st] if q1 == q2 else []

    def predexpr(self, template, goal, st: _MatchState) -> list:
        if isinstance(template, PredConst) and template.name in self.pred_arities:
            name = template.name
            if free_vars(goal):
                return []
            if name in st.metas:
                return [st] if alpha_equivalent(st.metas[name], goal) else []
            st2 = st.child()
            st2.metas[name] = goal
            return [st2]
        if type(template) is not type(goal):
            return []
        match template, goal:
            case PredConst(n1), PredConst(n2):
                return [st] if n1 == n2 else []
            case Modified(m1, b1), Modified(m2, b2):
                return self.predexpr(b1, b2, st) if m1 == m2 else []
            case TermDerived(o1, t1), TermDerived(o2, t2):
                return self.term(t1, t2, st) if o1 == o2 else []
            case Lambda(p1, b1), Lambda(p2, b2):
                if len(p1) != len(p2):
                    return []
                st2 = st.child(pairs=st.pairs + tuple(zip(p1, p2)))
                return self.formula(b1, b2, st2)
        return []

    def term(self, template, goal, st: _MatchState) -> list:
        match template:
            case Var(x):
                paired = dict(st.pairs)
                if x in paired:
                    return (
                        [st]
                        if isinstance(goal, Var) and goal.name == paired[x]
                        else []
                    )
                if x in self.universals:
                    if x in st.fo:
                        return [st] if alpha_equivalent(st.fo[x], goal) else []
                    if free_vars(goal) - {g for _, g in st.pairs}:
                        return []
                    st2 = st.child()
                    st2.fo[x] = goal
                    return [st2]
                return [st] if isinstance(goal, Var) and goal.name == x else []
            case Const(n1):
                return [st] if isinstance(goal, Const) and goal.name == n1 else []
            case FunApp(f1, a1):
                if not isinstance(goal, FunApp) or goal.fn != f1:
                    return []
                if len(a1) != len(goal.args):
                    return []
                states = [st]
                for x, y in zip(a1, goal.args):
                    states = [s2 for s in states for s2 in self.term(x, y, s)]
                return states
            case Ka(p1):
                return self.predexpr(p1, goal.pred, st) if isinstance(goal, Ka) else []
            case That(b1):
                return self.formula(b1, goal.body, st) if isinstance(goal, That) else []
        return []

    def _solve_pred_application(self, name, args, goal, st: _MatchState) -> list:
        """Match M(x1..xk) against a goal formula by abstraction."""
        arity = self.pred_arities[name]
        if len(args) != arity:
            return []
        argnames = []
        for a in args:
            if not isinstance(a, Var):
                return []  # outside the pattern fragment
            argnames.append(a.name)
        if len(set(argnames)) != len(argnames):
            return []
        paired = dict(st.pairs)
        params = tuple(f"u{i}" for i in range(arity))

        def finish(abstracted, st2) -> list:
            leaked = free_vars(abstracted) - set(params)
            if leaked:
                return []
            value = _eta(Lambda(params, abstracted))
            if name in st2.metas:
                return [st2] if alpha_equivalent(st2.metas[name], value) else []
            st3 = st2.child()
            st3.metas[name] = value
            return [st3]

        def solve(i, current, st2) -> list:
            if i == arity:
                return finish(current, st2)
            x = argnames[i]
            u = Var(params[i])
            if x in paired:
                replaced = subst_map(current, {paired[x]: u})
                return solve(i + 1, replaced, st2)
            if x in self.universals:
                if x in st2.fo:
                    t = st2.fo[x]
                    return solve(i + 1, _replace_term(current, t, u), st2)
                out = []
                candidates: list = []
                _subterms_in_order(current, candidates, set())
                for t in candidates:
                    st3 = st2.child()
                    st3.fo[x] = t
                    out.extend(solve(i + 1, _replace_term(current, t, u), st3))
                return out
            return []

        return solve(0, goal, st)


def match_conclusion(
    s: Schema, goal: Formula, registry: QuantRegistry
) -> list:
    """All metavariable bindings under which the schema's conclusion matches.

    The conclusion position is the consequent of a top-level implication, or
    either side of a top-level equivalence, after stripping outer universal
    quantifiers. Bindings may be partial: metavariables occurring only in
    premise positions are left unbound. Returns a list of dicts, each
    augmented with a "_universals" entry mapping stripped universal
    variables to the terms instantiating them (where determined).
    """
    universals, matrix = strip_universals(s.body)
    if isinstance(matrix, Implies):
        positions = [("consequent", matrix.right)]
    elif isinstance(matrix, Equiv):
        positions = [("left", matrix.left), ("right", matrix.right)]
    else:
        positions = [("body", matrix)]
    matcher = _Matcher(s, registry, universals)
    out = []
    seen = set()
    for label, template in positions:
        for st in matcher.formula(template, goal, _MatchState()):
            binding = dict(st.metas)
            binding["_universals"] = dict(st.fo)
            binding["_position"] = label
            key = _binding_key(binding)
            if key not in seen:
                seen.add(key)
                out.append(binding)
    return out


def _binding_key(binding: dict) -> str:
    parts = []
    for k in sorted(binding):
        v = binding[k]
        if k == "_universals":
            inner = ",".join(
                f"{n}={alpha_key(t)}" for n, t in sorted(v.items())
            )
            parts.append(f"_u:{inner}")
        elif k == "_position":
            parts.append(f"_p:{v}")
        elif isinstance(v, QuantRef):
            parts.append(f"{k}=q:{v.name}:{v.param}")
        else:
            parts.append(f"{k}={alpha_key(v)}")
    return "|".join(parts)


def binding_total(s: Schema, binding: dict) -> bool:
    return s.metavar_names() <= set(binding)


# ---------------------------------------------------------------------------
# Bounded enumeration of instances


@dataclass(frozen=True)
class InstanceBounds:
    max_quant_param: int = 3
    max_formula_instances: int = 12
    ceiling: int = 100_000


class EnumerationCeiling(Exception):
    def __init__(self, count_formula: str, count: int, ceiling: int):
        self.count = count
        super().__init__(
            f"instance count {count_formula} = {count} exceeds ceiling {ceiling}"
        )


def ground_atoms(sig: Signature, limit: int) -> list:
    """The first `limit` ground atoms over declared constants, deterministic."""
    out = []
    consts = sorted(sig.constants)
    for pname in sorted(sig.predicates):
        arity = sig.predicates[pname]
        if arity == 0:
            out.append(Atom(PredConst(pname), ()))
        else:
            for combo in product(consts, repeat=arity):
                out.append(Atom(PredConst(pname), tuple(Const(c) for c in combo)))
                if len(out) >= limit:
                    return out
        if len(out) >= limit:
            return out
    return out


def enumerate_instances(
    s: Schema,
    sig: Signature,
    registry: QuantRegistry,
    bounds: Optional[InstanceBounds] = None,
    quant_candidates: Optional[list] = None,
) -> list:
    """All instantiations with predicate constants, registered quantifiers
    satisfying constraints, and bounded ground atoms; deterministic order."""
    bounds = bounds if bounds is not None else InstanceBounds()
    axes = []
    counts = []
    for name, arity in s.pred_metavars:
        cands = [
            PredConst(p) for p in sorted(sig.predicates) if sig.predicates[p] == arity
        ]
        axes.append((name, cands))
        counts.append(len(cands))
    if s.formula_metavars:
        atoms = ground_atoms(sig, bounds.max_formula_instances)
        for name in s.formula_metavars:
            axes.append((name, atoms))
            counts.append(len(atoms))
    for name, constraint in s.quant_metavars:
        if quant_candidates is not None:
            pool = quant_candidates
        else:
            pool = [q.ref for q in registry.entries(bounds.max_quant_param)]
        cands = [r for r in pool if _quant_ok(constraint, r, registry)]
        axes.append((name, cands))
        counts.append(len(cands))
    total = 1
    for c in counts:
        total *= c
    if total > bounds.ceiling:
        formula = " * ".join(str(c) for c in counts) or "1"
        raise EnumerationCeiling(formula, total, bounds.ceiling)
    out = []
    names = [name for name, _ in axes]
    pools = [cands for _, cands in axes]
    for combo in product(*pools):
        binding = dict(zip(names, combo))
        out.append(instantiate(s, binding, registry))
    return out
