"""Abstract syntax for the extended first-order language.

Terms, predicate expressions, and formulas are immutable dataclasses.
Beyond plain FOL the language has restricted quantifiers with arbitrary
quantifier symbols, possibility/necessity operators, predicate modifiers,
operators that turn terms into predicates, and two reifying term
constructors: ``ka`` (predicate to individual) and ``that`` (sentence to
individual).

Structural operations (well-formedness, free variables, capture-avoiding
substitution, alpha-equivalence) live here as pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class FunApp:
    fn: str
    args: tuple


@dataclass(frozen=True)
class Ka:
    """Reifies a monadic predicate expression into an individual term."""

    pred: "PredExpr"


@dataclass(frozen=True)
class That:
    """Reifies a sentence into an individual term."""

    body: "Formula"


Term = Union[Var, Const, FunApp, Ka, That]

# ---------------------------------------------------------------------------
# Predicate expressions


@dataclass(frozen=True)
class PredConst:
    name: str


@dataclass(frozen=True)
class Lambda:
    params: tuple
    body: "Formula"


@dataclass(frozen=True)
class Modified:
    """A modifier applied to a predicate expression, e.g. (mod sounds reasonable)."""

    modifier: str
    base: "PredExpr"


@dataclass(frozen=True)
class TermDerived:
    """A declared operator turning a term into a predicate, e.g. (do t)."""

    op: str
    arg: Term


PredExpr = Union[PredConst, Lambda, Modified, TermDerived]

# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class QuantRef:
    """Reference to a quantifier, optionally parametric: all, most, (at-least 3)."""

    name: str
    param: Optional[int] = None


@dataclass(frozen=True)
class TrueF:
    """The always-true formula; used as the unrestricted quantifier restrictor."""


@dataclass(frozen=True)
class Atom:
    pred: PredExpr
    args: tuple


@dataclass(frozen=True)
class Equal:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Equiv:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class RestrictedQuant:
    quant: QuantRef
    var: str
    restrictor: "Formula"
    body: "Formula"


POSSIBLY = "possibly"
NECESSARILY = "necessarily"


@dataclass(frozen=True)
class Modal:
    flavor: str  # POSSIBLY or NECESSARILY
    body: "Formula"


Formula = Union[
    TrueF, Atom, Equal, Not, And, Or, Implies, Equiv, RestrictedQuant, Modal
]

Expr = Union[Term, PredExpr, Formula]

# ---------------------------------------------------------------------------
# Signature


@dataclass
class Signature:
    """Declared symbols. Names must be unique across categories.

    functions   name -> arity
    predicates  name -> arity
    constants   set of individual constant names
    modifiers   set of predicate-modifier names
    term_ops    name -> result arity of the derived predicate
    """

    functions: dict = field(default_factory=dict)
    predicates: dict = field(default_factory=dict)
    constants: set = field(default_factory=set)
    modifiers: set = field(default_factory=set)
    term_ops: dict = field(default_factory=dict)

    def all_names(self) -> set:
        names = set(self.functions) | set(self.predicates) | set(self.constants)
        return names | set(self.modifiers) | set(self.term_ops)

    def copy(self) -> "Signature":
        return Signature(
            dict(self.functions),
            dict(self.predicates),
            set(self.constants),
            set(self.modifiers),
            dict(self.term_ops),
        )


def pred_arity(pe: PredExpr, sig: Signature) -> Optional[int]:
    """Arity of a predicate expression over sig, or None if undetermined."""
    match pe:
        case PredConst(name):
            return sig.predicates.get(name)
        case Lambda(params, _):
            return len(params)
        case Modified(_, base):
            return pred_arity(base, sig)
        case TermDerived(op, _):
            return sig.term_ops.get(op)
    return None


# ---------------------------------------------------------------------------
# Well-formedness


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path or '<root>'}: {self.message}"


def well_formed(expr: Expr, sig: Signature) -> list:
    """Every violation of the construction rules, with a path into expr.

    Empty list iff expr is well-formed over sig.
    """
    out: list = []
    _wf(expr, sig, frozenset(), "", out)
    return out


def _wf(expr: Expr, sig: Signature, bound: frozenset, path: str, out: list) -> None:
    def bad(msg, p=None):
        out.append(Diagnostic(p if p is not None else path, msg))

    def sub(p):
        return f"{path}.{p}" if path else p

    match expr:
        case Var(_):
            pass
        case Const(name):
            if name not in sig.constants:
                bad(f"unknown constant '{name}'")
        case FunApp(fn, args):
            arity = sig.functions.get(fn)
            if arity is None:
                bad(f"unknown function symbol '{fn}'")
            elif arity != len(args):
                bad(f"function '{fn}' expects {arity} args, got {len(args)}")
            for i, a in enumerate(args):
                _wf(a, sig, bound, sub(f"args[{i}]"), out)
        case Ka(pred):
            ar = pred_arity(pred, sig)
            if ar is not None and ar != 1:
                bad(f"ka requires a monadic predicate, got arity {ar}")
            if not (free_vars(pred) <= bound):
                loose = sorted(free_vars(pred) - bound)
                bad(f"reified term has unbound variables: {', '.join(loose)}")
            _wf(pred, sig, bound, sub("pred"), out)
        case That(body):
            if not (free_vars(body) <= bound):
                loose = sorted(free_vars(body) - bound)
                bad(f"reified sentence has unbound variables: {', '.join(loose)}")
            _wf(body, sig, bound, sub("body"), out)
        case PredConst(name):
            if name not in sig.predicates:
                bad(f"unknown predicate '{name}'")
        case Lambda(params, body):
            if len(set(params)) != len(params):
                bad("duplicate lambda parameters")
            clash = set(params) & bound
            if clash:
                bad(f"rebinding of bound variable: {', '.join(sorted(clash))}")
            _wf(body, sig, bound | set(params), sub("body"), out)
        case Modified(modifier, base):
            if modifier not in sig.modifiers:
                bad(f"unknown modifier '{modifier}'")
            _wf(base, sig, bound, sub("base"), out)
        case TermDerived(op, arg):
            if op not in sig.term_ops:
                bad(f"unknown term-derived operator '{op}'")
            _wf(arg, sig, bound, sub("arg"), out)
        case TrueF():
            pass
        case Atom(pred, args):
            ar = pred_arity(pred, sig)
            if ar is not None and ar != len(args):
                bad(f"predicate of arity {ar} applied to {len(args)} args")
            _wf(pred, sig, bound, sub("pred"), out)
            for i, a in enumerate(args):
                _wf(a, sig, bound, sub(f"args[{i}]"), out)
        case Equal(left, right):
            _wf(left, sig, bound, sub("left"), out)
            _wf(right, sig, bound, sub("right"), out)
        case Not(body):
            _wf(body, sig, bound, sub("body"), out)
        case And(l, r) | Or(l, r) | Implies(l, r) | Equiv(l, r):
            _wf(l, sig, bound, sub("left"), out)
            _wf(r, sig, bound, sub("right"), out)
        case RestrictedQuant(_, var, restrictor, body):
            if var in bound:
                bad(f"rebinding of bound variable: {var}")
            inner = bound | {var}
            _wf(restrictor, sig, inner, sub("restrictor"), out)
            _wf(body, sig, inner, sub("body"), out)
        case Modal(flavor, body):
            if flavor not in (POSSIBLY, NECESSARILY):
                bad(f"unknown modal flavor '{flavor}'")
            _wf(body, sig, bound, sub("body"), out)
        case _:
            bad(f"unrecognized node {expr!r}")


# ---------------------------------------------------------------------------
# Free variables


def free_vars(expr: Expr) -> set:
    """Names with a free occurrence. Reified subexpressions are transparent."""
    match expr:
        case Var(name):
            return {name}
        case Const(_) | PredConst(_) | TrueF():
            return set()
        case FunApp(_, args) | Atom(_, args):
            out = free_vars(expr.pred) if isinstance(expr, Atom) else set()
            for a in args:
                out |= free_vars(a)
            return out
        case Ka(pred):
            return free_vars(pred)
        case That(body) | Not(body) | Modal(_, body):
            return free_vars(body)
        case Lambda(params, body):
            return free_vars(body) - set(params)
        case Modified(_, base):
            return free_vars(base)
        case TermDerived(_, arg):
            return free_vars(arg)
        case Equal(left, right):
            return free_vars(left) | free_vars(right)
        case And(l, r) | Or(l, r) | Implies(l, r) | Equiv(l, r):
            return free_vars(l) | free_vars(r)
        case RestrictedQuant(_, var, restrictor, body):
            return (free_vars(restrictor) | free_vars(body)) - {var}
    raise TypeError(f"not an expression: {expr!r}")


def free_vars_ordered(expr: Expr) -> list:
    """Free variables in order of first free occurrence (canonical traversal)."""
    out: list = []
    _fvo(expr, frozenset(), out)
    return out


def _fvo(expr: Expr, bound: frozenset, out: list) -> None:
    match expr:
        case Var(name):
            if name not in bound and name not in out:
                out.append(name)
        case Const(_) | PredConst(_) | TrueF():
            pass
        case FunApp(_, args):
            for a in args:
                _fvo(a, bound, out)
        case Ka(pred):
            _fvo(pred, bound, out)
        case That(body) | Not(body) | Modal(_, body):
            _fvo(body, bound, out)
        case Lambda(params, body):
            _fvo(body, bound | set(params), out)
        case Modified(_, base):
            _fvo(base, bound, out)
        case TermDerived(_, arg):
            _fvo(arg, bound, out)
        case Atom(pred, args):
            _fvo(pred, bound, out)
            for a in args:
                _fvo(a, bound, out)
        case Equal(l, r) | And(l, r) | Or(l, r) | Implies(l, r) | Equiv(l, r):
            _fvo(l, bound, out)
            _fvo(r, bound, out)
        case RestrictedQuant(_, var, restrictor, body):
            _fvo(restrictor, bound | {var}, out)
            _fvo(body, bound | {var}, out)
        case _:
            raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# Substitution

_DIGITS = "0123456789"


def fresh_name(base: str, avoid: Iterable) -> str:
    """Deterministic fresh variable name: base0, base1, ... first not in avoid."""
    avoid = set(avoid)
    stem = base.rstrip(_DIGITS) or base
    i = 0
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def substitute(expr: Expr, var: str, term: Term) -> Expr:
    """Capture-avoiding substitution of term for free occurrences of var."""
    return subst_map(expr, {var: term})


def subst_map(expr: Expr, mapping: Mapping) -> Expr:
    """Simultaneous capture-avoiding substitution."""
    mapping = {v: t for v, t in mapping.items() if t != Var(v)}
    if not mapping:
        return expr
    return _subst(expr, mapping)


def _subst(expr: Expr, m: Mapping) -> Expr:
    match expr:
        case Var(name):
            return m.get(name, expr)
        case Const(_) | PredConst(_) | TrueF():
            return expr
        case FunApp(fn, args):
            return FunApp(fn, tuple(_subst(a, m) for a in args))
        case Ka(pred):
            return Ka(_subst(pred, m))
        case That(body):
            return That(_subst(body, m))
        case Lambda(params, body):
            params2, body2, m2 = _subst_binder(list(params), body, m)
            if m2 is None:
                return expr
            return Lambda(tuple(params2), _subst(body2, m2))
        case Modified(modifier, base):
            return Modified(modifier, _subst(base, m))
        case TermDerived(op, arg):
            return TermDerived(op, _subst(arg, m))
        case Atom(pred, args):
            return Atom(_subst(pred, m), tuple(_subst(a, m) for a in args))
        case Equal(left, right):
            return Equal(_subst(left, m), _subst(right, m))
        case Not(body):
            return Not(_subst(body, m))
        case And(l, r):
            return And(_subst(l, m), _subst(r, m))
        case Or(l, r):
            return Or(_subst(l, m), _subst(r, m))
        case Implies(l, r):
            return Implies(_subst(l, m), _subst(r, m))
        case Equiv(l, r):
            return Equiv(_subst(l, m), _subst(r, m))
        case RestrictedQuant(q, var, restrictor, body):
            (var2,), (restrictor2, body2), m2 = _subst_binder2(
                [var], [restrictor, body], m
            )
            if m2 is None:
                return expr
            return RestrictedQuant(q, var2, _subst(restrictor2, m2), _subst(body2, m2))
        case Modal(flavor, body):
            return Modal(flavor, _subst(body, m))
    raise TypeError(f"not an expression: {expr!r}")


def _subst_binder(params: list, body, m: Mapping):
    names, bodies, m2 = _subst_binder2(params, [body], m)
    if m2 is None:
        return None, None, None
    return names, bodies[0], m2


def _subst_binder2(params: list, bodies: list, m: Mapping):
    """Shared binder handling: drop shadowed entries, rename on capture risk."""
    live = {v: t for v, t in m.items() if v not in params}
    relevant = set()
    for b in bodies:
        relevant |= free_vars(b)
    live = {v: t for v, t in live.items() if v in relevant}
    if not live:
        return params, bodies, None
    incoming = set()
    for t in live.values():
        incoming |= free_vars(t)
    renames = {}
    avoid = incoming | relevant | set(params)
    new_params = []
    for p in params:
        if p in incoming:
            p2 = fresh_name(p, avoid)
            avoid.add(p2)
            renames[p] = Var(p2)
            new_params.append(p2)
        else:
            new_params.append(p)
    if renames:
        bodies = [_subst(b, renames) for b in bodies]
    return new_params, bodies, live


# ---------------------------------------------------------------------------
# Alpha-equivalence


def alpha_equivalent(a: Expr, b: Expr) -> bool:
    """True iff a and b are equal up to renaming of bound variables."""
    return _alpha(a, b, {}, {})


def _alpha(a: Expr, b: Expr, la: dict, lb: dict) -> bool:
    if type(a) is not type(b):
        return False
    match a, b:
        case Var(x), Var(y):
            return la.get(x, x) == lb.get(y, y) and (x in la) == (y in lb)
        case (Const(x), Const(y)) | (PredConst(x), PredConst(y)):
            return x == y
        case TrueF(), TrueF():
            return True
        case FunApp(f, xs), FunApp(g, ys):
            return f == g and len(xs) == len(ys) and all(
                _alpha(x, y, la, lb) for x, y in zip(xs, ys)
            )
        case Ka(p), Ka(q):
            return _alpha(p, q, la, lb)
        case That(p), That(q):
            return _alpha(p, q, la, lb)
        case Lambda(ps, body_a), Lambda(qs, body_b):
            if len(ps) != len(qs):
                return False
            la2, lb2 = dict(la), dict(lb)
            for i, (p, q) in enumerate(zip(ps, qs)):
                mark = ("bind", len(la2), i)
                la2[p] = mark
                lb2[q] = mark
            return _alpha(body_a, body_b, la2, lb2)
        case Modified(m1, p), Modified(m2, q):
            return m1 == m2 and _alpha(p, q, la, lb)
        case TermDerived(o1, t1), TermDerived(o2, t2):
            return o1 == o2 and _alpha(t1, t2, la, lb)
        case Atom(p, xs), Atom(q, ys):
            return len(xs) == len(ys) and _alpha(p, q, la, lb) and all(
                _alpha(x, y, la, lb) for x, y in zip(xs, ys)
            )
        case Equal(x1, y1), Equal(x2, y2):
            return _alpha(x1, x2, la, lb) and _alpha(y1, y2, la, lb)
        case Not(p), Not(q):
            return _alpha(p, q, la, lb)
        case (And(l1, r1), And(l2, r2)) | (Or(l1, r1), Or(l2, r2)) | (
            Implies(l1, r1),
            Implies(l2, r2),
        ) | (Equiv(l1, r1), Equiv(l2, r2)):
            return _alpha(l1, l2, la, lb) and _alpha(r1, r2, la, lb)
        case RestrictedQuant(q1, v1, r1, b1), RestrictedQuant(q2, v2, r2, b2):
            if q1 != q2:
                return False
            la2, lb2 = dict(la), dict(lb)
            mark = ("bind", len(la2))
            la2[v1] = mark
            lb2[v2] = mark
            return _alpha(r1, r2, la2, lb2) and _alpha(b1, b2, la2, lb2)
        case Modal(f1, p), Modal(f2, q):
            return f1 == f2 and _alpha(p, q, la, lb)
    return False


def alpha_key(expr: Expr) -> str:
    """Canonical string key: equal for exactly the alpha-equivalent expressions."""
    parts: list = []
    _ak(expr, {}, parts)
    return "".join(parts)


def _ak(expr: Expr, binders: dict, out: list) -> None:
    match expr:
        case Var(x):
            out.append(f"?{binders.get(x, '!' + x)};")
        case Const(x):
            out.append(f"c:{x};")
        case PredConst(x):
            out.append(f"p:{x};")
        case TrueF():
            out.append("true;")
        case FunApp(f, args):
            out.append(f"(f:{f};")
            for a in args:
                _ak(a, binders, out)
            out.append(")")
        case Ka(p):
            out.append("(ka;")
            _ak(p, binders, out)
            out.append(")")
        case That(p):
            out.append("(that;")
            _ak(p, binders, out)
            out.append(")")
        case Lambda(ps, body):
            b2 = dict(binders)
            for p in ps:
                b2[p] = str(len(b2))
            out.append(f"(lam{len(ps)};")
            _ak(body, b2, out)
            out.append(")")
        case Modified(m, base):
            out.append(f"(mod:{m};")
            _ak(base, binders, out)
            out.append(")")
        case TermDerived(op, arg):
            out.append(f"(op:{op};")
            _ak(arg, binders, out)
            out.append(")")
        case Atom(p, args):
            out.append("(atom;")
            _ak(p, binders, out)
            for a in args:
                _ak(a, binders, out)
            out.append(")")
        case Equal(l, r):
            out.append("(=;")
            _ak(l, binders, out)
            _ak(r, binders, out)
            out.append(")")
        case Not(b):
            out.append("(not;")
            _ak(b, binders, out)
            out.append(")")
        case And(l, r) | Or(l, r) | Implies(l, r) | Equiv(l, r):
            out.append(f"({type(expr).__name__};")
            _ak(l, binders, out)
            _ak(r, binders, out)
            out.append(")")
        case RestrictedQuant(q, v, r, b):
            b2 = dict(binders)
            b2[v] = str(len(b2))
            out.append(f"(q:{q.name}:{q.param};")
            _ak(r, b2, out)
            _ak(b, b2, out)
            out.append(")")
        case Modal(f, b):
            out.append(f"({f};")
            _ak(b, binders, out)
            out.append(")")
        case _:
            raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# Small structural helpers used across modules


def conjuncts(f: Formula) -> list:
    """Flatten an And-tree into its leaves, left to right."""
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def disjuncts(f: Formula) -> list:
    if isinstance(f, Or):
        return disjuncts(f.left) + disjuncts(f.right)
    return [f]


def conjoin(fs: list) -> Formula:
    if not fs:
        return TrueF()
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disjoin(fs: list) -> Formula:
    if not fs:
        return Not(TrueF())
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def strip_universals(f: Formula) -> tuple:
    """Peel outer unrestricted universal quantifiers; returns (vars, matrix)."""
    out = []
    while (
        isinstance(f, RestrictedQuant)
        and f.quant == QuantRef("all")
        and f.restrictor == TrueF()
    ):
        out.append(f.var)
        f = f.body
    return out, f


def forall(var: str, body: Formula) -> Formula:
    return RestrictedQuant(QuantRef("all"), var, TrueF(), body)


def exists(var: str, body: Formula) -> Formula:
    return RestrictedQuant(QuantRef("some"), var, TrueF(), body)
