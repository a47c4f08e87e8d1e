"""Compilation of the extended language into plain first-order form.

Given explicit, finite lists of domain constants and world constants, every
construct beyond classical FOL is expanded away: possibility/necessity
become disjunctions/conjunctions over world constants guarded by
accessibility atoms, every predicate gains a trailing world argument,
restricted quantifiers expand by domain closure (numeric ones over
pairwise-distinct witness tuples, `most` by cardinality comparison),
reified terms become opaque fresh constants, and modified or term-derived
predicates become fresh predicate symbols keyed by operator and base.

The reduction deliberately loses the structure inside reified terms and
schemas; measuring what that costs a prover is the point of
`compare_effort`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
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
    POSSIBLY,
    PredConst,
    RestrictedQuant,
    Signature,
    TermDerived,
    That,
    TrueF,
    Var,
    conjoin,
    conjuncts,
    disjoin,
    free_vars,
    alpha_key,
    subst_map,
)
from .kb import KnowledgeBase
from .models import IntensionalModel, eval_term
from .prover import ProveResult, ProverConfig, prove
from .quantifiers import UnknownQuantifierError
from .syntax import render

ACC = "acc"


class ReductionError(Exception):
    pass


@dataclass(frozen=True)
class ReductionContext:
    domain: tuple  # individual constant names; closure assumption
    worlds: tuple  # world constant names; first is the current world
    accessibility: tuple = ()  # (w, w') pairs asserted in the reduced kb
    expansion_ceiling: int = 20_000

    def __post_init__(self):
        if not self.domain:
            raise ReductionError(
                "reduction requires domain closure: provide domain constants"
            )
        if not self.worlds:
            raise ReductionError("reduction requires at least one world constant")
        for name, items in (("domain", self.domain), ("worlds", self.worlds)):
            if len(set(items)) != len(items):
                raise ReductionError(f"duplicate {name} constants")


@dataclass
class SideTables:
    """Fresh symbols introduced by a reduction run."""

    reified_consts: dict = field(default_factory=dict)  # alpha key -> const name
    reified_terms: dict = field(default_factory=dict)  # const name -> source term
    op_preds: dict = field(default_factory=dict)  # (op, token) -> pred name
    mod_preds: dict = field(default_factory=dict)  # (mod, base) -> pred name
    dropped_schemas: list = field(default_factory=list)

    def reified_const(self, term) -> str:
        key = alpha_key(term)
        if key not in self.reified_consts:
            name = f"obj-k{len(self.reified_consts) + 1}"
            self.reified_consts[key] = name
            self.reified_terms[name] = term
        return self.reified_consts[key]


class Reducer:
    def __init__(self, ctx: ReductionContext, tables: Optional[SideTables] = None):
        self.ctx = ctx
        self.tables = tables if tables is not None else SideTables()

    # -- terms ----------------------------------------------------------------

    def term(self, t):
        match t:
            case Var(_) | Const(_):
                return t
            case FunApp(fn, args):
                return FunApp(fn, tuple(self.term(a) for a in args))
            case Ka(_) | That(_):
                if free_vars(t):
                    raise ReductionError(
                        f"reified term is open after expansion: {render(t)}"
                    )
                return Const(self.tables.reified_const(t))
        raise ReductionError(f"cannot reduce term {t!r}")

    def _term_token(self, t) -> str:
        reduced = self.term(t)
        if isinstance(reduced, Const):
            return reduced.name
        raise ReductionError(
            f"term-derived predicate argument must reduce to a constant: {render(t)}"
        )

    # -- formulas ---------------------------------------------------------------

    def formula(self, f: Formula, w: str) -> Formula:
        match f:
            case TrueF():
                return f
            case Atom(pred, args):
                return self.atom(pred, args, w)
            case Equal(l, r):
                return Equal(self.term(l), self.term(r))
            case Not(b):
                return Not(self.formula(b, w))
            case And(l, r):
                return And(self.formula(l, w), self.formula(r, w))
            case Or(l, r):
                return Or(self.formula(l, w), self.formula(r, w))
            case Implies(l, r):
                return Implies(self.formula(l, w), self.formula(r, w))
            case Equiv(l, r):
                return Equiv(self.formula(l, w), self.formula(r, w))
            case Modal(flavor, body):
                parts = []
                for w2 in self.ctx.worlds:
                    guard = Atom(PredConst(ACC), (Const(w), Const(w2)))
                    inner = self.formula(body, w2)
                    if flavor == POSSIBLY:
                        parts.append(And(guard, inner))
                    else:
                        parts.append(Implies(guard, inner))
                return disjoin(parts) if flavor == POSSIBLY else conjoin(parts)
            case RestrictedQuant(_, _, _, _):
                return self.quant(f, w)
        raise ReductionError(f"cannot reduce formula {f!r}")

    def atom(self, pred, args, w: str) -> Formula:
        new_args = tuple(self.term(a) for a in args)
        world_arg = (Const(w),)
        match pred:
            case PredConst(name):
                return Atom(PredConst(name), new_args + world_arg)
            case Lambda(params, body):
                if len(params) != len(args):
                    raise ReductionError("lambda arity mismatch")
                return self.formula(subst_map(body, dict(zip(params, args))), w)
            case Modified(modifier, base):
                if not isinstance(base, PredConst):
                    raise ReductionError(
                        "only modified predicate constants reduce"
                    )
                key = (modifier, base.name)
                name = self.tables.mod_preds.setdefault(key, f"{modifier}%{base.name}")
                return Atom(PredConst(name), new_args + world_arg)
            case TermDerived(op, arg):
                token = self._term_token(arg)
                key = (op, token)
                name = self.tables.op_preds.setdefault(key, f"{op}%{token}")
                return Atom(PredConst(name), new_args + world_arg)
        raise ReductionError(f"cannot reduce predicate {pred!r}")

    def quant(self, f: RestrictedQuant, w: str) -> Formula:
        q = f.quant
        domain = self.ctx.domain

        def member(c: str) -> Formula:
            inst_r = subst_map(f.restrictor, {f.var: Const(c)})
            inst_b = subst_map(f.body, {f.var: Const(c)})
            if isinstance(f.restrictor, TrueF):
                return self.formula(inst_b, w)
            return And(self.formula(inst_r, w), self.formula(inst_b, w))

        def counter(c: str) -> Formula:
            # member of the restrictor but not the body
            inst_r = subst_map(f.restrictor, {f.var: Const(c)})
            inst_b = subst_map(f.body, {f.var: Const(c)})
            neg = Not(self.formula(inst_b, w))
            if isinstance(f.restrictor, TrueF):
                return neg
            return And(self.formula(inst_r, w), neg)

        def at_least(n: int, make) -> Formula:
            if n == 0:
                return TrueF()
            if n > len(domain):
                return Not(TrueF())
            if comb(len(domain), n) > self.ctx.expansion_ceiling:
                raise ReductionError(
                    f"at-least {n} over {len(domain)} constants exceeds the "
                    f"expansion ceiling"
                )
            options = []
            for combo in combinations(domain, n):
                parts = [
                    Not(Equal(Const(a), Const(b)))
                    for a, b in combinations(combo, 2)
                ]
                parts.extend(make(c) for c in combo)
                options.append(conjoin(parts))
            return disjoin(options)

        if q.name == "all":
            parts = []
            for c in domain:
                inst_r = subst_map(f.restrictor, {f.var: Const(c)})
                inst_b = subst_map(f.body, {f.var: Const(c)})
                if isinstance(f.restrictor, TrueF):
                    parts.append(self.formula(inst_b, w))
                else:
                    parts.append(
                        Implies(self.formula(inst_r, w), self.formula(inst_b, w))
                    )
            return conjoin(parts)
        if q.name == "some":
            return at_least(1, member)
        if q.name == "no":
            return Not(at_least(1, member))
        if q.name == "at-least":
            return at_least(q.param, member)
        if q.name == "at-most":
            return Not(at_least(q.param + 1, member))
        if q.name == "fewer-than":
            return Not(at_least(q.param, member))
        if q.name == "exactly":
            return And(
                at_least(q.param, member), Not(at_least(q.param + 1, member))
            )
        if q.name == "most":
            options = []
            for k in range(len(domain)):
                options.append(
                    And(
                        at_least(k + 1, member),
                        Not(at_least(k + 1, counter)),
                    )
                )
            return disjoin(options)
        raise UnknownQuantifierError(f"quantifier {q.name} is not reducible")


def reduce_formula(
    f: Formula, ctx: ReductionContext, tables: Optional[SideTables] = None
) -> Formula:
    """Classical first-order form of a closed formula, at the current world."""
    if free_vars(f):
        raise ReductionError("reduce requires a closed formula")
    return Reducer(ctx, tables).formula(f, ctx.worlds[0])


def reduced_signature(sig: Signature, ctx: ReductionContext, tables: SideTables) -> Signature:
    out = Signature()
    for name, arity in sig.predicates.items():
        out.predicates[name] = arity + 1
    out.predicates[ACC] = 2
    for key, name in tables.mod_preds.items():
        base_arity = sig.predicates.get(key[1], 0)
        out.predicates[name] = base_arity + 1
    for key, name in tables.op_preds.items():
        op_arity = sig.term_ops.get(key[0], 1)
        out.predicates[name] = op_arity + 1
    out.functions.update(sig.functions)
    out.constants |= sig.constants
    out.constants |= set(ctx.domain)
    out.constants |= set(ctx.worlds)
    out.constants |= set(tables.reified_terms)
    return out


def reduce_kb(kb: KnowledgeBase, ctx: ReductionContext):
    """Reduce a knowledge base: axioms per world, facts at the current world,
    accessibility and constant-distinctness context facts added. Schemas do
    not survive reduction; they are recorded in the side tables.

    Returns (reduced KnowledgeBase, SideTables).
    """
    tables = SideTables()
    reducer = Reducer(ctx, tables)
    out = KnowledgeBase(registry=kb.registry)
    for axiom in kb.axioms:
        for w in ctx.worlds:
            translated = reducer.formula(axiom, w)
            for part in conjuncts(translated):
                out.axioms.append(part)
    for fact in kb.facts:
        out.facts.append(reducer.formula(fact, ctx.worlds[0]))
    for a, b in ctx.accessibility:
        out.facts.append(Atom(PredConst(ACC), (Const(a), Const(b))))
    for a, b in combinations(ctx.domain, 2):
        out.facts.append(Not(Equal(Const(a), Const(b))))
    for schema in kb.schemas:
        tables.dropped_schemas.append(schema.name)
    out.signature = reduced_signature(kb.signature, ctx, tables)
    return out, tables


# ---------------------------------------------------------------------------
# Induced classical models (the faithfulness oracle's evaluation side)


def induced_classical_model(
    m: IntensionalModel, ctx: ReductionContext, tables: SideTables
) -> IntensionalModel:
    """Fold an intensional model's worlds into the domain so reduced formulas
    can be evaluated classically: predicates gain a world column, `acc`
    interprets the accessibility relation, and opaque constants denote what
    their source terms denote."""
    domain = tuple(m.domain) + tuple(m.worlds)
    constants = dict(m.constants)
    for w in m.worlds:
        constants[w] = w
    predicates: dict = {}
    cw = "cw"
    for (name, w), ext in m.predicates.items():
        key = (name, cw)
        predicates.setdefault(key, set())
        predicates[key] |= {t + (w,) for t in ext}
    predicates[(ACC, cw)] = set(m.accessibility)
    for (mo, base, w), ext in m.modifiers.items():
        name = tables.mod_preds.get((mo, base))
        if name is None:
            continue
        key = (name, cw)
        predicates.setdefault(key, set())
        predicates[key] |= {t + (w,) for t in ext}
    for (op, ind, w), ext in m.term_ops.items():
        for (o, token), name in tables.op_preds.items():
            if o != op:
                continue
            src = tables.reified_terms.get(token)
            if src is not None:
                denot = eval_term(m, {}, src)
            elif token in m.constants:
                denot = m.constants[token]
            else:
                continue
            if denot != ind:
                continue
            key = (name, cw)
            predicates.setdefault(key, set())
            predicates[key] |= {t + (w,) for t in ext}
    for name, term in tables.reified_terms.items():
        constants[name] = eval_term(m, {}, term)
    return IntensionalModel(
        worlds=(cw,),
        accessibility=frozenset(),
        domain=domain,
        constants=constants,
        predicates={k: frozenset(v) for k, v in predicates.items()},
        functions=dict(m.functions),
    )


# ---------------------------------------------------------------------------
# Effort comparison


@dataclass
class RunStats:
    encoding: str
    explored: int
    proof_len: Optional[int]
    outcome: str

    def to_dict(self) -> dict:
        return {
            "encoding": self.encoding,
            "explored": self.explored,
            "proof_len": self.proof_len,
            "outcome": self.outcome,
        }


@dataclass
class EffortReport:
    extended: RunStats
    reduced: RunStats
    ratio: Optional[float]  # reduced length / extended length, when both proved

    def render_table(self) -> str:
        rows = [("encoding", "explored", "proof_len", "outcome")]
        for s in (self.extended, self.reduced):
            rows.append(
                (
                    s.encoding,
                    str(s.explored),
                    "-" if s.proof_len is None else str(s.proof_len),
                    s.outcome,
                )
            )
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in rows
        ]
        if self.ratio is not None:
            lines.append(f"length ratio reduced:extended = {self.ratio:g}")
        return "\n".join(lines)

    def to_json_lines(self) -> str:
        lines = [
            json.dumps(self.extended.to_dict(), sort_keys=True),
            json.dumps(self.reduced.to_dict(), sort_keys=True),
        ]
        lines.append(json.dumps({"length_ratio": self.ratio}, sort_keys=True))
        return "\n".join(lines)


def _stats(encoding: str, result: ProveResult) -> RunStats:
    return RunStats(
        encoding,
        result.explored,
        result.trace.length() if result.trace is not None else None,
        result.outcome,
    )


def compare_effort(
    kb: KnowledgeBase,
    goal: Formula,
    ctx: ReductionContext,
    cfg: Optional[ProverConfig] = None,
    reduced_cfg: Optional[ProverConfig] = None,
):
    """Prove the goal in both encodings and report the effort.

    Returns (EffortReport, extended ProveResult, reduced ProveResult).
    """
    cfg = cfg if cfg is not None else ProverConfig()
    reduced_cfg = reduced_cfg if reduced_cfg is not None else cfg
    extended = prove(kb, goal, cfg)
    tables: Optional[SideTables]
    try:
        reduced_kb, tables = reduce_kb(kb, ctx)
        reduced_goal = reduce_formula(goal, ctx, tables)
    except ReductionError:
        raise
    reduced = prove(reduced_kb, reduced_goal, reduced_cfg)
    ratio = None
    if extended.proved and reduced.proved:
        ext_len = extended.trace.length()
        if ext_len:
            ratio = reduced.trace.length() / ext_len
    report = EffortReport(
        _stats("extended", extended), _stats("reduced", reduced), ratio
    )
    return report, extended, reduced
