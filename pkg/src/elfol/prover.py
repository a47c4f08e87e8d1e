"""Bounded backward-chaining prover with replayable traces.

Search is depth-first over a fixed rule order: facts, axioms, schemas, the
monotone-quantifier rule, then structural rules. Every successful proof is
a tree of steps whose rule applications can be re-validated against the
knowledge base (`replay`). The lexical-step count of a trace is the number
of axiom and schema applications in it.

There are no modal inference rules: modal goals are provable only through
axioms whose consequents are modal. Negative goals are provable only
through facts or axioms with negated consequents. Failure at the
configured bounds is reported distinctly from definitive failure.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
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
    RestrictedQuant,
    TermDerived,
    That,
    TrueF,
    Var,
    alpha_equivalent,
    alpha_key,
    conjuncts,
    disjuncts,
    free_vars,
    strip_universals,
    subst_map,
)
from .kb import KnowledgeBase
from .quantifiers import DOWN, UP, UnknownQuantifierError
from .schemas import binding_total, instantiate, match_conclusion
from .syntax import render

PROVED = "proved"
FAILED = "failed"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class ProverConfig:
    max_depth: int = 8
    max_lexical_steps: int = 4
    timeout_ms: int = 10_000
    max_explored: int = 200_000
    rewrite_steps: int = 3  # equivalence rewrites tried inside one rule

    def __post_init__(self):
        for name in ("max_depth", "max_lexical_steps", "timeout_ms", "max_explored"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class TraceNode:
    rule: str
    formula: Formula
    children: tuple = ()
    detail: str = ""

    def lexical_steps(self) -> int:
        own = 1 if self.rule in ("axiom-match", "schema-apply") else 0
        return own + sum(c.lexical_steps() for c in self.children)

    def length(self) -> int:
        """Proof length: rule applications, not counting leaf fact matches."""
        own = 0 if self.rule == "fact-match" else 1
        return own + sum(c.length() for c in self.children)

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule if not self.detail else f"{self.rule}({self.detail})",
            "formula": render(self.formula),
            "lexical_steps": self.lexical_steps(),
            "children": [c.to_dict() for c in self.children],
        }

    def pretty(self, indent: int = 0) -> str:
        tag = self.rule if not self.detail else f"{self.rule}({self.detail})"
        lex = " [lex]" if self.rule in ("axiom-match", "schema-apply") else ""
        lines = ["  " * indent + f"{tag}{lex}  {render(self.formula)}"]
        for c in self.children:
            lines.append(c.pretty(indent + 1))
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class ProveResult:
    outcome: str  # PROVED | FAILED | EXHAUSTED
    trace: Optional[TraceNode]
    explored: int
    elapsed_ms: float

    @property
    def proved(self) -> bool:
        return self.outcome == PROVED


# ---------------------------------------------------------------------------
# First-order unification (metavariable-free; reified terms are opaque wholes)


def walk(term, env: dict):
    while isinstance(term, Var) and term.name in env:
        term = env[term.name]
    return term


def resolve_term(term, env: dict):
    term = walk(term, env)
    match term:
        case FunApp(fn, args):
            return FunApp(fn, tuple(resolve_term(a, env) for a in args))
        case _:
            return term


def resolve_formula(f: Formula, env: dict) -> Formula:
    if not env:
        return f
    grounded = {v: resolve_term(Var(v), env) for v in env}
    grounded = {v: t for v, t in grounded.items() if t != Var(v)}
    return subst_map(f, grounded)


def _occurs(name: str, term, env: dict) -> bool:
    term = walk(term, env)
    match term:
        case Var(n):
            return n == name
        case FunApp(_, args):
            return any(_occurs(name, a, env) for a in args)
        case Ka(_) | That(_):
            return name in free_vars(term)
        case _:
            return False


def _bind(name: str, term, env: dict, rigid: frozenset):
    if _occurs(name, term, env):
        return None
    if free_vars(resolve_term(term, env)) & rigid:
        return None  # a bound variable would escape its scope
    env2 = dict(env)
    env2[name] = term
    return env2


def unify(a, b, env: Optional[dict] = None):
    """Most general unifier of two terms or formulas extending env, or None.

    Reified terms unify only when alpha-equivalent (after resolution) or by
    binding a variable to the whole reified term. Quantified and lambda
    sub-structures must correspond up to bound-variable renaming.
    """
    env = dict(env) if env else {}
    return _unify(a, b, env, {}, {}, frozenset())


def _unify(a, b, env, pa: dict, pb: dict, rigid: frozenset):
    a_is_term = isinstance(a, (Var, Const, FunApp, Ka, That))
    b_is_term = isinstance(b, (Var, Const, FunApp, Ka, That))
    if a_is_term != b_is_term:
        return None
    if a_is_term:
        return _unify_terms(a, b, env, pa, pb, rigid)
    return _unify_formulas(a, b, env, pa, pb, rigid)


def _unify_terms(a, b, env, pa, pb, rigid):
    a = walk(a, env)
    b = walk(b, env)
    if isinstance(a, Var) and a.name in pa:
        if isinstance(b, Var) and pb.get(b.name) == pa[a.name]:
            return env
        return None
    if isinstance(b, Var) and b.name in pb:
        return None  # bound on one side only
    if isinstance(a, Var):
        if isinstance(b, Var) and a.name == b.name:
            return env
        return _bind(a.name, b, env, frozenset(pb))
    if isinstance(b, Var):
        return _bind(b.name, a, env, frozenset(pa))
    match a, b:
        case Const(x), Const(y):
            return env if x == y else None
        case FunApp(f, xs), FunApp(g, ys):
            if f != g or len(xs) != len(ys):
                return None
            for x, y in zip(xs, ys):
                env = _unify_terms(x, y, env, pa, pb, rigid)
                if env is None:
                    return None
            return env
        case (Ka(_), Ka(_)) | (That(_), That(_)):
            ra = _resolve_deep(a, env)
            rb = _resolve_deep(b, env)
            return env if alpha_equivalent(ra, rb) else None
    return None


def _resolve_deep(x, env):
    if not env:
        return x
    names = free_vars(x)
    grounded = {v: resolve_term(Var(v), env) for v in names if v in env}
    grounded = {v: t for v, t in grounded.items() if t != Var(v)}
    return subst_map(x, grounded) if grounded else x


def _unify_pred(a, b, env, pa, pb, rigid):
    if type(a) is not type(b):
        return None
    match a, b:
        case PredConst(x), PredConst(y):
            return env if x == y else None
        case Modified(m1, b1), Modified(m2, b2):
            return _unify_pred(b1, b2, env, pa, pb, rigid) if m1 == m2 else None
        case TermDerived(o1, t1), TermDerived(o2, t2):
            return _unify_terms(t1, t2, env, pa, pb, rigid) if o1 == o2 else None
        case Lambda(_, _), Lambda(_, _):
            ra = _resolve_deep(a, env)
            rb = _resolve_deep(b, env)
            return env if alpha_equivalent(ra, rb) else None
    return None


def _unify_formulas(a, b, env, pa, pb, rigid):
    if type(a) is not type(b):
        return None
    match a, b:
        case TrueF(), TrueF():
            return env
        case Atom(p1, a1), Atom(p2, a2):
            if len(a1) != len(a2):
                return None
            env = _unify_pred(p1, p2, env, pa, pb, rigid)
            if env is None:
                return None
            for x, y in zip(a1, a2):
                env = _unify_terms(x, y, env, pa, pb, rigid)
                if env is None:
                    return None
            return env
        case Equal(l1, r1), Equal(l2, r2):
            env = _unify_terms(l1, l2, env, pa, pb, rigid)
            if env is None:
                return None
            return _unify_terms(r1, r2, env, pa, pb, rigid)
        case Not(x), Not(y):
            return _unify(x, y, env, pa, pb, rigid)
        case (And(l1, r1), And(l2, r2)) | (Or(l1, r1), Or(l2, r2)) | (
            Implies(l1, r1),
            Implies(l2, r2),
        ) | (Equiv(l1, r1), Equiv(l2, r2)):
            env = _unify(l1, l2, env, pa, pb, rigid)
            if env is None:
                return None
            return _unify(r1, r2, env, pa, pb, rigid)
        case Modal(f1, x), Modal(f2, y):
            return _unify(x, y, env, pa, pb, rigid) if f1 == f2 else None
        case RestrictedQuant(q1, v1, r1, b1), RestrictedQuant(q2, v2, r2, b2):
            if q1 != q2:
                return None
            mark = ("q", len(pa), len(pb))
            pa2 = dict(pa)
            pb2 = dict(pb)
            pa2[v1] = mark
            pb2[v2] = mark
            env = _unify(r1, r2, env, pa2, pb2, rigid)
            if env is None:
                return None
            return _unify(b1, b2, env, pa2, pb2, rigid)
    return None


# ---------------------------------------------------------------------------
# Search machinery


class _Budget(Exception):
    pass


@dataclass
class _Clause:
    kind: str  # "impl" | "equiv" | "bare"
    vars: tuple
    antecedents: tuple  # for impl
    consequent: Optional[Formula]  # impl consequent / bare matrix
    left: Optional[Formula] = None  # equiv sides
    right: Optional[Formula] = None
    label: str = ""


def _compile_axiom(axiom: Formula, label: str) -> _Clause:
    vs, matrix = strip_universals(axiom)
    if isinstance(matrix, Implies):
        return _Clause(
            "impl", tuple(vs), tuple(conjuncts(matrix.left)), matrix.right, label=label
        )
    if isinstance(matrix, Equiv):
        return _Clause(
            "equiv", tuple(vs), (), None, matrix.left, matrix.right, label=label
        )
    return _Clause("bare", tuple(vs), (), matrix, label=label)


class _Search:
    def __init__(self, kb: KnowledgeBase, cfg: ProverConfig):
        self.kb = kb
        self.cfg = cfg
        self.registry = kb.registry
        self.explored = 0
        self.exhausted = False
        self.deadline = time.monotonic() + cfg.timeout_ms / 1000.0
        self.fresh_counter = 0
        self.clauses = [
            _compile_axiom(ax, f"axiom-{i + 1}") for i, ax in enumerate(kb.axioms)
        ]
        self.equivalences = [c for c in self.clauses if c.kind == "equiv"]

    # -- bookkeeping --------------------------------------------------------

    def tick(self):
        self.explored += 1
        if self.explored > self.cfg.max_explored:
            self.exhausted = True
            raise _Budget()
        if self.explored % 256 == 0 and time.monotonic() > self.deadline:
            self.exhausted = True
            raise _Budget()

    def fresh_clause(self, clause: _Clause) -> _Clause:
        if not clause.vars:
            return clause
        ren = {}
        for v in clause.vars:
            self.fresh_counter += 1
            ren[v] = Var(f"v{self.fresh_counter}")
        return _Clause(
            clause.kind,
            tuple(ren[v].name for v in clause.vars),
            tuple(subst_map(a, ren) for a in clause.antecedents),
            subst_map(clause.consequent, ren) if clause.consequent is not None else None,
            subst_map(clause.left, ren) if clause.left is not None else None,
            subst_map(clause.right, ren) if clause.right is not None else None,
            clause.label,
        )

    # -- the solver ---------------------------------------------------------

    def solve(self, goal, env, depth, visited, extra, lex_budget, split_done):
        """Yield (env, trace, lexical_used) for each way to prove goal."""
        if depth > self.cfg.max_depth:
            self.exhausted = True
            return
        goal = resolve_formula(goal, env)
        closed = not free_vars(goal)
        key = None
        if closed:
            key = (alpha_key(goal), tuple(sorted(alpha_key(f) for f in extra)))
            if key in visited:
                return
            visited = visited | {key}

        yield from self._reflexivity(goal, env)
        yield from self._facts(goal, env, extra)
        yield from self._axioms(goal, env, depth, visited, extra, lex_budget, split_done)
        yield from self._schemas(goal, env, depth, visited, extra, lex_budget, split_done)
        yield from self._monotone(goal, env, depth, visited, extra, lex_budget, split_done)
        yield from self._structural(goal, env, depth, visited, extra, lex_budget, split_done)

    def _reflexivity(self, goal, env):
        if isinstance(goal, Equal):
            self.tick()
            e2 = unify(goal.left, goal.right, env)
            if e2 is not None:
                yield e2, TraceNode("reflexivity", resolve_formula(goal, e2)), 0
        elif isinstance(goal, TrueF):
            self.tick()
            yield env, TraceNode("fact-match", goal, detail="true"), 0

    def _facts(self, goal, env, extra):
        for fact in list(self.kb.facts) + list(extra):
            self.tick()
            e2 = unify(goal, fact, env)
            if e2 is not None:
                yield e2, TraceNode("fact-match", resolve_formula(goal, e2)), 0

    def _prove_all(self, subgoals, env, depth, visited, extra, lex_budget, split_done):
        """Yield (env, traces tuple, lexical sum) proving every subgoal."""
        if not subgoals:
            yield env, (), 0
            return
        head, *rest = subgoals
        for e1, t1, l1 in self.solve(
            head, env, depth, visited, extra, lex_budget, split_done
        ):
            for e2, ts, l2 in self._prove_all(
                rest, e1, depth, visited, extra, lex_budget - l1, split_done
            ):
                yield e2, (t1,) + ts, l1 + l2

    def _axioms(self, goal, env, depth, visited, extra, lex_budget, split_done):
        if lex_budget < 1:
            if self.clauses:
                self.exhausted = True
            return
        for clause in self.clauses:
            if clause.kind == "equiv":
                continue
            self.tick()
            c = self.fresh_clause(clause)
            e2 = unify(c.consequent, goal, env)
            if e2 is None:
                continue
            if clause.kind == "bare":
                yield e2, TraceNode(
                    "axiom-match", resolve_formula(goal, e2), detail=c.label
                ), 1
                continue
            subgoals = [resolve_formula(a, e2) for a in c.antecedents]
            for e3, traces, lex in self._prove_all(
                subgoals, e2, depth + 1, visited, extra, lex_budget - 1, split_done
            ):
                yield e3, TraceNode(
                    "axiom-match", resolve_formula(goal, e3), traces, c.label
                ), 1 + lex

    def _schemas(self, goal, env, depth, visited, extra, lex_budget, split_done):
        if free_vars(goal):
            return
        if lex_budget < 1:
            if self.kb.schemas:
                self.exhausted = True
            return
        for schema in self.kb.schemas:
            self.tick()
            try:
                bindings = match_conclusion(schema, goal, self.registry)
            except Exception:
                continue
            for binding in bindings:
                meta = {
                    k: v for k, v in binding.items() if not k.startswith("_")
                }
                if not binding_total(schema, meta):
                    continue  # premise-only metavariables stay open; skip
                self.tick()
                try:
                    inst = instantiate(schema, meta, self.registry)
                except Exception:
                    continue
                c = self.fresh_clause(_compile_axiom(inst, schema.name))
                if c.kind == "impl":
                    e2 = unify(c.consequent, goal, env)
                    if e2 is None:
                        continue
                    subgoals = [resolve_formula(a, e2) for a in c.antecedents]
                    for e3, traces, lex in self._prove_all(
                        subgoals, e2, depth + 1, visited, extra,
                        lex_budget - 1, split_done,
                    ):
                        yield e3, TraceNode(
                            "schema-apply", resolve_formula(goal, e3), traces,
                            schema.name,
                        ), 1 + lex
                elif c.kind == "equiv":
                    for this_side, other_side in (
                        (c.left, c.right), (c.right, c.left)
                    ):
                        e2 = unify(this_side, goal, env)
                        if e2 is None:
                            continue
                        subgoal = resolve_formula(other_side, e2)
                        if free_vars(subgoal):
                            continue
                        for e3, t1, lex in self.solve(
                            subgoal, e2, depth + 1, visited, extra,
                            lex_budget - 1, split_done,
                        ):
                            yield e3, TraceNode(
                                "schema-apply", resolve_formula(goal, e3), (t1,),
                                schema.name,
                            ), 1 + lex
                else:
                    e2 = unify(c.consequent, goal, env)
                    if e2 is not None:
                        yield e2, TraceNode(
                            "schema-apply", resolve_formula(goal, e2), (),
                            schema.name,
                        ), 1

    # -- monotone quantifier rule -------------------------------------------

    def _monotone(self, goal, env, depth, visited, extra, lex_budget, split_done):
        goal = resolve_formula(goal, env)
        if not isinstance(goal, RestrictedQuant) or free_vars(goal):
            return
        try:
            qdef = self.registry.resolve(goal.quant)
        except UnknownQuantifierError:
            return
        if qdef.right not in (UP, DOWN):
            return
        for e1, stmt_trace, lex in self._quant_statements(
            goal, env, depth, visited, extra, lex_budget, split_done
        ):
            # stmt_trace proves (quant q x R C); rewrite C until the goal body
            # relates to it by conjunct weakening in the right direction
            yield from self._monotone_close(
                goal, qdef, stmt_trace, e1, lex, depth
            )

    def _quant_statements(self, goal, env, depth, visited, extra, lex_budget, split_done):
        """Provable statements (quant q x R C) sharing the goal's quantifier,
        variable, and restrictor; yields (env, trace, lex)."""
        q, x, restr = goal.quant, goal.var, goal.restrictor
        for fact in list(self.kb.facts) + list(extra):
            if not isinstance(fact, RestrictedQuant) or fact.quant != q:
                continue
            self.tick()
            renamed_restr = subst_map(fact.restrictor, {fact.var: Var(x)})
            renamed_body = subst_map(fact.body, {fact.var: Var(x)})
            if alpha_equivalent(renamed_restr, restr):
                stmt = RestrictedQuant(q, x, restr, renamed_body)
                yield env, TraceNode("fact-match", stmt), 0
        if lex_budget < 1:
            return
        for clause in self.clauses:
            if clause.kind != "impl" or not isinstance(
                clause.consequent, RestrictedQuant
            ):
                continue
            if clause.consequent.quant != q:
                continue
            self.tick()
            c = self.fresh_clause(clause)
            cq = c.consequent
            renamed_restr = subst_map(cq.restrictor, {cq.var: Var(x)})
            renamed_body = subst_map(cq.body, {cq.var: Var(x)})
            e2 = unify(renamed_restr, restr, env)
            if e2 is None:
                continue
            subgoals = [resolve_formula(a, e2) for a in c.antecedents]
            for e3, traces, lex in self._prove_all(
                subgoals, e2, depth + 1, visited, extra, lex_budget - 1, split_done
            ):
                body = resolve_formula(renamed_body, e3)
                if free_vars(body) - {x}:
                    continue
                stmt = RestrictedQuant(q, x, restr, body)
                yield e3, TraceNode("axiom-match", stmt, traces, c.label), 1 + lex

    def _monotone_close(self, goal, qdef, stmt_trace, env, lex, depth):
        """Search bounded equivalence rewrites of the proved statement's body
        for one the goal body follows from by conjunct weakening."""

        def related(body_c) -> bool:
            cs = conjuncts(body_c)
            if qdef.right == UP:
                return any(alpha_equivalent(goal.body, c) for c in cs)
            bs = conjuncts(goal.body)
            return any(alpha_equivalent(body_c, b) for b in bs) or alpha_equivalent(
                body_c, goal.body
            )

        frontier = [stmt_trace]
        seen = {alpha_key(stmt_trace.formula)}
        for _ in range(self.cfg.rewrite_steps + 1):
            next_frontier = []
            for trace in frontier:
                stmt = trace.formula
                body_c = stmt.body
                if alpha_equivalent(stmt, goal):
                    if trace.rule == "equiv-rewrite":
                        # the rewrite chain alone reaches the goal; no
                        # weakening step left to take
                        yield env, trace, lex
                        return
                    continue  # the bare statement is the goal: not this rule
                if related(body_c):
                    yield env, TraceNode(
                        "monotone-quant", goal, (trace,), qdef.display
                    ), lex
                    return
                for body2, label in self._body_rewrites(body_c, goal.var):
                    stmt2 = RestrictedQuant(goal.quant, goal.var, goal.restrictor, body2)
                    k = alpha_key(stmt2)
                    if k in seen:
                        continue
                    seen.add(k)
                    next_frontier.append(
                        TraceNode("equiv-rewrite", stmt2, (trace,), label)
                    )
            frontier = next_frontier
            if not frontier:
                return

    def _body_rewrites(self, body, rigid_var):
        """One-step rewrites of a quantifier body using kb equivalences,
        applied at the whole body or one of its conjuncts."""
        cs = conjuncts(body)
        positions = [(-1, body)] + (
            [(i, c) for i, c in enumerate(cs)] if len(cs) > 1 else []
        )
        for clause in self.equivalences:
            for pos, sub in positions:
                for src, dst in ((clause.left, clause.right), (clause.right, clause.left)):
                    self.tick()
                    c = self.fresh_clause(clause)
                    s = c.left if src is clause.left else c.right
                    d = c.right if src is clause.left else c.left
                    e = unify(s, sub, {})
                    if e is None:
                        continue
                    newsub = resolve_formula(d, e)
                    if free_vars(newsub) - free_vars(sub):
                        continue
                    if pos == -1:
                        yield newsub, c.label
                    else:
                        cs2 = list(cs)
                        cs2[pos] = newsub
                        out = cs2[0]
                        for extra_c in cs2[1:]:
                            out = And(out, extra_c)
                        yield out, c.label

    # -- structural rules ----------------------------------------------------

    def _structural(self, goal, env, depth, visited, extra, lex_budget, split_done):
        goal_r = resolve_formula(goal, env)
        if isinstance(goal_r, And):
            self.tick()
            parts = conjuncts(goal_r)
            for e2, traces, lex in self._prove_all(
                parts, env, depth + 1, visited, extra, lex_budget, split_done
            ):
                yield e2, TraceNode(
                    "and-intro", resolve_formula(goal_r, e2), traces
                ), lex
        # and-elim from conjunctive facts
        for fact in list(self.kb.facts) + list(extra):
            cs = conjuncts(fact)
            if len(cs) < 2:
                continue
            for c in cs:
                self.tick()
                e2 = unify(goal_r, c, env)
                if e2 is not None:
                    yield e2, TraceNode(
                        "and-elim",
                        resolve_formula(goal_r, e2),
                        (TraceNode("fact-match", fact),),
                    ), 0
        # top-level use of equivalence axioms
        if not free_vars(goal_r):
            for clause in self.equivalences:
                for side in ("lr", "rl"):
                    self.tick()
                    c = self.fresh_clause(clause)
                    this, other = (c.left, c.right) if side == "lr" else (
                        c.right, c.left
                    )
                    e2 = unify(this, goal_r, env)
                    if e2 is None:
                        continue
                    subgoal = resolve_formula(other, e2)
                    if free_vars(subgoal):
                        continue
                    for e3, t1, lex in self.solve(
                        subgoal, e2, depth + 1, visited, extra, lex_budget, split_done
                    ):
                        yield e3, TraceNode(
                            "equiv-rewrite", resolve_formula(goal_r, e3), (t1,),
                            c.label,
                        ), lex
        if isinstance(goal_r, Or):
            for d in disjuncts(goal_r):
                self.tick()
                for e2, t1, lex in self.solve(
                    d, env, depth + 1, visited, extra, lex_budget, split_done
                ):
                    yield e2, TraceNode(
                        "or-intro", resolve_formula(goal_r, e2), (t1,)
                    ), lex
        if isinstance(goal_r, Implies) and not free_vars(goal_r.left):
            self.tick()
            for e2, t1, lex in self.solve(
                goal_r.right, env, depth + 1, visited, extra + (goal_r.left,),
                lex_budget, split_done,
            ):
                yield e2, TraceNode(
                    "impl-intro", resolve_formula(goal_r, e2), (t1,)
                ), lex
        # case analysis on disjunctive facts, last resort
        if not free_vars(goal_r):
            for fi, fact in enumerate(list(self.kb.facts) + list(extra)):
                ds = disjuncts(fact)
                if len(ds) < 2:
                    continue
                fkey = alpha_key(fact)
                if fkey in split_done:
                    continue
                self.tick()
                case_traces = []
                total_lex = 0
                ok = True
                for case in ds:
                    found = False
                    for _e2, t1, lex in self.solve(
                        goal_r, env, depth + 1, visited, extra + (case,),
                        lex_budget - total_lex, split_done | {fkey},
                    ):
                        case_traces.append(t1)
                        total_lex += lex
                        found = True
                        break
                    if not found:
                        ok = False
                        break
                if ok:
                    yield env, TraceNode(
                        "or-elim",
                        goal_r,
                        (TraceNode("fact-match", fact),) + tuple(case_traces),
                        f"{len(ds)} cases",
                    ), total_lex


def _resolve_trace(node: TraceNode, env: dict) -> TraceNode:
    return TraceNode(
        node.rule,
        resolve_formula(node.formula, env),
        tuple(_resolve_trace(c, env) for c in node.children),
        node.detail,
    )


def prove(kb: KnowledgeBase, goal: Formula, cfg: Optional[ProverConfig] = None) -> ProveResult:
    """Backward-chaining proof search for a closed goal."""
    cfg = cfg if cfg is not None else ProverConfig()
    if free_vars(goal):
        raise ValueError("prove requires a closed goal")
    search = _Search(kb, cfg)
    start = time.monotonic()
    try:
        for env, trace, lex in search.solve(
            goal, {}, 0, frozenset(), (), cfg.max_lexical_steps, frozenset()
        ):
            elapsed = (time.monotonic() - start) * 1000
            return ProveResult(PROVED, _resolve_trace(trace, env), search.explored, elapsed)
    except _Budget:
        pass
    elapsed = (time.monotonic() - start) * 1000
    outcome = EXHAUSTED if search.exhausted else FAILED
    return ProveResult(outcome, None, search.explored, elapsed)


# ---------------------------------------------------------------------------
# Forward chaining


@dataclass
class ForwardResult:
    derived: list  # new formulas in derivation order
    steps: list  # (formula, rule, detail)
    exhausted: bool = False


def _match_conjuncts(ants, env, facts):
    if not ants:
        yield env
        return
    head, *rest = ants
    head_parts = conjuncts(head)
    if len(head_parts) > 1:
        yield from _match_conjuncts(head_parts + rest, env, facts)
        return
    for fact in facts:
        e2 = unify(head, fact, env)
        if e2 is not None:
            yield from _match_conjuncts(rest, e2, facts)


def forward_chain(
    kb: KnowledgeBase, cfg: Optional[ProverConfig] = None, instance_bounds=None
) -> ForwardResult:
    """Saturate the fact set under single applications of axioms, bounded
    schema instances, and the monotone conjunct-dropping rule."""
    from .schemas import InstanceBounds, enumerate_instances

    cfg = cfg if cfg is not None else ProverConfig()
    bounds = instance_bounds if instance_bounds is not None else InstanceBounds(
        max_quant_param=2, max_formula_instances=8
    )
    clauses = [
        _compile_axiom(ax, f"axiom-{i + 1}") for i, ax in enumerate(kb.axioms)
    ]
    for si, schema in enumerate(kb.schemas):
        try:
            for k, inst in enumerate(
                enumerate_instances(schema, kb.signature, kb.registry, bounds)
            ):
                clauses.append(_compile_axiom(inst, f"{schema.name}[{k}]"))
        except Exception:
            continue
    facts = list(kb.facts)
    keys = {alpha_key(f) for f in facts}
    steps = []
    exhausted = False

    def add(f, rule, detail) -> bool:
        k = alpha_key(f)
        if k in keys:
            return False
        keys.add(k)
        facts.append(f)
        steps.append((f, rule, detail))
        return True

    for _round in range(cfg.max_depth):
        if len(facts) > cfg.max_explored:
            exhausted = True
            break
        snapshot = list(facts)
        changed = False
        for clause in clauses:
            if clause.kind == "bare":
                if not free_vars(clause.consequent):
                    changed |= add(clause.consequent, "axiom-match", clause.label)
                continue
            if clause.kind == "impl":
                for env in _match_conjuncts(list(clause.antecedents), {}, snapshot):
                    derived = resolve_formula(clause.consequent, env)
                    if not free_vars(derived):
                        changed |= add(derived, "axiom-match", clause.label)
            else:
                for src, dst in (
                    (clause.left, clause.right),
                    (clause.right, clause.left),
                ):
                    for fact in snapshot:
                        env = unify(src, fact, {})
                        if env is None:
                            continue
                        derived = resolve_formula(dst, env)
                        if not free_vars(derived):
                            changed |= add(derived, "equiv-rewrite", clause.label)
        for fact in snapshot:
            if isinstance(fact, RestrictedQuant) and not free_vars(fact):
                try:
                    qdef = kb.registry.resolve(fact.quant)
                except UnknownQuantifierError:
                    continue
                if qdef.right != UP:
                    continue
                cs = conjuncts(fact.body)
                if len(cs) < 2:
                    continue
                for c in cs:
                    reduced = RestrictedQuant(fact.quant, fact.var, fact.restrictor, c)
                    changed |= add(reduced, "monotone-quant", qdef.display)
        if not changed:
            break
    else:
        exhausted = True
    derived = facts[len(kb.facts):]
    return ForwardResult(derived, steps, exhausted)


# ---------------------------------------------------------------------------
# Trace replay


def replay(trace: TraceNode, kb: KnowledgeBase, extra=()) -> list:
    """Re-validate every step of a trace against kb; returns problems."""
    problems: list = []
    _replay(trace, kb, tuple(extra), problems)
    return problems


def _replay(node: TraceNode, kb: KnowledgeBase, extra: tuple, problems: list) -> None:
    rule = node.rule
    f = node.formula
    ok = False
    if rule == "fact-match":
        ok = isinstance(f, TrueF) or any(
            alpha_equivalent(f, fact) for fact in list(kb.facts) + list(extra)
        )
    elif rule == "reflexivity":
        ok = isinstance(f, Equal) and alpha_equivalent(f.left, f.right)
    elif rule == "axiom-match":
        ok = _replay_clause_use(
            [_compile_axiom(a, "") for a in kb.axioms], node
        )
    elif rule == "schema-apply":
        ok = _replay_schema(node, kb)
    elif rule == "equiv-rewrite":
        ok = len(node.children) == 1 and _replay_equiv(
            node.children[0].formula, f, kb
        )
    elif rule == "monotone-quant":
        ok = _replay_monotone(node, kb)
    elif rule == "and-intro":
        ok = isinstance(f, And) and [
            alpha_key(c) for c in conjuncts(f)
        ] == [alpha_key(c.formula) for c in node.children]
    elif rule == "and-elim":
        ok = len(node.children) == 1 and any(
            alpha_equivalent(f, c) for c in conjuncts(node.children[0].formula)
        )
    elif rule == "or-intro":
        ok = (
            isinstance(f, Or)
            and len(node.children) == 1
            and any(
                alpha_equivalent(node.children[0].formula, d) for d in disjuncts(f)
            )
        )
    elif rule == "impl-intro":
        ok = isinstance(f, Implies) and len(node.children) == 1 and alpha_equivalent(
            node.children[0].formula, f.right
        )
    elif rule == "or-elim":
        ok = _replay_or_elim(node, kb, extra, problems)
        if ok:
            return  # children validated with case assumptions inside
    else:
        problems.append(f"unknown rule {rule}")
        return
    if not ok:
        problems.append(f"{rule} does not re-derive {render(f)}")
    for child in node.children:
        child_extra = extra
        if rule == "impl-intro":
            child_extra = extra + (f.left,)
        _replay(child, kb, child_extra, problems)


def _replay_clause_use(clauses, node: TraceNode) -> bool:
    for clause in clauses:
        if clause.kind == "equiv":
            continue
        if clause.kind == "bare":
            if node.children:
                continue
            env = unify(clause.consequent, node.formula, {})
            if env is not None:
                return True
            continue
        if len(clause.antecedents) and not node.children:
            continue
        env = unify(clause.consequent, node.formula, {})
        if env is None:
            continue
        ants = []
        for a in clause.antecedents:
            ants.extend(conjuncts(a))
        if len(ants) != len(node.children):
            continue
        good = True
        for a, child in zip(ants, node.children):
            env = unify(a, child.formula, env)
            if env is None:
                good = False
                break
        if good:
            return True
    return False


def _replay_schema(node: TraceNode, kb: KnowledgeBase) -> bool:
    for schema in kb.schemas:
        if schema.name != node.detail:
            continue
        try:
            bindings = match_conclusion(schema, node.formula, kb.registry)
        except Exception:
            return False
        for binding in bindings:
            meta = {k: v for k, v in binding.items() if not k.startswith("_")}
            if not binding_total(schema, meta):
                continue
            try:
                inst = instantiate(schema, meta, kb.registry)
            except Exception:
                continue
            clause = _compile_axiom(inst, schema.name)
            if clause.kind == "equiv":
                for this, other in ((clause.left, clause.right), (clause.right, clause.left)):
                    env = unify(this, node.formula, {})
                    if env is None or len(node.children) != 1:
                        continue
                    if unify(other, node.children[0].formula, env) is not None:
                        return True
            elif _replay_clause_use([clause], node):
                return True
    return False


def _replay_equiv(source: Formula, target: Formula, kb: KnowledgeBase) -> bool:
    """target is source with one subformula rewritten by a kb equivalence."""
    equivs = [
        _compile_axiom(a, "") for a in kb.axioms
        if _compile_axiom(a, "").kind == "equiv"
    ]

    def instance_ok(x, y) -> bool:
        for c in equivs:
            for l, r in ((c.left, c.right), (c.right, c.left)):
                env = unify(l, x, {})
                if env is None:
                    continue
                if alpha_equivalent(resolve_formula(r, env), y):
                    return True
        return False

    def diff(a, b) -> bool:
        if alpha_equivalent(a, b):
            return False
        if instance_ok(a, b):
            return True
        if type(a) is not type(b):
            return False
        match a, b:
            case (And(l1, r1), And(l2, r2)) | (Or(l1, r1), Or(l2, r2)) | (
                Implies(l1, r1),
                Implies(l2, r2),
            ) | (Equiv(l1, r1), Equiv(l2, r2)):
                if alpha_equivalent(l1, l2):
                    return diff(r1, r2)
                if alpha_equivalent(r1, r2):
                    return diff(l1, l2)
                return False
            case Not(x), Not(y):
                return diff(x, y)
            case Modal(f1, x), Modal(f2, y):
                return f1 == f2 and diff(x, y)
            case RestrictedQuant(q1, v1, r1, b1), RestrictedQuant(q2, v2, r2, b2):
                if q1 != q2:
                    return False
                r2s = subst_map(r2, {v2: Var(v1)})
                b2s = subst_map(b2, {v2: Var(v1)})
                if alpha_equivalent(r1, r2s):
                    return diff(b1, b2s)
                if alpha_equivalent(b1, b2s):
                    return diff(r1, r2s)
                return False
        return False

    return diff(source, target)


def _replay_monotone(node: TraceNode, kb: KnowledgeBase) -> bool:
    f = node.formula
    if not isinstance(f, RestrictedQuant) or len(node.children) != 1:
        return False
    src = node.children[0].formula
    if not isinstance(src, RestrictedQuant) or src.quant != f.quant:
        return False
    if not alpha_equivalent(
        RestrictedQuant(f.quant, f.var, f.restrictor, TrueF()),
        RestrictedQuant(src.quant, src.var, src.restrictor, TrueF()),
    ):
        return False
    try:
        qdef = kb.registry.resolve(f.quant)
    except UnknownQuantifierError:
        return False
    src_body = subst_map(src.body, {src.var: Var(f.var)})
    if qdef.right == UP:
        return any(alpha_equivalent(f.body, c) for c in conjuncts(src_body))
    if qdef.right == DOWN:
        return any(alpha_equivalent(src_body, c) for c in conjuncts(f.body))
    return False


def _replay_or_elim(node: TraceNode, kb: KnowledgeBase, extra, problems) -> bool:
    if len(node.children) < 2:
        return False
    fact_node = node.children[0]
    _replay(fact_node, kb, extra, problems)
    ds = disjuncts(fact_node.formula)
    cases = node.children[1:]
    if len(ds) != len(cases):
        return False
    for d, case in zip(ds, cases):
        if not alpha_equivalent(case.formula, node.formula):
            return False
        _replay(case, kb, extra + (d,), problems)
    return True
