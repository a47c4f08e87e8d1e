"""Knowledge bases: validated collections of facts, axioms, and schemas.

Facts are closed formulas asserted of the current situation; axioms are
closed formulas holding in every situation; schemas quantify over
predicates, closed formulas, and quantifier classes (see `schemas`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import syntax
from .core import Formula, Signature, free_vars, well_formed
from .quantifiers import DEFAULT_REGISTRY, QuantRegistry
from .schemas import Schema, validate_schema


class KbError(Exception):
    """A knowledge base failed to load: parse error or ill-formed entry."""

    def __init__(self, message: str, file: Optional[str] = None, span=None):
        self.file = file
        self.span = span
        where = ""
        if file is not None:
            where = f"{file}:"
        if span is not None:
            where += f"{span}: "
        elif file is not None:
            where += " "
        super().__init__(f"{where}{message}")


@dataclass
class KnowledgeBase:
    signature: Signature = field(default_factory=Signature)
    facts: list = field(default_factory=list)
    axioms: list = field(default_factory=list)
    schemas: list = field(default_factory=list)
    registry: QuantRegistry = field(default_factory=lambda: DEFAULT_REGISTRY)

    def with_facts(self, facts) -> "KnowledgeBase":
        return KnowledgeBase(
            self.signature, list(facts), list(self.axioms), list(self.schemas),
            self.registry,
        )


def _check_entry(kind: str, f: Formula, sig: Signature, file, span) -> None:
    if free_vars(f):
        loose = ", ".join(sorted(free_vars(f)))
        raise KbError(f"{kind} has free variables: {loose}", file, span)
    diags = well_formed(f, sig)
    if diags:
        raise KbError(f"ill-formed {kind}: {diags[0]}", file, span)


def from_source(
    src: syntax.KbSource,
    registry: Optional[QuantRegistry] = None,
    file: Optional[str] = None,
) -> KnowledgeBase:
    """Validate a parsed KbSource into a KnowledgeBase."""
    registry = registry if registry is not None else DEFAULT_REGISTRY
    kb = KnowledgeBase(signature=src.signature, registry=registry)
    for f, span in src.axioms:
        _check_entry("axiom", f, src.signature, file, span)
        kb.axioms.append(f)
    for f, span in src.facts:
        _check_entry("fact", f, src.signature, file, span)
        kb.facts.append(f)
    for form in src.schemas:
        schema = Schema(
            form.name, form.pred_vars, form.formula_vars, form.quant_vars, form.body
        )
        problems = validate_schema(schema, src.signature)
        if problems:
            raise KbError(
                f"ill-formed schema {form.name}: {problems[0]}", file, form.span
            )
        kb.schemas.append(schema)
    return kb


def load_files(paths, registry: Optional[QuantRegistry] = None):
    """Parse and validate a list of kb files.

    Returns (KnowledgeBase, queries) where queries are the QueryForm entries
    found across the files. Signature declarations from earlier files are in
    scope for later ones; well-formedness is checked once all declarations
    are read.
    """
    src = syntax.KbSource()
    per_file_forms = []
    for path in paths:
        text = Path(path).read_text(encoding="utf-8")
        before = (len(src.axioms), len(src.facts), len(src.schemas))
        try:
            syntax.parse_kb(text, into=src)
        except syntax.ParseError as e:
            raise KbError(e.message, file=str(path), span=e.span) from e
        per_file_forms.append((str(path), before))
    registry = registry if registry is not None else DEFAULT_REGISTRY
    kb = KnowledgeBase(signature=src.signature, registry=registry)
    # attribute each form to its file for error reporting
    file_of_axiom = {}
    file_of_fact = {}
    file_of_schema = {}
    for i, (path, (na, nf, ns)) in enumerate(per_file_forms):
        end = per_file_forms[i + 1][1] if i + 1 < len(per_file_forms) else (
            len(src.axioms), len(src.facts), len(src.schemas)
        )
        for j in range(na, end[0]):
            file_of_axiom[j] = path
        for j in range(nf, end[1]):
            file_of_fact[j] = path
        for j in range(ns, end[2]):
            file_of_schema[j] = path
    for j, (f, span) in enumerate(src.axioms):
        _check_entry("axiom", f, src.signature, file_of_axiom.get(j), span)
        kb.axioms.append(f)
    for j, (f, span) in enumerate(src.facts):
        _check_entry("fact", f, src.signature, file_of_fact.get(j), span)
        kb.facts.append(f)
    for j, form in enumerate(src.schemas):
        schema = Schema(
            form.name, form.pred_vars, form.formula_vars, form.quant_vars, form.body
        )
        problems = validate_schema(schema, src.signature)
        if problems:
            raise KbError(
                f"ill-formed schema {form.name}: {problems[0]}",
                file_of_schema.get(j),
                form.span,
            )
        kb.schemas.append(schema)
    return kb, list(src.queries)
