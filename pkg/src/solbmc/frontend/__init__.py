"""Frontend: lex, parse, type-check and subset-validate Sol source."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .lexer import tokenize
from .nodes import (
    ContractAst, Diagnostic, ParseError, Span, SubsetViolation,
)
from .parser import parse_tokens
from .pretty import pretty_print
from .subset import validate_constructor, validate_subset
from .typecheck import typecheck

__all__ = [
    "parse", "ParseResult", "pretty_print", "validate_subset",
    "validate_constructor", "ContractAst", "Diagnostic", "SubsetViolation",
]


@dataclass
class ParseResult:
    contract: Optional[ContractAst]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.contract is not None and not self.diagnostics


def parse(source: str) -> ParseResult:
    """Parse and type-check Sol source.

    Total: returns either a fully typed AST or at least one diagnostic, never
    raises on user input.
    """
    try:
        tokens = tokenize(source)
        ast = parse_tokens(tokens)
    except ParseError as exc:
        return ParseResult(None, [Diagnostic("syntax", exc.message, exc.span)])
    except RecursionError:
        return ParseResult(None, [Diagnostic("syntax", "input nests too deeply", Span(1, 1, 1, 1))])
    diags = typecheck(ast)
    if diags:
        return ParseResult(None, diags)
    return ParseResult(ast, [])
