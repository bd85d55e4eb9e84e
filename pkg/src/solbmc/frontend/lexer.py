"""Tokenizer for the Sol surface syntax."""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import ParseError, Span

KEYWORDS = {
    "pragma", "solidity", "contract", "interface", "is", "function", "constructor",
    "event", "enum", "mapping", "returns", "return", "public", "external", "internal",
    "private", "payable", "view", "pure", "constant", "if", "else", "for", "while",
    "do", "emit", "throw", "var", "true", "false", "new", "delete",
}

TYPE_KEYWORDS = {"uint", "bool", "address", "string", "bytes"}

# Multi-char operators first so maximal munch works.
PUNCT = [
    "+=", "-=", "*=", "/=", "%=", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "<<", ">>", "=>", "(", ")", "{", "}", "[", "]", ";", ",", ".", "=", "<", ">",
    "+", "-", "*", "/", "%", "!", "&", "|", "^", "~", "?", ":",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'number' | 'string' | 'punct' | 'keyword' | 'eof'
    text: str
    span: Span

    def __repr__(self) -> str:
        return f"{self.kind}({self.text!r})"


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def span_here(length: int) -> Span:
        return Span(line, col, line, col + length)

    while i < n:
        c = source[i]
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/*", i):
            start = Span(line, col, line, col)
            i += 2
            col += 2
            while i < n and not source.startswith("*/", i):
                if source[i] == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
                i += 1
            if i >= n:
                raise ParseError("unterminated block comment", start)
            i += 2
            col += 2
            continue
        if c.isdigit():
            j = i
            if source.startswith("0x", i) or source.startswith("0X", i):
                j = i + 2
                while j < n and source[j] in "0123456789abcdefABCDEF":
                    j += 1
            else:
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            tokens.append(Token("number", text, span_here(j - i)))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            # uint8..uint256 aliases collapse onto the model-wide uint
            base = text
            if text.startswith("uint") and text[4:].isdigit():
                base = "uint"
            kind = "keyword" if base in KEYWORDS or base in TYPE_KEYWORDS else "ident"
            tokens.append(Token(kind, base, span_here(j - i)))
            col += j - i
            i = j
            continue
        if c == '"' or c == "'":
            quote = c
            j = i + 1
            while j < n and source[j] != quote and source[j] != "\n":
                j += 1
            if j >= n or source[j] != quote:
                raise ParseError("unterminated string literal", span_here(1))
            text = source[i + 1 : j]
            tokens.append(Token("string", text, span_here(j + 1 - i)))
            col += j + 1 - i
            i = j + 1
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, span_here(len(p))))
                col += len(p)
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", span_here(1))

    tokens.append(Token("eof", "", Span(line, col, line, col)))
    return tokens
