"""Minimal SMT-LIB2 s-expression reader.

Atoms stay strings; nesting becomes lists.  The incremental feeder yields
complete top-level forms as they arrive, which lets both the solver engine
and the model parser work on a stream.
"""

from __future__ import annotations

from typing import Iterator, Optional


class SexprError(Exception):
    pass


def tokenize(text: str) -> Iterator[str]:
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c in "()":
            yield c
            i += 1
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SexprError("unterminated quoted symbol")
            yield text[i : j + 1]
            i = j + 1
            continue
        if c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SexprError("unterminated string literal")
            yield text[i : j + 1]
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n();":
            j += 1
        yield text[i:j]
        i = j


def parse_all(text: str) -> list:
    """Parse every top-level form in the text."""
    out = []
    stack: list[list] = []
    current: Optional[list] = None
    for tok in tokenize(text):
        if tok == "(":
            new: list = []
            if current is not None:
                current.append(new)
                stack.append(current)
            current = new
        elif tok == ")":
            if current is None:
                raise SexprError("unbalanced ')'")
            if stack:
                current = stack.pop()
            else:
                out.append(current)
                current = None
        else:
            if current is None:
                out.append(tok)
            else:
                current.append(tok)
    if current is not None:
        raise SexprError("unbalanced '('")
    return out


class StreamReader:
    """Feed text chunks; pop complete top-level forms as they close."""

    def __init__(self) -> None:
        self.buffer = ""
        self.depth = 0
        self.ready: list = []

    def feed(self, chunk: str) -> list:
        self.buffer += chunk
        forms = []
        # scan for balanced prefixes (cheap: only track parens outside comments/strings)
        start = 0
        depth = 0
        i = 0
        buf = self.buffer
        n = len(buf)
        in_comment = False
        in_string: Optional[str] = None
        while i < n:
            c = buf[i]
            if in_comment:
                if c == "\n":
                    in_comment = False
            elif in_string is not None:
                if c == in_string:
                    in_string = None
            elif c == ";":
                in_comment = True
            elif c in ('"', "|"):
                in_string = c
            elif c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
                if depth == 0:
                    forms.extend(parse_all(buf[start : i + 1]))
                    start = i + 1
                if depth < 0:
                    raise SexprError("unbalanced ')'")
            elif depth == 0 and c not in " \t\r\n":
                # bare atom at top level: consume to whitespace
                j = i
                while j < n and buf[j] not in " \t\r\n(;":
                    j += 1
                if j < n or chunk == "":
                    forms.append(buf[i:j])
                    start = j
                    i = j
                    continue
                break
            i += 1
        self.buffer = buf[start:]
        return forms


def format_sexpr(form) -> str:
    if isinstance(form, list):
        return "(" + " ".join(format_sexpr(f) for f in form) + ")"
    return str(form)
