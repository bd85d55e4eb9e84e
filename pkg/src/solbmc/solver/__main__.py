"""Standalone SMT-LIB2 solver process: reads commands on stdin, answers on stdout.

This is the default back end the solver driver spawns; any SMT-LIB2 solver
(z3, cvc5, ...) can replace it via --solver.
"""

from __future__ import annotations

import sys

from ..sexpr import SexprError, StreamReader
from .engine import EngineError, SmtEngine


def main() -> int:
    sys.setrecursionlimit(100000)
    engine = SmtEngine()
    reader = StreamReader()
    out = sys.stdout
    try:
        while True:
            chunk = sys.stdin.readline()
            if chunk == "":
                for form in reader.feed(""):
                    _run(engine, form, out)
                return 0
            for form in reader.feed(chunk):
                _run(engine, form, out)
    except SystemExit as exc:
        return int(exc.code or 0)
    except BrokenPipeError:
        return 0


def _run(engine: SmtEngine, form, out) -> None:
    try:
        response = engine.execute(form)
    except (EngineError, SexprError, ValueError, KeyError, IndexError, TypeError) as exc:
        response = f'(error "{exc}")'
    if response is not None:
        out.write(response + "\n")
        out.flush()


if __name__ == "__main__":
    sys.exit(main())
