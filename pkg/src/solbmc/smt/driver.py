"""Drive an external SMT-LIB2 solver process and parse models back.

The default back end is the bundled solver (``python -m solbmc.solver``);
any SMT-LIB2-speaking binary can replace it.  One process per query by
default; the incremental session keeps a single process alive and uses
push/pop for the iterative-deepening loops.
"""

from __future__ import annotations

import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .. import terms as T
from ..sexpr import SexprError, parse_all
from .smtlib import ScriptBuilder, sanitize


class SolverProcessError(Exception):
    pass


@dataclass(frozen=True)
class Sat:
    values: dict[str, object]


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str


CheckResult = Union[Sat, Unsat, Unknown]


def default_command() -> list[str]:
    return [sys.executable, "-m", "solbmc.solver"]


@dataclass
class SolverConfig:
    command: list[str] = field(default_factory=default_command)
    extra_args: list[str] = field(default_factory=list)
    timeout: float = 600.0
    dump_dir: Optional[Path] = None
    logic: str = "ALL"

    def full_command(self) -> list[str]:
        return list(self.command) + list(self.extra_args)


class SolverDriver:
    def __init__(self, config: Optional[SolverConfig] = None):
        self.config = config or SolverConfig()
        self.query_count = 0
        self.total_time = 0.0

    # -- script assembly -----------------------------------------------------

    def build_script(self, assertions: Sequence[T.Term],
                     want: Sequence[tuple[str, T.Sort]]) -> tuple[str, dict[str, str]]:
        builder = ScriptBuilder(self.config.logic)
        reverse: dict[str, str] = {}
        for name, sort in want:
            sym = builder.declare_var(name, sort)
            reverse[sym] = name
        for t in assertions:
            builder.assert_term(t)
        builder.check_sat()
        builder.get_values([name for name, _ in want])
        return builder.text(), reverse

    def _dump(self, text: str) -> None:
        if self.config.dump_dir is None:
            return
        self.config.dump_dir.mkdir(parents=True, exist_ok=True)
        path = self.config.dump_dir / f"query_{self.query_count:04d}.smt2"
        path.write_text(text)

    # -- one process per query ---------------------------------------------------

    def check_sat(self, assertions: Sequence[T.Term],
                  want: Sequence[tuple[str, T.Sort]] = ()) -> CheckResult:
        self.query_count += 1
        script, reverse = self.build_script(assertions, want)
        self._dump(script)
        started = time.monotonic()
        try:
            proc = subprocess.run(
                self.config.full_command(),
                input=script.encode(),
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                timeout=self.config.timeout,
            )
        except FileNotFoundError as exc:
            raise SolverProcessError(f"solver binary not found: {exc}") from exc
        except subprocess.TimeoutExpired:
            self.total_time += time.monotonic() - started
            return Unknown(f"solver timed out after {self.config.timeout:.0f}s")
        finally:
            pass
        self.total_time += time.monotonic() - started
        out = proc.stdout.decode(errors="replace")
        if proc.returncode not in (0, 1):
            raise SolverProcessError(
                f"solver exited with code {proc.returncode}: {proc.stderr.decode(errors='replace')[:500]}"
            )
        return self._parse_response(out, reverse, dict(want))

    def _parse_response(self, out: str, reverse: dict[str, str],
                        want_sorts: dict[str, T.Sort]) -> CheckResult:
        status: Optional[str] = None
        value_text_parts: list[str] = []
        for line in out.splitlines():
            stripped = line.strip()
            if status is None:
                if stripped in ("sat", "unsat", "unknown"):
                    status = stripped
                    continue
                if stripped.startswith("(error"):
                    raise SolverProcessError(f"solver error: {stripped}")
                continue
            value_text_parts.append(line)
        if status is None:
            raise SolverProcessError(f"no check-sat answer in solver output: {out[:300]!r}")
        if status == "unsat":
            return Unsat()
        if status == "unknown":
            return Unknown("solver answered unknown")
        values = self._parse_values("\n".join(value_text_parts), reverse, want_sorts)
        return Sat(values)

    def _parse_values(self, text: str, reverse: dict[str, str],
                      want_sorts: dict[str, T.Sort]) -> dict[str, object]:
        values: dict[str, object] = {}
        if not text.strip():
            return values
        try:
            forms = parse_all(text)
        except SexprError as exc:
            raise SolverProcessError(f"cannot parse model response: {exc}") from exc
        for form in forms:
            if not isinstance(form, list):
                continue
            if form and form[0] == "error":
                continue
            for pair in form:
                if not isinstance(pair, list) or len(pair) != 2:
                    continue
                sym, val = pair
                if not isinstance(sym, str):
                    continue
                sym = sym[1:-1] if sym.startswith("|") else sym
                raw_name = reverse.get(sym, sym)
                sort = want_sorts.get(raw_name)
                values[raw_name] = _parse_value(val, sort)
        return values


def _parse_value(val, sort: Optional[T.Sort]):
    if isinstance(val, list):
        if len(val) == 3 and val[0] == "_" and isinstance(val[1], str) and val[1].startswith("bv"):
            return int(val[1][2:])
        if len(val) == 2 and val[0] == "-":
            return -_parse_value(val[1], sort)
        raise SolverProcessError(f"unexpected model value {val!r}")
    if val == "true":
        return True
    if val == "false":
        return False
    if val.startswith("#x"):
        return int(val[2:], 16)
    if val.startswith("#b"):
        return int(val[2:], 2)
    if val.lstrip("-").isdigit():
        return int(val)
    if isinstance(sort, T.EnumSort):
        name = val[1:-1] if val.startswith("|") else val
        if name in sort.members:
            return sort.members.index(name)
    raise SolverProcessError(f"unexpected model value {val!r} for sort {sort!r}")


class SolverSession:
    """Incremental session over one live solver process (push/pop)."""

    def __init__(self, config: Optional[SolverConfig] = None):
        self.config = config or SolverConfig()
        try:
            self.proc = subprocess.Popen(
                self.config.full_command(),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except FileNotFoundError as exc:
            raise SolverProcessError(f"solver binary not found: {exc}") from exc
        self.builder = ScriptBuilder(self.config.logic)
        self._send(self.builder.lines[0] + "\n")
        self.builder.lines.clear()
        self.reverse: dict[str, str] = {}
        self.want_sorts: dict[str, T.Sort] = {}

    def _send(self, text: str) -> None:
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(text.encode())
            self.proc.stdin.flush()
        except BrokenPipeError as exc:
            raise SolverProcessError("solver process died") from exc

    def _flush_pending(self) -> None:
        if self.builder.lines:
            self._send("\n".join(self.builder.lines) + "\n")
            self.builder.lines.clear()

    def declare(self, want: Sequence[tuple[str, T.Sort]]) -> None:
        for name, sort in want:
            sym = self.builder.declare_var(name, sort)
            self.reverse[sym] = name
            self.want_sorts[name] = sort

    def assert_term(self, t: T.Term) -> None:
        self.builder.assert_term(t)

    def push(self) -> None:
        self.builder.lines.append("(push 1)")

    def pop(self) -> None:
        self.builder.lines.append("(pop 1)")

    def _read_line(self, deadline: float) -> str:
        assert self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if line == b"":
            raise SolverProcessError("solver process closed its output")
        return line.decode(errors="replace").strip()

    def check_sat(self, want: Sequence[tuple[str, T.Sort]] = ()) -> CheckResult:
        self.builder.lines.append("(check-sat)")
        self._flush_pending()
        deadline = time.monotonic() + self.config.timeout
        line = self._read_line(deadline)
        while line == "" or line.startswith(";"):
            line = self._read_line(deadline)
        if line == "unsat":
            return Unsat()
        if line == "unknown":
            return Unknown("solver answered unknown")
        if line != "sat":
            raise SolverProcessError(f"unexpected check-sat answer {line!r}")
        if not want:
            return Sat({})
        values: dict[str, object] = {}
        names = [name for name, _ in want]
        for i in range(0, len(names), 64):
            chunk = names[i : i + 64]
            syms = " ".join(sanitize(n) for n in chunk)
            self._send(f"(get-value ({syms}))\n")
            depth = 0
            buf = []
            assert self.proc.stdout is not None
            while True:
                raw = self.proc.stdout.readline()
                if raw == b"":
                    raise SolverProcessError("solver closed during get-value")
                text = raw.decode(errors="replace")
                buf.append(text)
                depth += text.count("(") - text.count(")")
                if depth <= 0 and any("(" in b for b in buf):
                    break
            forms = parse_all("".join(buf))
            for form in forms:
                if not isinstance(form, list):
                    continue
                for pair in form:
                    if isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str):
                        sym = pair[0][1:-1] if pair[0].startswith("|") else pair[0]
                        raw_name = self.reverse.get(sym, sym)
                        sort = self.want_sorts.get(raw_name)
                        values[raw_name] = _parse_value(pair[1], sort)
        return Sat(values)

    def close(self) -> None:
        try:
            self._send("(exit)\n")
        except SolverProcessError:
            pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
