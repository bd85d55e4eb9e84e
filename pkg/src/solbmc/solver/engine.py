"""SMT-LIB2 engine over the bit-blaster: the bundled solver's brain.

Supports the quantifier-free bit-vector + enumeration-datatype fragment the
encoder emits (plus a little slack): declare-datatypes with nullary
constructors, declare-const/declare-fun of arity 0, let-bindings, push/pop
with activation literals, get-value and get-model.

One-shot sessions (no push) run a Gaussian-style equality substitution pass
before blasting: top-level conjuncts of the form ``(= x t)`` with ``x`` not
occurring in ``t`` become definitions, which collapses frame equalities and
constructor constants and shrinks the SAT problem substantially.
"""

from __future__ import annotations

import sys
from typing import Optional

from .. import terms as T
from ..sexpr import SexprError, format_sexpr
from .bitblast import BitBlaster
from .sat import SatSolver


class EngineError(Exception):
    pass


class SmtEngine:
    def __init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self.sorts: dict[str, T.Sort] = {}
        self.enum_members: dict[str, tuple[T.EnumSort, int]] = {}
        self.decls: dict[str, T.Sort] = {}
        self.frames: list[list[T.Term]] = [[]]
        self.solver: Optional[SatSolver] = None
        self.blaster: Optional[BitBlaster] = None
        self.frame_lits: list[Optional[int]] = [None]
        self.blasted_counts: list[int] = [0]
        self.incremental = False
        self.last_result: Optional[str] = None
        self.defs: dict[str, T.Term] = {}
        self.macros: dict[str, T.Term] = {}

    # -- command dispatch ------------------------------------------------------

    def execute(self, form) -> Optional[str]:
        """Run one command; return the text to print (None for silence)."""
        if not isinstance(form, list) or not form:
            raise EngineError(f"unexpected input {form!r}")
        head = form[0]
        if head in ("set-logic", "set-info", "set-option"):
            return None
        if head == "declare-datatypes":
            self.cmd_declare_datatypes(form)
            return None
        if head == "declare-sort":
            raise EngineError("uninterpreted sorts are not supported")
        if head in ("declare-const", "declare-fun"):
            self.cmd_declare(form)
            return None
        if head == "define-fun":
            self.cmd_define(form)
            return None
        if head == "assert":
            if len(form) != 2:
                raise EngineError("assert takes one term")
            self.frames[-1].append(self.parse_term(form[1], {}))
            return None
        if head == "check-sat":
            return self.cmd_check_sat()
        if head == "get-value":
            return self.cmd_get_value(form)
        if head == "get-model":
            return self.cmd_get_model()
        if head == "push":
            n = int(form[1]) if len(form) > 1 else 1
            for _ in range(n):
                self.incremental = True
                self.frames.append([])
                self.frame_lits.append(None)
                self.blasted_counts.append(0)
            return None
        if head == "pop":
            n = int(form[1]) if len(form) > 1 else 1
            for _ in range(n):
                if len(self.frames) == 1:
                    raise EngineError("pop on empty stack")
                self.frames.pop()
                self.frame_lits.pop()
                self.blasted_counts.pop()
            return None
        if head == "reset":
            self.reset()
            return None
        if head == "echo":
            return form[1].strip('"') if len(form) > 1 else ""
        if head == "exit":
            raise SystemExit(0)
        raise EngineError(f"unsupported command {head!r}")

    # -- declarations -------------------------------------------------------------

    def cmd_declare_datatypes(self, form) -> None:
        # (declare-datatypes ((Name 0) ...) (((ctor) (ctor) ...) ...))
        if len(form) != 3:
            raise EngineError("malformed declare-datatypes")
        names, bodies = form[1], form[2]
        for decl, ctors in zip(names, bodies):
            name = decl[0] if isinstance(decl, list) else decl
            members = []
            for ctor in ctors:
                sym = ctor[0] if isinstance(ctor, list) else ctor
                if isinstance(ctor, list) and len(ctor) > 1:
                    raise EngineError("only nullary datatype constructors are supported")
                members.append(sym)
            sort = T.EnumSort(name, tuple(members))
            self.sorts[name] = sort
            for i, m in enumerate(members):
                self.enum_members[m] = (sort, i)

    def parse_sort(self, form) -> T.Sort:
        if isinstance(form, str):
            if form == "Bool":
                return T.BOOL
            if form in self.sorts:
                return self.sorts[form]
            raise EngineError(f"unknown sort {form!r}")
        if len(form) == 3 and form[0] == "_" and form[1] == "BitVec":
            return T.bv_sort(int(form[2]))
        raise EngineError(f"unknown sort {form!r}")

    def cmd_declare(self, form) -> None:
        # (declare-const x Sort) | (declare-fun x () Sort)
        name = form[1]
        if form[0] == "declare-fun":
            if form[2] != [] and form[2] != ["()"]:
                if isinstance(form[2], list) and len(form[2]) > 0:
                    raise EngineError("only 0-ary declare-fun is supported")
            sort = self.parse_sort(form[3])
        else:
            sort = self.parse_sort(form[2])
        self.decls[name] = sort

    def cmd_define(self, form) -> None:
        # (define-fun x () Sort body)
        name = form[1]
        if form[2]:
            raise EngineError("only 0-ary define-fun is supported")
        body = self.parse_term(form[4], {})
        self.macros[name] = body

    # -- terms -----------------------------------------------------------------------

    def parse_term(self, form, bindings: dict[str, T.Term]) -> T.Term:
        if isinstance(form, str):
            return self.parse_atom(form, bindings)
        if not form:
            raise EngineError("empty term")
        head = form[0]
        if isinstance(head, list):
            raise EngineError(f"cannot apply {head!r}")
        if head == "let":
            new_bindings = dict(bindings)
            for pair in form[1]:
                new_bindings[pair[0]] = self.parse_term(pair[1], bindings)
            return self.parse_term(form[2], new_bindings)
        if head == "_":
            if len(form) == 3 and form[1].startswith("bv"):
                return T.bv_const(int(form[1][2:]), int(form[2]))
            raise EngineError(f"unknown indexed literal {form!r}")
        args = [self.parse_term(a, bindings) for a in form[1:]]
        return self.apply(head, args, form)

    def parse_atom(self, atom: str, bindings: dict[str, T.Term]) -> T.Term:
        if atom in bindings:
            return bindings[atom]
        if atom == "true":
            return T.TRUE
        if atom == "false":
            return T.FALSE
        if atom.startswith("#x"):
            return T.bv_const(int(atom[2:], 16), 4 * (len(atom) - 2))
        if atom.startswith("#b"):
            return T.bv_const(int(atom[2:], 2), len(atom) - 2)
        if atom.startswith("|") and atom.endswith("|"):
            atom = atom[1:-1]
        if atom in self.enum_members:
            sort, i = self.enum_members[atom]
            return T.enum_const(sort, i)
        if atom in self.macros:
            return self.macros[atom]
        if atom in self.decls:
            return T.var(atom, self.decls[atom])
        raise EngineError(f"unknown symbol {atom!r}")

    def apply(self, head: str, args: list[T.Term], form) -> T.Term:
        if isinstance(form[0], str) and head == "":
            raise EngineError("empty operator")
        # indexed operators: ((_ extract hi lo) x), ((_ zero_extend n) x)
        if isinstance(form[0], list):
            raise EngineError("unexpected operator form")
        if head == "and":
            return T.and_(*args)
        if head == "or":
            return T.or_(*args)
        if head == "not":
            return T.not_(args[0])
        if head == "=>":
            out = args[-1]
            for a in reversed(args[:-1]):
                out = T.implies(a, out)
            return out
        if head == "xor":
            out = args[0]
            for a in args[1:]:
                out = T.not_(T.eq(out, a))
            return out
        if head == "=":
            out = []
            for a, b in zip(args, args[1:]):
                out.append(T.eq(a, b))
            return T.and_(*out)
        if head == "distinct":
            out = []
            for i in range(len(args)):
                for j in range(i + 1, len(args)):
                    out.append(T.not_(T.eq(args[i], args[j])))
            return T.and_(*out)
        if head == "ite":
            return T.ite(args[0], args[1], args[2])
        if head == "bvadd":
            out = args[0]
            for a in args[1:]:
                out = T.add(out, a)
            return out
        if head == "bvsub":
            return T.sub(args[0], args[1])
        if head == "bvmul":
            out = args[0]
            for a in args[1:]:
                out = T.mul(out, a)
            return out
        if head == "bvudiv":
            return T.udiv(args[0], args[1])
        if head == "bvurem":
            return T.urem(args[0], args[1])
        if head == "bvult":
            return T.ult(args[0], args[1])
        if head == "bvule":
            return T.ule(args[0], args[1])
        if head == "bvugt":
            return T.ugt(args[0], args[1])
        if head == "bvuge":
            return T.uge(args[0], args[1])
        if head == "bvneg":
            return T.sub(T.bv_const(0, args[0].sort.width), args[0])
        raise EngineError(f"unsupported operator {head!r}")

    # -- solving ------------------------------------------------------------------------

    def cmd_check_sat(self) -> str:
        if self.incremental:
            result = self.check_incremental()
        else:
            result = self.check_oneshot()
        self.last_result = result
        return result

    def check_oneshot(self) -> str:
        conjuncts: list[T.Term] = []
        for frame in self.frames:
            for t in frame:
                conjuncts.extend(T.conjuncts(t))
        conjuncts, self.defs = _substitute_equalities(conjuncts)
        self.solver = SatSolver()
        self.blaster = BitBlaster(self.solver)
        ok = True
        for t in conjuncts:
            if t is T.FALSE:
                ok = False
                break
            self.blaster.assert_term(t)
            if not self.solver.ok:
                ok = False
                break
        if not ok:
            return "unsat"
        return "sat" if self.solver.solve() else "unsat"

    def check_incremental(self) -> str:
        if self.solver is None or self.blaster is None:
            self.solver = SatSolver()
            self.blaster = BitBlaster(self.solver)
            self.frame_lits = [None] + [None] * (len(self.frames) - 1)
            self.blasted_counts = [0] * len(self.frames)
        self.defs = {}
        assumptions = []
        for i, frame in enumerate(self.frames):
            if i > 0 and self.frame_lits[i] is None:
                self.frame_lits[i] = self.blaster.fresh()
            lit = self.frame_lits[i]
            if lit is not None:
                assumptions.append(lit)
            while self.blasted_counts[i] < len(frame):
                t = frame[self.blasted_counts[i]]
                self.blaster.assert_term(t, frame_lit=lit)
                self.blasted_counts[i] += 1
        if not self.solver.ok:
            return "unsat"
        return "sat" if self.solver.solve(assumptions) else "unsat"

    # -- model output --------------------------------------------------------------------

    def value_of(self, name: str):
        if name in self.defs:
            env = _ModelEnv(self)
            return T.evaluate(self.defs[name], env)
        if name in self.macros:
            env = _ModelEnv(self)
            return T.evaluate(self.macros[name], env)
        if self.blaster is not None and name in self.blaster.decls:
            return self.blaster.read_value(name)
        if name in self.decls:
            sort = self.decls[name]
            if sort is T.BOOL:
                return False
            return 0
        raise EngineError(f"unknown symbol {name!r} in get-value")

    def format_value(self, name: str, value) -> str:
        sort = self.decls.get(name)
        return _format_typed_value(sort, value)

    def cmd_get_value(self, form) -> str:
        if self.last_result != "sat":
            return '(error "get-value after a non-sat result")'
        out = []
        for item in form[1]:
            if not isinstance(item, str):
                raise EngineError("get-value supports plain symbols only")
            name = item[1:-1] if item.startswith("|") else item
            value = self.value_of(name)
            out.append(f"({item} {self.format_value(name, value)})")
        return "(" + " ".join(out) + ")"

    def cmd_get_model(self) -> str:
        if self.last_result != "sat":
            return '(error "get-model after a non-sat result")'
        lines = ["("]
        for name, sort in sorted(self.decls.items()):
            value = self.value_of(name)
            lines.append(
                f"  (define-fun {name} () {_format_sort(sort)} "
                f"{_format_typed_value(sort, value)})"
            )
        lines.append(")")
        return "\n".join(lines)


class _ModelEnv:
    """Lazy variable environment backed by the blaster's assignment."""

    def __init__(self, engine: SmtEngine):
        self.engine = engine

    def __contains__(self, name: str) -> bool:
        return True

    def __getitem__(self, name: str):
        return self.engine.value_of(name)


def _solve_sum_for_var(t: T.Term) -> Optional[tuple[str, T.Term]]:
    """From `sum == const`, isolate a unit-coefficient variable if possible."""
    if t.op != "eq":
        return None
    a, b = t.args
    if b.op == "sum" and a.op == "const":
        a, b = b, a
    if a.op != "sum" or b.op != "const":
        return None
    width = a.sort.width
    mask = (1 << width) - 1
    const, coeffs = a.payload
    for i, (coeff, entry) in enumerate(zip(coeffs, a.args)):
        if entry.op != "var" or coeff not in (1, mask):
            continue
        others = [(c, t2) for j, (c, t2) in enumerate(zip(coeffs, a.args)) if j != i]
        if coeff == 1:
            rhs = T.sum_of(width, b.payload - const, [((-c) & mask, t2) for c, t2 in others])
        else:
            rhs = T.sum_of(width, const - b.payload, others)
        if entry.payload in T.free_vars(rhs):
            continue
        return entry.payload, rhs
    return None


def _substitute_equalities(conjuncts: list[T.Term]) -> tuple[list[T.Term], dict[str, T.Term]]:
    """Gaussian substitution of top-level variable equalities."""
    defs: dict[str, T.Term] = {}
    remaining: list[T.Term] = []
    for t in conjuncts:
        t = T.substitute(t, defs) if defs else t
        picked = None
        if t.op == "eq":
            a, b = t.args
            if a.op == "var" and a.payload not in defs and a.payload not in T.free_vars(b):
                picked = (a.payload, b)
            elif b.op == "var" and b.payload not in defs and b.payload not in T.free_vars(a):
                picked = (b.payload, a)
            else:
                solved = _solve_sum_for_var(t)
                if solved is not None and solved[0] not in defs:
                    picked = solved
        # boolean shorthand: a bare variable or its negation at top level
        elif t.op == "var" and t.sort is T.BOOL and t.payload not in defs:
            picked = (t.payload, T.TRUE)
        elif t.op == "not" and t.args[0].op == "var" and t.args[0].sort is T.BOOL \
                and t.args[0].payload not in defs:
            picked = (t.args[0].payload, T.FALSE)
        if picked is None:
            remaining.append(t)
            continue
        name, rhs = picked
        # rewrite existing defs so values never mention defined vars
        single = {name: rhs}
        defs = {k: T.substitute(v, single) for k, v in defs.items()}
        defs[name] = rhs
    if defs:
        remaining = [T.substitute(t, defs) for t in remaining]
    return remaining, defs


def _format_sort(sort: Optional[T.Sort]) -> str:
    if sort is T.BOOL or sort is None:
        return "Bool"
    if isinstance(sort, T.BVSort):
        return f"(_ BitVec {sort.width})"
    if isinstance(sort, T.EnumSort):
        return sort.name
    return "?"


def _format_typed_value(sort: Optional[T.Sort], value) -> str:
    if isinstance(sort, T.BVSort):
        if sort.width % 4 == 0:
            return f"#x{value:0{sort.width // 4}x}"
        return f"#b{value:0{sort.width}b}"
    if isinstance(sort, T.EnumSort):
        return sort.members[value]
    if isinstance(value, bool):
        return "true" if value else "false"
    if value in (0, 1) and sort is T.BOOL:
        return "true" if value else "false"
    return str(value)
