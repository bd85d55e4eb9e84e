"""Serialize terms to SMT-LIB2 text with let-sharing.

Output is deterministic: identical term graphs produce byte-identical text,
which the golden tests rely on.  Multiply-referenced non-leaf nodes become
let bindings in first-use order.
"""

from __future__ import annotations

from .. import terms as T


def bv_const_like(t: T.Term, value: int) -> T.Term:
    return T.bv_const(value, t.sort.width)


_OP_NAMES = {
    "and": "and", "or": "or", "not": "not", "ite": "ite", "eq": "=",
    "mul": "bvmul", "udiv": "bvudiv", "urem": "bvurem",
    "ult": "bvult", "ule": "bvule",
}


def format_sort(sort: T.Sort) -> str:
    if sort is T.BOOL:
        return "Bool"
    if isinstance(sort, T.BVSort):
        return f"(_ BitVec {sort.width})"
    if isinstance(sort, T.EnumSort):
        return sort.name
    raise ValueError(f"unknown sort {sort!r}")


def format_const(t: T.Term) -> str:
    if t.sort is T.BOOL:
        return "true" if t.payload else "false"
    if isinstance(t.sort, T.EnumSort):
        return t.sort.members[t.payload]
    width = t.sort.width
    if width % 4 == 0:
        return f"#x{t.payload:0{width // 4}x}"
    return f"#b{t.payload:0{width}b}"


def term_to_smtlib(t: T.Term) -> str:
    """Render one term, let-binding every shared non-leaf subterm."""
    refs: dict[int, int] = {}
    order: list[T.Term] = []

    stack = [t]
    seen: set[int] = set()
    while stack:
        u = stack.pop()
        refs[u.tid] = refs.get(u.tid, 0) + 1
        if u.tid in seen or not u.args:
            continue
        seen.add(u.tid)
        order.append(u)
        stack.extend(u.args)

    shared = {u.tid for u in order if refs[u.tid] > 1}
    names: dict[int, str] = {}

    def render(u: T.Term, top: bool = False) -> str:
        if not top and u.tid in names:
            return names[u.tid]
        if u.op == "const":
            return format_const(u)
        if u.op == "var":
            return sanitize(u.payload)
        if u.op == "zext":
            extra = u.payload - u.args[0].sort.width
            return f"((_ zero_extend {extra}) {render(u.args[0])})"
        if u.op == "extract":
            hi, lo = u.payload
            return f"((_ extract {hi} {lo}) {render(u.args[0])})"
        if u.op == "sum":
            const, coeffs = u.payload
            width = u.sort.width
            mask = (1 << width) - 1
            pos: list[str] = []
            neg: list[str] = []
            for coeff, arg in zip(coeffs, u.args):
                body = render(arg)
                if coeff == 1:
                    pos.append(body)
                elif coeff == mask:
                    neg.append(body)
                else:
                    kconst = format_const(bv_const_like(u, coeff))
                    pos.append(f"(bvmul {kconst} {body})")
            if const != 0:
                pos.insert(0, format_const(bv_const_like(u, const)))
            if not pos:
                pos.append(format_const(bv_const_like(u, 0)))
            text = pos[0] if len(pos) == 1 else f"(bvadd {' '.join(pos)})"
            for n in neg:
                text = f"(bvsub {text} {n})"
            return text
        body = " ".join(render(a) for a in u.args)
        return f"({_OP_NAMES[u.op]} {body})"

    # emit lets innermost-last: topological order of shared nodes
    bindings: list[tuple[str, str]] = []
    emitted: set[int] = set()

    def emit_shared(u: T.Term) -> None:
        if u.tid in emitted or not u.args:
            return
        emitted.add(u.tid)
        for a in u.args:
            emit_shared(a)
        if u.tid in shared:
            name = f"?s{len(bindings)}"
            text = render(u, top=True)
            names[u.tid] = name
            bindings.append((name, text))

    emit_shared(t)
    body = render(t, top=True) if t.tid in shared else render(t)
    for name, text in reversed(bindings):
        body = f"(let (({name} {text})) {body})"
    return body


def sanitize(name: str) -> str:
    """Map internal variable names to plain SMT-LIB symbols."""
    out = []
    for c in name:
        if c.isalnum() or c in "_.":
            out.append(c)
        elif c == ":":
            out.append(".")
        elif c == "[":
            out.append(".")
        elif c in "]":
            continue
        else:
            out.append("_")
    return "".join(out)


class ScriptBuilder:
    """Accumulates one SMT-LIB2 query script."""

    def __init__(self, logic: str = "ALL"):
        self.lines: list[str] = [f"(set-logic {logic})"]
        self.declared: dict[str, T.Sort] = {}
        self.enum_sorts: dict[str, T.EnumSort] = {}

    def declare_enum(self, sort: T.EnumSort) -> None:
        if sort.name in self.enum_sorts:
            return
        self.enum_sorts[sort.name] = sort
        ctors = " ".join(f"({m})" for m in sort.members)
        self.lines.append(f"(declare-datatypes (({sort.name} 0)) (({ctors})))")

    def declare_var(self, name: str, sort: T.Sort) -> str:
        sym = sanitize(name)
        if sym in self.declared:
            return sym
        if isinstance(sort, T.EnumSort):
            self.declare_enum(sort)
        self.declared[sym] = sort
        self.lines.append(f"(declare-const {sym} {format_sort(sort)})")
        return sym

    def declare_term_vars(self, t: T.Term) -> None:
        seen: set[int] = set()
        stack = [t]
        while stack:
            u = stack.pop()
            if u.tid in seen:
                continue
            seen.add(u.tid)
            if u.op == "var":
                self.declare_var(u.payload, u.sort)
            if u.op == "const" and isinstance(u.sort, T.EnumSort):
                self.declare_enum(u.sort)
            stack.extend(u.args)

    def assert_term(self, t: T.Term) -> None:
        self.declare_term_vars(t)
        # keep top-level conjunctions as separate assertions
        for conj in T.conjuncts(t):
            self.lines.append(f"(assert {term_to_smtlib(_rename_vars(conj))})")

    def check_sat(self) -> None:
        self.lines.append("(check-sat)")

    def get_values(self, names: list[str]) -> None:
        # chunk to keep lines reasonable
        syms = [sanitize(n) for n in names]
        for i in range(0, len(syms), 64):
            chunk = " ".join(syms[i : i + 64])
            self.lines.append(f"(get-value ({chunk}))")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


_rename_cache: dict[int, T.Term] = {}


def _rename_vars(t: T.Term) -> T.Term:
    """Rewrite variable payloads to their sanitized SMT symbols."""
    cached = _rename_cache.get(t.tid)
    if cached is not None:
        return cached
    if t.op == "var":
        out = T.var(sanitize(t.payload), t.sort)
    elif not t.args:
        out = t
    else:
        new_args = tuple(_rename_vars(a) for a in t.args)
        out = t if all(n is o for n, o in zip(new_args, t.args)) else \
            T.rebuild(t.op, new_args, t.payload)
    _rename_cache[t.tid] = out
    return out
