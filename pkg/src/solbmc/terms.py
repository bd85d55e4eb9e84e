"""Symbolic term language shared by the extractor, encoder and solver.

Terms are hash-consed immutable nodes over three sort families: fixed-width
bit-vectors, booleans and finite enumerations.  Smart constructors fold
constants and neutral elements so that, e.g., substituting the constructor
constants of a contract into a transition formula collapses the dead
arithmetic before anything reaches a solver.

Bit-vector semantics follow SMT-LIB: all arithmetic wraps modulo 2^w,
`udiv x 0 = 2^w - 1` and `urem x 0 = x`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional


# ---------------------------------------------------------------------------
# Sorts


@dataclass(frozen=True)
class Sort:
    pass


@dataclass(frozen=True)
class BoolSort(Sort):
    def __repr__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class BVSort(Sort):
    width: int

    def __repr__(self) -> str:
        return f"BV{self.width}"


@dataclass(frozen=True)
class EnumSort(Sort):
    name: str
    members: tuple[str, ...]

    def __repr__(self) -> str:
        return f"Enum:{self.name}"


BOOL = BoolSort()

_bv_cache: dict[int, BVSort] = {}


def bv_sort(width: int) -> BVSort:
    if width not in _bv_cache:
        _bv_cache[width] = BVSort(width)
    return _bv_cache[width]


# ---------------------------------------------------------------------------
# Terms

# Operators. n-ary: and, or, sum. binary: mul, udiv, urem, ult, ule, eq.
# unary: not, zext, extract. ternary: ite. leaves: const, var.
#
# Additions and subtractions normalize into 'sum' nodes: args are the distinct
# addend terms and the payload is (constant, coefficient tuple) aligned with
# args, everything modulo 2^w.  The normal form cancels syntactically equal
# contributions, which is what lets conservation-style equalities collapse
# before bit-blasting.


class Term:
    __slots__ = ("op", "sort", "args", "payload", "tid", "__weakref__")

    def __init__(self, op: str, sort: Sort, args: tuple["Term", ...], payload, tid: int):
        self.op = op
        self.sort = sort
        self.args = args
        self.payload = payload
        self.tid = tid

    def __repr__(self) -> str:
        if self.op == "const":
            return f"{self.payload}:{self.sort!r}"
        if self.op == "var":
            return f"{self.payload}"
        return f"({self.op} {' '.join(map(repr, self.args))})"

    # Identity-based hashing: hash-consing guarantees structural uniqueness.
    def __hash__(self) -> int:
        return self.tid

    def __eq__(self, other) -> bool:
        return self is other


_intern: dict[tuple, Term] = {}
_next_tid = [0]


def _mk(op: str, sort: Sort, args: tuple[Term, ...] = (), payload=None) -> Term:
    key = (op, sort, tuple(a.tid for a in args), payload)
    t = _intern.get(key)
    if t is None:
        _next_tid[0] += 1
        t = Term(op, sort, args, payload, _next_tid[0])
        _intern[key] = t
    return t


# -- leaves ------------------------------------------------------------------


def bv_const(value: int, width: int) -> Term:
    return _mk("const", bv_sort(width), (), value & ((1 << width) - 1))


def bool_const(value: bool) -> Term:
    return _mk("const", BOOL, (), bool(value))


TRUE = bool_const(True)
FALSE = bool_const(False)


def enum_const(sort: EnumSort, ordinal: int) -> Term:
    if not 0 <= ordinal < len(sort.members):
        raise ValueError(f"enum ordinal {ordinal} out of range for {sort.name}")
    return _mk("const", sort, (), ordinal)


def var(name: str, sort: Sort) -> Term:
    return _mk("var", sort, (), name)


def is_const(t: Term) -> bool:
    return t.op == "const"


# -- boolean structure --------------------------------------------------------


def not_(a: Term) -> Term:
    if a.op == "const":
        return bool_const(not a.payload)
    if a.op == "not":
        return a.args[0]
    return _mk("not", BOOL, (a,))


def and_(*ts: Term) -> Term:
    flat: list[Term] = []
    seen: set[int] = set()
    for t in ts:
        if t.op == "const":
            if not t.payload:
                return FALSE
            continue
        parts = t.args if t.op == "and" else (t,)
        for p in parts:
            if p.op == "const":
                if not p.payload:
                    return FALSE
                continue
            if p.tid not in seen:
                seen.add(p.tid)
                flat.append(p)
    for p in flat:
        if p.op == "not" and p.args[0].tid in seen:
            return FALSE
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return _mk("and", BOOL, tuple(flat))


def or_(*ts: Term) -> Term:
    flat: list[Term] = []
    seen: set[int] = set()
    for t in ts:
        if t.op == "const":
            if t.payload:
                return TRUE
            continue
        parts = t.args if t.op == "or" else (t,)
        for p in parts:
            if p.op == "const":
                if p.payload:
                    return TRUE
                continue
            if p.tid not in seen:
                seen.add(p.tid)
                flat.append(p)
    for p in flat:
        if p.op == "not" and p.args[0].tid in seen:
            return TRUE
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return _mk("or", BOOL, tuple(flat))


def implies(a: Term, b: Term) -> Term:
    return or_(not_(a), b)


def eq(a: Term, b: Term) -> Term:
    if a.sort != b.sort:
        raise TypeError(f"eq over mismatched sorts {a.sort!r} vs {b.sort!r}")
    if a is b:
        return TRUE
    if a.op == "const" and b.op == "const":
        return bool_const(a.payload == b.payload)
    if a.sort is BOOL:
        if a.op == "const":
            return b if a.payload else not_(b)
        if b.op == "const":
            return a if b.payload else not_(a)
    if isinstance(a.sort, BVSort) and (a.op == "sum" or b.op == "sum"):
        d = sub(a, b)
        if d.op == "const":
            return bool_const(d.payload == 0)
        if a.op != "var" and b.op != "var":
            # canonicalize to (a - b == 0) so rearranged sums become one
            # node; definitional equalities (a bare variable on one side)
            # stay structural for the substitution pass and cheap blasting
            if d.op == "sum":
                d = _sign_normalize(d)
            zero = bv_const(0, a.sort.width)
            a, b = (d, zero) if d.tid <= zero.tid else (zero, d)
            return _mk("eq", BOOL, (a, b))
    # Normalize operand order for hash-consing symmetry.
    if a.tid > b.tid:
        a, b = b, a
    return _mk("eq", BOOL, (a, b))


def _entry_count(t: Term) -> int:
    if t.op == "sum":
        return len(t.args)
    if t.op == "const":
        return 0
    return 1


def _sign_normalize(s: Term) -> Term:
    """Pick one representative between a sum and its negation."""
    const, coeffs = s.payload
    w = s.sort.width
    mask = (1 << w) - 1
    half = 1 << (w - 1)
    lead = coeffs[0]
    if lead > half or (lead == half and const > half):
        return sum_of(w, (-const) & mask,
                      [((-c) & mask, t) for c, t in zip(coeffs, s.args)])
    return s


def distinct(a: Term, b: Term) -> Term:
    return not_(eq(a, b))


def ite(c: Term, a: Term, b: Term) -> Term:
    if a.sort != b.sort:
        raise TypeError("ite arms have mismatched sorts")
    if c.op == "const":
        return a if c.payload else b
    if a is b:
        return a
    if a.sort is BOOL:
        if a.op == "const" and b.op == "const":
            return c if a.payload else not_(c)
        if a.op == "const":
            return or_(c, b) if a.payload else and_(not_(c), b)
        if b.op == "const":
            return or_(not_(c), a) if b.payload else and_(c, a)
    if isinstance(a.sort, BVSort):
        if b.op == "const" and b.payload == 0:
            if a.op == "sum":
                # distribute the guard over the sum so indicator atoms stay
                # canonical: ite(c, k + sum c_i t_i, 0) = sum c_i ite(c,t_i,0) + ...
                const, coeffs = a.payload
                width = a.sort.width
                zero = b
                entries = [(coeff, ite(c, t, zero)) for coeff, t in zip(coeffs, a.args)]
                if const:
                    entries.append((1, ite(c, bv_const(const, width), zero)))
                return sum_of(width, 0, entries)
        else:
            # guarded-delta form: when the arms differ by one addend, rewrite
            # ite(c, b + d, b) to b + ite(c, d, 0) so sums over guarded
            # updates cancel structurally
            d = sub(a, b)
            if d.op != "ite" and (d.op != "sum" or len(d.args) <= 1):
                zero = bv_const(0, a.sort.width)
                return add(b, ite(c, d, zero))
    return _mk("ite", a.sort, (c, a, b))


# -- bit-vector arithmetic -----------------------------------------------------


def _width(t: Term) -> int:
    assert isinstance(t.sort, BVSort)
    return t.sort.width


def _parts(t: Term) -> tuple[int, list[tuple[int, Term]]]:
    """Decompose into (constant, [(coefficient, term), ...])."""
    if t.op == "const":
        return t.payload, []
    if t.op == "sum":
        const, coeffs = t.payload
        return const, list(zip(coeffs, t.args))
    return 0, [(1, t)]


def sum_of(width: int, const: int, pairs: list[tuple[int, Term]]) -> Term:
    """Canonical affine sum modulo 2^width."""
    mask = (1 << width) - 1
    const &= mask
    merged: dict[int, tuple[int, Term]] = {}
    for coeff, term in pairs:
        coeff &= mask
        if coeff == 0:
            continue
        prev = merged.get(term.tid)
        if prev is None:
            merged[term.tid] = (coeff, term)
        else:
            combined = (prev[0] + coeff) & mask
            if combined == 0:
                del merged[term.tid]
            else:
                merged[term.tid] = (combined, term)
    entries = _collapse_indicators(width, sorted(merged.values(), key=lambda p: p[1].tid))
    if not entries:
        return bv_const(const, width)
    if len(entries) == 1 and const == 0 and entries[0][0] == 1:
        return entries[0][1]
    args = tuple(t for _, t in entries)
    coeffs = tuple(c for c, _ in entries)
    return _mk("sum", bv_sort(width), args, (const, coeffs))


def _indicator_key(t: Term):
    """Recognize ite(x == member, delta, 0) and return (x, member set ...)."""
    if t.op != "ite":
        return None
    cond, then, els = t.args
    if els.op != "const" or els.payload != 0:
        return None
    if cond.op != "eq":
        return None
    left, right = cond.args
    if left.op == "const" and isinstance(left.sort, EnumSort):
        return (right, left.payload, then, len(left.sort.members))
    if right.op == "const" and isinstance(right.sort, EnumSort):
        return (left, right.payload, then, len(right.sort.members))
    return None


def _collapse_indicators(width: int, entries: list[tuple[int, Term]]) -> list[tuple[int, Term]]:
    """Replace a complete family  sum_i ite(x = member_i, d, 0)  by  d.

    An enumeration value equals exactly one member, so a family covering
    every member contributes d exactly once.
    """
    groups: dict[tuple[int, int, int], list[int]] = {}
    for idx, (coeff, term) in enumerate(entries):
        key = _indicator_key(term)
        if key is None:
            continue
        subject, ordinal, delta, size = key
        groups.setdefault((subject.tid, delta.tid, coeff), []).append(idx)
    to_remove: set[int] = set()
    additions: list[tuple[int, Term]] = []
    for (subject_tid, delta_tid, coeff), idxs in groups.items():
        if len(idxs) < 2:
            continue
        members = {_indicator_key(entries[i][1])[1] for i in idxs}
        size = _indicator_key(entries[idxs[0]][1])[3]
        if len(members) == size and len(idxs) == size:
            delta = _indicator_key(entries[idxs[0]][1])[2]
            to_remove.update(idxs)
            additions.append((coeff, delta))
    if not to_remove:
        return entries
    kept = [e for i, e in enumerate(entries) if i not in to_remove]
    mask = (1 << width) - 1
    merged: dict[int, tuple[int, Term]] = {t.tid: (c, t) for c, t in kept}
    for coeff, term in additions:
        prev = merged.get(term.tid)
        if prev is None:
            merged[term.tid] = (coeff & mask, term)
        else:
            combined = (prev[0] + coeff) & mask
            if combined == 0:
                del merged[term.tid]
            else:
                merged[term.tid] = (combined, term)
    return sorted(merged.values(), key=lambda p: p[1].tid)


def add(a: Term, b: Term) -> Term:
    w = _width(a)
    ca, pa = _parts(a)
    cb, pb = _parts(b)
    return sum_of(w, ca + cb, pa + pb)


def sub(a: Term, b: Term) -> Term:
    w = _width(a)
    ca, pa = _parts(a)
    cb, pb = _parts(b)
    return sum_of(w, ca - cb, pa + [(-c, t) for c, t in pb])


def mul(a: Term, b: Term) -> Term:
    w = _width(a)
    if a.op == "const" and b.op == "const":
        return bv_const(a.payload * b.payload, w)
    for x, y in ((a, b), (b, a)):
        if x.op == "const":
            if x.payload == 0:
                return bv_const(0, w)
            if x.payload == 1:
                return y
            cy, py = _parts(y)
            return sum_of(w, cy * x.payload, [(c * x.payload, t) for c, t in py])
    if a.tid > b.tid:
        a, b = b, a
    return _mk("mul", a.sort, (a, b))


def udiv(a: Term, b: Term) -> Term:
    w = _width(a)
    if b.op == "const":
        if b.payload == 1:
            return a
        if a.op == "const":
            if b.payload == 0:
                return bv_const((1 << w) - 1, w)
            return bv_const(a.payload // b.payload, w)
    return _mk("udiv", a.sort, (a, b))


def urem(a: Term, b: Term) -> Term:
    w = _width(a)
    if b.op == "const":
        if b.payload == 1:
            return bv_const(0, w)
        if a.op == "const":
            if b.payload == 0:
                return a
            return bv_const(a.payload % b.payload, w)
    return _mk("urem", a.sort, (a, b))


def ult(a: Term, b: Term) -> Term:
    if a.op == "const" and b.op == "const":
        return bool_const(a.payload < b.payload)
    if a is b:
        return FALSE
    if b.op == "const" and b.payload == 0:
        return FALSE
    w = _width(a)
    if a.op == "const" and a.payload == (1 << w) - 1:
        return FALSE
    return _mk("ult", BOOL, (a, b))


def ule(a: Term, b: Term) -> Term:
    if a.op == "const" and b.op == "const":
        return bool_const(a.payload <= b.payload)
    if a is b:
        return TRUE
    if a.op == "const" and a.payload == 0:
        return TRUE
    w = _width(a)
    if b.op == "const" and b.payload == (1 << w) - 1:
        return TRUE
    return _mk("ule", BOOL, (a, b))


def ugt(a: Term, b: Term) -> Term:
    return ult(b, a)


def uge(a: Term, b: Term) -> Term:
    return ule(b, a)


def zext(a: Term, new_width: int) -> Term:
    w = _width(a)
    if new_width == w:
        return a
    if new_width < w:
        raise ValueError("zext must not shrink")
    if a.op == "const":
        return bv_const(a.payload, new_width)
    return _mk("zext", bv_sort(new_width), (a,), new_width)


def extract(a: Term, hi: int, lo: int) -> Term:
    w = hi - lo + 1
    if lo == 0 and w == _width(a):
        return a
    if a.op == "const":
        return bv_const(a.payload >> lo, w)
    return _mk("extract", bv_sort(w), (a,), (hi, lo))


# ---------------------------------------------------------------------------
# Traversal helpers


def substitute(t: Term, mapping: dict[str, Term], _memo: Optional[dict[int, Term]] = None) -> Term:
    """Replace variables by terms.  `mapping` is keyed by variable name."""
    memo: dict[int, Term] = {} if _memo is None else _memo

    def go(u: Term) -> Term:
        r = memo.get(u.tid)
        if r is not None:
            return r
        if u.op == "var":
            r = mapping.get(u.payload, u)
        elif not u.args:
            r = u
        else:
            new_args = tuple(go(a) for a in u.args)
            if all(na is oa for na, oa in zip(new_args, u.args)):
                r = u
            else:
                r = rebuild(u.op, new_args, u.payload)
        memo[u.tid] = r
        return r

    return go(t)


def rebuild(op: str, args: tuple[Term, ...], payload) -> Term:
    if op == "and":
        return and_(*args)
    if op == "or":
        return or_(*args)
    if op == "not":
        return not_(args[0])
    if op == "eq":
        return eq(args[0], args[1])
    if op == "ite":
        return ite(args[0], args[1], args[2])
    if op == "sum":
        const, coeffs = payload
        width = args[0].sort.width if args else 0
        return sum_of(width, const, list(zip(coeffs, args)))
    if op == "mul":
        return mul(args[0], args[1])
    if op == "udiv":
        return udiv(args[0], args[1])
    if op == "urem":
        return urem(args[0], args[1])
    if op == "ult":
        return ult(args[0], args[1])
    if op == "ule":
        return ule(args[0], args[1])
    if op == "zext":
        return zext(args[0], payload)
    if op == "extract":
        return extract(args[0], payload[0], payload[1])
    raise ValueError(f"cannot rebuild op {op}")


def free_vars(t: Term) -> set[str]:
    out: set[str] = set()
    seen: set[int] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if u.tid in seen:
            continue
        seen.add(u.tid)
        if u.op == "var":
            out.add(u.payload)
        else:
            stack.extend(u.args)
    return out


def evaluate(t: Term, env: dict[str, int | bool], _memo: Optional[dict[int, int | bool]] = None):
    """Concrete evaluation.  Booleans map to bool, bit-vectors and enums to int."""
    memo: dict[int, int | bool] = {} if _memo is None else _memo

    def go(u: Term):
        if u.tid in memo:
            return memo[u.tid]
        op = u.op
        if op == "const":
            r = u.payload
        elif op == "var":
            if u.payload not in env:
                raise KeyError(f"unbound variable {u.payload}")
            r = env[u.payload]
        elif op == "not":
            r = not go(u.args[0])
        elif op == "and":
            r = all(go(a) for a in u.args)
        elif op == "or":
            r = any(go(a) for a in u.args)
        elif op == "eq":
            r = go(u.args[0]) == go(u.args[1])
        elif op == "ite":
            r = go(u.args[1]) if go(u.args[0]) else go(u.args[2])
        elif op == "sum":
            const, coeffs = u.payload
            mask = (1 << u.sort.width) - 1
            total = const
            for coeff, arg in zip(coeffs, u.args):
                total += coeff * go(arg)
            r = total & mask
        else:
            a = go(u.args[0])
            if op == "zext":
                r = a
            elif op == "extract":
                hi, lo = u.payload
                r = (a >> lo) & ((1 << (hi - lo + 1)) - 1)
            else:
                b = go(u.args[1])
                w = u.args[0].sort.width
                mask = (1 << w) - 1
                if op == "mul":
                    r = (a * b) & mask
                elif op == "udiv":
                    r = mask if b == 0 else a // b
                elif op == "urem":
                    r = a if b == 0 else a % b
                elif op == "ult":
                    r = a < b
                elif op == "ule":
                    r = a <= b
                else:
                    raise ValueError(f"unknown op {op}")
        memo[u.tid] = r
        return r

    return go(t)


def conjuncts(t: Term) -> tuple[Term, ...]:
    return t.args if t.op == "and" else (t,)


def disjuncts(t: Term) -> tuple[Term, ...]:
    return t.args if t.op == "or" else (t,)


def addr_select(key: Term, table: Iterable[tuple[Term, Term]], default: Term) -> Term:
    """Finite-domain select over an enumeration key.

    The table plus default must cover the whole enumeration (the default is
    the last member's value).  Bit-vector selects build the indicator-sum
    form `sum_i ite(key = k_i, v_i, 0)`, which shares structure with guarded
    updates so that read-then-write round trips cancel; other sorts fold to
    an ite chain.
    """
    pairs = list(table)
    if key.op == "const":
        for k, v in pairs:
            if k.op == "const" and k.payload == key.payload:
                return v
        return default
    if isinstance(default.sort, BVSort) and isinstance(key.sort, EnumSort) \
            and len(pairs) + 1 == len(key.sort.members):
        width = default.sort.width
        zero = bv_const(0, width)
        entries: list[tuple[int, Term]] = []
        full = pairs + [(enum_const(key.sort, len(key.sort.members) - 1), default)]
        for k, v in full:
            entries.append((1, ite(eq(key, k), v, zero)))
        return sum_of(width, 0, entries)
    out = default
    for k, v in reversed(pairs):
        out = ite(eq(key, k), v, out)
    return out


def indexed_select(pairs: list[tuple[Term, Term]], default: Term) -> Term:
    """Select by disjoint conditions; indicator-sum form when they partition
    a full enumeration and the value sort is a bit-vector."""
    if not pairs:
        return default
    if isinstance(default.sort, BVSort):
        subject = None
        members: set[int] = set()
        ok = True
        for cond, _ in pairs:
            if cond.op != "eq":
                ok = False
                break
            left, right = cond.args
            if left.op == "const" and isinstance(left.sort, EnumSort):
                const, other = left, right
            elif right.op == "const" and isinstance(right.sort, EnumSort):
                const, other = right, left
            else:
                ok = False
                break
            if subject is None:
                subject = other
            elif subject is not other:
                ok = False
                break
            members.add(const.payload)
        if ok and subject is not None and isinstance(subject.sort, EnumSort) \
                and len(members) == len(pairs) == len(subject.sort.members):
            width = default.sort.width
            zero = bv_const(0, width)
            return sum_of(width, 0, [(1, ite(c, v, zero)) for c, v in pairs])
    out = default
    for cond, value in reversed(pairs):
        out = ite(cond, value, out)
    return out
