"""Tseitin bit-blasting of terms onto the CDCL core.

Bit-vectors become little-endian literal vectors, enumerations one-hot
vectors with an exactly-one constraint, booleans single literals.  Gates are
structurally hashed so shared subterms (guaranteed by hash-consing) cost one
circuit.  Division/remainder use a restoring divider whose behaviour on a
zero divisor coincides with SMT-LIB (``bvudiv x 0 = ~0``, ``bvurem x 0 = x``).
"""

from __future__ import annotations

from .. import terms as T
from .sat import SatSolver


class BitBlaster:
    def __init__(self, solver: SatSolver):
        self.solver = solver
        v = solver.new_var()
        self.TRUE = v << 1
        self.FALSE = self.TRUE ^ 1
        solver.add_clause([self.TRUE])
        self.bool_cache: dict[int, int] = {}
        self.vec_cache: dict[int, list[int]] = {}
        self.gate_cache: dict[tuple, int] = {}
        self.decls: dict[str, tuple[T.Sort, object]] = {}

    # -- fresh literals -----------------------------------------------------------

    def fresh(self) -> int:
        return self.solver.new_var() << 1

    def declare(self, name: str, sort: T.Sort):
        if name in self.decls:
            return self.decls[name][1]
        if sort is T.BOOL:
            enc: object = self.fresh()
        elif isinstance(sort, T.BVSort):
            enc = [self.fresh() for _ in range(sort.width)]
        elif isinstance(sort, T.EnumSort):
            slots = [self.fresh() for _ in sort.members]
            self._exactly_one(slots)
            enc = slots
            # enumeration variables are control flow (function choice,
            # senders, event tags): deciding them before any data bit makes
            # the search enumerate transition paths and refute each one by
            # propagation, instead of wandering through the arithmetic
            for lit in slots:
                self.solver.mark_control(lit >> 1, phase=1)
        else:
            raise ValueError(f"cannot declare {name} of sort {sort!r}")
        self.decls[name] = (sort, enc)
        return enc

    def _exactly_one(self, lits: list[int]) -> None:
        self.solver.add_clause(list(lits))
        for i in range(len(lits)):
            for j in range(i + 1, len(lits)):
                self.solver.add_clause([lits[i] ^ 1, lits[j] ^ 1])

    # -- gates ----------------------------------------------------------------------

    def lit_and(self, a: int, b: int) -> int:
        if a == self.FALSE or b == self.FALSE:
            return self.FALSE
        if a == self.TRUE:
            return b
        if b == self.TRUE:
            return a
        if a == b:
            return a
        if a == b ^ 1:
            return self.FALSE
        if a > b:
            a, b = b, a
        key = ("&", a, b)
        g = self.gate_cache.get(key)
        if g is None:
            g = self.fresh()
            add = self.solver.add_clause
            add([g ^ 1, a])
            add([g ^ 1, b])
            add([g, a ^ 1, b ^ 1])
            self.gate_cache[key] = g
        return g

    def lit_or(self, a: int, b: int) -> int:
        return self.lit_and(a ^ 1, b ^ 1) ^ 1

    def lit_xor(self, a: int, b: int) -> int:
        if a == self.TRUE:
            return b ^ 1
        if a == self.FALSE:
            return b
        if b == self.TRUE:
            return a ^ 1
        if b == self.FALSE:
            return a
        if a == b:
            return self.FALSE
        if a == b ^ 1:
            return self.TRUE
        out_flip = (a & 1) ^ (b & 1)
        a &= ~1
        b &= ~1
        if a > b:
            a, b = b, a
        key = ("^", a, b)
        g = self.gate_cache.get(key)
        if g is None:
            g = self.fresh()
            add = self.solver.add_clause
            add([g ^ 1, a, b])
            add([g ^ 1, a ^ 1, b ^ 1])
            add([g, a ^ 1, b])
            add([g, a, b ^ 1])
            self.gate_cache[key] = g
        return g ^ out_flip

    def lit_ite(self, c: int, t: int, e: int) -> int:
        if c == self.TRUE:
            return t
        if c == self.FALSE:
            return e
        if t == e:
            return t
        if t == self.TRUE and e == self.FALSE:
            return c
        if t == self.FALSE and e == self.TRUE:
            return c ^ 1
        if t == self.TRUE:
            return self.lit_or(c, e)
        if t == self.FALSE:
            return self.lit_and(c ^ 1, e)
        if e == self.TRUE:
            return self.lit_or(c ^ 1, t)
        if e == self.FALSE:
            return self.lit_and(c, t)
        key = ("?", c, t, e)
        g = self.gate_cache.get(key)
        if g is None:
            g = self.fresh()
            add = self.solver.add_clause
            add([g ^ 1, c ^ 1, t])
            add([g ^ 1, c, e])
            add([g, c ^ 1, t ^ 1])
            add([g, c, e ^ 1])
            add([g ^ 1, t, e])
            add([g, t ^ 1, e ^ 1])
            self.gate_cache[key] = g
        return g

    def and_list(self, lits: list[int]) -> int:
        out = self.TRUE
        for lit in lits:
            out = self.lit_and(out, lit)
            if out == self.FALSE:
                return out
        return out

    def or_list(self, lits: list[int]) -> int:
        out = self.FALSE
        for lit in lits:
            out = self.lit_or(out, lit)
            if out == self.TRUE:
                return out
        return out

    def _maj(self, a: int, b: int, c: int) -> int:
        return self.lit_or(self.lit_and(a, b), self.lit_and(c, self.lit_xor(a, b)))

    # -- vectors -----------------------------------------------------------------------

    def const_vec(self, value: int, width: int) -> list[int]:
        return [self.TRUE if (value >> i) & 1 else self.FALSE for i in range(width)]

    def add_vec(self, a: list[int], b: list[int], carry_in: int | None = None) -> list[int]:
        carry = self.FALSE if carry_in is None else carry_in
        out = []
        for ai, bi in zip(a, b):
            s = self.lit_xor(self.lit_xor(ai, bi), carry)
            carry = self._maj(ai, bi, carry)
            out.append(s)
        return out

    def sub_vec(self, a: list[int], b: list[int]) -> list[int]:
        return self.add_vec(a, [x ^ 1 for x in b], carry_in=self.TRUE)

    def mul_vec(self, a: list[int], b: list[int]) -> list[int]:
        w = len(a)
        acc = self.const_vec(0, w)
        for i, bi in enumerate(b):
            if bi == self.FALSE:
                continue
            row = [self.FALSE] * i + [self.lit_and(x, bi) for x in a[: w - i]]
            acc = self.add_vec(acc, row)
        return acc

    def ult_vec(self, a: list[int], b: list[int]) -> int:
        lt = self.FALSE
        for ai, bi in zip(a, b):
            lt = self.lit_ite(self.lit_xor(ai, bi), self.lit_and(ai ^ 1, bi), lt)
        return lt

    def ule_vec(self, a: list[int], b: list[int]) -> int:
        return self.ult_vec(b, a) ^ 1

    def eq_vec(self, a: list[int], b: list[int]) -> int:
        return self.and_list([self.lit_xor(x, y) ^ 1 for x, y in zip(a, b)])

    def ite_vec(self, c: int, a: list[int], b: list[int]) -> list[int]:
        return [self.lit_ite(c, x, y) for x, y in zip(a, b)]

    def divmod_vec(self, a: list[int], b: list[int]) -> tuple[list[int], list[int]]:
        """Restoring division; SMT-LIB semantics for a zero divisor."""
        w = len(a)
        ext = w + 1
        b_ext = b + [self.FALSE]
        remainder = self.const_vec(0, ext)
        quotient = [self.FALSE] * w
        for i in range(w - 1, -1, -1):
            remainder = [a[i]] + remainder[:-1]
            geq = self.ule_vec(b_ext, remainder)
            remainder = self.ite_vec(geq, self.sub_vec(remainder, b_ext), remainder)
            quotient[i] = geq
        return quotient, remainder[:w]

    def blast_sum(self, t: T.Term) -> list[int]:
        """Affine sum with indicator families lowered back to mux chains.

        A family ite(x = m_i, v_i, 0) over distinct members of one subject is
        disjoint, so its sum is a select: one mux chain instead of one adder
        per member.
        """
        const, coeffs = t.payload
        w = t.sort.width
        mask = (1 << w) - 1
        families: dict[tuple[int, int], list[T.Term]] = {}
        singles: list[tuple[int, T.Term]] = []
        for coeff, arg in zip(coeffs, t.args):
            key = T._indicator_key(arg)
            if key is not None and (coeff & mask) in (1, mask):
                subject = key[0]
                families.setdefault((subject.tid, coeff & mask), []).append(arg)
            else:
                singles.append((coeff & mask, arg))
        vec = self.const_vec(const, w)
        for (_, coeff), members in sorted(families.items()):
            ordinals = [T._indicator_key(m)[1] for m in members]
            if len(members) == 1 or len(set(ordinals)) != len(ordinals):
                singles.extend((coeff, m) for m in members)
                continue
            sel = self.const_vec(0, w)
            for ind in members:
                cond, then, _ = ind.args
                sel = self.ite_vec(self.blast_bool(cond), self.blast_vec(then), sel)
            vec = self.add_vec(vec, sel) if coeff == 1 else self.sub_vec(vec, sel)
        for coeff, arg in singles:
            av = self.blast_vec(arg)
            if coeff == 1:
                vec = self.add_vec(vec, av)
            elif coeff == mask:
                vec = self.sub_vec(vec, av)
            else:
                c = coeff
                bit = 0
                while c:
                    if c & 1:
                        row = [self.FALSE] * bit + av[: w - bit]
                        vec = self.add_vec(vec, row)
                    c >>= 1
                    bit += 1
        return vec

    # -- enum helpers ---------------------------------------------------------------------

    def enum_const_vec(self, sort: T.EnumSort, ordinal: int) -> list[int]:
        return [self.TRUE if i == ordinal else self.FALSE for i in range(len(sort.members))]

    def enum_eq(self, a: list[int], b: list[int]) -> int:
        return self.or_list([self.lit_and(x, y) for x, y in zip(a, b)])

    # -- term dispatch -----------------------------------------------------------------------

    def blast_bool(self, t: T.Term) -> int:
        lit = self.bool_cache.get(t.tid)
        if lit is not None:
            return lit
        op = t.op
        if op == "const":
            lit = self.TRUE if t.payload else self.FALSE
        elif op == "var":
            lit = self.declare(t.payload, t.sort)  # type: ignore[assignment]
        elif op == "not":
            lit = self.blast_bool(t.args[0]) ^ 1
        elif op == "and":
            lit = self.and_list([self.blast_bool(a) for a in t.args])
        elif op == "or":
            lit = self.or_list([self.blast_bool(a) for a in t.args])
        elif op == "ite":
            lit = self.lit_ite(
                self.blast_bool(t.args[0]),
                self.blast_bool(t.args[1]),
                self.blast_bool(t.args[2]),
            )
        elif op == "eq":
            x = t.args[0]
            if x.sort is T.BOOL:
                lit = self.lit_xor(self.blast_bool(t.args[0]), self.blast_bool(t.args[1])) ^ 1
            elif isinstance(x.sort, T.EnumSort):
                lit = self.enum_eq(self.blast_vec(t.args[0]), self.blast_vec(t.args[1]))
            else:
                lit = self.eq_vec(self.blast_vec(t.args[0]), self.blast_vec(t.args[1]))
        elif op == "ult":
            lit = self.ult_vec(self.blast_vec(t.args[0]), self.blast_vec(t.args[1]))
        elif op == "ule":
            lit = self.ule_vec(self.blast_vec(t.args[0]), self.blast_vec(t.args[1]))
        else:
            raise ValueError(f"boolean blast of op {op}")
        self.bool_cache[t.tid] = lit
        return lit

    def blast_vec(self, t: T.Term) -> list[int]:
        vec = self.vec_cache.get(t.tid)
        if vec is not None:
            return vec
        op = t.op
        if op == "const":
            if isinstance(t.sort, T.EnumSort):
                vec = self.enum_const_vec(t.sort, t.payload)
            else:
                vec = self.const_vec(t.payload, t.sort.width)
        elif op == "var":
            vec = self.declare(t.payload, t.sort)  # type: ignore[assignment]
        elif op == "ite":
            c = self.blast_bool(t.args[0])
            vec = self.ite_vec(c, self.blast_vec(t.args[1]), self.blast_vec(t.args[2]))
        elif op == "sum":
            vec = self.blast_sum(t)
        elif op == "mul":
            vec = self.mul_vec(self.blast_vec(t.args[0]), self.blast_vec(t.args[1]))
        elif op == "udiv":
            vec = self.divmod_vec(self.blast_vec(t.args[0]), self.blast_vec(t.args[1]))[0]
        elif op == "urem":
            vec = self.divmod_vec(self.blast_vec(t.args[0]), self.blast_vec(t.args[1]))[1]
        elif op == "zext":
            inner = self.blast_vec(t.args[0])
            vec = inner + [self.FALSE] * (t.sort.width - len(inner))
        elif op == "extract":
            hi, lo = t.payload
            vec = self.blast_vec(t.args[0])[lo : hi + 1]
        else:
            raise ValueError(f"vector blast of op {op}")
        self.vec_cache[t.tid] = vec
        return vec

    # -- top-level assertion --------------------------------------------------------------------

    def assert_term(self, t: T.Term, frame_lit: int | None = None) -> None:
        """Assert t; with frame_lit, clauses become (¬frame ∨ ...) activatable."""
        if t.op == "and":
            for a in t.args:
                self.assert_term(a, frame_lit)
            return
        if t.op == "eq" and frame_lit is None and t.args[0].sort is not T.BOOL:
            # top-level vector equality: per-bit biimplications, no gate
            a = self.blast_vec(t.args[0])
            b = self.blast_vec(t.args[1])
            add = self.solver.add_clause
            for x, y in zip(a, b):
                add([x ^ 1, y])
                add([x, y ^ 1])
            return
        if t.op == "or":
            and_args = [a for a in t.args if a.op == "and"]
            if len(and_args) == 1:
                # distribute: (u or (p1 and ... pn)) becomes n clauses, so an
                # implication's guard propagates each conjunct directly
                rest = [a for a in t.args if a is not and_args[0]]
                for part in and_args[0].args:
                    self.assert_term(T.or_(*rest, part), frame_lit)
                return
            lits = [self.blast_bool(d) for d in t.args]
            if frame_lit is not None:
                lits.append(frame_lit ^ 1)
            self.solver.add_clause(lits)
            return
        lit = self.blast_bool(t)
        if frame_lit is not None:
            self.solver.add_clause([frame_lit ^ 1, lit])
        else:
            self.solver.add_clause([lit])

    # -- model reading -----------------------------------------------------------------------------

    def read_value(self, name: str):
        """Concrete value of a declared symbol after a sat solve."""
        if name not in self.decls:
            return None
        sort, enc = self.decls[name]
        assigns = self.solver.assigns

        def lit_val(lit: int) -> bool:
            v = assigns[lit >> 1]
            if v == 2:
                return False  # unconstrained: pick 0
            return bool(v ^ (lit & 1))

        if sort is T.BOOL:
            return lit_val(enc)  # type: ignore[arg-type]
        if isinstance(sort, T.BVSort):
            return sum(1 << i for i, lit in enumerate(enc) if lit_val(lit))
        if isinstance(sort, T.EnumSort):
            for i, lit in enumerate(enc):
                if lit_val(lit):
                    return i
            return 0
        raise ValueError(f"cannot read {name}")
