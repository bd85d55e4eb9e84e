"""Encode the extracted contract model as quantifier-free solver queries.

Per step i the state vector is ``step{i}_*`` (one variable per storage slot,
alive flag, event tag, typed event-argument slots, per-address balances and
blocktime) and the call parameters are ``p{i}_*`` (function choice, value,
sender, time and a typed argument bank shared across the function-choice
disjunction).  Components whose update expression is identical across every
public function (untouched slots, the blocktime refresh, cleared event
arguments) are hoisted out of the disjunction as single equalities, which
both shrinks the formula and lets the solver's equality-substitution
preprocessing chain constants through the unrolling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .. import terms as T
from ..frontend.nodes import AddressType, BoolType, EnumType, UintType
from ..model import EventInstance, SystemState
from ..symexec import ContractModel, TransitionFn, arg_kind
from ..trace import CEStep, CounterExample


def _kind_of(ty) -> str:
    return arg_kind(ty)


class Encoder:
    def __init__(self, model: ContractModel):
        self.model = model
        self.w = model.cfg.int_width
        self.addrs = model.addrs
        self.addr_sort = model.addr_sort
        self.events = model.events
        self.fn_sort = T.EnumSort(
            "FnTag", tuple(t.fname for t in model.transitions) or ("noop",)
        )
        # typed argument bank layout: position -> kinds used by any function
        bank: dict[tuple[int, str], bool] = {}
        for t in model.transitions:
            for pos, p in enumerate(t.params):
                bank[(pos, _kind_of(p.ty))] = True
        self.arg_bank = sorted(bank)
        self._shared_updates = self._compute_shared()

    # -- variable layout ---------------------------------------------------------

    def kind_sort(self, kind: str) -> T.Sort:
        if kind == "bv":
            return T.bv_sort(self.w)
        if kind == "bool":
            return T.BOOL
        return self.addr_sort

    def slot_sort(self, ty) -> T.Sort:
        if isinstance(ty, (UintType, EnumType)):
            return T.bv_sort(self.w)
        if isinstance(ty, BoolType):
            return T.BOOL
        if isinstance(ty, AddressType):
            return self.addr_sort
        raise ValueError(f"no sort for {ty}")

    def state_vars(self, i: int) -> list[tuple[str, T.Sort]]:
        out: list[tuple[str, T.Sort]] = []
        for s in self.model.slots:
            out.append((f"step{i}_{s.slot_id}", self.slot_sort(s.ty)))
        out.append((f"step{i}_alive", T.BOOL))
        out.append((f"step{i}_evtag", self.events.tag_sort))
        for pos, kind in self.events.arg_slots:
            out.append((f"step{i}_evarg{pos}_{kind}", self.kind_sort(kind)))
        for a in self.addrs.elements:
            out.append((f"step{i}_bal_{a}", T.bv_sort(self.w)))
        out.append((f"step{i}_time", T.bv_sort(self.w)))
        return out

    def param_vars(self, i: int) -> list[tuple[str, T.Sort]]:
        out = [
            (f"p{i}_fn", self.fn_sort),
            (f"p{i}_value", T.bv_sort(self.w)),
            (f"p{i}_sender", self.addr_sort),
            (f"p{i}_time", T.bv_sort(self.w)),
        ]
        for pos, kind in self.arg_bank:
            out.append((f"p{i}_arg{pos}_{kind}", self.kind_sort(kind)))
        return out

    def ctor_vars(self) -> list[tuple[str, T.Sort]]:
        out = []
        deployer_needed = False
        for term in self.model.initial.var_init.values():
            if "ctor:msg.sender" in T.free_vars(term):
                deployer_needed = True
        for p in self.model.initial.ctor_params:
            out.append((f"ctor_{p.name}", self.slot_sort(p.ty)))
        if deployer_needed:
            out.append(("ctor_sender", self.addr_sort))
        return out

    def state_subst(self, i: int) -> dict[str, T.Term]:
        sub: dict[str, T.Term] = {}
        for s in self.model.slots:
            sub[f"state:{s.slot_id}"] = T.var(f"step{i}_{s.slot_id}", self.slot_sort(s.ty))
        sub["alive"] = T.var(f"step{i}_alive", T.BOOL)
        sub["btime"] = T.var(f"step{i}_time", T.bv_sort(self.w))
        for a in self.addrs.elements:
            sub[f"bal:{a}"] = T.var(f"step{i}_bal_{a}", T.bv_sort(self.w))
        return sub

    def call_subst(self, i: int, t: TransitionFn) -> dict[str, T.Term]:
        sub = {
            "tx:value": T.var(f"p{i}_value", T.bv_sort(self.w)),
            "tx:sender": T.var(f"p{i}_sender", self.addr_sort),
            "tx:time": T.var(f"p{i}_time", T.bv_sort(self.w)),
        }
        for pos, p in enumerate(t.params):
            kind = _kind_of(p.ty)
            sub[f"tx:arg:{p.name}"] = T.var(f"p{i}_arg{pos}_{kind}", self.kind_sort(kind))
        return sub

    # -- component table ------------------------------------------------------------

    def _components(self, t: TransitionFn) -> list[tuple[str, T.Term]]:
        """(next-var suffix, update term) pairs in state-vector order."""
        out: list[tuple[str, T.Term]] = []
        for s in self.model.slots:
            out.append((s.slot_id, t.slot_updates[s.slot_id]))
        out.append(("alive", t.alive_update))
        out.append(("evtag", t.ev_tag))
        for pos, kind in self.events.arg_slots:
            out.append((f"evarg{pos}_{kind}", t.ev_args[(pos, kind)]))
        for a in self.addrs.elements:
            out.append((f"bal_{a}", t.bal_updates[a]))
        out.append(("time", T.var("tx:time", T.bv_sort(self.w))))
        return out

    def _next_var(self, i: int, suffix: str) -> T.Term:
        for name, sort in self.state_vars(i + 1):
            if name == f"step{i + 1}_{suffix}":
                return T.var(name, sort)
        raise KeyError(suffix)

    def _compute_shared(self) -> dict[str, T.Term]:
        """Components updated identically (same term) by every function."""
        if not self.model.transitions:
            return {}
        tables = [dict(self._components(t)) for t in self.model.transitions]
        shared: dict[str, T.Term] = {}
        for suffix, update in tables[0].items():
            if all(tbl[suffix] is update for tbl in tables[1:]):
                shared[suffix] = update
        return shared

    # -- formulas ----------------------------------------------------------------------

    def encode_transition(self, i: int) -> T.Term:
        """transition(sigma_i, sigma_{i+1}) over the step-i parameter vector.

        Implication form: the function-choice enum is total (exactly one
        constructor holds), so `for all j: choice = j -> (pre_j and updates_j)`
        is equivalent to the disjunction over functions and propagates much
        better once a choice is decided.
        """
        if not self.model.transitions:
            return T.FALSE
        state_sub = self.state_subst(i)
        choice = T.var(f"p{i}_fn", self.fn_sort)
        parts_out: list[T.Term] = []
        for suffix, update in self._shared_updates.items():
            # shared updates may mention tx:time (blocktime refresh)
            sub = dict(state_sub)
            sub["tx:time"] = T.var(f"p{i}_time", T.bv_sort(self.w))
            parts_out.append(
                T.eq(self._next_var(i, suffix), T.substitute(update, sub))
            )
        for j, t in enumerate(self.model.transitions):
            sub = dict(state_sub)
            sub.update(self.call_subst(i, t))
            fires = T.eq(choice, T.enum_const(self.fn_sort, j))
            body = [T.substitute(t.pre, sub)]
            for suffix, update in self._components(t):
                if suffix in self._shared_updates:
                    continue
                body.append(T.eq(self._next_var(i, suffix), T.substitute(update, sub)))
            parts_out.append(T.implies(fires, T.and_(*body)))
        parts_out.extend(self._tag_reverse_lemmas(i, choice))
        return T.and_(*parts_out)

    def _possible_tags(self, t: TransitionFn) -> set[int]:
        """Event-tag ordinals a transition can produce (syntactic over-approx)."""
        out: set[int] = set()
        stack = [t.ev_tag]
        seen: set[int] = set()
        while stack:
            u = stack.pop()
            if u.tid in seen:
                continue
            seen.add(u.tid)
            if u.op == "const" and u.sort is self.events.tag_sort:
                out.add(u.payload)
            stack.extend(u.args)
        return out

    def _tag_reverse_lemmas(self, i: int, choice: T.Term) -> list[T.Term]:
        """Implied lemmas `evtag_{i+1} = tag -> choice in emitters(tag)`.

        Redundant but lets a witness's event-tag constraint force the
        function choice by unit propagation instead of search.
        """
        out: list[T.Term] = []
        tag_var = T.var(f"step{i + 1}_evtag", self.events.tag_sort)
        emitters: dict[int, list[int]] = {}
        for j, t in enumerate(self.model.transitions):
            for tag in self._possible_tags(t):
                emitters.setdefault(tag, []).append(j)
        for ordinal in range(1, len(self.events.tag_sort.members)):
            cond = T.eq(tag_var, T.enum_const(self.events.tag_sort, ordinal))
            fns = emitters.get(ordinal, [])
            out.append(T.implies(cond, T.or_(
                *(T.eq(choice, T.enum_const(self.fn_sort, j)) for j in fns)
            )))
        return out

    def encode_path(self, k: int) -> T.Term:
        """path(sigma_[0..k]): conjunction of k transitions; k=0 is true."""
        return T.and_(*(self.encode_transition(i) for i in range(k)))

    def encode_initial(self) -> T.Term:
        """I(sigma_0): constructor effects, alive, empty event log."""
        init = self.model.initial
        ctor_sub: dict[str, T.Term] = {}
        for p in init.ctor_params:
            ctor_sub[f"ctor:{p.name}"] = T.var(f"ctor_{p.name}", self.slot_sort(p.ty))
        deployer = T.var("ctor_sender", self.addr_sort)
        ctor_sub["ctor:msg.sender"] = deployer
        ctor_sub["btime"] = T.var("step0_time", T.bv_sort(self.w))
        parts: list[T.Term] = []
        state0 = self.state_subst(0)
        for s in self.model.slots:
            value = T.substitute(init.var_init[s.slot_id], ctor_sub)
            parts.append(T.eq(state0[f"state:{s.slot_id}"], value))
        parts.append(state0["alive"])
        parts.append(T.eq(T.var("step0_evtag", self.events.tag_sort), self.events.no_event))
        for pos, kind in self.events.arg_slots:
            zero = {
                "bv": T.bv_const(0, self.w),
                "bool": T.FALSE,
                "addr": T.enum_const(self.addr_sort, 0),
            }[kind]
            parts.append(T.eq(T.var(f"step0_evarg{pos}_{kind}", self.kind_sort(kind)), zero))
        if any(name == "ctor_sender" for name, _ in self.ctor_vars()):
            parts.append(T.distinct(deployer, T.enum_const(self.addr_sort, self.addrs.contract_addr)))
            parts.append(T.distinct(deployer, T.enum_const(self.addr_sort, self.addrs.no_addr)))
        return T.and_(*parts)

    def encode_side_constraints(self, k: int) -> T.Term:
        """Time monotonicity, NoSelfAddrCall and the initial-state constraint."""
        parts: list[T.Term] = [self.encode_initial()]
        w = T.bv_sort(self.w)
        if k >= 1:
            parts.append(T.ule(T.var("step0_time", w), T.var("p0_time", w)))
        for i in range(k - 1):
            parts.append(T.ult(T.var(f"p{i}_time", w), T.var(f"p{i + 1}_time", w)))
        for i in range(k):
            s = T.var(f"p{i}_sender", self.addr_sort)
            parts.append(T.distinct(s, T.enum_const(self.addr_sort, self.addrs.contract_addr)))
            parts.append(T.distinct(s, T.enum_const(self.addr_sort, self.addrs.no_addr)))
        return T.and_(*parts)

    def no_self_addr_call(self, i: int) -> T.Term:
        s = T.var(f"p{i}_sender", self.addr_sort)
        return T.and_(
            T.distinct(s, T.enum_const(self.addr_sort, self.addrs.contract_addr)),
            T.distinct(s, T.enum_const(self.addr_sort, self.addrs.no_addr)),
        )

    def all_query_vars(self, k: int, extra: list[tuple[str, T.Sort]] = ()) -> list[tuple[str, T.Sort]]:
        """Every variable a decoded counter-example needs, deterministic order."""
        out: list[tuple[str, T.Sort]] = []
        out.extend(self.ctor_vars())
        for i in range(k + 1):
            out.extend(self.state_vars(i))
        for i in range(k):
            out.extend(self.param_vars(i))
        out.extend(extra)
        return out

    # -- decoding ---------------------------------------------------------------------------

    def decode_state(self, values: dict[str, object], i: int) -> SystemState:
        vars_out = []
        for s in self.model.slots:
            v = values.get(f"step{i}_{s.slot_id}", 0)
            if isinstance(s.ty, BoolType):
                v = bool(v)
            vars_out.append(v)
        balances = tuple(int(values.get(f"step{i}_bal_{a}", 0)) for a in self.addrs.elements)
        tag_ord = int(values.get(f"step{i}_evtag", 0))
        event: Optional[EventInstance] = None
        if tag_ord != 0:
            name = self.events.tag_sort.members[tag_ord]
            decl = self.events.event(name)
            args = []
            for pos, p in enumerate(decl.params):
                kind = _kind_of(p.ty)
                raw = values.get(f"step{i}_evarg{pos}_{kind}", 0)
                if kind == "addr":
                    args.append(self.addrs.name(int(raw)))
                elif kind == "bool":
                    args.append(bool(raw))
                else:
                    args.append(int(raw))
            event = EventInstance(name, tuple(args))
        return SystemState(
            vars=tuple(vars_out),
            balances=balances,
            blocktime=int(values.get(f"step{i}_time", 0)),
            alive=bool(values.get(f"step{i}_alive", True)),
            eventlog=event,
        )

    def decode_model(self, values: dict[str, object], k: int,
                     property_name: str = "?", kind: str = "trace") -> CounterExample:
        """Rebuild the transaction sequence from a satisfying assignment.

        Step 0 is the initial state (NoEvent); argument slots beyond each
        chosen function's arity are omitted.
        """
        steps: list[CEStep] = []
        ctor_args = tuple(
            values.get(f"ctor_{p.name}", 0) for p in self.model.initial.ctor_params
        )
        deployer = values.get("ctor_sender")
        state0 = self.decode_state(values, 0)
        steps.append(CEStep(
            fname=None, value=0,
            sender=int(deployer) if deployer is not None else None,
            time=None, args=ctor_args, event=None, state=state0,
        ))
        for i in range(k):
            fn_ord = int(values.get(f"p{i}_fn", 0))
            t = self.model.transitions[fn_ord]
            args = []
            for pos, p in enumerate(t.params):
                kind = _kind_of(p.ty)
                raw = values.get(f"p{i}_arg{pos}_{kind}", 0)
                if kind == "bool":
                    args.append(bool(raw))
                else:
                    args.append(int(raw))
            state = self.decode_state(values, i + 1)
            steps.append(CEStep(
                fname=t.fname,
                value=int(values.get(f"p{i}_value", 0)),
                sender=int(values.get(f"p{i}_sender", 0)),
                time=int(values.get(f"p{i}_time", 0)),
                args=tuple(args),
                event=state.eventlog,
                state=state,
            ))
        return CounterExample(property_name=property_name, kind=kind, steps=steps)
