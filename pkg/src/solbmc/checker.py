"""The four verification algorithms over the encoded model.

Invariants run the two induction queries (base, step); the bounded classes
iteratively deepen the path length and ask the solver for a violating trace,
decoding any model into a replayable counter-example.  Event-chain and
call-possibility witnesses (m, q, n) are lowered as a finite case split over
concrete index triples, keeping every query quantifier-free.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

from . import terms as T
from .smt.driver import (
    Sat, SolverConfig, SolverDriver, SolverSession, Unknown, Unsat,
)
from .smt.encode import Encoder
from .speclang import (
    LoweredCall, LoweredChain, LoweredInvariant, LoweredPattern,
    LoweredProperty, LoweredTrace,
)
from .symexec import ContractModel
from .trace import CounterExample

WIT_SORT = T.bv_sort(8)


@dataclass
class IterationStat:
    k: int
    result: str
    seconds: float


@dataclass
class CheckOutcome:
    property_name: str
    verdict: str  # holds | violated | unknown
    counter_example: Optional[CounterExample] = None
    bound: Optional[int] = None  # max state count certified for bounded verdicts
    note: str = ""
    stats: list[IterationStat] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


class Checker:
    def __init__(self, model: ContractModel, solver: Optional[SolverConfig] = None,
                 incremental: bool = False):
        self.model = model
        self.cfg = model.cfg
        self.encoder = Encoder(model)
        self.solver_config = solver or SolverConfig()
        self.incremental = incremental

    # -- shared plumbing ----------------------------------------------------------

    def _new_driver(self) -> SolverDriver:
        return SolverDriver(self.solver_config)

    def _timed(self, driver: SolverDriver, assertions, want, stats, k):
        started = time.monotonic()
        result = driver.check_sat(assertions, want)
        elapsed = time.monotonic() - started
        name = {Sat: "sat", Unsat: "unsat", Unknown: "unknown"}[type(result)]
        stats.append(IterationStat(k, name, elapsed))
        return result

    def check(self, lp: LoweredProperty) -> CheckOutcome:
        body = lp.body
        if isinstance(body, LoweredInvariant):
            return self.check_invariant(lp.name, body)
        if isinstance(body, LoweredTrace):
            return self.check_trace(lp.name, body)
        if isinstance(body, LoweredChain):
            return self.check_event_chain(lp.name, body)
        if isinstance(body, LoweredCall):
            return self.check_call_possibility(lp.name, body)
        raise TypeError(f"unknown lowered property {body!r}")

    # -- Algorithm 1: invariants -----------------------------------------------------

    def check_invariant(self, name: str, body: LoweredInvariant) -> CheckOutcome:
        enc = self.encoder
        driver = self._new_driver()
        stats: list[IterationStat] = []

        p0 = T.substitute(body.pred, enc.state_subst(0))
        base = [enc.encode_initial(), T.not_(p0)]
        want = enc.all_query_vars(0)
        result = self._timed(driver, base, want, stats, 0)
        if isinstance(result, Unknown):
            return CheckOutcome(name, "unknown", note=f"base query: {result.reason}", stats=stats)
        if isinstance(result, Sat):
            ce = enc.decode_model(result.values, 0, name, "invariant")
            ce.note = "initial state violates the invariant"
            return CheckOutcome(name, "violated", ce, stats=stats)

        # Step case, split per public function (the step relation is their
        # disjunction, and satisfiability distributes over it).  The post
        # state is substituted symbolically, so functions that cannot touch
        # the predicate fold away before any solver call.
        for j, t in enumerate(self.model.transitions):
            sub = enc.state_subst(0)
            sub.update(enc.call_subst(0, t))
            pre_j = T.substitute(t.pre, sub)
            post_env: dict[str, T.Term] = {}
            for s in self.model.slots:
                post_env[f"state:{s.slot_id}"] = T.substitute(t.slot_updates[s.slot_id], sub)
            for a in self.model.addrs.elements:
                post_env[f"bal:{a}"] = T.substitute(t.bal_updates[a], sub)
            post_env["alive"] = T.substitute(t.alive_update, sub)
            post_env["btime"] = T.var("p0_time", T.bv_sort(self.cfg.int_width))
            p1_j = T.substitute(body.pred, post_env)
            goal = T.and_(p0, pre_j, enc.no_self_addr_call(0), T.not_(p1_j))
            if goal is T.FALSE:
                stats.append(IterationStat(1, "unsat", 0.0))
                continue
            want = [v for v in enc.all_query_vars(0) if not v[0].startswith("ctor_")]
            want.extend(enc.param_vars(0))
            result = self._timed(driver, [goal], want, stats, 1)
            if isinstance(result, Unknown):
                return CheckOutcome(
                    name, "unknown",
                    note=f"step query ({t.fname}): {result.reason}", stats=stats,
                )
            if isinstance(result, Sat):
                values = dict(result.values)
                values[f"p0_fn"] = j
                self._fill_post_state(values, t)
                ce = enc.decode_model(values, 1, name, "invariant-step")
                ce.note = "inductive-step counter-example (possibly unreachable)"
                return CheckOutcome(name, "violated", ce, stats=stats)
        return CheckOutcome(name, "holds", note="inductive invariant", stats=stats)

    def _fill_post_state(self, values: dict, t) -> None:
        """Evaluate a transition's updates concretely to build sigma_1."""
        enc = self.encoder
        env: dict[str, object] = {}
        for s in self.model.slots:
            env[f"state:{s.slot_id}"] = values.get(f"step0_{s.slot_id}", 0)
        for a in self.model.addrs.elements:
            env[f"bal:{a}"] = values.get(f"step0_bal_{a}", 0)
        env["alive"] = values.get("step0_alive", True)
        env["btime"] = values.get("step0_time", 0)
        env["tx:value"] = values.get("p0_value", 0)
        env["tx:sender"] = values.get("p0_sender", 0)
        env["tx:time"] = values.get("p0_time", 0)
        for pos, p in enumerate(t.params):
            from .symexec import arg_kind

            kind = arg_kind(p.ty)
            env[f"tx:arg:{p.name}"] = values.get(f"p0_arg{pos}_{kind}", 0)
        for s in self.model.slots:
            values[f"step1_{s.slot_id}"] = T.evaluate(t.slot_updates[s.slot_id], env)
        for a in self.model.addrs.elements:
            values[f"step1_bal_{a}"] = T.evaluate(t.bal_updates[a], env)
        values["step1_alive"] = T.evaluate(t.alive_update, env)
        values["step1_time"] = env["tx:time"]
        values["step1_evtag"] = T.evaluate(t.ev_tag, env)
        for (pos, kind), term in t.ev_args.items():
            values[f"step1_evarg{pos}_{kind}"] = T.evaluate(term, env)

    # -- Algorithm 2: bounded trace properties ------------------------------------------

    def check_trace(self, name: str, body: LoweredTrace,
                    kmin: Optional[int] = None, kmax: Optional[int] = None) -> CheckOutcome:
        enc = self.encoder
        stats: list[IterationStat] = []
        lo = self.cfg.min_trace if kmin is None else kmin
        hi = min(body.k, self.cfg.max_trace if kmax is None else kmax)
        driver = self._new_driver()
        for i in range(lo, hi):
            pred_i = T.substitute(body.pred, enc.state_subst(i))
            assertions = [
                enc.encode_path(i),
                enc.encode_side_constraints(i),
                T.not_(pred_i),
            ]
            want = enc.all_query_vars(i)
            result = self._timed(driver, assertions, want, stats, i)
            if isinstance(result, Unknown):
                return CheckOutcome(
                    name, "unknown", bound=i,
                    note=f"iteration i={i}: {result.reason}", stats=stats,
                )
            if isinstance(result, Sat):
                ce = enc.decode_model(result.values, i, name, "trace")
                return CheckOutcome(name, "violated", ce, bound=i + 1, stats=stats)
        return CheckOutcome(
            name, "holds", bound=hi,
            note=f"holds up to k={hi} (bounded)", stats=stats,
        )

    # -- witness machinery for Algorithms 3 and 4 ------------------------------------------

    def _pattern_at(self, pat: LoweredPattern, i: int) -> T.Term:
        enc = self.encoder
        tag = T.var(f"step{i}_evtag", enc.events.tag_sort)
        parts = [T.eq(tag, enc.events.tag_const(pat.tag))]
        for pos, kind, expected in pat.constraints:
            slot = T.var(f"step{i}_evarg{pos}_{kind}", enc.kind_sort(kind))
            parts.append(T.eq(slot, expected))
        return T.and_(*parts)

    def _witness_vars(self) -> list[tuple[str, T.Sort]]:
        return [("wit_m", WIT_SORT), ("wit_n", WIT_SORT), ("wit_q", WIT_SORT)]

    def _witness_disjunction(self, i: int, first: LoweredPattern, second: LoweredPattern,
                             q_constraint) -> T.Term:
        """Case split over 0 <= m < q < n <= i with the per-q payload."""
        disjuncts = []
        for m in range(0, i - 1):
            e1 = self._pattern_at(first, m)
            if e1 is T.FALSE:
                continue
            for q in range(m + 1, i):
                payload = q_constraint(q)
                if payload is T.FALSE:
                    continue
                for n in range(q + 1, i + 1):
                    e2 = self._pattern_at(second, n)
                    if e2 is T.FALSE:
                        continue
                    disjuncts.append(T.and_(
                        e1, e2, payload,
                        T.eq(T.var("wit_m", WIT_SORT), T.bv_const(m, 8)),
                        T.eq(T.var("wit_q", WIT_SORT), T.bv_const(q, 8)),
                        T.eq(T.var("wit_n", WIT_SORT), T.bv_const(n, 8)),
                    ))
        return T.or_(*disjuncts)

    def _deepen(self, name: str, kind: str, binders, extra_want, make_witness,
                focus_fn=None) -> CheckOutcome:
        enc = self.encoder
        stats: list[IterationStat] = []
        lo = max(3, self.cfg.min_trace)
        hi = self.cfg.max_trace
        driver = self._new_driver()
        for i in range(lo, hi):
            witness = make_witness(i)
            if witness is T.FALSE:
                stats.append(IterationStat(i, "unsat", 0.0))
                continue
            assertions = [
                enc.encode_path(i),
                enc.encode_side_constraints(i),
                witness,
            ]
            want = enc.all_query_vars(i)
            want.extend(self._witness_vars())
            want.extend((f"bind:{b}", sort) for b, sort in binders)
            want.extend(extra_want)
            result = self._timed(driver, assertions, want, stats, i)
            if isinstance(result, Unknown):
                return CheckOutcome(
                    name, "unknown", bound=i,
                    note=f"iteration i={i}: {result.reason}", stats=stats,
                )
            if isinstance(result, Sat):
                ce = enc.decode_model(result.values, i, name, kind)
                ce.witnesses = {
                    "m": int(result.values.get("wit_m", 0)),
                    "n": int(result.values.get("wit_n", 0)),
                    "q": int(result.values.get("wit_q", 0)),
                }
                focus = {}
                for b, sort in binders:
                    raw = result.values.get(f"bind:{b}")
                    if raw is None:
                        continue
                    if isinstance(sort, T.EnumSort):
                        focus[b] = sort.members[int(raw)]
                    else:
                        focus[b] = raw
                if focus_fn is not None:
                    focus.update(focus_fn(result.values))
                ce.focus = focus or None
                return CheckOutcome(name, "violated", ce, bound=i + 1, stats=stats)
        return CheckOutcome(
            name, "holds", bound=hi,
            note=f"holds up to k={hi} (bounded)", stats=stats,
        )

    # -- Algorithm 3: events chaining ----------------------------------------------------------

    def check_event_chain(self, name: str, body: LoweredChain) -> CheckOutcome:
        enc = self.encoder

        def q_payload(q: int) -> T.Term:
            parts = [self._pattern_at(body.forbidden, q)]
            if body.where is not None:
                parts.append(T.substitute(body.where, enc.state_subst(q)))
            return T.and_(*parts)

        def witness(i: int) -> T.Term:
            return self._witness_disjunction(i, body.first, body.second, q_payload)

        return self._deepen(name, "chain", body.binders, [], witness)

    # -- Algorithm 4: function call possibility ---------------------------------------------------

    def check_call_possibility(self, name: str, body: LoweredCall) -> CheckOutcome:
        enc = self.encoder
        t = self.model.transition(body.fname)
        assert t is not None
        w = self.cfg.int_width

        hyp_sub = {
            "tx:value": T.var("hyp:value", T.bv_sort(w)),
            "tx:sender": T.var("hyp:sender", enc.addr_sort),
            "tx:time": T.var("hyp:time", T.bv_sort(w)),
        }
        hyp_want: list[tuple[str, T.Sort]] = [
            ("hyp:value", T.bv_sort(w)),
            ("hyp:sender", enc.addr_sort),
            ("hyp:time", T.bv_sort(w)),
        ]
        for p in t.params:
            from .symexec import arg_kind

            kind = arg_kind(p.ty)
            sort = enc.kind_sort(kind)
            hyp_sub[f"tx:arg:{p.name}"] = T.var(f"hyp:arg:{p.name}", sort)
            hyp_want.append((f"hyp:arg:{p.name}", sort))

        # call-tuple constraints shared by every witness disjunct
        fixed: list[T.Term] = []
        if not t.payable:
            fixed.append(T.eq(T.var("hyp:value", T.bv_sort(w)), T.bv_const(0, w)))
        sender = T.var("hyp:sender", enc.addr_sort)
        fixed.append(T.distinct(sender, T.enum_const(enc.addr_sort, self.model.addrs.contract_addr)))
        fixed.append(T.distinct(sender, T.enum_const(enc.addr_sort, self.model.addrs.no_addr)))
        for pname, kind, expected in body.arg_constraints:
            fixed.append(T.eq(T.var(f"hyp:arg:{pname}", enc.kind_sort(kind)), expected))
        fixed_term = T.and_(*fixed)

        def q_payload(q: int) -> T.Term:
            state_sub = enc.state_subst(q)
            sub = dict(state_sub)
            sub.update(hyp_sub)
            pre_q = T.substitute(t.pre, sub)
            parts = [T.not_(pre_q) if body.always else pre_q]
            if body.where is not None:
                where_sub = dict(state_sub)
                where_sub.update({
                    "hyp:value": hyp_sub["tx:value"],
                    "hyp:sender": hyp_sub["tx:sender"],
                    "hyp:time": hyp_sub["tx:time"],
                })
                for p in t.params:
                    where_sub[f"hyp:arg:{p.name}"] = hyp_sub[f"tx:arg:{p.name}"]
                parts.append(T.substitute(body.where, where_sub))
            return T.and_(*parts)

        def witness(i: int) -> T.Term:
            return T.and_(
                self._witness_disjunction(i, body.first, body.second, q_payload),
                fixed_term,
            )

        def focus(values: dict) -> dict:
            out = {
                "call": body.fname,
                "value": int(values.get("hyp:value", 0)),
                "sender": self.model.addrs.name(int(values.get("hyp:sender", 0))),
                "time": int(values.get("hyp:time", 0)),
            }
            args = []
            for p in t.params:
                from .symexec import arg_kind

                raw = values.get(f"hyp:arg:{p.name}", 0)
                if arg_kind(p.ty) == "addr":
                    args.append(self.model.addrs.name(int(raw)))
                elif arg_kind(p.ty) == "bool":
                    args.append(bool(raw))
                else:
                    args.append(int(raw))
            if args:
                out["args"] = args
            return out

        return self._deepen(name, "call", body.binders, hyp_want, witness, focus)
