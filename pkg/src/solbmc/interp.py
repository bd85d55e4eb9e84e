"""Concrete reference interpreter for Sol.

Executes one transaction against a SystemState with full exception semantics:
any throwing construct rolls the whole transaction back (the input state is
never mutated).  Shares the frontend AST and the inliner with the symbolic
extractor so the two halves cannot drift apart; the differential suite then
checks exec_tx-reverts <=> f_pre-is-false over exhaustive tiny domains.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Optional

from .frontend.nodes import (
    AddressType, ArrayType, AssignStmt, Binary, BoolLit, BoolType, Call,
    Conditional, ContractAst, EmitStmt, EnumType, EventDecl, Expr, ExprStmt,
    FunDecl, Ident, IfStmt, Index, IntLit, MappingType, Member, ReturnStmt,
    SolType, Stmt, ThrowStmt, Unary, UintType, VarDeclStmt,
)
from .model import (
    AddrDomain, EventInstance, ModelConfig, Slot, SystemState, TxParams,
    build_addr_domain, state_slots, zero_value,
)
from .symexec import _declared_locals_typed, inline_internal_calls
from .trace import CEStep, CounterExample, ReplayReport, ReplayStepReport


class SolRevert(Exception):
    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind


class _ReturnSignal(Exception):
    pass


class _SelfdestructSignal(Exception):
    pass


class InternalError(Exception):
    pass


@dataclass(frozen=True)
class TxOutcome:
    committed: bool
    state: Optional[SystemState]
    event: Optional[EventInstance]
    reason: str = ""

    @staticmethod
    def reverted(reason: str) -> "TxOutcome":
        return TxOutcome(False, None, None, reason)


class Interpreter:
    def __init__(self, ast: ContractAst, cfg: ModelConfig, addrs: Optional[AddrDomain] = None):
        self.ast = ast
        self.cfg = cfg
        self.addrs = addrs if addrs is not None else build_addr_domain(cfg)
        self.slots = state_slots(ast, self.addrs)
        self.slot_index = {s.slot_id: i for i, s in enumerate(self.slots)}
        self.mask = (1 << cfg.int_width) - 1
        self._inlined: dict[str, FunDecl] = {}

    # -- plumbing ---------------------------------------------------------------

    def inlined(self, name: str) -> FunDecl:
        if name not in self._inlined:
            fn = self.ast.function(name)
            if fn is None or not fn.is_public:
                raise InternalError(f"no public function {name!r}")
            self._inlined[name] = inline_internal_calls(fn, self.ast)
        return self._inlined[name]

    def initial_state(self, deployer: Optional[int] = None,
                      balances: Optional[tuple] = None, blocktime: int = 0,
                      ctor_args: tuple = ()) -> SystemState:
        """Concrete constructor evaluation from the all-zero storage."""
        store = {s.slot_id: zero_value(s.ty, self.addrs) for s in self.slots}
        if balances is None:
            balances = tuple(0 for _ in self.addrs.elements)
        ctor = self.ast.ctor
        if ctor is not None:
            if len(ctor_args) != len(ctor.params):
                raise InternalError("constructor argument count mismatch")
            env = _Env(
                self, store, list(balances),
                sender=deployer if deployer is not None else 1,
                value=0, time=blocktime, in_ctor=True,
            )
            inlined = inline_internal_calls(ctor, self.ast)
            for p, a in zip(ctor.params, ctor_args):
                env.locals[p.name] = a
            for name, ty in _declared_locals_typed(inlined.body or []):
                env.locals.setdefault(name, zero_value(ty, self.addrs))
            try:
                env.exec_stmts(inlined.body or [])
            except _ReturnSignal:
                pass
            except SolRevert as exc:
                raise InternalError(f"constructor threw ({exc.kind}); "
                                    "validate_constructor should have rejected it")
        return SystemState(
            vars=tuple(store[s.slot_id] for s in self.slots),
            balances=balances,
            blocktime=blocktime,
            alive=True,
            eventlog=None,
        )

    # -- transactions --------------------------------------------------------------

    def exec_tx(self, state: SystemState, tx: TxParams) -> TxOutcome:
        fn = self.inlined(tx.fname)
        if not state.alive:
            return TxOutcome.reverted("contract has been deleted")
        if tx.sender == self.addrs.contract_addr:
            return TxOutcome.reverted("sender is the contract address")
        if not fn.payable and tx.value != 0:
            return TxOutcome.reverted("non-payable function called with value")
        if state.balances[tx.sender] < tx.value:
            return TxOutcome.reverted("sender balance below msg.value")
        if len(tx.args) != len(fn.params):
            raise InternalError(f"{tx.fname} expects {len(fn.params)} args, got {len(tx.args)}")

        store = {s.slot_id: v for s, v in zip(self.slots, state.vars)}
        balances = list(state.balances)
        if fn.payable:
            balances[tx.sender] = (balances[tx.sender] - tx.value) & self.mask
            balances[self.addrs.contract_addr] = (
                balances[self.addrs.contract_addr] + tx.value
            ) & self.mask

        env = _Env(self, store, balances, tx.sender, tx.value, tx.time, in_ctor=False)
        for p, a in zip(fn.params, tx.args):
            env.locals[p.name] = a
        for name, ty in _declared_locals_typed(fn.body or []):
            env.locals.setdefault(name, zero_value(ty, self.addrs))

        try:
            try:
                env.exec_stmts(fn.body or [])
            except _ReturnSignal:
                pass
            except _SelfdestructSignal:
                pass
        except SolRevert as exc:
            return TxOutcome.reverted(exc.kind)

        new_state = SystemState(
            vars=tuple(store[s.slot_id] for s in self.slots),
            balances=tuple(balances),
            blocktime=tx.time,
            alive=env.alive,
            eventlog=env.event,
        )
        return TxOutcome(True, new_state, env.event)

    # -- replay -----------------------------------------------------------------------

    def replay(self, ce: CounterExample) -> ReplayReport:
        report = ReplayReport()
        if not ce.steps:
            report.note = "empty counter-example"
            return report
        first = ce.steps[0]
        expected0 = self.initial_state(
            deployer=first.sender,
            balances=first.state.balances,
            blocktime=first.state.blocktime,
            ctor_args=first.args,
        )
        match0 = expected0 == first.state
        report.steps.append(ReplayStepReport(
            0, True, first.event is None, match0,
            "" if match0 else "initial state differs from constructor evaluation",
        ))
        current = first.state
        for i, step in enumerate(ce.steps[1:], start=1):
            if step.fname is None or step.sender is None or step.time is None:
                report.steps.append(ReplayStepReport(i, False, False, False, "missing call data"))
                break
            outcome = self.exec_tx(current, TxParams(
                step.fname, step.value, step.sender, step.time, step.args,
            ))
            if not outcome.committed:
                report.steps.append(ReplayStepReport(
                    i, False, False, False, f"transaction reverted: {outcome.reason}"
                ))
                break
            ev_ok = outcome.event == step.event
            st_ok = outcome.state == step.state
            detail = ""
            if not ev_ok:
                detail = f"event {outcome.event} != recorded {step.event}"
            elif not st_ok:
                detail = "post-state differs from recorded state"
            report.steps.append(ReplayStepReport(i, True, ev_ok, st_ok, detail))
            current = outcome.state
        return report

    # -- brute-force reachability -------------------------------------------------------

    def enumerate_reachable(self, k: int, initial: Optional[SystemState] = None,
                            max_time: Optional[int] = None) -> set[SystemState]:
        """All states reachable in <= k committed transactions by exhaustive search.

        Only feasible for tiny configurations (the differential/equivalence
        suites use W<=4, two user addresses, k<=3).
        """
        if initial is None:
            initial = self.initial_state()
        horizon = (1 << self.cfg.int_width) - 1 if max_time is None else max_time
        seen: set[SystemState] = {initial}
        frontier = [initial]
        for _ in range(k):
            new_frontier = []
            for state in frontier:
                for tx in self.all_txs(state, horizon):
                    outcome = self.exec_tx(state, tx)
                    if outcome.committed and outcome.state not in seen:
                        seen.add(outcome.state)
                        new_frontier.append(outcome.state)
            frontier = new_frontier
            if not frontier:
                break
        return seen

    def all_txs(self, state: SystemState, max_time: int) -> Iterable[TxParams]:
        width_domain = range(1 << self.cfg.int_width)
        times = range(state.blocktime + 1, max_time + 1)
        for fn in self.ast.public_functions():
            arg_domains = [self.value_domain(p.ty) for p in fn.params]
            values = width_domain if fn.payable else (0,)
            for sender in self.addrs.user_addrs:
                for t in times:
                    for v in values:
                        for args in itertools.product(*arg_domains):
                            yield TxParams(fn.name, v, sender, t, args)

    def value_domain(self, ty: SolType) -> list:
        if isinstance(ty, UintType):
            return list(range(1 << self.cfg.int_width))
        if isinstance(ty, BoolType):
            return [False, True]
        if isinstance(ty, AddressType):
            return list(range(len(self.addrs)))
        if isinstance(ty, EnumType):
            return list(range(len(ty.members)))
        raise InternalError(f"cannot enumerate type {ty}")


class _Env:
    def __init__(self, interp: Interpreter, store: dict, balances: list,
                 sender: int, value: int, time: int, in_ctor: bool):
        self.interp = interp
        self.store = store
        self.balances = balances
        self.sender = sender
        self.value = value
        self.time = time
        self.in_ctor = in_ctor
        self.locals: dict[str, object] = {}
        self.alive = True
        self.event: Optional[EventInstance] = None
        self.mask = interp.mask

    # -- statements ------------------------------------------------------------

    def exec_stmts(self, stmts: list[Stmt]) -> None:
        for stmt in stmts:
            self.exec_stmt(stmt)

    def exec_stmt(self, stmt: Stmt) -> None:
        if isinstance(stmt, VarDeclStmt):
            value = self.eval(stmt.init) if stmt.init is not None else \
                zero_value(stmt.declared_ty, self.interp.addrs)
            self.locals[stmt.name] = value
            return
        if isinstance(stmt, AssignStmt):
            self.exec_assign(stmt)
            return
        if isinstance(stmt, ExprStmt):
            self.exec_call_stmt(stmt.expr)
            return
        if isinstance(stmt, IfStmt):
            if self.eval(stmt.cond):
                self.exec_stmts(stmt.then_body)
            elif stmt.else_body is not None:
                self.exec_stmts(stmt.else_body)
            return
        if isinstance(stmt, ReturnStmt):
            raise _ReturnSignal()
        if isinstance(stmt, ThrowStmt):
            raise SolRevert("throw")
        if isinstance(stmt, EmitStmt):
            self.exec_emit(stmt)
            return
        raise InternalError(f"statement {type(stmt).__name__} survived validation")

    def exec_assign(self, stmt: AssignStmt) -> None:
        value = self.eval(stmt.value)

        def combine(old):
            op = stmt.op
            if op == "=":
                return value
            if op == "+=":
                return (old + value) & self.mask
            if op == "-=":
                return (old - value) & self.mask
            if op == "*=":
                return (old * value) & self.mask
            if value == 0:
                raise SolRevert("division by zero")
            return old // value if op == "/=" else old % value

        target = stmt.target
        if isinstance(target, Ident):
            if target.name in self.locals:
                self.locals[target.name] = combine(self.locals[target.name])
                return
            if target.name in self.store:
                self.store[target.name] = combine(self.store[target.name])
                return
            raise InternalError(f"assignment to unknown name {target.name!r}")
        slot_id = self.resolve_slot(target)
        self.store[slot_id] = combine(self.store[slot_id])

    def resolve_slot(self, expr: Expr) -> str:
        if isinstance(expr, Ident):
            if expr.name not in self.store and self.interp.ast.state_var(expr.name) is None:
                raise InternalError(f"{expr.name!r} is not a state variable")
            return expr.name
        if isinstance(expr, Index):
            prefix = self.resolve_slot(expr.base)
            base_ty = expr.base.ty
            if isinstance(base_ty, MappingType):
                key = self.eval(expr.index)
                return f"{prefix}[{self.interp.addrs.name(key)}]"
            if isinstance(base_ty, ArrayType):
                idx = self.eval(expr.index)
                if idx >= base_ty.length:
                    raise SolRevert("array index out of bounds")
                return f"{prefix}[{idx}]"
            raise InternalError("indexing a non-indexable type")
        raise InternalError("unsupported storage location")

    def exec_call_stmt(self, expr: Expr) -> None:
        if not isinstance(expr, Call):
            raise InternalError("expression statement has no effect")
        callee = expr.callee
        if isinstance(callee, Ident):
            name = callee.name
            if name in ("require", "assert"):
                if not self.eval(expr.args[0]):
                    raise SolRevert(f"{name} failed")
                return
            if name == "revert":
                raise SolRevert("revert")
            if name == "selfdestruct":
                beneficiary = self.eval(expr.args[0])
                contract = self.interp.addrs.contract_addr
                pot = self.balances[contract]
                self.balances[beneficiary] = (self.balances[beneficiary] + pot) & self.mask
                self.balances[contract] = 0
                self.alive = False
                raise _SelfdestructSignal()
            raise InternalError(f"call {name!r} survived inlining")
        if isinstance(callee, Member) and callee.name == "transfer":
            target = self.eval_address(callee.obj)
            amount = self.eval(expr.args[0])
            contract = self.interp.addrs.contract_addr
            if self.balances[contract] < amount:
                raise SolRevert("transfer exceeds contract balance")
            self.balances[contract] = self.balances[contract] - amount
            self.balances[target] = (self.balances[target] + amount) & self.mask
            return
        raise InternalError("unsupported call statement")

    def exec_emit(self, stmt: EmitStmt) -> None:
        if self.event is not None:
            raise InternalError("second event emission in one transaction")
        decl = self.interp.ast.event(stmt.event)
        assert decl is not None
        args = []
        for p, a in zip(decl.params, stmt.args):
            v = self.eval(a)
            if isinstance(p.ty, AddressType):
                args.append(self.interp.addrs.name(v))
            else:
                args.append(v)
        self.event = EventInstance(stmt.event, tuple(args))

    # -- expressions -----------------------------------------------------------------

    def eval_address(self, expr: Expr) -> int:
        if isinstance(expr, Call) and isinstance(expr.callee, Ident) and expr.callee.name == "address":
            arg = expr.args[0]
            if isinstance(arg, Ident) and arg.name == "this":
                return self.interp.addrs.contract_addr
            if isinstance(arg, IntLit):
                if arg.value == 0:
                    return self.interp.addrs.no_addr
                raise InternalError("non-zero address literal survived validation")
            return self.eval(arg)
        return self.eval(expr)

    def eval(self, expr: Expr):
        if isinstance(expr, IntLit):
            return expr.value & self.mask
        if isinstance(expr, BoolLit):
            return expr.value
        if isinstance(expr, Ident):
            name = expr.name
            if name in self.locals:
                return self.locals[name]
            if name in self.store:
                return self.store[name]
            if name == "now":
                return self.time
            raise InternalError(f"unknown identifier {name!r}")
        if isinstance(expr, Member):
            return self.eval_member(expr)
        if isinstance(expr, Index):
            return self.store[self.resolve_slot(expr)]
        if isinstance(expr, Binary):
            return self.eval_binary(expr)
        if isinstance(expr, Unary):
            v = self.eval(expr.operand)
            if expr.op == "!":
                return not v
            if expr.op == "-":
                return (-v) & self.mask
            raise InternalError(f"operator {expr.op} survived validation")
        if isinstance(expr, Conditional):
            return self.eval(expr.then) if self.eval(expr.cond) else self.eval(expr.els)
        if isinstance(expr, Call):
            return self.eval_call(expr)
        raise InternalError(f"cannot evaluate {type(expr).__name__}")

    def eval_member(self, expr: Member):
        obj = expr.obj
        if isinstance(obj, Ident):
            if obj.name == "msg" and expr.name == "sender":
                return self.sender
            if obj.name == "msg" and expr.name == "value":
                return self.value
            if obj.name == "block" and expr.name == "timestamp":
                return self.time
            if obj.name == "this" and expr.name == "balance":
                return self.balances[self.interp.addrs.contract_addr]
            enum_decl = self.interp.ast.enum(obj.name)
            if enum_decl is not None:
                return enum_decl.members.index(expr.name)
        if expr.name == "balance":
            return self.balances[self.eval_address(obj)]
        raise InternalError(f"member access .{expr.name} survived validation")

    def eval_binary(self, expr: Binary):
        op = expr.op
        if op == "&&":
            return bool(self.eval(expr.lhs)) and bool(self.eval(expr.rhs))
        if op == "||":
            return bool(self.eval(expr.lhs)) or bool(self.eval(expr.rhs))
        lhs = self.eval(expr.lhs)
        rhs = self.eval(expr.rhs)
        if op == "+":
            return (lhs + rhs) & self.mask
        if op == "-":
            return (lhs - rhs) & self.mask
        if op == "*":
            return (lhs * rhs) & self.mask
        if op == "/":
            if rhs == 0:
                raise SolRevert("division by zero")
            return lhs // rhs
        if op == "%":
            if rhs == 0:
                raise SolRevert("modulo by zero")
            return lhs % rhs
        if op == "==":
            return lhs == rhs
        if op == "!=":
            return lhs != rhs
        if op == "<":
            return lhs < rhs
        if op == "<=":
            return lhs <= rhs
        if op == ">":
            return lhs > rhs
        if op == ">=":
            return lhs >= rhs
        raise InternalError(f"operator {op} survived validation")

    def eval_call(self, expr: Call):
        callee = expr.callee
        if isinstance(callee, Ident):
            name = callee.name
            if name == "address":
                return self.eval_address(expr)
            if name == "uint":
                return self.eval(expr.args[0])
            if name in ("mulmod", "addmod"):
                a = self.eval(expr.args[0])
                b = self.eval(expr.args[1])
                m = self.eval(expr.args[2])
                if m == 0:
                    raise SolRevert(f"{name} modulus is zero")
                return ((a * b) if name == "mulmod" else (a + b)) % m
        raise InternalError("call expression survived inlining")


# ---------------------------------------------------------------------------
# Module-level operations matching the checker's needs


def exec_tx(state: SystemState, tx: TxParams, ast: ContractAst,
            cfg: ModelConfig, addrs: Optional[AddrDomain] = None) -> TxOutcome:
    return Interpreter(ast, cfg, addrs).exec_tx(state, tx)


def replay(ce: CounterExample, ast: ContractAst, cfg: ModelConfig,
           addrs: Optional[AddrDomain] = None) -> ReplayReport:
    return Interpreter(ast, cfg, addrs).replay(ce)


def enumerate_reachable(ast: ContractAst, cfg: ModelConfig, k: int,
                        initial: Optional[SystemState] = None,
                        max_time: Optional[int] = None) -> set[SystemState]:
    return Interpreter(ast, cfg).enumerate_reachable(k, initial, max_time)


def fuzz_trace(ast: ContractAst, cfg: ModelConfig, steps: int, seed: int,
               addrs: Optional[AddrDomain] = None) -> list[tuple[TxParams, TxOutcome]]:
    """Random committed-transaction trace for dynamic property checking."""
    interp = Interpreter(ast, cfg, addrs)
    rng = random.Random(seed)
    state = interp.initial_state(
        balances=tuple(rng.randrange(1 << cfg.int_width) if i not in
                       (interp.addrs.no_addr, interp.addrs.contract_addr) else 0
                       for i in range(len(interp.addrs)))
    )
    out: list[tuple[TxParams, TxOutcome]] = []
    fns = ast.public_functions()
    if not fns:
        return out
    time = state.blocktime
    for _ in range(steps):
        fn = rng.choice(fns)
        time += rng.randrange(1, 4)
        args = []
        for p in fn.params:
            if isinstance(p.ty, UintType):
                args.append(rng.randrange(1 << cfg.int_width))
            elif isinstance(p.ty, BoolType):
                args.append(rng.random() < 0.5)
            elif isinstance(p.ty, AddressType):
                args.append(rng.randrange(len(interp.addrs)))
            elif isinstance(p.ty, EnumType):
                args.append(rng.randrange(len(p.ty.members)))
        tx = TxParams(
            fn.name,
            rng.randrange(1 << cfg.int_width) if fn.payable else 0,
            rng.choice(list(interp.addrs.user_addrs)),
            time,
            tuple(args),
        )
        outcome = interp.exec_tx(state, tx)
        out.append((tx, outcome))
        if outcome.committed:
            state = outcome.state
    return out
