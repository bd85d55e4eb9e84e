"""Semantic universe of the transition system.

A system state pairs the contract's flattened storage with the alive flag,
the last transaction's event, the finite-domain address balances and the
blocktime of the last processed block.  Mapping variables occupy one slot per
address-domain element, static arrays one slot per index.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .frontend.nodes import (
    AddressType, ArrayType, BoolType, ContractAst, EnumType, MappingType,
    SolType, UintType,
)


@dataclass(frozen=True)
class ModelConfig:
    int_width: int = 16
    addr_count: int = 3  # user addresses, excluding noAddr / contractAddr
    max_trace: int = 12  # maximum number of states in a trace (incl. the initial one)
    min_trace: int = 0
    timeout: float = 600.0

    def validate(self) -> None:
        if not 1 <= self.int_width <= 256:
            raise ValueError(f"int_width must be in 1..256, got {self.int_width}")
        if self.addr_count < 1:
            raise ValueError("addr_count must be at least 1")
        if self.min_trace > self.max_trace:
            raise ValueError("min_trace must not exceed max_trace")


@dataclass(frozen=True)
class AddrDomain:
    """Ordered finite address set {noAddr, addr_1..addr_n, contractAddr}."""

    elements: tuple[str, ...]

    @property
    def no_addr(self) -> int:
        return 0

    @property
    def contract_addr(self) -> int:
        return len(self.elements) - 1

    @property
    def user_addrs(self) -> range:
        return range(1, len(self.elements) - 1)

    def name(self, index: int) -> str:
        return self.elements[index]

    def index(self, name: str) -> int:
        return self.elements.index(name)

    def __len__(self) -> int:
        return len(self.elements)


def build_addr_domain(cfg: ModelConfig) -> AddrDomain:
    cfg.validate()
    names = ("noAddr",) + tuple(f"addr{i}" for i in range(1, cfg.addr_count + 1)) + ("contractAddr",)
    return AddrDomain(names)


@dataclass(frozen=True)
class Slot:
    slot_id: str     # e.g. "balance[addr1]", "isVoted[0][addr2]", "price"
    var_name: str    # declaring state variable
    ty: SolType      # scalar type of the slot (uint / bool / address / enum)


def state_slots(ast: ContractAst, addrs: AddrDomain) -> list[Slot]:
    """Deterministic storage flattening, declaration order then index/address order."""
    slots: list[Slot] = []

    def flatten(prefix: str, var_name: str, ty: SolType) -> None:
        if isinstance(ty, MappingType):
            for a in addrs.elements:
                flatten(f"{prefix}[{a}]", var_name, ty.value)
        elif isinstance(ty, ArrayType):
            for i in range(ty.length):
                flatten(f"{prefix}[{i}]", var_name, ty.elem)
        elif isinstance(ty, (UintType, BoolType, AddressType, EnumType)):
            slots.append(Slot(prefix, var_name, ty))
        else:
            raise ValueError(f"cannot flatten type {ty} (contract not subset-validated?)")

    for var in ast.state_vars:
        flatten(var.name, var.name, var.ty)
    return slots


@dataclass(frozen=True)
class EventInstance:
    tag: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return f"{self.tag}()" if self.tag != "NoEvent" else "NoEvent"
        return f"{self.tag}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class SystemState:
    """Concrete state: slot values aligned with state_slots order."""

    vars: tuple
    balances: tuple  # aligned with AddrDomain.elements
    blocktime: int
    alive: bool = True
    eventlog: Optional[EventInstance] = None

    def with_(self, **kw) -> "SystemState":
        return replace(self, **kw)


@dataclass(frozen=True)
class TxParams:
    fname: str
    value: int
    sender: int  # AddrDomain index
    time: int
    args: tuple = ()


def zero_value(ty: SolType, addrs: AddrDomain):
    if isinstance(ty, UintType):
        return 0
    if isinstance(ty, BoolType):
        return False
    if isinstance(ty, AddressType):
        return addrs.no_addr
    if isinstance(ty, EnumType):
        return 0
    raise ValueError(f"no zero value for {ty}")


def initial_concrete_state(
    ast: ContractAst,
    cfg: ModelConfig,
    addrs: AddrDomain,
    balances: Optional[tuple] = None,
    blocktime: int = 0,
) -> SystemState:
    """Type-zero state before constructor effects; b0/t0 as given."""
    slots = state_slots(ast, addrs)
    if balances is None:
        balances = tuple(0 for _ in addrs.elements)
    return SystemState(
        vars=tuple(zero_value(s.ty, addrs) for s in slots),
        balances=balances,
        blocktime=blocktime,
        alive=True,
        eventlog=None,
    )
