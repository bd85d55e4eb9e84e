"""Counter-example traces: decoded solver models, JSON round-trip, reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .model import AddrDomain, EventInstance, Slot, SystemState


@dataclass(frozen=True)
class CEStep:
    """One transaction record; step 0 carries the initial state and no call."""

    fname: Optional[str]
    value: int
    sender: Optional[int]
    time: Optional[int]
    args: tuple
    event: Optional[EventInstance]
    state: SystemState


@dataclass
class CounterExample:
    property_name: str
    kind: str  # invariant | invariant-step | trace | chain | call
    steps: list[CEStep]
    witnesses: Optional[dict] = None  # {'m':..,'n':..,'q':..}
    focus: Optional[dict] = None      # e.g. hypothetical call tuple, violating address
    note: str = ""

    def events(self) -> list[str]:
        return [s.event.tag if s.event is not None else "NoEvent" for s in self.steps]

    # -- rendering ---------------------------------------------------------

    def transcript(self, addrs: AddrDomain) -> str:
        """Numbered event transcript, one line per state."""
        lines = []
        for i, step in enumerate(self.steps):
            if step.event is None:
                lines.append(f"{i}. NoEvent")
            else:
                args = ", ".join(_show_value(a, addrs) for a in step.event.args)
                lines.append(f"{i}. {step.event.tag}({args})")
        if self.witnesses:
            pairs = ", ".join(f"{k} = {v}" for k, v in sorted(self.witnesses.items()))
            lines.append(f"witnesses: {pairs}")
        if self.focus:
            pairs = ", ".join(f"{k} = {v}" for k, v in sorted(self.focus.items()))
            lines.append(f"focus: {pairs}")
        if self.note:
            lines.append(self.note)
        return "\n".join(lines)

    def detailed(self, addrs: AddrDomain, slots: list[Slot]) -> str:
        lines = []
        for i, step in enumerate(self.steps):
            if step.fname is None:
                lines.append(f"state {i}: initial")
            else:
                args = ", ".join(_show_value(a, addrs) for a in step.args)
                sender = addrs.name(step.sender) if step.sender is not None else "?"
                lines.append(
                    f"state {i}: {step.fname}({args}) from {sender}"
                    f" value={step.value} time={step.time}"
                )
            ev = "NoEvent" if step.event is None else str(step.event)
            lines.append(f"  event: {ev}")
            nonzero = [
                f"{slot.slot_id}={_show_value(v, addrs) if _is_addr_slot(slot) else v}"
                for slot, v in zip(slots, step.state.vars)
                if v not in (0, False)
            ]
            if nonzero:
                lines.append("  state: " + ", ".join(nonzero))
            bals = ", ".join(
                f"{addrs.name(i_)}={b}" for i_, b in enumerate(step.state.balances) if b
            )
            lines.append(f"  balances: {bals or '(all zero)'}"
                         f"  blocktime={step.state.blocktime} alive={step.state.alive}")
        return "\n".join(lines)

    # -- JSON ------------------------------------------------------------------

    def to_json(self, addrs: AddrDomain, slots: list[Slot]) -> dict:
        def state_json(st: SystemState) -> dict:
            return {
                "vars": {s.slot_id: _json_value(v) for s, v in zip(slots, st.vars)},
                "balances": {addrs.name(i): b for i, b in enumerate(st.balances)},
                "blocktime": st.blocktime,
                "alive": st.alive,
            }

        steps = []
        for step in self.steps:
            steps.append({
                "function": step.fname,
                "value": step.value,
                "sender": addrs.name(step.sender) if step.sender is not None else None,
                "time": step.time,
                "args": [_json_value(a) for a in step.args],
                "event": None if step.event is None else {
                    "tag": step.event.tag,
                    "args": [_json_value(a) for a in step.event.args],
                },
                "state": state_json(step.state),
            })
        out = {
            "property": self.property_name,
            "kind": self.kind,
            "steps": steps,
        }
        if self.witnesses:
            out["witnesses"] = self.witnesses
        if self.focus:
            out["focus"] = self.focus
        if self.note:
            out["note"] = self.note
        return out

    @staticmethod
    def from_json(data: dict, addrs: AddrDomain, slots: list[Slot]) -> "CounterExample":
        def parse_state(d: dict) -> SystemState:
            return SystemState(
                vars=tuple(d["vars"][s.slot_id] for s in slots),
                balances=tuple(d["balances"][addrs.name(i)] for i in range(len(addrs))),
                blocktime=d["blocktime"],
                alive=d["alive"],
            )

        steps = []
        for sd in data["steps"]:
            event = None
            if sd.get("event") is not None:
                event = EventInstance(sd["event"]["tag"], tuple(sd["event"]["args"]))
            steps.append(CEStep(
                fname=sd.get("function"),
                value=sd.get("value", 0),
                sender=addrs.index(sd["sender"]) if sd.get("sender") is not None else None,
                time=sd.get("time"),
                args=tuple(sd.get("args", ())),
                event=event,
                state=parse_state(sd["state"]),
            ))
        return CounterExample(
            property_name=data.get("property", "?"),
            kind=data.get("kind", "?"),
            steps=steps,
            witnesses=data.get("witnesses"),
            focus=data.get("focus"),
            note=data.get("note", ""),
        )


def _is_addr_slot(slot: Slot) -> bool:
    from .frontend.nodes import AddressType

    return isinstance(slot.ty, AddressType)


def _show_value(v, addrs: AddrDomain) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    return str(v)


def _json_value(v):
    return v


@dataclass
class ReplayStepReport:
    index: int
    executed: bool
    event_match: bool
    state_match: bool
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.executed and self.event_match and self.state_match


@dataclass
class ReplayReport:
    steps: list[ReplayStepReport] = field(default_factory=list)
    note: str = ""

    @property
    def confirmed(self) -> bool:
        return all(s.ok for s in self.steps)

    def __str__(self) -> str:
        lines = []
        for s in self.steps:
            status = "ok" if s.ok else f"MISMATCH ({s.detail})"
            lines.append(f"step {s.index}: {status}")
        lines.append("replay: " + ("Confirmed" if self.confirmed else "Mismatch"))
        if self.note:
            lines.append(self.note)
        return "\n".join(lines)
