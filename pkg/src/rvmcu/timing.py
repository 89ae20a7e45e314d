"""Cycle accounting for the 3-stage (fetch, decode/execute, writeback)
pipeline model.

All latency constants are model assumptions, kept in one table and
overridable through the machine config:

    base CPI 1, +flush on any taken control transfer (branch, jump, mret,
    trap redirect), +load_use when an instruction consumes the previous
    load's destination, +mul / +div extra for the iterative units, and a
    one-time pipeline fill charge at reset.

Whether the modeled core stalls on load-use or forwards within the cycle
is unknown; the 1-cycle stall here is an assumption and is flagged in the
report header.
"""

from dataclasses import dataclass, field, asdict
from typing import Iterable, Optional

from .isa import (
    KIND_ALU_RI, KIND_ALU_RR, KIND_AMO, KIND_AUIPC, KIND_BRANCH, KIND_CSR,
    KIND_FENCE, KIND_JAL, KIND_JALR, KIND_LOAD, KIND_LR, KIND_LUI, KIND_SC,
    KIND_STORE, KIND_SYSTEM, M_OPS,
)

CLASS_ALU = "alu"
CLASS_LOAD = "load"
CLASS_STORE = "store"
CLASS_MUL = "mul"
CLASS_DIV = "div"
CLASS_BRANCH = "branch"
CLASS_JUMP = "jump"
CLASS_SYSTEM = "system"
CLASS_AMO = "amo"

_KIND_CLASS = {
    KIND_ALU_RR: CLASS_ALU, KIND_ALU_RI: CLASS_ALU, KIND_LUI: CLASS_ALU,
    KIND_AUIPC: CLASS_ALU, KIND_JAL: CLASS_JUMP, KIND_JALR: CLASS_JUMP,
    KIND_BRANCH: CLASS_BRANCH, KIND_LOAD: CLASS_LOAD, KIND_STORE: CLASS_STORE,
    KIND_AMO: CLASS_AMO, KIND_LR: CLASS_AMO, KIND_SC: CLASS_AMO,
    KIND_CSR: CLASS_SYSTEM, KIND_SYSTEM: CLASS_SYSTEM, KIND_FENCE: CLASS_SYSTEM,
}
_MUL_SET = {"mul", "mulh", "mulhsu", "mulhu"}
_DIV_SET = M_OPS - _MUL_SET


def classify(mnemonic: str, kind: str) -> str:
    """Timing class of a mnemonic; total over the instruction universe."""
    if mnemonic in _MUL_SET:
        return CLASS_MUL
    if mnemonic in _DIV_SET:
        return CLASS_DIV
    return _KIND_CLASS[kind]


@dataclass
class TimingParams:
    flush: int = 1      # fetch bubble on taken control transfer
    load_use: int = 1   # writeback-stage load result stalls decode once
    mul: int = 2        # extra cycles for the multiply unit
    div: int = 31       # extra cycles for the iterative divider
    fill: int = 2       # one-time pipeline fill at reset

    def validate(self):
        for name, v in asdict(self).items():
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"timing constant {name} must be a non-negative int")


@dataclass
class TimingContext:
    """Inputs for one instruction's cycle cost."""

    instr_class: str
    branch_taken: bool = False
    prev_was_load: bool = False
    prev_rd: int = 0
    src_regs: tuple = ()


def charge(params: TimingParams, instr_class: str, taken: bool,
           prev_was_load: bool, prev_rd: int, src1: int, src2: int):
    """Cost of one retired instruction.

    Returns (total, flush, load_use, unit_extra); the pieces are what the
    report accumulates so the accounting identity stays exact.
    """
    flush = params.flush if taken else 0
    load_use = 0
    if prev_was_load and prev_rd and (prev_rd == src1 or prev_rd == src2):
        load_use = params.load_use
    if instr_class == CLASS_MUL:
        extra = params.mul
    elif instr_class == CLASS_DIV:
        extra = params.div
    else:
        extra = 0
    return 1 + flush + load_use + extra, flush, load_use, extra


def cycle_cost(ctx: TimingContext, params: Optional[TimingParams] = None) -> int:
    params = params or TimingParams()
    s1 = ctx.src_regs[0] if len(ctx.src_regs) > 0 else 0
    s2 = ctx.src_regs[1] if len(ctx.src_regs) > 1 else 0
    return charge(params, ctx.instr_class, ctx.branch_taken,
                  ctx.prev_was_load, ctx.prev_rd, s1, s2)[0]


def program_cycles(contexts: Iterable[TimingContext],
                   params: Optional[TimingParams] = None) -> int:
    """Total cycles for a pre-chained context stream: fill + per-instruction
    charges.  An empty stream costs just the fill."""
    params = params or TimingParams()
    return params.fill + sum(cycle_cost(c, params) for c in contexts)


@dataclass
class CycleReport:
    """Where every simulated cycle went.

    Invariant: total == fill + base + sum of the stall buckets, where base
    is one cycle per retired instruction plus one per exception event.
    """

    fill: int = 0
    retired: dict = field(default_factory=dict)
    exceptions: int = 0
    interrupts: int = 0
    stalls: dict = field(default_factory=lambda: {
        "load_use": 0, "control_flow": 0, "mul": 0, "div": 0, "wfi_idle": 0,
    })
    total: int = 0

    def start(self, fill: int):
        self.fill = fill
        self.total = fill

    def retire(self, instr_class: str, flush: int, load_use: int, extra: int):
        self.retired[instr_class] = self.retired.get(instr_class, 0) + 1
        self.stalls["control_flow"] += flush
        self.stalls["load_use"] += load_use
        if instr_class == CLASS_MUL:
            self.stalls["mul"] += extra
        elif instr_class == CLASS_DIV:
            self.stalls["div"] += extra
        self.total += 1 + flush + load_use + extra

    def exception(self, flush: int):
        self.exceptions += 1
        self.stalls["control_flow"] += flush
        self.total += 1 + flush

    def interrupt(self, flush: int):
        self.interrupts += 1
        self.stalls["control_flow"] += flush
        self.total += flush

    def wfi_idle(self, cycles: int):
        self.stalls["wfi_idle"] += cycles
        self.total += cycles

    @property
    def base_cycles(self) -> int:
        return sum(self.retired.values()) + self.exceptions

    def reconciles(self) -> bool:
        return self.total == self.fill + self.base_cycles + sum(self.stalls.values())

    def to_kv(self, instret: int) -> str:
        """Exit report: '# ' comment header plus key=value lines."""
        lines = [
            "# 3-stage pipeline model; load-use stall of "
            "1 cycle is an assumption (no forwarding data available)",
            f"cycles={self.total}",
            f"instret={instret}",
            f"fill={self.fill}",
            f"exceptions={self.exceptions}",
            f"interrupts={self.interrupts}",
        ]
        for k in sorted(self.stalls):
            lines.append(f"stalls.{k}={self.stalls[k]}")
        for k in sorted(self.retired):
            lines.append(f"retired.{k}={self.retired[k]}")
        return "\n".join(lines) + "\n"

    def snapshot_state(self) -> dict:
        return {
            "fill": self.fill, "retired": dict(self.retired),
            "exceptions": self.exceptions, "interrupts": self.interrupts,
            "stalls": dict(self.stalls), "total": self.total,
        }

    def restore_state(self, state: dict):
        self.fill = state["fill"]
        self.retired = dict(state["retired"])
        self.exceptions = state["exceptions"]
        self.interrupts = state["interrupts"]
        self.stalls = dict(state["stalls"])
        self.total = state["total"]
