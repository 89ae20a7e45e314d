"""rvmcu: instruction-accurate, cycle-accounting simulator of a small
RV32IMA + Zba/Zbb/Zbc/Zbs microcontroller SoC."""

from .isa import Instruction, decode, disassemble
from .machine import Machine, StepOutcome, TraceRecord

__version__ = "0.1.0"

__all__ = ["Instruction", "decode", "disassemble", "Machine", "StepOutcome",
           "TraceRecord", "__version__"]
