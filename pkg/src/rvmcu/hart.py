"""Architectural state of the single M-mode hart.

GPRs, PC, the machine-mode CSR file, trap entry/exit, the interrupt-take
decision and the LR/SC reservation live here.  The hart knows nothing about
the bus or devices; the machine loop wires them together.
"""

from typing import Optional

from .isa import M32

M64 = 0xFFFFFFFFFFFFFFFF

RESET_PC = 0x80000000

# mstatus bits (MPP is hardwired to machine mode)
MSTATUS_MIE = 1 << 3
MSTATUS_MPIE = 1 << 7
MSTATUS_MPP = 0x3 << 11

# mip/mie bits
MIP_MSIP = 1 << 3
MIP_MTIP = 1 << 7
MIP_MEIP = 1 << 11

# Exception cause codes
EXC_FETCH_MISALIGNED = 0
EXC_FETCH_FAULT = 1
EXC_ILLEGAL = 2
EXC_BREAKPOINT = 3
EXC_LOAD_MISALIGNED = 4
EXC_LOAD_FAULT = 5
EXC_STORE_MISALIGNED = 6
EXC_STORE_FAULT = 7
EXC_ECALL_M = 11

# Interrupt cause codes
IRQ_SOFTWARE = 3
IRQ_TIMER = 7
IRQ_EXTERNAL = 11

CSR_MSTATUS = 0x300
CSR_MISA = 0x301
CSR_MIE = 0x304
CSR_MTVEC = 0x305
CSR_MSCRATCH = 0x340
CSR_MEPC = 0x341
CSR_MCAUSE = 0x342
CSR_MTVAL = 0x343
CSR_MIP = 0x344
CSR_MCYCLE = 0xB00
CSR_MINSTRET = 0xB02
CSR_MCYCLEH = 0xB80
CSR_MINSTRETH = 0xB82
CSR_MVENDORID = 0xF11
CSR_MARCHID = 0xF12
CSR_MIMPID = 0xF13
CSR_MHARTID = 0xF14

MISA_VALUE = (1 << 30) | (1 << 12) | (1 << 8) | (1 << 0)  # RV32 + I + M + A

_IMPLEMENTED_CSRS = {
    CSR_MSTATUS, CSR_MISA, CSR_MIE, CSR_MTVEC, CSR_MSCRATCH, CSR_MEPC,
    CSR_MCAUSE, CSR_MTVAL, CSR_MIP, CSR_MCYCLE, CSR_MINSTRET, CSR_MCYCLEH,
    CSR_MINSTRETH, CSR_MVENDORID, CSR_MARCHID, CSR_MIMPID, CSR_MHARTID,
}


class Trap(Exception):
    """A guest trap cause: exception or interrupt, with its auxiliary value.

    Raised by execution paths and consumed by the machine loop, which calls
    trap_enter; never escapes to the host.
    """

    def __init__(self, code: int, tval: int = 0, interrupt: bool = False):
        super().__init__(code)
        self.code = code
        self.tval = tval & M32
        self.interrupt = interrupt

    @property
    def mcause_value(self) -> int:
        return (0x80000000 | self.code) if self.interrupt else self.code


class IllegalCsrAccess(Exception):
    """CSR access that must become an illegal-instruction trap."""


class CsrFile:
    """Machine-mode CSRs with WARL masking.

    Only M-mode CSRs exist; any other address is illegal.  mcycle/minstret
    live on the hart and are bridged by Hart.csr_access.
    """

    def __init__(self):
        self.reset()

    def reset(self):
        self.mstatus = MSTATUS_MPP  # MIE=0 out of reset, MPP fixed at M
        self.mie = 0
        self.mip = 0
        self.mtvec = RESET_PC  # direct mode
        self.mscratch = 0
        self.mepc = 0
        self.mcause = 0
        self.mtval = 0

    def read(self, addr: int) -> int:
        if addr == CSR_MSTATUS:
            return self.mstatus
        if addr == CSR_MISA:
            return MISA_VALUE
        if addr == CSR_MIE:
            return self.mie
        if addr == CSR_MTVEC:
            return self.mtvec
        if addr == CSR_MSCRATCH:
            return self.mscratch
        if addr == CSR_MEPC:
            return self.mepc
        if addr == CSR_MCAUSE:
            return self.mcause
        if addr == CSR_MTVAL:
            return self.mtval
        if addr == CSR_MIP:
            return self.mip
        if addr in (CSR_MVENDORID, CSR_MARCHID, CSR_MIMPID, CSR_MHARTID):
            return 0
        raise IllegalCsrAccess(addr)

    def write(self, addr: int, value: int):
        value &= M32
        if addr == CSR_MSTATUS:
            self.mstatus = MSTATUS_MPP | (value & (MSTATUS_MIE | MSTATUS_MPIE))
        elif addr == CSR_MISA:
            pass  # hardwired
        elif addr == CSR_MIE:
            self.mie = value & (MIP_MSIP | MIP_MTIP | MIP_MEIP)
        elif addr == CSR_MTVEC:
            mode = value & 0x3
            if mode > 1:
                mode = 0
            self.mtvec = (value & ~0x3 & M32) | mode
        elif addr == CSR_MSCRATCH:
            self.mscratch = value
        elif addr == CSR_MEPC:
            self.mepc = value & ~0x3 & M32  # IALIGN=32
        elif addr == CSR_MCAUSE:
            self.mcause = value
        elif addr == CSR_MTVAL:
            self.mtval = value
        elif addr == CSR_MIP:
            pass  # all implemented bits mirror the fabric; writes ignored
        else:
            raise IllegalCsrAccess(addr)


class Hart:
    """Register file, PC, CSRs, counters and the LR/SC reservation."""

    def __init__(self):
        self.x = [0] * 32
        self.pc = RESET_PC
        self.csr = CsrFile()
        self.reservation: Optional[int] = None
        self.mcycle = 0
        self.minstret = 0
        self.halted_reason: Optional[str] = None  # None | 'wfi' | 'debug'

    def reset(self, reset_cycles: int = 0):
        self.x = [0] * 32
        self.pc = RESET_PC
        self.csr.reset()
        self.reservation = None
        self.mcycle = reset_cycles
        self.minstret = 0
        self.halted_reason = None

    def set_x(self, idx: int, value: int):
        if idx:
            self.x[idx] = value & M32

    # -- CSR instructions ---------------------------------------------------

    def csr_access(self, op: str, addr: int, operand: int,
                   operand_is_zero_register: bool = False) -> int:
        """Perform one CSRRW/CSRRS/CSRRC access (op: 'rw' | 'rs' | 'rc').

        Returns the prior value.  Set/clear with a zero-register (or zero
        immediate) operand performs no write.  Raises IllegalCsrAccess for
        unimplemented addresses or writes into read-only address space.
        """
        if addr not in _IMPLEMENTED_CSRS:
            raise IllegalCsrAccess(addr)
        writes = op == "rw" or not operand_is_zero_register
        if writes and (addr >> 10) == 0x3:  # bits [11:10]=11: read-only space
            raise IllegalCsrAccess(addr)
        old = self._read_csr(addr)
        if writes:
            if op == "rw":
                new = operand
            elif op == "rs":
                new = old | operand
            else:
                new = old & ~operand & M32
            self._write_csr(addr, new)
        return old

    def _read_csr(self, addr: int) -> int:
        if addr == CSR_MCYCLE:
            return self.mcycle & M32
        if addr == CSR_MCYCLEH:
            return (self.mcycle >> 32) & M32
        if addr == CSR_MINSTRET:
            return self.minstret & M32
        if addr == CSR_MINSTRETH:
            return (self.minstret >> 32) & M32
        return self.csr.read(addr)

    def _write_csr(self, addr: int, value: int):
        value &= M32
        if addr == CSR_MCYCLE:
            self.mcycle = (self.mcycle & ~M32) | value
        elif addr == CSR_MCYCLEH:
            self.mcycle = (self.mcycle & M32) | (value << 32)
        elif addr == CSR_MINSTRET:
            self.minstret = (self.minstret & ~M32) | value
        elif addr == CSR_MINSTRETH:
            self.minstret = (self.minstret & M32) | (value << 32)
        else:
            self.csr.write(addr, value)

    # -- Traps and interrupts -----------------------------------------------

    def trap_enter(self, cause: Trap, faulting_pc: int):
        """Take a trap: stash state, mask interrupts, redirect to mtvec."""
        c = self.csr
        c.mepc = faulting_pc & ~0x3 & M32
        c.mcause = cause.mcause_value
        c.mtval = cause.tval
        mie = (c.mstatus >> 3) & 1
        c.mstatus = MSTATUS_MPP | (mie << 7)  # MPIE<-MIE, MIE<-0
        base = c.mtvec & ~0x3 & M32
        if cause.interrupt and (c.mtvec & 0x3) == 1:
            self.pc = (base + 4 * cause.code) & M32
        else:
            self.pc = base
        self.reservation = None

    def mret(self):
        c = self.csr
        mpie = (c.mstatus >> 7) & 1
        c.mstatus = MSTATUS_MPP | (mpie << 3) | MSTATUS_MPIE  # MIE<-MPIE, MPIE<-1
        self.pc = c.mepc

    def pending_interrupt(self) -> Optional[Trap]:
        """Highest-priority enabled pending interrupt, or None.

        Priority order is external > software > timer; nothing is taken
        while mstatus.MIE is clear.
        """
        c = self.csr
        if not c.mstatus & MSTATUS_MIE:
            return None
        pend = c.mip & c.mie
        if not pend:
            return None
        if pend & MIP_MEIP:
            return Trap(IRQ_EXTERNAL, interrupt=True)
        if pend & MIP_MSIP:
            return Trap(IRQ_SOFTWARE, interrupt=True)
        return Trap(IRQ_TIMER, interrupt=True)

    # -- LR/SC reservation ---------------------------------------------------

    def lr(self, addr: int):
        self.reservation = addr & ~0x3 & M32

    def sc(self, addr: int) -> bool:
        """True iff the reservation matches; always clears it."""
        ok = self.reservation == (addr & ~0x3 & M32) and self.reservation is not None
        self.reservation = None
        return ok

    def invalidate_reservation(self):
        self.reservation = None
