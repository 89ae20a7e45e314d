"""Interrupt fabric: CLINT (software + timer) and a level-sensitive PLIC.

PLIC source wiring is fixed: 1=GPIO-A, 2=GPIO-B, 3=GPIO-C, 4=UART, 5=SPI.
Source 0 is reserved and never claimable.  Priorities and the threshold are
3 bits wide; priority 0 never interrupts; ties break to the lowest id.
"""

from .isa import M32
from .hart import MIP_MSIP, MIP_MTIP, MIP_MEIP

M64 = 0xFFFFFFFFFFFFFFFF

PLIC_SRC_GPIOA = 1
PLIC_SRC_GPIOB = 2
PLIC_SRC_GPIOC = 3
PLIC_SRC_UART = 4
PLIC_SRC_SPI = 5
PLIC_NSOURCES = 5

_CLINT_MSIP = 0x0
_CLINT_MTIMECMP_LO = 0x4000
_CLINT_MTIMECMP_HI = 0x4004
_CLINT_MTIME_LO = 0xBFF8
_CLINT_MTIME_HI = 0xBFFC

_PLIC_PENDING = 0x1000
_PLIC_ENABLE = 0x2000
_PLIC_THRESHOLD = 0x200000
_PLIC_CLAIM = 0x200004


class Clint:
    """Core-local interruptor: msip bit plus the mtime/mtimecmp comparator.

    mtime advances one count per core cycle (no prescaler).  mtimecmp resets
    to all-ones so the comparator is quiet until firmware arms it.
    """

    REGISTERS = [
        (_CLINT_MSIP, "MSIP", "RW"),
        (_CLINT_MTIMECMP_LO, "MTIMECMP (low)", "RW"),
        (_CLINT_MTIMECMP_HI, "MTIMECMP (high)", "RW"),
        (_CLINT_MTIME_LO, "MTIME (low)", "RW"),
        (_CLINT_MTIME_HI, "MTIME (high)", "RW"),
    ]

    def __init__(self):
        self.reset()

    def reset(self):
        self.msip = 0
        self.mtime = 0
        self.mtimecmp = M64

    def tick(self, cycles: int):
        self.mtime = (self.mtime + cycles) & M64

    @property
    def mtip(self) -> bool:
        return self.mtime >= self.mtimecmp

    def read_reg(self, off: int) -> int:
        if off == _CLINT_MSIP:
            return self.msip
        if off == _CLINT_MTIMECMP_LO:
            return self.mtimecmp & M32
        if off == _CLINT_MTIMECMP_HI:
            return self.mtimecmp >> 32
        if off == _CLINT_MTIME_LO:
            return self.mtime & M32
        if off == _CLINT_MTIME_HI:
            return self.mtime >> 32
        return 0

    def write_reg(self, off: int, value: int):
        if off == _CLINT_MSIP:
            self.msip = value & 1
        elif off == _CLINT_MTIMECMP_LO:
            self.mtimecmp = (self.mtimecmp & ~M32 & M64) | value
        elif off == _CLINT_MTIMECMP_HI:
            self.mtimecmp = (self.mtimecmp & M32) | (value << 32)
        elif off == _CLINT_MTIME_LO:
            self.mtime = (self.mtime & ~M32 & M64) | value
        elif off == _CLINT_MTIME_HI:
            self.mtime = (self.mtime & M32) | (value << 32)


class Plic:
    """Level-sensitive claim/complete gateway over 5 sources.

    A source is pending while its level is asserted and it is not claimed.
    It qualifies for claim when additionally enabled and its priority is
    strictly above the threshold.  Completing a source whose level is still
    asserted re-pends it immediately.
    """

    REGISTERS = [
        (0x4, "PRIORITY[1] (GPIO-A)", "RW"),
        (0x8, "PRIORITY[2] (GPIO-B)", "RW"),
        (0xC, "PRIORITY[3] (GPIO-C)", "RW"),
        (0x10, "PRIORITY[4] (UART)", "RW"),
        (0x14, "PRIORITY[5] (SPI)", "RW"),
        (_PLIC_PENDING, "PENDING", "RO"),
        (_PLIC_ENABLE, "ENABLE", "RW"),
        (_PLIC_THRESHOLD, "THRESHOLD", "RW"),
        (_PLIC_CLAIM, "CLAIM / COMPLETE", "RW"),
    ]

    def __init__(self):
        self.reset()

    def reset(self):
        self.priority = [0] * (PLIC_NSOURCES + 1)
        self.enable = 0
        self.threshold = 0
        self.levels = 0  # bit per source id
        self.claimed: set[int] = set()

    def set_level(self, src: int, asserted: bool):
        if asserted:
            self.levels |= 1 << src
        else:
            self.levels &= ~(1 << src)

    def pending_mask(self) -> int:
        mask = 0
        for s in range(1, PLIC_NSOURCES + 1):
            if self.levels & (1 << s) and s not in self.claimed:
                mask |= 1 << s
        return mask

    def _best(self) -> int:
        best, best_prio = 0, 0
        for s in range(1, PLIC_NSOURCES + 1):
            if (self.levels & (1 << s) and s not in self.claimed
                    and self.enable & (1 << s)
                    and self.priority[s] > self.threshold
                    and self.priority[s] > best_prio):
                best, best_prio = s, self.priority[s]
        return best

    def claim(self) -> int:
        """Claim the best qualifying source; 0 when nothing qualifies."""
        src = self._best()
        if src:
            self.claimed.add(src)
        return src

    def complete(self, src: int):
        """Release a claimed source; no-op for unclaimed ids."""
        self.claimed.discard(src)

    @property
    def meip(self) -> bool:
        return self._best() != 0

    def read_reg(self, off: int) -> int:
        if 0 <= off <= 4 * PLIC_NSOURCES and off & 0x3 == 0:
            return self.priority[off >> 2]
        if off == _PLIC_PENDING:
            return self.pending_mask()
        if off == _PLIC_ENABLE:
            return self.enable
        if off == _PLIC_THRESHOLD:
            return self.threshold
        if off == _PLIC_CLAIM:
            return self.claim()
        return 0

    def write_reg(self, off: int, value: int):
        if 4 <= off <= 4 * PLIC_NSOURCES and off & 0x3 == 0:
            self.priority[off >> 2] = value & 0x7
        elif off == _PLIC_ENABLE:
            self.enable = value & ((1 << (PLIC_NSOURCES + 1)) - 2)  # bit 0 reserved
        elif off == _PLIC_THRESHOLD:
            self.threshold = value & 0x7
        elif off == _PLIC_CLAIM:
            self.complete(value)


def fabric_mip_view(clint: Clint, plic: Plic) -> int:
    """mip bits as the fabric currently drives them."""
    mip = 0
    if clint.msip:
        mip |= MIP_MSIP
    if clint.mtip:
        mip |= MIP_MTIP
    if plic.meip:
        mip |= MIP_MEIP
    return mip
