"""System bus: routes physical loads/stores/fetches to RAM banks and
peripheral register windows over a flat 32-bit address space.

The memory layout (layout version 1):

    0x0200_0000  CLINT       (64 KiB window)
    0x0C00_0000  PLIC        (4 MiB window)
    0x4000_0000  GPIO-A      (256 B)
    0x4000_0100  GPIO-B
    0x4000_0200  GPIO-C
    0x4000_0300  GP-SPECIAL
    0x4000_0400  UART
    0x4000_0500  SPI
    0x8000_0000  RAM, 4 contiguous banks (32 KiB each by default)

Peripheral windows accept only 4-byte aligned word accesses; anything
narrower faults.  Instruction fetch is restricted to RAM.
"""

from typing import Callable, NamedTuple, Optional

from .isa import M32, to_signed

MAP_VERSION = 1

RAM_BASE = 0x80000000
RAM_BANKS = 4
DEFAULT_BANK_SIZE = 0x8000

CLINT_BASE = 0x02000000
CLINT_SIZE = 0x10000
PLIC_BASE = 0x0C000000
PLIC_SIZE = 0x00400000
GPIOA_BASE = 0x40000000
GPIOB_BASE = 0x40000100
GPIOC_BASE = 0x40000200
GPSPECIAL_BASE = 0x40000300
UART_BASE = 0x40000400
SPI_BASE = 0x40000500
PERIPH_WINDOW = 0x100


class BusFault(Exception):
    """Access hit no region, or the target device rejected it."""

    def __init__(self, addr: int, detail: str = "unmapped"):
        super().__init__(f"bus fault at 0x{addr & M32:08x}: {detail}")
        self.addr = addr & M32
        self.detail = detail


class Region(NamedTuple):
    base: int
    size: int
    name: str
    device: object  # None for RAM; else read_reg/write_reg provider


class AddressMap:
    """Validated, ordered list of non-overlapping regions."""

    def __init__(self, regions: list[Region]):
        for r in regions:
            if r.base & 0x3 or r.size & 0x3 or r.size <= 0:
                raise ValueError(f"region {r.name}: base/size must be 4-byte aligned")
            if r.base + r.size > 1 << 32:
                raise ValueError(f"region {r.name}: wraps the address space")
        ordered = sorted(regions, key=lambda r: r.base)
        for a, b in zip(ordered, ordered[1:]):
            if a.base + a.size > b.base:
                raise ValueError(f"regions {a.name} and {b.name} overlap")
        self.regions = ordered

    def find(self, addr: int) -> Optional[Region]:
        for r in self.regions:
            if r.base <= addr < r.base + r.size:
                return r
        return None


_AMO_OPS: dict[str, Callable[[int, int], int]] = {
    "amoswap.w": lambda old, b: b,
    "amoadd.w": lambda old, b: (old + b) & M32,
    "amoxor.w": lambda old, b: old ^ b,
    "amoand.w": lambda old, b: old & b,
    "amoor.w": lambda old, b: old | b,
    "amomin.w": lambda old, b: old if to_signed(old) <= to_signed(b) else b,
    "amomax.w": lambda old, b: old if to_signed(old) >= to_signed(b) else b,
    "amominu.w": lambda old, b: min(old, b),
    "amomaxu.w": lambda old, b: max(old, b),
}


class SystemBus:
    """Word/half/byte access routing with a fast path for RAM.

    RAM is one contiguous zero-initialized bytearray covering all banks, so
    accesses crossing a bank boundary behave like any other access.
    """

    def __init__(self, bank_size: int = DEFAULT_BANK_SIZE,
                 devices: Optional[list[tuple[int, int, str, object]]] = None):
        self.bank_size = bank_size
        self.ram_base = RAM_BASE
        self.ram_size = bank_size * RAM_BANKS
        self.ram = bytearray(self.ram_size)
        regions = [Region(RAM_BASE, self.ram_size, "RAM", None)]
        for base, size, name, dev in devices or []:
            regions.append(Region(base, size, name, dev))
        self.map = AddressMap(regions)

    def reset_ram(self):
        for i in range(len(self.ram)):
            self.ram[i] = 0

    # -- core access paths ----------------------------------------------------

    def read(self, addr: int, width: int) -> int:
        """Zero-extended little-endian read; device reads may have side
        effects (UART RXDATA pop, PLIC claim)."""
        off = addr - self.ram_base
        if 0 <= off <= self.ram_size - width:
            return int.from_bytes(self.ram[off:off + width], "little")
        region = self.map.find(addr)
        if region is None or region.device is None:
            raise BusFault(addr)
        if width != 4 or addr & 0x3:
            raise BusFault(addr, "peripherals accept word access only")
        return region.device.read_reg(addr - region.base) & M32

    def write(self, addr: int, width: int, value: int):
        off = addr - self.ram_base
        if 0 <= off <= self.ram_size - width:
            self.ram[off:off + width] = (value & ((1 << (8 * width)) - 1)) \
                .to_bytes(width, "little")
            return
        region = self.map.find(addr)
        if region is None or region.device is None:
            raise BusFault(addr)
        if width != 4 or addr & 0x3:
            raise BusFault(addr, "peripherals accept word access only")
        region.device.write_reg(addr - region.base, value & M32)

    def fetch_word(self, addr: int) -> int:
        """Instruction fetch; RAM only."""
        off = addr - self.ram_base
        if 0 <= off <= self.ram_size - 4:
            return int.from_bytes(self.ram[off:off + 4], "little")
        raise BusFault(addr, "fetch outside RAM")

    def amo(self, addr: int, mnemonic: str, operand: int) -> tuple[int, int]:
        """Atomic read-modify-write on RAM; returns (old, new).

        AMOs targeting peripheral space fault: read side effects and
        register write-one-to-clear semantics don't compose with RMW.
        """
        off = addr - self.ram_base
        if not (0 <= off <= self.ram_size - 4):
            raise BusFault(addr, "AMO outside RAM")
        old = int.from_bytes(self.ram[off:off + 4], "little")
        new = _AMO_OPS[mnemonic](old, operand & M32)
        self.ram[off:off + 4] = new.to_bytes(4, "little")
        return old, new

    def in_ram(self, addr: int, length: int = 1) -> bool:
        off = addr - self.ram_base
        return 0 <= off <= self.ram_size - length

    def load_blob(self, addr: int, blob: bytes):
        off = addr - self.ram_base
        self.ram[off:off + len(blob)] = blob

    # -- documentation --------------------------------------------------------

    def map_markdown(self) -> str:
        """Memory map as a markdown table, including per-device registers."""
        lines = [
            f"# Memory map (layout version {MAP_VERSION})",
            "",
            "| Base | Size | Region |",
            "|------|------|--------|",
        ]
        for r in self.map.regions:
            lines.append(f"| 0x{r.base:08X} | 0x{r.size:X} | {r.name} |")
        for r in self.map.regions:
            regs = getattr(r.device, "REGISTERS", None)
            if not regs:
                continue
            lines += ["", f"## {r.name} registers", "",
                      "| Offset | Register | Access |", "|--------|----------|--------|"]
            for off, name, access in regs:
                lines.append(f"| +0x{off:04X} | {name} | {access} |")
        lines += [
            "",
            f"RAM: {RAM_BANKS} banks x 0x{self.bank_size:X} bytes, contiguous "
            f"from 0x{RAM_BASE:08X}.",
            "Peripheral windows accept 4-byte aligned word accesses only.",
        ]
        return "\n".join(lines) + "\n"
