"""Firmware loading: ELF32 executables and flat binary images.

The ELF path is a minimal little-endian ELF32 program-header walk; only
PT_LOAD segments matter and every loaded byte must land in mapped RAM.
"""

import struct

from .bus import SystemBus

_EM_RISCV = 243
_PT_LOAD = 1


class LoadError(Exception):
    """Firmware cannot be placed; carries the offending address if any."""

    def __init__(self, message: str, addr=None):
        if addr is not None:
            message = f"{message} (address 0x{addr:08x})"
        super().__init__(message)
        self.addr = addr


def load_flat(bus: SystemBus, image: bytes, base: int) -> int:
    """Copy a flat image at `base`; the entry point is the base itself."""
    if base & 0x3:
        raise LoadError("flat image base must be 4-byte aligned", base)
    if not bus.in_ram(base):
        raise LoadError("flat image base outside RAM", base)
    if not bus.in_ram(base, max(len(image), 1)):
        raise LoadError("flat image does not fit in RAM", base + len(image) - 1)
    bus.load_blob(base, image)
    return base


def load_elf(bus: SystemBus, image: bytes) -> int:
    """Load all PT_LOAD segments of a 32-bit little-endian RISC-V ELF.

    Returns the entry PC.  BSS tails (p_memsz > p_filesz) are zero-filled.
    """
    if len(image) < 52 or image[:4] != b"\x7fELF":
        raise LoadError("not an ELF file")
    ei_class, ei_data = image[4], image[5]
    if ei_class != 1:
        raise LoadError("ELF is not 32-bit")
    if ei_data != 1:
        raise LoadError("ELF is not little-endian")
    e_type, e_machine = struct.unpack_from("<HH", image, 16)
    if e_machine != _EM_RISCV:
        raise LoadError(f"ELF machine {e_machine} is not RISC-V")
    if e_type != 2:
        raise LoadError("ELF is not an executable")
    e_entry, e_phoff = struct.unpack_from("<II", image, 24)
    e_phentsize, e_phnum = struct.unpack_from("<HH", image, 42)
    if e_phentsize < 32 or e_phoff + e_phnum * e_phentsize > len(image):
        raise LoadError("program header table out of bounds")
    for i in range(e_phnum):
        off = e_phoff + i * e_phentsize
        p_type, p_offset, p_vaddr, _p_paddr, p_filesz, p_memsz = \
            struct.unpack_from("<IIIIII", image, off)
        if p_type != _PT_LOAD or p_memsz == 0:
            continue
        if p_offset + p_filesz > len(image):
            raise LoadError("segment data out of file bounds", p_vaddr)
        if not bus.in_ram(p_vaddr, p_memsz):
            raise LoadError("segment outside RAM", p_vaddr)
        bus.load_blob(p_vaddr, image[p_offset:p_offset + p_filesz])
        if p_memsz > p_filesz:
            bus.load_blob(p_vaddr + p_filesz, bytes(p_memsz - p_filesz))
    return e_entry
