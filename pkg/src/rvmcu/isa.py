"""Instruction decoding and pure operand semantics.

Covers the full RV32I base, M (multiply/divide), A (decode only; the memory
side lives on the bus), and the Zba/Zbb/Zbc/Zbs bit-manipulation subsets.
No C, F/D or V encodings: those decode to illegal.

All values are unsigned 32-bit Python ints (0 .. 2**32-1).  Immediates are
stored sign-extended into that unsigned representation, so modular adds give
the architectural result directly.
"""

from typing import Callable, NamedTuple, Optional

M32 = 0xFFFFFFFF


def to_signed(v: int) -> int:
    """Reinterpret an unsigned 32-bit value as two's-complement signed."""
    return v - 0x100000000 if v & 0x80000000 else v


def sign_extend(value: int, bits: int) -> int:
    """Sign-extend a `bits`-wide field to 32 bits (unsigned representation)."""
    if value & (1 << (bits - 1)):
        return (value | (M32 << bits)) & M32
    return value


# Dispatch groups used by the machine loop.  ALU_RR reads two registers,
# ALU_RI reads rs1 and the decoded immediate (shift amounts and the unary
# Zbb ops also land here with the unused operand ignored).
KIND_ALU_RR = "alu_rr"
KIND_ALU_RI = "alu_ri"
KIND_LUI = "lui"
KIND_AUIPC = "auipc"
KIND_JAL = "jal"
KIND_JALR = "jalr"
KIND_BRANCH = "branch"
KIND_LOAD = "load"
KIND_STORE = "store"
KIND_AMO = "amo"
KIND_LR = "lr"
KIND_SC = "sc"
KIND_CSR = "csr"
KIND_SYSTEM = "system"
KIND_FENCE = "fence"


class Instruction(NamedTuple):
    """One decoded 32-bit instruction.

    `imm` is the sign-extended immediate as unsigned 32-bit (shift amounts
    and CSR addresses are stored zero-extended).  For CSR immediate forms
    the 5-bit uimm sits in `rs1`.  `src1`/`src2` are the register indices
    the instruction actually reads (0 when a slot is unused); the timing
    model keys load-use stalls off them.
    """

    mnemonic: str
    rd: int
    rs1: int
    rs2: int
    imm: int
    raw: int
    kind: str
    src1: int
    src2: int


class AluResult(NamedTuple):
    value: int
    wrote_rd: bool = True


class BranchOutcome(NamedTuple):
    taken: bool
    target: int
    link: Optional[int] = None  # pc+4 for JAL/JALR


# ---------------------------------------------------------------------------
# Pure operand semantics.
#
# One table entry per mnemonic; register and immediate forms of the same
# behavior share a single lambda (the decoder routes the immediate into the
# second operand).  Every function maps (u32, u32) -> u32.
# ---------------------------------------------------------------------------

def _srl(a: int, b: int) -> int:
    return a >> (b & 31)


def _sra(a: int, b: int) -> int:
    return (to_signed(a) >> (b & 31)) & M32


def _sll(a: int, b: int) -> int:
    return (a << (b & 31)) & M32


def _mulh(a: int, b: int) -> int:
    return ((to_signed(a) * to_signed(b)) >> 32) & M32


def _mulhsu(a: int, b: int) -> int:
    return ((to_signed(a) * b) >> 32) & M32


def _div(a: int, b: int) -> int:
    # Quotient convention: trunc toward zero, -1 on /0, MIN_INT on overflow.
    sa, sb = to_signed(a), to_signed(b)
    if sb == 0:
        return M32
    if sa == -0x80000000 and sb == -1:
        return 0x80000000
    q = abs(sa) // abs(sb)
    return (-q if (sa < 0) != (sb < 0) else q) & M32


def _rem(a: int, b: int) -> int:
    # Remainder has the sign of the dividend; a on /0, 0 on overflow.
    sa, sb = to_signed(a), to_signed(b)
    if sb == 0:
        return a
    if sa == -0x80000000 and sb == -1:
        return 0
    r = abs(sa) % abs(sb)
    return (-r if sa < 0 else r) & M32


def _clz(a: int, _b: int) -> int:
    return 32 - a.bit_length()


def _ctz(a: int, _b: int) -> int:
    return (a & -a).bit_length() - 1 if a else 32


def _rol(a: int, b: int) -> int:
    s = b & 31
    return ((a << s) | (a >> (32 - s))) & M32 if s else a


def _ror(a: int, b: int) -> int:
    s = b & 31
    return ((a >> s) | (a << (32 - s))) & M32 if s else a


def _orc_b(a: int, _b: int) -> int:
    out = 0
    for shift in (0, 8, 16, 24):
        if a & (0xFF << shift):
            out |= 0xFF << shift
    return out


def _rev8(a: int, _b: int) -> int:
    return ((a & 0xFF) << 24) | ((a & 0xFF00) << 8) | ((a >> 8) & 0xFF00) | (a >> 24)


def _clmul_full(a: int, b: int) -> int:
    acc = 0
    while b:
        low = b & -b
        acc ^= a * low  # multiplying by a power of two is a shift
        b ^= low
    return acc


ALU_OPS: dict[str, Callable[[int, int], int]] = {
    # RV32I register/immediate arithmetic
    "add": lambda a, b: (a + b) & M32,
    "sub": lambda a, b: (a - b) & M32,
    "sll": _sll,
    "slt": lambda a, b: int(to_signed(a) < to_signed(b)),
    "sltu": lambda a, b: int(a < b),
    "xor": lambda a, b: a ^ b,
    "srl": _srl,
    "sra": _sra,
    "or": lambda a, b: a | b,
    "and": lambda a, b: a & b,
    # M
    "mul": lambda a, b: (a * b) & M32,
    "mulh": _mulh,
    "mulhsu": _mulhsu,
    "mulhu": lambda a, b: (a * b) >> 32,
    "div": _div,
    "divu": lambda a, b: M32 if b == 0 else a // b,
    "rem": _rem,
    "remu": lambda a, b: a if b == 0 else a % b,
    # Zba
    "sh1add": lambda a, b: ((a << 1) + b) & M32,
    "sh2add": lambda a, b: ((a << 2) + b) & M32,
    "sh3add": lambda a, b: ((a << 3) + b) & M32,
    # Zbb
    "andn": lambda a, b: a & ~b & M32,
    "orn": lambda a, b: (a | ~b) & M32,
    "xnor": lambda a, b: ~(a ^ b) & M32,
    "clz": _clz,
    "ctz": _ctz,
    "cpop": lambda a, _b: bin(a).count("1"),
    "max": lambda a, b: a if to_signed(a) >= to_signed(b) else b,
    "maxu": lambda a, b: a if a >= b else b,
    "min": lambda a, b: a if to_signed(a) < to_signed(b) else b,
    "minu": lambda a, b: a if a < b else b,
    "sext.b": lambda a, _b: sign_extend(a & 0xFF, 8),
    "sext.h": lambda a, _b: sign_extend(a & 0xFFFF, 16),
    "zext.h": lambda a, _b: a & 0xFFFF,
    "rol": _rol,
    "ror": _ror,
    "orc.b": _orc_b,
    "rev8": _rev8,
    # Zbc (low / high / reversed slices of the 63-bit carry-less product)
    "clmul": lambda a, b: _clmul_full(a, b) & M32,
    "clmulh": lambda a, b: _clmul_full(a, b) >> 32,
    "clmulr": lambda a, b: (_clmul_full(a, b) >> 31) & M32,
    # Zbs
    "bset": lambda a, b: a | (1 << (b & 31)),
    "bclr": lambda a, b: a & ~(1 << (b & 31)) & M32,
    "binv": lambda a, b: a ^ (1 << (b & 31)),
    "bext": lambda a, b: (a >> (b & 31)) & 1,
}

# Immediate forms reuse the register-form semantic bodies.
for _imm_name, _reg_name in (
    ("addi", "add"), ("slti", "slt"), ("sltiu", "sltu"), ("xori", "xor"),
    ("ori", "or"), ("andi", "and"), ("slli", "sll"), ("srli", "srl"),
    ("srai", "sra"), ("rori", "ror"), ("bseti", "bset"), ("bclri", "bclr"),
    ("binvi", "binv"), ("bexti", "bext"),
):
    ALU_OPS[_imm_name] = ALU_OPS[_reg_name]

RV32I_ALU = {
    "add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
    "addi", "slti", "sltiu", "xori", "ori", "andi", "slli", "srli", "srai",
}
RV32I_BRANCH = {"beq", "bne", "blt", "bge", "bltu", "bgeu"}
M_OPS = {"mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu"}
ZBA_OPS = {"sh1add", "sh2add", "sh3add"}
ZBB_OPS = {
    "andn", "orn", "xnor", "clz", "ctz", "cpop", "max", "maxu", "min", "minu",
    "sext.b", "sext.h", "zext.h", "rol", "ror", "rori", "orc.b", "rev8",
}
ZBC_OPS = {"clmul", "clmulh", "clmulr"}
ZBS_OPS = {"bset", "bclr", "binv", "bext", "bseti", "bclri", "binvi", "bexti"}


# ---------------------------------------------------------------------------
# Decoder
# ---------------------------------------------------------------------------

def _imm_i(w: int) -> int:
    return sign_extend(w >> 20, 12)


def _imm_s(w: int) -> int:
    return sign_extend(((w >> 25) << 5) | ((w >> 7) & 0x1F), 12)


def _imm_b(w: int) -> int:
    v = (((w >> 31) & 1) << 12) | (((w >> 7) & 1) << 11) \
        | (((w >> 25) & 0x3F) << 5) | (((w >> 8) & 0xF) << 1)
    return sign_extend(v, 13)


def _imm_j(w: int) -> int:
    v = (((w >> 31) & 1) << 20) | (((w >> 12) & 0xFF) << 12) \
        | (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3FF) << 1)
    return sign_extend(v, 21)


_BRANCH_F3 = {0: "beq", 1: "bne", 4: "blt", 5: "bge", 6: "bltu", 7: "bgeu"}
_LOAD_F3 = {0: "lb", 1: "lh", 2: "lw", 4: "lbu", 5: "lhu"}
_STORE_F3 = {0: "sb", 1: "sh", 2: "sw"}
_OPIMM_F3 = {0: "addi", 2: "slti", 3: "sltiu", 4: "xori", 6: "ori", 7: "andi"}
_M_F3 = {0: "mul", 1: "mulh", 2: "mulhsu", 3: "mulhu",
         4: "div", 5: "divu", 6: "rem", 7: "remu"}
_CSR_F3 = {1: "csrrw", 2: "csrrs", 3: "csrrc",
           5: "csrrwi", 6: "csrrsi", 7: "csrrci"}
_AMO_F5 = {
    0x00: "amoadd.w", 0x01: "amoswap.w", 0x04: "amoxor.w", 0x08: "amoor.w",
    0x0C: "amoand.w", 0x10: "amomin.w", 0x14: "amomax.w",
    0x18: "amominu.w", 0x1C: "amomaxu.w",
}
# OP-space (0x33) funct7 -> funct3 -> mnemonic
_OP_TABLE = {
    0x00: {0: "add", 1: "sll", 2: "slt", 3: "sltu", 4: "xor",
           5: "srl", 6: "or", 7: "and"},
    0x20: {0: "sub", 4: "xnor", 5: "sra", 6: "orn", 7: "andn"},
    0x01: _M_F3,
    0x10: {2: "sh1add", 4: "sh2add", 6: "sh3add"},
    0x05: {1: "clmul", 2: "clmulr", 3: "clmulh",
           4: "min", 5: "minu", 6: "max", 7: "maxu"},
    0x30: {1: "rol", 5: "ror"},
    0x14: {1: "bset"},
    0x24: {1: "bclr", 5: "bext"},
    0x34: {1: "binv"},
}
# OP-IMM funct3=001/101 space: funct7 -> mnemonic (rs2 field is the shamt),
# plus the unary ops encoded with a fixed rs2 value.
_UNARY_F7_30 = {0: "clz", 1: "ctz", 2: "cpop", 4: "sext.b", 5: "sext.h"}


def decode(word: int) -> Optional[Instruction]:
    """Decode one 32-bit instruction word.

    Total over all 2**32 words: every word maps to exactly one Instruction
    or to None (illegal encoding, which the hart turns into a trap).
    """
    w = word & M32
    opcode = w & 0x7F
    rd = (w >> 7) & 0x1F
    f3 = (w >> 12) & 0x7
    rs1 = (w >> 15) & 0x1F
    rs2 = (w >> 20) & 0x1F
    f7 = w >> 25

    if opcode == 0x33:  # OP: register-register ALU (I, M, Zba, Zbb, Zbc, Zbs)
        row = _OP_TABLE.get(f7)
        m = row.get(f3) if row else None
        if m is None:
            if f7 == 0x04 and f3 == 4 and rs2 == 0:
                m = "zext.h"  # only the rs2=0 encoding exists in RV32
            else:
                return None
        return Instruction(m, rd, rs1, rs2, 0, w, KIND_ALU_RR, rs1, rs2)

    if opcode == 0x13:  # OP-IMM
        if f3 == 1:
            if f7 == 0x00:
                m = "slli"
            elif f7 == 0x30:
                m = _UNARY_F7_30.get(rs2)
                if m is None:
                    return None
                return Instruction(m, rd, rs1, 0, 0, w, KIND_ALU_RI, rs1, 0)
            elif f7 == 0x14:
                m = "bseti"
            elif f7 == 0x24:
                m = "bclri"
            elif f7 == 0x34:
                m = "binvi"
            else:
                return None
            return Instruction(m, rd, rs1, 0, rs2, w, KIND_ALU_RI, rs1, 0)
        if f3 == 5:
            if f7 == 0x00:
                m = "srli"
            elif f7 == 0x20:
                m = "srai"
            elif f7 == 0x30:
                m = "rori"
            elif f7 == 0x24:
                m = "bexti"
            elif f7 == 0x14 and rs2 == 0x07:
                return Instruction("orc.b", rd, rs1, 0, 0, w, KIND_ALU_RI, rs1, 0)
            elif f7 == 0x34 and rs2 == 0x18:
                return Instruction("rev8", rd, rs1, 0, 0, w, KIND_ALU_RI, rs1, 0)
            else:
                return None
            return Instruction(m, rd, rs1, 0, rs2, w, KIND_ALU_RI, rs1, 0)
        m = _OPIMM_F3[f3]
        return Instruction(m, rd, rs1, 0, _imm_i(w), w, KIND_ALU_RI, rs1, 0)

    if opcode == 0x03:  # LOAD
        m = _LOAD_F3.get(f3)
        if m is None:
            return None
        return Instruction(m, rd, rs1, 0, _imm_i(w), w, KIND_LOAD, rs1, 0)

    if opcode == 0x23:  # STORE
        m = _STORE_F3.get(f3)
        if m is None:
            return None
        return Instruction(m, 0, rs1, rs2, _imm_s(w), w, KIND_STORE, rs1, rs2)

    if opcode == 0x63:  # BRANCH
        m = _BRANCH_F3.get(f3)
        if m is None:
            return None
        return Instruction(m, 0, rs1, rs2, _imm_b(w), w, KIND_BRANCH, rs1, rs2)

    if opcode == 0x37:
        return Instruction("lui", rd, 0, 0, w & 0xFFFFF000, w, KIND_LUI, 0, 0)
    if opcode == 0x17:
        return Instruction("auipc", rd, 0, 0, w & 0xFFFFF000, w, KIND_AUIPC, 0, 0)
    if opcode == 0x6F:
        return Instruction("jal", rd, 0, 0, _imm_j(w), w, KIND_JAL, 0, 0)
    if opcode == 0x67:
        if f3 != 0:
            return None
        return Instruction("jalr", rd, rs1, 0, _imm_i(w), w, KIND_JALR, rs1, 0)

    if opcode == 0x2F:  # AMO
        if f3 != 2:
            return None
        f5 = f7 >> 2
        if f5 == 0x02:
            if rs2 != 0:
                return None
            return Instruction("lr.w", rd, rs1, 0, 0, w, KIND_LR, rs1, 0)
        if f5 == 0x03:
            return Instruction("sc.w", rd, rs1, rs2, 0, w, KIND_SC, rs1, rs2)
        m = _AMO_F5.get(f5)
        if m is None:
            return None
        return Instruction(m, rd, rs1, rs2, 0, w, KIND_AMO, rs1, rs2)

    if opcode == 0x73:  # SYSTEM
        if f3 == 0:
            if rd != 0 or rs1 != 0:
                return None
            f12 = w >> 20
            m = {0x000: "ecall", 0x001: "ebreak",
                 0x302: "mret", 0x105: "wfi"}.get(f12)
            if m is None:
                return None
            return Instruction(m, 0, 0, 0, 0, w, KIND_SYSTEM, 0, 0)
        m = _CSR_F3.get(f3)
        if m is None:
            return None
        csr = w >> 20
        src = rs1 if f3 < 4 else 0  # immediate forms read no register
        return Instruction(m, rd, rs1, 0, csr, w, KIND_CSR, src, 0)

    if opcode == 0x0F:  # MISC-MEM
        if f3 == 0:
            return Instruction("fence", rd, rs1, 0, _imm_i(w), w, KIND_FENCE, 0, 0)
        if f3 == 1:
            return Instruction("fence.i", rd, rs1, 0, _imm_i(w), w, KIND_FENCE, 0, 0)
        return None

    return None


# ---------------------------------------------------------------------------
# Spec-surface executors: thin validated wrappers over the shared tables.
# ---------------------------------------------------------------------------

def _alu_exec(instr: Instruction, rs1_val: int, rs2_val: int) -> AluResult:
    operand = instr.imm if instr.kind == KIND_ALU_RI else rs2_val
    value = ALU_OPS[instr.mnemonic](rs1_val & M32, operand & M32)
    return AluResult(value, instr.rd != 0)


def exec_rv32i(instr: Instruction, rs1_val: int, rs2_val: int, pc: int):
    """Execute an RV32I ALU/branch/jump/LUI/AUIPC instruction.

    Returns AluResult for value-producing ops and BranchOutcome for
    branches and jumps (loads/stores go through the bus instead).
    """
    m = instr.mnemonic
    if m in RV32I_ALU:
        return _alu_exec(instr, rs1_val, rs2_val)
    if m == "lui":
        return AluResult(instr.imm, instr.rd != 0)
    if m == "auipc":
        return AluResult((pc + instr.imm) & M32, instr.rd != 0)
    if m in RV32I_BRANCH:
        a, b = rs1_val & M32, rs2_val & M32
        if m == "beq":
            taken = a == b
        elif m == "bne":
            taken = a != b
        elif m == "blt":
            taken = to_signed(a) < to_signed(b)
        elif m == "bge":
            taken = to_signed(a) >= to_signed(b)
        elif m == "bltu":
            taken = a < b
        else:
            taken = a >= b
        target = (pc + instr.imm) & M32 if taken else (pc + 4) & M32
        return BranchOutcome(taken, target)
    if m == "jal":
        return BranchOutcome(True, (pc + instr.imm) & M32, (pc + 4) & M32)
    if m == "jalr":
        target = (rs1_val + instr.imm) & M32 & ~1
        return BranchOutcome(True, target, (pc + 4) & M32)
    raise ValueError(f"not an RV32I ALU/branch/jump instruction: {m}")


def _subset_exec(subset: set, what: str):
    def run(instr: Instruction, rs1_val: int, rs2_val: int) -> AluResult:
        if instr.mnemonic not in subset:
            raise ValueError(f"not a {what} instruction: {instr.mnemonic}")
        return _alu_exec(instr, rs1_val, rs2_val)
    return run


exec_m = _subset_exec(M_OPS, "M-extension")
exec_zba = _subset_exec(ZBA_OPS, "Zba")
exec_zbb = _subset_exec(ZBB_OPS, "Zbb")
exec_zbc = _subset_exec(ZBC_OPS, "Zbc")
exec_zbs = _subset_exec(ZBS_OPS, "Zbs")


# ---------------------------------------------------------------------------
# Disassembly (debug aid; not part of the trace format)
# ---------------------------------------------------------------------------

def disassemble(instr: Instruction) -> str:
    m, k = instr.mnemonic, instr.kind
    imm = to_signed(instr.imm)
    if k == KIND_ALU_RR or k in (KIND_AMO, KIND_SC):
        return f"{m} x{instr.rd}, x{instr.rs1}, x{instr.rs2}"
    if k == KIND_ALU_RI:
        if instr.src2 == 0 and m in ("clz", "ctz", "cpop", "sext.b", "sext.h",
                                     "orc.b", "rev8"):
            return f"{m} x{instr.rd}, x{instr.rs1}"
        return f"{m} x{instr.rd}, x{instr.rs1}, {imm}"
    if k in (KIND_LUI, KIND_AUIPC):
        return f"{m} x{instr.rd}, 0x{instr.imm >> 12:x}"
    if k == KIND_JAL:
        return f"{m} x{instr.rd}, {imm}"
    if k == KIND_JALR:
        return f"{m} x{instr.rd}, {imm}(x{instr.rs1})"
    if k == KIND_BRANCH:
        return f"{m} x{instr.rs1}, x{instr.rs2}, {imm}"
    if k == KIND_LOAD:
        return f"{m} x{instr.rd}, {imm}(x{instr.rs1})"
    if k == KIND_STORE:
        return f"{m} x{instr.rs2}, {imm}(x{instr.rs1})"
    if k == KIND_LR:
        return f"{m} x{instr.rd}, (x{instr.rs1})"
    if k == KIND_CSR:
        opnd = instr.rs1 if m.endswith("i") else f"x{instr.rs1}"
        return f"{m} x{instr.rd}, 0x{instr.imm:03x}, {opnd}"
    return m
