"""Instruction encoder for the test suite.

Built straight from the ISA manual encoding tables, independently of the
package decoder, so encode->decode round trips are a real check.
"""

M32 = 0xFFFFFFFF


def _r(f7, rs2, rs1, f3, rd, op):
    return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op


def _i(imm, rs1, f3, rd, op):
    return ((imm & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op


def _s(imm, rs2, rs1, f3, op):
    imm &= 0xFFF
    return ((imm >> 5) << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) \
        | ((imm & 0x1F) << 7) | op


def _b(imm, rs2, rs1, f3, op):
    imm &= 0x1FFF
    return (((imm >> 12) & 1) << 31) | (((imm >> 5) & 0x3F) << 25) \
        | (rs2 << 20) | (rs1 << 15) | (f3 << 12) \
        | (((imm >> 1) & 0xF) << 8) | (((imm >> 11) & 1) << 7) | op


def _u(imm20, rd, op):
    return ((imm20 & 0xFFFFF) << 12) | (rd << 7) | op


def _j(imm, rd, op):
    imm &= 0x1FFFFF
    return (((imm >> 20) & 1) << 31) | (((imm >> 1) & 0x3FF) << 21) \
        | (((imm >> 11) & 1) << 20) | (((imm >> 12) & 0xFF) << 12) \
        | (rd << 7) | op


_R_TABLE = {
    "add": (0x00, 0), "sub": (0x20, 0), "sll": (0x00, 1), "slt": (0x00, 2),
    "sltu": (0x00, 3), "xor": (0x00, 4), "srl": (0x00, 5), "sra": (0x20, 5),
    "or": (0x00, 6), "and": (0x00, 7),
    "mul": (0x01, 0), "mulh": (0x01, 1), "mulhsu": (0x01, 2), "mulhu": (0x01, 3),
    "div": (0x01, 4), "divu": (0x01, 5), "rem": (0x01, 6), "remu": (0x01, 7),
    "sh1add": (0x10, 2), "sh2add": (0x10, 4), "sh3add": (0x10, 6),
    "andn": (0x20, 7), "orn": (0x20, 6), "xnor": (0x20, 4),
    "max": (0x05, 6), "maxu": (0x05, 7), "min": (0x05, 4), "minu": (0x05, 5),
    "rol": (0x30, 1), "ror": (0x30, 5),
    "clmul": (0x05, 1), "clmulr": (0x05, 2), "clmulh": (0x05, 3),
    "bset": (0x14, 1), "bclr": (0x24, 1), "binv": (0x34, 1), "bext": (0x24, 5),
}
_I_TABLE = {"addi": 0, "slti": 2, "sltiu": 3, "xori": 4, "ori": 6, "andi": 7}
_SHIFT_TABLE = {
    "slli": (0x00, 1), "srli": (0x00, 5), "srai": (0x20, 5), "rori": (0x30, 5),
    "bseti": (0x14, 1), "bclri": (0x24, 1), "binvi": (0x34, 1), "bexti": (0x24, 5),
}
_UNARY_TABLE = {
    "clz": (0x30, 0, 1), "ctz": (0x30, 1, 1), "cpop": (0x30, 2, 1),
    "sext.b": (0x30, 4, 1), "sext.h": (0x30, 5, 1),
    "orc.b": (0x14, 7, 5), "rev8": (0x34, 0x18, 5),
}
_LOAD_TABLE = {"lb": 0, "lh": 1, "lw": 2, "lbu": 4, "lhu": 5}
_STORE_TABLE = {"sb": 0, "sh": 1, "sw": 2}
_BRANCH_TABLE = {"beq": 0, "bne": 1, "blt": 4, "bge": 5, "bltu": 6, "bgeu": 7}
_CSR_TABLE = {"csrrw": 1, "csrrs": 2, "csrrc": 3,
              "csrrwi": 5, "csrrsi": 6, "csrrci": 7}
_AMO_TABLE = {
    "amoadd.w": 0x00, "amoswap.w": 0x01, "amoxor.w": 0x04, "amoor.w": 0x08,
    "amoand.w": 0x0C, "amomin.w": 0x10, "amomax.w": 0x14,
    "amominu.w": 0x18, "amomaxu.w": 0x1C,
}


def enc(mnemonic, rd=0, rs1=0, rs2=0, imm=0, csr=0, aqrl=0):
    """Encode one instruction word.

    imm is the signed (or unsigned where applicable) immediate; for LUI and
    AUIPC it is the 20-bit upper-immediate field value.
    """
    m = mnemonic
    if m in _R_TABLE:
        f7, f3 = _R_TABLE[m]
        return _r(f7, rs2, rs1, f3, rd, 0x33)
    if m == "zext.h":
        return _r(0x04, 0, rs1, 4, rd, 0x33)
    if m in _I_TABLE:
        return _i(imm, rs1, _I_TABLE[m], rd, 0x13)
    if m in _SHIFT_TABLE:
        f7, f3 = _SHIFT_TABLE[m]
        return _r(f7, imm & 0x1F, rs1, f3, rd, 0x13)
    if m in _UNARY_TABLE:
        f7, field, f3 = _UNARY_TABLE[m]
        return _r(f7, field, rs1, f3, rd, 0x13)
    if m in _LOAD_TABLE:
        return _i(imm, rs1, _LOAD_TABLE[m], rd, 0x03)
    if m in _STORE_TABLE:
        return _s(imm, rs2, rs1, _STORE_TABLE[m], 0x23)
    if m in _BRANCH_TABLE:
        return _b(imm, rs2, rs1, _BRANCH_TABLE[m], 0x63)
    if m == "lui":
        return _u(imm, rd, 0x37)
    if m == "auipc":
        return _u(imm, rd, 0x17)
    if m == "jal":
        return _j(imm, rd, 0x6F)
    if m == "jalr":
        return _i(imm, rs1, 0, rd, 0x67)
    if m in _CSR_TABLE:
        return _i(csr, rs1, _CSR_TABLE[m], rd, 0x73)
    if m == "ecall":
        return 0x00000073
    if m == "ebreak":
        return 0x00100073
    if m == "mret":
        return 0x30200073
    if m == "wfi":
        return 0x10500073
    if m == "fence":
        return 0x0FF0000F
    if m == "fence.i":
        return 0x0000100F
    if m == "lr.w":
        return _r((0x02 << 2) | aqrl, 0, rs1, 2, rd, 0x2F)
    if m == "sc.w":
        return _r((0x03 << 2) | aqrl, rs2, rs1, 2, rd, 0x2F)
    if m in _AMO_TABLE:
        return _r((_AMO_TABLE[m] << 2) | aqrl, rs2, rs1, 2, rd, 0x2F)
    raise ValueError(f"encoder does not know {m!r}")


def words_to_bytes(words) -> bytes:
    out = bytearray()
    for w in words:
        out += (w & M32).to_bytes(4, "little")
    return bytes(out)


# Every encodable mnemonic, used by round-trip and coverage tests.
ALL_MNEMONICS = (
    list(_R_TABLE) + ["zext.h"] + list(_I_TABLE) + list(_SHIFT_TABLE)
    + list(_UNARY_TABLE) + list(_LOAD_TABLE) + list(_STORE_TABLE)
    + list(_BRANCH_TABLE) + ["lui", "auipc", "jal", "jalr"]
    + list(_CSR_TABLE) + ["ecall", "ebreak", "mret", "wfi", "fence", "fence.i"]
    + ["lr.w", "sc.w"] + list(_AMO_TABLE)
)
