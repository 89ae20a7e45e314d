#!/usr/bin/env python3
"""Regenerate the mirror_echo firmware fixture and its companion stimulus
and golden files.  Run from the repository root:

    python3 tests/fixtures/build_mirror_echo.py

Outputs (all in this directory):
    mirror_echo.bin     flat image, load at 0x80000000
    smoke.stim          instruction-indexed stimulus for the smoke test
    smoke_uart.golden   expected UART output (the injected bytes, since the
                        firmware echoes byte-for-byte)
"""

import pathlib
import random
import sys

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))  # tests/ for encoder.py

from encoder import enc, words_to_bytes  # noqa: E402

WORDS = [
    enc("lui", rd=5, imm=0x40000),
    enc("addi", rd=5, rs1=5, imm=0x300),
    enc("lui", rd=6, imm=0x40000),
    enc("addi", rd=6, rs1=6, imm=0x400),
    # loop (0x10):
    enc("lw", rd=7, rs1=5, imm=4),
    enc("sw", rs1=5, rs2=7, imm=0),
    enc("lw", rd=28, rs1=6, imm=8),
    enc("andi", rd=28, rs1=28, imm=2),
    enc("beq", rs1=28, rs2=0, imm=-16),
    enc("lw", rd=29, rs1=6, imm=4),
    enc("sw", rs1=6, rs2=29, imm=0),
    enc("jal", rd=0, imm=-28),
]

MESSAGE = (b"Hello, little board!\r\n"
           b"The quick brown fox jumps over the lazy dog 0123456789.\r\n")


def build():
    rng = random.Random(20240501)
    binary = words_to_bytes(WORDS)
    (HERE / "mirror_echo.bin").write_bytes(binary)

    # Byte payload: the text banner plus a spread of raw byte values.
    payload = bytearray(MESSAGE)
    payload.extend(rng.randrange(256) for _ in range(256))

    stim_lines = ["# smoke-test stimulus for mirror_echo.bin"]
    golden = bytearray()
    index = 500
    pos = 0
    while pos < len(payload):
        chunk = bytes(payload[pos:pos + rng.randrange(1, 9)])
        pos += len(chunk)
        stim_lines.append(f"{index} uart_in {chunk.hex()}")
        golden.extend(chunk)
        if rng.random() < 0.4:
            stim_lines.append(f"{index} set_switches 0x{rng.randrange(1 << 16):04X}")
        index += rng.randrange(800, 2000)
    # final switch value the test asserts on the LEDs
    stim_lines.append(f"{index} set_switches 0xA5C3")
    (HERE / "smoke.stim").write_text("\n".join(stim_lines) + "\n",
                                     encoding="utf-8")
    (HERE / "smoke_uart.golden").write_bytes(bytes(golden))
    print(f"wrote {len(binary)} code bytes, {len(golden)} payload bytes, "
          f"last stimulus at instret {index}")


if __name__ == "__main__":
    build()
