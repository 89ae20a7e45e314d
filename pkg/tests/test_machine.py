"""Machine-loop tests: step outcomes, traps, breakpoints, WFI, tracing,
firmware loading, snapshots, stimulus and command-queue behavior."""

import struct

import pytest

from rvmcu.bus import CLINT_BASE, GPSPECIAL_BASE, RAM_BASE, UART_BASE
from rvmcu.hart import MIP_MTIP, MSTATUS_MIE
from rvmcu.loader import LoadError
from rvmcu.machine import Machine, StepOutcome, parse_stimulus, StimulusError

from encoder import enc, words_to_bytes


def boot(words, **kwargs):
    m = Machine(**kwargs)
    m.load_firmware(words_to_bytes(words), fmt="bin", base=RAM_BASE)
    return m


def make_elf(segments, entry):
    """Minimal ELF32 (little-endian RISC-V executable) for loader tests."""
    phoff = 52
    phentsize = 32
    data_off = phoff + phentsize * len(segments)
    header = (b"\x7fELF" + bytes([1, 1, 1, 0]) + b"\x00" * 8
              + struct.pack("<HHIIIIIHHHHHH", 2, 243, 1, entry, phoff, 0, 0,
                            52, phentsize, len(segments), 0, 0, 0))
    phdrs = b""
    blobs = b""
    off = data_off
    for vaddr, blob, *rest in segments:
        memsz = rest[0] if rest else len(blob)
        phdrs += struct.pack("<IIIIIIII", 1, off, vaddr, vaddr,
                             len(blob), memsz, 7, 4)
        blobs += blob
        off += len(blob)
    return header + phdrs + blobs


class TestStepBasics:
    def test_nop_retires(self):
        m = boot([0x00000013])
        out = m.step()
        assert out is StepOutcome.RETIRED
        assert m.hart.pc == RAM_BASE + 4
        assert m.hart.minstret == 1

    def test_alu_program(self):
        m = boot([
            enc("addi", rd=1, rs1=0, imm=5),
            enc("addi", rd=2, rs1=0, imm=7),
            enc("add", rd=3, rs1=1, rs2=2),
            enc("sub", rd=4, rs1=1, rs2=2),
        ])
        for _ in range(4):
            assert m.step() is StepOutcome.RETIRED
        assert m.hart.x[3] == 12
        assert m.hart.x[4] == 0xFFFFFFFE

    def test_x0_stays_zero(self):
        m = boot([enc("addi", rd=0, rs1=0, imm=123)])
        m.step()
        assert m.hart.x[0] == 0

    def test_load_store(self):
        m = boot([
            enc("lui", rd=1, imm=0x80010),
            enc("addi", rd=2, rs1=0, imm=-1),
            enc("sw", rs1=1, rs2=2, imm=8),
            enc("lhu", rd=3, rs1=1, imm=8),
            enc("lb", rd=4, rs1=1, imm=9),
        ])
        for _ in range(5):
            m.step()
        assert m.hart.x[3] == 0xFFFF
        assert m.hart.x[4] == 0xFFFFFFFF

    def test_mul_div_through_machine(self):
        m = boot([
            enc("addi", rd=1, rs1=0, imm=-7),
            enc("addi", rd=2, rs1=0, imm=2),
            enc("div", rd=3, rs1=1, rs2=2),
            enc("rem", rd=4, rs1=1, rs2=2),
        ])
        for _ in range(4):
            m.step()
        assert m.hart.x[3] == 0xFFFFFFFD  # -3 (trunc toward zero)
        assert m.hart.x[4] == 0xFFFFFFFF  # -1

    def test_branch_and_jal(self):
        m = boot([
            enc("addi", rd=1, rs1=0, imm=1),
            enc("beq", rs1=1, rs2=0, imm=8),   # not taken
            enc("jal", rd=5, imm=8),           # skips the poison addi
            enc("addi", rd=1, rs1=0, imm=99),
            enc("addi", rd=2, rs1=1, imm=0),
        ])
        for _ in range(4):
            m.step()
        assert m.hart.x[1] == 1
        assert m.hart.x[2] == 1
        assert m.hart.x[5] == RAM_BASE + 12


class TestGuestTraps:
    def test_misaligned_load(self):
        m = boot([enc("lui", rd=1, imm=0x80000),
                  enc("lw", rd=2, rs1=1, imm=1)])
        m.step()
        assert m.step() is StepOutcome.TRAPPED
        assert m.hart.csr.mcause == 4
        assert m.hart.csr.mtval == 0x80000001
        assert m.hart.csr.mepc == RAM_BASE + 4
        assert m.hart.pc == m.hart.csr.mtvec & ~3
        assert m.hart.minstret == 1  # trapped instruction does not retire

    def test_misaligned_store(self):
        m = boot([enc("lui", rd=1, imm=0x80000),
                  enc("sh", rs1=1, rs2=0, imm=3)])
        m.step()
        m.step()
        assert m.hart.csr.mcause == 6

    def test_load_fault_unmapped(self):
        m = boot([enc("lw", rd=2, rs1=0, imm=0)])
        m.step()
        assert m.hart.csr.mcause == 5
        assert m.hart.csr.mtval == 0

    def test_store_fault_unmapped(self):
        m = boot([enc("sw", rs1=0, rs2=0, imm=16)])
        m.step()
        assert m.hart.csr.mcause == 7

    def test_illegal_instruction_mtval_holds_word(self):
        m = boot([0xFFFFFFFF])
        assert m.step() is StepOutcome.TRAPPED
        assert m.hart.csr.mcause == 2
        assert m.hart.csr.mtval == 0xFFFFFFFF

    def test_ecall(self):
        m = boot([enc("ecall")])
        m.step()
        assert m.hart.csr.mcause == 11
        assert m.hart.csr.mepc == RAM_BASE

    def test_ebreak_traps_without_debugger(self):
        m = boot([enc("ebreak")])
        assert m.step() is StepOutcome.TRAPPED
        assert m.hart.csr.mcause == 3
        assert m.hart.csr.mtval == RAM_BASE

    def test_fetch_fault_after_wild_jump(self):
        m = boot([enc("jalr", rd=0, rs1=0, imm=0x100)])  # jump to 0x100
        m.step()
        assert m.step() is StepOutcome.TRAPPED
        assert m.hart.csr.mcause == 1
        assert m.hart.csr.mtval == 0x100

    def test_misaligned_branch_target(self):
        m = boot([enc("addi", rd=1, rs1=0, imm=1),
                  enc("beq", rs1=0, rs2=0, imm=6)])
        m.step()
        assert m.step() is StepOutcome.TRAPPED
        assert m.hart.csr.mcause == 0
        assert m.hart.csr.mepc == RAM_BASE + 4
        assert m.hart.csr.mtval == RAM_BASE + 4 + 6

    def test_illegal_csr_traps(self):
        word = enc("csrrw", rd=1, rs1=2, csr=0x180)  # satp does not exist
        m = boot([word])
        m.step()
        assert m.hart.csr.mcause == 2
        assert m.hart.csr.mtval == word

    def test_trap_does_not_write_rd(self):
        m = boot([enc("addi", rd=2, rs1=0, imm=55),
                  enc("lw", rd=2, rs1=0, imm=0)])  # faults
        m.step()
        m.step()
        assert m.hart.x[2] == 55


class TestCsrInstructions:
    def test_csrrw_round_trip(self):
        m = boot([
            enc("addi", rd=1, rs1=0, imm=0x123),
            enc("csrrw", rd=2, rs1=1, csr=0x340),
            enc("csrrs", rd=3, rs1=0, csr=0x340),
        ])
        for _ in range(3):
            m.step()
        assert m.hart.x[2] == 0
        assert m.hart.x[3] == 0x123

    def test_csrrsi_sets_bits(self):
        m = boot([enc("csrrsi", rd=0, rs1=0b01000, csr=0x300),
                  enc("csrrs", rd=1, rs1=0, csr=0x300)])
        m.step()
        m.step()
        assert m.hart.x[1] & MSTATUS_MIE

    def test_csrrs_x0_does_not_write_readonly(self):
        m = boot([enc("csrrs", rd=1, rs1=0, csr=0xF14)])
        assert m.step() is StepOutcome.RETIRED
        assert m.hart.x[1] == 0

    def test_mcycle_readable(self):
        m = boot([0x00000013, enc("csrrs", rd=1, rs1=0, csr=0xB00)])
        m.step()
        m.step()
        assert m.hart.x[1] == 3  # fill(2) + one retired nop


class TestAtomicsThroughMachine:
    def test_lr_sc_success(self):
        m = boot([
            enc("lui", rd=1, imm=0x80010),
            enc("addi", rd=2, rs1=0, imm=42),
            enc("sw", rs1=1, rs2=2, imm=0),
            enc("lr.w", rd=3, rs1=1),
            enc("addi", rd=4, rs1=3, imm=1),
            enc("sc.w", rd=5, rs1=1, rs2=4),
            enc("lw", rd=6, rs1=1, imm=0),
        ])
        for _ in range(7):
            assert m.step() is StepOutcome.RETIRED
        assert m.hart.x[3] == 42
        assert m.hart.x[5] == 0
        assert m.hart.x[6] == 43

    def test_sc_fails_after_intervening_store(self):
        m = boot([
            enc("lui", rd=1, imm=0x80010),
            enc("lr.w", rd=3, rs1=1),
            enc("sw", rs1=1, rs2=0, imm=4),   # any store kills the reservation
            enc("sc.w", rd=5, rs1=1, rs2=3),
            enc("lw", rd=6, rs1=1, imm=0),
        ])
        for _ in range(5):
            m.step()
        assert m.hart.x[5] == 1
        assert m.hart.x[6] == 0  # memory unchanged

    def test_sc_without_lr_fails(self):
        m = boot([enc("lui", rd=1, imm=0x80010),
                  enc("sc.w", rd=5, rs1=1, rs2=0)])
        m.step()
        m.step()
        assert m.hart.x[5] == 1

    def test_amoadd(self):
        m = boot([
            enc("lui", rd=1, imm=0x80010),
            enc("addi", rd=2, rs1=0, imm=5),
            enc("sw", rs1=1, rs2=2, imm=0),
            enc("addi", rd=3, rs1=0, imm=7),
            enc("amoadd.w", rd=4, rs1=1, rs2=3),
            enc("lw", rd=5, rs1=1, imm=0),
        ])
        for _ in range(6):
            m.step()
        assert m.hart.x[4] == 5
        assert m.hart.x[5] == 12

    def test_amo_to_peripheral_faults(self):
        m = boot([enc("lui", rd=1, imm=UART_BASE >> 12),
                  enc("amoswap.w", rd=2, rs1=1, rs2=0)])
        m.step()
        assert m.step() is StepOutcome.TRAPPED
        assert m.hart.csr.mcause == 7


class TestTraceFormat:
    def collect(self, m):
        lines = []
        m.trace = lines.append
        return lines

    def test_spec_example_line(self):
        m = boot([enc("addi", rd=5, rs1=0, imm=7)])
        lines = self.collect(m)
        m.step()
        assert lines == ["C:3 PC:80000000 I:00700293 x5=00000007"]

    def test_store_line(self):
        m = boot([
            enc("lui", rd=1, imm=0x8000F),
            enc("lui", rd=2, imm=0xDEADC),
            enc("addi", rd=2, rs1=2, imm=-0x141),  # 0xdeadc000 - 0x141 = 0xdeadbebf
            enc("sw", rs1=1, rs2=2, imm=0),
        ])
        lines = self.collect(m)
        for _ in range(4):
            m.step()
        assert lines[-1].endswith(" M[8000f000]=deadbebf:W")

    def test_load_line_has_both_fields(self):
        m = boot([
            enc("lui", rd=1, imm=0x80010),
            enc("lw", rd=7, rs1=1, imm=0),
        ])
        lines = self.collect(m)
        m.step()
        m.step()
        assert " x7=00000000 " in lines[-1] + " "
        assert "M[80010000]=00000000:R" in lines[-1]

    def test_trap_line(self):
        m = boot([enc("ecall")])
        lines = self.collect(m)
        m.step()
        assert lines == [f"C:4 PC:80000000 I:{enc('ecall'):08x} TRAP:0000000b"]

    def test_no_rd_field_for_x0_write(self):
        m = boot([0x00000013])
        lines = self.collect(m)
        m.step()
        assert lines == ["C:3 PC:80000000 I:00000013"]

    def test_records_not_materialized_when_disabled(self):
        m = boot([0x00000013])
        m.step()  # no sink: nothing to assert beyond "does not crash"


class TestBreakpoints:
    def test_halt_before_execution_then_resume(self):
        m = boot([enc("addi", rd=1, rs1=0, imm=1),
                  enc("addi", rd=2, rs1=0, imm=2)])
        m.breakpoints.add(RAM_BASE + 4)
        assert m.step() is StepOutcome.RETIRED
        out = m.step()
        assert out is StepOutcome.HIT_BREAKPOINT
        assert m.hart.x[2] == 0
        assert m.hart.pc == RAM_BASE + 4  # nothing executed
        assert m.hart.minstret == 1
        assert m.step() is StepOutcome.RETIRED  # resume executes it once
        assert m.hart.x[2] == 2

    def test_run_stops_at_breakpoint(self):
        m = boot([enc("addi", rd=1, rs1=0, imm=1),
                  enc("addi", rd=2, rs1=0, imm=2),
                  enc("jal", rd=0, imm=0)])
        m.breakpoints.add(RAM_BASE + 8)
        reason = m.run(max_instret=100)
        assert reason == "breakpoint"
        assert m.hart.minstret == 2

    def test_breakpoint_transparency(self):
        prog = [enc("addi", rd=1, rs1=1, imm=1) for _ in range(20)]
        plain = boot(prog)
        plain.run(max_instret=20)
        bp = boot(prog)
        bp.breakpoints.add(RAM_BASE + 40)
        assert bp.run(max_instret=20) == "breakpoint"
        bp.breakpoints.discard(RAM_BASE + 40)
        bp.run(max_instret=20 - bp.hart.minstret)
        assert bp.hart.x == plain.hart.x
        assert bp.hart.pc == plain.hart.pc
        assert bp.hart.mcycle == plain.hart.mcycle

    def test_ebreak_halts_when_debugger_attached(self):
        m = boot([enc("ebreak"), enc("addi", rd=1, rs1=0, imm=9)])
        m.debug_attached = True
        out = m.step()
        assert out is StepOutcome.HIT_BREAKPOINT
        assert m.halt_cause == "ebreak"
        assert m.hart.pc == RAM_BASE
        # resume: the ebreak retires as a nop under the debugger
        assert m.step() is StepOutcome.RETIRED
        assert m.hart.pc == RAM_BASE + 4
        m.step()
        assert m.hart.x[1] == 9


class TestInterrupts:
    def _timer_program(self):
        # arm mtimecmp=low value then spin
        return [
            enc("lui", rd=1, imm=(CLINT_BASE + 0x4000) >> 12),
            enc("addi", rd=2, rs1=0, imm=20),
            enc("sw", rs1=1, rs2=2, imm=0),       # mtimecmp lo = 20
            enc("sw", rs1=1, rs2=0, imm=4),       # mtimecmp hi = 0
            enc("lui", rd=3, imm=0x80),           # wait: mie.MTIE is bit 7 = 0x80
            enc("addi", rd=3, rs1=0, imm=0x80),
            enc("csrrw", rd=0, rs1=3, csr=0x304),
            enc("csrrsi", rd=0, rs1=0b01000, csr=0x300),
            enc("jal", rd=0, imm=0),              # spin
        ]

    def test_timer_interrupt_taken_between_instructions(self):
        m = boot(self._timer_program())
        outcomes = []
        for _ in range(40):
            out = m.step()
            outcomes.append(out)
            if out is StepOutcome.TRAPPED:
                break
        assert StepOutcome.TRAPPED in outcomes
        assert m.hart.csr.mcause == 0x80000007
        assert m.clint.mtime >= 20
        # interrupts are taken at boundaries: mepc points at the spin jal
        assert m.hart.csr.mepc == RAM_BASE + 32

    def test_interrupt_blocked_while_mie_clear(self):
        prog = self._timer_program()
        prog[7] = 0x00000013  # skip the mstatus.MIE enable
        m = boot(prog)
        for _ in range(60):
            assert m.step() is not StepOutcome.TRAPPED

    def test_mtip_mirrors_comparator_each_step(self):
        m = boot(self._timer_program())
        for _ in range(40):
            m.step()
            m._refresh_mip()
            assert bool(m.hart.csr.mip & MIP_MTIP) == \
                (m.clint.mtime >= m.clint.mtimecmp)


class TestWfi:
    def test_wfi_idles_then_wakes_on_timer(self):
        words = [
            enc("lui", rd=1, imm=(CLINT_BASE + 0x4000) >> 12),
            enc("addi", rd=2, rs1=0, imm=100),
            enc("sw", rs1=1, rs2=2, imm=0),
            enc("sw", rs1=1, rs2=0, imm=4),
            enc("addi", rd=3, rs1=0, imm=0x80),
            enc("csrrw", rd=0, rs1=3, csr=0x304),  # MTIE, but MIE stays 0
            enc("wfi"),
            enc("addi", rd=9, rs1=0, imm=1),
        ]
        m = boot(words)
        for _ in range(7):
            assert m.step() is StepOutcome.RETIRED
        assert m.hart.halted_reason == "wfi"
        idles = 0
        while m.step() is StepOutcome.WFI_IDLE:
            idles += 1
            assert idles < 1000
        # MIE=0: resumes without trapping
        assert m.hart.halted_reason is None
        assert m.hart.x[9] == 1
        assert m.clint.mtime >= 100
        assert m.report.stalls["wfi_idle"] > 0

    def test_wfi_with_pending_interrupt_continues_immediately(self):
        m = boot([enc("wfi"), enc("addi", rd=9, rs1=0, imm=1)])
        m.clint.mtimecmp = 0  # MTIP already pending
        m.hart.csr.mie = MIP_MTIP
        assert m.step() is StepOutcome.RETIRED
        assert m.step() is StepOutcome.RETIRED
        assert m.hart.x[9] == 1


class TestRunLimits:
    def test_exact_instret_limit(self):
        m = boot([enc("addi", rd=1, rs1=1, imm=1)] * 50)
        reason = m.run(max_instret=10)
        assert reason == "limit-instret"
        assert m.hart.minstret == 10

    def test_cycle_limit(self):
        m = boot([enc("jal", rd=0, imm=0)])
        reason = m.run(max_cycles=100)
        assert reason == "limit-cycles"
        assert m.hart.mcycle >= 100

    def test_pause_command_stops_at_boundary(self):
        m = boot([enc("addi", rd=1, rs1=1, imm=1)] * 8 + [enc("jal", rd=0, imm=0)])
        hits = []

        def monitor(mm):
            hits.append(mm.hart.minstret)
            if mm.hart.minstret >= 3:
                mm.run_state = "paused"
            else:
                mm.post(monitor)

        m.post(monitor)
        reason = m.run(max_instret=100)
        assert reason == "pause"
        assert m.hart.minstret == 3  # stopped before executing the next one


def test_fault_stop_on_internal_inconsistency():
    # A misaligned PC cannot arise from guest behavior (every control
    # transfer checks); forcing one must fault-stop, not trap the guest.
    m = boot([0x00000013])
    m.hart.pc = RAM_BASE + 1
    assert m.step() is StepOutcome.FAULT_STOP
    assert "internal" in m.halt_cause


class TestLoader:
    def test_flat_round_trip(self):
        m = Machine()
        image = words_to_bytes([0x00000013, 0x00100093])
        entry = m.load_firmware(image, fmt="bin", base=RAM_BASE)
        assert entry == RAM_BASE
        assert m.bus.read(RAM_BASE + 4, 4) == 0x00100093

    def test_flat_too_big(self):
        m = Machine()
        with pytest.raises(LoadError):
            m.load_firmware(bytes(m.bus.ram_size + 4), fmt="bin", base=RAM_BASE)

    def test_flat_outside_ram(self):
        m = Machine()
        with pytest.raises(LoadError, match="0x00001000"):
            m.load_firmware(b"\x13\x00\x00\x00", fmt="bin", base=0x1000)

    def test_elf_entry_honored(self):
        body = words_to_bytes([0x00000013] * 32)
        elf = make_elf([(RAM_BASE, body)], entry=RAM_BASE + 0x40)
        m = Machine()
        assert m.load_firmware(elf, fmt="elf") == RAM_BASE + 0x40
        assert m.hart.pc == RAM_BASE + 0x40

    def test_elf_segment_outside_ram_names_address(self):
        elf = make_elf([(0x00001000, b"\x13\x00\x00\x00")], entry=RAM_BASE)
        m = Machine()
        with pytest.raises(LoadError, match="0x00001000"):
            m.load_firmware(elf, fmt="elf")

    def test_elf_bss_zero_fill(self):
        m = Machine()
        for i in range(8):
            m.bus.write(RAM_BASE + 0x100 + i, 1, 0xEE)
        elf = make_elf([(RAM_BASE + 0x100, b"\xAA", 8),
                        (RAM_BASE, words_to_bytes([0x13]))], entry=RAM_BASE)
        m.load_firmware(elf, fmt="elf")
        assert m.bus.read(RAM_BASE + 0x100, 1) == 0xAA
        for i in range(1, 8):
            assert m.bus.read(RAM_BASE + 0x100 + i, 1) == 0

    def test_malformed_elf(self):
        m = Machine()
        with pytest.raises(LoadError, match="not an ELF"):
            m.load_firmware(b"garbage", fmt="elf")

    def test_wrong_class_elf(self):
        elf = bytearray(make_elf([(RAM_BASE, b"\x13\x00\x00\x00")], RAM_BASE))
        elf[4] = 2  # 64-bit
        m = Machine()
        with pytest.raises(LoadError, match="not 32-bit"):
            m.load_firmware(bytes(elf), fmt="elf")


class TestStimulus:
    def test_parse_rejects_unknown_command(self):
        with pytest.raises(StimulusError):
            parse_stimulus("0 explode now")

    def test_parse_comments_and_blanks(self):
        entries = parse_stimulus("""
        # comment
        5 set_switches 0xCAFE
        3 uart_in 4142
        """)
        assert [e[0] for e in entries] == [3, 5]

    def test_applied_at_exact_instret(self):
        m = boot([enc("lui", rd=1, imm=GPSPECIAL_BASE >> 12),
                  enc("addi", rd=1, rs1=1, imm=GPSPECIAL_BASE & 0xFFF),
                  enc("lw", rd=2, rs1=1, imm=4),
                  enc("lw", rd=3, rs1=1, imm=4)])
        m.load_stimulus("3 set_switches 0xCAFE")
        m.step()
        m.step()
        m.step()  # reads switches at instret=2: still 0
        m.step()  # stimulus applied at the boundary where minstret hits 3
        assert m.hart.x[2] == 0
        assert m.hart.x[3] == 0xCAFE


class TestSnapshot:
    def test_zero_step_round_trip(self):
        m = boot([enc("addi", rd=1, rs1=0, imm=3)] * 10)
        m.run(max_instret=5)
        snap = m.snapshot(include_ram=True)
        m2 = boot([0x00000013])
        m2.restore(snap)
        assert m2.snapshot(include_ram=True) == snap

    def test_trace_continues_identically(self):
        prog = ([enc("addi", rd=1, rs1=1, imm=1),
                 enc("sw", rs1=28, rs2=1, imm=0),
                 enc("lw", rd=2, rs1=28, imm=0),
                 enc("add", rd=3, rs1=2, rs2=1)] * 10)
        setup = [enc("lui", rd=28, imm=0x80010)]
        full = boot(setup + prog)
        full.run(max_instret=12)
        snap = full.snapshot(include_ram=True)

        lines_a = []
        full.trace = lines_a.append
        full.run(max_instret=10)

        resumed = boot(setup + prog)
        resumed.restore(snap)
        lines_b = []
        resumed.trace = lines_b.append
        resumed.run(max_instret=10)
        assert lines_a == lines_b

    def test_snapshot_json_serializable(self):
        import json
        m = boot([0x00000013])
        m.step()
        json.dumps(m.snapshot())


class TestReset:
    def test_reset_restores_boot_state(self):
        m = boot([enc("addi", rd=1, rs1=0, imm=5),
                  enc("sw", rs1=28, rs2=1, imm=0)])
        m.run(max_instret=2)
        m.gpspecial.set_switches(0x1234)
        m.reset()
        assert m.hart.pc == RAM_BASE
        assert m.hart.x[1] == 0
        assert m.hart.minstret == 0
        assert m.hart.mcycle == 2  # fill
        assert m.gpspecial.switches == 0
        assert m.bus.read(RAM_BASE, 4) == enc("addi", rd=1, rs1=0, imm=5)

    def test_reset_replays_identically(self):
        prog = [enc("addi", rd=1, rs1=1, imm=1)] * 6
        m = boot(prog)
        m.run(max_instret=6)
        first = (m.hart.x[1], m.hart.mcycle)
        m.reset()
        m.run(max_instret=6)
        assert (m.hart.x[1], m.hart.mcycle) == first
