"""Top-level simulation loop.

Owns the hart, bus, interrupt fabric and devices; steps the guest one
instruction at a time with interrupt checks at step boundaries, charges
cycles, drives the CLINT clock, and writes trace records.

Threading contract: all guest state is owned by whichever single thread
calls step()/run().  Other threads interact only through post(), which
enqueues a closure executed at the next step boundary, so devices never
observe mid-instruction changes.
"""

import base64
import queue
from enum import Enum
from typing import Callable, NamedTuple, Optional

from .bus import (
    BusFault, CLINT_BASE, CLINT_SIZE, DEFAULT_BANK_SIZE, GPIOA_BASE,
    GPIOB_BASE, GPIOC_BASE, GPSPECIAL_BASE, PERIPH_WINDOW, PLIC_BASE,
    PLIC_SIZE, SPI_BASE, SystemBus, UART_BASE,
)
from .devices import GpSpecial, GpioPort, Spi, Uart
from .hart import (
    EXC_BREAKPOINT, EXC_ECALL_M, EXC_FETCH_FAULT, EXC_FETCH_MISALIGNED,
    EXC_ILLEGAL, EXC_LOAD_FAULT, EXC_LOAD_MISALIGNED, EXC_STORE_FAULT,
    EXC_STORE_MISALIGNED, Hart, IllegalCsrAccess, MIP_MTIP, Trap,
)
from .irq import (
    Clint, Plic, PLIC_SRC_GPIOA, PLIC_SRC_GPIOB, PLIC_SRC_GPIOC,
    PLIC_SRC_SPI, PLIC_SRC_UART, fabric_mip_view,
)
from .isa import (
    ALU_OPS, Instruction, KIND_ALU_RI, KIND_ALU_RR, KIND_AMO, KIND_AUIPC,
    KIND_BRANCH, KIND_CSR, KIND_JAL, KIND_JALR, KIND_LOAD, KIND_LR, KIND_LUI,
    KIND_SC, KIND_STORE, M32, decode, exec_rv32i, sign_extend,
)
from .loader import LoadError, load_elf, load_flat
from .timing import CLASS_LOAD, CycleReport, TimingParams, charge, classify

_DCACHE_LIMIT = 1 << 20
_WFI_CHUNK = 1024

_CSR_OP = {"csrrw": "rw", "csrrs": "rs", "csrrc": "rc",
           "csrrwi": "rw", "csrrsi": "rs", "csrrci": "rc"}
_CSR_IMM_FORMS = {"csrrwi", "csrrsi", "csrrci"}
_LOAD_WIDTH = {"lb": 1, "lbu": 1, "lh": 2, "lhu": 2, "lw": 4}
_STORE_WIDTH = {"sb": 1, "sh": 2, "sw": 4}


class StepOutcome(Enum):
    RETIRED = "retired"
    TRAPPED = "trapped"
    HIT_BREAKPOINT = "hit-breakpoint"
    WFI_IDLE = "wfi-idle"
    FAULT_STOP = "fault-stop"


class TraceRecord(NamedTuple):
    """Observable effects of one retired instruction or taken trap."""

    cycle: int
    pc: int
    raw: int
    rd: int = 0          # 0: no register writeback recorded
    rd_value: int = 0
    mem: Optional[tuple] = None   # (addr, value, 'R' | 'W')
    trap: Optional[int] = None    # mcause value


def format_trace_record(rec: TraceRecord) -> str:
    parts = [f"C:{rec.cycle} PC:{rec.pc:08x} I:{rec.raw:08x}"]
    if rec.rd:
        parts.append(f"x{rec.rd}={rec.rd_value:08x}")
    if rec.mem is not None:
        addr, value, kind = rec.mem
        parts.append(f"M[{addr:08x}]={value:08x}:{kind}")
    if rec.trap is not None:
        parts.append(f"TRAP:{rec.trap:08x}")
    return " ".join(parts)


class StimulusError(Exception):
    pass


def parse_stimulus(text: str):
    """Parse an instruction-indexed stimulus script.

    Lines are `<instr-index> <command> <args...>`; '#' starts a comment.
    Commands: set_switches V | set_gpio PORT V | uart_in HEXBYTES.
    Returns a list of (index, apply_fn) sorted by index, file order
    preserved within an index.
    """
    entries = []
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            idx = int(fields[0], 0)
            cmd = fields[1]
            if cmd == "set_switches":
                value = int(fields[2], 0)
                fn = lambda m, v=value: m.gpspecial.set_switches(v)
            elif cmd == "set_gpio":
                port, value = fields[2].lower(), int(fields[3], 0)
                if port not in ("a", "b", "c"):
                    raise ValueError(f"unknown GPIO port {port!r}")
                fn = lambda m, p=port, v=value: m.gpio[p].set_external(v)
            elif cmd == "uart_in":
                data = bytes.fromhex(fields[2])
                fn = lambda m, d=data: m.uart.inject(d)
            else:
                raise ValueError(f"unknown stimulus command {cmd!r}")
        except (IndexError, ValueError) as e:
            raise StimulusError(f"stimulus line {lineno}: {e}") from None
        entries.append((idx, fn))
    entries.sort(key=lambda e: e[0])
    return entries


class Machine:
    """One simulated SoC: hart + bus + fabric + devices + debug surface."""

    def __init__(self, bank_size: int = DEFAULT_BANK_SIZE,
                 timing: Optional[TimingParams] = None,
                 spi_slave=None,
                 uart_sink: Optional[Callable[[int], None]] = None,
                 on_event: Optional[Callable[[dict], None]] = None):
        self.timing = timing or TimingParams()
        self.timing.validate()
        self.on_event = on_event
        self.uart_sink = uart_sink
        self.uart_output = bytearray()

        self.hart = Hart()
        self.clint = Clint()
        self.plic = Plic()
        plic = self.plic
        self.gpio = {
            "a": GpioPort("A", irq=lambda lvl: plic.set_level(PLIC_SRC_GPIOA, lvl),
                          on_change=lambda: self._emit_gpio("a")),
            "b": GpioPort("B", irq=lambda lvl: plic.set_level(PLIC_SRC_GPIOB, lvl),
                          on_change=lambda: self._emit_gpio("b")),
            "c": GpioPort("C", irq=lambda lvl: plic.set_level(PLIC_SRC_GPIOC, lvl),
                          on_change=lambda: self._emit_gpio("c")),
        }
        self.gpspecial = GpSpecial(on_led=self._emit_led)
        self.uart = Uart(tx=self._uart_tx,
                         irq=lambda lvl: plic.set_level(PLIC_SRC_UART, lvl))
        self.spi = Spi(slave=spi_slave,
                       irq=lambda lvl: plic.set_level(PLIC_SRC_SPI, lvl))
        self.bus = SystemBus(bank_size=bank_size, devices=[
            (CLINT_BASE, CLINT_SIZE, "CLINT", self.clint),
            (PLIC_BASE, PLIC_SIZE, "PLIC", self.plic),
            (GPIOA_BASE, PERIPH_WINDOW, "GPIO-A", self.gpio["a"]),
            (GPIOB_BASE, PERIPH_WINDOW, "GPIO-B", self.gpio["b"]),
            (GPIOC_BASE, PERIPH_WINDOW, "GPIO-C", self.gpio["c"]),
            (GPSPECIAL_BASE, PERIPH_WINDOW, "GP-SPECIAL", self.gpspecial),
            (UART_BASE, PERIPH_WINDOW, "UART", self.uart),
            (SPI_BASE, PERIPH_WINDOW, "SPI", self.spi),
        ])

        self.breakpoints: set[int] = set()
        self.debug_attached = False
        self.run_state = "paused"
        self.halt_cause: Optional[str] = None
        self.trace: Optional[Callable[[str], None]] = None

        self._commands: queue.SimpleQueue = queue.SimpleQueue()
        self._stimulus: list = []
        self._stim_pos = 0
        self._firmware = None  # (data, fmt, base) for reset
        self._dcache: dict = {}
        self._tclass: dict = {}
        self._halt_skip: Optional[int] = None
        self._prev_was_load = False
        self._prev_rd = 0
        self._max_cycles: Optional[int] = None
        self._ram_limit = self.bus.ram_size - 4

        self.report = CycleReport()
        self._start_counters()

    # -- lifecycle -----------------------------------------------------------

    def _start_counters(self):
        self.hart.mcycle = self.timing.fill  # pipeline fill charged up front
        self.report = CycleReport()
        self.report.start(self.timing.fill)
        self._prev_was_load = False
        self._prev_rd = 0

    def reset(self):
        """Back to the reset state, firmware re-loaded, stimulus rewound."""
        self.hart.reset()
        self.clint.reset()
        self.plic.reset()
        for port in self.gpio.values():
            port.reset()
        self.gpspecial.reset()
        self.uart.reset()
        self.spi.reset()
        self.bus.reset_ram()
        self.uart_output.clear()
        self._halt_skip = None
        self._stim_pos = 0
        self.run_state = "paused"
        self.halt_cause = None
        self._start_counters()
        if self._firmware is not None:
            data, fmt, base = self._firmware
            self._load(data, fmt, base)

    def load_firmware(self, data: bytes, fmt: str = "elf",
                      base: int = 0x80000000) -> int:
        """Place firmware bytes and point the PC at the entry. fmt: 'elf'
        or 'bin' (flat image at `base`)."""
        entry = self._load(data, fmt, base)
        self._firmware = (data, fmt, base)
        return entry

    def _load(self, data: bytes, fmt: str, base: int) -> int:
        if fmt == "elf":
            entry = load_elf(self.bus, data)
        elif fmt == "bin":
            entry = load_flat(self.bus, data, base)
        else:
            raise LoadError(f"unknown firmware format {fmt!r}")
        if entry & 0x3 or not self.bus.in_ram(entry, 4):
            raise LoadError("entry point is not executable RAM", entry)
        self.hart.pc = entry
        return entry

    def load_stimulus(self, text: str):
        self._stimulus = parse_stimulus(text)
        self._stim_pos = 0

    # -- external-input plumbing ----------------------------------------------

    def post(self, fn: Callable[["Machine"], None]):
        """Thread-safe: queue a closure to run at the next step boundary."""
        self._commands.put(fn)

    def next_command(self, timeout: Optional[float] = None):
        """Blocking dequeue for the thread that owns the machine."""
        try:
            return self._commands.get(timeout=timeout)
        except queue.Empty:
            return None

    def drain_commands(self):
        # Bounded: a command that posts another command runs that follow-up
        # at the next boundary, so draining always terminates.
        q = self._commands
        for _ in range(q.qsize()):
            try:
                fn = q.get_nowait()
            except queue.Empty:
                return
            fn(self)

    def _apply_stimulus(self):
        stim = self._stimulus
        pos = self._stim_pos
        instret = self.hart.minstret
        while pos < len(stim) and stim[pos][0] <= instret:
            stim[pos][1](self)
            pos += 1
        self._stim_pos = pos

    def _emit(self, event: dict):
        if self.on_event is not None:
            self.on_event(event)

    def _emit_led(self, value: int):
        self._emit({"event": "led", "value": value})

    def _emit_gpio(self, port: str):
        p = self.gpio[port]
        self._emit({"event": "gpio", "port": port, "dir": p.dir,
                    "out": p.out, "in": p.effective_in()})

    def _uart_tx(self, byte: int):
        self.uart_output.append(byte)
        if self.uart_sink is not None:
            self.uart_sink(byte)
        self._emit({"event": "uart_out", "hex": f"{byte:02x}"})

    # -- the step -------------------------------------------------------------

    def _refresh_mip(self):
        self.hart.csr.mip = fabric_mip_view(self.clint, self.plic)

    def step(self) -> StepOutcome:
        """Execute at most one instruction; interrupts and breakpoints are
        decided at this boundary, before anything retires."""
        self._apply_stimulus()
        self.drain_commands()
        hart = self.hart

        if hart.halted_reason == "wfi":
            self._refresh_mip()
            if hart.csr.mip & hart.csr.mie:
                hart.halted_reason = None  # resume; trap decision is below
            else:
                cycles = self._wfi_sleep_cycles()
                hart.mcycle += cycles
                self.clint.tick(cycles)
                self.report.wfi_idle(cycles)
                return StepOutcome.WFI_IDLE

        self._refresh_mip()
        irq = hart.pending_interrupt()
        if irq is not None:
            pc = hart.pc
            hart.trap_enter(irq, pc)
            flush = self.timing.flush
            hart.mcycle += flush
            self.clint.tick(flush)
            self.report.interrupt(flush)
            self._prev_was_load = False
            if self.trace is not None:
                self._trace(TraceRecord(hart.mcycle, pc, 0, trap=irq.mcause_value))
            return StepOutcome.TRAPPED

        pc = hart.pc
        if pc in self.breakpoints and self._halt_skip != pc:
            self._halt_skip = pc
            self.halt_cause = "breakpoint"
            return StepOutcome.HIT_BREAKPOINT

        if pc & 0x3:
            # Unreachable if control-transfer checks hold; a misaligned PC
            # here is a simulator bug, not guest behavior.
            self.halt_cause = "internal: misaligned pc"
            return StepOutcome.FAULT_STOP

        word = 0
        try:
            word = self._fetch(pc)
            ins = self._decode_cached(word)
            if ins is None:
                raise Trap(EXC_ILLEGAL, word)
            if ins.mnemonic == "ebreak" and self.debug_attached:
                if self._halt_skip != pc:
                    self._halt_skip = pc
                    self.halt_cause = "ebreak"
                    return StepOutcome.HIT_BREAKPOINT
                # resuming over an attached-debugger EBREAK retires it as a NOP
                self._halt_skip = None
                self._commit(pc, ins, word, pc + 4, 0, 0, None, False)
                return StepOutcome.RETIRED
            self._halt_skip = None
            next_pc, rd, rd_val, mem, taken = self._exec(ins, pc)
        except Trap as t:
            flush = self.timing.flush
            hart.trap_enter(t, pc)
            hart.mcycle += 1 + flush
            self.clint.tick(1 + flush)
            self.report.exception(flush)
            self._prev_was_load = False
            if self.trace is not None:
                self._trace(TraceRecord(hart.mcycle, pc, word, trap=t.mcause_value))
            return StepOutcome.TRAPPED

        self._commit(pc, ins, word, next_pc, rd, rd_val, mem, taken)
        if ins.mnemonic == "wfi":
            hart.halted_reason = "wfi"
        return StepOutcome.RETIRED

    def _commit(self, pc, ins, word, next_pc, rd, rd_val, mem, taken):
        hart = self.hart
        if rd:
            hart.x[rd] = rd_val
        hart.pc = next_pc & M32
        hart.minstret += 1
        klass = self._tclass.get(ins.mnemonic)
        if klass is None:
            klass = classify(ins.mnemonic, ins.kind)
            self._tclass[ins.mnemonic] = klass
        cost, flush, load_use, extra = charge(
            self.timing, klass, taken,
            self._prev_was_load, self._prev_rd, ins.src1, ins.src2)
        hart.mcycle += cost
        self.clint.tick(cost)
        self.report.retire(klass, flush, load_use, extra)
        self._prev_was_load = klass == CLASS_LOAD
        self._prev_rd = ins.rd
        if self.trace is not None:
            self._trace(TraceRecord(hart.mcycle, pc, word,
                                    rd if rd else 0, rd_val, mem))

    def _trace(self, rec: TraceRecord):
        self.trace(format_trace_record(rec))

    def _fetch(self, pc: int) -> int:
        off = pc - self.bus.ram_base
        if 0 <= off <= self._ram_limit:
            return int.from_bytes(self.bus.ram[off:off + 4], "little")
        raise Trap(EXC_FETCH_FAULT, pc)

    def _decode_cached(self, word: int) -> Optional[Instruction]:
        cache = self._dcache
        ins = cache.get(word, False)
        if ins is False:
            if len(cache) >= _DCACHE_LIMIT:
                cache.clear()
            ins = decode(word)
            cache[word] = ins
        return ins

    def _wfi_sleep_cycles(self) -> int:
        clint = self.clint
        delta = _WFI_CHUNK
        if self.hart.csr.mie & MIP_MTIP and clint.mtimecmp > clint.mtime:
            delta = min(clint.mtimecmp - clint.mtime, _WFI_CHUNK)
        if self._max_cycles is not None:
            remaining = self._max_cycles - self.hart.mcycle
            if remaining > 0:
                delta = min(delta, remaining)
        return max(delta, 1)

    def _exec(self, ins: Instruction, pc: int):
        """Execute one decoded instruction.

        Returns (next_pc, rd, rd_value, mem_record, taken); raises Trap for
        guest exceptions.  No architectural effect precedes a raise.
        """
        hart = self.hart
        x = hart.x
        k = ins.kind
        m = ins.mnemonic

        if k == KIND_ALU_RR:
            return pc + 4, ins.rd, ALU_OPS[m](x[ins.rs1], x[ins.rs2]), None, False
        if k == KIND_ALU_RI:
            return pc + 4, ins.rd, ALU_OPS[m](x[ins.rs1], ins.imm), None, False
        if k == KIND_LUI:
            return pc + 4, ins.rd, ins.imm, None, False
        if k == KIND_AUIPC:
            return pc + 4, ins.rd, (pc + ins.imm) & M32, None, False

        if k == KIND_LOAD:
            addr = (x[ins.rs1] + ins.imm) & M32
            width = _LOAD_WIDTH[m]
            if addr & (width - 1):
                raise Trap(EXC_LOAD_MISALIGNED, addr)
            try:
                raw = self.bus.read(addr, width)
            except BusFault:
                raise Trap(EXC_LOAD_FAULT, addr) from None
            if m == "lb":
                val = sign_extend(raw, 8)
            elif m == "lh":
                val = sign_extend(raw, 16)
            else:
                val = raw
            return pc + 4, ins.rd, val, (addr, raw, "R"), False

        if k == KIND_STORE:
            addr = (x[ins.rs1] + ins.imm) & M32
            width = _STORE_WIDTH[m]
            if addr & (width - 1):
                raise Trap(EXC_STORE_MISALIGNED, addr)
            value = x[ins.rs2] & ((1 << (8 * width)) - 1)
            try:
                self.bus.write(addr, width, value)
            except BusFault:
                raise Trap(EXC_STORE_FAULT, addr) from None
            hart.reservation = None
            return pc + 4, 0, 0, (addr, value, "W"), False

        if k == KIND_BRANCH or k == KIND_JAL or k == KIND_JALR:
            out = exec_rv32i(ins, x[ins.rs1], x[ins.rs2], pc)
            if out.taken and out.target & 0x3:
                raise Trap(EXC_FETCH_MISALIGNED, out.target)
            rd, rd_val = 0, 0
            if out.link is not None and ins.rd:
                rd, rd_val = ins.rd, out.link
            return out.target, rd, rd_val, None, out.taken

        if k == KIND_AMO:
            addr = x[ins.rs1]
            if addr & 0x3:
                raise Trap(EXC_STORE_MISALIGNED, addr)
            try:
                old, new = self.bus.amo(addr, m, x[ins.rs2])
            except BusFault:
                raise Trap(EXC_STORE_FAULT, addr) from None
            hart.reservation = None
            return pc + 4, ins.rd, old, (addr, new, "W"), False

        if k == KIND_LR:
            addr = x[ins.rs1]
            if addr & 0x3:
                raise Trap(EXC_LOAD_MISALIGNED, addr)
            if not self.bus.in_ram(addr, 4):
                raise Trap(EXC_LOAD_FAULT, addr)
            val = self.bus.read(addr, 4)
            hart.lr(addr)
            return pc + 4, ins.rd, val, (addr, val, "R"), False

        if k == KIND_SC:
            addr = x[ins.rs1]
            if addr & 0x3:
                raise Trap(EXC_STORE_MISALIGNED, addr)
            if not self.bus.in_ram(addr, 4):
                raise Trap(EXC_STORE_FAULT, addr)
            if hart.sc(addr):
                value = x[ins.rs2]
                self.bus.write(addr, 4, value)
                return pc + 4, ins.rd, 0, (addr, value, "W"), False
            return pc + 4, ins.rd, 1, None, False

        if k == KIND_CSR:
            operand = ins.rs1 if m in _CSR_IMM_FORMS else x[ins.rs1]
            try:
                old = hart.csr_access(_CSR_OP[m], ins.imm, operand,
                                      operand_is_zero_register=ins.rs1 == 0)
            except IllegalCsrAccess:
                raise Trap(EXC_ILLEGAL, ins.raw) from None
            return pc + 4, ins.rd, old, None, False

        # KIND_SYSTEM and KIND_FENCE
        if m == "ecall":
            raise Trap(EXC_ECALL_M, 0)
        if m == "ebreak":
            raise Trap(EXC_BREAKPOINT, pc)
        if m == "mret":
            hart.mret()
            return hart.pc, 0, 0, None, True
        # wfi, fence, fence.i retire with no effect here
        return pc + 4, 0, 0, None, False

    # -- run loop --------------------------------------------------------------

    def run(self, max_instret: Optional[int] = None,
            max_cycles: Optional[int] = None) -> str:
        """Step until a breakpoint, a limit, an EBREAK halt, or an external
        pause.  Returns the stop reason."""
        hart = self.hart
        target_i = None if max_instret is None else hart.minstret + max_instret
        target_c = None if max_cycles is None else hart.mcycle + max_cycles
        self._max_cycles = target_c
        self.run_state = "running"
        self.halt_cause = None
        try:
            while True:
                self._apply_stimulus()
                self.drain_commands()
                if self.run_state != "running":
                    self.halt_cause = self.halt_cause or "pause"
                    return self.halt_cause
                if target_i is not None and hart.minstret >= target_i:
                    self.halt_cause = "limit-instret"
                    return self.halt_cause
                if target_c is not None and hart.mcycle >= target_c:
                    self.halt_cause = "limit-cycles"
                    return self.halt_cause
                out = self.step()
                if out is StepOutcome.HIT_BREAKPOINT:
                    return self.halt_cause or "breakpoint"
                if out is StepOutcome.FAULT_STOP:
                    return self.halt_cause or "fault"
        finally:
            self._max_cycles = None
            self.run_state = "paused"

    # -- snapshot / restore ------------------------------------------------------

    def snapshot(self, include_ram: bool = False) -> dict:
        """Serializable copy of hart + device state (RAM only on request)."""
        hart = self.hart
        c = hart.csr
        snap = {
            "version": 1,
            "pc": hart.pc,
            "x": list(hart.x),
            "csr": {
                "mstatus": c.mstatus, "mie": c.mie, "mip": c.mip,
                "mtvec": c.mtvec, "mscratch": c.mscratch, "mepc": c.mepc,
                "mcause": c.mcause, "mtval": c.mtval,
            },
            "mcycle": hart.mcycle,
            "minstret": hart.minstret,
            "reservation": hart.reservation,
            "halted_reason": hart.halted_reason,
            "prev_was_load": self._prev_was_load,
            "prev_rd": self._prev_rd,
            "clint": {"msip": self.clint.msip, "mtime": self.clint.mtime,
                      "mtimecmp": self.clint.mtimecmp},
            "plic": {"priority": list(self.plic.priority),
                     "enable": self.plic.enable,
                     "threshold": self.plic.threshold,
                     "levels": self.plic.levels,
                     "claimed": sorted(self.plic.claimed)},
            "gpio": {
                name: {"dir": p.dir, "out": p.out, "ext_in": p.ext_in,
                       "int_en": p.int_en, "int_level": p.int_level}
                for name, p in self.gpio.items()
            },
            "leds": self.gpspecial.led,
            "switches": self.gpspecial.switches,
            "uart": {"rx": list(self.uart.rx_fifo), "ctrl": self.uart.ctrl,
                     "dropped": self.uart.rx_dropped},
            "spi": {"ctrl": self.spi.ctrl, "div": self.spi.div,
                    "last_rx": self.spi.last_rx, "done": self.spi.done},
            "report": self.report.snapshot_state(),
        }
        if include_ram:
            snap["ram"] = base64.b64encode(bytes(self.bus.ram)).decode("ascii")
        return snap

    def restore(self, snap: dict):
        hart = self.hart
        c = hart.csr
        hart.pc = snap["pc"]
        hart.x = list(snap["x"])
        for name, value in snap["csr"].items():
            setattr(c, name, value)
        hart.mcycle = snap["mcycle"]
        hart.minstret = snap["minstret"]
        hart.reservation = snap["reservation"]
        hart.halted_reason = snap["halted_reason"]
        self._prev_was_load = snap["prev_was_load"]
        self._prev_rd = snap["prev_rd"]
        self.clint.msip = snap["clint"]["msip"]
        self.clint.mtime = snap["clint"]["mtime"]
        self.clint.mtimecmp = snap["clint"]["mtimecmp"]
        plic = self.plic
        plic.priority = list(snap["plic"]["priority"])
        plic.enable = snap["plic"]["enable"]
        plic.threshold = snap["plic"]["threshold"]
        plic.levels = snap["plic"]["levels"]
        plic.claimed = set(snap["plic"]["claimed"])
        for name, state in snap["gpio"].items():
            p = self.gpio[name]
            p.dir = state["dir"]
            p.out = state["out"]
            p.ext_in = state["ext_in"]
            p.int_en = state["int_en"]
            p.int_level = state["int_level"]
            p._sync()
        self.gpspecial.led = snap["leds"]
        self.gpspecial.switches = snap["switches"]
        self.uart.rx_fifo.clear()
        self.uart.rx_fifo.extend(snap["uart"]["rx"])
        self.uart.ctrl = snap["uart"]["ctrl"]
        self.uart.rx_dropped = snap["uart"]["dropped"]
        self.uart._sync()
        self.spi.ctrl = snap["spi"]["ctrl"]
        self.spi.div = snap["spi"]["div"]
        self.spi.last_rx = snap["spi"]["last_rx"]
        self.spi.done = snap["spi"]["done"]
        self.spi._sync()
        self.report.restore_state(snap["report"])
        if "ram" in snap:
            ram = base64.b64decode(snap["ram"])
            if len(ram) != len(self.bus.ram):
                raise ValueError("snapshot RAM size does not match this machine")
            self.bus.ram[:] = ram
        self._halt_skip = None
