"""Device models: GPIO ports A/B/C, the GP-Special LED/switch block, UART
and SPI.  Each exposes a word-addressed register window to the bus and a
level output wired to its PLIC source.

Reads of undefined offsets return 0 and never mutate state; writes to
undefined or read-only offsets are ignored.
"""

from collections import deque
from typing import Callable, Optional

UART_RX_DEPTH = 64


class GpioPort:
    """8-pin port: direction, output latch, external input, per-pin
    level-match interrupt.

    Reading IN returns the output latch for output pins and the external
    level for input pins.  The interrupt level is asserted while any
    enabled pin's effective input matches its configured active level.
    """

    REGISTERS = [
        (0x00, "DIR (1=output)", "RW"),
        (0x04, "OUT", "RW"),
        (0x08, "IN", "RO"),
        (0x0C, "INT_EN", "RW"),
        (0x10, "INT_LEVEL (1=active-high)", "RW"),
        (0x14, "INT_STATUS", "RO"),
    ]

    def __init__(self, name: str,
                 irq: Optional[Callable[[bool], None]] = None,
                 on_change: Optional[Callable[[], None]] = None):
        self.name = name
        self._irq = irq
        self._on_change = on_change
        self.reset()

    def reset(self):
        self.dir = 0
        self.out = 0
        self.ext_in = 0
        self.int_en = 0
        self.int_level = 0
        self._sync()

    def effective_in(self) -> int:
        return ((self.ext_in & ~self.dir) | (self.out & self.dir)) & 0xFF

    def int_status(self) -> int:
        return self.int_en & ~(self.effective_in() ^ self.int_level) & 0xFF

    def irq_level(self) -> bool:
        return self.int_status() != 0

    def set_external(self, value: int):
        """Host-side pin drive; applied between instruction steps."""
        self.ext_in = value & 0xFF
        self._sync()

    def _sync(self):
        if self._irq:
            self._irq(self.irq_level())

    def read_reg(self, off: int) -> int:
        if off == 0x00:
            return self.dir
        if off == 0x04:
            return self.out
        if off == 0x08:
            return self.effective_in()
        if off == 0x0C:
            return self.int_en
        if off == 0x10:
            return self.int_level
        if off == 0x14:
            return self.int_status()
        return 0

    def write_reg(self, off: int, value: int):
        value &= 0xFF
        if off == 0x00:
            changed = self.dir != value
            self.dir = value
        elif off == 0x04:
            changed = self.out != value
            self.out = value
        elif off == 0x0C:
            changed = False
            self.int_en = value
        elif off == 0x10:
            changed = False
            self.int_level = value
        else:
            return
        self._sync()
        # change events fire only on actual pin-state changes, so a guest
        # rewriting the same value in a tight loop does not flood clients
        if changed and self._on_change:
            self._on_change()


class GpSpecial:
    """16 LEDs (write) and 16 switches (read-only, host-driven)."""

    REGISTERS = [
        (0x0, "LED", "RW"),
        (0x4, "SWITCH", "RO"),
    ]

    def __init__(self, on_led: Optional[Callable[[int], None]] = None):
        self._on_led = on_led
        self.reset()

    def reset(self):
        self.led = 0
        self.switches = 0

    def set_switches(self, value: int):
        self.switches = value & 0xFFFF

    def read_reg(self, off: int) -> int:
        if off == 0x0:
            return self.led
        if off == 0x4:
            return self.switches
        return 0

    def write_reg(self, off: int, value: int):
        if off == 0x0:
            value &= 0xFFFF
            changed = value != self.led
            self.led = value
            if changed and self._on_led:
                self._on_led(value)


class Uart:
    """Timing-free UART: TX completes instantly, RX is a 64-byte FIFO.

    Injecting into a full FIFO drops the newest byte and counts the drop.
    The PLIC level is (rx_valid & rx_irq_en) | (tx_ready & tx_irq_en) with
    tx_ready hardwired to 1.
    """

    REGISTERS = [
        (0x0, "TXDATA", "WO"),
        (0x4, "RXDATA", "RO"),
        (0x8, "STATUS (bit0 tx_ready, bit1 rx_valid)", "RO"),
        (0xC, "CTRL (bit0 rx-irq-en, bit1 tx-irq-en)", "RW"),
    ]

    def __init__(self, tx: Optional[Callable[[int], None]] = None,
                 irq: Optional[Callable[[bool], None]] = None):
        self._tx = tx
        self._irq = irq
        self.reset()

    def reset(self):
        self.rx_fifo: deque = deque()
        self.ctrl = 0
        self.rx_dropped = 0
        self._sync()

    def inject(self, data: bytes):
        """Host-to-guest bytes; beyond capacity the newest are dropped."""
        for b in data:
            if len(self.rx_fifo) >= UART_RX_DEPTH:
                self.rx_dropped += 1
            else:
                self.rx_fifo.append(b & 0xFF)
        self._sync()

    def irq_level(self) -> bool:
        rx = bool(self.rx_fifo) and bool(self.ctrl & 1)
        tx = bool(self.ctrl & 2)  # tx_ready is always 1
        return rx or tx

    def _sync(self):
        if self._irq:
            self._irq(self.irq_level())

    def read_reg(self, off: int) -> int:
        if off == 0x4:
            value = self.rx_fifo.popleft() if self.rx_fifo else 0
            self._sync()
            return value
        if off == 0x8:
            return 1 | (2 if self.rx_fifo else 0)
        if off == 0xC:
            return self.ctrl
        return 0

    def write_reg(self, off: int, value: int):
        if off == 0x0:
            if self._tx:
                self._tx(value & 0xFF)
        elif off == 0xC:
            self.ctrl = value & 0x3
            self._sync()


class LoopbackSlave:
    """Default SPI slave: echoes every byte."""

    def transfer(self, byte: int) -> int:
        return byte & 0xFF


class ScriptedSlave:
    """SPI slave replaying a fixed response sequence, then 0xFF."""

    def __init__(self, responses):
        self._responses = deque(int(b) & 0xFF for b in responses)

    def transfer(self, byte: int) -> int:
        return self._responses.popleft() if self._responses else 0xFF


class Spi:
    """Timing-free SPI master with a pluggable slave model.

    A DATA write shifts one byte and latches the response; transfers while
    disabled return 0xFF without touching the slave.  The divisor register
    is storage only.
    """

    REGISTERS = [
        (0x0, "CTRL (bit0 enable, bits2:1 mode, bit3 irq-en)", "RW"),
        (0x4, "DIV", "RW"),
        (0x8, "DATA (write shifts a byte; read returns last response)", "RW"),
        (0xC, "STATUS (bit0 ready, bit1 done)", "RO"),
    ]

    def __init__(self, slave=None, irq: Optional[Callable[[bool], None]] = None):
        self.slave = slave or LoopbackSlave()
        self._irq = irq
        self.reset()

    def reset(self):
        self.ctrl = 0
        self.div = 0
        self.last_rx = 0
        self.done = False
        self._sync()

    def transfer(self, byte: int) -> int:
        if not self.ctrl & 1:
            self.last_rx = 0xFF
            return 0xFF
        self.last_rx = self.slave.transfer(byte & 0xFF) & 0xFF
        self.done = True
        self._sync()
        return self.last_rx

    def irq_level(self) -> bool:
        return self.done and bool(self.ctrl & 8)

    def _sync(self):
        if self._irq:
            self._irq(self.irq_level())

    def read_reg(self, off: int) -> int:
        if off == 0x0:
            return self.ctrl
        if off == 0x4:
            return self.div
        if off == 0x8:
            self.done = False
            self._sync()
            return self.last_rx
        if off == 0xC:
            return 1 | (2 if self.done else 0)
        return 0

    def write_reg(self, off: int, value: int):
        if off == 0x0:
            self.ctrl = value & 0xF
            self._sync()
        elif off == 0x4:
            self.div = value & 0xFFFF
        elif off == 0x8:
            self.transfer(value & 0xFF)
