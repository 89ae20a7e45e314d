// Panel state machine, independent of DOM and transport so it can be
// driven by unit tests and by the live-server integration test.
//
// Ground rule: LED/switch/GPIO state shown to the user always comes from
// server events or snapshots -- the panel never simulates the guest.  A
// switch toggle only *requests* the new value; the display changes when
// the refreshed snapshot arrives.

import type { Command, GpioPortName, ServerMessage, Snapshot } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";
export type RunState = "running" | "paused" | "unknown";

// Omit distributed over the Command union (plain Omit collapses it).
type DistributiveOmit<T, K extends keyof never> = T extends unknown ? Omit<T, K> : never;
type UnsentCommand = DistributiveOmit<Command, "id">;

export interface GpioView {
  dir: number;
  out: number;
  in: number;
  ext: number;
}

export interface PanelHooks {
  onChange?: () => void;
  onUartData?: (bytes: Uint8Array) => void;
}

const UART_SCROLLBACK_LIMIT = 16384;

export class PanelCore {
  connection: ConnectionState = "connecting";
  runState: RunState = "unknown";
  pc = 0;
  instret = 0;
  mcycle = 0;
  leds = 0;
  switches = 0;
  regs: number[] = new Array(32).fill(0);
  gpio: Record<GpioPortName, GpioView> = {
    a: { dir: 0, out: 0, in: 0, ext: 0 },
    b: { dir: 0, out: 0, in: 0, ext: 0 },
    c: { dir: 0, out: 0, in: 0, ext: 0 },
  };
  breakpoints = new Set<number>();
  uartScrollback: number[] = [];
  lastHalt: { reason: string; pc: number } | null = null;
  lastError: string | null = null;
  /** commands sent but not yet acked, id -> cmd name */
  pending = new Map<number, string>();
  droppedEvents = 0;

  private lastSeq = 0;
  private nextId = 1;
  private snapshotInFlight = false;

  constructor(
    private readonly sendFn: (cmd: Command) => void,
    private readonly hooks: PanelHooks = {},
  ) {}

  // -- transport lifecycle --------------------------------------------------

  attach(): void {
    this.connection = "connected";
    this.lastSeq = 0;
    this.snapshotInFlight = false;
    this.changed();
  }

  detach(): void {
    this.connection = "disconnected";
    this.runState = "unknown";
    this.pending.clear();
    this.snapshotInFlight = false;
    this.changed();
  }

  get controlsEnabled(): boolean {
    return this.connection === "connected";
  }

  // -- inbound --------------------------------------------------------------

  handleMessage(msg: ServerMessage): void {
    if (typeof msg.seq === "number") {
      if (this.lastSeq !== 0 && msg.seq !== this.lastSeq + 1) {
        this.requestSnapshot(); // gap: events were dropped, resync
      }
      this.lastSeq = msg.seq;
    }
    if (typeof msg.dropped === "number" && msg.dropped > this.droppedEvents) {
      this.droppedEvents = msg.dropped;
      this.requestSnapshot();
    }
    switch (msg.event) {
      case "ack":
        this.handleAck(msg);
        break;
      case "snapshot":
        if (msg.snapshot) this.applySnapshot(msg.snapshot);
        break;
      case "led":
        this.leds = msg.value ?? this.leds;
        break;
      case "gpio":
        if (msg.port) {
          const view = this.gpio[msg.port];
          view.dir = msg.dir ?? view.dir;
          view.out = msg.out ?? view.out;
          view.in = msg.in ?? view.in;
        }
        break;
      case "uart_out":
        if (msg.hex) this.pushUart(msg.hex);
        break;
      case "halted":
        this.runState = "paused";
        this.lastHalt = { reason: msg.reason ?? "?", pc: msg.pc ?? this.pc };
        if (typeof msg.pc === "number") this.pc = msg.pc;
        break;
      case "stepped":
        if (typeof msg.pc === "number") this.pc = msg.pc;
        if (typeof msg.instret === "number") this.instret = msg.instret;
        break;
      case "error":
        this.lastError = msg.error ?? "unknown error";
        break;
    }
    this.changed();
  }

  private handleAck(msg: ServerMessage): void {
    const cmd = msg.id !== undefined ? this.pending.get(msg.id) : undefined;
    if (msg.id !== undefined) this.pending.delete(msg.id);
    if (msg.ok === false) {
      this.lastError = msg.error ?? "command failed";
      return;
    }
    if (msg.snapshot) {
      this.applySnapshot(msg.snapshot);
    }
    switch (cmd) {
      case "run":
        this.runState = "running";
        break;
      case "reset":
        if (typeof msg.pc === "number") this.pc = msg.pc;
        this.requestSnapshot();
        break;
      case "step":
        if (typeof msg.pc === "number") this.pc = msg.pc;
        if (typeof msg.instret === "number") this.instret = msg.instret;
        break;
      case "set_switches":
      case "set_gpio":
        // display state must come from the machine, not the click
        this.requestSnapshot();
        break;
    }
  }

  private applySnapshot(snap: Snapshot): void {
    this.pc = snap.pc;
    this.instret = snap.minstret;
    this.mcycle = snap.mcycle;
    this.leds = snap.leds;
    this.switches = snap.switches;
    this.regs = snap.x.slice();
    for (const port of ["a", "b", "c"] as GpioPortName[]) {
      const g = snap.gpio[port];
      const eff = (g.ext_in & ~g.dir) | (g.out & g.dir);
      this.gpio[port] = { dir: g.dir, out: g.out, in: eff & 0xff, ext: g.ext_in };
    }
    if (this.runState === "unknown") {
      this.runState = "paused"; // the server boots paused at reset
    }
    this.snapshotInFlight = false;
  }

  private pushUart(hex: string): void {
    const bytes = new Uint8Array(hex.length >> 1);
    for (let i = 0; i < bytes.length; i++) {
      bytes[i] = parseInt(hex.substring(2 * i, 2 * i + 2), 16);
    }
    for (const b of bytes) this.uartScrollback.push(b);
    if (this.uartScrollback.length > UART_SCROLLBACK_LIMIT) {
      this.uartScrollback.splice(0, this.uartScrollback.length - UART_SCROLLBACK_LIMIT);
    }
    this.hooks.onUartData?.(bytes);
  }

  private changed(): void {
    this.hooks.onChange?.();
  }

  // -- outbound (user actions -> protocol commands) ---------------------------

  private send(cmd: UnsentCommand): number {
    const id = this.nextId++;
    this.pending.set(id, cmd.cmd);
    this.sendFn({ ...cmd, id } as Command);
    return id;
  }

  /** Toggle one switch; dispatches the full 16-bit value. */
  toggleSwitch(index: number): void {
    if (!this.controlsEnabled) return;
    this.send({ cmd: "set_switches", value: (this.switches ^ (1 << index)) & 0xffff });
  }

  setSwitches(value: number): void {
    if (!this.controlsEnabled) return;
    this.send({ cmd: "set_switches", value: value & 0xffff });
  }

  /** Toggle an externally driven GPIO pin level. */
  toggleGpioPin(port: GpioPortName, pin: number): void {
    if (!this.controlsEnabled) return;
    const value = (this.gpio[port].ext ^ (1 << pin)) & 0xff;
    this.send({ cmd: "set_gpio", port, value });
  }

  run(limits: { max_instret?: number; max_cycles?: number } = {}): void {
    if (!this.controlsEnabled) return;
    this.send({ cmd: "run", ...limits });
  }

  pause(): void {
    if (!this.controlsEnabled) return;
    this.send({ cmd: "pause" });
  }

  step(n = 1): void {
    if (!this.controlsEnabled) return;
    this.send({ cmd: "step", n });
  }

  reset(): void {
    if (!this.controlsEnabled) return;
    this.send({ cmd: "reset" });
  }

  addBreakpoint(addr: number): void {
    if (!this.controlsEnabled) return;
    this.breakpoints.add(addr >>> 0);
    this.send({ cmd: "set_breakpoint", addr: addr >>> 0 });
  }

  removeBreakpoint(addr: number): void {
    if (!this.controlsEnabled) return;
    this.breakpoints.delete(addr >>> 0);
    this.send({ cmd: "clear_breakpoint", addr: addr >>> 0 });
  }

  /** Byte-transparent terminal input; no local echo. */
  sendUartBytes(bytes: Uint8Array | number[]): void {
    if (!this.controlsEnabled || bytes.length === 0) return;
    let hex = "";
    for (const b of bytes) hex += (b & 0xff).toString(16).padStart(2, "0");
    this.send({ cmd: "uart_in", hex });
  }

  sendUartText(text: string): void {
    this.sendUartBytes(new TextEncoder().encode(text));
  }

  requestSnapshot(): void {
    if (this.connection !== "connected" || this.snapshotInFlight) return;
    this.snapshotInFlight = true;
    this.send({ cmd: "get_snapshot" });
  }
}
