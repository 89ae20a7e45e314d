// Wire shapes of the rvmcu control protocol (see docs/protocol.md in the
// repository root). One JSON object per ND-JSON line or WebSocket frame.

export type GpioPortName = "a" | "b" | "c";

export type Command =
  | { id: number; cmd: "run"; max_instret?: number; max_cycles?: number }
  | { id: number; cmd: "pause" }
  | { id: number; cmd: "step"; n?: number }
  | { id: number; cmd: "reset" }
  | { id: number; cmd: "set_switches"; value: number }
  | { id: number; cmd: "set_gpio"; port: GpioPortName; value: number }
  | { id: number; cmd: "uart_in"; hex: string }
  | { id: number; cmd: "set_breakpoint"; addr: number }
  | { id: number; cmd: "clear_breakpoint"; addr: number }
  | { id: number; cmd: "get_snapshot" };

export interface GpioState {
  dir: number;
  out: number;
  ext_in: number;
  int_en: number;
  int_level: number;
}

export interface Snapshot {
  version: number;
  pc: number;
  x: number[];
  mcycle: number;
  minstret: number;
  halted_reason: string | null;
  leds: number;
  switches: number;
  gpio: Record<GpioPortName, GpioState>;
  [key: string]: unknown;
}

export interface ServerMessage {
  event: string;
  seq: number;
  dropped?: number;
  // ack fields
  id?: number;
  ok?: boolean;
  error?: string;
  snapshot?: Snapshot;
  // event payloads
  value?: number;
  port?: GpioPortName;
  dir?: number;
  out?: number;
  in?: number;
  hex?: string;
  reason?: string;
  pc?: number;
  instret?: number;
  outcome?: string;
}
