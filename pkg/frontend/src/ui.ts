// DOM layer: builds the board widgets and keeps them in sync with the
// PanelCore state.  All user gestures translate into PanelCore calls,
// which in turn dispatch protocol commands; nothing here computes guest
// behavior.

import type { PanelCore } from "./core.js";
import type { GpioPortName } from "./protocol.js";

const hex32 = (v: number) => "0x" + (v >>> 0).toString(16).padStart(8, "0");

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, cls?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class PanelUi {
  private statusEl = el("div", "status");
  private runStateEl = el("span", "pill");
  private pcEl = el("span", "mono");
  private instretEl = el("span", "mono");
  private errorEl = el("div", "error");
  private ledEls: HTMLElement[] = [];
  private switchEls: HTMLButtonElement[] = [];
  private gpioPinEls: Record<GpioPortName, HTMLElement[]> =
    { a: [], b: [], c: [] };
  private terminalEl = el("pre", "terminal");
  private bpListEl = el("ul", "bp-list");
  private buttons: HTMLButtonElement[] = [];
  private decoder = new TextDecoder("latin1");

  constructor(private root: HTMLElement, private core: PanelCore) {
    this.build();
  }

  private button(label: string, onClick: () => void): HTMLButtonElement {
    const b = el("button", "ctl", label);
    b.addEventListener("click", onClick);
    this.buttons.push(b);
    return b;
  }

  private build(): void {
    const core = this.core;
    this.root.replaceChildren();

    // status bar
    this.statusEl.append(this.runStateEl, el("span", "", " pc="),
      this.pcEl, el("span", "", " instret="), this.instretEl);
    this.root.append(this.statusEl, this.errorEl);

    // run controls
    const controls = el("div", "controls");
    controls.append(
      this.button("Run", () => core.run()),
      this.button("Pause", () => core.pause()),
      this.button("Step", () => core.step(1)),
    );
    const stepN = el("input") as HTMLInputElement;
    stepN.type = "number";
    stepN.min = "1";
    stepN.value = "100";
    controls.append(
      stepN,
      this.button("Step N", () => core.step(Math.max(1, Number(stepN.value) || 1))),
      this.button("Reset", () => core.reset()),
    );
    this.root.append(controls);

    // breakpoints
    const bpRow = el("div", "controls");
    const bpInput = el("input") as HTMLInputElement;
    bpInput.placeholder = "0x80000010";
    bpRow.append(
      bpInput,
      this.button("Add breakpoint", () => {
        const addr = Number(bpInput.value);
        if (Number.isFinite(addr)) core.addBreakpoint(addr);
        this.render();
      }),
    );
    this.root.append(bpRow, this.bpListEl);

    // LEDs (bit 15 on the left, like a board silkscreen)
    const ledRow = el("div", "led-row");
    ledRow.append(el("span", "label", "LED"));
    for (let bit = 15; bit >= 0; bit--) {
      const dot = el("span", "led");
      dot.title = `LED${bit}`;
      this.ledEls[bit] = dot;
      ledRow.append(dot);
    }
    this.root.append(ledRow);

    // switches
    const swRow = el("div", "sw-row");
    swRow.append(el("span", "label", "SW"));
    for (let bit = 15; bit >= 0; bit--) {
      const sw = el("button", "sw") as HTMLButtonElement;
      sw.title = `SW${bit}`;
      sw.addEventListener("click", () => this.core.toggleSwitch(bit));
      this.switchEls[bit] = sw;
      this.buttons.push(sw);
      swRow.append(sw);
    }
    this.root.append(swRow);

    // GPIO ports
    const gpioBox = el("div", "gpio-box");
    for (const port of ["a", "b", "c"] as GpioPortName[]) {
      const row = el("div", "gpio-row");
      row.append(el("span", "label", `GPIO-${port.toUpperCase()}`));
      for (let pin = 7; pin >= 0; pin--) {
        const cell = el("span", "pin");
        cell.title = `${port.toUpperCase()}${pin}: click to drive the external level`;
        cell.addEventListener("click", () => this.core.toggleGpioPin(port, pin));
        this.gpioPinEls[port][pin] = cell;
        row.append(cell);
      }
      gpioBox.append(row);
    }
    this.root.append(gpioBox);

    // UART terminal: focus it and type; bytes go straight to the guest
    this.terminalEl.tabIndex = 0;
    this.terminalEl.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") core.sendUartBytes([0x0d]);
      else if (ev.key === "Backspace") core.sendUartBytes([0x7f]);
      else if (ev.key.length === 1 && !ev.ctrlKey && !ev.metaKey) {
        core.sendUartText(ev.key);
      } else {
        return;
      }
      ev.preventDefault();
    });
    this.root.append(el("div", "label", "UART (click, then type)"),
      this.terminalEl);

    this.render();
  }

  render(): void {
    const core = this.core;
    const state = core.connection === "connected"
      ? core.runState : core.connection;
    this.runStateEl.textContent = state;
    this.runStateEl.dataset.state = state;
    this.pcEl.textContent = hex32(core.pc);
    this.instretEl.textContent = String(core.instret);
    this.errorEl.textContent = core.lastError ?? "";

    const enabled = core.controlsEnabled;
    for (const b of this.buttons) b.disabled = !enabled;

    for (let bit = 0; bit < 16; bit++) {
      this.ledEls[bit].classList.toggle("on", (core.leds >> bit & 1) === 1);
      const on = (core.switches >> bit & 1) === 1;
      this.switchEls[bit].classList.toggle("on", on);
      this.switchEls[bit].setAttribute("aria-pressed", String(on));
    }
    for (const port of ["a", "b", "c"] as GpioPortName[]) {
      const g = core.gpio[port];
      for (let pin = 0; pin < 8; pin++) {
        const cell = this.gpioPinEls[port][pin];
        cell.classList.toggle("hi", (g.in >> pin & 1) === 1);
        cell.classList.toggle("out", (g.dir >> pin & 1) === 1);
      }
    }
    this.bpListEl.replaceChildren(...[...core.breakpoints].sort().map((addr) => {
      const item = el("li", "mono", hex32(addr) + " ");
      const rm = el("button", "ctl", "x");
      rm.disabled = !enabled;
      rm.addEventListener("click", () => {
        core.removeBreakpoint(addr);
        this.render();
      });
      item.append(rm);
      return item;
    }));
  }

  appendUart(bytes: Uint8Array): void {
    this.terminalEl.textContent += this.decoder.decode(bytes);
    this.terminalEl.scrollTop = this.terminalEl.scrollHeight;
  }
}
