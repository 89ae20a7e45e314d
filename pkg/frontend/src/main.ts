// Bootstrap: connect a WebSocket to the serving rvmcu instance (same
// origin) and wire PanelCore to the DOM.  Reconnects forever with a short
// backoff; the core disables all controls while disconnected.

import { PanelCore } from "./core.js";
import { PanelUi } from "./ui.js";
import type { Command, ServerMessage } from "./protocol.js";

const RECONNECT_DELAY_MS = 1000;

let socket: WebSocket | null = null;

const core = new PanelCore(
  (cmd: Command) => {
    if (socket && socket.readyState === WebSocket.OPEN) {
      socket.send(JSON.stringify(cmd));
    }
  },
  {
    onChange: () => ui.render(),
    onUartData: (bytes) => ui.appendUart(bytes),
  },
);

const root = document.getElementById("panel");
if (!root) throw new Error("missing #panel element");
const ui = new PanelUi(root, core);

function connect(): void {
  const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  socket = new WebSocket(url);
  socket.onopen = () => core.attach();
  socket.onmessage = (ev) => {
    try {
      core.handleMessage(JSON.parse(String(ev.data)) as ServerMessage);
    } catch {
      // a malformed frame is a server bug; ignore rather than kill the UI
    }
  };
  socket.onclose = () => {
    core.detach();
    setTimeout(connect, RECONNECT_DELAY_MS);
  };
  socket.onerror = () => socket?.close();
}

connect();
