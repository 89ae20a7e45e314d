"""Control-protocol server.

One TCP port speaks three dialects, sniffed per connection:

  * newline-delimited JSON (the native protocol; used by tests and tools),
  * WebSocket carrying the same JSON payloads (for the browser panel),
  * plain HTTP GET for the panel's static assets.

The simulation runs on its own thread; socket threads never touch guest
state.  Commands cross over as closures executed at step boundaries, events
come back through bounded per-client buffers, so a slow client can only
lose events (visible as a seq gap), never stall stepping.
"""

import base64
import hashlib
import json
import mimetypes
import os
import queue
import socket
import struct
import threading
from typing import Callable, Optional

from .machine import Machine, StepOutcome

DEFAULT_PORT = 9800
EVENT_BUFFER_LIMIT = 1024
_WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class _Future:
    """Single-shot result handoff from the sim thread."""

    def __init__(self):
        self._done = threading.Event()
        self._result = None
        self._error: Optional[BaseException] = None

    def set(self, result):
        self._result = result
        self._done.set()

    def set_error(self, exc: BaseException):
        self._error = exc
        self._done.set()

    def wait(self, timeout: float):
        if not self._done.wait(timeout):
            raise TimeoutError("simulation thread did not respond")
        if self._error is not None:
            raise self._error
        return self._result


class MachineHost:
    """Runs the machine on a dedicated thread and fans events out."""

    def __init__(self, machine: Machine):
        self.machine = machine
        machine.on_event = self.publish
        self._subscribers: list["_Connection"] = []
        self._sub_lock = threading.Lock()
        self._run_limits: dict = {}
        self._shutdown = False
        self._thread = threading.Thread(target=self._sim_loop,
                                        name="rvmcu-sim", daemon=True)

    def start(self):
        self._thread.start()

    def shutdown(self):
        self._shutdown = True
        self.machine.post(lambda m: setattr(m, "run_state", "paused"))
        self._thread.join(timeout=5)

    def _sim_loop(self):
        m = self.machine
        while not self._shutdown:
            fn = m.next_command(timeout=0.05)
            if fn is not None:
                fn(m)
            if self._shutdown:
                break
            if m.run_state == "running":
                reason = m.run(**self._run_limits)
                if not self._shutdown:
                    self.publish({"event": "halted", "reason": reason,
                                  "pc": m.hart.pc})

    def control(self, fn: Callable[[Machine], dict], timeout: float = 30.0) -> dict:
        """Run `fn` on the sim thread at a step boundary; return its value."""
        fut = _Future()

        def wrapped(m):
            try:
                fut.set(fn(m))
            except BaseException as e:
                fut.set_error(e)

        self.machine.post(wrapped)
        return fut.wait(timeout)

    def publish(self, event: dict):
        with self._sub_lock:
            subs = list(self._subscribers)
        for conn in subs:
            conn.enqueue_event(event)

    def attach(self, conn: "_Connection"):
        with self._sub_lock:
            self._subscribers.append(conn)
        self.control(lambda m: setattr(m, "debug_attached", True) or {})

    def detach(self, conn: "_Connection"):
        with self._sub_lock:
            if conn in self._subscribers:
                self._subscribers.remove(conn)
            attached = bool(self._subscribers)
        try:
            self.control(lambda m: setattr(m, "debug_attached", attached) or {},
                         timeout=5.0)
        except TimeoutError:
            pass

    # -- command handlers (each returns the ack payload) ----------------------

    def handle(self, msg: dict) -> dict:
        cmd = msg.get("cmd")
        handler = _COMMANDS.get(cmd)
        if handler is None:
            return {"ok": False, "error": f"unknown cmd: {cmd!r}"}
        try:
            return handler(self, msg)
        except (KeyError, TypeError, ValueError) as e:
            return {"ok": False, "error": f"bad arguments for {cmd}: {e}"}
        except TimeoutError as e:
            return {"ok": False, "error": str(e)}


def _arg_int(msg: dict, key: str, lo: int, hi: int) -> int:
    value = msg[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{key} must be an integer")
    if not lo <= value <= hi:
        raise ValueError(f"{key} out of range [{lo}, {hi}]")
    return value


def _cmd_run(host: MachineHost, msg: dict) -> dict:
    limits = {}
    if "max_instret" in msg:
        limits["max_instret"] = _arg_int(msg, "max_instret", 0, 1 << 62)
    if "max_cycles" in msg:
        limits["max_cycles"] = _arg_int(msg, "max_cycles", 0, 1 << 62)

    def fn(m):
        if m.run_state == "running":
            return {"ok": False, "error": "already running"}
        host._run_limits = limits
        m.run_state = "running"
        return {"ok": True}

    return host.control(fn)


def _cmd_pause(host: MachineHost, msg: dict) -> dict:
    def fn(m):
        m.run_state = "paused"
        m.halt_cause = "pause"
        return {"ok": True}
    return host.control(fn)


def _cmd_step(host: MachineHost, msg: dict) -> dict:
    n = _arg_int(msg, "n", 1, 1_000_000) if "n" in msg else 1

    def fn(m):
        if m.run_state == "running":
            return {"ok": False, "error": "pause before stepping"}
        outcome = None
        for _ in range(n):
            outcome = m.step()
            if outcome is StepOutcome.HIT_BREAKPOINT:
                break
        host.publish({"event": "stepped", "pc": m.hart.pc,
                      "instret": m.hart.minstret,
                      "outcome": outcome.value if outcome else None})
        return {"ok": True, "pc": m.hart.pc, "instret": m.hart.minstret,
                "outcome": outcome.value if outcome else None}

    return host.control(fn)


def _cmd_reset(host: MachineHost, msg: dict) -> dict:
    def fn(m):
        m.reset()
        return {"ok": True, "pc": m.hart.pc}
    ack = host.control(fn)
    if ack.get("ok"):
        host.publish({"event": "snapshot",
                      "snapshot": host.control(lambda m: m.snapshot())})
    return ack


def _cmd_set_switches(host: MachineHost, msg: dict) -> dict:
    value = _arg_int(msg, "value", 0, 0xFFFF)
    return host.control(
        lambda m: m.gpspecial.set_switches(value) or {"ok": True})


def _cmd_set_gpio(host: MachineHost, msg: dict) -> dict:
    port = msg["port"]
    if port not in ("a", "b", "c"):
        raise ValueError(f"port must be 'a', 'b' or 'c', got {port!r}")
    value = _arg_int(msg, "value", 0, 0xFF)
    return host.control(
        lambda m: m.gpio[port].set_external(value) or {"ok": True})


def _cmd_uart_in(host: MachineHost, msg: dict) -> dict:
    data = bytes.fromhex(msg["hex"])
    return host.control(lambda m: m.uart.inject(data) or {"ok": True})


def _cmd_set_breakpoint(host: MachineHost, msg: dict) -> dict:
    addr = _arg_int(msg, "addr", 0, 0xFFFFFFFF)
    if addr & 0x3:
        raise ValueError("breakpoint address must be 4-byte aligned")
    return host.control(
        lambda m: m.breakpoints.add(addr) or {"ok": True})


def _cmd_clear_breakpoint(host: MachineHost, msg: dict) -> dict:
    addr = _arg_int(msg, "addr", 0, 0xFFFFFFFF)
    return host.control(
        lambda m: m.breakpoints.discard(addr) or {"ok": True})


def _cmd_get_snapshot(host: MachineHost, msg: dict) -> dict:
    snap = host.control(lambda m: m.snapshot())
    return {"ok": True, "snapshot": snap}


_COMMANDS = {
    "run": _cmd_run,
    "pause": _cmd_pause,
    "step": _cmd_step,
    "reset": _cmd_reset,
    "set_switches": _cmd_set_switches,
    "set_gpio": _cmd_set_gpio,
    "uart_in": _cmd_uart_in,
    "set_breakpoint": _cmd_set_breakpoint,
    "clear_breakpoint": _cmd_clear_breakpoint,
    "get_snapshot": _cmd_get_snapshot,
}


class _Connection:
    """One client: shared outbound queue with per-connection seq numbers.

    Acks are never dropped; events beyond the buffer limit drop oldest-first
    and the next delivered message carries the running `dropped` count so
    clients notice even without checking seq.
    """

    def __init__(self, sock: socket.socket, send_frame):
        self._sock = sock
        self._send_frame = send_frame  # bytes-on-the-wire encoder
        self._queue: list = []
        self._lock = threading.Lock()
        self._ready = threading.Condition(self._lock)
        self._seq = 0
        self._dropped = 0
        self._announce_drops = False
        self.closed = False

    def _stamp(self, msg: dict, is_ack: bool):
        self._seq += 1
        out = dict(msg)
        out["seq"] = self._seq
        if self._announce_drops:
            out["dropped"] = self._dropped
            self._announce_drops = False
        return out, is_ack

    def enqueue_event(self, event: dict):
        with self._lock:
            if self.closed:
                return
            n_events = sum(1 for _m, ack in self._queue if not ack)
            if n_events >= EVENT_BUFFER_LIMIT:
                for i, (_m, ack) in enumerate(self._queue):
                    if not ack:
                        del self._queue[i]
                        self._dropped += 1
                        self._announce_drops = True
                        break
            self._queue.append(self._stamp(event, False))
            self._ready.notify()

    def enqueue_ack(self, ack: dict):
        with self._lock:
            if self.closed:
                return
            self._queue.append(self._stamp(ack, True))
            self._ready.notify()

    def writer_loop(self):
        while True:
            with self._lock:
                while not self._queue and not self.closed:
                    self._ready.wait(timeout=0.5)
                if self.closed and not self._queue:
                    return
                batch = self._queue[:]
                self._queue.clear()
            try:
                for msg, _ack in batch:
                    self._send_frame(self._sock, json.dumps(msg) + "\n")
            except OSError:
                self.close()
                return

    def close(self):
        with self._lock:
            self.closed = True
            self._ready.notify_all()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass


# -- wire encodings -----------------------------------------------------------

def _send_ndjson(sock: socket.socket, line: str):
    sock.sendall(line.encode("utf-8"))


def _send_ws(sock: socket.socket, line: str):
    payload = line.rstrip("\n").encode("utf-8")
    n = len(payload)
    if n < 126:
        header = struct.pack("!BB", 0x81, n)
    elif n < 1 << 16:
        header = struct.pack("!BBH", 0x81, 126, n)
    else:
        header = struct.pack("!BBQ", 0x81, 127, n)
    sock.sendall(header + payload)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf += chunk
    return buf


def _ws_read_message(sock: socket.socket) -> Optional[str]:
    """Read one text message; handles ping and close, ignores binary."""
    parts = []
    while True:
        head = _recv_exact(sock, 2)
        fin = head[0] & 0x80
        opcode = head[0] & 0x0F
        masked = head[1] & 0x80
        length = head[1] & 0x7F
        if length == 126:
            length = struct.unpack("!H", _recv_exact(sock, 2))[0]
        elif length == 127:
            length = struct.unpack("!Q", _recv_exact(sock, 8))[0]
        mask = _recv_exact(sock, 4) if masked else b"\x00" * 4
        payload = bytearray(_recv_exact(sock, length))
        for i in range(length):
            payload[i] ^= mask[i & 3]
        if opcode == 0x8:  # close
            try:
                sock.sendall(struct.pack("!BB", 0x88, 0))
            except OSError:
                pass
            return None
        if opcode == 0x9:  # ping -> pong
            sock.sendall(struct.pack("!BB", 0x8A, len(payload)) + bytes(payload))
            continue
        if opcode in (0x1, 0x0):
            parts.append(bytes(payload))
            if fin:
                return b"".join(parts).decode("utf-8", "replace")
            continue
        # pong / binary: ignore
        if fin:
            parts = []


class ControlServer:
    """Accept loop plus per-connection reader/writer threads."""

    def __init__(self, host: MachineHost, port: int = DEFAULT_PORT,
                 bind: str = "127.0.0.1", panel_dir: Optional[str] = None):
        self.host = host
        self.panel_dir = panel_dir
        self._listener = socket.create_server((bind, port))
        self.port = self._listener.getsockname()[1]
        self.bind = bind
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               name="rvmcu-accept", daemon=True)
        self._conns: list[_Connection] = []
        self._closing = False

    def start(self):
        self._accept_thread.start()

    def close(self):
        self._closing = True
        try:
            self._listener.close()
        except OSError:
            pass
        for conn in list(self._conns):
            conn.close()

    def serve_forever(self):
        self._accept_loop()

    def _accept_loop(self):
        while not self._closing:
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_client, args=(sock,),
                             daemon=True).start()

    def _serve_client(self, sock: socket.socket):
        # Dialect sniff: HTTP and WebSocket clients send their request line
        # immediately; a native client may connect and just listen, so an
        # empty peek after a short wait means ND-JSON.
        try:
            sock.settimeout(0.25)
            try:
                first = sock.recv(4, socket.MSG_PEEK)
            except (TimeoutError, socket.timeout):
                first = b""
            sock.settimeout(None)
        except OSError:
            sock.close()
            return
        if first.startswith(b"GET ") or first.startswith(b"HEAD") \
                or first.startswith(b"POST"):
            self._serve_http(sock)
        else:
            self._serve_protocol(sock, _send_ndjson, self._ndjson_reader)

    # -- protocol connections ---------------------------------------------------

    def _ndjson_reader(self, sock: socket.socket):
        fh = sock.makefile("rb")
        for raw in fh:
            yield raw.decode("utf-8", "replace")

    def _ws_reader(self, sock: socket.socket):
        while True:
            msg = _ws_read_message(sock)
            if msg is None:
                return
            yield msg

    def _serve_protocol(self, sock: socket.socket, send_frame, make_reader):
        conn = _Connection(sock, send_frame)
        self._conns.append(conn)
        self.host.attach(conn)
        writer = threading.Thread(target=conn.writer_loop, daemon=True)
        writer.start()
        # greeting snapshot so clients can render initial state
        try:
            conn.enqueue_event({"event": "snapshot",
                                "snapshot": self.host.control(lambda m: m.snapshot())})
        except TimeoutError:
            pass
        try:
            for line in make_reader(sock):
                line = line.strip()
                if not line:
                    continue
                try:
                    msg = json.loads(line)
                    if not isinstance(msg, dict):
                        raise ValueError("message must be a JSON object")
                except ValueError as e:
                    conn.enqueue_event({"event": "error",
                                        "error": f"malformed json: {e}"})
                    continue
                ack = self.host.handle(msg)
                reply = {"event": "ack", "id": msg.get("id"),
                         "ok": ack.pop("ok", True)}
                reply.update(ack)
                conn.enqueue_ack(reply)
        except (ConnectionError, OSError):
            pass
        finally:
            self.host.detach(conn)
            if conn in self._conns:
                self._conns.remove(conn)
            conn.close()

    # -- HTTP: websocket upgrade or static panel assets ---------------------------

    def _serve_http(self, sock: socket.socket):
        try:
            data = b""
            while b"\r\n\r\n" not in data:
                chunk = sock.recv(4096)
                if not chunk:
                    sock.close()
                    return
                data += chunk
                if len(data) > 65536:
                    sock.close()
                    return
            head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
            lines = head.split("\r\n")
            method, path, _ = lines[0].split(" ", 2)
            headers = {}
            for line in lines[1:]:
                if ":" in line:
                    k, v = line.split(":", 1)
                    headers[k.strip().lower()] = v.strip()
        except (OSError, ValueError):
            sock.close()
            return

        if "websocket" in headers.get("upgrade", "").lower():
            key = headers.get("sec-websocket-key", "")
            accept = base64.b64encode(
                hashlib.sha1((key + _WS_MAGIC).encode("ascii")).digest()
            ).decode("ascii")
            sock.sendall(
                b"HTTP/1.1 101 Switching Protocols\r\n"
                b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
                b"Sec-WebSocket-Accept: " + accept.encode("ascii") + b"\r\n\r\n")
            self._serve_protocol(sock, _send_ws, self._ws_reader)
            return

        self._serve_static(sock, method, path)

    def _serve_static(self, sock: socket.socket, method: str, path: str):
        def respond(status: str, body: bytes, ctype: str = "text/plain"):
            head = (f"HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\n"
                    f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n")
            try:
                sock.sendall(head.encode("latin-1") + body)
            except OSError:
                pass
            sock.close()

        if method not in ("GET", "HEAD"):
            respond("405 Method Not Allowed", b"method not allowed")
            return
        if self.panel_dir is None:
            respond("404 Not Found",
                    b"panel assets not enabled; run with --panel")
            return
        rel = path.split("?", 1)[0].lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.panel_dir, rel))
        root = os.path.realpath(self.panel_dir)
        if not full.startswith(root + os.sep) and full != root:
            respond("403 Forbidden", b"forbidden")
            return
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            respond("404 Not Found", b"not found")
            return
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            body = fh.read()
        respond("200 OK", body if method == "GET" else b"", ctype)
