"""Command-line entry points: `rvmcu run`, `rvmcu map`, `rvmcu serve`.

Exit codes: 0 clean stop, 2 guest firmware load error, 3 configuration
error (including bad flags).
"""

import argparse
import os
import signal
import sys
import threading
from typing import Optional

from .config import Config, ConfigError, load_config_file
from .loader import LoadError
from .machine import Machine, StimulusError
from .server import ControlServer, MachineHost
from .timing import TimingParams

EXIT_OK = 0
EXIT_LOAD = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_firmware_args(p: argparse.ArgumentParser):
    p.add_argument("--elf", metavar="PATH", help="ELF32 firmware image")
    p.add_argument("--bin", metavar="PATH", help="flat binary firmware image")
    p.add_argument("--base", metavar="ADDR", default=None,
                   help="load address for --bin (default 0x80000000)")
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--bank-size", metavar="BYTES", default=None,
                   help="RAM bank size override (power of two)")


def _add_run_args(p: argparse.ArgumentParser):
    p.add_argument("--max-instret", metavar="N", default=None,
                   help="stop after N retired instructions")
    p.add_argument("--max-cycles", metavar="N", default=None,
                   help="stop once mcycle reaches N more cycles")
    p.add_argument("--trace", metavar="PATH", help="write a trace file")
    p.add_argument("--stimulus", metavar="PATH",
                   help="instruction-indexed stimulus script")
    p.add_argument("--report", metavar="PATH",
                   help="write the exit report here instead of stderr")
    p.add_argument("--uart", choices=["stdout", "none"], default="stdout",
                   help="where guest UART TX bytes go (default stdout)")
    p.add_argument("--uart-stdin", action="store_true",
                   help="feed host stdin bytes into the guest UART")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rvmcu",
                     description="RV32IMA+Zb* microcontroller simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="load firmware and run")
    _add_firmware_args(p_run)
    _add_run_args(p_run)

    p_map = sub.add_parser("map", help="print the memory map")
    p_map.add_argument("--config", metavar="PATH")
    p_map.add_argument("--bank-size", metavar="BYTES", default=None)

    p_serve = sub.add_parser("serve", help="serve the control protocol")
    _add_firmware_args(p_serve)
    p_serve.add_argument("--trace", metavar="PATH")
    p_serve.add_argument("--stimulus", metavar="PATH")
    p_serve.add_argument("--port", default=None,
                         help="TCP port (default 9800; env RVMCU_PORT overrides)")
    p_serve.add_argument("--bind", default="127.0.0.1")
    p_serve.add_argument("--panel", nargs="?", const="frontend/dist",
                         default=None, metavar="DIR",
                         help="serve the board panel's static assets")
    p_serve.add_argument("--autorun", action="store_true",
                         help="start running instead of paused at reset")
    return parser


def _parse_int(text, what: str) -> int:
    try:
        return int(text, 0)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: {text!r} is not an integer") from None


def make_config(args) -> Config:
    cfg = load_config_file(args.config) if getattr(args, "config", None) else Config()
    if getattr(args, "elf", None) and getattr(args, "bin", None):
        raise ConfigError("give either --elf or --bin, not both")
    if getattr(args, "elf", None):
        cfg.firmware, cfg.format = args.elf, "elf"
    elif getattr(args, "bin", None):
        cfg.firmware, cfg.format = args.bin, "bin"
    if getattr(args, "base", None) is not None:
        cfg.base = _parse_int(args.base, "--base")
    if getattr(args, "bank_size", None) is not None:
        cfg.bank_size = _parse_int(args.bank_size, "--bank-size")
    for name in ("max_instret", "max_cycles"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, _parse_int(value, f"--{name.replace('_', '-')}"))
    for name in ("trace", "stimulus", "report"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    port = getattr(args, "port", None)
    if port is None:
        port = os.environ.get("RVMCU_PORT")
    if port is not None:
        cfg.port = _parse_int(port, "--port")
    cfg.validate()
    return cfg


def build_machine(cfg: Config, uart_sink=None) -> Machine:
    timing = TimingParams(**{k: getattr(cfg.timing, k)
                             for k in ("flush", "load_use", "mul", "div", "fill")})
    machine = Machine(bank_size=cfg.bank_size, timing=timing, uart_sink=uart_sink)
    if cfg.firmware:
        try:
            with open(cfg.firmware, "rb") as fh:
                data = fh.read()
        except OSError as e:
            raise LoadError(f"cannot read firmware {cfg.firmware}: {e}") from None
        machine.load_firmware(data, fmt=cfg.format, base=cfg.base)
    if cfg.stimulus:
        try:
            with open(cfg.stimulus, "r", encoding="utf-8") as fh:
                machine.load_stimulus(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read stimulus {cfg.stimulus}: {e}") from None
    return machine


def _open_trace(machine: Machine, cfg: Config):
    if not cfg.trace:
        return None
    fh = open(cfg.trace, "w", encoding="utf-8", newline="\n")
    machine.trace = lambda line: fh.write(line + "\n")
    return fh


def _write_report(machine: Machine, cfg: Config):
    text = machine.report.to_kv(machine.hart.minstret)
    if cfg.report:
        with open(cfg.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)


def _start_uart_stdin(machine: Machine):
    def pump():
        stdin = sys.stdin.buffer
        while True:
            chunk = stdin.read(1)
            if not chunk:
                return
            machine.post(lambda m, c=chunk: m.uart.inject(c))

    threading.Thread(target=pump, name="rvmcu-stdin", daemon=True).start()


def cmd_run(args) -> int:
    try:
        cfg = make_config(args)
        if not cfg.firmware:
            raise ConfigError("run needs firmware: --elf or --bin")
        sink = None
        if args.uart == "stdout":
            out = sys.stdout.buffer

            def sink(byte):
                out.write(bytes((byte,)))
                out.flush()
        machine = build_machine(cfg, uart_sink=sink)
    except (ConfigError, StimulusError) as e:
        print(f"rvmcu: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except LoadError as e:
        print(f"rvmcu: load error: {e}", file=sys.stderr)
        return EXIT_LOAD

    if args.uart_stdin:
        _start_uart_stdin(machine)
    trace_fh = _open_trace(machine, cfg)
    try:
        reason = machine.run(max_instret=cfg.max_instret,
                             max_cycles=cfg.max_cycles)
        print(f"rvmcu: stopped: {reason} at pc=0x{machine.hart.pc:08x}",
              file=sys.stderr)
    except KeyboardInterrupt:
        print("rvmcu: interrupted", file=sys.stderr)
    finally:
        if trace_fh:
            trace_fh.close()
    _write_report(machine, cfg)
    return EXIT_OK


def cmd_map(args) -> int:
    try:
        cfg = make_config(args)
        machine = Machine(bank_size=cfg.bank_size)
    except ConfigError as e:
        print(f"rvmcu: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(machine.bus.map_markdown())
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        cfg = make_config(args)
        machine = build_machine(cfg)
        panel_dir = args.panel
        if panel_dir is not None and not os.path.isdir(panel_dir):
            raise ConfigError(f"panel directory {panel_dir!r} does not exist")
    except (ConfigError, StimulusError) as e:
        print(f"rvmcu: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except LoadError as e:
        print(f"rvmcu: load error: {e}", file=sys.stderr)
        return EXIT_LOAD

    trace_fh = _open_trace(machine, cfg)
    host = MachineHost(machine)
    host.start()
    if args.autorun:
        machine.post(lambda m: setattr(m, "run_state", "running"))
    try:
        server = ControlServer(host, port=cfg.port, bind=args.bind,
                               panel_dir=panel_dir)
    except OSError as e:
        print(f"rvmcu: cannot bind port {cfg.port}: {e}", file=sys.stderr)
        host.shutdown()
        return EXIT_CONFIG
    print(f"rvmcu: control listening on {server.bind}:{server.port}", flush=True)
    if panel_dir:
        print(f"rvmcu: panel at http://{server.bind}:{server.port}/", flush=True)

    def _graceful_exit(_sig, _frame):
        # run the finally block below so trace files are flushed and closed
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, _graceful_exit)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("rvmcu: shutting down", file=sys.stderr)
    finally:
        server.close()
        host.shutdown()
        if trace_fh:
            trace_fh.close()
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "map":
        return cmd_map(args)
    return cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
