"""Run configuration: JSON config file merged with CLI flags.

Unknown keys are rejected outright; overrides are validated against bus
constraints before a machine is built.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

from .timing import TimingParams


class ConfigError(Exception):
    pass


_TOP_KEYS = {
    "firmware", "format", "base", "bank_size", "timing", "trace", "stimulus",
    "report", "port", "max_instret", "max_cycles",
}
_TIMING_KEYS = {"flush", "load_use", "mul", "div", "fill"}

MIN_BANK_SIZE = 0x1000
MAX_BANK_SIZE = 0x1000000


@dataclass
class Config:
    firmware: Optional[str] = None
    format: str = "elf"  # 'elf' | 'bin'
    base: int = 0x80000000
    bank_size: int = 0x8000
    timing: TimingParams = field(default_factory=TimingParams)
    trace: Optional[str] = None
    stimulus: Optional[str] = None
    report: Optional[str] = None
    port: int = 9800
    max_instret: Optional[int] = None
    max_cycles: Optional[int] = None

    def validate(self):
        if self.format not in ("elf", "bin"):
            raise ConfigError(f"unknown firmware format {self.format!r}")
        bs = self.bank_size
        if not isinstance(bs, int) or bs & (bs - 1) or not MIN_BANK_SIZE <= bs <= MAX_BANK_SIZE:
            raise ConfigError(
                f"bank_size must be a power of two in "
                f"[0x{MIN_BANK_SIZE:X}, 0x{MAX_BANK_SIZE:X}], got {bs!r}")
        if self.base & 0x3:
            raise ConfigError("flat-image base must be 4-byte aligned")
        try:
            self.timing.validate()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        for name in ("max_instret", "max_cycles"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 0):
                raise ConfigError(f"{name} must be a non-negative integer")
        if not isinstance(self.port, int) or not 0 <= self.port <= 65535:
            raise ConfigError(f"port must be 0..65535, got {self.port!r}")


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(f"{key} must be an integer")
    try:
        return int(value, 0) if isinstance(value, str) else value
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as an integer") from None


def load_config_file(path: str) -> Config:
    """Read a JSON config; every key optional, unknown keys rejected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = Config()
    for key in ("firmware", "format", "trace", "stimulus", "report"):
        if key in data:
            if not isinstance(data[key], str):
                raise ConfigError(f"{key} must be a string")
            setattr(cfg, key, data[key])
    for key in ("base", "bank_size", "port", "max_instret", "max_cycles"):
        if key in data:
            setattr(cfg, key, _as_int(data[key], key))
    if "timing" in data:
        t = data["timing"]
        if not isinstance(t, dict):
            raise ConfigError("timing must be an object")
        unknown = set(t) - _TIMING_KEYS
        if unknown:
            raise ConfigError(f"unknown timing keys: {', '.join(sorted(unknown))}")
        for key, value in t.items():
            setattr(cfg.timing, key, _as_int(value, f"timing.{key}"))
    cfg.validate()
    return cfg
