"""Run configuration: flat ``key = value`` files with dotted keys.

Values are resolved with precedence command-line override > environment
(``RYDION_`` + upper-cased key, dots written as ``__``) > file > default.
Unknown keys are rejected.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from .errors import ConfigError

ENV_PREFIX = "RYDION_"
DEFAULT_SEED = 20240601


def _int_list(text: str) -> tuple[int, ...]:
    """``28:80:4`` (inclusive range) or ``40, 50, 60``."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise ValueError("range needs start:stop or start:stop:step")
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1
        if step <= 0:
            raise ValueError("range step must be positive")
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(",") if p.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("auto", "") else int(text)


def _spacing(text: str) -> str:
    t = text.strip().lower()
    if t not in ("log", "linear"):
        raise ValueError("spacing must be log or linear")
    return t


# key: (parser, default text)
SCHEMA: dict[str, tuple[Callable[[str], Any], str]] = {
    "species": (str.strip, "H"),
    "species.launch_channel": (int, "0"),
    "n0": (int, "57"),
    "n0_range": (_int_list, "28:80:4"),
    "omega_ghz": (float, "36.0"),
    "t_periods": (float, "327"),
    "t_list": (_float_list, "100, 327, 1000, 3270"),
    "grid.min": (float, "0.005"),
    "grid.max": (float, "0.5"),
    "grid.points": (int, "24"),
    "grid.spacing": (_spacing, "log"),
    "basis.margin_below": (_optional_int, "auto"),
    "basis.margin_above": (_optional_int, "auto"),
    "basis.absorber_width": (_optional_int, "auto"),
    "floquet.K": (_optional_int, "auto"),
    "floquet.photon_guard": (int, "2"),
    "floquet.coherent": (_bool, "false"),
    "absorber.factor": (float, "0.1"),
    "regime.eta": (float, "0.5"),
    "anderson.field_f0": (float, "0.05"),
    "anderson.target_ratio": (float, "1.0"),
    "anderson.steps": (int, "10000"),
    "validate.fields_f0": (_float_list, "0.005, 0.01, 0.02, 0.04, 0.08"),
    "validate.dt_per_period": (int, "256"),
    "seed": (int, str(DEFAULT_SEED)),
    "output.dir": (str.strip, "runs"),
}

POSITIVE = ("omega_ghz", "t_periods", "grid.min", "grid.max", "absorber.factor", "regime.eta",
            "anderson.field_f0", "anderson.target_ratio", "n0", "grid.points", "anderson.steps",
            "validate.dt_per_period")


def env_name(key: str) -> str:
    return ENV_PREFIX + key.upper().replace(".", "__")


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> value text`` pairs; ``#`` starts a comment, ``[section]`` prefixes keys."""
    raw: dict[str, str] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = f"{section}.{key}" if section else key
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _check_keys(raw: Mapping[str, str], source: str):
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {source}: {', '.join(unknown)}", unknown=unknown)


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, Any]
    sources: Mapping[str, str]

    def __getitem__(self, key: str):
        return self.values[key]

    def snapshot(self) -> dict[str, Any]:
        """Resolved values in schema order; tuples become lists."""
        return {k: list(v) if isinstance(v, tuple) else v for k, v in
                ((k, self.values[k]) for k in SCHEMA)}

    def as_text(self) -> str:
        out = []
        for k in SCHEMA:
            v = self.values[k]
            if v is None:
                v = "auto"
            elif isinstance(v, tuple):
                v = ", ".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            out.append(f"{k} = {v}")
        return "\n".join(out) + "\n"


def load(path: str | os.PathLike | None = None, overrides: list[str] | tuple[str, ...] = (),
         environ: Mapping[str, str] | None = None) -> RunConfig:
    environ = os.environ if environ is None else environ
    merged = {k: (d, "default") for k, (_, d) in SCHEMA.items()}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        raw = parse_text(text, str(p))
        _check_keys(raw, str(p))
        merged.update({k: (v, "file") for k, v in raw.items()})
    stray = sorted(k for k in environ if k.startswith(ENV_PREFIX)
                   and k not in {env_name(s) for s in SCHEMA})
    if stray:
        raise ConfigError(f"unknown {ENV_PREFIX}* environment variable(s): {', '.join(stray)}", unknown=stray)
    for key in SCHEMA:
        if env_name(key) in environ:
            merged[key] = (environ[env_name(key)], "env")
    flag_raw = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        k, v = (p.strip() for p in item.split("=", 1))
        flag_raw[k] = v
    _check_keys(flag_raw, "--override")
    merged.update({k: (v, "flag") for k, v in flag_raw.items()})

    values, sources = {}, {}
    for key, (text, src) in merged.items():
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(text)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r} ({src}): {text!r}: {exc}", key=key) from exc
        sources[key] = src
    for key in POSITIVE:
        if not values[key] > 0:
            raise ConfigError(f"{key} must be positive, got {values[key]}", key=key)
    if values["grid.min"] >= values["grid.max"]:
        raise ConfigError("grid.min must be below grid.max")
    for key in ("basis.margin_below", "basis.margin_above", "basis.absorber_width", "floquet.K"):
        if values[key] is not None and values[key] <= 0:
            raise ConfigError(f"{key} must be positive or auto", key=key)
    if any(n <= 0 for n in values["n0_range"]) or not values["n0_range"]:
        raise ConfigError("n0_range must hold positive integers")
    if any(t <= 0 for t in values["t_list"]):
        raise ConfigError("t_list must hold positive times")
    return RunConfig(values, sources)
