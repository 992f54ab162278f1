"""Run configuration: INI or JSON input, strict schema, canonical serialization.

Both formats share one schema of sections and keys::

    [coefficient]  family, b, a, d, c, table
    [initial]      profile, A, sigma, c, lam, taper, taper_width, path
    [grid]         r_max, n
    [controls]     dt0, t_end, blowup_grad_factor, dt_floor, record_every,
                   limiter, weight, weight_scale, eta
    [output]       dir, name, checkpoint
    [sweep]        amplitudes, widths, lambdas, evolve

Unknown sections or keys are rejected. The output directory is resolved with
precedence config < ``INLS_OUT_DIR`` environment variable < command-line flag.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

ENV_OUT_DIR = "INLS_OUT_DIR"
DEFAULT_OUT_DIR = "inls-out"


def _float(v):
    return float(v)


def _int(v):
    if isinstance(v, float) and not v.is_integer():
        raise ValueError(f"{v!r} is not an integer")
    return int(v)


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


def _str(v):
    if not isinstance(v, str):
        raise ValueError(f"{v!r} is not a string")
    return v


def _floatlist(v):
    if isinstance(v, str):
        items = [x for x in (s.strip() for s in v.split(",")) if x]
    else:
        items = list(v)
    return [float(x) for x in items]


SCHEMA = {
    "coefficient": {"family": _str, "b": _float, "a": _float, "d": _float, "c": _float, "table": _str},
    "initial": {
        "profile": _str, "A": _float, "sigma": _float, "c": _float, "lam": _float,
        "taper": _float, "taper_width": _float, "path": _str,
    },
    "grid": {"r_max": _float, "n": _int},
    "controls": {
        "dt0": _float, "t_end": _float, "blowup_grad_factor": _float, "dt_floor": _float,
        "record_every": _float, "limiter": _bool, "weight": _str, "weight_scale": _float, "eta": _float,
    },
    "output": {"dir": _str, "name": _str, "checkpoint": _bool},
    "sweep": {"amplitudes": _floatlist, "widths": _floatlist, "lambdas": _floatlist, "evolve": _bool},
}
REQUIRED = {"coefficient": ("b",), "initial": ("profile",), "grid": ("r_max", "n")}

DEFAULTS = {
    "coefficient": {"family": "PurePower"},
    "controls": {},
    "output": {"name": "run", "checkpoint": False},
}


def _coerce(data: dict) -> dict:
    out = {}
    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}", block=section)
        if not isinstance(body, dict):
            raise ConfigError("section must be a table of key=value pairs", block=section)
        keys = SCHEMA[section]
        sec = {}
        for key, raw in body.items():
            if key not in keys:
                raise ConfigError(f"unknown key {key!r}", block=section)
            try:
                val = keys[key](raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: {exc}", block=section) from None
            if isinstance(val, float) and not math.isfinite(val):
                raise ConfigError(f"{key} must be finite", block=section)
            sec[key] = val
        out[section] = sec
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in out.get(section, {}):
                raise ConfigError(f"missing required key {key!r}", block=section)
    for section, defaults in DEFAULTS.items():
        merged = dict(defaults)
        merged.update(out.get(section, {}))
        out[section] = merged
    if "sweep" in out:
        sw = out["sweep"]
        lists = [sw.get(k) for k in ("amplitudes", "widths", "lambdas") if k in sw]
        if not lists or any(len(x) == 0 for x in lists):
            raise ConfigError("sweep lists must be present and non-empty", block="sweep")
    return out


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    """Validated, typed configuration. ``sections`` maps section -> {key: value}."""

    sections: dict = field(default_factory=dict)
    source: str | None = None

    @classmethod
    def from_dict(cls, data: dict, source: str | None = None) -> "RunConfig":
        return cls(_coerce(data), source)

    @classmethod
    def from_ini(cls, text: str, source: str | None = None) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                           inline_comment_prefixes=(";", "#"))
        parser.optionxform = str  # keys are case-sensitive (A vs a)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed INI: {exc}") from None
        return cls.from_dict({s: dict(parser.items(s)) for s in parser.sections()}, source)

    @classmethod
    def from_json(cls, text: str, source: str | None = None) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object of sections")
        return cls.from_dict(data, source)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
            return cls.from_json(text, str(path))
        return cls.from_ini(text, str(path))

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def to_dict(self) -> dict:
        return {s: dict(sorted(body.items())) for s, body in sorted(self.sections.items())}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_ini(self) -> str:
        buf = io.StringIO()
        for s, body in self.to_dict().items():
            buf.write(f"[{s}]\n")
            for k, v in body.items():
                buf.write(f"{k} = {_fmt(v)}\n")
            buf.write("\n")
        return buf.getvalue()

    @property
    def hash(self) -> str:
        """Short digest of the canonical JSON form; independent of input format."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_updates(self, updates: dict) -> "RunConfig":
        """New config with ``{section: {key: value}}`` merged in and revalidated."""
        data = self.to_dict()
        for s, body in updates.items():
            data.setdefault(s, {}).update(body)
        return RunConfig.from_dict(data, self.source)

    def without(self, section: str) -> "RunConfig":
        data = self.to_dict()
        data.pop(section, None)
        return RunConfig.from_dict(data, self.source)


def resolve_output_dir(config: RunConfig | None, flag: str | None = None) -> Path:
    """Config value, overridden by ``INLS_OUT_DIR``, overridden by the flag."""
    out = DEFAULT_OUT_DIR
    if config is not None and config.get("output", "dir"):
        out = config.get("output", "dir")
    env = os.environ.get(ENV_OUT_DIR)
    if env:
        out = env
    if flag:
        out = flag
    return Path(out)
