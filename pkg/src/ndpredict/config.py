"""Run configuration: a ``key = value`` document plus command-line overrides.

Example::

    # DBLP-shaped run, timestamps in years
    unit = years
    t_h_start = 2006
    t_h_end = 2010
    t_c_end = 2011
    t_f_end = 2013
    k = 5
    seed = 7

Window bounds are integers in the declared unit. With ``unit = days`` a
bound may also be an ISO date, read as days since 1970-01-01.
"""
from __future__ import annotations

import configparser
import datetime as dt
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .graph import RunWindows

_SECTION = "run"
_EPOCH = dt.date(1970, 1, 1)
WINDOW_KEYS = ("t_h_start", "t_h_end", "t_c_start", "t_c_end", "t_f_start", "t_f_end")


class ConfigError(ValueError):
    pass


def read_config_file(path) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    text = Path(path).read_text()
    try:
        parser.read_string(f"[{_SECTION}]\n{text}", source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser[_SECTION])


def write_config_file(path, values: dict) -> None:
    lines = [f"{k} = {_format_value(v)}" for k, v in values.items() if v is not None]
    Path(path).write_text("\n".join(lines) + "\n")


def _format_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def parse_bound(value, unit: str) -> int:
    if isinstance(value, int):
        return value
    text = str(value).strip()
    try:
        return int(text)
    except ValueError:
        pass
    if unit == "days":
        try:
            return (dt.date.fromisoformat(text) - _EPOCH).days
        except ValueError:
            pass
    raise ConfigError(f"cannot read window bound {text!r} in unit {unit!r}")


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_list(text, cast=str) -> list:
    if isinstance(text, (list, tuple)):
        return [cast(x) for x in text]
    return [cast(x.strip()) for x in str(text).split(",") if x.strip()]


@dataclass
class RunConfig:
    events: str | None = None
    labels: str | None = None
    out: str | None = None
    model: str | None = None
    unit: str = "units"
    attribute_type: str = "attribute"
    t_h_start: int | None = None
    t_h_end: int | None = None
    t_c_start: int | None = None
    t_c_end: int | None = None
    t_f_start: int | None = None
    t_f_end: int | None = None
    k: int = 1
    k_candidates: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    sample_size: int = 500
    seed: int = 0
    ridge_fallback: float = 1e-8
    lr: float = 0.001
    lam: float = 0.02
    epochs: int = 100
    factors: int | None = None
    methods: list[str] = field(default_factory=lambda: ["efm", "mvm", "mf", "biasedmf"])
    num_targets: int | None = None
    leave_one_out: bool = False
    set_semantics: bool = False

    _CASTS = {
        "k": int,
        "sample_size": int,
        "seed": int,
        "epochs": int,
        "factors": int,
        "num_targets": int,
        "ridge_fallback": float,
        "lr": float,
        "lam": float,
        "leave_one_out": _parse_bool,
        "set_semantics": _parse_bool,
        "k_candidates": lambda v: _parse_list(v, int),
        "methods": lambda v: [m.lower() for m in _parse_list(v)],
    }

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in fields(cls)}

    def update(self, values: dict, source: str = "config") -> "RunConfig":
        """Apply raw string or typed values; ``None`` values are skipped."""
        # "lambda" is accepted as a synonym for the keyword-safe "lam"
        values = {("lam" if k == "lambda" else k.replace("-", "_")): v for k, v in values.items()}
        unknown = set(values) - self.field_names()
        if unknown:
            raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
        unit = str(values.get("unit") or self.unit)
        for key, raw in values.items():
            if raw is None:
                continue
            try:
                if key in WINDOW_KEYS:
                    val = parse_bound(raw, unit)
                elif key in self._CASTS and isinstance(raw, str):
                    val = self._CASTS[key](raw)
                else:
                    val = raw
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}") from None
            setattr(self, key, val)
        return self

    @property
    def windows(self) -> RunWindows:
        missing = [k for k in ("t_h_start", "t_h_end", "t_c_end", "t_f_end") if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"window bounds missing: {missing}")
        d = {k: getattr(self, k) for k in WINDOW_KEYS if getattr(self, k) is not None}
        if "t_c_start" in d and d["t_c_start"] != d["t_h_end"]:
            raise ConfigError("history and current windows must be adjacent (t_c_start must equal t_h_end)")
        try:
            return RunWindows.from_dict(d)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def as_dict(self) -> dict:
        return asdict(self)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg.update(read_config_file(path), source=str(path))
    if overrides:
        cfg.update(overrides, source="command line")
    return cfg
