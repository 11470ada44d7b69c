"""Flat key-value configuration files for priors, moves, and chain length.

Format: one `key = value` per line, `#` starts a comment, blank lines
ignored. Every key is optional; unknown keys are a hard error so typos
cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import fields

from .kernels import Hyperparameters
from .moves import MoveConfig
from .sampler import ChainConfig


class ConfigError(ValueError):
    pass


_BOOL = {"true": True, "1": True, "yes": True,
         "false": False, "0": False, "no": False}


def _coerce(name: str, raw: str, ftype: str):
    raw = raw.strip()
    try:
        if ftype == "bool":
            if raw.lower() not in _BOOL:
                raise ValueError
            return _BOOL[raw.lower()]
        if ftype == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r} for key {name!r}") from None


def _field_types(cls) -> dict[str, str]:
    out = {}
    for f in fields(cls):
        t = str(f.type)
        if "bool" in t:
            out[f.name] = "bool"
        elif "int" in t:
            out[f.name] = "int"
        else:
            out[f.name] = "float"
    return out


def parse_config_text(text: str) -> dict:
    """Raw key-value pairs with values still as strings."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def build_configs(pairs: dict, Q: int | None = None):
    """Split raw pairs into (Hyperparameters, MoveConfig, ChainConfig)."""
    hyper = Hyperparameters.default(Q) if Q is not None else Hyperparameters()
    move_cfg = MoveConfig()
    chain_cfg = ChainConfig()
    typed = [
        (hyper, _field_types(Hyperparameters)),
        (move_cfg, _field_types(MoveConfig)),
        (chain_cfg, _field_types(ChainConfig)),
    ]
    for key, raw in pairs.items():
        for obj, types in typed:
            if key in types:
                setattr(obj, key, _coerce(key, raw, types[key]))
                break
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    # c1/c2 defaults depend on P_max, which may itself have been overridden
    if "c1" not in pairs:
        hyper.c1 = None
    if "c2" not in pairs:
        hyper.c2 = None
    hyper.resolve()
    hyper.validate(Q)
    move_cfg.validate()
    chain_cfg.validate()
    return hyper, move_cfg, chain_cfg


def load_config(path: str | None, Q: int | None = None):
    if path is None:
        pairs = {}
    else:
        with open(path, encoding="utf-8") as fh:
            pairs = parse_config_text(fh.read())
    return build_configs(pairs, Q)
