"""Sectioned key/value configuration with typed defaults.

Documents use INI syntax.  Keys placed before the first section header
belong to ``[general]``; ``general.n`` is the hypersurface dimension used by
every module.
"""

from __future__ import annotations

import configparser
import copy
import math
from typing import Any, Callable, Optional

from .errors import ConfigError


def _int(lo=None, hi=None):
    def conv(s):
        v = int(str(s).strip())
        if lo is not None and v < lo or hi is not None and v > hi:
            raise ValueError(f"out of range [{lo}, {hi}]")
        return v
    return conv


def _float(lo=None, hi=None, open_lo=False):
    def conv(s):
        v = float(str(s).strip())
        if not math.isfinite(v):
            raise ValueError("must be finite")
        if lo is not None and (v < lo or (open_lo and v == lo)):
            raise ValueError(f"must be {'>' if open_lo else '>='} {lo}")
        if hi is not None and v > hi:
            raise ValueError(f"must be <= {hi}")
        return v
    return conv


def _opt(conv):
    def wrapped(s):
        if s is None or str(s).strip().lower() in ("", "none"):
            return None
        return conv(s)
    return wrapped


def _floats(lo=None, open_lo=False):
    one = _float(lo, open_lo=open_lo)

    def conv(s):
        if isinstance(s, (list, tuple)):
            return [one(x) for x in s]
        text = str(s).strip()
        return [one(x) for x in text.split(",")] if text else []
    return conv


def _choice(*options):
    def conv(s):
        v = str(s).strip().lower()
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v
    return conv


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be a boolean")


POS = dict(lo=0.0, open_lo=True)

# section -> key -> (converter, default)
SCHEMA: dict[str, dict[str, tuple[Callable, Any]]] = {
    "general": {
        "n": (_int(1), 2),
        "seed": (_int(0), 12345),
        "threads": (_int(1), 1),
    },
    "flow": {
        "shape": (_choice("sphere", "ellipsoid", "capsule"), "sphere"),
        "nodes": (_int(5), 401),
        "radius": (_float(**POS), 1.0),
        "a": (_float(**POS), 1.0),
        "c": (_float(**POS), 1.5),
        "half_length": (_float(**POS), 1.0),
        "dt_safety": (_float(0.0, 1.0, open_lo=True), 0.9),
        "blowup_factor": (_float(**POS), 1e3),
        "max_H_blowup": (_opt(_float(**POS)), None),
        "t_end": (_opt(_float(**POS)), None),
        "remesh_interval": (_int(0), 0),
        "snapshot_every": (_int(1), 500),
        "record_times": (_floats(**POS), []),
        "refine": (_bool, False),
    },
    "soliton": {
        "kind": (_choice("translator", "expander"), "translator"),
        "rho_max": (_opt(_float(**POS)), None),
        "step": (_float(**POS), 0.01),
        "tip_height": (_float(**POS), 1.0),
        "alpha_list": (_floats(**POS), [0.3, 0.1, 0.03]),
    },
    "umbilic": {
        "L": (_float(**POS), 0.5),
        "alpha": (_opt(_float(**POS)), None),
        "eps_list": (_floats(**POS), [0.05, 0.1, 0.2]),
        "stability_tol": (_float(**POS), 0.1),
    },
    "interior": {
        "r": (_floats(**POS), [0.3, 0.5]),
        "L": (_floats(1.0, open_lo=True), [2.0, 4.0]),
        "center_z": (_opt(_float()), None),
        "stability_tol": (_float(**POS), 0.1),
    },
    "pinching": {
        "alpha": (_opt(_float(0.0)), None),
        "tol": (_float(**POS), 1e-3),
    },
    "barrier": {
        "p_z": (_float(), -2.0),
        "e_axis": (_float(), 1.0),
        "e_perp": (_float(), 0.0),
        "t_end": (_float(**POS), 0.1),
        "snapshot_every": (_int(1), 20),
        "min_order_factor": (_float(**POS), 3.0),
    },
    "pick": {
        "delta": (_float(**POS), 0.5),
        "seed_snapshot": (_int(), -1),
        "seed_node": (_int(0), 0),
        "trials": (_int(1), 100),
        "snapshots": (_int(2), 12),
        "nodes": (_int(5), 120),
    },
    "classify": {
        "horizons": (_floats(**POS), []),
    },
    "existence": {
        "body": (_choice("paraboloid", "cone", "sphere"), "paraboloid"),
        "slope": (_float(**POS), 1.0),
        "heights": (_floats(**POS), [2.0, 4.0, 8.0]),
        "epss": (_floats(**POS), [1e-1, 1e-2, 1e-3]),
        "delta": (_float(**POS), 0.05),
        "ball_radius": (_float(**POS), 1.0),
        "spacing": (_float(**POS), 0.005),
        "tolerance": (_float(**POS), 1e-2),
    },
}


def defaults() -> dict:
    return {sec: {k: copy.deepcopy(v[1]) for k, v in keys.items()} for sec, keys in SCHEMA.items()}


def set_value(cfg: dict, dotted: str, raw) -> None:
    """Assign ``section.key`` (or a bare ``general`` key) from a raw value."""
    sec, _, key = dotted.rpartition(".")
    sec = sec or "general"
    if sec not in SCHEMA:
        raise ConfigError(f"unknown section [{sec}]", dotted)
    if key not in SCHEMA[sec]:
        raise ConfigError(f"unknown key '{key}' in [{sec}]", f"{sec}.{key}")
    conv = SCHEMA[sec][key][0]
    try:
        cfg[sec][key] = conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value {raw!r} for {sec}.{key}: {exc}", f"{sec}.{key}") from None


def parse_config(text: str = "", base: Optional[dict] = None) -> dict:
    """Layer the document ``text`` over ``base`` (schema defaults if omitted)."""
    cfg = copy.deepcopy(base) if base is not None else defaults()
    lines = text.splitlines()
    first = next((ln.strip() for ln in lines if ln.strip() and ln.strip()[0] not in "#;"), "")
    if first and not first.startswith("["):
        text = "[general]\n" + text
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    for sec in parser.sections():
        for key, raw in parser.items(sec):
            set_value(cfg, f"{sec}.{key}", raw)
    return cfg


def apply_overrides(cfg: dict, overrides) -> dict:
    out = copy.deepcopy(cfg)
    items = overrides.items() if isinstance(overrides, dict) else overrides
    for key, raw in items:
        set_value(out, key, raw)
    return out
