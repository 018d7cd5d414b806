"""JSON experiment files mapped one-to-one onto :class:`SimConfig`.

A document looks like::

    {
      "dt": 0.001, "horizon": 60.0, "controller": "FOSMC_STC",
      "surface": {"alpha": [40, 40], "beta": 50, ...},
      "stc": {"k1": 20, "k2": 20},
      "plant": {"physical": {"mass": 1.8e-07, ...}},
      "initial": {"q": [0.5, 0.5], "qdot": [0, 0]},
      "reference": {"amplitude": [1, 1.2], "frequency": [4.17, 5.11]},
      "disturbance": {"amplitude": [0, 0], "frequency": [0, 0]}
    }

Every key is optional and falls back to the :class:`SimConfig` default.
Unknown keys are rejected with a :class:`ConfigError` naming the dotted key.
Per-axis gains accept a scalar or a two-element list.
"""

from __future__ import annotations

import json
import math
from dataclasses import fields
from importlib import resources
from pathlib import Path
from typing import Any

from ..controllers import STCGains, SurfaceGains
from ..plant import NondimParams, PhysicalParams
from ..sim import ConfigError, DisturbanceSpec, ReferenceSpec, SimConfig

__all__ = [
    "PRESETS",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "loads_config",
    "dumps_config",
    "save_config",
    "load_preset",
    "set_dotted",
]

PRESETS = ("paper_fosmc", "paper_fosmc_stc", "paper_known_disturbance", "paper_saturated")

_TOP_KEYS = {
    "dt", "horizon", "controller", "scheme", "prehistory", "disturbance_mode",
    "u_max", "memory_len", "surface", "stc", "plant", "initial", "reference", "disturbance",
}
_SURFACE_KEYS = ("alpha", "beta", "gamma", "K_s", "mu", "r_exp", "m_exp")
_PER_AXIS = ("alpha", "beta", "gamma", "K_s")


def _check_keys(d: Any, allowed, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(where or "<root>", "must be an object")
    for k in d:
        if k not in allowed:
            name = f"{where}.{k}" if where else k
            raise ConfigError(name, "unknown key")
    return d


def _real(v, key: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


def _pair(v, key: str) -> tuple:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(key, f"expected two values, got {len(v)}")
        return tuple(_real(x, f"{key}[{i}]") for i, x in enumerate(v))
    x = _real(v, key)
    return (x, x)


def _string(v, key: str) -> str:
    if not isinstance(v, str):
        raise ConfigError(key, f"expected a string, got {v!r}")
    return v


def config_from_dict(d: dict) -> SimConfig:
    """Build and validate a :class:`SimConfig` from a parsed document."""
    _check_keys(d, _TOP_KEYS, "")
    base = SimConfig()
    kw: dict[str, Any] = {}
    for key in ("dt", "horizon"):
        if key in d:
            kw[key] = _real(d[key], key)
    for key in ("controller", "scheme", "prehistory", "disturbance_mode"):
        if key in d:
            kw[key] = _string(d[key], key)
    if d.get("u_max") is not None:
        kw["u_max"] = _real(d["u_max"], "u_max")
    if d.get("memory_len") is not None:
        v = d["memory_len"]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError("memory_len", f"expected an integer, got {v!r}")
        kw["memory_len"] = v

    if "surface" in d:
        sd = _check_keys(d["surface"], _SURFACE_KEYS, "surface")
        cur = base.surface
        skw = {}
        for k in _SURFACE_KEYS:
            if k in sd:
                skw[k] = _pair(sd[k], f"surface.{k}") if k in _PER_AXIS else _real(sd[k], f"surface.{k}")
            else:
                skw[k] = getattr(cur, k)
        kw["surface"] = SurfaceGains(**skw)
    if "stc" in d:
        sd = _check_keys(d["stc"], ("k1", "k2"), "stc")
        kw["stc"] = STCGains(
            k1=_pair(sd["k1"], "stc.k1") if "k1" in sd else base.stc.k1,
            k2=_pair(sd["k2"], "stc.k2") if "k2" in sd else base.stc.k2,
        )
    if "plant" in d:
        pd = _check_keys(d["plant"], ("physical", "nondim"), "plant")
        if ("physical" in pd) == ("nondim" in pd):
            raise ConfigError("plant", "give exactly one of 'physical' or 'nondim'")
        if "physical" in pd:
            names = [f.name for f in fields(PhysicalParams)]
            ph = _check_keys(pd["physical"], names, "plant.physical")
            cur = base.physical
            kw["physical"] = PhysicalParams(**{
                n: _real(ph[n], f"plant.physical.{n}") if n in ph else getattr(cur, n) for n in names
            })
            kw["nondim"] = None
        else:
            names = [f.name for f in fields(NondimParams)]
            nd = _check_keys(pd["nondim"], names, "plant.nondim")
            missing = [n for n in names if n not in nd]
            if missing:
                raise ConfigError(f"plant.nondim.{missing[0]}", "missing")
            kw["nondim"] = NondimParams(**{n: _real(nd[n], f"plant.nondim.{n}") for n in names})
            kw["physical"] = None
    if "initial" in d:
        idd = _check_keys(d["initial"], ("q", "qdot"), "initial")
        if "q" in idd:
            kw["q0"] = _pair(idd["q"], "initial.q")
        if "qdot" in idd:
            kw["qdot0"] = _pair(idd["qdot"], "initial.qdot")
    for key, cls in (("reference", ReferenceSpec), ("disturbance", DisturbanceSpec)):
        if key in d:
            sd = _check_keys(d[key], ("amplitude", "frequency"), key)
            cur = getattr(base, key)
            kw[key] = cls(
                amplitude=_pair(sd["amplitude"], f"{key}.amplitude") if "amplitude" in sd else cur.amplitude,
                frequency=_pair(sd["frequency"], f"{key}.frequency") if "frequency" in sd else cur.frequency,
            )

    cfg = SimConfig(**kw)
    cfg.validate()
    return cfg


def config_to_dict(cfg: SimConfig) -> dict:
    """Full document for ``cfg``; every field is written explicitly."""
    g = cfg.surface
    d: dict[str, Any] = {
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "controller": cfg.controller,
        "scheme": cfg.scheme,
        "prehistory": cfg.prehistory,
        "disturbance_mode": cfg.disturbance_mode,
        "u_max": cfg.u_max,
        "memory_len": cfg.memory_len,
        "surface": {
            **{k: [float(x) for x in getattr(g, k)] for k in _PER_AXIS},
            "mu": g.mu, "r_exp": g.r_exp, "m_exp": g.m_exp,
        },
        "stc": {"k1": [float(x) for x in cfg.stc.k1], "k2": [float(x) for x in cfg.stc.k2]},
    }
    if cfg.physical is not None:
        d["plant"] = {"physical": {f.name: getattr(cfg.physical, f.name) for f in fields(PhysicalParams)}}
    else:
        d["plant"] = {"nondim": {f.name: getattr(cfg.nondim, f.name) for f in fields(NondimParams)}}
    d["initial"] = {"q": list(cfg.q0), "qdot": list(cfg.qdot0)}
    for key in ("reference", "disturbance"):
        spec = getattr(cfg, key)
        d[key] = {"amplitude": list(spec.amplitude), "frequency": list(spec.frequency)}
    return d


def loads_config(text: str) -> SimConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    return config_from_dict(d)


def dumps_config(cfg: SimConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(path) -> SimConfig:
    """Read a config file, or a bundled preset when ``path`` names one."""
    p = Path(path)
    if not p.exists() and str(path) in PRESETS:
        return load_preset(str(path))
    return loads_config(p.read_text())


def save_config(cfg: SimConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))


def load_preset(name: str) -> SimConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files(__package__).joinpath("presets", f"{name}.json").read_text()
    return loads_config(text)


def set_dotted(d: dict, key: str, value) -> dict:
    """Return a copy of document ``d`` with ``a.b.c`` set to ``value``."""
    out = json.loads(json.dumps(d))
    parts = key.split(".")
    node = out
    for i, part in enumerate(parts[:-1]):
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            raise ConfigError(".".join(parts[: i + 1]), "not a section")
        node = nxt
    node[parts[-1]] = value
    return out
