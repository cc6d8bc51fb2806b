"""Sectioned key=value run configuration with line-precise errors."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from .verify import KRangeError, k_range_lorentz_2k2, k_range_lorentz_k1

KNOWN_THEOREMS = ("lorentz_k1", "lorentz_2k2", "pointwise", "saint_venant",
                  "bossel_daners")
KNOWN_SOURCES = ("const", "radial", "bump")

_KEYS = {
    "run": {"domains", "betas", "ks", "sources", "theorems", "h", "refinements",
            "tgrid", "seed", "workers"},
    "gamma": {"gamma2", "provenance"},
    "output": {"dir"},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    domains: list
    betas: list
    ks: list
    sources: list
    theorems: list
    h: float = 0.1
    refinements: int = 1
    tgrid: int = 512
    seed: int = 0
    workers: int = 1
    gamma2: float = math.nan
    gamma_provenance: str = ""
    outdir: str = "reports"
    raw_text: str = ""

    def config_hash(self) -> str:
        return hashlib.sha256(self.raw_text.encode()).hexdigest()[:16]


def _split_list(value: str, sep: str):
    return [item.strip() for item in value.split(sep) if item.strip()]


def parse_config(text: str) -> RunConfig:
    """Parse and validate; unknown keys, duplicate keys, a missing gamma
    provenance, and out-of-range k all raise with the offending line."""
    section = None
    seen: set = set()
    values: dict = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        seen.add((section, key))
        values[(section, key)] = val

    def get(section, key, default=None):
        return values.get((section, key), default)

    if get("run", "domains") is None:
        raise ConfigError("missing required key 'domains' in [run]")
    if get("gamma", "gamma2") is None:
        raise ConfigError("missing required key 'gamma2' in [gamma]")
    if not get("gamma", "provenance"):
        raise ConfigError("gamma2 requires a 'provenance' note in [gamma]; the "
                          "quantitative isoperimetric constant is configuration, "
                          "not something this tool invents")

    cfg = RunConfig(
        domains=_split_list(get("run", "domains"), ";"),
        betas=[float(v) for v in _split_list(get("run", "betas", "1"), ",")],
        ks=[float(v) for v in _split_list(get("run", "ks", "1"), ",")],
        sources=_split_list(get("run", "sources", "const"), ";"),
        theorems=_split_list(get("run", "theorems", ", ".join(KNOWN_THEOREMS)), ","),
        h=float(get("run", "h", "0.1")),
        refinements=int(get("run", "refinements", "1")),
        tgrid=int(get("run", "tgrid", "512")),
        seed=int(get("run", "seed", "0")),
        workers=int(get("run", "workers", "1")),
        gamma2=float(get("gamma", "gamma2")),
        gamma_provenance=get("gamma", "provenance"),
        outdir=get("output", "dir", "reports"),
        raw_text=text,
    )

    for th in cfg.theorems:
        if th not in KNOWN_THEOREMS:
            raise ConfigError(f"unknown theorem {th!r}; choose from {KNOWN_THEOREMS}")
    for src in cfg.sources:
        if src not in KNOWN_SOURCES:
            raise ConfigError(f"unknown source {src!r}; choose from {KNOWN_SOURCES}")
    if cfg.h <= 0 or cfg.refinements < 0 or cfg.tgrid <= 0 or cfg.workers < 1:
        raise ConfigError("numeric run parameters must be positive")
    if not cfg.gamma2 > 0:
        raise ConfigError("gamma2 must be positive")
    if min(cfg.betas, default=1.0) <= 0:
        raise ConfigError("betas must be positive")

    generic_f = any(s != "const" for s in cfg.sources)
    for k in cfg.ks:
        if k <= 0:
            raise ConfigError("k values must be positive")
        if "lorentz_k1" in cfg.theorems and k > k_range_lorentz_k1(2, not generic_f):
            raise ConfigError(
                f"k={k:g} rejected for lorentz_k1 with a generic source: "
                f"the admissible range is 0 < k <= n/(2n-2) = 1 at n=2")
        if "lorentz_2k2" in cfg.theorems and k > k_range_lorentz_2k2(2, not generic_f):
            raise ConfigError(
                f"k={k:g} rejected for lorentz_2k2 with a generic source: "
                f"the admissible range is 0 < k <= n/(3n-4) = 1 at n=2")
    return cfg


def default_config_text() -> str:
    """A template run; gamma2 must be reviewed, not trusted (see provenance)."""
    return """\
[run]
domains = disc r=1; ellipse a=1.2247448713915892 b=0.81649658092772615
betas = 1
ks = 1, 0.5
sources = const
theorems = lorentz_k1, lorentz_2k2, pointwise, saint_venant, bossel_daners
h = 0.1
refinements = 1
tgrid = 512
seed = 1234
workers = 1

[gamma]
gamma2 = 16.0
provenance = placeholder; set from the quantitative isoperimetric literature and cross-check against the gamma_star diagnostic

[output]
dir = reports
"""
