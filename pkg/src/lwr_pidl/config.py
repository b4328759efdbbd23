"""Sectioned ``key = value`` experiment configuration.

Grammar, one statement per line::

    # comment (also after a value)
    [section]
    key = value
    key = v1, v2, v3        # list

Sections and keys are case-insensitive. Every error carries the line number
of the offending statement. Recognised keys and defaults:

``[dataset]``
    ``source`` (``ring`` | ``csv``), ``profile`` (ring initial profile, ``jam`` or
    ``sine-gauss``), ``path`` (csv source), ``v_f``, ``rho_m``.
``[physics]``
    ``forms`` (list of ``hyperbolic``/``parabolic``), ``epsilon`` (parabolic
    residual coefficient; ring default is the calibrated preset value),
    ``epsilons`` (list, sweep verb only).
``[sampling]``
    ``ic_bc_fractions`` (list), ``cv_count``, ``cv_points`` (list),
    ``eulerian_positions`` (list), ``eulerian_dropout`` (``sensor:t0-t1; ...``).
``[optimizer]``
    ``names`` (list of ``lbfgs``/``adam``), ``lr``, ``iters``, ``beta1``,
    ``beta2``, ``eps_hat``, ``memory``, ``max_iters``, ``ftol``.
``[network]``
    ``hidden`` (list of widths), ``n_collocation``.
``[weights]``
    ``mu1``, ``mu2``.
``[run]``
    ``seeds`` (list, required), ``out``, ``snapshot_times`` (list).
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

from .core import ConfigError

SCHEMA = {
    "dataset": {"source", "profile", "path", "v_f", "rho_m"},
    "physics": {"forms", "epsilon", "epsilons"},
    "sampling": {"ic_bc_fractions", "cv_count", "cv_points", "eulerian_positions", "eulerian_dropout"},
    "optimizer": {"names", "lr", "iters", "beta1", "beta2", "eps_hat", "memory", "max_iters", "ftol"},
    "network": {"hidden", "n_collocation"},
    "weights": {"mu1", "mu2"},
    "run": {"seeds", "out", "snapshot_times"},
}


class ConfigParseError(ConfigError):
    def __init__(self, msg: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}:{line}: " if line else ""
        super().__init__(where + msg)
        self.line = line


@dataclass
class ExperimentConfig:
    source: str = "ring"
    profile: str = "jam"
    path: str | None = None
    v_f: float = 1.0
    rho_m: float = 1.0
    forms: tuple[str, ...] = ("parabolic", "hyperbolic")
    epsilon: float | None = None
    epsilons: tuple[float, ...] = ()
    ic_bc_fractions: tuple[float, ...] = (0.2,)
    cv_count: int = 20
    cv_points: tuple[int, ...] = (0,)
    eulerian_positions: tuple[float, ...] = ()
    eulerian_dropout: tuple = ()
    optimizers: tuple[str, ...] = ("lbfgs",)
    lr: float = 1e-3
    iters: int = 8000
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    memory: int = 10
    max_iters: int = 20_000
    ftol: float = 2.22e-16
    hidden: tuple[int, ...] = (20,) * 8
    n_collocation: int = 10_000
    mu1: float = 1.0
    mu2: float = 1.0
    seeds: tuple[int, ...] = ()
    out: str = "results"
    snapshot_times: tuple[float, ...] | None = None
    text: str = field(default="", repr=False)

    @property
    def digest(self) -> str:
        return config_digest(self)


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def read_statements(text: str, path: str | None = None) -> dict[str, dict[str, tuple[str, int]]]:
    """``{section: {key: (raw value, line number)}}``."""
    out: dict[str, dict[str, tuple[str, int]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(f"unterminated section header {line!r}", lineno, path)
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigParseError(f"unknown section [{section}]", lineno, path)
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {line!r}", lineno, path)
        if section is None:
            raise ConfigParseError("statement before any [section]", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in SCHEMA[section]:
            raise ConfigParseError(f"unknown key {key!r} in [{section}]", lineno, path)
        if key in out[section]:
            raise ConfigParseError(f"duplicate key {key!r} in [{section}]", lineno, path)
        out[section][key] = (value, lineno)
    return out


def _conv(kind, value, lineno, path, key):
    try:
        return kind(value)
    except ValueError:
        raise ConfigParseError(f"{key}: cannot read {value!r} as {kind.__name__}", lineno, path) from None


def _list(kind, value, lineno, path, key):
    items = [v.strip() for v in value.split(",") if v.strip()]
    return tuple(_conv(kind, v, lineno, path, key) for v in items)


def _dropout(value, lineno, path):
    out = []
    for item in filter(None, (s.strip() for s in value.split(";"))):
        try:
            sensor, span = item.split(":")
            a, b = span.split("-")
            out.append((int(sensor), (float(a), float(b))))
        except ValueError:
            raise ConfigParseError(f"eulerian_dropout: bad entry {item!r} (want sensor:t0-t1)", lineno, path) from None
    return tuple(out)


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    st = read_statements(text, path)
    cfg = ExperimentConfig(text=text)
    scalars = {
        ("dataset", "source"): str, ("dataset", "path"): str, ("dataset", "profile"): str,
        ("dataset", "v_f"): float, ("dataset", "rho_m"): float,
        ("physics", "epsilon"): float,
        ("sampling", "cv_count"): int,
        ("optimizer", "lr"): float, ("optimizer", "iters"): int, ("optimizer", "beta1"): float,
        ("optimizer", "beta2"): float, ("optimizer", "eps_hat"): float, ("optimizer", "memory"): int,
        ("optimizer", "max_iters"): int, ("optimizer", "ftol"): float,
        ("network", "n_collocation"): int,
        ("weights", "mu1"): float, ("weights", "mu2"): float,
        ("run", "out"): str,
    }
    lists = {
        ("physics", "forms"): (str, "forms"), ("physics", "epsilons"): (float, "epsilons"),
        ("sampling", "ic_bc_fractions"): (float, "ic_bc_fractions"),
        ("sampling", "cv_points"): (int, "cv_points"),
        ("sampling", "eulerian_positions"): (float, "eulerian_positions"),
        ("optimizer", "names"): (str, "optimizers"),
        ("network", "hidden"): (int, "hidden"),
        ("run", "seeds"): (int, "seeds"),
        ("run", "snapshot_times"): (float, "snapshot_times"),
    }
    lines: dict[str, int] = {}
    for section, entries in st.items():
        for key, (value, lineno) in entries.items():
            lines[key] = lineno
            if (section, key) in scalars:
                setattr(cfg, key, _conv(scalars[(section, key)], value, lineno, path, key))
            elif (section, key) in lists:
                kind, attr = lists[(section, key)]
                setattr(cfg, attr, _list(kind, value, lineno, path, key))
            elif key == "eulerian_dropout":
                cfg.eulerian_dropout = _dropout(value, lineno, path)

    def fail(msg, key):
        raise ConfigParseError(msg, lines.get(key), path)

    if not cfg.seeds:
        fail("[run] seeds must list at least one seed", "seeds")
    if cfg.source not in ("ring", "csv"):
        fail(f"source must be 'ring' or 'csv', got {cfg.source!r}", "source")
    if cfg.profile not in ("jam", "sine-gauss"):
        fail(f"unknown ring profile {cfg.profile!r}", "profile")
    if cfg.source == "csv" and not cfg.path:
        fail("csv source needs [dataset] path", "source")
    for f in cfg.forms:
        if f not in ("hyperbolic", "parabolic"):
            fail(f"unknown physics form {f!r}", "forms")
    for o in cfg.optimizers:
        if o not in ("lbfgs", "adam"):
            fail(f"unknown optimizer {o!r}", "names")
    for fr in cfg.ic_bc_fractions:
        if not 0.0 <= fr <= 1.0:
            fail(f"ic_bc_fractions entry {fr} outside [0, 1]", "ic_bc_fractions")
    if not (cfg.v_f > 0 and cfg.rho_m > 0):
        fail("v_f and rho_m must be positive", "v_f" if cfg.v_f <= 0 else "rho_m")
    if any(w < 1 for w in cfg.hidden):
        fail("hidden widths must be >= 1", "hidden")
    if cfg.mu1 < 0 or cfg.mu2 < 0 or cfg.mu1 == cfg.mu2 == 0:
        fail("weights must be non-negative and not both zero", "mu1")
    if cfg.source == "csv" and path and not os.path.isabs(cfg.path):
        cfg.path = os.path.join(os.path.dirname(os.path.abspath(path)), cfg.path)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from exc
    return parse_config(text, path)


def config_digest(cfg: ExperimentConfig) -> str:
    """Short hash of the normalised statements (comments and spacing ignored)."""
    st = read_statements(cfg.text)
    canon = "\n".join(
        f"{sec}.{key}={val}" for sec in sorted(st) for key, (val, _) in sorted(st[sec].items())
    )
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
