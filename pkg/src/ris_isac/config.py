"""Scenario configuration, deterministic RNG streams, and CSV output.

The scenario document is flat INI text (section headers, scalar keys). Every
dB/dBm quantity is converted to linear scale exactly once, here; the rest of
the package works in linear units only.
"""

from __future__ import annotations

import csv
import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Scenario document is missing a key or violates a bound."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1e3


@dataclass(frozen=True)
class ScenarioConfig:
    # system
    M: int              # BS antennas
    N: int              # RIS elements (0 = no RIS)
    K: int              # users
    L: int              # pulse length in slots
    tau: int            # relative delay of the RIS echo path, samples
    # power
    P_watts: float
    gamma_db: tuple[float, ...]   # per-user SINR floor, K entries
    # rcs variances (direct path, RIS path)
    sigma0_sq: float
    sigma1_sq: float
    # noise
    radar_dbm: float
    user_dbm: float
    # geometry (meters)
    d_Bt: float
    d_BR: float
    d_BU: float
    d_Rt: float
    d_RU: float
    # path loss exponents
    alpha_BR: float
    alpha_RU: float
    alpha_BU: float
    alpha_Bt: float
    alpha_Rt: float
    pl0_db_at_1m: float
    # Rician factors (dB; inf = pure LoS)
    beta_BR_db: float
    beta_Bt_db: float
    beta_other_db: float
    # solver controls
    rho: float = 1.0
    tol_outer: float = 1e-4
    tol_inner: float = 1e-7
    max_outer_iters: int = 50
    # rng
    seed: int = 1

    @property
    def Q(self) -> int:
        """Snapshot count: the length-L pulse plus tau delayed samples."""
        return self.L + self.tau

    @property
    def sigma_z_sq(self) -> float:
        """Radar receive noise power, watts."""
        return dbm_to_watts(self.radar_dbm)

    @property
    def sigma_k_sq(self) -> float:
        """Per-user receive noise power, watts."""
        return dbm_to_watts(self.user_dbm)

    @property
    def gamma_lin(self) -> tuple[float, ...]:
        return tuple(db_to_linear(g) for g in self.gamma_db)

    @property
    def beta_BR(self) -> float:
        return db_to_linear(self.beta_BR_db)

    @property
    def beta_Bt(self) -> float:
        return math.inf if math.isinf(self.beta_Bt_db) else db_to_linear(self.beta_Bt_db)

    @property
    def beta_other(self) -> float:
        return db_to_linear(self.beta_other_db)


@dataclass
class RunArtifacts:
    """Everything one CLI run produced, for reproducibility checks."""
    config_echo: ScenarioConfig
    csv_tables: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)


# (section, key, kind); kind one of int/float/floatlist/beta
_SCHEMA = [
    ("system", "M", "int"),
    ("system", "N", "int"),
    ("system", "K", "int"),
    ("system", "L", "int"),
    ("system", "tau", "int"),
    ("power", "P_watts", "float"),
    ("power", "gamma_db", "floatlist"),
    ("rcs", "sigma0_sq", "float"),
    ("rcs", "sigma1_sq", "float"),
    ("noise", "radar_dbm", "float"),
    ("noise", "user_dbm", "float"),
    ("geometry", "d_Bt", "float"),
    ("geometry", "d_BR", "float"),
    ("geometry", "d_BU", "float"),
    ("geometry", "d_Rt", "float"),
    ("geometry", "d_RU", "float"),
    ("pathloss", "alpha_BR", "float"),
    ("pathloss", "alpha_RU", "float"),
    ("pathloss", "alpha_BU", "float"),
    ("pathloss", "alpha_Bt", "float"),
    ("pathloss", "alpha_Rt", "float"),
    ("pathloss", "pl0_db_at_1m", "float"),
    ("rician", "beta_BR_db", "beta"),
    ("rician", "beta_Bt_db", "beta"),
    ("rician", "beta_other_db", "beta"),
    ("solver", "rho", "float"),
    ("solver", "tol_outer", "float"),
    ("solver", "tol_inner", "float"),
    ("solver", "max_outer_iters", "int"),
    ("run", "seed", "int"),
]

_SOLVER_DEFAULTS = {"rho": 1.0, "tol_outer": 1e-4, "tol_inner": 1e-7,
                    "max_outer_iters": 50, "seed": 1}

_INF_SPELLINGS = {"inf", "infinite", "infinity", "infty"}


def _parse_scalar(section: str, key: str, kind: str, raw: str):
    raw = raw.strip()
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}") from None
    if kind == "beta" and raw.lower() in _INF_SPELLINGS:
        return math.inf
    if kind == "floatlist":
        parts = [p for p in raw.replace(",", " ").split() if p]
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a list of numbers, got {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document."""
    ini = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        ini.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    values = {}
    for section, key, kind in _SCHEMA:
        if ini.has_option(section, key):
            values[key] = _parse_scalar(section, key, kind, ini.get(section, key))
        elif key in _SOLVER_DEFAULTS:
            values[key] = _SOLVER_DEFAULTS[key]
        else:
            raise ConfigError(f"missing key [{section}] {key}")

    cfg = ScenarioConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.M < 1:
        raise ConfigError("M must be >= 1")
    if cfg.N < 0:
        raise ConfigError("N must be >= 0")
    if cfg.K < 0:
        raise ConfigError("K must be >= 0")
    if cfg.L < 1:
        raise ConfigError("L must be >= 1")
    if cfg.tau < 1:
        raise ConfigError("tau must be >= 1")
    if cfg.tau >= cfg.L:
        raise ConfigError("tau must be < L")
    if len(cfg.gamma_db) != cfg.K:
        raise ConfigError(f"gamma_db must have exactly K={cfg.K} entries, got {len(cfg.gamma_db)}")
    for name in ("P_watts", "sigma0_sq", "sigma1_sq", "rho", "tol_outer", "tol_inner"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    for name in ("d_Bt", "d_BR", "d_BU", "d_Rt", "d_RU"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1 (path-loss reference distance)")
    if cfg.max_outer_iters < 1:
        raise ConfigError("max_outer_iters must be >= 1")


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "infinite"
        return repr(v)
    return str(v)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; parse(serialize(parse(x))) == parse(x)."""
    lines = []
    current = None
    for section, key, kind in _SCHEMA:
        if section != current:
            if current is not None:
                lines.append("")
            lines.append(f"[{section}]")
            current = section
        v = getattr(cfg, key)
        if kind == "floatlist":
            lines.append(f"{key} = {', '.join(repr(float(g)) for g in v)}")
        else:
            lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


# §-IV-style default scenario: 16 BS antennas, 64-element RIS, 4 users,
# 64-slot pulse with a 16-sample RIS-path delay, 30 W budget, 10 dB SINR floor.
DEFAULT_CONFIG_TEXT = """\
[system]
M = 16
N = 64
K = 4
L = 64
tau = 16

[power]
P_watts = 30.0
gamma_db = 10.0, 10.0, 10.0, 10.0

[rcs]
sigma0_sq = 1.0
sigma1_sq = 1.0

[noise]
radar_dbm = -80.0
user_dbm = -80.0

[geometry]
d_Bt = 50.0
d_BR = 40.0
d_BU = 36.0
d_Rt = 25.0
d_RU = 3.0

[pathloss]
alpha_BR = 2.0
alpha_RU = 2.4
alpha_BU = 2.7
alpha_Bt = 2.0
alpha_Rt = 2.0
pl0_db_at_1m = -30.0

[rician]
beta_BR_db = 5.0
beta_Bt_db = infinite
beta_other_db = 0.0

[solver]
rho = 1.0
tol_outer = 1e-4
tol_inner = 1e-7
max_outer_iters = 50

[run]
seed = 1
"""


def default_config() -> ScenarioConfig:
    return parse_config(DEFAULT_CONFIG_TEXT)


_MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream_label: str) -> np.random.Generator:
    """Independent, reproducible substream for (seed, label).

    The label is folded through SHA-256 so stream separation does not depend
    on Python's per-process string hashing.
    """
    digest = hashlib.sha256(stream_label.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "little")
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(key,))
    return np.random.default_rng(ss)


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(out_dir: str | Path, table_name: str, rows, columns=None) -> Path:
    """Write one result table as RFC-4180 CSV with >= 9 significant digits.

    Row order is preserved as given; callers sort by their key columns so
    reruns are byte-identical.
    """
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("columns required when rows is empty")
        columns = list(rows[0].keys())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{table_name}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row[c]) for c in columns])
    return path
