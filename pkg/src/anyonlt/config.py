from __future__ import annotations

import json
import os
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from anyonlt.errors import ConfigError

SUITES = ("verify-bessel", "verify-diamagnetic", "two-anyon", "covering", "constants", "all")

DEFAULT_TOLERANCES: Dict[str, float] = {
    "plateau": 1e-12,
    "bessel_limit": 5e-3,
    "free_spectrum_rel": 0.01,
    "gauge": 1e-10,
    "green_violation": 1e-10,
    "kato_floor": 1e-9,
    "two_anyon_free_rel": 0.02,
    "scaling_rel": 0.01,
    "trial_convergence": 1e-6,
    "trial_bound": 8.0,
    "alpha_one_ceiling": 0.05,
    "alpha_one_gauge": 1e-6,
    "max_overlap": 16,
    "mass_quadrature": 2.0,
    "chain_abs": 1e-12,
    "eigen_tol": 1e-10,
}


# ---------- Per-module settings ----------

@dataclass(frozen=True)
class CoreModelSettings:
    alpha: float = 0.5
    radius: float = 0.05
    mode: str = "kinetic-only"
    flux_weight: float = 1.0
    configuration: Optional[str] = None


@dataclass(frozen=True)
class RadialSettings:
    plateau_nu_count: int = 32
    plateau_gammas: Tuple[float, ...] = (1.0, 1.5)
    limit_gamma: float = 1e-4
    limit_nus: Tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    jprime_nu_count: int = 64
    sweep_gammas: Tuple[float, ...] = (1e-3, 1e-2, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0)
    grid_points: int = 2000


@dataclass(frozen=True)
class MagneticGridSettings:
    n_side: int = 65
    free_n_side: int = 129
    gauge_n_side: int = 33
    fields: int = 20
    sources: int = 5
    amplitude: float = 50.0
    shift_e: float = 1.0
    Lambda: float = 2.0
    bs_m: float = 2.0
    bs_e: float = 0.5


@dataclass(frozen=True)
class TwoAnyonSettings:
    n_side: int = 20
    gamma: float = 1e-3
    profile_alphas: Tuple[float, ...] = (0.2, 0.5, 0.8, 1.0, 1.2, 1.5, 1.8)
    scaling_n_side: int = 12
    scaling_alpha: float = 0.5
    scaling_gamma: float = 0.1
    trial_alphas: Tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0)
    trial_radii: Tuple[float, ...] = (0.01, 0.1, 1.0)
    trial_nodes: int = 64
    budget: int = 4_000_000
    outside: Optional[str] = None


@dataclass(frozen=True)
class CoveringSettings:
    densities: Tuple[str, ...] = ("uniform", "gaussian")
    seeds: int = 10
    n_lower: float = 40.0
    n_upper: float = 60.0
    n_nodes: int = 41
    extent: float = 10.0
    total_mass: float = 400.0
    jitter: float = 0.05
    density_csv: Optional[str] = None


@dataclass(frozen=True)
class ConstantsSettings:
    alpha: float = 0.5
    gamma: float = 0.01
    n_lower: float = 4
    n_upper: float = 16
    c1: float = 1.0 / 24.0
    c2: float = 2.0
    c_inner: float = 1.0
    corridor_c: float = 0.5
    measure: bool = True
    random_ledgers: int = 1000
    corridor_samples: int = 1000
    ledger: Optional[str] = None


BLOCKS = {
    "core_model": CoreModelSettings,
    "radial": RadialSettings,
    "magnetic_grid": MagneticGridSettings,
    "two_anyon": TwoAnyonSettings,
    "covering": CoveringSettings,
    "constants": ConstantsSettings,
}


@dataclass(frozen=True)
class RunConfig:
    suite: str = "all"
    seed: int = 0
    out_dir: str = "runs"
    parallel: int = 1
    tolerances: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    core_model: CoreModelSettings = field(default_factory=CoreModelSettings)
    radial: RadialSettings = field(default_factory=RadialSettings)
    magnetic_grid: MagneticGridSettings = field(default_factory=MagneticGridSettings)
    two_anyon: TwoAnyonSettings = field(default_factory=TwoAnyonSettings)
    covering: CoveringSettings = field(default_factory=CoveringSettings)
    constants: ConstantsSettings = field(default_factory=ConstantsSettings)

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])

    def echo(self) -> dict:
        """JSON-ready copy embedded in every report."""
        d = asdict(self)
        d["tolerances"] = dict(sorted(self.tolerances.items()))
        return d

    def with_tolerances(self, overrides: Mapping[str, float]) -> "RunConfig":
        unknown = sorted(set(overrides) - set(DEFAULT_TOLERANCES))
        if unknown:
            raise ConfigError(f"unknown tolerance {unknown[0]!r}", path="--tol")
        return replace(self, tolerances={**self.tolerances, **overrides})

    def with_block(self, block: str, **changes) -> "RunConfig":
        return replace(self, **{block: replace(getattr(self, block), **changes)})


# ---------- Loading ----------

def _locate(text: str, key: str, after: int = 0) -> Tuple[int, int, int]:
    """(offset, line, column) of the first `"key":` at or after `after`, 1-based line/column."""
    m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(text, after)
    if m is None:
        return after, 0, 0
    offset = m.start()
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return offset, line, column


def _coerce(value: Any, default: Any) -> Any:
    if isinstance(default, tuple) and isinstance(value, list):
        return tuple(value)
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _build_block(cls, doc: Any, text: str, path: str, block: str):
    start, line, col = _locate(text, block)
    if not isinstance(doc, dict):
        raise ConfigError(f"block {block!r} must be an object", line, col, path)
    known = {f.name: f for f in fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            _, line, col = _locate(text, key, start)
            raise ConfigError(f"unknown key {block}.{key}", line, col, path)
        kwargs[key] = _coerce(value, getattr(defaults, key))
    return cls(**kwargs)


def parse_run_config(text: str, path: str = "<config>") -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno, exc.colno, path) from None
    if not isinstance(doc, dict):
        raise ConfigError("run configuration must be a JSON object", 1, 1, path)

    top = {"suite", "seed", "out_dir", "parallel", "tolerances", *BLOCKS}
    for key in doc:
        if key not in top:
            _, line, col = _locate(text, key)
            raise ConfigError(f"unknown key {key!r}", line, col, path)

    kwargs: Dict[str, Any] = {}
    for key in ("suite", "seed", "out_dir", "parallel"):
        if key in doc:
            kwargs[key] = doc[key]
    if kwargs.get("suite", "all") not in SUITES:
        _, line, col = _locate(text, "suite")
        raise ConfigError(f"unknown suite {kwargs['suite']!r}", line, col, path)
    seed = kwargs.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        _, line, col = _locate(text, "seed")
        raise ConfigError("seed must be an unsigned 64-bit integer", line, col, path)

    tolerances = dict(DEFAULT_TOLERANCES)
    if "tolerances" in doc:
        start, line, col = _locate(text, "tolerances")
        if not isinstance(doc["tolerances"], dict):
            raise ConfigError("tolerances must be an object", line, col, path)
        for name, value in doc["tolerances"].items():
            if name not in DEFAULT_TOLERANCES:
                _, line, col = _locate(text, name, start)
                raise ConfigError(f"unknown tolerance {name!r}", line, col, path)
            tolerances[name] = float(value)
    kwargs["tolerances"] = tolerances

    for block, cls in BLOCKS.items():
        if block in doc:
            kwargs[block] = _build_block(cls, doc[block], text, path, block)
    return RunConfig(**kwargs)


def load_run_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=str(p)) from None
    return parse_run_config(text, str(p))


def parse_tolerance_flags(items) -> Dict[str, float]:
    """`name=value` strings from repeated --tol flags."""
    out: Dict[str, float] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected name=value, got {item!r}", path="--tol")
        name = name.strip()
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {name!r}", path="--tol")
        try:
            out[name] = float(value)
        except ValueError:
            raise ConfigError(f"tolerance {name} needs a number, got {value!r}", path="--tol") from None
    return out


def env_out_dir() -> Optional[str]:
    return os.getenv("ANYONLT_OUT") or None


def env_parallel(default: int = 1) -> int:
    raw = os.getenv("ANYONLT_PARALLEL")
    return int(raw) if raw and raw.strip().isdigit() else default


def env_log_level() -> str:
    return os.getenv("ANYONLT_LOG_LEVEL", "INFO").upper()
