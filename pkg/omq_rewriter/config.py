"""Run profiles, bench case files and environment settings.

A run profile is a YAML (or JSON) mapping of :class:`RunConfig` keys.  It may
``extends`` other profiles; parents are merged first and the child overlays
them.  Relative paths resolve against the directory of the profile that
names them.
"""

import json
import logging
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Set

from .engine import STRATEGIES, TMIN_MODES, Budget
from .errors import ConfigError

try:
    import yaml  # type: ignore
    _yaml_safe_load = yaml.safe_load
except ImportError:
    _yaml_safe_load = None

logger = logging.getLogger(__name__)

EMIT_FORMATS = ("ucq", "datalog", "sql")
SEED_ENV = "OMQ_REWRITER_SEED"
DEFAULT_SEED = 20240521

_PATH_KEYS = ("tbox", "query", "sigma", "abox", "out")
_BUDGET_KEYS = {"queries": int, "depth": int, "seconds": (int, float)}
_VALID_KEYS = set(_PATH_KEYS) | {
    "strategy", "budget", "emit", "verify", "verify_max_individuals",
    "verify_max_assertions", "tmin", "prune_subsumed", "probe_depth",
    "description", "extends",
}


@dataclass(frozen=True)
class RunConfig:
    tbox: Optional[Path] = None
    query: Optional[Path] = None
    sigma: Optional[Path] = None
    abox: Optional[Path] = None
    strategy: str = "auto"
    budget_queries: int = 100000
    budget_depth: int = 30
    budget_seconds: float = 300.0
    emit: str = "ucq"
    verify: bool = False
    verify_max_individuals: int = 3
    verify_max_assertions: Optional[int] = None
    tmin: str = "materialized"
    prune_subsumed: bool = False
    probe_depth: int = 8
    out: Optional[Path] = None
    description: str = ""

    def budget(self) -> Budget:
        return Budget(self.budget_queries, self.budget_depth, self.budget_seconds)


def _parse_text(text: str) -> Any:
    """Parse YAML or JSON text, preferring YAML when available."""
    if _yaml_safe_load:
        return _yaml_safe_load(text)
    return json.loads(text)


def _read_mapping(path: Path) -> Dict[str, Any]:
    try:
        data = _parse_text(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: a profile must be a mapping")
    return data


def _merge(base: Dict[str, Any], overlay: Mapping[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _resolve_extends(name: str, base_dir: Path) -> Optional[Path]:
    for ext in (".yaml", ".yml", ".json"):
        candidate = base_dir / f"{name}{ext}"
        if candidate.exists():
            return candidate
    literal = base_dir / name
    return literal if literal.exists() else None


def load_run_profile(path: str, *, _visited: Optional[Set[str]] = None) -> Dict[str, Any]:
    """Load a run profile with its ``extends`` chain merged in.

    Raises:
        ConfigError: If a file is missing or unparsable, or a cycle is detected.
    """
    if _visited is None:
        _visited = set()
    p = Path(path)
    real = str(p.resolve())
    if real in _visited:
        raise ConfigError(f"Circular extends detected: {real}")
    _visited.add(real)

    data = _read_mapping(p)
    for key in _PATH_KEYS:
        if isinstance(data.get(key), str):
            data[key] = str((p.parent / data[key]).resolve())

    extends = data.pop("extends", None)
    if extends:
        if isinstance(extends, str):
            extends = [extends]
        base: Dict[str, Any] = {}
        for parent_name in extends:
            parent_path = _resolve_extends(str(parent_name), p.parent)
            if parent_path is None:
                raise ConfigError(f"Extended profile '{parent_name}' not found from {path}")
            base = _merge(base, load_run_profile(str(parent_path), _visited=_visited))
        data = _merge(base, data)
    logger.debug("loaded run profile %s", real)
    return data


def _positive_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value > 0


def validate_config(data: Any) -> List[str]:
    """Return a list of validation error messages (empty = valid)."""
    errors: List[str] = []
    if not isinstance(data, dict):
        return ["Profile must be a mapping"]

    unknown = set(data) - _VALID_KEYS
    if unknown:
        errors.append(f"Unknown keys: {', '.join(sorted(unknown))}")

    for key in _PATH_KEYS + ("description",):
        if data.get(key) is not None and not isinstance(data[key], str):
            errors.append(f"'{key}' must be a string")

    choices = {"strategy": STRATEGIES, "emit": EMIT_FORMATS, "tmin": TMIN_MODES}
    for key, allowed in choices.items():
        if data.get(key) is not None and data[key] not in allowed:
            errors.append(f"'{key}' must be one of {', '.join(allowed)}")

    budget = data.get("budget")
    if budget is not None:
        if not isinstance(budget, dict):
            errors.append("'budget' must be a mapping")
        else:
            extra = set(budget) - set(_BUDGET_KEYS)
            if extra:
                errors.append(f"Unknown budget keys: {', '.join(sorted(extra))}")
            for key, kind in _BUDGET_KEYS.items():
                value = budget.get(key)
                if value is None:
                    continue
                if isinstance(value, bool) or not isinstance(value, kind) or value <= 0:
                    errors.append(f"'budget.{key}' must be a positive number")

    for key in ("verify", "prune_subsumed"):
        if data.get(key) is not None and not isinstance(data[key], bool):
            errors.append(f"'{key}' must be a boolean")

    for key in ("verify_max_individuals", "verify_max_assertions", "probe_depth"):
        if data.get(key) is not None and not _positive_int(data[key]):
            errors.append(f"'{key}' must be a positive integer")

    return errors


def _from_mapping(data: Mapping[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in data.items():
        if key == "budget":
            for sub, v in value.items():
                out[f"budget_{sub}"] = v
        elif key in _PATH_KEYS:
            out[key] = Path(value) if value is not None else None
        elif key != "extends":
            out[key] = value
    return out


def build_run_config(
    profiles: Sequence[str] = (), overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """Defaults, then each profile in order, then the non-None *overrides*."""
    merged: Dict[str, Any] = {}
    for path in profiles:
        data = load_run_profile(path)
        errors = validate_config(data)
        if errors:
            raise ConfigError(f"{path}: " + "; ".join(errors))
        merged = _merge(merged, data)
    values = _from_mapping(merged)
    known = {f.name for f in fields(RunConfig)}
    for key, value in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown setting {key!r}")
        if value is not None:
            values[key] = Path(value) if key in _PATH_KEYS else value
    cfg = RunConfig(**values)
    cfg.budget()
    return cfg


@dataclass(frozen=True)
class BenchCase:
    name: str
    ontology: str
    tbox: Path
    query: Path
    sigma: Optional[Path] = None
    strategy: str = "auto"


def load_bench_case(path: str) -> BenchCase:
    p = Path(path)
    data = _read_mapping(p)
    errors: List[str] = []
    unknown = set(data) - {"name", "ontology", "tbox", "query", "sigma", "strategy"}
    if unknown:
        errors.append(f"Unknown keys: {', '.join(sorted(unknown))}")
    for key in ("tbox", "query"):
        if not isinstance(data.get(key), str):
            errors.append(f"missing '{key}'")
    if data.get("strategy", "auto") not in STRATEGIES:
        errors.append(f"'strategy' must be one of {', '.join(STRATEGIES)}")
    if errors:
        raise ConfigError(f"{path}: " + "; ".join(errors))
    sigma = data.get("sigma")
    return BenchCase(
        name=str(data.get("name", p.stem)),
        ontology=str(data.get("ontology", p.stem)),
        tbox=(p.parent / data["tbox"]).resolve(),
        query=(p.parent / data["query"]).resolve(),
        sigma=(p.parent / sigma).resolve() if sigma else None,
        strategy=data.get("strategy", "auto"),
    )


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
