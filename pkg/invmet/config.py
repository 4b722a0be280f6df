import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence


THREADS_ENV = "INVMET_THREADS"
DELTA0_DEFAULT = 0.5
SEED_DEFAULT = 42
DELTAS_DEFAULT = "1e-4:1e-1:16"

_BOOL_KEYS = ("timing", "quick", "kappa2")
_INT_KEYS = ("seed", "degree", "restarts", "budget", "centers")
_OPTIONAL_TEXT_KEYS = ("out", "only", "catalog")


@dataclass
class RunConfig:
    profile: str = "power:2"
    delta: float = 0.01
    delta0: float = DELTA0_DEFAULT
    xn: complex = 1.0
    xt: complex = 0.0
    gamma: Optional[float] = None
    seed: int = SEED_DEFAULT
    degree: int = 2
    restarts: int = 16
    budget: int = 20000
    suite: str = "all"
    out: Optional[str] = None
    timing: bool = False
    deltas: str = DELTAS_DEFAULT
    estimators: str = "closed_form"
    only: Optional[str] = None
    catalog: Optional[str] = None
    centers: int = 1000
    quick: bool = False
    kappa2: bool = False
    indicatrix: Optional[int] = None

    def __post_init__(self) -> None:
        self.xn = complex(self.xn)
        self.xt = complex(self.xt)

    def echo_lines(self, keys: Optional[Sequence[str]] = None) -> List[str]:
        """One ``key = value`` line per field; ``keys`` limits and orders them."""
        names = [f.name for f in fields(self)] if keys is None else list(keys)
        return [f"{name} = {getattr(self, name)}" for name in names]


def load_threads() -> int:
    raw = os.getenv(THREADS_ENV)
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise RuntimeError(f"{THREADS_ENV} must be an integer") from exc
    if value < 1:
        raise RuntimeError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


def _coerce(name: str, raw: str) -> Any:
    if name in ("delta", "delta0"):
        return float(raw)
    if name == "gamma":
        return None if raw.lower() in ("", "none") else float(raw)
    if name in ("xn", "xt"):
        return complex(raw)
    if name in _INT_KEYS:
        return int(raw)
    if name == "indicatrix":
        return None if raw.lower() in ("", "none") else int(raw)
    if name in _BOOL_KEYS:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if name in _OPTIONAL_TEXT_KEYS:
        return None if raw.lower() in ("", "none") else raw
    return raw


def load_config_file(path: Path) -> Dict[str, Any]:
    known = {f.name for f in fields(RunConfig)}
    values: Dict[str, Any] = {}
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise RuntimeError(f"{path}:{lineno} expected key=value, got {text!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in known:
                raise RuntimeError(f"{path}:{lineno} Unknown config key {key!r}")
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                raise RuntimeError(f"{path}:{lineno} invalid value for {key}: {raw!r}") from exc
    return values


def build_run_config(file_values: Dict[str, Any], overrides: Dict[str, Any]) -> RunConfig:
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in merged.items() if k in known})
