"""Run configuration.

A config file is either flat ``key = value`` lines (``#`` comments
allowed) or a JSON object with the same keys. Only ``manifest`` and
``output_dir`` are required; everything else has the documented
default. Unknown keys are rejected rather than ignored so a typo cannot
silently fall back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError

DEFAULT_THRESHOLDS = tuple(i / 10 for i in range(1, 11))
METRIC_GROUPS = ("voxel", "surface", "instance")


@dataclass(frozen=True)
class RunConfig:
    manifest: Path
    output_dir: Path
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    detection_dice: float = 0.001
    min_component_voxels: int = 50
    connectivity: int = 26
    workers: int = 1
    metrics: tuple[str, ...] = METRIC_GROUPS
    figures: bool = True
    n_volume_bins: int = 10
    equal_width_bins: bool = False
    correlation_method: str = "pearson"

    def validated(self) -> "RunConfig":
        if not self.thresholds:
            raise ConfigError("thresholds must not be empty")
        thr = tuple(sorted(set(float(t) for t in self.thresholds)))
        for t in thr:
            if not (0.0 < t <= 1.0):
                raise ConfigError(f"threshold {t} outside (0, 1]")
        if not (0.0 <= self.detection_dice < 1.0):
            raise ConfigError(f"detection_dice {self.detection_dice} outside [0, 1)")
        if self.min_component_voxels < 1:
            raise ConfigError("min_component_voxels must be at least 1")
        if self.connectivity not in (6, 18, 26):
            raise ConfigError(f"connectivity must be 6, 18 or 26, got {self.connectivity}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        groups = tuple(self.metrics)
        unknown = [g for g in groups if g not in METRIC_GROUPS]
        if unknown:
            raise ConfigError(f"unknown metric groups {unknown}; choose from {METRIC_GROUPS}")
        if "voxel" not in groups:
            raise ConfigError("the voxel metric group cannot be disabled")
        if self.n_volume_bins < 1:
            raise ConfigError("n_volume_bins must be positive")
        if self.correlation_method not in ("pearson", "spearman"):
            raise ConfigError("correlation_method must be pearson or spearman")
        return replace(self, thresholds=thr, metrics=groups)


_BOOL_KEYS = {"figures", "equal_width_bins"}
_INT_KEYS = {"min_component_voxels", "connectivity", "workers", "n_volume_bins"}
_FLOAT_KEYS = {"detection_dice"}
_LIST_KEYS = {"thresholds", "metrics"}
_PATH_KEYS = {"manifest", "output_dir"}
_STR_KEYS = {"correlation_method"}
_ALL_KEYS = _BOOL_KEYS | _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _PATH_KEYS | _STR_KEYS


def _parse_bool(key: str, raw: str) -> bool:
    low = str(raw).strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: cannot read {raw!r} as a boolean")


def _raw_pairs_from_text(text: str, path: Path) -> dict[str, object]:
    pairs: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def load_config(path: str | Path) -> RunConfig:
    """Parse a config file and apply defaults and validation."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: JSON config must be an object")
    else:
        raw = _raw_pairs_from_text(text, path)

    unknown = sorted(set(raw) - _ALL_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    for required in ("manifest", "output_dir"):
        if required not in raw:
            raise ConfigError(f"{path}: missing required key {required!r}")

    kwargs: dict[str, object] = {}
    base = path.parent
    for key, value in raw.items():
        try:
            if key in _PATH_KEYS:
                p = Path(str(value))
                kwargs[key] = p if p.is_absolute() else (base / p)
            elif key in _BOOL_KEYS:
                kwargs[key] = value if isinstance(value, bool) else _parse_bool(key, str(value))
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _STR_KEYS:
                kwargs[key] = str(value).strip()
            elif key == "thresholds":
                if isinstance(value, str):
                    parts = [v for v in value.replace(",", " ").split() if v]
                    kwargs[key] = tuple(float(v) for v in parts)
                else:
                    kwargs[key] = tuple(float(v) for v in value)
            elif key == "metrics":
                if isinstance(value, str):
                    parts = [v for v in value.replace(",", " ").split() if v]
                    kwargs[key] = tuple(parts)
                else:
                    kwargs[key] = tuple(str(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: bad value for {key!r}: {exc}") from None

    return RunConfig(**kwargs).validated()  # type: ignore[arg-type]
