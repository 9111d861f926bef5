"""Pipeline configuration and its key=value file format.

The file format is one ``key = value`` assignment per line; ``#`` starts a
comment. Unknown keys and out-of-range values are rejected. ``auto`` for the
connection tolerances means scale-free defaults derived from page statistics
(a third of the median line height for gaps, half the median separator
thickness for offsets).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .labels import InformativeLabel
from .smoothing import DEFAULT_TIE_BREAK

_TIE_NAMES = {
    "vsep": InformativeLabel.VERTICAL_SEPARATOR,
    "hsep": InformativeLabel.HORIZONTAL_SEPARATOR,
    "title": InformativeLabel.TITLE,
    "text": InformativeLabel.TEXT_LINE,
    "noise": InformativeLabel.NOISE,
}
_TIE_LABELS = {v: k for k, v in _TIE_NAMES.items()}

GAP_TOL_FACTOR = 0.33  # of median line height
OFFSET_TOL_FACTOR = 0.5  # of median separator thickness


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    connectivity: int = 8
    tie_break: tuple[InformativeLabel, ...] = DEFAULT_TIE_BREAK
    split_factor: float = 2.5
    split_rounds: int = 3
    gap_tol: Optional[float] = None  # None = auto
    offset_tol: Optional[float] = None  # None = auto
    max_separator_thickness: float = 24.0
    iou_threshold: float = 0.8
    out_dir: str = "out"
    label_format: str = "pgm"
    workers: int = 1

    def validate(self) -> None:
        if self.connectivity not in (4, 8):
            raise ConfigError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if sorted(self.tie_break) != sorted(_TIE_NAMES.values()):
            raise ConfigError("tie_break must order exactly the five non-background labels")
        if self.split_factor <= 1.0:
            raise ConfigError("split_factor must exceed 1.0")
        if self.split_rounds < 1:
            raise ConfigError("split_rounds must be >= 1")
        for name in ("gap_tol", "offset_tol"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigError(f"{name} must be >= 0 or auto")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigError("iou_threshold must be in (0, 1]")
        if self.label_format not in ("pgm", "png"):
            raise ConfigError(f"label_format must be pgm or png, got {self.label_format}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.max_separator_thickness <= 0:
            raise ConfigError("max_separator_thickness must be positive")


def parse_config(text: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    cfg = base or PipelineConfig()
    updates: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            updates[key] = _parse_value(key, value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


def _parse_value(key: str, value: str) -> object:
    if key == "connectivity":
        return int(value)
    if key == "tie_break":
        names = [n.strip() for n in value.split(",")]
        unknown = [n for n in names if n not in _TIE_NAMES]
        if unknown:
            raise ConfigError(f"unknown tie_break labels: {unknown}")
        return tuple(_TIE_NAMES[n] for n in names)
    if key in ("split_factor", "iou_threshold", "max_separator_thickness"):
        return float(value)
    if key in ("split_rounds", "workers"):
        return int(value)
    if key in ("gap_tol", "offset_tol"):
        return None if value == "auto" else float(value)
    if key == "out_dir":
        return value
    if key == "label_format":
        return value
    raise ConfigError(f"unknown configuration key: {key}")


def serialize_config(cfg: PipelineConfig) -> str:
    tie = ",".join(_TIE_LABELS[lbl] for lbl in cfg.tie_break)
    lines = [
        "# newsgrid pipeline configuration",
        f"connectivity = {cfg.connectivity}",
        f"tie_break = {tie}",
        f"split_factor = {cfg.split_factor}",
        f"split_rounds = {cfg.split_rounds}",
        f"gap_tol = {'auto' if cfg.gap_tol is None else cfg.gap_tol}",
        f"offset_tol = {'auto' if cfg.offset_tol is None else cfg.offset_tol}",
        f"max_separator_thickness = {cfg.max_separator_thickness}",
        f"iou_threshold = {cfg.iou_threshold}",
        f"out_dir = {cfg.out_dir}",
        f"label_format = {cfg.label_format}",
        f"workers = {cfg.workers}",
    ]
    return "\n".join(lines) + "\n"
