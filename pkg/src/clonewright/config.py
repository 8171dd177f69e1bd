"""Detection thresholds and the project config file."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

CONFIG_FILE = ".clonewright.toml"

DEFAULTS = dict(min_len=5, min_toks=40, min_freq=2, max_new_params=4, min_similarity=0.8)


@dataclass(frozen=True)
class Thresholds:
    """The five detection parameters.

    min_len    minimum expressions per clone instance (OR-gated with min_toks)
    min_toks   minimum tokens per clone instance (0 disables)
    min_freq   minimum number of instances
    max_new_params  cap on placeholders introduced by the generalization
    min_similarity  size(template)/size(instance) admission threshold
    """

    min_len: int = 5
    min_toks: int = 40
    min_freq: int = 2
    max_new_params: int = 4
    min_similarity: float = 0.8

    def __post_init__(self):
        if self.min_len < 1:
            raise ValueError("min_len must be >= 1")
        if self.min_toks < 0:
            raise ValueError("min_toks must be >= 0")
        if self.min_freq < 2:
            raise ValueError("min_freq must be >= 2")
        if self.max_new_params < 1:
            raise ValueError("max_new_params must be >= 1")
        if not 0 < self.min_similarity <= 1:
            raise ValueError("min_similarity must be in (0, 1]")

    def for_seeding(self) -> "Thresholds":
        """Relaxed size gates for candidate seeding.

        Seeds may start below the final size gates and grow past them during
        extension, so gating happens only on the finished classes.
        """
        return replace(self, min_len=1, min_toks=0, min_freq=2)


def load_config(root: str | Path) -> dict:
    """Read threshold defaults from ``.clonewright.toml`` key/value lines."""
    path = Path(root) / CONFIG_FILE
    out: dict = {}
    if not path.is_file():
        return out
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            continue
        out[key] = float(value) if key == "min_similarity" else int(value)
    return out


def thresholds_from(root: str | Path, **overrides) -> Thresholds:
    values = dict(load_config(root))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Thresholds(**values)


def port_override() -> int | None:
    value = os.environ.get("CLONEWRIGHT_PORT")
    return int(value) if value else None
