"""Incremental-detection cache: parse artifacts and verification results.

One pickle file under ``.clonewright/cache``, tagged with a format version.
Entries are keyed by content digest, so a cache hit is valid by
construction; a stale or corrupt file is discarded with a warning.
"""

from __future__ import annotations

import pickle
import sys
from pathlib import Path

FORMAT_TAG = "clonewright-cache-v1"
CACHE_RELPATH = Path(".clonewright") / "cache"


class CloneCache:
    def __init__(self):
        self.units: dict[tuple, object] = {}  # (file, text digest) -> SourceUnit
        self.verifications: dict[tuple, object] = {}  # refs key -> abstraction | None
        self.unit_hits = 0
        self.unit_misses = 0
        self.verify_hits = 0
        self.verify_misses = 0

    # -- units ---------------------------------------------------------

    def get_unit(self, key: tuple):
        unit = self.units.get(key)
        if unit is None:
            self.unit_misses += 1
            return None
        self.unit_hits += 1
        return unit

    def put_unit(self, key: tuple, unit) -> None:
        self.units[key] = unit

    # -- verifications ---------------------------------------------------

    def get_verification(self, key: tuple):
        if key in self.verifications:
            self.verify_hits += 1
            return True, self.verifications[key]
        self.verify_misses += 1
        return False, None

    def put_verification(self, key: tuple, value) -> None:
        self.verifications[key] = value

    # -- persistence -----------------------------------------------------

    @classmethod
    def load(cls, path: str | Path) -> "CloneCache":
        cache = cls()
        path = Path(path)
        if not path.is_file():
            return cache
        try:
            with open(path, "rb") as fh:
                payload = pickle.load(fh)
            if payload.get("format") != FORMAT_TAG:
                raise ValueError(f"unknown cache format {payload.get('format')!r}")
            cache.units = payload["units"]
            cache.verifications = payload["verifications"]
        except Exception as err:  # corrupt cache: recompute from scratch
            print(
                f"warning: discarding unreadable clone cache {path}: {err}",
                file=sys.stderr,
            )
            return cls()
        return cache

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "format": FORMAT_TAG,
            "units": self.units,
            "verifications": self.verifications,
        }
        tmp = path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            pickle.dump(payload, fh, protocol=pickle.HIGHEST_PROTOCOL)
        tmp.replace(path)
