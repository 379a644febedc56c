"""
Persistent cache for interpolated structure constants.

Finite-field enumeration is the slow part of the cyclic Hall algebra. Each
interpolated count is a polynomial in q, stored here as its integer
coefficient list (constant term first) under a string key, and persisted
as JSON so that repeated runs skip the enumeration.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Dict, List, Optional

logger = logging.getLogger(__name__)


class StructureCache:
    """
    Key-value store of q-polynomials used by the cyclic Hall engine.

    Keys are built by the callers from the engine name and the exact
    arguments of the count (e.g. "cyclic:p=2:a=...:b=...:c=...").
    """

    def __init__(self, state_file: Optional[str] = None, persist: bool = True):
        """
        Initialize the cache.

        Args:
            state_file: JSON file to persist entries across runs
            persist: Write every new entry back to state_file
        """
        self.state_file = Path(state_file) if state_file else Path(".loopcanon_structure_constants.json")
        self.persist = persist
        self.entries: Dict[str, List[int]] = {}
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

        self._load_state()

        logger.info(f"StructureCache initialized with {len(self.entries)} entries from {self.state_file}")

    def _load_state(self):
        """Load previously computed polynomials from the state file."""
        if self.state_file.exists():
            try:
                with open(self.state_file, "r") as f:
                    raw = json.load(f)
                self.entries = {str(k): [int(c) for c in v] for k, v in raw.items()}
                logger.debug(f"Loaded {len(self.entries)} cached structure constants")
            except Exception as e:
                logger.warning(f"Failed to load structure cache: {e}")
                self.entries = {}

    def _save_state(self):
        """Save current entries to the state file."""
        if not self.persist:
            return
        try:
            self.state_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.state_file, "w") as f:
                json.dump(self.entries, f, sort_keys=True)
        except Exception as e:
            logger.warning(f"Failed to save structure cache: {e}")

    def get(self, key: str) -> Optional[List[int]]:
        """
        Look up a polynomial.

        Args:
            key: Cache key

        Returns:
            Coefficient list (constant term first), or None when absent
        """
        with self._lock:
            value = self.entries.get(key)
            if value is None:
                self.misses += 1
                return None
            self.hits += 1
        logger.debug(f"Structure cache hit: {key}")
        return list(value)

    def put(self, key: str, coeffs: List[int]):
        """
        Store a polynomial and persist the cache.

        Args:
            key: Cache key
            coeffs: Coefficient list (constant term first)
        """
        with self._lock:
            self.entries[key] = [int(c) for c in coeffs]
            self._save_state()

    def get_status(self) -> dict:
        """
        Get current cache status.

        Returns:
            Dictionary with status information
        """
        return {
            "entries": len(self.entries),
            "hits": self.hits,
            "misses": self.misses,
            "state_file": str(self.state_file),
            "persist": self.persist,
        }

    def reset(self):
        """Clear all cached entries."""
        with self._lock:
            self.entries.clear()
            self.hits = 0
            self.misses = 0
            self._save_state()
        logger.info("Structure cache reset")


# Global cache instance
_global_structure_cache = None


def get_structure_cache(config=None) -> StructureCache:
    """
    Get the global structure-constant cache.

    Args:
        config: Optional Config; its cache_file is used on first call

    Returns:
        Shared StructureCache instance
    """
    global _global_structure_cache
    if _global_structure_cache is None:
        if config is not None:
            _global_structure_cache = StructureCache(state_file=str(config.cache_file))
        else:
            _global_structure_cache = StructureCache(persist=False)
    return _global_structure_cache


def set_structure_cache(cache: Optional[StructureCache]):
    """Replace the global cache (None drops it)."""
    global _global_structure_cache
    _global_structure_cache = cache
