#!/usr/bin/env python3
"""Report the structure-constant cache."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from src.errors import ConfigError
from src.utils.cache import get_structure_cache
from src.utils.config import Config


def main() -> int:
    try:
        config = Config.from_env()
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return 2

    cache = get_structure_cache(config)
    status = cache.get_status()

    print("=" * 70)
    print("📊 Structure-Constant Cache Status")
    print("=" * 70)
    print(f"Cache file: {status['state_file']}")
    print(f"Persisted to disk: {'✅ YES' if status['persist'] else '❌ NO'}")
    print(f"Cached polynomials: {status['entries']}")
    print(f"Interpolation points: {', '.join(map(str, config.primes))} (held out: {config.check_prime})")
    print("=" * 70)

    if not Path(status["state_file"]).exists():
        print("\n⏳ No cache file yet; it is created on the first cyclic Hall computation.")
    else:
        print(f"\n✅ {status['entries']} structure polynomials ready for reuse.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
