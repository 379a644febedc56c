"""Shared fixtures and hypothesis strategies."""

import pytest
from hypothesis import strategies as st

from src.algebra.coeff import LaurentScalar
from src.utils.cache import StructureCache, set_structure_cache

laurent_scalars = st.dictionaries(
    st.integers(min_value=-8, max_value=8), st.integers(min_value=-20, max_value=20), max_size=5
).map(LaurentScalar)


@pytest.fixture(autouse=True)
def in_memory_cache(tmp_path):
    """Give each test a private structure cache."""
    cache = StructureCache(state_file=str(tmp_path / "cache.json"), persist=False)
    set_structure_cache(cache)
    yield cache
    set_structure_cache(None)
