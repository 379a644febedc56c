"""Tests for the structure-constant cache."""

import json

from src.utils.cache import StructureCache, get_structure_cache, set_structure_cache


def test_get_and_put(tmp_path):
    cache = StructureCache(state_file=str(tmp_path / "c.json"), persist=False)
    assert cache.get("k") is None
    cache.put("k", [1, 0, 1])
    assert cache.get("k") == [1, 0, 1]
    status = cache.get_status()
    assert (status["entries"], status["hits"], status["misses"]) == (1, 1, 1)


def test_entries_persist_across_instances(tmp_path):
    path = tmp_path / "nested" / "c.json"
    StructureCache(state_file=str(path)).put("cyclic:x", [0, 2])
    assert json.loads(path.read_text()) == {"cyclic:x": [0, 2]}
    assert StructureCache(state_file=str(path)).get("cyclic:x") == [0, 2]


def test_non_persistent_cache_writes_nothing(tmp_path):
    path = tmp_path / "c.json"
    StructureCache(state_file=str(path), persist=False).put("k", [1])
    assert not path.exists()


def test_corrupt_file_is_ignored(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert StructureCache(state_file=str(path)).get_status()["entries"] == 0


def test_reset(tmp_path):
    cache = StructureCache(state_file=str(tmp_path / "c.json"))
    cache.put("k", [3])
    cache.get("k")
    cache.reset()
    assert cache.get_status()["entries"] == 0
    assert cache.get_status()["hits"] == 0


def test_global_cache(in_memory_cache):
    assert get_structure_cache() is in_memory_cache
    set_structure_cache(None)
    fresh = get_structure_cache()
    assert fresh is not in_memory_cache
    assert fresh.persist is False
