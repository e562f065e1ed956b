import pytest


@pytest.fixture(autouse=True)
def fresh_cache(tmp_path, monkeypatch):
    """Every test fits its own constants unless it sets a cache directory."""
    monkeypatch.delenv("PARABREN_CACHE", raising=False)
    yield
