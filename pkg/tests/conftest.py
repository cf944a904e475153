import json
import logging
import os
import sys
from fractions import Fraction

import pytest

# Ensure project root is on sys.path so src.* imports work
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from src.caching import SystemParams, place_caches
from src.conflict_graph import ConflictGraph


def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line(
        "markers", "slow: mark test as slow (deselect with '-m \"not slow\"')"
    )


@pytest.fixture(autouse=True)
def _isolated_runtime(monkeypatch):
    """Single-process sweeps and a fresh logging setup for every test."""
    import src.utils.log as log_mod
    monkeypatch.setenv("CODED_GROUPCAST_THREADS", "1")
    monkeypatch.delenv("CODED_GROUPCAST_LOG_DIR", raising=False)
    root = logging.getLogger()
    handlers = list(root.handlers)
    level = root.level
    log_mod._configured = False
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)
    log_mod._configured = False


@pytest.fixture
def base_params():
    """n = m = 3, M = 1, L = 2 (t = 1)."""
    return SystemParams(3, 3, Fraction(1), 2)


@pytest.fixture
def base_placement(base_params):
    return place_caches(base_params)


@pytest.fixture
def k3_graph():
    edges = [(u, v) for u in range(3) for v in range(3) if u != v]
    return ConflictGraph.from_edges(3, edges)


@pytest.fixture
def c5_graph():
    edges = []
    for v in range(5):
        edges += [(v, (v + 1) % 5), ((v + 1) % 5, v)]
    return ConflictGraph.from_edges(5, edges)


@pytest.fixture
def path_graph():
    """Directed path 0 -> 1 -> 2."""
    return ConflictGraph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def tmp_config(tmp_path):
    """Create a temporary config.json and return its path."""
    config = {
        "solver": {"max_exact_vertices": 30, "max_lp_vertices": 12},
        "codec": {"field_degree": 9, "verify_width": 4},
        "sweep": {"workers": 2},
        "logging": {"structured": False, "level": "WARNING"},
    }
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps(config))
    return str(config_file)


@pytest.fixture
def bad_config(tmp_path):
    """Create an invalid JSON config file and return its path."""
    config_file = tmp_path / "config.json"
    config_file.write_text("{invalid json content")
    return str(config_file)
