"""
Shared fixtures.
"""

import json
import os
import sys

import pytest
from loguru import logger

from swgossip.core.config import get_settings
from swgossip.graph import complete_graph, from_edge_list, generate_rgg, is_connected


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    """Each test sees default settings unless it sets SWGOSSIP_* itself."""
    # CLI runs bind sinks to whatever stderr is current
    logger.remove()
    logger.add(lambda message: sys.stderr.write(message), level="INFO")
    for key in list(os.environ):
        if key.startswith("SWGOSSIP_"):
            monkeypatch.delenv(key, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def p3():
    """Path 0-1-2."""
    return from_edge_list(3, [(0, 1), (1, 2)])


@pytest.fixture
def k2():
    return complete_graph(2)


@pytest.fixture
def two_components():
    return from_edge_list(4, [(0, 1), (2, 3)])


@pytest.fixture
def connected_rgg():
    """Connected RGG with N = 10, r0 = 4 (first connected seed from 0)."""
    seed = 0
    while True:
        g = generate_rgg(10, 4.0, seed)
        if is_connected(g):
            return g
        seed += 1


@pytest.fixture
def write_config(tmp_path):
    """Write a config document and return its path."""

    def _write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
