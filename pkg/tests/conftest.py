# tests/conftest.py
# raagkit - テスト共通のフィクスチャ

import os
import random
import sys
from itertools import combinations
from pathlib import Path

import networkx as nx
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from scripts.graph_core import SimplicialGraph  # noqa: E402

FIXTURES = ROOT / "data" / "fixtures"


def random_graph(rng: random.Random, n: int, p: float = 0.5) -> SimplicialGraph:
    labels = "abcdefgh"[:n]
    edges = [(u, v) for u, v in combinations(labels, 2) if rng.random() < p]
    return SimplicialGraph.from_edges(labels, edges)


def graphs_up_to(n: int):
    """n 頂点以下の全てのラベル付きグラフ"""
    for k in range(1, n + 1):
        labels = "abcdefgh"[:k]
        pairs = list(combinations(labels, 2))
        for bits in range(1 << len(pairs)):
            yield SimplicialGraph.from_edges(labels, [p for i, p in enumerate(pairs) if bits >> i & 1])


def graphs_up_to_isomorphism(n: int):
    """n 頂点以下のグラフを同型類ごとに1つずつ"""
    kept = []
    for g in graphs_up_to(n):
        nxg = g.to_networkx()
        if not any(nx.is_isomorphic(nxg, other) for other in kept):
            kept.append(nxg)
            yield g


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 網羅的で時間のかかるテスト")


@pytest.fixture
def rng():
    return random.Random(int(os.environ.get("RAAGKIT_SEED", "0")))


@pytest.fixture
def edge():
    return SimplicialGraph.path(["a", "b"])


@pytest.fixture
def path3():
    return SimplicialGraph.path(["a", "b", "c"])


@pytest.fixture
def path4():
    return SimplicialGraph.path(["a", "b", "c", "d"])


@pytest.fixture
def two_edges():
    return SimplicialGraph.from_edges("abcd", [("a", "b"), ("c", "d")])


@pytest.fixture
def square():
    return SimplicialGraph.cycle(["a", "b", "c", "d"])


@pytest.fixture
def free2():
    return SimplicialGraph.discrete(["a", "b"])


@pytest.fixture
def fixtures_dir():
    return FIXTURES
