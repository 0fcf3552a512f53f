"""Shared fixtures: the two reference plants and the bundled configs."""

import json
from pathlib import Path

import numpy as np
import pytest

from spadp import SpSystem, build_network

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SP_BLOCKS = {
    "a11": [[0.0, 0.4], [0.0, 0.0]],
    "a12": [[0.0, 0.0], [0.345, 0.0]],
    "a21": [[0.0, -0.524], [0.0, 0.0]],
    "a22": [[-0.465, 0.262], [0.0, -1.0]],
    "b1": [[1.0], [1.0]],
    "b2": [[1.0], [1.0]],
}

RING_EDGES = [(4, 5, 18.0), (9, 10, 19.0), (14, 15, 20.0),
              (19, 20, 21.0), (24, 0, 22.0)]


def make_sp(epsilon: float = 0.01) -> SpSystem:
    return SpSystem(epsilon=epsilon, **{k: np.array(v) for k, v in SP_BLOCKS.items()})


@pytest.fixture
def sp71() -> SpSystem:
    return make_sp()


@pytest.fixture
def ref_network():
    return build_network([5, 5, 5, 5, 5], intra_weight=1.0,
                         inter_edges=RING_EDGES, epsilon=0.02)


def load_config(name: str) -> dict:
    return json.loads((CONFIG_DIR / name).read_text())


@pytest.fixture
def sp_config() -> dict:
    return load_config("sp_7_1.json")


@pytest.fixture
def cluster_config() -> dict:
    return load_config("cluster_7_1.json")


@pytest.fixture
def decentralized_config() -> dict:
    return load_config("decentralized_7_2.json")


@pytest.fixture
def of_config() -> dict:
    return load_config("output_feedback_7_3.json")
