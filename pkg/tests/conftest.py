"""
Fixtures compartidos de los tests.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import socket

import pytest

from src.core import data_path
from src.model.params import build_params, load_params
from src.model.queries import parse_steps_query
from src.runtime.contract import load_contract
from src.testgen.annotations import load_annotations
from src.testgen.generator import find_witness


@pytest.fixture
def hacer_params():
    """Fábrica de SystemParams: N=2, q=3, DICT/CENT fijo salvo override."""

    def _hacer(**overrides):
        data = {
            "n_services": 2,
            "queue_size": 3,
            "config_mode": "fixed:DICT/CENT;DICT/CENT,DICT/CENT",
        }
        data.update(overrides)
        return build_params(data)

    return _hacer


@pytest.fixture
def params_desk_small():
    return load_params("desk-small")


@pytest.fixture
def contrato_cafe():
    return load_contract("cafe")


@pytest.fixture(scope="session")
def tabla_curada():
    return load_annotations("curated")


@pytest.fixture(scope="session")
def testigo_cafe():
    """Testigo BFS de la steps-query del café (DICT/CENT)."""
    constraints = parse_steps_query(data_path("steps", "dict-cent.steps").read_text(encoding="utf-8"))
    return find_witness(load_params("cafe-dict-cent"), constraints)


@pytest.fixture
def puerto_libre():
    """Puerto TCP libre en 127.0.0.1."""

    def _puerto() -> int:
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
            s.bind(("127.0.0.1", 0))
            return s.getsockname()[1]

    return _puerto
