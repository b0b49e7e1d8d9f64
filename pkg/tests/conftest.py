"""
Configuração comum dos testes
"""

import os
import sys

import pytest

# Adicionar a raiz do projeto ao path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import offspring  # noqa: E402
from sampler import make_rng  # noqa: E402


@pytest.fixture
def catalan():
    return offspring.builtin('catalan')


@pytest.fixture
def full_binary():
    return offspring.builtin('full-binary')


@pytest.fixture
def ternary():
    """{0: 2/3, 3: 1/3}, o caso d = 3"""
    return offspring.from_spec('pmf:2/3,0,0,1/3')


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture(autouse=True)
def _no_thread_override(monkeypatch):
    monkeypatch.delenv('STRAHLER_THREADS', raising=False)
