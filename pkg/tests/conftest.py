"""Fixtures compartilhadas dos testes"""

import math
from pathlib import Path

import numpy as np
import pytest

from potentials import Branch, TrainmonCircuit

DATA_DIR = Path(__file__).resolve().parent / "data"
REPO_DIR = Path(__file__).resolve().parent.parent
CONFIGS_DIR = REPO_DIR / "configs"


def make_circuit(e_c, coefficients, n_g=0.0):
    """Circuito a partir de coeficientes com sinal {n: c_n}: c_n < 0 vira φ_n = n·π"""
    branches = tuple(Branch(n=n, e_j=abs(c), phi_branch=n * math.pi if c < 0 else 0.0)
                     for n, c in sorted(coefficients.items()))
    return TrainmonCircuit(e_c=e_c, branches=branches, n_g=n_g)


@pytest.fixture
def unit_circuit():
    """Trainmon 124 com E_J unitárias, fluxos nulos e E_C = 0"""
    return make_circuit(0.0, {1: 1.0, 2: 1.0, 4: 1.0})


@pytest.fixture
def circuit_124():
    """Trainmon 124 no regime E_J ≫ E_C, todos os coeficientes positivos"""
    return make_circuit(0.5, {1: 8.0, 2: 4.0, 4: 2.0})


@pytest.fixture
def random_circuits():
    """Cinco circuitos 124 com coeficientes em [0.2, 3] GHz e sinais aleatórios"""
    rng = np.random.default_rng(20240531)
    circuits = []
    for _ in range(5):
        coefficients = {n: float(rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0]))
                        for n in (1, 2, 4)}
        circuits.append(make_circuit(float(rng.uniform(0.1, 1.0)), coefficients))
    return circuits


@pytest.fixture
def golden_matrix_path():
    return DATA_DIR / "unit_124_matrix.csv"


@pytest.fixture
def configs_dir():
    return CONFIGS_DIR
