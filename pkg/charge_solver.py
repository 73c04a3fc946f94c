#!/usr/bin/env python3
"""
Módulo do Solver na Base de Carga
Monta o Hamiltoniano do Trainmon na rede de cargas fracionárias k = m/(i·lcm(I))
e calcula autovalores e energias de transição
"""

import math
import time
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from exceptions import GridError, HermiticityError, SchemaError, SolverError, TruncationError
from potentials import TrainmonCircuit

logger = logging.getLogger(__name__)

HERMITICITY_TOLERANCE = 1e-14
DEFAULT_K_MAX_START = 8
DEFAULT_K_MAX_LIMIT = 512


@dataclass(frozen=True)
class ChargeGrid:
    """
    Rede de cargas k ∈ {m/(i·lcm)} com |k| ≤ k_max

    `indices` guarda os inteiros m; `values` as cargas correspondentes.
    """

    lcm: int
    resolution: int
    k_max: int

    @property
    def steps_per_charge(self) -> int:
        return self.lcm * self.resolution

    @property
    def spacing(self) -> float:
        return 1.0 / self.steps_per_charge

    @property
    def dimension(self) -> int:
        return 2 * self.k_max * self.steps_per_charge + 1

    @property
    def indices(self) -> np.ndarray:
        half = self.k_max * self.steps_per_charge
        return np.arange(-half, half + 1)

    @property
    def values(self) -> np.ndarray:
        return self.indices / self.steps_per_charge


@dataclass(frozen=True)
class Spectrum:
    """Autovalores crescentes (GHz), E01/E12 e a procedência do cálculo"""

    eigenvalues: Tuple[float, ...]
    e01: Optional[float]
    e12: Optional[float]
    k_max_used: Optional[int] = None
    dimension: int = 0
    method: str = "charge"
    validity_ratio: Optional[float] = None
    warnings: Tuple[str, ...] = field(default_factory=tuple)


def build_charge_grid(branch_set: Sequence[int], k_max: int, resolution: int = 1) -> ChargeGrid:
    """
    Constrói a rede de cargas para o conjunto de ramos I

    Args:
        branch_set: Conjunto I de números de junções
        k_max: Corte de carga (≥ 1)
        resolution: Fator i da resolução (≥ 1)

    Returns:
        ChargeGrid com espaçamento 1/(i·lcm(I))
    """
    if not branch_set:
        raise GridError("Conjunto de ramos vazio")
    if k_max < 1:
        raise SchemaError(f"k_max deve ser ≥ 1, recebido {k_max}")
    if resolution < 1:
        raise SchemaError(f"resolution deve ser ≥ 1, recebido {resolution}")
    return ChargeGrid(lcm=math.lcm(*[int(n) for n in branch_set]),
                      resolution=int(resolution), k_max=int(k_max))


def _phase_factor(shift: float) -> complex:
    """exp(i·shift), exato quando shift é múltiplo de π/2"""
    reduced = shift - 2 * math.pi * math.ceil((shift - math.pi) / (2 * math.pi))
    for angle, value in ((0.0, 1.0), (math.pi, -1.0), (math.pi / 2, 1j), (-math.pi / 2, -1j)):
        if abs(reduced - angle) < 1e-12:
            return complex(value)
    return complex(math.cos(reduced), math.sin(reduced))


def build_hamiltonian(c: TrainmonCircuit, g: ChargeGrid) -> np.ndarray:
    """
    Hamiltoniano denso na base de carga

    Diagonal 4·E_C·(k − n_g)²; cada ramo (n, E_J, φ_n) acopla k e k + 1/n com
    −(n·E_J/2)·exp(i·φ_n/n) no triângulo inferior e o conjugado no superior.
    Acoplamentos que cruzam o corte ±k_max são descartados.

    Returns:
        Matriz hermitiana (real quando todos os fatores de fase são reais)
    """
    dim = g.dimension
    k = g.values
    h = np.zeros((dim, dim), dtype=complex)
    h[np.diag_indices(dim)] = 4.0 * c.e_c * (k - c.n_g) ** 2

    for b in c.branches:
        if g.steps_per_charge % b.n != 0:
            raise GridError(
                f"1/{b.n} não é múltiplo do espaçamento 1/{g.steps_per_charge} da grade")
        step = g.steps_per_charge // b.n
        if step >= dim:
            continue
        value = -(b.n * b.e_j / 2.0) * _phase_factor(b.junction_shift)
        rows = np.arange(step, dim)
        cols = rows - step
        h[rows, cols] += value
        h[cols, rows] += np.conj(value)

    if not np.any(h.imag):
        h = h.real.copy()
    return h


def check_hermitian(h: np.ndarray, tol: float = HERMITICITY_TOLERANCE) -> float:
    """Desvio máximo |H − H†|; erro se exceder a tolerância"""
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise HermiticityError(f"Matriz não quadrada: {h.shape}")
    deviation = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if deviation > tol:
        raise HermiticityError(f"Matriz não hermitiana: desvio máximo {deviation:.3e}")
    return deviation


def eigensystem(h: np.ndarray, levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Menores `levels` autovalores e autovetores de uma matriz hermitiana densa"""
    check_hermitian(h)
    if levels < 1 or levels > h.shape[0]:
        raise GridError(f"levels={levels} fora de [1, {h.shape[0]}]")
    return linalg.eigh(h, subset_by_index=[0, levels - 1])


def eigensolve(h: np.ndarray, levels: int) -> Spectrum:
    """
    Menores `levels` autovalores, em ordem crescente

    Args:
        h: Matriz hermitiana densa
        levels: Número de níveis (≤ dimensão)

    Returns:
        Spectrum com E01/E12 quando houver níveis suficientes
    """
    check_hermitian(h)
    if levels < 1 or levels > h.shape[0]:
        raise GridError(f"levels={levels} fora de [1, {h.shape[0]}]")
    values = linalg.eigh(h, eigvals_only=True, subset_by_index=[0, levels - 1])
    return spectrum_from_eigenvalues(values, dimension=h.shape[0])


def spectrum_from_eigenvalues(values: Sequence[float], **provenance) -> Spectrum:
    """Empacota autovalores num Spectrum, preenchendo E01/E12 quando possível"""
    eigenvalues = tuple(float(v) for v in np.sort(np.asarray(values, dtype=float)))
    e01 = eigenvalues[1] - eigenvalues[0] if len(eigenvalues) >= 2 else None
    e12 = eigenvalues[2] - eigenvalues[1] if len(eigenvalues) >= 3 else None
    return Spectrum(eigenvalues=eigenvalues, e01=e01, e12=e12, **provenance)


def transition_energies(s: Spectrum) -> Tuple[float, float]:
    """(E01, E12) a partir dos três menores autovalores"""
    if len(s.eigenvalues) < 3:
        raise SolverError(
            f"São necessários pelo menos 3 níveis, o espectro tem {len(s.eigenvalues)}")
    e0, e1, e2 = s.eigenvalues[:3]
    return e1 - e0, e2 - e1


def zero_sublattice(g: ChargeGrid) -> np.ndarray:
    """
    Índices da sub-rede que contém k = 0

    Para i > 1 a rede se divide em i sub-redes desacopladas (todo acoplamento
    desloca m por múltiplos de i); só a sub-rede de k = 0 é resolvida.
    """
    return np.flatnonzero(g.indices % g.resolution == 0)


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def validity_ratio(c: TrainmonCircuit) -> float:
    """min_n(E_J^n)/E_C, diagnóstico aproximado da validade do modelo quase-1D"""
    if c.e_c == 0:
        return math.inf
    return min(b.e_j for b in c.branches) / c.e_c


def solved_hamiltonian(c: TrainmonCircuit, k_max: int, resolution: int = 1) -> np.ndarray:
    """Hamiltoniano efetivamente diagonalizado: a sub-rede de k = 0 quando i > 1"""
    grid = build_charge_grid(c.branch_set, k_max, resolution)
    h = build_hamiltonian(c, grid)
    if resolution > 1:
        keep = zero_sublattice(grid)
        h = h[np.ix_(keep, keep)]
    return h


def solve_at(c: TrainmonCircuit, levels: int, k_max: int, resolution: int = 1) -> Spectrum:
    """Resolve o circuito com um corte de carga fixo"""
    h = solved_hamiltonian(c, k_max, resolution)
    s = eigensolve(h, levels)
    return Spectrum(eigenvalues=s.eigenvalues, e01=s.e01, e12=s.e12, k_max_used=k_max,
                    dimension=h.shape[0], validity_ratio=_finite_or_none(validity_ratio(c)))


def converged_spectrum(c: TrainmonCircuit, levels: int, tol: float,
                       k_max_start: int = DEFAULT_K_MAX_START,
                       k_max_limit: int = DEFAULT_K_MAX_LIMIT,
                       resolution: int = 1,
                       validity_warning: float = 10.0) -> Spectrum:
    """
    Dobra k_max até que todas as transições pedidas variem menos que `tol`

    Com um único nível não há transições e o critério passa a ser o próprio E0.

    Args:
        c: Circuito Trainmon
        levels: Número de níveis
        tol: Tolerância das transições (GHz)
        k_max_start: Corte inicial
        k_max_limit: Corte máximo antes de desistir
        resolution: Fator i da rede
        validity_warning: Limiar do diagnóstico min E_J/E_C

    Returns:
        Spectrum convergido com k_max_used

    Raises:
        TruncationError: sem convergência até k_max_limit
    """
    if tol <= 0:
        raise SchemaError(f"tol deve ser > 0, recebido {tol}")
    if levels < 1:
        raise SchemaError(f"levels deve ser ≥ 1, recebido {levels}")

    warnings = []
    ratio = validity_ratio(c)
    if ratio < validity_warning:
        message = (f"min(E_J^n)/E_C = {ratio:.3g} < {validity_warning:g}; "
                   f"a redução quase-1D pode não ser válida")
        logger.warning(f"⚠️ {message}")
        warnings.append(message)

    steps = math.lcm(*c.branch_set)
    k_max = max(int(k_max_start), 1)
    # dimensão mínima para comportar os níveis pedidos
    while 2 * k_max * steps + 1 < levels:
        k_max *= 2

    start_time = time.time()
    previous = None
    last_change = math.inf
    while k_max <= k_max_limit:
        current = solve_at(c, levels, k_max, resolution)
        logger.debug(f"⚙️ k_max={k_max}, dimensão={current.dimension}, "
                     f"E0={current.eigenvalues[0]:.10f} GHz")
        if previous is not None:
            if levels == 1:
                # sem transições: controla o próprio E0
                now, before = np.asarray(current.eigenvalues), np.asarray(previous.eigenvalues)
            else:
                now, before = np.diff(current.eigenvalues), np.diff(previous.eigenvalues)
            last_change = float(np.max(np.abs(now - before)))
            if last_change < tol:
                elapsed = time.time() - start_time
                logger.info(f"✅ Espectro convergido em k_max={k_max} "
                            f"(dimensão {current.dimension}) em {elapsed:.2f}s")
                return Spectrum(eigenvalues=current.eigenvalues, e01=current.e01,
                                e12=current.e12, k_max_used=k_max,
                                dimension=current.dimension, validity_ratio=_finite_or_none(ratio),
                                warnings=tuple(warnings))
        previous = current
        k_max *= 2

    raise TruncationError(
        f"Espectro não convergiu até k_max={k_max_limit} "
        f"(última variação {last_change:.3e} GHz > tol {tol:.1e})",
        k_max=k_max // 2, last_change=last_change)


def hamiltonian_to_frame(h: np.ndarray) -> pd.DataFrame:
    """Entradas não nulas como (row, col, re, im), em ordem de linha"""
    rows, cols = np.nonzero(h)
    values = h[rows, cols]
    return pd.DataFrame({
        "row": rows,
        "col": cols,
        "re": np.real(values).astype(float),
        "im": np.imag(values).astype(float),
    })


def spectrum_to_dict(s: Spectrum) -> dict:
    return {
        "eigenvalues": list(s.eigenvalues),
        "e01": s.e01,
        "e12": s.e12,
        "k_max_used": s.k_max_used,
        "dimension": s.dimension,
        "method": s.method,
        "validity_ratio": s.validity_ratio,
        "warnings": list(s.warnings),
    }


def spectrum_from_dict(doc: dict) -> Spectrum:
    ratio = doc.get("validity_ratio")
    return Spectrum(
        eigenvalues=tuple(float(v) for v in doc["eigenvalues"]),
        e01=doc["e01"],
        e12=doc["e12"],
        k_max_used=doc["k_max_used"],
        dimension=int(doc["dimension"]),
        method=doc["method"],
        validity_ratio=ratio,
        warnings=tuple(doc.get("warnings", ())),
    )
