#!/usr/bin/env python3
"""
Módulo do Oráculo em Fase
Solver de Schrödinger por diferenças finitas numa grade de fase para
potenciais 1D arbitrários: referência do Fluxonium e verificação cruzada
do solver na base de carga
"""

import math
import time
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from charge_solver import Spectrum, spectrum_from_eigenvalues
from exceptions import GridError, SchemaError
from potentials import (FluxoniumParams, Potential, QuartonParams, TabulatedPotential,
                        TrainmonCircuit)

logger = logging.getLogger(__name__)

PERIODIC = "periodic"
HARD_WALL = "hard_wall"
BOUNDARIES = (PERIODIC, HARD_WALL)

MIN_POINTS = 16
DENSE_LIMIT = 2048
PERIODIC_MISMATCH_TOLERANCE = 1e-9
DOMAIN_CHECK_TOLERANCE = 1e-3


@dataclass(frozen=True)
class PhaseGridProblem:
    """
    Problema na grade de fase

    Args:
        e_c: Energia de carga (GHz); termo cinético −4E_C ∂²/∂φ²
        potential: Potencial U(φ) avaliável (GHz)
        domain: (φ_min, φ_max) em rad
        boundary: "periodic" ou "hard_wall"
        points: Número de nós N (≥ 16)
        levels: Número de autovalores pedidos
    """

    e_c: float
    potential: Potential
    domain: Tuple[float, float]
    boundary: str = HARD_WALL
    points: int = 4096
    levels: int = 4

    def __post_init__(self):
        lo, hi = self.domain
        object.__setattr__(self, "domain", (float(lo), float(hi)))
        if not lo < hi:
            raise SchemaError(f"Domínio inválido: [{lo}, {hi}]")
        if self.boundary not in BOUNDARIES:
            raise SchemaError(f"Contorno desconhecido: {self.boundary!r}")
        if self.points < MIN_POINTS:
            raise SchemaError(f"points deve ser ≥ {MIN_POINTS}, recebido {self.points}")
        if self.e_c <= 0:
            raise SchemaError(f"e_c deve ser > 0, recebido {self.e_c}")
        if self.levels < 1:
            raise SchemaError(f"levels deve ser ≥ 1, recebido {self.levels}")

    @property
    def spacing(self) -> float:
        lo, hi = self.domain
        if self.boundary == PERIODIC:
            return (hi - lo) / self.points
        return (hi - lo) / (self.points + 1)

    @property
    def grid(self) -> np.ndarray:
        """Nós da grade (no periódico o extremo duplicado é excluído; no hard-wall só nós internos)"""
        lo, _ = self.domain
        h = self.spacing
        if self.boundary == PERIODIC:
            return lo + h * np.arange(self.points)
        return lo + h * np.arange(1, self.points + 1)


def _check_periodic(p: PhaseGridProblem) -> List[str]:
    if p.boundary != PERIODIC:
        return []
    lo, hi = p.domain
    mismatch = abs(float(p.potential.evaluate(lo)) - float(p.potential.evaluate(hi)))
    if mismatch > PERIODIC_MISMATCH_TOLERANCE:
        message = f"U(φ_min) e U(φ_max) diferem em {mismatch:.3e} GHz no contorno periódico"
        logger.warning(f"⚠️ {message}")
        return [message]
    return []


def build_phase_hamiltonian(p: PhaseGridProblem):
    """
    Matriz real simétrica do estêncil central de segunda ordem

    Diagonal U(φ_j) + 8E_C/h², fora da diagonal −4E_C/h²; no contorno
    periódico o primeiro e o último nó são acoplados.

    Returns:
        Matriz esparsa CSC
    """
    h = p.spacing
    n = p.points
    diagonal = np.asarray(p.potential.evaluate(p.grid), dtype=float) + 8.0 * p.e_c / h ** 2
    off = np.full(n - 1, -4.0 * p.e_c / h ** 2)
    matrix = sparse.diags([off, diagonal, off], [-1, 0, 1], shape=(n, n), format="lil")
    if p.boundary == PERIODIC:
        matrix[0, n - 1] = -4.0 * p.e_c / h ** 2
        matrix[n - 1, 0] = -4.0 * p.e_c / h ** 2
    return matrix.tocsc()


def phase_eigensystem(p: PhaseGridProblem) -> Tuple[np.ndarray, np.ndarray]:
    """
    Menores autovalores e autovetores do problema

    Hard-wall usa o solver tridiagonal; periódico usa `eigh` denso até
    2048 nós e Lanczos com shift-invert acima disso.
    """
    if p.levels > p.points:
        raise GridError(f"levels={p.levels} maior que o número de nós {p.points}")

    if p.boundary == HARD_WALL:
        h = p.spacing
        diagonal = np.asarray(p.potential.evaluate(p.grid), dtype=float) + 8.0 * p.e_c / h ** 2
        off = np.full(p.points - 1, -4.0 * p.e_c / h ** 2)
        return linalg.eigh_tridiagonal(diagonal, off, select="i",
                                       select_range=(0, p.levels - 1))

    matrix = build_phase_hamiltonian(p)
    if p.points <= DENSE_LIMIT or p.levels >= p.points - 1:
        return linalg.eigh(matrix.toarray(), subset_by_index=[0, p.levels - 1])

    # sigma abaixo de min(U): o espectro inteiro fica acima do shift
    sigma = float(matrix.diagonal().min() - 8.0 * p.e_c / p.spacing ** 2) - 1.0
    v0 = np.random.default_rng(0).standard_normal(p.points)
    values, vectors = sparse_linalg.eigsh(matrix, k=p.levels, sigma=sigma, which="LM", v0=v0)
    order = np.argsort(values)
    return values[order], vectors[:, order]


def solve_phase_grid(p: PhaseGridProblem, return_vectors: bool = False):
    """
    Menores `levels` autovalores na grade de fase, em ordem crescente

    Args:
        p: PhaseGridProblem
        return_vectors: Também devolve as autofunções (colunas, uma por nível)

    Returns:
        Spectrum com method="phase", ou (Spectrum, autovetores)
    """
    warnings = _check_periodic(p)
    start_time = time.time()
    values, vectors = phase_eigensystem(p)
    elapsed = time.time() - start_time
    logger.info(f"🧮 Grade de fase {p.boundary} N={p.points} resolvida em {elapsed:.2f}s")
    s = replace(spectrum_from_eigenvalues(values, dimension=p.points, method="phase"),
                warnings=tuple(warnings))
    if return_vectors:
        return s, vectors
    return s


def richardson_check(p: PhaseGridProblem) -> np.ndarray:
    """Estimativa de erro por nível: |E(2N) − E(N)|"""
    coarse = np.array(solve_phase_grid(p).eigenvalues)
    fine = np.array(solve_phase_grid(replace(p, points=2 * p.points)).eigenvalues)
    return np.abs(fine - coarse)


def richardson_extrapolate(p: PhaseGridProblem) -> Spectrum:
    """(4·E(2N) − E(N))/3, cancelando o erro O(h²) do estêncil"""
    coarse = np.array(solve_phase_grid(p).eigenvalues)
    fine = np.array(solve_phase_grid(replace(p, points=2 * p.points)).eigenvalues)
    return spectrum_from_eigenvalues((4.0 * fine - coarse) / 3.0,
                                     dimension=2 * p.points, method="phase-richardson")


def check_domain(p: PhaseGridProblem, widen: float = 0.2,
                 e0: Optional[float] = None) -> Optional[str]:
    """
    Verifica se o domínio hard-wall é grande o suficiente

    Alarga o domínio em `widen` (mantendo o espaçamento) e avisa quando o
    estado fundamental muda mais que 1e-3 relativo. Potenciais tabelados
    não são definidos fora da tabela e ficam de fora.

    Args:
        p: PhaseGridProblem
        widen: Fração de alargamento do domínio
        e0: Estado fundamental já calculado em `p` (evita resolver de novo)

    Returns:
        Mensagem de aviso, ou None
    """
    if p.boundary != HARD_WALL or isinstance(p.potential, TabulatedPotential):
        return None
    lo, hi = p.domain
    center, half = (lo + hi) / 2, (hi - lo) / 2 * (1 + widen)
    wider = replace(p, domain=(center - half, center + half),
                    points=int(round((p.points + 1) * (1 + widen))) - 1)
    if e0 is None:
        e0 = solve_phase_grid(p).eigenvalues[0]
    e0_wide = solve_phase_grid(wider).eigenvalues[0]
    change = abs(e0_wide - e0) / max(abs(e0), 1e-300)
    if change > DOMAIN_CHECK_TOLERANCE:
        message = (f"Domínio [{lo:.4g}, {hi:.4g}] pequeno: E0 muda {change:.2e} "
                   f"relativo ao alargar {widen:.0%}")
        logger.warning(f"⚠️ {message}")
        return message
    return None


def count_nodes(vector: np.ndarray, rel_tol: float = 1e-6) -> int:
    """Trocas de sinal de uma autofunção, ignorando amplitudes desprezíveis"""
    v = np.real(np.asarray(vector))
    significant = v[np.abs(v) > rel_tol * np.max(np.abs(v))]
    return int(np.count_nonzero(np.diff(np.sign(significant)) != 0))


def fluxonium_problem(p: FluxoniumParams, levels: int = 4, points: int = 4096,
                      domain: Tuple[float, float] = (-6 * math.pi, 6 * math.pi)) -> PhaseGridProblem:
    """Problema hard-wall padrão do Fluxonium ([−6π, 6π], N = 4096)"""
    return PhaseGridProblem(e_c=p.e_c, potential=p, domain=domain, boundary=HARD_WALL,
                            points=points, levels=levels)


def trainmon_problem(c: TrainmonCircuit, levels: int = 4, points: int = 4096) -> PhaseGridProblem:
    """Problema periódico num período completo 2π·lcm(I), centrado em 0"""
    if c.n_g != 0:
        raise SchemaError("O oráculo em fase não suporta n_g ≠ 0")
    half = c.period / 2
    return PhaseGridProblem(e_c=c.e_c, potential=c, domain=(-half, half), boundary=PERIODIC,
                            points=points, levels=levels)


def target_problem(target: Potential, e_c: Optional[float] = None, levels: int = 4,
                   points: int = 4096, domain: Optional[Tuple[float, float]] = None,
                   boundary: Optional[str] = None,
                   hard_wall_domain: Optional[Tuple[float, float]] = None) -> PhaseGridProblem:
    """
    Problema padrão para qualquer potencial alvo

    Fluxonium usa a sua própria E_C; Quarton e tabelado exigem `e_c`.
    Quarton é periódico em 2πN; tabelado é hard-wall no seu intervalo.
    Fluxonium é hard-wall em `hard_wall_domain` (padrão [−6π, 6π]).
    """
    if isinstance(target, TrainmonCircuit):
        problem = trainmon_problem(target, levels, points)
    elif isinstance(target, FluxoniumParams):
        if hard_wall_domain is None:
            problem = fluxonium_problem(target, levels, points)
        else:
            problem = fluxonium_problem(target, levels, points, tuple(hard_wall_domain))
    elif isinstance(target, QuartonParams):
        if e_c is None:
            raise SchemaError("e_c é obrigatório para resolver o Quarton")
        half = target.period / 2
        problem = PhaseGridProblem(e_c=e_c, potential=target, domain=(-half, half),
                                   boundary=PERIODIC, points=points, levels=levels)
    elif isinstance(target, TabulatedPotential):
        if e_c is None:
            raise SchemaError("e_c é obrigatório para resolver um potencial tabelado")
        problem = PhaseGridProblem(e_c=e_c, potential=target, domain=target.domain,
                                   boundary=HARD_WALL, points=points, levels=levels)
    else:
        raise SchemaError(f"Potencial sem problema padrão: {type(target).__name__}")

    if e_c is not None and e_c != problem.e_c:
        problem = replace(problem, e_c=e_c)
    if domain is not None:
        problem = replace(problem, domain=tuple(domain))
    if boundary is not None:
        problem = replace(problem, boundary=boundary)
    return problem
