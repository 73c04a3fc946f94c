#!/usr/bin/env python3
"""
Módulo de Ajuste
Determina os coeficientes de Josephson com sinal que melhor aproximam um
potencial alvo, converte coeficientes negativos em fases de ramo e fluxos
de loop (quantização do fluxoide) e mede a qualidade do ajuste
"""

import math
import time
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg

from exceptions import DegenerateBasisError, SchemaError
from potentials import Branch, PotentialSamples, TrainmonCircuit

logger = logging.getLogger(__name__)

DEFAULT_DROP_TOLERANCE = 1e-9


def parse_branch_set(value: Union[str, Iterable[int]]) -> Tuple[int, ...]:
    """
    Converte "1,2,4" (ou uma sequência) no conjunto de ramos I

    Raises:
        SchemaError: conjunto vazio, valores não inteiros, não positivos ou repetidos
    """
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        try:
            items = [int(p) for p in parts]
        except ValueError as e:
            raise SchemaError(f"Conjunto de ramos inválido: {value!r}") from e
    else:
        items = list(value)
        if any(int(n) != n for n in items):
            raise SchemaError(f"Conjunto de ramos deve conter inteiros: {items}")
        items = [int(n) for n in items]

    if not items:
        raise SchemaError("Conjunto de ramos vazio")
    if any(n < 1 for n in items):
        raise SchemaError(f"Ramos devem ser inteiros positivos: {items}")
    if len(set(items)) != len(items):
        raise SchemaError(f"Ramos repetidos no conjunto: {items}")
    return tuple(sorted(items))


@dataclass(frozen=True)
class FitProblem:
    """
    Problema de ajuste: amostras do alvo e conjunto de ramos I

    Args:
        samples: Amostras (φ, U) do alvo na janela de ajuste
        branch_set: Inteiros positivos únicos e crescentes
        include_offset: Inclui a coluna constante
        correlation_samples: Amostras do alvo na janela de correlação
            (opcional; por padrão a própria janela de ajuste)
    """

    samples: PotentialSamples
    branch_set: Tuple[int, ...]
    include_offset: bool = True
    correlation_samples: Optional[PotentialSamples] = None

    def __post_init__(self):
        branch_set = tuple(self.branch_set)
        if not branch_set:
            raise SchemaError("Conjunto de ramos vazio")
        if any(b <= a for a, b in zip(branch_set, branch_set[1:])) or branch_set[0] < 1:
            raise SchemaError(f"Ramos devem ser positivos, únicos e crescentes: {branch_set}")
        object.__setattr__(self, "branch_set", branch_set)
        if len(self.samples) < len(branch_set) + 1:
            raise SchemaError(
                f"São necessárias pelo menos {len(branch_set) + 1} amostras, "
                f"recebidas {len(self.samples)}")


@dataclass(frozen=True)
class FluxAssignment:
    """
    Fases de ramo e fluxos de loop que realizam os sinais dos coeficientes

    As fases são guardadas também como múltiplos inteiros de π
    (`branch_half_turns`), o que torna a verificação do fluxoide exata.
    """

    branch_half_turns: Dict[int, int]
    loop_half_turns: Tuple[int, ...]
    fluxoid_ints: Tuple[int, ...]

    @property
    def branch_set(self) -> Tuple[int, ...]:
        return tuple(sorted(self.branch_half_turns))

    @property
    def branch_phases(self) -> Dict[int, float]:
        return {n: k * math.pi for n, k in sorted(self.branch_half_turns.items())}

    @property
    def loop_fluxes(self) -> Tuple[float, ...]:
        return tuple(k * math.pi for k in self.loop_half_turns)

    @property
    def loop_fluxes_phi0(self) -> Tuple[float, ...]:
        """Fluxos de loop em unidades de Φ_0"""
        return tuple(k / 2 for k in self.loop_half_turns)

    @property
    def reduced_loop_fluxes(self) -> Tuple[float, ...]:
        """Fluxos de loop reduzidos a (−π, π]"""
        return tuple(reduce_phase(f) for f in self.loop_fluxes)

    def check_fluxoid(self) -> bool:
        """φ_{n_i} − φ_{n_{i+1}} + φ_e^l = 2π·z_l em aritmética inteira de meias-voltas"""
        ks = [self.branch_half_turns[n] for n in self.branch_set]
        return all(ks[i] - ks[i + 1] + self.loop_half_turns[i] == 2 * self.fluxoid_ints[i]
                   for i in range(len(self.loop_half_turns)))


@dataclass(frozen=True)
class FitMetrics:
    """
    Métricas de qualidade do ajuste

    `max_rel_error` é normalizado pelo pico-a-pico do alvo na janela de
    ajuste; `None` indica métrica não aplicável (alvo constante).
    """

    max_rel_error: Optional[float]
    rmse: float
    correlation: Optional[float]
    max_abs_error: float = 0.0
    correlation_window: Optional[Tuple[float, float]] = None
    normalization: str = "peak_to_peak"


@dataclass(frozen=True)
class FitResult:
    """Coeficientes com sinal, offset, atribuição de fluxos e métricas"""

    coefficients: Dict[int, float]
    offset: float
    assignment: FluxAssignment
    metrics: FitMetrics
    pruned: Tuple[int, ...] = ()
    include_offset: bool = True
    window: Optional[Tuple[float, float]] = None
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def kept_coefficients(self) -> Dict[int, float]:
        return {n: c for n, c in self.coefficients.items() if n not in self.pruned}

    def reconstruct(self, phi):
        """U_fit(φ) = offset − Σ n·c_n·cos(φ/n)"""
        return reconstruct_potential(self.coefficients, self.offset, phi)


def reduce_phase(phi: float) -> float:
    """Reduz uma fase ao intervalo (−π, π]"""
    return phi - 2 * math.pi * math.ceil((phi - math.pi) / (2 * math.pi))


def reconstruct_potential(coefficients: Mapping[int, float], offset: float, phi):
    """offset − Σ n·c_n·cos(φ/n) para coeficientes com sinal"""
    x = np.asarray(phi, dtype=float)
    values = np.full_like(x, offset)
    for n, c in sorted(coefficients.items()):
        values = values - n * c * np.cos(x / n)
    if np.ndim(phi) == 0:
        return float(values)
    return values


def design_matrix(phi: np.ndarray, branch_set: Sequence[int],
                  include_offset: bool = True) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """
    Matriz de projeto: uma coluna −n·cos(φ/n) por ramo e a coluna constante

    Returns:
        Tuple com (matriz, rótulos das colunas)
    """
    columns = [-n * np.cos(phi / n) for n in branch_set]
    labels = [f"n={n}" for n in branch_set]
    if include_offset:
        columns.append(np.ones_like(phi))
        labels.append("offset")
    return np.column_stack(columns), tuple(labels)


def _solve_least_squares(a: np.ndarray, y: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    """Mínimos quadrados por QR com pivotamento; erro explícito se houver deficiência de posto"""
    q, r, piv = linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(a.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < a.shape[1]:
        colliding = [labels[j] for j in piv[rank:]]
        independent = [labels[j] for j in piv[:rank]]
        raise DegenerateBasisError(
            f"Base degenerada: colunas {colliding} são combinação linear de {independent}",
            columns=colliding)

    # R·z = Qᵀ·y, com z na ordem das colunas pivotadas
    solution = np.empty(a.shape[1])
    solution[piv] = linalg.solve_triangular(r, q.T @ y)
    return solution


def compute_metrics(target_u, fit_u, correlation_target=None, correlation_fit=None,
                    correlation_window: Optional[Tuple[float, float]] = None) -> FitMetrics:
    """
    Calcula erro relativo máximo, RMSE e correlação de Pearson

    Args:
        target_u: U do alvo na janela de ajuste
        fit_u: U reconstruído na mesma grade
        correlation_target: U do alvo na janela de correlação (opcional)
        correlation_fit: U reconstruído na janela de correlação (opcional)
        correlation_window: Limites da janela de correlação, para o relatório

    Returns:
        FitMetrics
    """
    target_u = np.asarray(target_u, dtype=float)
    fit_u = np.asarray(fit_u, dtype=float)
    if target_u.shape != fit_u.shape:
        raise SchemaError("Grades de alvo e reconstrução não coincidem")

    delta = fit_u - target_u
    max_abs = float(np.max(np.abs(delta)))
    rmse = float(np.sqrt(np.mean(delta ** 2)))
    span = float(np.max(target_u) - np.min(target_u))
    max_rel = max_abs / span if span > 0 else None

    if correlation_target is None:
        correlation_target, correlation_fit = target_u, fit_u
    correlation = pearson(correlation_target, correlation_fit)

    return FitMetrics(max_rel_error=max_rel, rmse=rmse, correlation=correlation,
                      max_abs_error=max_abs, correlation_window=correlation_window)


def pearson(a, b) -> Optional[float]:
    """Coeficiente de Pearson; None quando alguma série tem variância nula"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise SchemaError("Séries da correlação com tamanhos diferentes")
    da = a - a.mean()
    db = b - b.mean()
    norm = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if norm == 0.0:
        return None
    return float(np.clip(np.dot(da, db) / norm, -1.0, 1.0))


def assign_fluxes(coefficients: Mapping[int, float]) -> FluxAssignment:
    """
    Converte coeficientes com sinal em fases de ramo e fluxos de loop

    Ramos com c_n < 0 recebem φ_n = n·π (deslocamento de π por junção, que
    inverte o sinal do cosseno); os fluxos usam o inteiro canônico z_l = 0,
    isto é φ_e^l = φ_{n_{i+1}} − φ_{n_i}.

    Args:
        coefficients: Mapa n → c_n (todos não nulos)

    Returns:
        FluxAssignment
    """
    if not coefficients:
        raise SchemaError("Nenhum coeficiente para atribuir fluxos")
    zeros = [n for n, c in coefficients.items() if c == 0]
    if zeros:
        raise SchemaError(f"Coeficientes nulos devem ser podados antes: ramos {zeros}")

    half_turns = {int(n): (int(n) if c < 0 else 0) for n, c in sorted(coefficients.items())}
    ks = list(half_turns.values())
    loop_half_turns = tuple(ks[i + 1] - ks[i] for i in range(len(ks) - 1))
    assignment = FluxAssignment(branch_half_turns=half_turns,
                                loop_half_turns=loop_half_turns,
                                fluxoid_ints=(0,) * len(loop_half_turns))
    if not assignment.check_fluxoid():
        raise AssertionError("Atribuição viola a quantização do fluxoide")
    return assignment


def fit_coefficients(problem: FitProblem,
                     drop_tolerance: float = DEFAULT_DROP_TOLERANCE) -> FitResult:
    """
    Ajuste linear de mínimos quadrados do trem de cossenos

    Minimiza Σ_j (U(φ_j) − offset + Σ_n n·c_n·cos(φ_j/n))². Coeficientes com
    |c_n| < drop_tolerance são podados antes da atribuição de fluxos.

    Args:
        problem: FitProblem com amostras e conjunto de ramos
        drop_tolerance: Limiar de poda (GHz)

    Returns:
        FitResult
    """
    phi, u = problem.samples.phi, problem.samples.u
    logger.info(f"📐 Ajustando I={list(problem.branch_set)} com {len(phi)} amostras "
                f"em [{phi[0]:.4f}, {phi[-1]:.4f}]")
    start_time = time.time()

    a, labels = design_matrix(phi, problem.branch_set, problem.include_offset)
    solution = _solve_least_squares(a, u, labels)

    coefficients = {n: float(c) for n, c in zip(problem.branch_set, solution)}
    offset = float(solution[-1]) if problem.include_offset else 0.0

    pruned = tuple(n for n, c in coefficients.items() if abs(c) < drop_tolerance)
    if pruned:
        logger.info(f"✂️ Ramos podados (|c_n| < {drop_tolerance:g} GHz): {list(pruned)}")
    kept = {n: c for n, c in coefficients.items() if n not in pruned}
    if not kept:
        raise DegenerateBasisError("Todos os coeficientes ficaram abaixo da tolerância de poda",
                                   columns=[f"n={n}" for n in pruned])
    assignment = assign_fluxes(kept)

    fit_u = reconstruct_potential(coefficients, offset, phi)
    corr = problem.correlation_samples
    if corr is not None:
        metrics = compute_metrics(u, fit_u, corr.u,
                                  reconstruct_potential(coefficients, offset, corr.phi),
                                  correlation_window=(float(corr.phi[0]), float(corr.phi[-1])))
    else:
        metrics = compute_metrics(u, fit_u, correlation_window=(float(phi[0]), float(phi[-1])))

    warnings = []
    if any(k != 0 for k in assignment.loop_half_turns):
        warnings.append(
            "Fluxos de loop relatados com z = 0; qualquer representante módulo 2π "
            "com z ajustado é equivalente")

    elapsed = time.time() - start_time
    rel = "N/A" if metrics.max_rel_error is None else f"{metrics.max_rel_error:.3e}"
    logger.info(f"✅ Ajuste concluído em {elapsed * 1000:.1f}ms: erro relativo máximo {rel}, "
                f"RMSE {metrics.rmse:.3e} GHz")

    return FitResult(coefficients=coefficients, offset=offset, assignment=assignment,
                     metrics=metrics, pruned=pruned, include_offset=problem.include_offset,
                     window=(float(phi[0]), float(phi[-1])), warnings=tuple(warnings))


def circuit_from_fit(result: FitResult, e_c: float, n_g: float = 0.0) -> TrainmonCircuit:
    """
    Constrói o TrainmonCircuit que realiza o ajuste

    Magnitudes |c_n| viram E_J^n; fases e fluxos vêm da atribuição.
    """
    kept = result.kept_coefficients
    phases = result.assignment.branch_phases
    branches = tuple(Branch(n=n, e_j=abs(c), phi_branch=phases[n])
                     for n, c in sorted(kept.items()))
    return TrainmonCircuit(e_c=e_c, branches=branches, n_g=n_g,
                           loop_fluxes=result.assignment.loop_fluxes,
                           fluxoid_ints=result.assignment.fluxoid_ints)


def reconstruction_table(result: FitResult, samples: PotentialSamples) -> pd.DataFrame:
    """Tabela (φ, U_alvo, U_ajuste, ΔU) para gráficos externos"""
    fit_u = result.reconstruct(samples.phi)
    return pd.DataFrame({
        "phi": samples.phi,
        "u_target": samples.u,
        "u_fit": fit_u,
        "delta_u": fit_u - samples.u,
    })


def fit_result_to_dict(result: FitResult) -> dict:
    """Serializa um FitResult (chaves de ramo como strings)"""
    m = result.metrics
    a = result.assignment
    return {
        "coefficients": {str(n): c for n, c in sorted(result.coefficients.items())},
        "offset": result.offset,
        "include_offset": result.include_offset,
        "pruned": list(result.pruned),
        "window": None if result.window is None else list(result.window),
        "assignment": {
            "branch_half_turns": {str(n): k for n, k in sorted(a.branch_half_turns.items())},
            "branch_phases": {str(n): p for n, p in a.branch_phases.items()},
            "loop_half_turns": list(a.loop_half_turns),
            "loop_fluxes": list(a.loop_fluxes),
            "loop_fluxes_phi0": list(a.loop_fluxes_phi0),
            "reduced_loop_fluxes": list(a.reduced_loop_fluxes),
            "fluxoid_ints": list(a.fluxoid_ints),
        },
        "metrics": {
            "max_rel_error": m.max_rel_error,
            "max_rel_error_status": "ok" if m.max_rel_error is not None else "not_applicable",
            "max_abs_error": m.max_abs_error,
            "rmse": m.rmse,
            "correlation": m.correlation,
            "correlation_status": "ok" if m.correlation is not None else "not_applicable",
            "correlation_window": None if m.correlation_window is None
            else list(m.correlation_window),
            "normalization": m.normalization,
        },
        "warnings": list(result.warnings),
    }


def fit_result_from_dict(doc: dict) -> FitResult:
    """Reconstrói um FitResult a partir do JSON emitido"""
    a = doc["assignment"]
    m = doc["metrics"]
    assignment = FluxAssignment(
        branch_half_turns={int(n): int(k) for n, k in a["branch_half_turns"].items()},
        loop_half_turns=tuple(int(k) for k in a["loop_half_turns"]),
        fluxoid_ints=tuple(int(z) for z in a["fluxoid_ints"]),
    )
    metrics = FitMetrics(
        max_rel_error=m["max_rel_error"],
        rmse=m["rmse"],
        correlation=m["correlation"],
        max_abs_error=m["max_abs_error"],
        correlation_window=None if m["correlation_window"] is None
        else tuple(m["correlation_window"]),
        normalization=m["normalization"],
    )
    return FitResult(
        coefficients={int(n): float(c) for n, c in doc["coefficients"].items()},
        offset=float(doc["offset"]),
        assignment=assignment,
        metrics=metrics,
        pruned=tuple(int(n) for n in doc["pruned"]),
        include_offset=bool(doc["include_offset"]),
        window=None if doc["window"] is None else tuple(doc["window"]),
        warnings=tuple(doc["warnings"]),
    )
