#!/usr/bin/env python3
"""
Módulo de Potenciais
Define os potenciais alvo (Quarton, Fluxonium, tabelado) e o potencial do
próprio Trainmon, além da amostragem uniforme numa janela de fase
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Any, ClassVar, Dict, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from exceptions import PotentialDomainError, SchemaError

logger = logging.getLogger(__name__)

PhaseLike = Union[float, Sequence[float], np.ndarray]

FLUXOID_TOLERANCE = 1e-9


class Potential(Protocol):
    """Contrato mínimo de um potencial avaliável U(φ) em GHz"""

    kind: ClassVar[str]

    def evaluate(self, phi: PhaseLike): ...


def _as_output(phi, values: np.ndarray):
    """Devolve float para entrada escalar e ndarray para entrada vetorial"""
    if np.ndim(phi) == 0:
        return float(values)
    return values


@dataclass(frozen=True)
class QuartonParams:
    """Parâmetros do Quarton: γ, N junções do array, E_J (GHz) e φ_e (rad)"""

    gamma: float
    n_array: int
    e_j: float
    phi_e: float = 0.0

    kind: ClassVar[str] = "quarton"

    def __post_init__(self):
        if int(self.n_array) != self.n_array or self.n_array < 1:
            raise SchemaError(f"n_array deve ser inteiro ≥ 1, recebido {self.n_array}")
        if self.e_j <= 0:
            raise SchemaError(f"e_j do Quarton deve ser > 0, recebido {self.e_j}")
        if self.gamma < 0:
            raise SchemaError(f"gamma deve ser ≥ 0, recebido {self.gamma}")

    @property
    def period(self) -> float:
        return 2 * math.pi * self.n_array

    def evaluate(self, phi: PhaseLike):
        return eval_quarton(self, phi)


@dataclass(frozen=True)
class FluxoniumParams:
    """Parâmetros do Fluxonium (E_J, E_C, E_L em GHz, φ_ext em rad, n_g)"""

    e_j: float
    e_c: float
    e_l: float
    phi_ext: float = 0.0
    n_g: float = 0.0

    kind: ClassVar[str] = "fluxonium"

    def __post_init__(self):
        # e_j = 0 é aceito para permitir o oscilador harmônico puro
        if self.e_j < 0:
            raise SchemaError(f"e_j do Fluxonium deve ser ≥ 0, recebido {self.e_j}")
        if self.e_c <= 0:
            raise SchemaError(f"e_c do Fluxonium deve ser > 0, recebido {self.e_c}")
        if self.e_l < 0:
            raise SchemaError(f"e_l deve ser ≥ 0, recebido {self.e_l}")

    def evaluate(self, phi: PhaseLike):
        return eval_fluxonium(self, phi)


@dataclass(frozen=True)
class TabulatedPotential:
    """
    Potencial definido por amostras (φ, U)

    A avaliação entre amostras é interpolação linear; fora do intervalo
    tabelado é erro (nunca extrapola).
    """

    samples: Tuple[Tuple[float, float], ...]

    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        samples = tuple((float(p), float(u)) for p, u in self.samples)
        object.__setattr__(self, "samples", samples)
        if len(samples) < 2:
            raise SchemaError("Potencial tabelado precisa de pelo menos 2 amostras")
        phis = np.array([p for p, _ in samples])
        if np.any(np.diff(phis) <= 0):
            raise SchemaError("φ do potencial tabelado deve ser estritamente crescente")

    @property
    def phi(self) -> np.ndarray:
        return np.array([p for p, _ in self.samples])

    @property
    def u(self) -> np.ndarray:
        return np.array([u for _, u in self.samples])

    @property
    def domain(self) -> Tuple[float, float]:
        return self.samples[0][0], self.samples[-1][0]

    def evaluate(self, phi: PhaseLike):
        phi_arr = np.asarray(phi, dtype=float)
        lo, hi = self.domain
        if np.any(phi_arr < lo) or np.any(phi_arr > hi):
            raise PotentialDomainError(
                f"φ fora do intervalo tabelado [{lo}, {hi}]")
        return _as_output(phi, np.interp(phi_arr, self.phi, self.u))


@dataclass(frozen=True)
class Branch:
    """Ramo com n junções idênticas em série, E_J^n (GHz) e fase total φ_n (rad)"""

    n: int
    e_j: float
    phi_branch: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise SchemaError(f"n do ramo deve ser inteiro ≥ 1, recebido {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.e_j < 0:
            raise SchemaError(f"e_j do ramo n={self.n} deve ser ≥ 0, recebido {self.e_j}")

    @property
    def junction_shift(self) -> float:
        """Deslocamento de fase por junção, φ_n/n"""
        return self.phi_branch / self.n


@dataclass(frozen=True)
class TrainmonCircuit:
    """
    Circuito Trainmon: ramos paralelos de n junções idênticas com um
    capacitor de shunt comum

    Args:
        e_c: Energia de carga do shunt (GHz)
        branches: Ramos ordenados por n estritamente crescente
        n_g: Carga de gate
        loop_fluxes: Fases reduzidas φ_e^l de cada loop (len = ramos − 1);
            derivadas das fases dos ramos com z = 0 quando omitidas
        fluxoid_ints: Inteiros z_l da quantização do fluxoide; inferidos
            quando omitidos
    """

    e_c: float
    branches: Tuple[Branch, ...]
    n_g: float = 0.0
    loop_fluxes: Optional[Tuple[float, ...]] = None
    fluxoid_ints: Optional[Tuple[int, ...]] = None

    kind: ClassVar[str] = "trainmon"

    def __post_init__(self):
        branches = tuple(self.branches)
        object.__setattr__(self, "branches", branches)
        if not branches:
            raise SchemaError("O circuito precisa de pelo menos um ramo")
        if self.e_c < 0:
            raise SchemaError(f"e_c deve ser ≥ 0, recebido {self.e_c}")
        ns = [b.n for b in branches]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise SchemaError(f"Valores de n dos ramos devem ser únicos e crescentes: {ns}")

        phases = [b.phi_branch for b in branches]
        n_loops = len(branches) - 1
        if self.loop_fluxes is None:
            fluxes = tuple(phases[i + 1] - phases[i] for i in range(n_loops))
        else:
            fluxes = tuple(float(f) for f in self.loop_fluxes)
            if len(fluxes) != n_loops:
                raise SchemaError(
                    f"Esperados {n_loops} fluxos de loop, recebidos {len(fluxes)}")
        object.__setattr__(self, "loop_fluxes", fluxes)

        # φ_{n_i} − φ_{n_{i+1}} + φ_e^l = 2π·z_l
        windings = [(phases[i] - phases[i + 1] + fluxes[i]) / (2 * math.pi)
                    for i in range(n_loops)]
        if self.fluxoid_ints is None:
            ints = tuple(int(round(w)) for w in windings)
        else:
            ints = tuple(int(z) for z in self.fluxoid_ints)
            if len(ints) != n_loops:
                raise SchemaError(
                    f"Esperados {n_loops} inteiros de fluxoide, recebidos {len(ints)}")
        for l, (w, z) in enumerate(zip(windings, ints)):
            if abs(w - z) > FLUXOID_TOLERANCE:
                raise SchemaError(
                    f"Loop {l} viola a quantização do fluxoide: "
                    f"(φ_i − φ_i+1 + φ_e)/2π = {w:.12g}, z = {z}")
        object.__setattr__(self, "fluxoid_ints", ints)

    @property
    def branch_set(self) -> Tuple[int, ...]:
        return tuple(b.n for b in self.branches)

    @property
    def lcm(self) -> int:
        return math.lcm(*self.branch_set)

    @property
    def period(self) -> float:
        return 2 * math.pi * self.lcm

    @property
    def n_loops(self) -> int:
        return len(self.branches) - 1

    def evaluate(self, phi: PhaseLike):
        return eval_trainmon(self, phi)

    def with_loop_fluxes(self, loop_fluxes: Sequence[float],
                         fluxoid_ints: Optional[Sequence[int]] = None) -> "TrainmonCircuit":
        """
        Novo circuito com os fluxos de loop dados

        As fases dos ramos são re-derivadas a partir da fase do primeiro ramo,
        mantendo os inteiros de fluxoide do circuito (ou os dados):
        φ_{n_{i+1}} = φ_{n_i} + φ_e^l − 2π·z_l.
        """
        fluxes = tuple(float(f) for f in loop_fluxes)
        if len(fluxes) != self.n_loops:
            raise SchemaError(
                f"Esperados {self.n_loops} fluxos de loop, recebidos {len(fluxes)}")
        ints = self.fluxoid_ints if fluxoid_ints is None else tuple(int(z) for z in fluxoid_ints)
        if len(ints) != self.n_loops:
            raise SchemaError(
                f"Esperados {self.n_loops} inteiros de fluxoide, recebidos {len(ints)}")
        if fluxes == self.loop_fluxes and ints == self.fluxoid_ints:
            return self

        phases = [self.branches[0].phi_branch]
        for f, z in zip(fluxes, ints):
            phases.append(phases[-1] + f - 2 * math.pi * z)
        branches = tuple(replace(b, phi_branch=p) for b, p in zip(self.branches, phases))
        return TrainmonCircuit(e_c=self.e_c, branches=branches, n_g=self.n_g,
                               loop_fluxes=fluxes, fluxoid_ints=ints)


def eval_quarton(p: QuartonParams, phi: PhaseLike):
    """U(φ) = −γ·E_J·N·cos(φ/N) − E_J·cos(φ + φ_e)"""
    x = np.asarray(phi, dtype=float)
    values = (-p.gamma * p.e_j * p.n_array * np.cos(x / p.n_array)
              - p.e_j * np.cos(x + p.phi_e))
    return _as_output(phi, values)


def eval_fluxonium(p: FluxoniumParams, phi: PhaseLike):
    """U(φ) = −E_J·cos(φ − φ_ext) + ½·E_L·φ²"""
    x = np.asarray(phi, dtype=float)
    values = -p.e_j * np.cos(x - p.phi_ext) + 0.5 * p.e_l * x ** 2
    return _as_output(phi, values)


def eval_trainmon(c: TrainmonCircuit, phi: PhaseLike):
    """U(φ) = −Σ_i n_i·E_J^{n_i}·cos(φ/n_i + φ_{n_i}/n_i)"""
    x = np.asarray(phi, dtype=float)
    values = np.zeros_like(x)
    for b in c.branches:
        values = values - b.n * b.e_j * np.cos(x / b.n + b.junction_shift)
    return _as_output(phi, values)


@dataclass(frozen=True)
class PotentialSamples:
    """Amostras (φ, U) de um potencial sobre uma grade"""

    phi: np.ndarray
    u: np.ndarray

    def __len__(self):
        return len(self.phi)

    def pairs(self) -> List[Tuple[float, float]]:
        return [(float(p), float(v)) for p, v in zip(self.phi, self.u)]


def sample_potential(target: Potential, phi_min: float, phi_max: float,
                     count: int) -> PotentialSamples:
    """
    Amostra o potencial em `count` pontos uniformes, extremos inclusos

    Args:
        target: Qualquer potencial com `evaluate`
        phi_min: Início da janela (rad)
        phi_max: Fim da janela (rad)
        count: Número de pontos (≥ 2)

    Returns:
        PotentialSamples com φ e U(φ)
    """
    if count < 2:
        raise SchemaError(f"count deve ser ≥ 2, recebido {count}")
    if not phi_min < phi_max:
        raise SchemaError(f"Janela inválida: [{phi_min}, {phi_max}]")
    phi = np.linspace(phi_min, phi_max, int(count))
    u = np.asarray(target.evaluate(phi), dtype=float)
    return PotentialSamples(phi=phi, u=u)


def potential_to_dict(p: Potential) -> Dict[str, Any]:
    """Serializa um potencial para o documento JSON com discriminador `kind`"""
    if isinstance(p, QuartonParams):
        return {"kind": p.kind, "gamma": p.gamma, "n_array": p.n_array,
                "e_j": p.e_j, "phi_e": p.phi_e}
    if isinstance(p, FluxoniumParams):
        return {"kind": p.kind, "e_j": p.e_j, "e_c": p.e_c, "e_l": p.e_l,
                "phi_ext": p.phi_ext, "n_g": p.n_g}
    if isinstance(p, TabulatedPotential):
        return {"kind": p.kind, "samples": [[phi, u] for phi, u in p.samples]}
    if isinstance(p, TrainmonCircuit):
        return {
            "kind": p.kind,
            "e_c": p.e_c,
            "n_g": p.n_g,
            "branches": [{"n": b.n, "e_j": b.e_j, "phi_branch": b.phi_branch}
                         for b in p.branches],
            "loop_fluxes": list(p.loop_fluxes),
            "fluxoid_ints": list(p.fluxoid_ints),
        }
    raise SchemaError(f"Tipo de potencial desconhecido: {type(p).__name__}")


def potential_from_dict(doc: Dict[str, Any]) -> Potential:
    """Reconstrói um potencial a partir do documento JSON"""
    kind = doc.get("kind")
    try:
        if kind == "quarton":
            return QuartonParams(gamma=float(doc["gamma"]), n_array=int(doc["n_array"]),
                                 e_j=float(doc["e_j"]), phi_e=float(doc.get("phi_e", 0.0)))
        if kind == "fluxonium":
            return FluxoniumParams(e_j=float(doc["e_j"]), e_c=float(doc["e_c"]),
                                   e_l=float(doc["e_l"]),
                                   phi_ext=float(doc.get("phi_ext", 0.0)),
                                   n_g=float(doc.get("n_g", 0.0)))
        if kind == "tabulated":
            return TabulatedPotential(samples=tuple(tuple(s) for s in doc["samples"]))
        if kind == "trainmon":
            return circuit_from_dict(doc)
    except (KeyError, TypeError) as e:
        raise SchemaError(f"Documento '{kind}' incompleto: {e}") from e
    raise SchemaError(f"kind desconhecido: {kind!r}")


def circuit_from_dict(doc: Dict[str, Any]) -> TrainmonCircuit:
    """
    Reconstrói um TrainmonCircuit a partir do documento JSON

    Sem nenhum phi_branch, as fases dos ramos saem de loop_fluxes e
    fluxoid_ints (z = 0 quando omitidos).
    """
    branches = tuple(
        Branch(n=int(b["n"]), e_j=float(b["e_j"]),
               phi_branch=float(b.get("phi_branch", 0.0)))
        for b in doc["branches"]
    )
    loop_fluxes = doc.get("loop_fluxes")
    fluxoid_ints = doc.get("fluxoid_ints")
    if loop_fluxes is not None and not any("phi_branch" in b for b in doc["branches"]):
        base = TrainmonCircuit(e_c=float(doc["e_c"]), branches=branches,
                               n_g=float(doc.get("n_g", 0.0)))
        return base.with_loop_fluxes(loop_fluxes, fluxoid_ints or (0,) * base.n_loops)
    return TrainmonCircuit(
        e_c=float(doc["e_c"]),
        branches=branches,
        n_g=float(doc.get("n_g", 0.0)),
        loop_fluxes=None if loop_fluxes is None else tuple(loop_fluxes),
        fluxoid_ints=None if fluxoid_ints is None else tuple(fluxoid_ints),
    )
