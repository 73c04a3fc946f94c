#!/usr/bin/env python3
"""
Módulo de Ruído de Fluxo
Varreduras de dispersão nos fluxos de loop, detecção de sweet spots,
derivadas de fluxo da frequência do qubit e tempos de defasagem por
ruído 1/f, inclusive do Fluxonium alvo resolvido no oráculo em fase
"""

import math
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from batch_processor import BatchProcessor
from charge_solver import Spectrum, converged_spectrum
from exceptions import ScanError, SchemaError, SolverError
from phase_oracle import solve_phase_grid, target_problem
from potentials import FluxoniumParams, Potential, TrainmonCircuit

logger = logging.getLogger(__name__)

GHZ_TO_RAD_S = 2 * math.pi * 1e9
DEFAULT_FLUX_STEP = 1e-4
STEP_DRIFT_TOLERANCE = 0.01
INF_TOKEN = "INF"

SURFACES = ("e01", "e12")
MINIMUM = "min"
MAXIMUM = "max"


@dataclass(frozen=True)
class NoiseModel:
    """
    Parâmetros do ruído 1/f de fluxo

    Args:
        a_phi: Amplitude do ruído (Φ_0)
        omega_ir: Corte infravermelho (rad/s)
        omega_uv: Corte ultravioleta (rad/s)
        t_exp: Tempo de medida (s)
    """

    a_phi: float = 1e-6
    omega_ir: float = 2 * math.pi
    omega_uv: float = 2 * math.pi * 3e9
    t_exp: float = 1e-5

    def __post_init__(self):
        for name in ("a_phi", "omega_ir", "omega_uv", "t_exp"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise SchemaError(f"{name} deve ser finito e > 0, recebido {value}")
        if self.omega_ir >= self.omega_uv:
            raise SchemaError(
                f"omega_ir ({self.omega_ir}) deve ser menor que omega_uv ({self.omega_uv})")
        if math.isclose(self.omega_ir * self.t_exp, 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise SchemaError("omega_ir·t_exp = 1 anula o termo de primeira ordem")

    @property
    def log_ir_t(self) -> float:
        return math.log(self.omega_ir * self.t_exp)

    @property
    def log_uv_ir(self) -> float:
        return math.log(self.omega_uv / self.omega_ir)


@dataclass(frozen=True)
class Extremum:
    i1: int
    i2: int
    kind: str


@dataclass(frozen=True, eq=False)
class DispersionGrid:
    """Superfícies E01/E12 (GHz) indexadas (i1, i2) sobre dois fluxos de loop"""

    axis1: np.ndarray
    axis2: np.ndarray
    e01: np.ndarray
    e12: np.ndarray
    loops: Tuple[int, int] = (0, 1)
    extrema: Dict[str, Tuple[Extremum, ...]] = field(default_factory=dict)

    def __post_init__(self):
        shape = (len(self.axis1), len(self.axis2))
        for name in SURFACES:
            if np.shape(getattr(self, name)) != shape:
                raise SchemaError(
                    f"Superfície {name} com forma {np.shape(getattr(self, name))}, esperado {shape}")

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.axis1), len(self.axis2)


@dataclass(frozen=True)
class LoopDephasing:
    """Derivadas e tempos de defasagem de um loop"""

    loop: int
    loop_flux: float
    d1: float
    d2: float
    t_first: float
    t_second: float
    t_combined: float
    step: float
    step_drift: Optional[float] = None


@dataclass(frozen=True)
class DephasingReport:
    loops: Tuple[LoopDephasing, ...]
    total: float
    model: NoiseModel
    warnings: Tuple[str, ...] = ()


@dataclass(frozen=True)
class TargetDephasing:
    """Defasagem de primeira ordem do Fluxonium alvo no seu φ_ext"""

    phi_ext: float
    d1: float
    t_phi: float
    step: float
    points: int
    model: NoiseModel


def local_extrema(surface: np.ndarray) -> List[Extremum]:
    """
    Mínimos e máximos locais estritos na vizinhança de 4 nós

    Nós de borda nunca são extremos; empates (platôs) não contam.
    """
    s = np.asarray(surface, dtype=float)
    if s.ndim != 2 or s.shape[0] < 3 or s.shape[1] < 3:
        return []
    center = s[1:-1, 1:-1]
    neighbours = (s[:-2, 1:-1], s[2:, 1:-1], s[1:-1, :-2], s[1:-1, 2:])
    is_min = np.logical_and.reduce([center < n for n in neighbours])
    is_max = np.logical_and.reduce([center > n for n in neighbours])

    found = []
    for i1, i2 in np.argwhere(is_min | is_max):
        kind = MINIMUM if is_min[i1, i2] else MAXIMUM
        found.append(Extremum(int(i1) + 1, int(i2) + 1, kind))
    return found


def find_extrema(g: DispersionGrid) -> Dict[str, Tuple[Extremum, ...]]:
    """Extremos locais de cada superfície da grade"""
    return {name: tuple(local_extrema(getattr(g, name))) for name in SURFACES}


def _scan_fluxes(c: TrainmonCircuit, loops: Tuple[int, int], phi1: float,
                 phi2: float) -> TrainmonCircuit:
    fluxes = list(c.loop_fluxes)
    fluxes[loops[0]] = phi1
    fluxes[loops[1]] = phi2
    return c.with_loop_fluxes(fluxes)


def dispersion_scan(c: TrainmonCircuit, loop1_range: Tuple[float, float],
                    loop2_range: Tuple[float, float], grid: Tuple[int, int],
                    levels: int = 3, tol: float = 1e-9, loops: Tuple[int, int] = (0, 1),
                    n_workers: int = 1,
                    progress_callback: Optional[Callable[[int, int, Hashable], None]] = None,
                    **solver_options) -> DispersionGrid:
    """
    Varre E01 e E12 sobre dois fluxos de loop

    Args:
        c: Circuito Trainmon (pelo menos dois loops)
        loop1_range: (início, fim) do primeiro fluxo em rad
        loop2_range: (início, fim) do segundo fluxo em rad
        grid: (n1, n2) nós por eixo
        levels: Níveis resolvidos em cada nó (no mínimo 3)
        tol: Tolerância de convergência (GHz)
        loops: Índices dos loops varridos; os demais ficam no fluxo do circuito
        n_workers: Threads para os nós
        progress_callback: Função (concluídos, total, nó)
        **solver_options: Repassados a converged_spectrum

    Returns:
        DispersionGrid com os extremos já detectados

    Raises:
        ScanError: circuito sem loops suficientes, ou falha num nó
    """
    if c.n_loops < 2:
        raise ScanError(f"Nada a varrer: o circuito tem {c.n_loops} loop(s), são necessários 2")
    l1, l2 = (int(l) for l in loops)
    if l1 == l2 or not (0 <= l1 < c.n_loops and 0 <= l2 < c.n_loops):
        raise SchemaError(f"Loops inválidos {loops} para um circuito com {c.n_loops} loops")
    n1, n2 = (int(n) for n in grid)
    if n1 < 1 or n2 < 1:
        raise SchemaError(f"Grade inválida: {grid}")

    axis1 = np.linspace(loop1_range[0], loop1_range[1], n1)
    axis2 = np.linspace(loop2_range[0], loop2_range[1], n2)
    levels = max(int(levels), 3)

    def node_job(phi1: float, phi2: float):
        return lambda: converged_spectrum(_scan_fluxes(c, (l1, l2), phi1, phi2),
                                          levels, tol, **solver_options)

    jobs = [((i1, i2), node_job(a, b))
            for i1, a in enumerate(axis1) for i2, b in enumerate(axis2)]
    logger.info(f"🗺️ Varredura de dispersão {n1}×{n2} nos loops ({l1}, {l2})")
    outcomes = BatchProcessor(n_workers).process_batch(jobs, progress_callback, fail_fast=True)

    e01 = np.array([o.value.e01 for o in outcomes], dtype=float).reshape(n1, n2)
    e12 = np.array([o.value.e12 for o in outcomes], dtype=float).reshape(n1, n2)
    g = DispersionGrid(axis1=axis1, axis2=axis2, e01=e01, e12=e12, loops=(l1, l2))
    extrema = find_extrema(g)
    logger.info(f"✅ Varredura concluída: {len(extrema['e01'])} extremo(s) em E01, "
                f"{len(extrema['e12'])} em E12")
    return DispersionGrid(axis1=axis1, axis2=axis2, e01=e01, e12=e12, loops=(l1, l2),
                          extrema=extrema)


def _qubit_frequency(c: TrainmonCircuit, levels: int, tol: float, **solver_options) -> float:
    s: Spectrum = converged_spectrum(c, levels, tol, **solver_options)
    if s.e01 is None:
        raise SolverError("E01 indisponível: o espectro tem menos de 2 níveis")
    return GHZ_TO_RAD_S * s.e01


def flux_derivatives(c: TrainmonCircuit, loop: int, step: float = DEFAULT_FLUX_STEP,
                     levels: int = 3, tol: float = 1e-9, **solver_options) -> Tuple[float, float]:
    """
    Diferenças centrais de ω_ge = 2π·10⁹·E01 em relação ao fluxo do loop

    Args:
        c: Circuito Trainmon
        loop: Índice do loop
        step: Passo h em unidades de Φ_0
        levels: Níveis resolvidos
        tol: Tolerância de convergência (GHz)

    Returns:
        (∂ω/∂Φ em rad/s/Φ_0, ∂²ω/∂Φ² em rad/s/Φ_0²)
    """
    if not step > 0:
        raise SchemaError(f"step deve ser > 0, recebido {step}")
    if not 0 <= loop < c.n_loops:
        raise SchemaError(f"Loop {loop} inexistente (o circuito tem {c.n_loops})")

    base = list(c.loop_fluxes)

    def omega(offset: float) -> float:
        fluxes = list(base)
        fluxes[loop] = base[loop] + 2 * math.pi * offset
        return _qubit_frequency(c.with_loop_fluxes(fluxes), levels, tol, **solver_options)

    w_minus, w_zero, w_plus = omega(-step), omega(0.0), omega(step)
    d1 = (w_plus - w_minus) / (2 * step)
    d2 = (w_plus - 2 * w_zero + w_minus) / step ** 2
    logger.debug(f"📐 Loop {loop}: dω/dΦ={d1:.6e}, d²ω/dΦ²={d2:.6e} (h={step:g} Φ_0)")
    return d1, d2


def dephasing_time(d1: float, d2: float, m: NoiseModel) -> float:
    """
    Tempo de defasagem por ruído 1/f de um loop (s)

    T = {2A²·d1²·|ln(ω_ir·t)| + 2A⁴·d2²·[ln²(ω_uv/ω_ir) + 2·ln²(ω_ir·t)]}^(−1/2)

    Returns:
        T em segundos; math.inf quando as duas derivadas são nulas
    """
    a2 = m.a_phi ** 2
    rate2 = (2 * a2 * d1 ** 2 * abs(m.log_ir_t)
             + 2 * a2 ** 2 * d2 ** 2 * (m.log_uv_ir ** 2 + 2 * m.log_ir_t ** 2))
    if rate2 == 0:
        return math.inf
    return 1.0 / math.sqrt(rate2)


def combine_dephasing(ts: Sequence[float]) -> float:
    """1/T_tot = Σ 1/T_λ; entradas infinitas contribuem com zero"""
    ts = list(ts)
    if not ts:
        raise SchemaError("combine_dephasing precisa de pelo menos um tempo")
    if any(not t > 0 for t in ts):
        raise SchemaError(f"Tempos de defasagem devem ser > 0: {ts}")
    rate = sum(0.0 if math.isinf(t) else 1.0 / t for t in ts)
    return math.inf if rate == 0 else 1.0 / rate


def _relative_drift(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return math.inf
    return abs(a - b) / abs(a)


def loop_dephasing(c: TrainmonCircuit, loop: int, m: NoiseModel,
                   step: float = DEFAULT_FLUX_STEP, levels: int = 3, tol: float = 1e-9,
                   check_step: bool = True, **solver_options) -> LoopDephasing:
    """Derivadas, tempos decompostos e verificação de passo para um loop"""
    d1, d2 = flux_derivatives(c, loop, step, levels, tol, **solver_options)
    t_combined = dephasing_time(d1, d2, m)
    drift = None
    if check_step:
        h1, h2 = flux_derivatives(c, loop, step / 2, levels, tol, **solver_options)
        drift = _relative_drift(t_combined, dephasing_time(h1, h2, m))
    return LoopDephasing(loop=loop, loop_flux=c.loop_fluxes[loop], d1=d1, d2=d2,
                         t_first=dephasing_time(d1, 0.0, m),
                         t_second=dephasing_time(0.0, d2, m),
                         t_combined=t_combined, step=step, step_drift=drift)


def dephasing_report(c: TrainmonCircuit, m: NoiseModel, step: float = DEFAULT_FLUX_STEP,
                     levels: int = 3, tol: float = 1e-9, loops: Optional[Sequence[int]] = None,
                     **solver_options) -> DephasingReport:
    """
    Defasagem de cada loop no bias do circuito, combinada pela soma harmônica

    Avisa quando o tempo muda mais de 1% ao reduzir o passo à metade.
    """
    if c.n_loops < 1:
        raise ScanError("Nada a avaliar: o circuito não tem loops")
    selected = range(c.n_loops) if loops is None else loops
    results = []
    warnings = []
    for loop in selected:
        r = loop_dephasing(c, int(loop), m, step, levels, tol, **solver_options)
        logger.info(f"⏱️ Loop {loop}: T_φ = {r.t_combined * 1e6:.6g} μs "
                    f"(só 1ª ordem {r.t_first * 1e6:.6g} μs, só 2ª ordem {r.t_second * 1e6:.6g} μs)")
        if r.step_drift is not None and r.step_drift > STEP_DRIFT_TOLERANCE:
            message = (f"Loop {loop}: T_φ varia {r.step_drift:.2%} ao reduzir o passo "
                       f"de {step:g} Φ_0 à metade")
            logger.warning(f"⚠️ {message}")
            warnings.append(message)
        results.append(r)

    total = combine_dephasing([r.t_combined for r in results])
    logger.info(f"✅ T_φ total = {total * 1e6:.6g} μs")
    return DephasingReport(loops=tuple(results), total=total, model=m, warnings=tuple(warnings))


def bias_sweep(c: TrainmonCircuit, loop: int, m: NoiseModel, half_width: float = 0.05,
               points: int = 21, step: float = DEFAULT_FLUX_STEP, levels: int = 3,
               tol: float = 1e-9, n_workers: int = 1, **solver_options) -> pd.DataFrame:
    """
    Decomposição da defasagem ao longo do bias de um loop

    Varre o fluxo do loop em ±half_width Φ_0 ao redor do bias do circuito.

    Returns:
        DataFrame com bias_phi0, loop_flux, d1, d2, t_first, t_second, t_combined
    """
    if not 0 <= loop < c.n_loops:
        raise SchemaError(f"Loop {loop} inexistente (o circuito tem {c.n_loops})")
    if points < 1 or half_width < 0:
        raise SchemaError(f"Varredura inválida: points={points}, half_width={half_width}")

    base = list(c.loop_fluxes)
    offsets = np.linspace(-half_width, half_width, points)

    def point_job(offset: float):
        fluxes = list(base)
        fluxes[loop] = base[loop] + 2 * math.pi * offset
        shifted = c.with_loop_fluxes(fluxes)
        return lambda: loop_dephasing(shifted, loop, m, step, levels, tol,
                                      check_step=False, **solver_options)

    jobs = [(i, point_job(o)) for i, o in enumerate(offsets)]
    outcomes = BatchProcessor(n_workers).process_batch(jobs, fail_fast=True)
    rows = [o.value for o in outcomes]
    return pd.DataFrame({
        "bias_phi0": [r.loop_flux / (2 * math.pi) for r in rows],
        "loop_flux": [r.loop_flux for r in rows],
        "d1": [r.d1 for r in rows],
        "d2": [r.d2 for r in rows],
        "t_first": [r.t_first for r in rows],
        "t_second": [r.t_second for r in rows],
        "t_combined": [r.t_combined for r in rows],
    })


def _fluxonium_target(target: Potential) -> FluxoniumParams:
    if not isinstance(target, FluxoniumParams):
        raise SchemaError(f"Defasagem do alvo só é definida para Fluxonium, recebido "
                          f"{type(target).__name__}")
    return target


def target_flux_derivative(target: FluxoniumParams, step: float = DEFAULT_FLUX_STEP,
                           levels: int = 3, points: int = 4096,
                           domain: Optional[Tuple[float, float]] = None) -> float:
    """
    ∂ω/∂Φ_ext do Fluxonium alvo (rad/s/Φ_0) por diferença central

    Cada ponto do estêncil é resolvido no oráculo em fase, na mesma grade.

    Args:
        target: FluxoniumParams
        step: Passo h em unidades de Φ_0
        levels: Níveis resolvidos
        points: Nós da grade de fase
        domain: Domínio hard-wall (padrão do oráculo quando None)
    """
    target = _fluxonium_target(target)
    if not step > 0:
        raise SchemaError(f"step deve ser > 0, recebido {step}")

    def omega(offset: float) -> float:
        shifted = replace(target, phi_ext=target.phi_ext + 2 * math.pi * offset)
        s = solve_phase_grid(target_problem(shifted, levels=levels, points=points,
                                            hard_wall_domain=domain))
        if s.e01 is None:
            raise SolverError("E01 indisponível no oráculo em fase")
        return GHZ_TO_RAD_S * s.e01

    d1 = (omega(step) - omega(-step)) / (2 * step)
    logger.debug(f"📐 Fluxonium φ_ext={target.phi_ext:.6g}: dω/dΦ={d1:.6e} (h={step:g} Φ_0)")
    return d1


def target_dephasing(target: Potential, m: NoiseModel, step: float = DEFAULT_FLUX_STEP,
                     levels: int = 3, points: int = 4096,
                     domain: Optional[Tuple[float, float]] = None) -> TargetDephasing:
    """T_φ do Fluxonium alvo, só com a derivada de primeira ordem"""
    target = _fluxonium_target(target)
    d1 = target_flux_derivative(target, step, levels, points, domain)
    t_phi = dephasing_time(d1, 0.0, m)
    logger.info(f"⏱️ Fluxonium alvo: T_φ = {t_phi * 1e6:.6g} μs")
    return TargetDephasing(phi_ext=target.phi_ext, d1=d1, t_phi=t_phi, step=step,
                           points=points, model=m)


def target_bias_sweep(target: Potential, m: NoiseModel, half_width: float = 0.05,
                      sweep_points: int = 21, step: float = DEFAULT_FLUX_STEP, levels: int = 3,
                      points: int = 4096, domain: Optional[Tuple[float, float]] = None,
                      n_workers: int = 1) -> pd.DataFrame:
    """
    T_φ do Fluxonium alvo em ±half_width Φ_0 ao redor do seu φ_ext

    Returns:
        DataFrame com bias_phi0, phi_ext, d1, t_phi
    """
    target = _fluxonium_target(target)
    if sweep_points < 1 or half_width < 0:
        raise SchemaError(f"Varredura inválida: points={sweep_points}, half_width={half_width}")

    offsets = np.linspace(-half_width, half_width, sweep_points)

    def point_job(offset: float):
        shifted = replace(target, phi_ext=target.phi_ext + 2 * math.pi * offset)
        return lambda: target_dephasing(shifted, m, step, levels, points, domain)

    jobs = [(i, point_job(o)) for i, o in enumerate(offsets)]
    outcomes = BatchProcessor(n_workers).process_batch(jobs, fail_fast=True)
    rows = [o.value for o in outcomes]
    return pd.DataFrame({
        "bias_phi0": [r.phi_ext / (2 * math.pi) for r in rows],
        "phi_ext": [r.phi_ext for r in rows],
        "d1": [r.d1 for r in rows],
        "t_phi": [r.t_phi for r in rows],
    })


def dispersion_to_frame(g: DispersionGrid) -> pd.DataFrame:
    """Uma linha por nó, em ordem (i1, i2): phi1, phi2, e01_GHz, e12_GHz"""
    phi1, phi2 = np.meshgrid(g.axis1, g.axis2, indexing="ij")
    return pd.DataFrame({
        "phi1": phi1.ravel(),
        "phi2": phi2.ravel(),
        "e01_GHz": np.asarray(g.e01).ravel(),
        "e12_GHz": np.asarray(g.e12).ravel(),
    })


def extrema_to_frame(g: DispersionGrid) -> pd.DataFrame:
    rows = []
    for name in SURFACES:
        surface = getattr(g, name)
        for e in g.extrema.get(name, ()):
            rows.append({"surface": name, "i1": e.i1, "i2": e.i2, "kind": e.kind,
                         "phi1": g.axis1[e.i1], "phi2": g.axis2[e.i2],
                         "value_GHz": surface[e.i1, e.i2]})
    return pd.DataFrame(rows, columns=["surface", "i1", "i2", "kind", "phi1", "phi2", "value_GHz"])


def _encode_time(t: float):
    return INF_TOKEN if math.isinf(t) else t


def _decode_time(value) -> float:
    return math.inf if value == INF_TOKEN else float(value)


def noise_model_to_dict(m: NoiseModel) -> dict:
    return {"a_phi": m.a_phi, "omega_ir": m.omega_ir, "omega_uv": m.omega_uv, "t_exp": m.t_exp}


def dephasing_report_to_dict(r: DephasingReport) -> dict:
    """Relatório com todas as derivadas intermediárias; tempos infinitos viram "INF" """
    return {
        "loops": [{
            "loop": l.loop,
            "loop_flux": l.loop_flux,
            "loop_flux_phi0": l.loop_flux / (2 * math.pi),
            "d1": l.d1,
            "d2": l.d2,
            "t_first": _encode_time(l.t_first),
            "t_second": _encode_time(l.t_second),
            "t_combined": _encode_time(l.t_combined),
            "step": l.step,
            "step_drift": None if l.step_drift is None else _encode_time(l.step_drift),
        } for l in r.loops],
        "total": _encode_time(r.total),
        "model": noise_model_to_dict(r.model),
        "warnings": list(r.warnings),
    }


def dephasing_report_from_dict(doc: dict) -> DephasingReport:
    loops = tuple(LoopDephasing(
        loop=int(l["loop"]), loop_flux=float(l["loop_flux"]), d1=float(l["d1"]),
        d2=float(l["d2"]), t_first=_decode_time(l["t_first"]),
        t_second=_decode_time(l["t_second"]), t_combined=_decode_time(l["t_combined"]),
        step=float(l["step"]),
        step_drift=None if l.get("step_drift") is None else _decode_time(l["step_drift"]),
    ) for l in doc["loops"])
    return DephasingReport(loops=loops, total=_decode_time(doc["total"]),
                           model=NoiseModel(**doc["model"]),
                           warnings=tuple(doc.get("warnings", ())))


def target_dephasing_to_dict(r: TargetDephasing) -> dict:
    return {
        "phi_ext": r.phi_ext,
        "phi_ext_phi0": r.phi_ext / (2 * math.pi),
        "d1": r.d1,
        "t_phi": _encode_time(r.t_phi),
        "step": r.step,
        "points": r.points,
        "model": noise_model_to_dict(r.model),
    }


def target_dephasing_from_dict(doc: dict) -> TargetDephasing:
    return TargetDephasing(phi_ext=float(doc["phi_ext"]), d1=float(doc["d1"]),
                           t_phi=_decode_time(doc["t_phi"]), step=float(doc["step"]),
                           points=int(doc["points"]), model=NoiseModel(**doc["model"]))
