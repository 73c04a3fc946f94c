#!/usr/bin/env python3
"""
Trainmon Designer
Classe principal que coordena ajuste, solvers, comparação, varreduras de
dispersão e defasagem, gravando os resultados no diretório configurado
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from charge_solver import (Spectrum, check_hermitian, converged_spectrum, hamiltonian_to_frame,
                           solve_at, solved_hamiltonian, spectrum_to_dict)
from comparison import ComparisonReport, build_comparison, comparison_to_dict, format_comparison
from config_manager import ConfigManager
from data_handler import DataHandler, FitRequest, NoiseRequest, ScanRequest
from export_utils import ExportUtils
from fitter import (FitProblem, FitResult, circuit_from_fit, fit_coefficients,
                    fit_result_to_dict, parse_branch_set, reconstruction_table)
from noise import (DephasingReport, DispersionGrid, TargetDephasing, bias_sweep,
                   dephasing_report, dephasing_report_to_dict, dispersion_scan,
                   dispersion_to_frame, extrema_to_frame, target_bias_sweep, target_dephasing,
                   target_dephasing_to_dict)
from phase_oracle import check_domain, solve_phase_grid, target_problem
from potentials import (Potential, TabulatedPotential, TrainmonCircuit, potential_to_dict,
                        sample_potential)
from exceptions import SchemaError

logger = logging.getLogger(__name__)

DEFAULT_BRANCH_SET = "1,2,4"


class TrainmonDesigner:
    """
    Trainmon Designer

    Coordena todos os módulos: ajusta um potencial alvo por um trem de
    cossenos, resolve o circuito resultante e avalia a sua sensibilidade
    ao fluxo
    """

    def __init__(self, config_path: Optional[str] = "config.json",
                 overrides: Optional[Dict[str, Any]] = None):
        """
        Inicializa o coordenador

        Args:
            config_path: Caminho para arquivo de configuração
            overrides: Valores que substituem a configuração nesta execução
        """
        self.config_manager = ConfigManager(config_path)
        if overrides:
            self.config_manager.update(overrides)

        self.data_handler = DataHandler()
        self.export_utils = ExportUtils(results_dir=self.config_manager.get("results_dir"))
        self.outputs: List[str] = []

    @property
    def solver_options(self) -> Dict[str, Any]:
        cfg = self.config_manager
        return {
            "k_max_start": int(cfg.get("k_max_start")),
            "k_max_limit": int(cfg.get("k_max_limit")),
            "resolution": int(cfg.get("resolution")),
            "validity_warning": float(cfg.get("validity_ratio_warning")),
        }

    @property
    def levels(self) -> int:
        return int(self.config_manager.get("levels"))

    @property
    def tol(self) -> float:
        return float(self.config_manager.get("convergence_tol"))

    def _record(self, path: str):
        self.outputs.append(path)

    # ------------------------------------------------------------------ ajuste
    def fit(self, request: FitRequest) -> FitResult:
        """
        Ajusta o alvo e grava fit_result.json, fit_reconstruction.csv e,
        quando E_C é conhecida, circuit.json

        Args:
            request: FitRequest carregado pelo DataHandler

        Returns:
            FitResult
        """
        cfg = self.config_manager
        branch_set = parse_branch_set(request.branch_set or DEFAULT_BRANCH_SET)
        window = request.window
        if window is None:
            raise SchemaError("O pedido de ajuste precisa de 'window'")
        count = int(request.sample_count or cfg.get("sample_count"))
        corr_window = request.correlation_window or self._default_correlation_window(
            request.target, window)
        include_offset = (cfg.get("include_offset") if request.include_offset is None
                          else request.include_offset)
        drop_tolerance = (cfg.get("drop_tolerance") if request.drop_tolerance is None
                          else request.drop_tolerance)

        samples = sample_potential(request.target, window[0], window[1], count)
        corr_samples = sample_potential(request.target, corr_window[0], corr_window[1], count)
        problem = FitProblem(samples=samples, branch_set=branch_set,
                             include_offset=bool(include_offset),
                             correlation_samples=corr_samples)
        result = fit_coefficients(problem, float(drop_tolerance))

        self._record(self.export_utils.write_json(fit_result_to_dict(result), "fit_result.json"))
        self._record(self.export_utils.write_csv(reconstruction_table(result, samples),
                                                 "fit_reconstruction.csv"))
        e_c = self._target_e_c(request)
        if e_c is not None:
            circuit = circuit_from_fit(result, e_c, request.n_g)
            self._record(self.export_utils.write_json(potential_to_dict(circuit), "circuit.json"))
        return result

    def _default_correlation_window(self, target: Potential,
                                    window: Tuple[float, float]) -> Tuple[float, float]:
        """Janela padrão da configuração, limitada ao intervalo de um alvo tabelado"""
        lo, hi = (float(v) for v in self.config_manager.get("correlation_window"))
        if not isinstance(target, TabulatedPotential):
            return lo, hi
        t_lo, t_hi = target.domain
        if t_lo <= lo and hi <= t_hi:
            return lo, hi
        clipped = (max(lo, t_lo), min(hi, t_hi))
        if clipped[0] >= clipped[1]:
            clipped = (float(window[0]), float(window[1]))
        logger.info(f"📏 Janela de correlação [{lo:.6g}, {hi:.6g}] fora do intervalo tabelado; "
                    f"usando [{clipped[0]:.6g}, {clipped[1]:.6g}]")
        return clipped

    @staticmethod
    def _target_e_c(request: FitRequest) -> Optional[float]:
        if request.e_c is not None:
            return float(request.e_c)
        return getattr(request.target, "e_c", None)

    # ---------------------------------------------------------------- espectro
    def spectrum(self, circuit: TrainmonCircuit, levels: Optional[int] = None,
                 tol: Optional[float] = None, k_max: Optional[int] = None,
                 dump_matrix: bool = False) -> Spectrum:
        """
        Resolve o circuito e grava spectrum.json, eigenvalues.csv e,
        opcionalmente, hamiltonian.csv

        Args:
            circuit: TrainmonCircuit
            levels: Número de níveis (padrão da configuração)
            tol: Tolerância de convergência (padrão da configuração)
            k_max: Corte fixo; desliga o controle de convergência
            dump_matrix: Grava o Hamiltoniano no corte usado
        """
        levels = self.levels if levels is None else int(levels)
        tol = self.tol if tol is None else float(tol)
        if levels < 1:
            raise SchemaError(f"levels deve ser ≥ 1, recebido {levels}")
        options = self.solver_options
        if k_max is not None:
            s = solve_at(circuit, levels, int(k_max), options["resolution"])
        else:
            s = converged_spectrum(circuit, levels, tol, **options)

        self._record(self.export_utils.write_json(spectrum_to_dict(s), "spectrum.json"))
        eigen = pd.DataFrame({"level": range(len(s.eigenvalues)),
                              "energy_GHz": list(s.eigenvalues)})
        self._record(self.export_utils.write_csv(eigen, "eigenvalues.csv"))

        if dump_matrix:
            h = solved_hamiltonian(circuit, s.k_max_used, options["resolution"])
            check_hermitian(h)
            self._record(self.export_utils.write_csv(hamiltonian_to_frame(h), "hamiltonian.csv"))
        return s

    # -------------------------------------------------------------- comparação
    def compare(self, request: FitRequest, circuit: Optional[TrainmonCircuit] = None,
                fmt: str = "text") -> ComparisonReport:
        """
        Compara E01/E12 do alvo (oráculo em fase) com os do Trainmon

        Sem circuito, ajusta o alvo primeiro e usa o circuito do ajuste.
        Grava comparison.json e a tabela formatada (comparison.txt ou
        comparison.md).
        """
        metrics = None
        if circuit is None:
            e_c = self._target_e_c(request)
            if e_c is None:
                raise SchemaError("Sem circuito, o alvo precisa de 'e_c' para a comparação")
            result = self.fit(request)
            metrics = result.metrics
            circuit = circuit_from_fit(result, e_c, request.n_g)

        levels = max(self.levels, 3)
        cfg = self.config_manager
        problem = target_problem(
            request.target, e_c=request.e_c, levels=levels,
            points=int(request.phase_points or cfg.get("phase_points")),
            domain=request.phase_domain, boundary=request.phase_boundary,
            hard_wall_domain=cfg.get("phase_domain"))
        logger.info(f"🔭 Oráculo em fase: {problem.boundary}, N={problem.points}, "
                    f"domínio [{problem.domain[0]:.4f}, {problem.domain[1]:.4f}]")
        reference = solve_phase_grid(problem)
        domain_warning = check_domain(problem, e0=reference.eigenvalues[0])
        if domain_warning:
            reference = replace(reference, warnings=reference.warnings + (domain_warning,))
        trainmon = converged_spectrum(circuit, levels, self.tol, **self.solver_options)

        report = build_comparison(reference, trainmon, metrics)
        self._record(self.export_utils.write_json(comparison_to_dict(report), "comparison.json"))
        table = format_comparison(report, fmt)
        name = "comparison.md" if fmt == "markdown" else "comparison.txt"
        self._record(self.export_utils.write_text(table.rstrip("\n"), name))
        return report

    # -------------------------------------------------------------- dispersão
    def dispersion(self, circuit: TrainmonCircuit, scan: ScanRequest,
                   progress_callback=None) -> DispersionGrid:
        """Varredura E01/E12 sobre dois loops; grava dispersion.csv e extrema.csv"""
        g = dispersion_scan(circuit, scan.loop1_range, scan.loop2_range, scan.grid,
                            levels=scan.levels, tol=self.tol, loops=scan.loops,
                            n_workers=int(self.config_manager.get("n_workers")),
                            progress_callback=progress_callback, **self.solver_options)
        self._record(self.export_utils.write_csv(dispersion_to_frame(g), "dispersion.csv"))
        self._record(self.export_utils.write_csv(extrema_to_frame(g), "extrema.csv"))
        return g

    # -------------------------------------------------------------- defasagem
    def dephasing(self, circuit: TrainmonCircuit, noise: NoiseRequest) -> DephasingReport:
        """Relatório de defasagem por loop e total; grava dephasing.json e bias_sweep.csv"""
        cfg = self.config_manager
        step = float(noise.flux_step or cfg.get("flux_step"))
        report = dephasing_report(circuit, noise.model, step=step, tol=self.tol,
                                  loops=noise.loops, **self.solver_options)
        self._record(self.export_utils.write_json(dephasing_report_to_dict(report),
                                                  "dephasing.json"))

        sweep_loop = 0 if noise.sweep_loop is None else int(noise.sweep_loop)
        sweep = bias_sweep(
            circuit, sweep_loop, noise.model,
            half_width=float(cfg.get("sweep_half_width") if noise.sweep_half_width is None
                             else noise.sweep_half_width),
            points=int(cfg.get("sweep_points") if noise.sweep_points is None
                       else noise.sweep_points),
            step=step, tol=self.tol, n_workers=int(cfg.get("n_workers")),
            **self.solver_options)
        self._record(self.export_utils.write_csv(sweep, "bias_sweep.csv"))
        return report

    def fluxonium_dephasing(self, target: Potential, noise: NoiseRequest) -> TargetDephasing:
        """
        T_φ de primeira ordem do Fluxonium alvo, no oráculo em fase

        Grava target_dephasing.json e target_bias_sweep.csv, na mesma janela
        de bias usada para o Trainmon.
        """
        cfg = self.config_manager
        step = float(noise.flux_step or cfg.get("flux_step"))
        options = {"points": int(cfg.get("phase_points")), "domain": cfg.get("phase_domain")}
        result = target_dephasing(target, noise.model, step=step, **options)
        self._record(self.export_utils.write_json(target_dephasing_to_dict(result),
                                                  "target_dephasing.json"))

        sweep = target_bias_sweep(
            target, noise.model,
            half_width=float(cfg.get("sweep_half_width") if noise.sweep_half_width is None
                             else noise.sweep_half_width),
            sweep_points=int(cfg.get("sweep_points") if noise.sweep_points is None
                             else noise.sweep_points),
            step=step, n_workers=int(cfg.get("n_workers")), **options)
        self._record(self.export_utils.write_csv(sweep, "target_bias_sweep.csv"))
        return result

    @property
    def results_dir(self) -> Path:
        return self.export_utils.results_dir
