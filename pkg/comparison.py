#!/usr/bin/env python3
"""
Módulo de Comparação
Diferenças de energias de transição entre o potencial alvo e o Trainmon
ajustado, com relatório em texto alinhado ou markdown
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

from charge_solver import Spectrum, transition_energies
from exceptions import SchemaError
from fitter import FitMetrics

logger = logging.getLogger(__name__)

NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class ComparisonReport:
    """
    E01/E12 do alvo e do Trainmon, diferenças absolutas e relativas

    delta = trainmon − alvo; rel = delta/alvo (None quando o alvo é 0).
    """

    reference_e01: float
    reference_e12: float
    trainmon_e01: float
    trainmon_e12: float
    delta_e01: float
    delta_e12: float
    rel_e01: Optional[float]
    rel_e12: Optional[float]
    metrics: Optional[FitMetrics] = None
    reference_method: str = "phase"
    trainmon_method: str = "charge"
    warnings: Tuple[str, ...] = ()


def _relative(delta: float, reference: float) -> Optional[float]:
    return None if reference == 0 else delta / reference


def build_comparison(reference: Spectrum, trainmon: Spectrum,
                     metrics: Optional[FitMetrics] = None) -> ComparisonReport:
    """
    Monta o relatório a partir dos dois espectros

    Args:
        reference: Espectro do alvo (oráculo em fase)
        trainmon: Espectro do Trainmon (base de carga)
        metrics: Métricas do ajuste, quando houver

    Returns:
        ComparisonReport
    """
    ref_e01, ref_e12 = transition_energies(reference)
    tm_e01, tm_e12 = transition_energies(trainmon)
    delta_e01 = tm_e01 - ref_e01
    delta_e12 = tm_e12 - ref_e12
    report = ComparisonReport(
        reference_e01=ref_e01, reference_e12=ref_e12,
        trainmon_e01=tm_e01, trainmon_e12=tm_e12,
        delta_e01=delta_e01, delta_e12=delta_e12,
        rel_e01=_relative(delta_e01, ref_e01), rel_e12=_relative(delta_e12, ref_e12),
        metrics=metrics, reference_method=reference.method, trainmon_method=trainmon.method,
        warnings=tuple(reference.warnings) + tuple(trainmon.warnings),
    )
    logger.info(f"📊 ΔE01 = {delta_e01:.6e} GHz, ΔE12 = {delta_e12:.6e} GHz")
    return report


def _fmt_rel(value: Optional[float]) -> str:
    return "N/A" if value is None else f"{value:.4e}"


def format_comparison(report: ComparisonReport, fmt: str = "text") -> str:
    """
    Tabela E01/E12 no estilo alvo × Trainmon × Δ × δ

    Args:
        report: ComparisonReport
        fmt: "text" (colunas alinhadas) ou "markdown"
    """
    header = ["", "Alvo (GHz)", "Trainmon (GHz)", "Δ (GHz)", "δ"]
    rows = [
        ["E01", f"{report.reference_e01:.8f}", f"{report.trainmon_e01:.8f}",
         f"{report.delta_e01:.4e}", _fmt_rel(report.rel_e01)],
        ["E12", f"{report.reference_e12:.8f}", f"{report.trainmon_e12:.8f}",
         f"{report.delta_e12:.4e}", _fmt_rel(report.rel_e12)],
    ]

    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join(["---"] + ["---:"] * (len(header) - 1)) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
    elif fmt == "text":
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        lines = ["  ".join(cell.rjust(w) if i else cell.ljust(w)
                           for i, (cell, w) in enumerate(zip(r, widths)))
                 for r in [header] + rows]
        lines.insert(1, "-" * len(lines[0]))
    else:
        raise SchemaError(f"Formato de relatório desconhecido: {fmt!r}")

    m = report.metrics
    if m is not None:
        lines.append("")
        if m.max_rel_error is not None:
            lines.append(f"Erro relativo máximo do ajuste: {m.max_rel_error:.4e}")
        if m.correlation is not None:
            lines.append(f"Correlação de Pearson: {m.correlation:.6f}")
    if report.warnings:
        lines.append("")
        lines += [f"Aviso: {w}" for w in report.warnings]
    return "\n".join(lines) + "\n"


def _metrics_to_dict(m: FitMetrics) -> dict:
    return {
        "max_rel_error": m.max_rel_error,
        "max_abs_error": m.max_abs_error,
        "rmse": m.rmse,
        "correlation": m.correlation,
        "correlation_window": None if m.correlation_window is None
        else list(m.correlation_window),
        "normalization": m.normalization,
    }


def comparison_to_dict(report: ComparisonReport) -> dict:
    doc = {
        "reference": {"e01": report.reference_e01, "e12": report.reference_e12,
                      "method": report.reference_method},
        "trainmon": {"e01": report.trainmon_e01, "e12": report.trainmon_e12,
                     "method": report.trainmon_method},
        "delta_e01": report.delta_e01,
        "delta_e12": report.delta_e12,
        "rel_e01": report.rel_e01,
        "rel_e12": report.rel_e12,
        "metrics": None if report.metrics is None else _metrics_to_dict(report.metrics),
        "warnings": list(report.warnings),
    }
    for key in ("rel_e01", "rel_e12"):
        doc[f"{key}_status"] = "ok" if doc[key] is not None else NOT_APPLICABLE
    return doc


def comparison_from_dict(doc: dict) -> ComparisonReport:
    m = doc.get("metrics")
    metrics = None
    if m is not None:
        metrics = FitMetrics(
            max_rel_error=m["max_rel_error"], rmse=m["rmse"], correlation=m["correlation"],
            max_abs_error=m["max_abs_error"],
            correlation_window=None if m["correlation_window"] is None
            else tuple(m["correlation_window"]),
            normalization=m["normalization"],
        )
    return ComparisonReport(
        reference_e01=doc["reference"]["e01"], reference_e12=doc["reference"]["e12"],
        trainmon_e01=doc["trainmon"]["e01"], trainmon_e12=doc["trainmon"]["e12"],
        delta_e01=doc["delta_e01"], delta_e12=doc["delta_e12"],
        rel_e01=doc["rel_e01"], rel_e12=doc["rel_e12"], metrics=metrics,
        reference_method=doc["reference"]["method"], trainmon_method=doc["trainmon"]["method"],
        warnings=tuple(doc.get("warnings", ())),
    )
