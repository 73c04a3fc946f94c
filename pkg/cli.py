#!/usr/bin/env python3
"""
Interface de linha de comando do Trainmon Designer

Uso:
    python cli.py fit configs/quarton_fit.json
    python cli.py spectrum configs/unit_124.json --k-max 1 --dump-matrix
    python cli.py compare configs/double_well_fit.json
    python cli.py dispersion configs/unit_124.json configs/scan.json
    python cli.py dephasing configs/unit_124.json --noise configs/noise.json
    python cli.py dephasing configs/trainmon_124.json --target configs/fluxonium.json
"""

import sys
import math
import logging
from functools import wraps
from pathlib import Path
from typing import Optional

import click

from comparison import format_comparison
from exceptions import TrainmonError
from trainmon_designer import TrainmonDesigner

logger = logging.getLogger(__name__)


def format_time(seconds: float) -> str:
    """Tempo em μs, ou INF"""
    if math.isinf(seconds):
        return "INF"
    return f"{seconds * 1e6:.4f} μs"


def format_value(value: Optional[float], precision: int = 6, unit: str = "") -> str:
    if value is None:
        return "N/A"
    text = f"{value:.{precision}g}"
    return f"{text} {unit}" if unit else text


def handle_errors(func):
    """Converte TrainmonError em uma linha no stderr e no código de saída correspondente"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except TrainmonError as e:
            click.echo(f"Erro: {e}", err=True)
            sys.exit(e.exit_code)
    return wrapper


def _designer(ctx: click.Context, **overrides) -> TrainmonDesigner:
    obj = ctx.obj
    values = dict(obj["overrides"])
    values.update(overrides)
    return TrainmonDesigner(config_path=obj["config"], overrides=values)


def _report_outputs(designer: TrainmonDesigner):
    click.echo(f"Resultados em {designer.results_dir}: "
               + ", ".join(Path(p).name for p in designer.outputs))


@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), default="config.json",
              show_default=True, help='Arquivo de configuração JSON')
@click.option('--output-dir', type=click.Path(file_okay=False), default=None,
              help='Diretório de resultados (substitui results_dir)')
@click.option('--threads', type=click.IntRange(min=1), default=None,
              help='Máximo de threads nas varreduras')
@click.option('--verbose', '-v', is_flag=True, help='Log em nível DEBUG')
@click.option('--quiet', '-q', is_flag=True, help='Só avisos e erros')
@click.pass_context
def cli(ctx: click.Context, config_path: str, output_dir: Optional[str], threads: Optional[int],
        verbose: bool, quiet: bool):
    """Ajuste de potenciais por trens de cossenos e análise de circuitos Trainmon."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')
    logging.getLogger().setLevel(level)
    ctx.obj = {"config": config_path,
               "overrides": {"results_dir": output_dir, "n_workers": threads}}


@cli.command()
@click.argument('config_file', type=click.Path())
@click.pass_context
@handle_errors
def fit(ctx: click.Context, config_file: str):
    """Ajusta um potencial alvo pelo trem de cossenos."""
    designer = _designer(ctx)
    request = designer.data_handler.load_fit_request(config_file)
    result = designer.fit(request)

    click.echo("Coeficientes (GHz):")
    for n, c in sorted(result.coefficients.items()):
        mark = " (podado)" if n in result.pruned else ""
        click.echo(f"  c_{n} = {c:.12g}{mark}")
    click.echo(f"Offset: {result.offset:.12g} GHz")
    fluxes = ", ".join(f"{f:.6g}" for f in result.assignment.loop_fluxes_phi0)
    click.echo(f"Fluxos de loop (Φ_0): [{fluxes}]")
    click.echo(f"Erro relativo máximo: {format_value(result.metrics.max_rel_error, 6)}")
    click.echo(f"Correlação de Pearson: {format_value(result.metrics.correlation, 8)}")
    _report_outputs(designer)


@cli.command()
@click.argument('circuit_file', type=click.Path())
@click.option('--levels', type=click.IntRange(min=1), default=None, help='Número de níveis')
@click.option('--tol', type=click.FloatRange(min=0, min_open=True), default=None,
              help='Tolerância de convergência (GHz)')
@click.option('--k-max', type=click.IntRange(min=1), default=None,
              help='Corte de carga fixo (sem controle de convergência)')
@click.option('--dump-matrix', is_flag=True, help='Grava hamiltonian.csv')
@click.pass_context
@handle_errors
def spectrum(ctx: click.Context, circuit_file: str, levels: Optional[int], tol: Optional[float],
             k_max: Optional[int], dump_matrix: bool):
    """Resolve um circuito Trainmon na base de carga."""
    designer = _designer(ctx, levels=levels, convergence_tol=tol)
    circuit = designer.data_handler.load_circuit(circuit_file)
    s = designer.spectrum(circuit, k_max=k_max, dump_matrix=dump_matrix)

    click.echo(f"Autovalores (GHz), k_max = {s.k_max_used}, dimensão {s.dimension}:")
    for i, e in enumerate(s.eigenvalues):
        click.echo(f"  E{i} = {e:.12f}")
    click.echo(f"E01 = {format_value(s.e01, 12, 'GHz')}")
    click.echo(f"E12 = {format_value(s.e12, 12, 'GHz')}")
    _report_outputs(designer)


@cli.command()
@click.argument('target_file', type=click.Path())
@click.argument('circuit_file', type=click.Path(), required=False)
@click.option('--levels', type=click.IntRange(min=3), default=None, help='Número de níveis')
@click.option('--tol', type=click.FloatRange(min=0, min_open=True), default=None,
              help='Tolerância de convergência (GHz)')
@click.option('--format', 'fmt', type=click.Choice(['text', 'markdown']), default='text',
              show_default=True, help='Formato da tabela')
@click.pass_context
@handle_errors
def compare(ctx: click.Context, target_file: str, circuit_file: Optional[str],
            levels: Optional[int], tol: Optional[float], fmt: str):
    """Compara E01/E12 do alvo com os do Trainmon (ajustado quando o circuito é omitido)."""
    designer = _designer(ctx, levels=levels, convergence_tol=tol)
    request = designer.data_handler.load_fit_request(target_file)
    circuit = designer.data_handler.load_circuit(circuit_file) if circuit_file else None
    report = designer.compare(request, circuit, fmt=fmt)
    click.echo(format_comparison(report, fmt), nl=False)


@cli.command()
@click.argument('circuit_file', type=click.Path())
@click.argument('scan_file', type=click.Path())
@click.option('--tol', type=click.FloatRange(min=0, min_open=True), default=None,
              help='Tolerância de convergência (GHz)')
@click.pass_context
@handle_errors
def dispersion(ctx: click.Context, circuit_file: str, scan_file: str, tol: Optional[float]):
    """Varre E01/E12 sobre dois fluxos de loop e localiza os extremos."""
    designer = _designer(ctx, convergence_tol=tol)
    circuit = designer.data_handler.load_circuit(circuit_file)
    scan = designer.data_handler.load_scan(scan_file)
    g = designer.dispersion(circuit, scan)

    n1, n2 = g.shape
    click.echo(f"Grade {n1}×{n2}: {n1 * n2} nós")
    for name, found in g.extrema.items():
        for e in found:
            click.echo(f"  {name} {e.kind} em (φ1, φ2) = "
                       f"({g.axis1[e.i1]:.6f}, {g.axis2[e.i2]:.6f})")
    _report_outputs(designer)


@cli.command()
@click.argument('circuit_file', type=click.Path())
@click.option('--noise', 'noise_file', type=click.Path(), default=None,
              help='Documento JSON do modelo de ruído')
@click.option('--target', 'target_file', type=click.Path(), default=None,
              help='Fluxonium alvo para comparar o T_φ')
@click.option('--tol', type=click.FloatRange(min=0, min_open=True), default=None,
              help='Tolerância de convergência (GHz)')
@click.pass_context
@handle_errors
def dephasing(ctx: click.Context, circuit_file: str, noise_file: Optional[str],
              target_file: Optional[str], tol: Optional[float]):
    """Tempos de defasagem por ruído 1/f de fluxo, por loop e total."""
    designer = _designer(ctx, convergence_tol=tol)
    circuit = designer.data_handler.load_circuit(circuit_file)
    noise = designer.data_handler.load_noise(noise_file, designer.config_manager.config)
    target = designer.data_handler.load_potential(target_file) if target_file else None
    report = designer.dephasing(circuit, noise)

    for r in report.loops:
        click.echo(f"Loop {r.loop}: dω/dΦ = {r.d1:.6e} rad/s/Φ_0, "
                   f"d²ω/dΦ² = {r.d2:.6e} rad/s/Φ_0²")
        click.echo(f"  T_φ = {format_time(r.t_combined)} "
                   f"(só 1ª ordem: {format_time(r.t_first)}, só 2ª ordem: {format_time(r.t_second)})")
    click.echo(f"T_φ total = {format_time(report.total)}")
    if target is not None:
        flux = designer.fluxonium_dephasing(target, noise)
        click.echo(f"Fluxonium alvo: dω/dΦ = {flux.d1:.6e} rad/s/Φ_0, "
                   f"T_φ = {format_time(flux.t_phi)}")
    _report_outputs(designer)


if __name__ == "__main__":
    cli()
