#!/usr/bin/env python3
"""
Módulo de Manipulação de Dados
Responsável por carregar e validar os documentos JSON de entrada e os
potenciais tabelados em CSV
"""

import re
import json
import math
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import pandas as pd
from jsonschema import Draft7Validator
from referencing import Registry, Resource

from exceptions import SchemaError
from noise import NoiseModel
from potentials import Potential, TabulatedPotential, TrainmonCircuit, circuit_from_dict, \
    potential_from_dict

logger = logging.getLogger(__name__)

SCHEMA_DIR = Path(__file__).resolve().parent / "schemas"

PHASE_KEYS = {"phi_e", "phi_ext", "phi_branch"}
PHASE_LIST_KEYS = {"loop_fluxes", "window", "correlation_window", "domain",
                   "loop1_range", "loop2_range"}

PHI_COLUMNS = ["phi", "phi_rad", "Phi", "φ"]
U_COLUMNS = ["u", "u_ghz", "U", "U_GHz"]

_PHASE_PATTERN = re.compile(
    r"^\s*(?P<sign>[-+])?\s*(?P<coef>[0-9.]+(?:[eE][-+]?[0-9]+)?)?\s*\*?\s*"
    r"(?P<pi>pi|π)?\s*(?:/\s*(?P<den>[0-9.]+))?\s*$")

PathLike = Union[str, Path]


def parse_phase(value: Any) -> float:
    """
    Converte uma fase em rad, aceitando expressões como "-3*pi/2" ou "4pi"

    Args:
        value: Número ou string

    Returns:
        Fase em rad
    """
    if isinstance(value, bool):
        raise SchemaError(f"Fase inválida: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    match = _PHASE_PATTERN.match(str(value))
    if match is None or not (match["coef"] or match["pi"]):
        raise SchemaError(f"Fase inválida: {value!r}")
    result = float(match["coef"]) if match["coef"] else 1.0
    if match["pi"]:
        result *= math.pi
    if match["den"]:
        den = float(match["den"])
        if den == 0:
            raise SchemaError(f"Fase inválida (divisão por zero): {value!r}")
        result /= den
    return -result if match["sign"] == "-" else result


def resolve_phases(doc: Any) -> Any:
    """Substitui recursivamente as fases textuais dos campos conhecidos por floats"""
    if isinstance(doc, list):
        return [resolve_phases(v) for v in doc]
    if not isinstance(doc, dict):
        return doc
    resolved = {}
    for key, value in doc.items():
        if key in PHASE_KEYS and value is not None:
            resolved[key] = parse_phase(value)
        elif key in PHASE_LIST_KEYS and isinstance(value, list):
            resolved[key] = [parse_phase(v) for v in value]
        else:
            resolved[key] = resolve_phases(value)
    return resolved


@lru_cache(maxsize=1)
def _schema_registry() -> Tuple[Registry, Dict[str, dict]]:
    schemas = {}
    for path in sorted(SCHEMA_DIR.glob("*.schema.json")):
        with open(path, 'r', encoding='utf-8') as f:
            schemas[path.name.replace(".schema.json", "")] = json.load(f)
    registry = Registry().with_resources(
        (s["$id"], Resource.from_contents(s)) for s in schemas.values())
    return registry, schemas


def validate_document(doc: Any, schema_name: str):
    """
    Valida um documento contra um dos schemas do repositório

    Raises:
        SchemaError: com o primeiro erro encontrado (caminho e mensagem)
    """
    registry, schemas = _schema_registry()
    if schema_name not in schemas:
        raise SchemaError(f"Schema desconhecido: {schema_name}")
    validator = Draft7Validator(schemas[schema_name], registry=registry)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<raiz>"
        raise SchemaError(f"Documento inválido ({schema_name}) em {where}: {first.message}")


@dataclass(frozen=True)
class FitRequest:
    """Pedido de ajuste (ou alvo de comparação); None herda da configuração"""

    target: Potential
    branch_set: Any = None
    window: Optional[Tuple[float, float]] = None
    correlation_window: Optional[Tuple[float, float]] = None
    sample_count: Optional[int] = None
    include_offset: Optional[bool] = None
    drop_tolerance: Optional[float] = None
    e_c: Optional[float] = None
    n_g: float = 0.0
    phase_points: Optional[int] = None
    phase_boundary: Optional[str] = None
    phase_domain: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class ScanRequest:
    loop1_range: Tuple[float, float]
    loop2_range: Tuple[float, float]
    grid: Tuple[int, int]
    loops: Tuple[int, int] = (0, 1)
    levels: int = 3


@dataclass(frozen=True)
class NoiseRequest:
    model: NoiseModel
    flux_step: Optional[float] = None
    loops: Optional[Tuple[int, ...]] = None
    sweep_loop: Optional[int] = None
    sweep_half_width: Optional[float] = None
    sweep_points: Optional[int] = None


def _pair(values) -> Optional[Tuple[float, float]]:
    return None if values is None else (float(values[0]), float(values[1]))


class DataHandler:
    """Gerencia carregamento e validação dos documentos de entrada"""

    def load_json(self, path: PathLike, schema_name: Optional[str] = None) -> Dict[str, Any]:
        """
        Carrega um documento JSON, valida e converte as fases textuais

        Args:
            path: Caminho do arquivo
            schema_name: Nome do schema (sem extensão) ou None

        Returns:
            Documento com fases em rad
        """
        path = Path(path)
        logger.info(f"📂 Carregando {path}...")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                doc = json.load(f)
        except FileNotFoundError as e:
            raise SchemaError(f"Arquivo não encontrado: {path}") from e
        except json.JSONDecodeError as e:
            raise SchemaError(f"JSON malformado em {path}: {e}") from e
        if schema_name:
            validate_document(doc, schema_name)
        return resolve_phases(doc)

    def _build_potential(self, doc: Dict[str, Any], base_dir: Path) -> Potential:
        if doc.get("kind") == "tabulated" and "path" in doc:
            csv_path = Path(doc["path"])
            if not csv_path.is_absolute():
                csv_path = base_dir / csv_path
            return self.load_tabulated_csv(csv_path)
        return potential_from_dict(doc)

    def load_potential(self, path: PathLike) -> Potential:
        """Carrega um documento de potencial (quarton, fluxonium, tabulated, trainmon)"""
        doc = self.load_json(path, "potential")
        return self._build_potential(doc, Path(path).parent)

    def load_circuit(self, path: PathLike) -> TrainmonCircuit:
        """Carrega um circuito Trainmon"""
        doc = self.load_json(path, "circuit")
        circuit = circuit_from_dict(doc)
        logger.info(f"✅ Circuito com ramos {list(circuit.branch_set)} e E_C = {circuit.e_c} GHz")
        return circuit

    def load_fit_request(self, path: PathLike) -> FitRequest:
        """Carrega um pedido de ajuste/comparação com o seu potencial alvo"""
        doc = self.load_json(path, "fit_request")
        target = self._build_potential(doc["target"], Path(path).parent)
        grid = doc.get("phase_grid", {})
        return FitRequest(
            target=target,
            branch_set=doc.get("branch_set"),
            window=_pair(doc.get("window")),
            correlation_window=_pair(doc.get("correlation_window")),
            sample_count=doc.get("sample_count"),
            include_offset=doc.get("include_offset"),
            drop_tolerance=doc.get("drop_tolerance"),
            e_c=doc.get("e_c"),
            n_g=float(doc.get("n_g", 0.0)),
            phase_points=grid.get("points"),
            phase_boundary=grid.get("boundary"),
            phase_domain=_pair(grid.get("domain")),
        )

    def load_scan(self, path: PathLike) -> ScanRequest:
        doc = self.load_json(path, "scan")
        return ScanRequest(
            loop1_range=_pair(doc["loop1_range"]),
            loop2_range=_pair(doc["loop2_range"]),
            grid=(int(doc["grid"][0]), int(doc["grid"][1])),
            loops=tuple(doc.get("loops", (0, 1))),
            levels=int(doc.get("levels", 3)),
        )

    def load_noise(self, path: Optional[PathLike], defaults: Dict[str, Any]) -> NoiseRequest:
        """
        Carrega o modelo de ruído; chaves ausentes vêm de `defaults`

        Args:
            path: Documento de ruído ou None (só padrões)
            defaults: Configuração corrente (a_phi, omega_ir, omega_uv, t_exp, ...)
        """
        doc = self.load_json(path, "noise") if path else {}
        model = NoiseModel(**{k: float(doc.get(k, defaults[k]))
                              for k in ("a_phi", "omega_ir", "omega_uv", "t_exp")})
        sweep = doc.get("sweep", {})
        return NoiseRequest(
            model=model,
            flux_step=doc.get("flux_step"),
            loops=tuple(doc["loops"]) if "loops" in doc else None,
            sweep_loop=sweep.get("loop"),
            sweep_half_width=sweep.get("half_width"),
            sweep_points=sweep.get("points"),
        )

    def load_tabulated_csv(self, csv_path: PathLike) -> TabulatedPotential:
        """
        Carrega um potencial tabelado (φ, U) de CSV com tratamento de encoding

        Args:
            csv_path: Caminho para o arquivo CSV

        Returns:
            TabulatedPotential ordenado por φ
        """
        logger.info("📂 Carregando potencial tabelado do CSV...")
        df = None
        for encoding in ['utf-8', 'latin-1', 'cp1252']:
            try:
                df = pd.read_csv(csv_path, encoding=encoding)
                logger.info(f"✅ CSV carregado com encoding {encoding}")
                break
            except UnicodeDecodeError:
                continue
            except FileNotFoundError as e:
                raise SchemaError(f"Arquivo não encontrado: {csv_path}") from e
            except Exception as e:
                raise SchemaError(f"Erro ao carregar CSV {csv_path}: {e}") from e
        if df is None:
            raise SchemaError("Não foi possível carregar o CSV com nenhum encoding testado")

        phi_col = next((c for c in PHI_COLUMNS if c in df.columns), None)
        u_col = next((c for c in U_COLUMNS if c in df.columns), None)
        if phi_col is None or u_col is None:
            raise SchemaError(f"Colunas φ/U não encontradas no CSV: {list(df.columns)}")

        table = df[[phi_col, u_col]].rename(columns={phi_col: "phi", u_col: "u"})
        table = table.apply(pd.to_numeric, errors="coerce")
        initial_count = len(table)
        table = table.dropna().sort_values("phi", kind="mergesort")
        if len(table) < initial_count:
            logger.warning(f"⚠️ {initial_count - len(table)} linha(s) inválida(s) descartada(s)")
        logger.info(f"🧹 {len(table)} amostras válidas de {initial_count}")
        return TabulatedPotential(samples=tuple(zip(table["phi"].tolist(), table["u"].tolist())))
