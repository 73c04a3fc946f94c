#!/usr/bin/env python3
"""
Módulo de Utilitários de Exportação
Responsável por gravar resultados em JSON e CSV de forma determinística
"""

import json
import math
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

INF_TOKEN = "INF"
FLOAT_FORMAT = "%.17g"


def sanitize(value: Any) -> Any:
    """
    Converte um documento para tipos JSON puros

    Escalares numpy viram float/int, tuplas viram listas, ±∞ vira "INF"/"-INF".

    Raises:
        ValueError: NaN no documento
    """
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [sanitize(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            raise ValueError("NaN não pode ser exportado")
        if math.isinf(value):
            return INF_TOKEN if value > 0 else "-" + INF_TOKEN
        return value
    return value


def dumps(document: Any) -> str:
    """Texto JSON estável: chaves ordenadas, indentação 2, quebra de linha final"""
    return json.dumps(sanitize(document), indent=2, sort_keys=True, ensure_ascii=False,
                      allow_nan=False) + "\n"


class ExportUtils:
    """Utilitários para exportação de resultados"""

    def __init__(self, results_dir: str = "results"):
        """
        Inicializa utilitários de exportação

        Args:
            results_dir: Diretório para salvar arquivos
        """
        self.results_dir = Path(results_dir)
        self.results_dir.mkdir(parents=True, exist_ok=True)

    def write_json(self, document: Any, filename: str) -> str:
        """
        Grava um documento JSON

        Args:
            document: Dicionário serializável
            filename: Nome do arquivo dentro do diretório de resultados

        Returns:
            Caminho do arquivo salvo
        """
        filepath = self.results_dir / filename
        with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
            f.write(dumps(document))
        logger.info(f"📁 JSON exportado para: {filepath}")
        return str(filepath)

    def write_csv(self, frame: pd.DataFrame, filename: str) -> str:
        """Grava uma tabela CSV com cabeçalho e floats em 17 dígitos significativos"""
        filepath = self.results_dir / filename
        frame.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info(f"📁 CSV exportado para: {filepath} ({len(frame)} linhas)")
        return str(filepath)

    def write_text(self, text: str, filename: str) -> str:
        filepath = self.results_dir / filename
        with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text if text.endswith("\n") else text + "\n")
        logger.info(f"📁 Relatório exportado para: {filepath}")
        return str(filepath)
