#!/usr/bin/env python3
"""
Módulo de Gerenciamento de Configuração
Responsável por carregar e gerenciar as configurações padrão dos solvers
"""

import json
import math
import os
import logging
from typing import Dict, Any, Optional
from multiprocessing import cpu_count

logger = logging.getLogger(__name__)


def default_configuration() -> Dict[str, Any]:
    """Valores padrão de todas as chaves reconhecidas"""
    return {
        "results_dir": "results",
        "sample_count": 1001,
        "drop_tolerance": 1e-9,
        "include_offset": True,
        "correlation_window": [-4 * math.pi, 4 * math.pi],
        "k_max_start": 8,
        "k_max_limit": 512,
        "resolution": 1,
        "convergence_tol": 1e-9,
        "levels": 4,
        "phase_points": 4096,
        "phase_domain": [-6 * math.pi, 6 * math.pi],
        "validity_ratio_warning": 10.0,
        "a_phi": 1e-6,
        "omega_ir": 2 * math.pi,
        "omega_uv": 2 * math.pi * 3e9,
        "t_exp": 1e-5,
        "flux_step": 1e-4,
        "sweep_half_width": 0.05,
        "sweep_points": 21,
        "n_workers": min(cpu_count(), 8),
    }


class ConfigManager:
    """Gerencia configurações do sistema"""

    def __init__(self, config_path: Optional[str] = "config.json"):
        """
        Inicializa o gerenciador de configuração

        Args:
            config_path: Caminho para arquivo de configuração (None usa só os padrões)
        """
        self.config_path = config_path
        self.config = self._load_configuration()

    def _load_configuration(self) -> Dict[str, Any]:
        """Carrega configuração de arquivo JSON sobre os padrões"""
        config_default = default_configuration()

        if self.config_path and os.path.exists(self.config_path):
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    config_file = json.load(f)
                config_default.update(config_file)
                logger.info(f"Configuração carregada de {self.config_path}")
            except Exception as e:
                logger.warning(
                    f"Erro ao carregar configuração: {e}. Usando padrões.")
        else:
            logger.debug("Arquivo de configuração ausente, usando padrões")

        return config_default

    def get(self, key: str, default=None):
        """Obtém valor da configuração"""
        return self.config.get(key, default)

    def update(self, updates: Dict[str, Any]):
        """Atualiza configurações, ignorando valores None (flags não informadas)"""
        self.config.update({k: v for k, v in updates.items() if v is not None})

    def save(self):
        """Salva configurações no arquivo"""
        with open(self.config_path, 'w', encoding='utf-8') as f:
            json.dump(self.config, f, indent=2, ensure_ascii=False, sort_keys=True)
            f.write("\n")
        logger.info(f"Configuração salva em {self.config_path}")
