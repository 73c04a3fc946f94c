#!/usr/bin/env python3
"""
Módulo de Processamento em Lote
Executa muitos cálculos independentes (nós de varredura, circuitos) com
paralelização opcional, devolvendo os resultados na ordem de submissão
"""

import time
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Hashable, List, Optional, Sequence, Tuple

from exceptions import ScanError

logger = logging.getLogger(__name__)

Job = Tuple[Hashable, Callable[[], Any]]


@dataclass(frozen=True)
class JobOutcome:
    """Resultado de um job: valor em caso de sucesso, exceção em caso de erro"""

    index: int
    label: Hashable
    status: str
    value: Any = None
    error: Optional[BaseException] = None

    @property
    def ok(self) -> bool:
        return self.status == "Sucesso"


class BatchProcessor:
    """Processador de lotes de cálculos independentes"""

    def __init__(self, n_workers: int = 1):
        """
        Inicializa o processador de lotes

        Args:
            n_workers: Número de threads (1 executa em linha)
        """
        self.n_workers = max(1, int(n_workers))

    def _run_one(self, index: int, label: Hashable, func: Callable[[], Any]) -> JobOutcome:
        try:
            return JobOutcome(index=index, label=label, status="Sucesso", value=func())
        except Exception as e:
            logger.debug(f"❌ Erro no job {label}: {e}")
            return JobOutcome(index=index, label=label, status="Erro", error=e)

    def process_batch(self, jobs: Sequence[Job],
                      progress_callback: Optional[Callable[[int, int, Hashable], None]] = None,
                      fail_fast: bool = False) -> List[JobOutcome]:
        """
        Executa uma lista de jobs (rótulo, função sem argumentos)

        Args:
            jobs: Lista de tuplas (rótulo, função)
            progress_callback: Função chamada com (concluídos, total, rótulo)
            fail_fast: Interrompe no primeiro erro (na ordem de submissão)

        Returns:
            Lista de JobOutcome na mesma ordem dos jobs

        Raises:
            ScanError: com fail_fast, identificando o rótulo do job que falhou
        """
        total = len(jobs)
        logger.info(f"🔄 Processando lote de {total} cálculos com {self.n_workers} worker(s)...")
        start_time = time.time()
        outcomes: List[Optional[JobOutcome]] = [None] * total

        if self.n_workers == 1:
            for i, (label, func) in enumerate(jobs):
                outcomes[i] = self._run_one(i, label, func)
                if fail_fast:
                    self._raise_if_failed(outcomes[i])
                if progress_callback:
                    progress_callback(i + 1, total, label)
        else:
            with ThreadPoolExecutor(max_workers=self.n_workers) as executor:
                futures = [executor.submit(self._run_one, i, label, func)
                           for i, (label, func) in enumerate(jobs)]
                # Coleta na ordem de submissão: saída determinística
                for i, future in enumerate(futures):
                    outcomes[i] = future.result()
                    if fail_fast and not outcomes[i].ok:
                        for pending in futures[i + 1:]:
                            pending.cancel()
                        self._raise_if_failed(outcomes[i])
                    if progress_callback:
                        progress_callback(i + 1, total, outcomes[i].label)
                    if (i + 1) % 50 == 0:
                        logger.info(f"📊 Progresso: {(i + 1) / total * 100:.1f}% ({i + 1}/{total})")

        elapsed = time.time() - start_time
        errors = sum(1 for o in outcomes if not o.ok)
        if errors:
            logger.warning(f"⚠️ Lote concluído com {errors} erro(s) de {total} em {elapsed:.1f}s")
        else:
            logger.info(f"✅ Lote concluído: {total} cálculos em {elapsed:.1f}s")
        return outcomes

    @staticmethod
    def _raise_if_failed(outcome: JobOutcome):
        if not outcome.ok:
            raise ScanError(f"Falha no job {outcome.label}: {outcome.error}",
                            node=outcome.label) from outcome.error

