#!/usr/bin/env python3
"""
Módulo de Exceções
Hierarquia de erros do Trainmon, cada uma associada a um código de saída da CLI
"""


class TrainmonError(Exception):
    """Erro base do pacote"""

    exit_code = 1


class SchemaError(TrainmonError, ValueError):
    """Documento JSON malformado, fora do schema ou com argumento inválido"""

    exit_code = 2


class PotentialDomainError(TrainmonError, ValueError):
    """Potencial tabelado avaliado fora do seu intervalo"""

    exit_code = 2


class DegenerateBasisError(TrainmonError):
    """Matriz de projeto do ajuste sem posto completo"""

    exit_code = 3

    def __init__(self, message: str, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class SolverError(TrainmonError):
    """Falha de um dos solvers (carga, fase ou varredura)"""

    exit_code = 4


class HermiticityError(SolverError):
    """Matriz de entrada não é hermitiana"""


class GridError(SolverError):
    """Ramo incompatível com a grade ou níveis acima da dimensão"""


class TruncationError(SolverError):
    """Espectro não convergiu até o k_max limite"""

    def __init__(self, message: str, k_max: int = 0, last_change: float = float("nan")):
        super().__init__(message)
        self.k_max = k_max
        self.last_change = last_change


class ScanError(SolverError):
    """Varredura sem loops ou falha em um nó da grade"""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node
