"""
Exceções do sistema de análise de Horton-Strahler
"""


class StrahlerError(Exception):
    """Erro base do sistema"""


# Distribuições de descendentes

class NotAProbability(StrahlerError, ValueError):
    """Entrada negativa ou massa total nula"""


class DegenerateVariance(StrahlerError, ValueError):
    """Variância nula (p1 = 1)"""


class NotCritical(StrahlerError):
    """Consumidor exige média 1"""


class UnknownName(StrahlerError, ValueError):
    """Distribuição embutida desconhecida"""


class BadParam(StrahlerError, ValueError):
    """Parâmetro inválido para distribuição embutida"""


class NoBranching(StrahlerError, ValueError):
    """Suporte contido em {0, 1}"""


# Árvores

class TreeCompletesEarly(StrahlerError, ValueError):
    """A sequência fecha uma árvore antes do fim"""

    def __init__(self, t: int, length: int):
        super().__init__(f"árvore completa em t = {t}, mas a sequência tem {length} graus")
        self.t = t
        self.length = length

    def __reduce__(self):
        return type(self), (self.t, self.length)


class TreeUnfinished(StrahlerError, ValueError):
    """A sequência termina antes de fechar a árvore"""


class SumMismatch(StrahlerError, ValueError):
    """Soma dos graus diferente de n - 1"""


class TooLarge(StrahlerError, ValueError):
    """Tamanho acima do limite de enumeração"""


class InfeasibleSize(StrahlerError, ValueError):
    """Tamanho incompatível com o período da distribuição"""


# Amostragem

class BudgetExceeded(StrahlerError):
    """Limite de nós ou de rejeições estourado"""

    def __init__(self, kind: str, limit: int):
        super().__init__(f"limite de {kind} excedido ({limit})")
        self.kind = kind
        self.limit = limit

    def __reduce__(self):
        return type(self), (self.kind, self.limit)


# Distribuições exatas

class PrecisionExhausted(StrahlerError):
    """Precisão de trabalho insuficiente para continuar a recursão"""

    def __init__(self, x: int, detail: str = ""):
        message = f"precisão esgotada em x = {x}"
        if detail:
            message += f": {detail}"
        super().__init__(message)
        self.x = x
        self.detail = detail

    def __reduce__(self):
        return type(self), (self.x, self.detail)


class NoBracket(StrahlerError):
    """Bisseção sem troca de sinal (indica bug)"""


class BadK(StrahlerError, ValueError):
    """k < 3 no registrador k-ário"""


# Monte Carlo

class EmptySample(StrahlerError, ValueError):
    """Amostra vazia"""


class ConfigError(StrahlerError, ValueError):
    """Configuração inválida"""


class ReplicateError(StrahlerError):
    """Falha de uma réplica, com tamanho e índice"""

    def __init__(self, n: int, replicate: int, cause: Exception):
        super().__init__(f"n = {n}, réplica {replicate}: {cause}")
        self.n = n
        self.replicate = replicate
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.n, self.replicate, self.cause)


class ExperimentAborted(StrahlerError):
    """Mais réplicas falharam do que o permitido"""


class InvariantViolation(StrahlerError):
    """Uma desigualdade garantida foi violada"""
