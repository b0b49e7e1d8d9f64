"""
Funções utilitárias: logging, formatação numérica e relatórios
"""

import logging
import math
import sys
from typing import Any, Dict, Iterable, List, Optional

import mpmath

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def configure_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Configura logging em stderr (e opcionalmente em arquivo)"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def format_real(value: Any) -> str:
    """Formata número de forma independente de locale (separador '.')"""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, mpmath.mpf):
        return mpmath.nstr(value, 17)
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def decimal_digits(precision_bits: int) -> int:
    """Dígitos decimais fiéis a uma mantissa de precision_bits"""
    return max(1, int(precision_bits * math.log10(2)))


def format_mp(value: Any, precision_bits: int) -> str:
    """Formata um mpf com todos os dígitos significativos da precisão"""
    return mpmath.nstr(value, decimal_digits(precision_bits))


def format_csv_row(values: Iterable[Any]) -> str:
    """Linha CSV simples de números"""
    return ",".join(format_real(v) for v in values)


class ReportGenerator:
    """Gerador de relatórios em texto"""

    @staticmethod
    def constants_report(constants: Dict[str, Any]) -> str:
        """Uma linha 'chave,valor' por constante"""
        lines = []
        for key, value in constants.items():
            lines.append(f"{key},{'' if value is None else format_real(value)}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def pmf_report(pmf: Dict[int, float]) -> str:
        """Linhas 'valor,probabilidade' em ordem crescente de valor"""
        return "".join(f"{v},{format_real(p)}\n" for v, p in sorted(pmf.items()))

    @staticmethod
    def experiment_report(rows: List[Dict[str, Any]]) -> str:
        """Resumo legível de um experimento de Monte Carlo"""
        if not rows:
            return "Nenhum resultado."

        report = "\n=== RELATÓRIO DO EXPERIMENTO ===\n"
        for row in rows:
            report += (
                f"\nn = {row['n']} | {row['stat']}\n"
                f"   média: {row['mean']:.4f} ± {row['stderr']:.4f}"
                f" | quantis 5/50/95%: {row['q05']:g}/{row['q50']:g}/{row['q95']:g}\n"
                f"   normalizada: {row['normalized_mean']:.4f}"
                f" | réplicas: {row['replicates']} | falhas: {row['failures']}\n"
            )
        return report
