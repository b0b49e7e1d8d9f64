"""
Configurações padrão e leitura de arquivos de configuração
"""

import json
import logging
import os
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from errors import ConfigError

logger = logging.getLogger(__name__)


class SimulationDefaults:
    """Parâmetros padrão de simulação e de cálculo exato"""

    # Aritmética estendida
    PRECISION_BITS = 256
    BISECTION_ITERATIONS_PER_BIT = 10
    MIN_PRECISION_BITS = 128

    # Amostragem
    MAX_NODES = 10 ** 7
    REJECTION_FACTOR = 10 ** 4  # limite de rejeições = fator * sqrt(n)
    INITIAL_CHUNK = 64

    # Distribuições paramétricas
    TRUNCATION_MASS = 1e-15
    CRITICALITY_TOL = 1e-10

    # Oráculos e verificações
    MAX_ENUMERATION_SIZE = 16
    MAX_ROTATIONAL_SIZE = 10 ** 4

    # Monte Carlo
    MAX_FAILURE_FRACTION = 0.01
    QUANTILES = (0.05, 0.50, 0.95)

    THREADS_ENV = "STRAHLER_THREADS"


APP_CONFIG = {
    'version': '1.0.0',
    'description': 'Amostragem de árvores de Galton-Watson críticas, números de '
                   'Horton-Strahler e distribuições exatas de cauda',
    'samplers': ['conditional', 'unconditional', 'kesten'],
    'normalizations': ['log2n', 'log2log2n', 'none'],
}


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Lê configuração em TOML ou JSON, conforme a extensão"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"arquivo de configuração não encontrado: {path}")

    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        elif path.suffix.lower() == ".json":
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        else:
            raise ConfigError(f"formato não suportado: {path.suffix} (use .toml ou .json)")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"erro ao ler {path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigError("a configuração deve ser uma tabela/objeto")

    logger.info(f"Configuração carregada de {path}")
    return data


def parse_probability(value: Any) -> Fraction:
    """Converte uma entrada de pmf para fração exata ('2/3', '0.25', 0.25, 1)"""
    if isinstance(value, bool):
        raise ConfigError(f"entrada de pmf inválida: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, float)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"entrada de pmf inválida: {value!r}") from e
    raise ConfigError(f"entrada de pmf inválida: {value!r}")


_BUILTIN_WITH_PARAM = re.compile(r"^([a-z0-9\-]+)\s*(?:\((\d+)\)|:(\d+))$")


def normalize_dist_spec(spec: Any) -> Dict[str, Any]:
    """
    Normaliza a especificação de uma distribuição.

    Aceita 'catalan', 'binomial(3)', 'binomial:3', 'pmf:0.25,0.5,0.25',
    {'builtin': 'binomial', 'k': 3} ou {'pmf': [...]}.
    Retorna {'builtin': nome, 'params': {...}} ou {'pmf': [Fraction, ...]}.
    """
    if isinstance(spec, str):
        text = spec.strip()
        if text.lower().startswith("pmf:"):
            entries = [e for e in text[4:].split(",") if e.strip()]
            return {'pmf': [parse_probability(e) for e in entries]}
        match = _BUILTIN_WITH_PARAM.match(text.lower())
        if match:
            name = match.group(1)
            k = int(match.group(2) or match.group(3))
            return {'builtin': name, 'params': {'k': k}}
        return {'builtin': text.lower(), 'params': {}}

    if isinstance(spec, dict):
        if 'pmf' in spec:
            entries = spec['pmf']
            if isinstance(entries, str):
                entries = [e for e in entries.split(",") if e.strip()]
            if not isinstance(entries, (list, tuple)):
                raise ConfigError("'pmf' deve ser uma lista de probabilidades")
            return {'pmf': [parse_probability(e) for e in entries]}
        if 'builtin' in spec:
            inner = normalize_dist_spec(str(spec['builtin']))
            params = dict(inner.get('params', {}))
            params.update({k: v for k, v in spec.items() if k != 'builtin'})
            inner['params'] = params
            return inner

    raise ConfigError(f"especificação de distribuição inválida: {spec!r}")


def resolve_threads(cli_value: Optional[int]) -> int:
    """Número de workers: variável de ambiente > flag > núcleos disponíveis"""
    env_value = os.environ.get(SimulationDefaults.THREADS_ENV)
    if env_value:
        try:
            threads = int(env_value)
        except ValueError as e:
            raise ConfigError(f"{SimulationDefaults.THREADS_ENV} inválido: {env_value!r}") from e
    elif cli_value is not None:
        threads = cli_value
    else:
        threads = os.cpu_count() or 1

    if threads < 1:
        raise ConfigError(f"número de threads deve ser positivo: {threads}")
    return threads


def parse_sizes(raw: Any) -> List[int]:
    """Lista de tamanhos a partir de lista ou de 'a,b,c'"""
    if isinstance(raw, str):
        raw = [e for e in raw.split(",") if e.strip()]
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError("'sizes' deve ser uma lista não vazia")
    try:
        return [int(v) for v in raw]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"tamanho inválido em {raw!r}") from e
