"""
Experimentos de Monte Carlo: orquestração de réplicas, resumos estatísticos
e tabelas de escala.
"""

import concurrent.futures
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

import offspring
import strahler
from config import APP_CONFIG, SimulationDefaults, load_config_file, parse_sizes, resolve_threads
from errors import (BudgetExceeded, ConfigError, EmptySample, ExperimentAborted, InvariantViolation,
                    ReplicateError)
from offspring import OffspringDistribution
from sampler import (RejectionStats, SampleBudget, check_feasible, make_rng, sample_conditional,
                     sample_kesten_truncated, sample_unconditional_bounded)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['n', 'stat', 'mean', 'stderr', 'q05', 'q50', 'q95', 'normalized_mean', 'replicates', 'failures']


@dataclass(frozen=True)
class Summary:
    """Resumo de uma amostra de valores"""
    mean: float
    variance: float
    stderr: float
    q05: float
    q50: float
    q95: float
    min: float
    max: float
    count: int


def _nearest_rank(ordered: np.ndarray, q: float) -> float:
    index = max(math.ceil(q * len(ordered) - 1e-9) - 1, 0)
    return float(ordered[index])


def summarize(samples: Sequence[float]) -> Summary:
    """Média, variância (não viesada), erro padrão e quantis por posto mais próximo"""
    values = np.asarray(samples, dtype=np.float64)
    if len(values) == 0:
        raise EmptySample("amostra vazia")

    ordered = np.sort(values)
    count = len(values)
    variance = float(values.var(ddof=1)) if count > 1 else 0.0
    q05, q50, q95 = (_nearest_rank(ordered, q) for q in SimulationDefaults.QUANTILES)
    return Summary(
        mean=float(values.mean()),
        variance=variance,
        stderr=math.sqrt(variance / count),
        q05=q05,
        q50=q50,
        q95=q95,
        min=float(ordered[0]),
        max=float(ordered[-1]),
        count=count,
    )


# ================================
# CONFIGURAÇÃO
# ================================

def _valid_statistic(name: str) -> bool:
    if name in strahler.VARIANTS or name == 'hsstar':
        return True
    if name.startswith('kary:'):
        try:
            return int(name.split(':', 1)[1]) >= 2
        except ValueError:
            return False
    return False


def normalizer(normalization: str, n: int) -> float:
    """log2 n, log2 log2 n ou 1"""
    if normalization == 'log2n':
        if n < 2:
            raise ConfigError(f"normalização log2n exige n >= 2 (recebido {n})")
        return math.log2(n)
    if normalization == 'log2log2n':
        if n < 3:
            raise ConfigError(f"normalização log2log2n exige n >= 3 (recebido {n})")
        return math.log2(math.log2(n))
    if normalization == 'none':
        return 1.0
    raise ConfigError(f"normalização desconhecida: {normalization!r}")


@dataclass
class ExperimentConfig:
    """Parâmetros de um experimento de Monte Carlo"""
    dist: Any
    statistics: List[str]
    sizes: List[int]
    sampler: str = 'conditional'
    replicates: int = 100
    master_seed: int = 0
    normalization: str = 'log2n'
    output: Optional[str] = None
    max_nodes: int = SimulationDefaults.MAX_NODES
    max_rejections: Optional[int] = None
    threads: Optional[int] = None

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if 'dist' not in data:
            raise ConfigError("a configuração precisa de 'dist'")

        statistics = data.get('statistics', data.get('statistic'))
        if statistics is None:
            raise ConfigError("a configuração precisa de 'statistic' ou 'statistics'")
        if isinstance(statistics, str):
            statistics = [s.strip() for s in statistics.split(',') if s.strip()]

        budget = data.get('budget', {})
        config = cls(
            dist=data['dist'],
            statistics=list(statistics),
            sizes=parse_sizes(data.get('sizes', [])),
            sampler=str(data.get('sampler', 'conditional')),
            replicates=int(data.get('replicates', 100)),
            master_seed=int(data.get('master_seed', data.get('seed', 0))),
            normalization=str(data.get('normalization', 'log2n')),
            output=data.get('output'),
            max_nodes=int(budget.get('max_nodes', data.get('max_nodes', SimulationDefaults.MAX_NODES))),
            max_rejections=budget.get('max_rejections', data.get('max_rejections')),
            threads=data.get('threads'),
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        return cls.from_mapping(load_config_file(path))

    def distribution(self) -> OffspringDistribution:
        return offspring.from_spec(self.dist)

    def budget(self) -> SampleBudget:
        try:
            return SampleBudget(max_nodes=self.max_nodes,
                                max_rejections=int(self.max_rejections) if self.max_rejections else None)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def validate(self) -> None:
        if self.replicates < 1:
            raise ConfigError(f"replicates deve ser >= 1 (recebido {self.replicates})")
        if not self.sizes:
            raise ConfigError("'sizes' não pode ser vazio")
        if not self.statistics:
            raise ConfigError("nenhuma estatística pedida")
        for name in self.statistics:
            if not _valid_statistic(name):
                raise ConfigError(f"estatística desconhecida: {name!r}")
        if self.sampler not in APP_CONFIG['samplers']:
            raise ConfigError(f"amostrador desconhecido: {self.sampler!r}")
        if self.normalization not in APP_CONFIG['normalizations']:
            raise ConfigError(f"normalização desconhecida: {self.normalization!r}")
        if self.sampler == 'unconditional' and self.normalization != 'none':
            raise ConfigError("o amostrador incondicional exige normalization = 'none'")

        dist = self.distribution()
        offspring.require_critical(dist)
        for n in self.sizes:
            if self.sampler == 'conditional':
                check_feasible(dist, n)
            elif n < (1 if self.sampler == 'unconditional' else 0):
                raise ConfigError(f"tamanho inválido para {self.sampler}: {n}")
            normalizer(self.normalization, n)
        self.budget()

    def to_dict(self) -> Dict[str, Any]:
        # frações e afins viram texto
        return json.loads(json.dumps(asdict(self), default=str))


@dataclass
class ExperimentResult:
    """Linhas do CSV mais os detalhes por tamanho para o sidecar"""
    config: ExperimentConfig
    rows: List[Dict[str, Any]] = field(default_factory=list)
    details: List[Dict[str, Any]] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=CSV_COLUMNS)

    def metadata(self) -> Dict[str, Any]:
        return {
            'config': self.config.to_dict(),
            'version': APP_CONFIG['version'],
            'sizes': self.details,
        }


# ================================
# EXECUÇÃO
# ================================

def _replicate(dist: OffspringDistribution, config: ExperimentConfig, budget: SampleBudget,
               size_index: int, n: int, replicate: int) -> Tuple[Dict[str, int], RejectionStats]:
    """Uma réplica: sorteia a árvore com seu fluxo próprio e calcula as estatísticas"""
    rng = make_rng(config.master_seed, size_index, replicate)
    stats = RejectionStats()

    if config.sampler == 'conditional':
        tree = sample_conditional(dist, n, rng, budget, stats)
    elif config.sampler == 'unconditional':
        tree = sample_unconditional_bounded(dist, n, rng, budget, stats)
    else:
        tree = sample_kesten_truncated(dist, n, rng, budget).tree

    values = {name: strahler.statistic(tree, name) for name in config.statistics}
    if 'hs' in values and 'hsstar' in values and values['hs'] > values['hsstar']:
        raise InvariantViolation(f"HS = {values['hs']} > HS* = {values['hsstar']}")
    return values, stats


def _replicate_batch(dist: OffspringDistribution, config: ExperimentConfig, budget: SampleBudget,
                     size_index: int, n: int, replicates: Sequence[int]) -> List[Tuple[int, Any]]:
    """Roda um lote de réplicas; cada uma devolve (valores, stats) ou a exceção que levantou"""
    outcomes: List[Tuple[int, Any]] = []
    for replicate in replicates:
        try:
            outcomes.append((replicate, _replicate(dist, config, budget, size_index, n, replicate)))
        except Exception as e:
            outcomes.append((replicate, e))
    return outcomes


def _run_size(dist: OffspringDistribution, config: ExperimentConfig, budget: SampleBudget,
              size_index: int, n: int, threads: int):
    results: List[Optional[Dict[str, int]]] = [None] * config.replicates
    rejection = RejectionStats()
    failures: List[ReplicateError] = []

    indices = list(range(config.replicates))
    if threads == 1:
        outcomes = _replicate_batch(dist, config, budget, size_index, n, indices)
    else:
        # lotes em processos separados
        batch_size = max(1, math.ceil(len(indices) / (4 * threads)))
        batches = [indices[i:i + batch_size] for i in range(0, len(indices), batch_size)]
        outcomes = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(_replicate_batch, dist, config, budget, size_index, n, batch)
                       for batch in batches]
            for future in concurrent.futures.as_completed(futures):
                outcomes.extend(future.result())

    # ordem por índice: o resultado não depende de quem terminou primeiro
    for replicate, outcome in sorted(outcomes, key=lambda item: item[0]):
        if isinstance(outcome, BudgetExceeded):
            failures.append(ReplicateError(n, replicate, outcome))
            continue
        if isinstance(outcome, Exception):
            raise ReplicateError(n, replicate, outcome) from outcome
        values, stats = outcome
        results[replicate] = values
        rejection.merge(stats)

    return results, rejection, failures


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Roda todos os tamanhos; resultado independente do número de workers"""
    config.validate()
    dist = config.distribution()
    budget = config.budget()
    threads = resolve_threads(config.threads)
    result = ExperimentResult(config=config)

    logger.info(f"Experimento: {dist.dist_id}, {config.sampler}, estatísticas {config.statistics}, "
                f"{config.replicates} réplicas, {threads} threads")

    for size_index, n in enumerate(config.sizes):
        results, rejection, failures = _run_size(dist, config, budget, size_index, n, threads)

        if failures:
            logger.warning(f"n = {n}: {len(failures)} réplicas falharam ({failures[0]})")
        if len(failures) > SimulationDefaults.MAX_FAILURE_FRACTION * config.replicates:
            raise ExperimentAborted(
                f"n = {n}: {len(failures)} de {config.replicates} réplicas falharam"
            ) from failures[0]

        kept = [r for r in results if r is not None]
        scale = normalizer(config.normalization, n)
        detail: Dict[str, Any] = {
            'n': n,
            'failures': len(failures),
            'rejection_attempts': rejection.attempts,
            'rejection_accepted': rejection.accepted,
            'acceptance_rate': rejection.acceptance_rate if rejection.attempts else None,
            'statistics': {},
        }

        for name in config.statistics:
            summary = summarize([r[name] for r in kept])
            result.rows.append({
                'n': n,
                'stat': name,
                'mean': summary.mean,
                'stderr': summary.stderr,
                'q05': summary.q05,
                'q50': summary.q50,
                'q95': summary.q95,
                'normalized_mean': summary.mean / scale,
                'replicates': summary.count,
                'failures': len(failures),
            })
            detail['statistics'][name] = {
                'variance': summary.variance,
                'min': summary.min,
                'max': summary.max,
            }
        result.details.append(detail)
        logger.info(f"n = {n} concluído ({len(kept)} réplicas válidas)")

    return result


def results_csv(result: ExperimentResult) -> str:
    buffer = io.StringIO()
    result.to_frame().to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_results(result: ExperimentResult, out: Optional[Union[str, Path]] = None) -> None:
    """CSV em `out` (ou stdout com '-') e sidecar JSON ao lado do arquivo"""
    out = out if out is not None else (result.config.output or '-')
    text = results_csv(result)
    if str(out) == '-':
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    path = Path(out)
    path.write_text(text, encoding='utf-8')
    sidecar = path.with_suffix(path.suffix + '.json')
    sidecar.write_text(json.dumps(result.metadata(), indent=2, default=str), encoding='utf-8')
    logger.info(f"Resultados salvos em {path}")
