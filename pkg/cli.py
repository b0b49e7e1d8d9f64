"""
Interface de linha de comando: tabelas exatas, amostragem, enumeração,
experimentos e constantes.
"""

import argparse
import logging
import sys
from typing import List, Optional

import offspring
import strahler
from cache import TableCache
from config import APP_CONFIG, SimulationDefaults
from errors import (BudgetExceeded, ExperimentAborted, NoBranching, NotCritical, PrecisionExhausted,
                    ReplicateError, StrahlerError)
from exactdist import conditional_bruteforce, rigid_constants, tail_table, write_table
from mc import ExperimentConfig, run_experiment, write_results
from sampler import (SampleBudget, make_rng, sample_conditional, sample_kesten_truncated,
                     sample_unconditional)
from tree import enumerate_trees, write_binary, write_enumeration_csv
from utils import ReportGenerator, configure_logging, format_csv_row

logger = logging.getLogger(__name__)


def exit_code_for(error: BaseException) -> int:
    """0 sucesso; 2 argumentos, configuração ou tamanho inviável; 3 falha em execução"""
    if isinstance(error, ReplicateError):
        return exit_code_for(error.cause)
    if isinstance(error, (BudgetExceeded, ExperimentAborted, PrecisionExhausted)):
        return 3
    if isinstance(error, (ValueError, NotCritical, OSError)):
        return 2
    return 3


def _open_out(path: str, binary: bool = False):
    if path == '-':
        return sys.stdout.buffer if binary else sys.stdout
    return open(path, 'wb' if binary else 'w', encoding=None if binary else 'utf-8', newline=None if binary else '')


# ================================
# SUBCOMANDOS
# ================================

def cmd_exact(args) -> int:
    dist = offspring.from_spec(args.dist)
    transform = not args.no_transform and not args.stat.startswith('kary:')

    cache = TableCache(args.cache) if args.cache else None
    table = None
    if cache is not None:
        table = cache.load(dist.dist_id, args.stat, args.xmax, args.bits, transform)
    if table is None:
        table = tail_table(dist, args.stat, args.xmax, args.bits, apply_transform=transform)
        if cache is not None:
            cache.store(table)

    write_table(table, args.out)
    return 0


def cmd_sample(args) -> int:
    dist = offspring.from_spec(args.dist)
    budget = SampleBudget(max_nodes=args.max_nodes)
    stats = [s.strip() for s in args.stats.split(',') if s.strip()]

    if args.sampler == 'conditional' and args.n is None:
        raise ValueError("--n é obrigatório para o amostrador condicional")
    if args.sampler == 'kesten' and args.ell is None:
        raise ValueError("--ell é obrigatório para o amostrador kesten")

    def trees():
        for i in range(args.count):
            rng = make_rng(args.seed, i)
            if args.sampler == 'conditional':
                yield sample_conditional(dist, args.n, rng, budget)
            elif args.sampler == 'unconditional':
                yield sample_unconditional(dist, rng, budget)
            else:
                yield sample_kesten_truncated(dist, args.ell, rng, budget).tree

    if args.format == 'binary':
        stream = _open_out(args.out, binary=True)
        try:
            write_binary(trees(), stream)
        finally:
            if stream is not sys.stdout.buffer:
                stream.close()
        return 0

    stream = _open_out(args.out)
    try:
        if args.format == 'csv':
            for tree in trees():
                stream.write(tree.to_csv_line() + "\n")
        else:
            stream.write(",".join(['index', 'size'] + stats) + "\n")
            for i, tree in enumerate(trees()):
                values = [strahler.statistic(tree, name) for name in stats]
                stream.write(format_csv_row([i, tree.n] + values) + "\n")
    finally:
        if stream is not sys.stdout:
            stream.close()
        else:
            stream.flush()
    return 0


def cmd_enumerate(args) -> int:
    dist = offspring.from_spec(args.dist)
    pmf = conditional_bruteforce(dist, args.n, args.stat)
    sys.stdout.write(ReportGenerator.pmf_report(pmf))

    if args.trees:
        with open(args.trees, 'w', encoding='utf-8', newline='') as f:
            count = write_enumeration_csv(enumerate_trees(dist, args.n), f)
        logger.info(f"{count} árvores salvas em {args.trees}")
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.threads is not None:
        config.threads = args.threads
    result = run_experiment(config)
    write_results(result, args.out)
    if args.report:
        sys.stderr.write(ReportGenerator.experiment_report(result.rows))
    return 0


def cmd_constants(args) -> int:
    dist = offspring.from_spec(args.dist)
    try:
        constants = rigid_constants(dist)
        d, gamma = constants.d, constants.gamma
    except NoBranching:
        d, gamma = None, None

    sys.stdout.write(ReportGenerator.constants_report({
        'mean': dist.mean,
        'variance': dist.variance,
        'period': dist.period,
        'd': d,
        'gamma': gamma,
    }))
    return 0


# ================================
# PARSER
# ================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='strahler',
        description=APP_CONFIG['description'],
    )
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='nível de log (saída em stderr)')
    parser.add_argument('--log-file', default=None, help='arquivo de log adicional')
    parser.add_argument('--version', action='version', version=f"%(prog)s {APP_CONFIG['version']}")
    sub = parser.add_subparsers(dest='command', required=True)

    exact = sub.add_parser('exact', help='tabela exata de cauda')
    exact.add_argument('--dist', required=True, help='nome embutido ou pmf:a,b,c')
    exact.add_argument('--stat', required=True, help='hs, rigid ou kary:k')
    exact.add_argument('--xmax', type=int, required=True, help='último x da tabela')
    exact.add_argument('--bits', type=int, default=SimulationDefaults.PRECISION_BITS,
                       help='bits de mantissa')
    exact.add_argument('--out', default='-', help="arquivo CSV ('-' para stdout)")
    exact.add_argument('--no-transform', action='store_true',
                       help='não remove nós unários antes da recursão')
    exact.add_argument('--cache', default=None, help='banco SQLite de cache de tabelas')
    exact.set_defaults(func=cmd_exact)

    sample = sub.add_parser('sample', help='amostra árvores e calcula estatísticas')
    sample.add_argument('--dist', required=True, help='nome embutido ou pmf:a,b,c')
    sample.add_argument('--n', type=int, default=None, help='tamanho (amostrador condicional)')
    sample.add_argument('--count', type=int, default=1, help='número de árvores')
    sample.add_argument('--seed', type=int, default=0, help='semente mestre')
    sample.add_argument('--stats', default='hs', help='lista: hs,french,canadian,rigid,kary:k,hsstar')
    sample.add_argument('--out', default='-', help="arquivo de saída ('-' para stdout)")
    sample.add_argument('--sampler', default='conditional', choices=APP_CONFIG['samplers'],
                        help='tipo de amostrador')
    sample.add_argument('--ell', type=int, default=None, help='nível de corte da espinha (kesten)')
    sample.add_argument('--format', default='stats', choices=['stats', 'csv', 'binary'],
                        help='estatísticas, graus em CSV ou quadros binários')
    sample.add_argument('--max-nodes', type=int, default=SimulationDefaults.MAX_NODES,
                        help='limite de nós por árvore')
    sample.set_defaults(func=cmd_sample)

    enumerate_ = sub.add_parser('enumerate', help='lei condicional exata por enumeração')
    enumerate_.add_argument('--dist', required=True, help='nome embutido ou pmf:a,b,c')
    enumerate_.add_argument('--n', type=int, required=True, help='tamanho (<= 16)')
    enumerate_.add_argument('--stat', default='hs', help='estatística')
    enumerate_.add_argument('--trees', default=None, help='CSV degrees,log_weight com as árvores')
    enumerate_.set_defaults(func=cmd_enumerate)

    experiment = sub.add_parser('experiment', help='experimento de Monte Carlo')
    experiment.add_argument('--config', required=True, help='arquivo TOML ou JSON')
    experiment.add_argument('--threads', type=int, default=None,
                            help=f'workers (padrão: núcleos; {SimulationDefaults.THREADS_ENV} tem precedência)')
    experiment.add_argument('--out', default=None, help="CSV de resultados ('-' para stdout)")
    experiment.add_argument('--report', action='store_true', help='resumo legível em stderr')
    experiment.set_defaults(func=cmd_experiment)

    constants = sub.add_parser('constants', help='média, variância, período, d e γ')
    constants.add_argument('--dist', required=True, help='nome embutido ou pmf:a,b,c')
    constants.set_defaults(func=cmd_constants)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.log_level, args.log_file)
    try:
        return args.func(args)
    except (StrahlerError, ValueError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
