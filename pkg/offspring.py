"""
Distribuições de descendentes de árvores de Galton-Watson.

Uma distribuição é guardada como pmf finita p_0..p_max (leis paramétricas são
truncadas e renormalizadas), com momentos, período h, parâmetro d e uma
tabela de alias para sorteio O(1) dos graus. Quando a lei é racional a pmf
exata (frações) também é guardada, para os cálculos de precisão estendida.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from config import SimulationDefaults, normalize_dist_spec, parse_probability
from errors import (BadParam, ConfigError, DegenerateVariance, NotAProbability, NotCritical,
                    UnknownName)

logger = logging.getLogger(__name__)

BUILTIN_NAMES = ('catalan', 'full-binary', 'geometric-half', 'poisson1', 'binomial')


@dataclass(frozen=True, eq=False)
class AliasTable:
    """Tabela de alias de Walker/Vose sobre uma pmf finita"""
    prob: np.ndarray
    alias: np.ndarray

    @staticmethod
    def build(pmf: np.ndarray) -> "AliasTable":
        m = len(pmf)
        scaled = np.asarray(pmf, dtype=np.float64) * m / pmf.sum()
        prob = np.ones(m, dtype=np.float64)
        alias = np.arange(m, dtype=np.int64)

        small = [i for i in range(m) if scaled[i] < 1.0]
        large = [i for i in range(m) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        # sobras por arredondamento ficam com probabilidade 1
        for i in small + large:
            prob[i] = 1.0

        prob.setflags(write=False)
        alias.setflags(write=False)
        return AliasTable(prob=prob, alias=alias)

    def draw(self, rng: np.random.Generator) -> int:
        i = int(rng.integers(len(self.prob)))
        return i if rng.random() < self.prob[i] else int(self.alias[i])

    def draw_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        i = rng.integers(len(self.prob), size=size)
        u = rng.random(size)
        return np.where(u < self.prob[i], i, self.alias[i])


@dataclass(frozen=True, eq=False)
class OffspringDistribution:
    """Lei do número de filhos ξ (suporte finito)"""
    pmf: np.ndarray
    kind: str
    dist_id: str
    mean: float
    variance: float
    period: int
    d: Optional[int]
    truncation_mass: float
    critical: bool
    exact: Optional[Tuple[Fraction, ...]] = field(default=None, repr=False)
    parent: Optional["OffspringDistribution"] = field(default=None, repr=False)
    table: Optional[AliasTable] = field(default=None, repr=False)

    @property
    def max_degree(self) -> int:
        return len(self.pmf) - 1

    @property
    def p0(self) -> float:
        return float(self.pmf[0])

    @property
    def p1(self) -> float:
        return float(self.pmf[1]) if len(self.pmf) > 1 else 0.0

    @property
    def is_leaf_only(self) -> bool:
        """Massa pontual em 0: só produz a folha"""
        return len(self.pmf) == 1

    def p(self, i: int) -> float:
        return float(self.pmf[i]) if 0 <= i < len(self.pmf) else 0.0

    def support(self) -> List[int]:
        return [i for i, p in enumerate(self.pmf) if p > 0]

    def criticality_defect(self) -> Union[Fraction, float]:
        """média - 1, exata quando a pmf é racional"""
        if self.exact is not None:
            return sum(i * p for i, p in enumerate(self.exact)) - 1
        return self.mean - 1.0

    def mp_weights(self, ctx) -> Tuple[List[Any], Any]:
        """
        pmf na precisão de ctx, com a massa truncada correspondente.

        Leis paramétricas são re-truncadas em massa de cauda < 2^(-prec/2),
        bem abaixo do corte de 1e-15 da pmf em ponto flutuante.
        """
        if self.exact is not None:
            return [ctx.mpf(f.numerator) / f.denominator for f in self.exact], ctx.zero

        if self.parent is not None:
            weights, tail = self.parent.mp_weights(ctx)
            p1 = weights[1] if len(weights) > 1 else ctx.zero
            scale = 1 - p1
            out = [w / scale for w in weights]
            if len(out) > 1:
                out[1] = ctx.zero
            return out, tail / scale

        threshold = ctx.ldexp(1, -(ctx.prec // 2))
        terms = []
        if self.kind == 'geometric-half':
            i = 0
            while True:
                terms.append(ctx.ldexp(1, -(i + 1)))
                if ctx.ldexp(1, -(i + 1)) < threshold:
                    break
                i += 1
        elif self.kind == 'poisson1':
            term = ctx.exp(-1)
            i = 0
            total = ctx.zero
            while True:
                terms.append(term)
                total += term
                if 1 - total < threshold:
                    break
                i += 1
                term = term / i
        else:
            return [ctx.mpf(float(p)) for p in self.pmf], ctx.zero

        total = ctx.fsum(terms)
        return [t / total for t in terms], 1 - total


@dataclass(frozen=True, eq=False)
class SizeBiasedDistribution:
    """Lei enviesada por tamanho ζ: P{ζ = i} = i p_i"""
    pmf: np.ndarray
    source: OffspringDistribution
    table: AliasTable = field(repr=False)


# ================================
# CONSTRUÇÃO
# ================================

def _period(support: Sequence[int]) -> int:
    positive = [i for i in support if i >= 1]
    if not positive:
        return 1
    return reduce(math.gcd, positive)


def _from_weights(weights: Sequence[Fraction], kind: str, dist_id: str,
                  exact: bool = True, truncation_mass: float = 0.0,
                  parent: Optional[OffspringDistribution] = None) -> OffspringDistribution:
    """Monta a distribuição a partir de pesos já validados e normalizados"""
    weights = list(weights)
    while len(weights) > 1 and weights[-1] == 0:
        weights.pop()

    pmf = np.array([float(w) for w in weights], dtype=np.float64)
    pmf.setflags(write=False)

    mean = sum(i * w for i, w in enumerate(weights))
    second = sum(i * i * w for i, w in enumerate(weights))
    variance = second - mean * mean

    if variance == 0 and len(weights) > 1:
        raise DegenerateVariance(f"{dist_id}: variância nula")

    support = [i for i, w in enumerate(weights) if w > 0]
    d = next((i for i in support if i > 1), None)
    mean_f = float(mean)

    return OffspringDistribution(
        pmf=pmf,
        kind=kind,
        dist_id=dist_id,
        mean=mean_f,
        variance=float(variance),
        period=_period(support),
        d=d,
        truncation_mass=float(truncation_mass),
        critical=abs(mean_f - 1.0) <= SimulationDefaults.CRITICALITY_TOL,
        exact=tuple(Fraction(w) for w in weights) if exact else None,
        parent=parent,
        table=AliasTable.build(pmf),
    )


def new_finite(pmf: Sequence[Any], dist_id: Optional[str] = None) -> OffspringDistribution:
    """Distribuição finita a partir de uma pmf (normalizada aqui)"""
    if len(pmf) == 0:
        raise NotAProbability("pmf vazia")
    try:
        weights = [parse_probability(p) for p in pmf]
    except ConfigError as e:
        raise NotAProbability(str(e)) from e

    if any(w < 0 for w in weights):
        raise NotAProbability(f"entrada negativa em {list(pmf)!r}")
    total = sum(weights)
    if total == 0:
        raise NotAProbability("massa total nula")

    weights = [w / total for w in weights]
    if dist_id is None:
        dist_id = "pmf:" + ",".join(str(w) for w in weights)
    return _from_weights(weights, 'finite', dist_id)


def _truncated_parametric(name: str) -> Tuple[List[float], float]:
    """Pmf de geometric-half/poisson1 truncada com massa descartada < 1e-15"""
    ctx = mpmath.MPContext()
    ctx.prec = 128
    limit = SimulationDefaults.TRUNCATION_MASS

    terms = []
    total = ctx.zero
    i = 0
    term = ctx.mpf(0.5) if name == 'geometric-half' else ctx.exp(-1)
    while True:
        terms.append(term)
        total += term
        if 1 - total < limit:
            break
        i += 1
        term = term / 2 if name == 'geometric-half' else term / i

    tail = 1 - total
    return [float(t / total) for t in terms], float(tail)


def builtin(name: str, params: Optional[Dict[str, Any]] = None) -> OffspringDistribution:
    """Distribuições críticas embutidas"""
    params = dict(params or {})
    name = name.strip().lower()

    if name == 'catalan':
        return _from_weights([Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)], 'catalan', 'catalan')

    if name == 'full-binary':
        return _from_weights([Fraction(1, 2), Fraction(0), Fraction(1, 2)], 'full-binary', 'full-binary')

    if name in ('geometric-half', 'poisson1'):
        pmf, tail = _truncated_parametric(name)
        weights = [Fraction(p) for p in pmf]
        dist = _from_weights(weights, name, name, exact=False, truncation_mass=tail)
        logger.debug(f"{name}: {len(pmf)} termos, massa truncada {tail:.3e}")
        return dist

    if name == 'binomial':
        if 'k' not in params:
            raise BadParam("binomial exige o parâmetro k")
        try:
            k = int(params['k'])
        except (TypeError, ValueError) as e:
            raise BadParam(f"k inválido: {params['k']!r}") from e
        if k < 2:
            raise BadParam(f"binomial exige k >= 2 (recebido {k})")
        weights = [Fraction(math.comb(k, i) * (k - 1) ** (k - i), k ** k) for i in range(k + 1)]
        return _from_weights(weights, f'binomial-{k}', f'binomial({k})')

    raise UnknownName(f"distribuição desconhecida: {name!r} (opções: {', '.join(BUILTIN_NAMES)})")


def from_spec(spec: Any) -> OffspringDistribution:
    """Distribuição a partir de string de CLI ou de tabela de configuração"""
    normalized = normalize_dist_spec(spec)
    if 'pmf' in normalized:
        return new_finite(normalized['pmf'])
    return builtin(normalized['builtin'], normalized.get('params'))


# ================================
# TRANSFORMAÇÕES
# ================================

def remove_single_child(dist: OffspringDistribution) -> OffspringDistribution:
    """Remove p1 e renormaliza: p'_i = p_i / (1 - p1) para i != 1"""
    if dist.p1 == 0:
        return dist
    if dist.p1 >= 1:
        raise DegenerateVariance(f"{dist.dist_id}: p1 = 1")

    dist_id = f"remove_single_child({dist.dist_id})"
    if dist.exact is not None:
        p1 = dist.exact[1]
        weights = [w / (1 - p1) for w in dist.exact]
        weights[1] = Fraction(0)
        return _from_weights(weights, 'finite', dist_id, truncation_mass=dist.truncation_mass)

    scale = 1.0 - dist.p1
    weights = [Fraction(float(p) / scale) for p in dist.pmf]
    weights[1] = Fraction(0)
    return _from_weights(weights, 'finite', dist_id, exact=False,
                         truncation_mass=dist.truncation_mass / scale, parent=dist)


def require_critical(dist: OffspringDistribution) -> None:
    """Levanta NotCritical, exceto para a massa pontual em 0"""
    if not dist.critical and not dist.is_leaf_only:
        raise NotCritical(f"{dist.dist_id}: média {dist.mean!r} != 1")


def size_biased(dist: OffspringDistribution) -> SizeBiasedDistribution:
    """ζ com P{ζ = i} = i p_i"""
    if not dist.critical:
        raise NotCritical(f"{dist.dist_id}: média {dist.mean!r} != 1")
    weights = np.arange(len(dist.pmf), dtype=np.float64) * dist.pmf
    pmf = weights / weights.sum()
    pmf.setflags(write=False)
    return SizeBiasedDistribution(pmf=pmf, source=dist, table=AliasTable.build(pmf))


# ================================
# FUNÇÃO GERADORA E MOMENTOS
# ================================

def pgf_eval(dist: OffspringDistribution, s: float, order: int = 0) -> float:
    """f(s), f'(s) ou f''(s) por avaliação direta do polinômio"""
    if order not in (0, 1, 2):
        raise ValueError(f"ordem deve ser 0, 1 ou 2 (recebido {order})")
    coeffs = np.polynomial.polynomial.polyder(np.asarray(dist.pmf), order) if order else dist.pmf
    return float(np.polynomial.polynomial.polyval(s, coeffs))


def factorial_moment(dist: OffspringDistribution, r: int) -> float:
    """E{ξ(ξ-1)...(ξ-r+1)}"""
    if r < 1:
        raise ValueError(f"r deve ser positivo (recebido {r})")
    if dist.exact is not None:
        return float(sum(math.perm(i, r) * p for i, p in enumerate(dist.exact)))
    return math.fsum(math.perm(i, r) * float(p) for i, p in enumerate(dist.pmf))


def binomial_moment(dist: OffspringDistribution, r: int) -> float:
    """E{C(ξ, r)} = momento fatorial / r!"""
    if r == 0:
        return 1.0
    return factorial_moment(dist, r) / math.factorial(r)


def mp_binomial_moments(dist: OffspringDistribution, ctx) -> List[Any]:
    """b_r = E{C(ξ, r)} para r = 0..max, exatos quando a pmf é racional"""
    if dist.exact is not None:
        moments = [sum(math.comb(i, r) * p for i, p in enumerate(dist.exact))
                   for r in range(len(dist.exact))]
        return [ctx.mpf(m.numerator) / m.denominator for m in moments]

    weights, _ = dist.mp_weights(ctx)
    return [ctx.fsum(math.comb(i, r) * w for i, w in enumerate(weights) if i >= r)
            for r in range(len(weights))]


# ================================
# SORTEIO
# ================================

def sample_degree(dist: Union[OffspringDistribution, SizeBiasedDistribution],
                  rng: np.random.Generator) -> int:
    """Sorteia i com probabilidade p_i (tabela de alias)"""
    return dist.table.draw(rng)


def sample_degrees(dist: Union[OffspringDistribution, SizeBiasedDistribution],
                   rng: np.random.Generator, size: int) -> np.ndarray:
    """Sorteio vetorizado de `size` graus i.i.d."""
    return dist.table.draw_many(rng, size)
