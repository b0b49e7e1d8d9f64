"""
Distribuições exatas de cauda (precisão estendida) para árvores de
Galton-Watson incondicionais: hs, rigid e registrador k-ário.

Convenções: q_x = P{stat = x}, s_x = P{stat >= x}, F_x = 1 - s_{x+1}.
A sobrevivência s é carregada diretamente (s_{x+1} = s_x - q_x) e as
quantidades sujeitas a cancelamento perto de F = 1,

    D(s) = 1 - f'(1 - s)        E(s) = f(1 - s) - (1 - s),

são avaliadas pela série de Taylor em torno de 1 com os momentos binomiais
b_r = E{C(ξ, r)} quando s < 1/2.

Recursões (todas com termos positivos ou como raiz de função monótona):

    hs:     q_x = Σ_{j>=2} c_j(F_{x-2}) q_{x-1}^j / D(s_x),  q_0 = p_0 / (1 - p_1)
    rigid:  E(s_{x+1}) = G(s_x - s_{x+1}),  G(q) = Σ_{ℓ>=2} p_ℓ q^ℓ
    k-ário: E(s_{x+1}) = Σ_{j>=k} c_j(1 - s_x) (s_x - s_{x+1})^j

com c_j(F) = f^(j)(F) / j! = Σ_ℓ p_ℓ C(ℓ, j) F^(ℓ-j).
"""

import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import mpmath
import numpy as np
import pandas as pd

import offspring
import strahler
from config import APP_CONFIG, SimulationDefaults
from errors import BadK, NoBracket, NoBranching, PrecisionExhausted
from offspring import OffspringDistribution
from sampler import check_feasible
from tree import enumerate_trees
from utils import format_mp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TailTable:
    """Tabela exata q_0..q_{x_max} com sobrevivências s_0..s_{x_max+1}"""
    statistic: str
    dist_id: str
    x_max: int
    q: Tuple[Any, ...] = field(repr=False)
    s: Tuple[Any, ...] = field(repr=False)
    precision_bits: int
    transform_applied: bool
    truncation_mass: float = 0.0

    def rows(self) -> List[Tuple[int, str, str]]:
        """(x, q_x, s_x) com todos os dígitos fiéis à precisão"""
        return [(x, format_mp(self.q[x], self.precision_bits), format_mp(self.s[x], self.precision_bits))
                for x in range(self.x_max + 1)]

    def to_frame(self) -> pd.DataFrame:
        """DataFrame em ponto flutuante para análise"""
        return pd.DataFrame({
            'x': np.arange(self.x_max + 1),
            'q': [float(v) for v in self.q],
            'survival': [float(v) for v in self.s[:self.x_max + 1]],
        })

    def metadata(self) -> Dict[str, Any]:
        return {
            'dist': self.dist_id,
            'statistic': self.statistic,
            'x_max': self.x_max,
            'precision': self.precision_bits,
            'transform_applied': self.transform_applied,
            'truncation_mass': self.truncation_mass,
            'version': APP_CONFIG['version'],
        }


@dataclass(frozen=True)
class RigidConstants:
    d: int
    gamma: Optional[float]


# ================================
# NÚCLEO EM PRECISÃO ESTENDIDA
# ================================

class _Series:
    """
    pmf, momentos binomiais e séries de f em torno de 1 num contexto mpmath
    privado, para que soluções concorrentes não disputem a precisão global.
    """

    def __init__(self, dist: OffspringDistribution, precision_bits: int):
        self.ctx = mpmath.MPContext()
        self.ctx.prec = precision_bits
        self.bits = precision_bits
        self.dist = dist

        self.p, self.tail = dist.mp_weights(self.ctx)
        self.b = offspring.mp_binomial_moments(dist, self.ctx)
        self.m = len(self.p) - 1
        self.eps = self.ctx.ldexp(1, -precision_bits)
        self.tol = self.ctx.ldexp(1, -(precision_bits // 2))
        self.max_iterations = SimulationDefaults.BISECTION_ITERATIONS_PER_BIT * precision_bits
        # cota para o resto das séries: todo coeficiente é <= max b_r
        self.bound = max(self.b) if self.b else self.ctx.one
        self.defect = 1 - self.b[1] if len(self.b) > 1 else self.ctx.one

        self._log_defect()

    def _log_defect(self) -> None:
        defect = self.dist.criticality_defect()
        if isinstance(defect, Fraction) and defect != 0 and not self.dist.is_leaf_only:
            logger.warning(f"{self.dist.dist_id}: pmf exata com média - 1 = {float(defect):.3e}")
        elif self.defect != 0:
            logger.debug(f"{self.dist.dist_id}: defeito de criticalidade {mpmath.nstr(self.defect, 5)}")

    # --- avaliação direta ---

    def f(self, z):
        acc = self.ctx.zero
        for p in reversed(self.p):
            acc = acc * z + p
        return acc

    def f_prime(self, z):
        acc = self.ctx.zero
        for i in range(self.m, 0, -1):
            acc = acc * z + i * self.p[i]
        return acc

    def G(self, q):
        """Σ_{ℓ>=2} p_ℓ q^ℓ, soma de termos positivos com parada antecipada"""
        return self.power_sum(lambda j: self.p[j], q, 2)

    # --- séries em torno de 1 ---

    def power_sum(self, coeff: Callable[[int], Any], z, start: int, sign: int = 1,
                   scale: int = 1):
        """Σ_{r>=start} coeff(r) (sign z)^r, parando quando o resto é desprezível"""
        total = self.ctx.zero
        power = z ** start
        for r in range(start, self.m + 1):
            term = coeff(r) * power
            total += -term if (sign < 0 and r % 2) else term
            power *= z
            if z < 1 and power * self.bound * scale <= self.eps * abs(total) * (1 - z):
                break
        return total

    def D(self, s):
        """1 - f'(1 - s)"""
        if s < 0.5:
            # (1 - b1) + Σ_{r>=1} (-1)^{r+1} (r+1) b_{r+1} s^r
            series = self.power_sum(lambda r: (r + 1) * self.b[r + 1] if r < self.m else 0,
                                     s, 1, sign=-1, scale=self.m + 1)
            return self.defect - series
        return 1 - self.f_prime(1 - s)

    def E(self, s):
        """f(1 - s) - (1 - s)"""
        if s < 0.5:
            return self.defect * s + self.power_sum(lambda r: self.b[r], s, 2, sign=-1)
        return self.f(1 - s) - (1 - s)

    def coefficients(self, F) -> Callable[[int], Any]:
        """c_j(F) = Σ_ℓ p_ℓ C(ℓ, j) F^(ℓ-j), calculados sob demanda"""
        powers = [self.ctx.one]
        for _ in range(self.m):
            powers.append(powers[-1] * F)
        cache: Dict[int, Any] = {}

        def c(j: int):
            if j not in cache:
                cache[j] = self.ctx.fsum(math.comb(l, j) * self.p[l] * powers[l - j]
                                         for l in range(j, self.m + 1))
            return cache[j]
        return c

    # --- raízes ---

    def bisect(self, phi: Callable[[Any], Any], lo, hi, x: int):
        """
        Raiz de phi crescente em [lo, hi], com phi(lo) <= 0 <= phi(hi).

        Sem atingir a tolerância relativa dentro do limite de iterações (ou
        da mantissa), levanta PrecisionExhausted.
        """
        f_lo, f_hi = phi(lo), phi(hi)
        if f_lo > 0 or f_hi < 0:
            raise NoBracket(f"x = {x}: sem troca de sinal em [{mpmath.nstr(lo, 8)}, {mpmath.nstr(hi, 8)}]")
        if f_lo == 0:
            return lo
        if f_hi == 0:
            return hi

        for _ in range(self.max_iterations):
            if hi - lo <= self.tol * hi:
                return (lo + hi) / 2
            mid = (lo + hi) / 2
            if mid == lo or mid == hi:
                break
            value = phi(mid)
            if value == 0:
                return mid
            if value < 0:
                lo = mid
            else:
                hi = mid
        if hi - lo <= self.tol * hi:
            return (lo + hi) / 2
        raise PrecisionExhausted(x, f"bisseção não convergiu: largura relativa "
                                    f"{mpmath.nstr((hi - lo) / hi, 5)} após {self.max_iterations} iterações")


def _prepare(dist: OffspringDistribution, precision_bits: int, apply_transform: bool):
    offspring.require_critical(dist)
    if precision_bits < SimulationDefaults.MIN_PRECISION_BITS:
        raise ValueError(f"precisão mínima de {SimulationDefaults.MIN_PRECISION_BITS} bits")
    working = offspring.remove_single_child(dist) if apply_transform else dist
    return _Series(working, precision_bits)


def _base_q0(series: _Series):
    """q_0 = p_0 / (1 - p_1): a árvore é um caminho de nós unários"""
    p1 = series.p[1] if series.m >= 1 else series.ctx.zero
    return series.p[0] / (1 - p1)


def _finish(statistic: str, dist: OffspringDistribution, series: _Series, q: List[Any], s: List[Any],
            x_max: int, transform_applied: bool) -> TailTable:
    table = TailTable(
        statistic=statistic,
        dist_id=dist.dist_id,
        x_max=x_max,
        q=tuple(q),
        s=tuple(s),
        precision_bits=series.bits,
        transform_applied=transform_applied,
        truncation_mass=float(series.tail),
    )
    logger.info(f"Tabela {statistic} de {dist.dist_id} calculada até x = {x_max} ({series.bits} bits)")
    return table


def hs_tail_table(dist: OffspringDistribution, x_max: int,
                  precision_bits: int = SimulationDefaults.PRECISION_BITS,
                  apply_transform: bool = True) -> TailTable:
    """Lei exata de HS(T) para a árvore incondicional"""
    if x_max < 0:
        raise ValueError(f"x_max deve ser não negativo: {x_max}")
    series = _prepare(dist, precision_bits, apply_transform)

    q = [_base_q0(series)]
    s = [series.ctx.one, 1 - q[0]]
    for x in range(1, x_max + 1):
        s_x = s[x]
        if s_x == 0:
            q.append(series.ctx.zero)
            s.append(series.ctx.zero)
            continue

        denominator = series.D(s_x)
        if denominator <= 0:
            raise PrecisionExhausted(x, "1 - f'(F) não positivo")

        c = series.coefficients(1 - s[x - 1])
        numerator = series.power_sum(c, q[x - 1], 2)
        q_x = numerator / denominator
        if q_x > s_x:
            raise PrecisionExhausted(x, "q_x maior que a sobrevivência")
        q.append(q_x)
        s.append(s_x - q_x)
        logger.debug(f"hs x = {x}: q = {mpmath.nstr(q_x, 10)}")

    return _finish('hs', dist, series, q, s, x_max, apply_transform)


def rigid_tail_table(dist: OffspringDistribution, x_max: int,
                     precision_bits: int = SimulationDefaults.PRECISION_BITS,
                     apply_transform: bool = True) -> TailTable:
    """
    Lei exata do número rígido.

    Cada passo resolve E(s_{x+1}) = G(s_x - s_{x+1}) por bisseção na nova
    sobrevivência u = s_{x+1} em [0, s_x]; u -> E(u) - G(s_x - u) é crescente.
    """
    if x_max < 0:
        raise ValueError(f"x_max deve ser não negativo: {x_max}")
    series = _prepare(dist, precision_bits, apply_transform)

    q = [_base_q0(series)]
    s = [series.ctx.one, 1 - q[0]]
    for x in range(1, x_max + 1):
        s_x = s[x]
        if s_x == 0:
            q.append(series.ctx.zero)
            s.append(series.ctx.zero)
            continue

        u = series.bisect(lambda u: series.E(u) - series.G(s_x - u), series.ctx.zero, s_x, x)
        q.append(s_x - u)
        s.append(u)
        logger.debug(f"rigid x = {x}: q = {mpmath.nstr(s_x - u, 10)}")

    return _finish('rigid', dist, series, q, s, x_max, apply_transform)


def _kary_table(dist: OffspringDistribution, k: int, x_max: int, precision_bits: int) -> TailTable:
    """Registrador k-ário para qualquer k >= 2 (k = 2 reproduz o hs)"""
    series = _prepare(dist, precision_bits, apply_transform=False)
    ctx = series.ctx

    # F_0 resolve Σ_{ℓ<k} p_ℓ F^ℓ = F em [0, 1]
    low_degree = series.p[:k]
    if series.m < k:
        F0 = ctx.one
    else:
        def base(F):
            acc = ctx.zero
            for p in reversed(low_degree):
                acc = acc * F + p
            return F - acc
        F0 = series.bisect(base, ctx.zero, ctx.one, 0)

    q = [F0]
    s = [ctx.one, 1 - F0]
    for x in range(1, x_max + 1):
        s_x = s[x]
        if s_x == 0:
            q.append(ctx.zero)
            s.append(ctx.zero)
            continue

        c = series.coefficients(1 - s_x)
        u = series.bisect(lambda u: series.E(u) - series.power_sum(c, s_x - u, k), ctx.zero, s_x, x)
        q.append(s_x - u)
        s.append(u)
        logger.debug(f"kary:{k} x = {x}: q = {mpmath.nstr(s_x - u, 10)}")

    return _finish(f'kary:{k}', dist, series, q, s, x_max, False)


def kary_tail_table(dist: OffspringDistribution, k: int, x_max: int,
                    precision_bits: int = SimulationDefaults.PRECISION_BITS) -> TailTable:
    """Lei exata do registrador k-ário, k >= 3"""
    if k < 3:
        raise BadK(f"k = {k}: use hs_tail_table para k = 2")
    if x_max < 0:
        raise ValueError(f"x_max deve ser não negativo: {x_max}")
    return _kary_table(dist, k, x_max, precision_bits)


def tail_table(dist: OffspringDistribution, statistic: str, x_max: int,
               precision_bits: int = SimulationDefaults.PRECISION_BITS,
               apply_transform: bool = True) -> TailTable:
    """Despacha pelo nome da estatística: hs, rigid ou kary:k"""
    if statistic == 'hs':
        return hs_tail_table(dist, x_max, precision_bits, apply_transform)
    if statistic == 'rigid':
        return rigid_tail_table(dist, x_max, precision_bits, apply_transform)
    if statistic.startswith('kary:'):
        try:
            k = int(statistic.split(':', 1)[1])
        except ValueError as e:
            raise BadK(f"k inválido em {statistic!r}") from e
        return kary_tail_table(dist, k, x_max, precision_bits)
    raise ValueError(f"estatística sem tabela exata: {statistic!r} (use hs, rigid ou kary:k)")


# ================================
# CONSTANTES E AJUSTES
# ================================

def rigid_constants(dist: OffspringDistribution) -> RigidConstants:
    """d e, se d = 2, γ = 1 + √(σ²/(2 p_2)), a partir da pmf original"""
    offspring.require_critical(dist)
    if dist.d is None:
        raise NoBranching(f"{dist.dist_id}: suporte contido em {{0, 1}}")
    gamma = None
    if dist.d == 2:
        if dist.exact is not None:
            p2 = dist.exact[2]
            mean = sum(i * p for i, p in enumerate(dist.exact))
            variance = sum(i * i * p for i, p in enumerate(dist.exact)) - mean * mean
            gamma = 1.0 + math.sqrt(float(variance / (2 * p2)))
        else:
            gamma = 1.0 + math.sqrt(dist.variance / (2 * dist.p(2)))
    return RigidConstants(d=dist.d, gamma=gamma)


def fit_doubly_exponential_slope(table: TailTable, lo: int, hi: int) -> float:
    """Inclinação de mínimos quadrados de log log(1/q_x) contra x em [lo, hi]"""
    if not 0 <= lo < hi <= table.x_max:
        raise ValueError(f"intervalo inválido [{lo}, {hi}] para x_max = {table.x_max}")
    xs = np.arange(lo, hi + 1, dtype=np.float64)
    ys = np.array([float(mpmath.log(-mpmath.log(table.q[x]))) for x in range(lo, hi + 1)])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


# ================================
# ORÁCULO POR ENUMERAÇÃO
# ================================

def enumerated_law(dist: OffspringDistribution, n: int, statistic: str) -> Tuple[Dict[int, Any], Any]:
    """
    P{stat(T) = v, |T| = n} para cada v e o total P{|T| = n}, somando sobre
    todas as árvores de tamanho n (frações exatas quando a pmf é racional).
    """
    check_feasible(dist, n)
    joint: Dict[int, Any] = {}
    total: Any = Fraction(0) if dist.exact is not None else 0.0

    for weighted in enumerate_trees(dist, n):
        if dist.exact is not None:
            weight = Fraction(1)
            for degree in weighted.tree.degrees:
                weight *= dist.exact[int(degree)]
        else:
            weight = math.prod(float(dist.pmf[int(degree)]) for degree in weighted.tree.degrees)
        value = strahler.statistic(weighted.tree, statistic)
        joint[value] = joint.get(value, 0) + weight
        total += weight
    return joint, total


def conditional_bruteforce(dist: OffspringDistribution, n: int, statistic: str = 'hs') -> Dict[int, float]:
    """Lei exata de stat(T_n) por enumeração (n <= 16)"""
    joint, total = enumerated_law(dist, n, statistic)
    return {value: float(weight / total) for value, weight in sorted(joint.items())}


def expected_value(pmf: Dict[int, float]) -> float:
    return math.fsum(v * p for v, p in pmf.items())


# ================================
# SAÍDA
# ================================

def table_csv(table: TailTable) -> str:
    """CSV `x,q,survival`"""
    frame = pd.DataFrame(table.rows(), columns=['x', 'q', 'survival'])
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_table(table: TailTable, out: Union[str, Path]) -> None:
    """Escreve o CSV (ou em stdout com '-') e o sidecar JSON ao lado do arquivo"""
    text = table_csv(table)
    if str(out) == '-':
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    path = Path(out)
    path.write_text(text, encoding='utf-8')
    sidecar = path.with_suffix(path.suffix + '.json')
    sidecar.write_text(json.dumps(table.metadata(), indent=2), encoding='utf-8')
    logger.info(f"Tabela salva em {path}")
