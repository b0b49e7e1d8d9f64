"""
Amostradores de árvores de Galton-Watson: incondicional, condicionada ao
tamanho n (rejeição + lema do ciclo) e árvore de Kesten truncada no nível ℓ.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

import offspring
from config import SimulationDefaults
from errors import BudgetExceeded, InfeasibleSize
from offspring import OffspringDistribution
from tree import DegreeTree, from_degree_sequence, parents, rotate, rotate_to_valid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleBudget:
    """Limites de nós gerados e de rejeições"""
    max_nodes: int = SimulationDefaults.MAX_NODES
    max_rejections: Optional[int] = None

    def __post_init__(self):
        if self.max_nodes < 1:
            raise ValueError(f"max_nodes deve ser positivo: {self.max_nodes}")
        if self.max_rejections is not None and self.max_rejections < 1:
            raise ValueError(f"max_rejections deve ser positivo: {self.max_rejections}")

    def rejection_cap(self, n: int) -> int:
        if self.max_rejections is not None:
            return self.max_rejections
        return max(1, int(SimulationDefaults.REJECTION_FACTOR * math.sqrt(n)))


@dataclass
class RejectionStats:
    """Contadores do laço de rejeição"""
    attempts: int = 0
    accepted: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else float('nan')

    def merge(self, other: "RejectionStats") -> None:
        self.attempts += other.attempts
        self.accepted += other.accepted


@dataclass(frozen=True)
class KestenTruncatedTree:
    """Árvore de Kesten T^∞_ℓ cortada após o nó da espinha no nível ℓ"""
    tree: DegreeTree
    spine_degrees: np.ndarray
    spine_positions: np.ndarray
    hanging_count: int = field(default=0)

    @property
    def ell(self) -> int:
        return len(self.spine_degrees) - 1


def make_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Gerador PCG64 derivado de forma pura de (semente mestre, fluxo...)"""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=tuple(stream))))


def is_feasible(dist: OffspringDistribution, n: int) -> bool:
    """n ≡ 1 (mod h), e n = 1 exige p0 > 0"""
    if n < 1:
        return False
    if dist.is_leaf_only:
        return n == 1
    if n == 1:
        return dist.p0 > 0
    return n % dist.period == 1 % dist.period


def check_feasible(dist: OffspringDistribution, n: int) -> None:
    if not is_feasible(dist, n):
        raise InfeasibleSize(f"n = {n} inviável para {dist.dist_id} (período {dist.period})")


def _leaf() -> DegreeTree:
    return from_degree_sequence([0])


def sample_unconditional(dist: OffspringDistribution, rng: np.random.Generator,
                         budget: SampleBudget = SampleBudget()) -> DegreeTree:
    """Gera graus em pré-ordem até o contador de pendentes zerar"""
    if dist.is_leaf_only:
        return _leaf()
    offspring.require_critical(dist)

    chunks: List[np.ndarray] = []
    pending = 1
    total = 0
    chunk = SimulationDefaults.INITIAL_CHUNK
    while True:
        degrees = offspring.sample_degrees(dist, rng, chunk)
        walk = pending + np.cumsum(degrees - 1)
        hits = np.flatnonzero(walk == 0)
        if len(hits):
            end = int(hits[0]) + 1
            if total + end > budget.max_nodes:
                raise BudgetExceeded("nós", budget.max_nodes)
            chunks.append(degrees[:end])
            return from_degree_sequence(np.concatenate(chunks))

        chunks.append(degrees)
        total += chunk
        if total > budget.max_nodes:
            raise BudgetExceeded("nós", budget.max_nodes)
        pending = int(walk[-1])
        chunk = min(2 * chunk, max(budget.max_nodes - total + 1, 1))


def sample_unconditional_bounded(dist: OffspringDistribution, n: int, rng: np.random.Generator,
                                 budget: SampleBudget = SampleBudget(),
                                 stats: Optional[RejectionStats] = None) -> DegreeTree:
    """
    Árvore incondicional condicionada a |T| <= n: a geração de cada tentativa
    para ao passar de n nós, e as tentativas entram em `stats`.
    """
    if n < 1:
        raise ValueError(f"n deve ser positivo: {n}")
    cap = budget.rejection_cap(n)
    for attempt in range(1, cap + 1):
        try:
            tree = sample_unconditional(dist, rng, SampleBudget(max_nodes=n))
        except BudgetExceeded:
            continue
        if stats is not None:
            stats.attempts += attempt
            stats.accepted += 1
        return tree

    if stats is not None:
        stats.attempts += cap
    raise BudgetExceeded("rejeições", cap)


def sample_conditional(dist: OffspringDistribution, n: int, rng: np.random.Generator,
                       budget: SampleBudget = SampleBudget(),
                       stats: Optional[RejectionStats] = None) -> DegreeTree:
    """
    Árvore condicionada a ter n nós.

    Sorteia o histograma dos n graus i.i.d. de uma vez (multinomial) e
    rejeita até Σξ = n - 1; aceito, dispõe o multiconjunto em ordem
    uniforme, o que equivale a n sorteios i.i.d., e aplica o lema do ciclo.
    """
    offspring.require_critical(dist)
    check_feasible(dist, n)
    if n == 1:
        if stats is not None:
            stats.attempts += 1
            stats.accepted += 1
        return _leaf()

    values = np.arange(len(dist.pmf), dtype=np.int64)
    cap = budget.rejection_cap(n)
    for attempt in range(1, cap + 1):
        counts = rng.multinomial(n, dist.pmf)
        if int(counts @ values) != n - 1:
            continue

        if stats is not None:
            stats.attempts += attempt
            stats.accepted += 1
        logger.debug(f"n = {n}: aceito após {attempt} tentativas")
        degrees = rng.permutation(np.repeat(values, counts))
        return from_degree_sequence(rotate(degrees, rotate_to_valid(degrees)))

    if stats is not None:
        stats.attempts += cap
    raise BudgetExceeded("rejeições", cap)


def sample_kesten_truncated(dist: OffspringDistribution, ell: int, rng: np.random.Generator,
                            budget: SampleBudget = SampleBudget()) -> KestenTruncatedTree:
    """
    T^∞_ℓ: espinha com graus ζ_0..ζ_ℓ da lei enviesada e árvores
    incondicionais penduradas; o nó do nível ℓ perde o filho da espinha.
    """
    if ell < 0:
        raise ValueError(f"ℓ deve ser não negativo: {ell}")
    biased = offspring.size_biased(dist)

    zetas = offspring.sample_degrees(biased, rng, ell + 1).astype(np.int64)
    spine_child = rng.integers(0, zetas[:ell]) if ell else np.zeros(0, dtype=np.int64)

    pieces: List[np.ndarray] = []
    used = 0

    def hanging(count: int) -> None:
        nonlocal used
        for _ in range(count):
            remaining = budget.max_nodes - used
            if remaining < 1:
                raise BudgetExceeded("nós", budget.max_nodes)
            subtree = sample_unconditional(dist, rng, SampleBudget(max_nodes=remaining))
            pieces.append(subtree.degrees)
            used += subtree.n

    positions = np.zeros(ell + 1, dtype=np.int64)
    for level in range(ell + 1):
        positions[level] = used
        if level < ell:
            pieces.append(np.array([zetas[level]]))
            used += 1
            hanging(int(spine_child[level]))
        else:
            pieces.append(np.array([zetas[level] - 1]))
            used += 1
            hanging(int(zetas[level]) - 1)
    for level in range(ell - 1, -1, -1):
        hanging(int(zetas[level] - spine_child[level] - 1))

    result = from_degree_sequence(np.concatenate(pieces))
    zetas.setflags(write=False)
    positions.setflags(write=False)
    return KestenTruncatedTree(
        tree=result,
        spine_degrees=zetas,
        spine_positions=positions,
        hanging_count=int((zetas - 1).sum()),
    )


def spine_path(kesten: KestenTruncatedTree) -> DegreeTree:
    """Remove as árvores penduradas: o que sobra deve ser um caminho"""
    parent = parents(kesten.tree)
    spine = set(int(p) for p in kesten.spine_positions)
    degrees = [sum(1 for child in spine if parent[child] == node) for node in kesten.spine_positions]
    return from_degree_sequence(degrees)


def kolchin_rate(dist: OffspringDistribution, n: int) -> float:
    """Taxa assintótica de aceitação h / (σ √(2πn)), ou 0 se n for inviável"""
    if n < 1 or dist.variance == 0 or n % dist.period != 1 % dist.period:
        return 0.0
    return dist.period / (math.sqrt(dist.variance) * math.sqrt(2 * math.pi * n))
