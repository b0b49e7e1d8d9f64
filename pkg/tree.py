"""
Árvores como sequências de graus em pré-ordem.

Uma árvore de n nós é uma sequência ξ_1..ξ_n cujo passeio de Łukasiewicz
W_t = Σ_{i<=t} (ξ_i - 1) fica >= 0 até t = n - 1 e vale -1 em t = n.
"""

import logging
import math
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from config import SimulationDefaults
from errors import SumMismatch, TooLarge, TreeCompletesEarly, TreeUnfinished

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DegreeTree:
    """Árvore ordenada guardada pelos graus em pré-ordem (int32, somente leitura)"""
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return len(self.degrees)

    def __len__(self) -> int:
        return len(self.degrees)

    def __eq__(self, other) -> bool:
        return isinstance(other, DegreeTree) and np.array_equal(self.degrees, other.degrees)

    def __hash__(self) -> int:
        return hash(self.degrees.tobytes())

    def as_tuple(self) -> tuple:
        return tuple(int(v) for v in self.degrees)

    def to_csv_line(self) -> str:
        return ",".join(str(int(v)) for v in self.degrees)

    @staticmethod
    def from_csv_line(line: str) -> "DegreeTree":
        return from_degree_sequence([int(v) for v in line.strip().split(",") if v.strip()])


@dataclass(frozen=True)
class WeightedTree:
    """Árvore com log do peso Σ log p_{ξ_v}"""
    tree: DegreeTree
    log_weight: float


def _as_degrees(seq: Iterable[int]) -> np.ndarray:
    degrees = np.asarray(list(seq) if not isinstance(seq, np.ndarray) else seq, dtype=np.int64)
    if degrees.ndim != 1 or len(degrees) == 0:
        raise TreeUnfinished("sequência de graus vazia")
    if np.any(degrees < 0):
        raise ValueError("graus devem ser não negativos")
    return degrees


def _freeze(degrees: np.ndarray) -> DegreeTree:
    frozen = np.ascontiguousarray(degrees, dtype=np.int32)
    frozen.setflags(write=False)
    return DegreeTree(degrees=frozen)


def tree_size_prefix(seq: Sequence[int]) -> Optional[int]:
    """Primeiro t com Σ_{i<=t} ξ_i = t - 1, ou None se a sequência acabar antes"""
    if len(seq) == 0:
        return None
    walk = np.cumsum(np.asarray(seq, dtype=np.int64) - 1)
    hits = np.flatnonzero(walk == -1)
    if len(hits) == 0:
        return None
    return int(hits[0]) + 1


def from_degree_sequence(seq: Iterable[int]) -> DegreeTree:
    """Valida a sequência como exatamente uma árvore completa"""
    degrees = _as_degrees(seq)
    t = tree_size_prefix(degrees)
    if t is None:
        raise TreeUnfinished(f"a sequência de {len(degrees)} graus não fecha uma árvore")
    if t < len(degrees):
        raise TreeCompletesEarly(t, len(degrees))
    return _freeze(degrees)


def rotate_to_valid(seq: Sequence[int]) -> int:
    """
    Índice i (base 1) da única rotação válida, pelo lema do ciclo.

    A rotação começa logo após a primeira posição do mínimo do passeio.
    """
    degrees = np.asarray(seq, dtype=np.int64)
    n = len(degrees)
    if n == 0 or int(degrees.sum()) != n - 1:
        raise SumMismatch(f"Σξ = {int(degrees.sum())} != n - 1 = {n - 1}")
    walk = np.cumsum(degrees - 1)
    position = int(np.argmin(walk)) + 1
    return 1 if position == n else position + 1


def rotate(seq: Sequence[int], i: int) -> np.ndarray:
    """(ξ_i, ..., ξ_n, ξ_1, ..., ξ_{i-1}) com i em base 1"""
    return np.roll(np.asarray(seq), -(i - 1))


def height(tree: DegreeTree) -> int:
    """Altura (em arestas), calculada com pilha de filhos pendentes"""
    pending: List[int] = []
    best = 0
    for degree in tree.degrees:
        depth = len(pending)
        best = max(best, depth)
        if pending:
            pending[-1] -= 1
        if degree > 0:
            pending.append(int(degree))
        while pending and pending[-1] == 0:
            pending.pop()
    return best


def subtree_sizes(tree: DegreeTree) -> np.ndarray:
    """Tamanho da subárvore de cada nó, em pré-ordem"""
    n = tree.n
    sizes = np.ones(n, dtype=np.int64)
    # pilha de (índice, filhos restantes)
    stack: List[List[int]] = []
    for i, degree in enumerate(tree.degrees):
        if stack:
            stack[-1][1] -= 1
        stack.append([i, int(degree)])
        while stack and stack[-1][1] == 0:
            node, _ = stack.pop()
            sizes[node] = i - node + 1
    return sizes


def parents(tree: DegreeTree) -> np.ndarray:
    """Índice do pai de cada nó em pré-ordem (-1 na raiz)"""
    parent = np.full(tree.n, -1, dtype=np.int64)
    stack: List[List[int]] = []
    for i, degree in enumerate(tree.degrees):
        if stack:
            parent[i] = stack[-1][0]
            stack[-1][1] -= 1
            if stack[-1][1] == 0:
                stack.pop()
        if degree > 0:
            stack.append([i, int(degree)])
    return parent


def contract_unary(tree: DegreeTree) -> DegreeTree:
    """Remove todo nó com exatamente um filho (o filho sobe no lugar dele)"""
    kept = tree.degrees[tree.degrees != 1]
    return _freeze(kept)


# ================================
# ENUMERAÇÃO EXAUSTIVA
# ================================

def enumerate_trees(dist, n: int) -> Iterator[WeightedTree]:
    """
    Todas as sequências em pré-ordem de tamanho n com graus no suporte.

    Gera em ordem lexicográfica; log_weight = Σ log p_{ξ_v}.
    """
    if n > SimulationDefaults.MAX_ENUMERATION_SIZE:
        raise TooLarge(f"n = {n} > {SimulationDefaults.MAX_ENUMERATION_SIZE}")
    if n < 1:
        return

    support = dist.support()
    log_p = {i: math.log(dist.p(i)) for i in support}
    prefix: List[int] = []

    # busca em profundidade sobre (posição, nós pendentes, log-peso)
    stack = [(0, 1, 0.0, iter(support))]
    while stack:
        position, pending, weight, choices = stack[-1]
        degree = next(choices, None)
        if degree is None:
            stack.pop()
            if prefix:
                prefix.pop()
            continue

        remaining = n - position - 1
        new_pending = pending - 1 + degree
        # cada nó pendente consome pelo menos uma posição
        if new_pending > remaining or (new_pending == 0 and remaining > 0):
            continue

        if remaining == 0:
            degrees = prefix + [degree]
            yield WeightedTree(tree=_freeze(np.asarray(degrees)), log_weight=weight + log_p[degree])
            continue

        prefix.append(degree)
        stack.append((position + 1, new_pending, weight + log_p[degree], iter(support)))


# ================================
# ENTRADA E SAÍDA
# ================================

def write_csv(trees: Iterable[DegreeTree], stream) -> int:
    """Uma sequência de graus por linha; retorna o número de árvores escritas"""
    count = 0
    for tree in trees:
        stream.write(tree.to_csv_line() + "\n")
        count += 1
    return count


def read_csv(stream) -> Iterator[DegreeTree]:
    for line in stream:
        if line.strip():
            yield DegreeTree.from_csv_line(line)


def write_binary(trees: Iterable[DegreeTree], stream: BinaryIO) -> int:
    """Quadros little-endian: comprimento uint32 seguido dos graus int32"""
    count = 0
    for tree in trees:
        stream.write(struct.pack("<I", tree.n))
        stream.write(tree.degrees.astype("<i4").tobytes())
        count += 1
    return count


def read_binary(stream: BinaryIO) -> Iterator[DegreeTree]:
    while True:
        header = stream.read(4)
        if not header:
            return
        if len(header) < 4:
            raise ValueError("quadro binário truncado")
        (n,) = struct.unpack("<I", header)
        payload = stream.read(4 * n)
        if len(payload) < 4 * n:
            raise ValueError("quadro binário truncado")
        yield from_degree_sequence(np.frombuffer(payload, dtype="<i4"))


def write_enumeration_csv(weighted: Iterable[WeightedTree], stream) -> int:
    """Linhas `degrees,log_weight`, com os graus separados por espaço"""
    stream.write("degrees,log_weight\n")
    count = 0
    for item in weighted:
        degrees = " ".join(str(int(v)) for v in item.tree.degrees)
        stream.write(f"{degrees},{item.log_weight!r}\n")
        count += 1
    return count
