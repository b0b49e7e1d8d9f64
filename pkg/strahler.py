"""
Números de Horton-Strahler e variantes para árvores em pré-ordem.

Todas as variantes usam uma única passada pós-ordem com pilha explícita;
folhas valem 0 (na convenção da função registradora, que começa em 1,
o valor é HS + 1). Cada quadro da pilha guarda só o estado da variante:
(máximo, contagem) para hs e canadian, (máximo, primeiro, todos iguais,
contagem) para rigid, um heap com os k maiores para k_register e um mapa
valor -> contagem para french.
"""

import heapq
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import SimulationDefaults
from errors import InvariantViolation, SumMismatch, TooLarge
from tree import DegreeTree, rotate, rotate_to_valid, tree_size_prefix

logger = logging.getLogger(__name__)

VARIANTS = ('hs', 'french', 'canadian', 'rigid')


@dataclass(frozen=True)
class StrahlerValues:
    """Valores na raiz de todas as variantes"""
    hs: int
    french: int
    canadian: int
    rigid: int
    kary: Dict[int, int] = field(default_factory=dict)
    per_node: Optional[np.ndarray] = field(default=None, repr=False)

    def is_ordered(self) -> bool:
        return self.french >= self.canadian >= self.hs >= self.rigid


# ================================
# ACUMULADORES POR VARIANTE
# ================================

@dataclass(frozen=True)
class _Accumulator:
    """start() cria o estado do quadro, add() recebe o valor de um filho, finish() fecha o nó"""
    start: Callable[[], Any]
    add: Callable[[Any, int], None]
    finish: Callable[[Any], int]


def _add_max_count(state: List[int], value: int) -> None:
    # state = [máximo, contagem do máximo]
    if value > state[0]:
        state[0], state[1] = value, 1
    elif value == state[0]:
        state[1] += 1


def _add_rigid(state: List[int], value: int) -> None:
    # state = [máximo, primeiro valor, todos iguais, contagem]
    if state[3] == 0:
        state[1] = value
    elif value != state[1]:
        state[2] = 0
    state[0] = max(state[0], value)
    state[3] += 1


def _finish_french(counts: Counter) -> int:
    best = 0
    at_least = 0
    # percorre valores distintos do maior para o menor acumulando #{filhos >= v}
    for value in sorted(counts, reverse=True):
        at_least += counts[value]
        best = max(best, value + at_least - 1)
    return best


def _kary_accumulator(k: int) -> _Accumulator:
    """state = [min-heap dos k maiores valores, máximo, contagem]"""

    def add(state: List[Any], value: int) -> None:
        heap = state[0]
        if len(heap) < k:
            heapq.heappush(heap, value)
        elif value > heap[0]:
            heapq.heapreplace(heap, value)
        state[1] = max(state[1], value)
        state[2] += 1

    def finish(state: List[Any]) -> int:
        if state[2] >= k:
            return max(state[1], state[0][0] + 1)
        return state[1]

    return _Accumulator(start=lambda: [[], 0, 0], add=add, finish=finish)


_ACCUMULATORS: Dict[str, _Accumulator] = {
    'french': _Accumulator(start=Counter, add=lambda counts, value: counts.update((value,)),
                           finish=_finish_french),
    'canadian': _Accumulator(
        start=lambda: [0, 0],
        add=_add_max_count,
        finish=lambda state: state[0] + state[1] - 1,
    ),
    'rigid': _Accumulator(
        start=lambda: [0, 0, 1, 0],
        add=_add_rigid,
        finish=lambda state: state[1] + 1 if state[3] >= 2 and state[2] else state[0],
    ),
}


def _post_order(degrees: np.ndarray, acc: _Accumulator,
                per_node: Optional[np.ndarray] = None) -> int:
    """
    Pós-ordem genérica: cada quadro guarda [índice, filhos restantes, estado
    da variante]; ao fechar, o valor do nó vai para o quadro do pai.
    """
    stack: List[List[Any]] = []
    value = 0
    for i, degree in enumerate(degrees):
        if degree > 0:
            stack.append([i, int(degree), acc.start()])
            continue

        value = 0
        if per_node is not None:
            per_node[i] = 0
        # a folha fecha o quadro do pai, que pode fechar o do avô, ...
        while stack:
            frame = stack[-1]
            acc.add(frame[2], value)
            frame[1] -= 1
            if frame[1] > 0:
                break
            stack.pop()
            value = acc.finish(frame[2])
            if per_node is not None:
                per_node[frame[0]] = value
    return value


def _hs_fast(degrees: np.ndarray, per_node: Optional[np.ndarray] = None) -> int:
    """hs com quadros de tamanho fixo [índice, restantes, máximo, contagem do máximo]"""
    stack: List[List[int]] = []
    value = 0
    for i, degree in enumerate(degrees):
        if degree > 0:
            stack.append([i, int(degree), 0, 0])
            continue

        value = 0
        if per_node is not None:
            per_node[i] = 0
        while stack:
            frame = stack[-1]
            if value > frame[2]:
                frame[2] = value
                frame[3] = 1
            elif value == frame[2]:
                frame[3] += 1
            frame[1] -= 1
            if frame[1] > 0:
                break
            stack.pop()
            value = frame[2] + 1 if frame[3] >= 2 else frame[2]
            if per_node is not None:
                per_node[frame[0]] = value
    return value


def strahler_number(tree: DegreeTree, variant: str = 'hs', per_node: bool = False):
    """
    Valor da variante na raiz; com per_node=True retorna (valor, array por nó).
    """
    if variant not in VARIANTS:
        raise ValueError(f"variante desconhecida: {variant!r} (opções: {', '.join(VARIANTS)})")

    values = np.zeros(tree.n, dtype=np.int64) if per_node else None
    if variant == 'hs':
        root = _hs_fast(tree.degrees, values)
    else:
        root = _post_order(tree.degrees, _ACCUMULATORS[variant], values)

    if per_node:
        return root, values
    return root


def k_register(tree: DegreeTree, k: int) -> int:
    """Altura da maior árvore k-ária completa embutida: max(K_1, K_k + 1)"""
    if k < 2:
        raise ValueError(f"k deve ser >= 2 (recebido {k})")
    return _post_order(tree.degrees, _kary_accumulator(k))


def all_statistics(tree: DegreeTree, ks: Iterable[int] = (), check_order: bool = False) -> StrahlerValues:
    """Todas as variantes numa só chamada"""
    hs = strahler_number(tree, 'hs')
    values = StrahlerValues(
        hs=hs,
        french=strahler_number(tree, 'french'),
        canadian=strahler_number(tree, 'canadian'),
        rigid=strahler_number(tree, 'rigid'),
        kary={k: (hs if k == 2 else k_register(tree, k)) for k in ks},
    )
    if check_order and not values.is_ordered():
        raise InvariantViolation(f"ordem fr >= can >= hs >= rig violada: {values}")
    return values


def statistic(tree: DegreeTree, name: str) -> int:
    """Estatística pelo nome usado em configurações: hs, french, ..., kary:k, hsstar"""
    if name in VARIANTS:
        return strahler_number(tree, name)
    if name.startswith('kary:'):
        return k_register(tree, int(name.split(':', 1)[1]))
    if name == 'hsstar':
        return rotational_max(tree.degrees, method='fast')
    raise ValueError(f"estatística desconhecida: {name!r}")


# ================================
# ESTATÍSTICA ROTACIONAL HS*
# ================================

def rotational_max(seq: Sequence[int], method: str = 'naive') -> int:
    """
    HS* = max_i η_i, com η_i o hs da primeira árvore da rotação i
    (0 se a rotação não fecha uma árvore).

    'naive' avalia as n rotações (n <= MAX_ROTATIONAL_SIZE); 'fast' usa que
    na rotação válida a primeira árvore de cada rotação é uma subárvore
    franja, logo o máximo é atingido na raiz.
    """
    degrees = np.asarray(seq, dtype=np.int64)
    n = len(degrees)
    if n == 0 or int(degrees.sum()) != n - 1:
        raise SumMismatch(f"Σξ = {int(degrees.sum())} != n - 1 = {n - 1}")

    if method == 'fast':
        valid = rotate(degrees, rotate_to_valid(degrees))
        return _hs_fast(valid)

    if method != 'naive':
        raise ValueError(f"método desconhecido: {method!r}")
    if n > SimulationDefaults.MAX_ROTATIONAL_SIZE:
        raise TooLarge(f"n = {n} > {SimulationDefaults.MAX_ROTATIONAL_SIZE} para o método ingênuo")

    best = 0
    for i in range(1, n + 1):
        rotated = rotate(degrees, i)
        size = tree_size_prefix(rotated)
        if size is not None:
            best = max(best, _hs_fast(rotated[:size]))
    return best


def per_node_csv(values: np.ndarray) -> str:
    """Linhas `preorder_index,value` (índice em base 1)"""
    lines = ["preorder_index,value"]
    lines.extend(f"{i + 1},{int(v)}" for i, v in enumerate(values))
    return "\n".join(lines) + "\n"
