import numpy as np
import pytest

from listcontract import LinkedForest, Machine, PramConfig
from listcontract.pram import NONE


def path_forest(n):
    succ = np.arange(1, n + 1, dtype=np.int64)
    succ[-1] = NONE
    return LinkedForest(succ)


def forest_from_lists(lists):
    """lists: iterable of node-id sequences."""
    n = sum(len(l) for l in lists)
    succ = np.full(n, NONE, dtype=np.int64)
    for chain in lists:
        for a, b in zip(chain, chain[1:]):
            succ[a] = b
    return LinkedForest(succ)


def snapshot(machine):
    from listcontract.model import STORES
    return {s: machine.peek(s).copy() for s in STORES}


def states_equal(a, b):
    return all(np.array_equal(a[k], b[k]) for k in a)


def place(machine, positions):
    """positions: {node: (row, col)}; overwrites the whole placement."""
    need = max((c for _, c in positions.values()), default=0) + 1
    if machine.columns < need:
        machine.memory.free("slot")
        machine.memory.alloc("slot", 2 * need, fill=NONE)
        machine.columns = need
    C = machine.columns
    machine.peek("slot")[:] = NONE
    machine.peek("row")[:] = -1
    machine.peek("col")[:] = -1
    for node, (r, c) in positions.items():
        machine.memory.poke("row", node, r)
        machine.memory.poke("col", node, c)
        machine.memory.poke("slot", r * C + c, node)


def paired_state(bottom, top, columns, p=8):
    """Build a two-row state of independent 2-node pair lists.

    bottom/top: sequences of ((colA, colB), (colorA, colorB)). Every
    pair is one 2-node list, already 0-1 colored and paired, placed at
    the given columns of its row. Returns (machine, pairs) where pairs
    maps (row, index) -> (nodeA, nodeB).
    """
    entries = [(1, cols, colors) for cols, colors in bottom]
    entries += [(0, cols, colors) for cols, colors in top]
    n = 2 * len(entries)
    succ = np.full(max(n, 2 * columns), NONE, dtype=np.int64)
    nodes = []
    for i in range(len(entries)):
        a, b = 2 * i, 2 * i + 1
        succ[a] = b
        nodes.append((a, b))
    forest = LinkedForest(succ[: n] if n else succ[:2])
    machine = Machine(forest, PramConfig(num_processors=p))
    if machine.columns < columns:
        # widen the slot store so arbitrary column ids fit
        machine.memory.free("slot")
        machine.memory.alloc("slot", 2 * columns, fill=NONE)
        machine.columns = columns
    pairs = {}
    positions = {}
    counter = {0: 0, 1: 0}
    for i, (row, (ca, cb), (wa, wb)) in enumerate(entries):
        a, b = nodes[i]
        positions[a] = (row, ca)
        positions[b] = (row, cb)
        machine.memory.poke("color", [a, b], [wa, wb])
        machine.memory.poke("pair", [a, b], [b, a])
        pairs[(row, counter[row])] = (a, b)
        counter[row] += 1
    place(machine, positions)
    return machine, pairs


@pytest.fixture
def small_machine():
    m = Machine(path_forest(8), PramConfig(num_processors=4))
    return m
