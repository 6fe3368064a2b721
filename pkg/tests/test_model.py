import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from listcontract import (ContractPreconditionError, ForestFormatError,
                          LinkedForest, Machine, PramConfig, layout)
from listcontract.pram import NONE
from conftest import forest_from_lists, path_forest, snapshot, states_equal


# -- forest text format -------------------------------------------------

def test_text_roundtrip():
    f = forest_from_lists([[0, 2, 1], [3, 4]])
    again = LinkedForest.from_text(f.to_text())
    assert np.array_equal(f.succ, again.succ)


def test_loader_rejects_cycles():
    with pytest.raises(ForestFormatError):
        LinkedForest.from_text("0 1\n1 2\n2 0\n")


def test_loader_rejects_shared_successor():
    with pytest.raises(ForestFormatError):
        LinkedForest.from_text("0 2\n1 2\n2 -1\n")


def test_loader_rejects_sparse_ids():
    with pytest.raises(ForestFormatError):
        LinkedForest.from_text("0 -1\n5 -1\n")


def test_loader_rejects_self_loop():
    with pytest.raises(ForestFormatError):
        LinkedForest.from_text("0 0\n")


def test_forest_stats():
    f = forest_from_lists([[0, 1, 2], [3, 4, 5, 6, 7]])
    assert f.list_count == 2
    assert f.longest() == 5
    assert sorted(f.list_lengths().tolist()) == [3, 5]


# -- layout --------------------------------------------------------------

def test_layout_four_node_list():
    m = Machine(path_forest(4), PramConfig())
    arr = layout(m)
    assert arr.slot(0, 0) == 0 and arr.slot(1, 0) == 1
    assert arr.slot(0, 1) == 2 and arr.slot(1, 1) == 3


def test_layout_two_nodes_one_column():
    m = Machine(path_forest(2), PramConfig())
    arr = layout(m)
    assert arr.columns == 1
    assert arr.slot(0, 0) == 0 and arr.slot(1, 0) == 1


def test_layout_two_lists_contiguous_four_columns():
    f = forest_from_lists([[0, 1, 2], [3, 4, 5, 6, 7]])
    m = Machine(f, PramConfig())
    arr = layout(m)
    assert arr.columns == 4
    arr.check_inverse()
    # reading the grid in column order recovers succ order
    grid = arr.grid()
    order = [int(grid[k % 2, k // 2]) for k in range(8)]
    assert order == [0, 1, 2, 3, 4, 5, 6, 7]


def test_layout_pads_odd_n_with_sentinel():
    m = Machine(path_forest(3), PramConfig())
    arr = layout(m)
    assert m.sentinel == 3
    assert m.n == 4
    arr.check_inverse()


def test_layout_rows_mode_splits_halves():
    m = Machine(path_forest(8), PramConfig())
    arr = layout(m, mode="rows")
    assert [arr.slot(0, c) for c in range(4)] == [0, 1, 2, 3]
    assert [arr.slot(1, c) for c in range(4)] == [4, 5, 6, 7]


# -- contract / uncontract ------------------------------------------------

def test_contract_middle_into_predecessor():
    m = Machine(path_forest(3), PramConfig())
    layout(m)
    m.contract(1, 0)   # a<-b,  a -> c remains
    assert m.peek("succ")[0] == 2
    assert m.peek("pred")[2] == 0
    assert m.peek("weight")[0] == 2
    assert m.peek("status")[1] == 0
    m.check_consistency()


def test_contract_tail_into_predecessor_makes_new_tail():
    m = Machine(path_forest(3), PramConfig())
    layout(m)
    m.contract(2, 1)
    assert m.peek("succ")[1] == NONE
    m.check_consistency()


def test_contract_requires_adjacent_active():
    m = Machine(path_forest(4), PramConfig())
    layout(m)
    with pytest.raises(ContractPreconditionError):
        m.contract(0, 3)
    m.contract(1, 0)
    with pytest.raises(ContractPreconditionError):
        m.contract(1, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.randoms(use_true_random=False))
def test_weight_conservation_over_random_contractions(n, rnd):
    m = Machine(path_forest(n), PramConfig())
    layout(m)
    for _ in range(n - 1):
        active = m.active_ids()
        active = active[active < n]   # skip a possible sentinel
        if active.size < 2:
            break
        v = int(rnd.choice(list(active)))
        succ, pred = m.peek("succ"), m.peek("pred")
        nbrs = [x for x in (succ[v], pred[v]) if x != NONE]
        if not nbrs:
            continue
        m.contract(v, int(rnd.choice(nbrs)))
        m.check_consistency()   # includes weight conservation


def test_uncontract_inverse_pair():
    m = Machine(path_forest(4), PramConfig())
    layout(m)
    m.log.start_recording()
    before = snapshot(m)
    cp = m.log.checkpoint()
    m.contract(1, 0)
    m.uncontract(cp)
    assert states_equal(before, snapshot(m))


def test_uncontract_partial_rollback_matches_snapshot():
    rng = np.random.default_rng(5)
    m = Machine(path_forest(16), PramConfig())
    layout(m)
    m.log.start_recording()
    snaps = []
    for _ in range(10):
        snaps.append((m.log.checkpoint(), snapshot(m)))
        active = m.active_ids()
        active = active[active < 16]
        v = int(rng.choice(active))
        succ, pred = m.peek("succ"), m.peek("pred")
        nbrs = [x for x in (succ[v], pred[v]) if x != NONE]
        if not nbrs:
            continue
        m.contract(v, int(rng.choice(nbrs)))
    m.uncontract(snaps[5][0])
    assert states_equal(snaps[5][1], snapshot(m))


def test_uncontract_empty_rollback_is_noop():
    m = Machine(path_forest(4), PramConfig())
    layout(m)
    m.log.start_recording()
    cp = m.log.checkpoint()
    before = snapshot(m)
    m.uncontract(cp)
    assert states_equal(before, snapshot(m))


def test_uncontract_invalid_checkpoint_rejected():
    from listcontract import Checkpoint, ListContractError
    m = Machine(path_forest(4), PramConfig())
    m.log.start_recording()
    with pytest.raises(ListContractError):
        m.uncontract(Checkpoint(batch_count=5, delta_count=99))


def test_delta_tape_replays_both_ways():
    m = Machine(path_forest(6), PramConfig())
    layout(m)
    m.log.start_recording()
    initial = snapshot(m)
    m.contract(1, 0)
    m.contract(3, 2)
    final = snapshot(m)
    entries = list(m.log.delta.entries)
    for store, idx, old, _ in reversed(entries):
        m.peek(store)[idx] = old
    assert states_equal(initial, snapshot(m))
    for store, idx, _, new in entries:
        m.peek(store)[idx] = new
    assert states_equal(final, snapshot(m))
