"""End-to-end list ranking pipelines and the rank-recovery replay.

list_rank contracts with repeated uniform passes until the active
count crosses the pointer-jumping threshold, ranks the survivors by
weighted pointer jumping, then replays the contraction log backward to
assign every original node its rank. wyllie_rank and sequential_rank
are the baselines the pipeline is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ForestFormatError
from .model import ContractBatch, LinkedForest, Machine, layout, PRED_SIDE
from .orientation import uniform_contraction_pass
from .pram import NONE, PramConfig
from .steps import scratch


@dataclass
class RankResult:
    rank: np.ndarray       # 0-based distance from the list head
    list_id: np.ndarray    # head node id per node

    def to_csv(self):
        lines = ["node_id,list_head,rank"]
        for i in range(self.rank.size):
            lines.append(f"{i},{int(self.list_id[i])},{int(self.rank[i])}")
        return "\n".join(lines) + "\n"

    def same_as(self, other):
        return (np.array_equal(self.rank, other.rank)
                and np.array_equal(self.list_id, other.list_id))


@dataclass
class RankRun:
    result: RankResult
    metrics: object
    passes: list = field(default_factory=list)
    jump_rounds: int = 0
    survivor_counts: list = field(default_factory=list)
    trace: list = field(default_factory=list)


def sequential_rank(forest: LinkedForest) -> RankResult:
    """Ground-truth traversal oracle; detects cycles."""
    n = forest.n
    rank = np.full(n, NONE, dtype=np.int64)
    head = np.full(n, NONE, dtype=np.int64)
    for h in forest.heads:
        v = int(h)
        r = 0
        while v != NONE:
            if rank[v] != NONE:
                raise ForestFormatError("cycle while ranking")
            rank[v] = r
            head[v] = int(h)
            r += 1
            v = int(forest.succ[v])
        if r > n:
            raise ForestFormatError("cycle while ranking")
    if (rank == NONE).any():
        raise ForestFormatError("nodes unreachable from any head")
    return RankResult(rank=rank, list_id=head)


def pointer_jump(machine: Machine, phase="jump"):
    """Weighted pointer jumping over the active nodes.

    Each active node learns its list head and the total weight of the
    active nodes before it, in ceil(log2 l) synchronous rounds of
    jumps along predecessor pointers. Returns (ids, before, head,
    rounds).
    """
    eng = machine.engine
    ids = machine.active_ids()
    k = ids.size
    if k == 0:
        return ids, np.empty(0, np.int64), np.empty(0, np.int64), 0
    names = [(scratch(machine, "pj_j0"), scratch(machine, "pj_d0"), scratch(machine, "pj_h0")),
             (scratch(machine, "pj_j1"), scratch(machine, "pj_d1"), scratch(machine, "pj_h1"))]
    # d counts the weight strictly between the jump target and the node,
    # so no weight prefetch is needed: d += d[j] + weight[j]
    with eng.step(f"{phase}/init", k) as s:
        pv = s.read("pred", ids)
        first = s.read("first", ids)
        s.write(names[0][0], ids, pv)
        s.write(names[0][1], ids, 0)
        s.write(names[0][2], ids, np.where(pv == NONE, first, NONE))
    cur_j = pv.copy()
    cur_d = np.zeros(k, dtype=np.int64)
    cur_h = np.where(pv == NONE, first, NONE)
    rounds = 0
    while (cur_j != NONE).any():
        src = names[rounds % 2]
        dst = names[(rounds + 1) % 2]
        with eng.step(f"{phase}/r{rounds}", k) as s:
            jj = s.read(src[0], cur_j)
            dj = s.read(src[1], cur_j)
            hj = s.read(src[2], cur_j)
            wj = s.read("weight", cur_j)
            live = cur_j != NONE
            cur_h = np.where(live & (jj == NONE) & (hj != NONE), hj, cur_h)
            cur_d = np.where(live, cur_d + dj + wj, cur_d)
            cur_j = np.where(live, jj, cur_j)
            s.write(dst[0], ids, cur_j)
            s.write(dst[1], ids, cur_d)
            s.write(dst[2], ids, cur_h)
        rounds += 1
    return ids, cur_d, cur_h, rounds


def contract_to_threshold(machine: Machine, threshold=None, max_passes=64,
                          min_run=100, phase="contract"):
    """Repeat uniform contraction passes until the active count is at
    or below the threshold (default n / ceil(log2 l))."""
    if threshold is None:
        l = machine.forest.longest()
        denom = max(1, int(np.ceil(np.log2(l)))) if l >= 2 else 1
        threshold = machine.forest.n / denom
    reports = []
    for i in range(max_passes):
        active = machine.active_ids().size
        if active <= threshold or machine.in_array_ids().size == 0:
            break
        rep = uniform_contraction_pass(machine, min_run=min_run, phase=f"{phase}/p{i}")
        reports.append(rep)
        if rep.survivors >= rep.pre_active and rep.pooled == 0:
            break
    return reports


def replay_ranks(machine: Machine, ids, before, head, phase="replay"):
    """Walk the contraction log backward, assigning each absorbed node
    its rank interval start from its host's."""
    eng = machine.engine
    n = machine.n
    rnk = scratch(machine, "rp_rank", n)
    wgt = scratch(machine, "rp_w", n)
    hed = scratch(machine, "rp_h", n)
    if ids.size:
        with eng.step(f"{phase}/seed", ids.size) as s:
            w_now = s.read("weight", ids)
            s.write(rnk, ids, before)
            s.write(hed, ids, head)
        with eng.step(f"{phase}/seed2", ids.size) as s:
            s.write(wgt, ids, w_now)
    for batch in reversed(machine.log.batches):
        if not isinstance(batch, ContractBatch):
            continue
        a, h, side, w = batch.absorbed, batch.host, batch.side, batch.weight
        with eng.step(f"{phase}/rd", a.size) as s:
            rh = s.read(rnk, h)
            wh = s.read(wgt, h)
            hh = s.read(hed, h)
        pred_side = side == PRED_SIDE
        ra = np.where(pred_side, rh, rh + wh - w)
        with eng.step(f"{phase}/wr", a.size) as s:
            s.write(rnk, a, ra)
            s.write(rnk, np.where(pred_side, h, NONE), rh + w)
            s.write(wgt, h, wh - w)
            s.write(wgt, a, w)
            s.write(hed, a, hh)
    rank = machine.peek(rnk)[: machine.forest.n].copy()
    heads = machine.peek(hed)[: machine.forest.n].copy()
    return RankResult(rank=rank, list_id=heads)


def list_rank(forest: LinkedForest, p=1, *, config=None, threshold=None,
              min_run=100, layout_mode="columns", use_uniform=True) -> RankRun:
    """Contract, pointer-jump, and replay; exact ranks for every node.

    With use_uniform False the two-row machinery is skipped entirely
    and ranking runs on pointer jumping alone over the original lists,
    which serves as the no-localization reference path.
    """
    config = config or PramConfig(num_processors=p)
    machine = Machine(forest, config)
    run = RankRun(result=None, metrics=None)
    if use_uniform:
        layout(machine, mode=layout_mode)
        run.passes = contract_to_threshold(machine, threshold=threshold,
                                           min_run=min_run)
        run.survivor_counts = [r.survivors for r in run.passes]
    ids, before, head, rounds = pointer_jump(machine)
    run.jump_rounds = rounds
    run.result = replay_ranks(machine, ids, before, head)
    run.metrics = machine.engine.metrics()
    run.trace = machine.engine.trace
    return run


def wyllie_rank(forest: LinkedForest, p=1, *, config=None) -> RankRun:
    """Pure pointer-jumping baseline over all n nodes."""
    config = config or PramConfig(num_processors=p)
    machine = Machine(forest, config)
    ids, before, head, rounds = pointer_jump(machine, phase="wyllie")
    rank = np.full(machine.n, NONE, dtype=np.int64)
    heads = np.full(machine.n, NONE, dtype=np.int64)
    rank[ids] = before
    heads[ids] = head
    result = RankResult(rank=rank[: forest.n], list_id=heads[: forest.n])
    return RankRun(result=result, metrics=machine.engine.metrics(),
                   jump_rounds=rounds, trace=machine.engine.trace)
