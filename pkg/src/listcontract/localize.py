"""Confine every list to single-row runs of the two-row array.

Short runs (fewer than min_run nodes on one row) are contracted into
the flanking nodes of the other row, split at the run midpoint. Links
that still cross rows afterwards are virtually deleted: they get a cut
flag, the lists are never physically severed, and the flags are
cleared once the contraction pass finishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CutBatch, Machine, PRED_SIDE, SUCC_SIDE
from .pram import NONE
from .steps import contract_batch, restricted_neighbors, scratch

MIN_RUN = 100
MAX_RUN = 300

KEPT = "KEPT"
ABSORBED_UP = "ABSORBED_UP"
ABSORBED_DOWN = "ABSORBED_DOWN"

_CAP_BITS = 10  # doubling horizon; 2**10 comfortably exceeds MAX_RUN


@dataclass
class RunRecord:
    row: int
    start_column: int
    end_column: int
    node_count: int
    disposition: str
    over_max: bool = False


@dataclass
class CutSet:
    tails: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    heads: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self):
        return int(self.tails.size)


def find_runs(machine: Machine, min_run=MIN_RUN, max_run=MAX_RUN):
    """Exact run table of the current placement, in list order.

    Host-side diagnostic scan; the parallel classification inside
    localize() uses capped pointer doubling instead.
    """
    succ, pred = machine.peek("succ"), machine.peek("pred")
    row, col, status = machine.peek("row"), machine.peek("col"), machine.peek("status")
    cut = machine.peek("cut")
    records = []
    active = (status == NONE) & (row >= 0)
    starts = []
    for v in np.flatnonzero(active):
        p = pred[v]
        if p == NONE or cut[p] or not active[p] or row[p] != row[v]:
            starts.append(v)
    for start in starts:
        v = start
        count = 0
        last = v
        while v != NONE and active[v] and row[v] == row[start]:
            count += 1
            last = v
            if cut[v]:
                break
            v = succ[v]
        records.append(
            RunRecord(row=int(row[start]), start_column=int(col[start]),
                      end_column=int(col[last]), node_count=count,
                      disposition=KEPT, over_max=count > max_run)
        )
    return records


def runs_to_csv(records):
    lines = ["row,start_column,end_column,node_count,disposition,over_max"]
    for r in records:
        lines.append(f"{r.row},{r.start_column},{r.end_column},{r.node_count},"
                     f"{r.disposition},{int(r.over_max)}")
    return "\n".join(lines) + "\n"


def localize(machine: Machine, min_run=MIN_RUN, phase="localize"):
    """Absorb short runs into the other row, then cut remaining cross links.

    Phase (a) handles lower-row runs, phase (b) upper-row runs; after
    both, every non-cut link joins two nodes of the same row.
    """
    _absorb_short_runs(machine, target_row=1, min_run=min_run, phase=f"{phase}/a")
    _absorb_short_runs(machine, target_row=0, min_run=min_run, phase=f"{phase}/b")
    return _cut_cross_links(machine, phase=f"{phase}/cut")


def _absorb_short_runs(machine: Machine, target_row, min_run, phase):
    eng = machine.engine
    ids = machine.in_array_ids()
    if ids.size == 0:
        return
    sv, pv = restricted_neighbors(machine, ids, phase)
    with eng.step(f"{phase}/rows", ids.size) as s:
        my_row = s.read("row", ids)
    with eng.step(f"{phase}/row_s", ids.size) as s:
        row_s = s.read("row", sv)
    with eng.step(f"{phase}/row_p", ids.size) as s:
        row_p = s.read("row", pv)

    on_row = my_row == target_row
    run_start = on_row & ((pv == NONE) | (row_p != target_row))
    run_end = on_row & ((sv == NONE) | (row_s != target_row))
    # flank exists when the neighbor beyond the run boundary sits on
    # the other row (rather than the list simply ending)
    start_flank = run_start & (pv != NONE) & (row_p != target_row)
    end_flank = run_end & (sv != NONE) & (row_s != target_row)

    sel = np.flatnonzero(on_row)
    if sel.size == 0:
        return
    pos, head_flag = _capped_distance(machine, ids[sel], np.where(run_start[sel], NONE, pv[sel]),
                                      start_flank[sel], f"{phase}/dhead")
    rem, tail_flag = _capped_distance(machine, ids[sel], np.where(run_end[sel], NONE, sv[sel]),
                                      end_flank[sel], f"{phase}/dtail")

    resolved = (pos != NONE) & (rem != NONE)
    length = np.where(resolved, pos + rem + 1, NONE)
    short = resolved & (length < min_run) & (head_flag | tail_flag)
    if not short.any():
        return

    half = -(-length // 2)  # ceil; left half gets the extra node
    to_left = short & head_flag & ((pos < half) | ~tail_flag)
    to_right = short & tail_flag & ~to_left
    step_idx = np.where(to_left, pos, np.where(to_right, rem, NONE))
    max_step = int(step_idx.max()) if (step_idx != NONE).any() else -1

    nodes = ids[sel]
    for k in range(max_step + 1):
        left_k = np.flatnonzero(to_left & (step_idx == k))
        if left_k.size:
            with eng.step(f"{phase}/hostL{k}", left_k.size) as s:
                hosts = s.read("pred", nodes[left_k])
            contract_batch(machine, nodes[left_k], hosts, SUCC_SIDE, f"{phase}/L{k}")
        right_k = np.flatnonzero(to_right & (step_idx == k))
        if right_k.size:
            with eng.step(f"{phase}/hostR{k}", right_k.size) as s:
                hosts = s.read("succ", nodes[right_k])
            contract_batch(machine, nodes[right_k], hosts, PRED_SIDE, f"{phase}/R{k}")


def _capped_distance(machine: Machine, ids, back, boundary_flag, phase):
    """Distance to the run boundary and the boundary's flank flag.

    back[i] is the in-run neighbor toward the boundary (NONE at the
    boundary itself). Doubling is capped; unresolved entries return
    NONE, which classifies the run as long.
    """
    eng = machine.engine
    k = ids.size
    j0 = scratch(machine, "run_j0")
    j1 = scratch(machine, "run_j1")
    d0 = scratch(machine, "run_d0")
    d1 = scratch(machine, "run_d1")
    f0 = scratch(machine, "run_f0")
    f1 = scratch(machine, "run_f1")
    with eng.step(f"{phase}/init", k) as s:
        s.write(j0, ids, back)
        s.write(d0, ids, np.where(back != NONE, 1, 0))
        s.write(f0, ids, boundary_flag.astype(np.int64))
    cur_j, cur_d, cur_f = back.copy(), np.where(back != NONE, 1, 0), boundary_flag.astype(np.int64)
    names = [(j0, d0, f0), (j1, d1, f1)]
    for it in range(_CAP_BITS):
        src = names[it % 2]
        dst = names[(it + 1) % 2]
        live = cur_j != NONE
        if not live.any():
            break
        with eng.step(f"{phase}/jump{it}", k) as s:
            jj = s.read(src[0], cur_j)
            dj = s.read(src[1], cur_j)
            fj = s.read(src[2], cur_j)
        new_j = np.where(live, jj, cur_j)
        new_d = np.where(live, cur_d + dj, cur_d)
        new_f = np.where(live & (new_j == NONE), fj, cur_f)
        with eng.step(f"{phase}/jw{it}", k) as s:
            s.write(dst[0], ids, new_j)
            s.write(dst[1], ids, new_d)
            s.write(dst[2], ids, new_f)
        cur_j, cur_d, cur_f = new_j, new_d, new_f
    dist = np.where(cur_j == NONE, cur_d, NONE)
    flag = np.where(cur_j == NONE, cur_f, 0).astype(bool)
    return dist, flag


def _cut_cross_links(machine: Machine, phase):
    eng = machine.engine
    ids = machine.in_array_ids()
    cs = CutSet()
    if ids.size == 0:
        return cs
    with eng.step(f"{phase}/nbr", ids.size) as s:
        sv = s.read("succ", ids)
        my_row = s.read("row", ids)
    with eng.step(f"{phase}/rows", ids.size) as s:
        row_s = s.read("row", sv)
    cross = (sv != NONE) & (row_s != my_row) & (row_s >= 0)
    if cross.any():
        with eng.step(f"{phase}/mark", int(cross.sum())) as s:
            s.write("cut", ids[cross], 1)
        cs = CutSet(tails=ids[cross].copy(), heads=sv[cross].copy())
        machine.log.append(CutBatch(tail=ids[cross].copy()))
    return cs


def clear_cuts(machine: Machine, phase="uncut"):
    ids = np.flatnonzero(machine.peek("cut") == 1)
    if ids.size:
        with machine.engine.step(f"{phase}/clear", ids.size) as s:
            s.write("cut", ids, 0)
