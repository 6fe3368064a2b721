"""Shared engine-step building blocks used by the pipeline phases."""

from __future__ import annotations

import numpy as np

from .model import ContractBatch, Machine, MoveBatch, SwapBatch, PRED_SIDE, SUCC_SIDE, RETIRED
from .pram import NONE


def scratch(machine: Machine, name, size=None):
    size = machine.n if size is None else int(size)
    mem = machine.memory
    if mem.has(name):
        if mem.peek(name).size >= size:
            return name
        mem.free(name)
    mem.alloc(name, size)
    return name


def restricted_neighbors(machine: Machine, ids, phase):
    """Metered read of each node's same-chain neighbors.

    A link is followed only when it exists and is not cut; the result
    arrays give the virtual successor and predecessor node ids.
    """
    k = ids.size
    if k == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    eng = machine.engine
    with eng.step(f"{phase}/nbr1", k) as s:
        sv = s.read("succ", ids)
        pv = s.read("pred", ids)
        cut_own = s.read("cut", ids)
    with eng.step(f"{phase}/nbr2", k) as s:
        cut_in = s.read("cut", pv)
    sv = np.where((sv != NONE) & (cut_own == 0), sv, NONE)
    pv = np.where((pv != NONE) & (cut_in == 0), pv, NONE)
    return sv, pv


def contract_batch(machine: Machine, absorbed, host, side, phase):
    """Contract absorbed[i] into adjacent host[i], all pairs independent.

    side is PRED_SIDE when the absorbed node precedes its host. Hosts
    must be distinct; absorbed and host sets must not overlap.
    """
    a = np.asarray(absorbed, dtype=np.int64)
    h = np.asarray(host, dtype=np.int64)
    if a.size == 0:
        return
    side_arr = np.broadcast_to(np.asarray(side, dtype=np.int64), a.shape)
    eng = machine.engine
    C = machine.columns
    for sd in (PRED_SIDE, SUCC_SIDE):
        m = side_arr == sd
        if not m.any():
            continue
        aa, hh = a[m], h[m]
        with eng.step(f"{phase}/contract", aa.size) as s:
            wa = s.read("weight", aa)
            wh = s.read("weight", hh)
            ra = s.read("row", aa)
            ca = s.read("col", aa)
            cuta = s.read("cut", aa)
            outer = s.read("pred" if sd == PRED_SIDE else "succ", aa)
            if sd == PRED_SIDE:
                fa = s.read("first", aa)
                s.write("succ", outer, hh)
                s.write("pred", hh, outer)
                s.write("first", hh, fa)
            else:
                s.write("pred", outer, hh)
                s.write("succ", hh, outer)
                s.write("cut", hh, cuta)
            s.write("status", aa, hh)
            s.write("weight", hh, wa + wh)
            slot_idx = np.where(ra >= 0, ra * C + ca, NONE)
            s.write("slot", slot_idx, NONE)
            s.write("row", aa, RETIRED)
            s.write("col", aa, RETIRED)
        machine.log.append(
            ContractBatch(absorbed=aa.copy(), host=hh.copy(),
                          side=np.full(aa.size, sd), weight=wa.copy())
        )


def move_nodes(machine: Machine, nodes, to_row, to_col, phase):
    """Relocate nodes to vacant slots; sources vacated, event logged."""
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        return
    to_row = np.broadcast_to(np.asarray(to_row, dtype=np.int64), nodes.shape)
    to_col = np.broadcast_to(np.asarray(to_col, dtype=np.int64), nodes.shape)
    eng = machine.engine
    C = machine.columns
    with eng.step(f"{phase}/move_rd", nodes.size) as s:
        fr = s.read("row", nodes)
        fc = s.read("col", nodes)
    with eng.step(f"{phase}/move_wr", nodes.size) as s:
        src = np.where(fr >= 0, fr * C + fc, NONE)
        dst = to_row * C + to_col
        keep = src != dst
        s.write("slot", np.where(keep, src, NONE), NONE)
        s.write("slot", dst, nodes)
        s.write("row", nodes, to_row)
        s.write("col", nodes, to_col)
    machine.log.append(MoveBatch(node=nodes.copy(), from_row=fr, from_col=fc,
                                 to_row=to_row.copy(), to_col=to_col.copy()))


def swap_positions(machine: Machine, nodes_a, nodes_b, phase):
    """Exchange the slots of node pairs (a[i], b[i])."""
    a = np.asarray(nodes_a, dtype=np.int64)
    b = np.asarray(nodes_b, dtype=np.int64)
    if a.size == 0:
        return
    eng = machine.engine
    C = machine.columns
    with eng.step(f"{phase}/swap_rd", a.size) as s:
        ra = s.read("row", a)
        ca = s.read("col", a)
        rb = s.read("row", b)
        cb = s.read("col", b)
    with eng.step(f"{phase}/swap_wr", a.size) as s:
        s.write("slot", ra * C + ca, b)
        s.write("slot", rb * C + cb, a)
        s.write("row", a, rb)
        s.write("col", a, cb)
        s.write("row", b, ra)
        s.write("col", b, ca)
    machine.log.append(SwapBatch(node_a=a.copy(), node_b=b.copy()))
