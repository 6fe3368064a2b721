"""Core data model: linked forests, the two-row array, contraction state.

All mutable algorithm state lives in named engine stores so that the
parallel phases can be metered and checked:

====== =====================================================
store   meaning
====== =====================================================
succ    next node id, -1 at a list tail
pred    previous node id, -1 at a list head
status  -1 while active, else the id of the node absorbed into
weight  number of original nodes this node represents
color   working color, -1 when unset
row     0 or 1 while placed; -1 unplaced, -2 retired, -3 pooled
col     column while placed
slot    flattened 2 x columns array of node ids, -1 when vacant
cut     1 when the link node -> succ[node] is virtually deleted
pair    pairing partner, -1 when unpaired
====== =====================================================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractPreconditionError, ForestFormatError, ListContractError
from .pram import Engine, Memory, PramConfig, NONE

UNPLACED = -1
RETIRED = -2
POOLED = -3

PRED_SIDE = 0   # absorbed node preceded its host
SUCC_SIDE = 1   # absorbed node followed its host

STORES = ("succ", "pred", "status", "weight", "color", "row", "col", "slot", "cut", "pair")


class LinkedForest:
    """Immutable host-side forest: dense node ids, succ/pred arrays."""

    def __init__(self, succ):
        succ = np.asarray(succ, dtype=np.int64)
        self.n = succ.size
        self.succ = succ
        self.pred = _invert(succ)
        self._validate()
        self.heads = np.flatnonzero(self.pred == NONE)
        self.list_count = self.heads.size

    def _validate(self):
        n = self.n
        if n == 0:
            raise ForestFormatError("empty forest")
        s = self.succ
        if ((s < -1) | (s >= n)).any():
            raise ForestFormatError("successor id out of range")
        if (s == np.arange(n)).any():
            raise ForestFormatError("self-loop")
        tgt = s[s >= 0]
        if np.unique(tgt).size != tgt.size:
            raise ForestFormatError("two nodes share a successor")
        # acyclicity: every node must be reachable from a head
        reached = np.zeros(n, dtype=bool)
        cur = np.flatnonzero(self.pred == NONE)
        while cur.size:
            reached[cur] = True
            nxt = s[cur]
            cur = nxt[nxt >= 0]
        if not reached.all():
            raise ForestFormatError("cycle detected")

    def longest(self):
        """Length of the longest list (the quantity written l)."""
        lengths = self.list_lengths()
        return int(lengths.max())

    def list_lengths(self):
        out = np.zeros(self.list_count, dtype=np.int64)
        for i, h in enumerate(self.heads):
            c = 0
            v = h
            while v != NONE:
                c += 1
                v = self.succ[v]
            out[i] = c
        return out

    # -- text format: one line per node, "node_id succ_id" -------------

    @classmethod
    def from_text(cls, text):
        succ_map = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ForestFormatError(f"line {lineno}: expected 'node_id succ_id'")
            try:
                v, s = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ForestFormatError(f"line {lineno}: non-integer field") from exc
            if v in succ_map:
                raise ForestFormatError(f"line {lineno}: duplicate node {v}")
            succ_map[v] = s
        n = len(succ_map)
        if sorted(succ_map) != list(range(n)):
            raise ForestFormatError("node ids must be dense 0..n-1")
        succ = np.array([succ_map[i] for i in range(n)], dtype=np.int64)
        return cls(succ)

    def to_text(self):
        return "\n".join(f"{i} {int(self.succ[i])}" for i in range(self.n)) + "\n"


def _invert(succ):
    n = succ.size
    pred = np.full(n, NONE, dtype=np.int64)
    mask = succ >= 0
    pred[succ[mask]] = np.flatnonzero(mask)
    return pred


# -- contraction log ----------------------------------------------------


@dataclass
class ContractBatch:
    absorbed: np.ndarray
    host: np.ndarray
    side: np.ndarray
    weight: np.ndarray  # weight of the absorbed node at contraction time


@dataclass
class MoveBatch:
    node: np.ndarray
    from_row: np.ndarray
    from_col: np.ndarray
    to_row: np.ndarray
    to_col: np.ndarray


@dataclass
class SwapBatch:
    node_a: np.ndarray
    node_b: np.ndarray


@dataclass
class CutBatch:
    tail: np.ndarray  # link tail -> succ[tail]


@dataclass
class RecolorBatch:
    node: np.ndarray
    old: np.ndarray
    new: np.ndarray


class DeltaRecorder:
    """Flat undo/redo tape of applied writes."""

    def __init__(self):
        self.entries = []

    def record(self, store, idx, old, new):
        self.entries.append((store, np.array(idx), np.array(old), np.array(new)))


@dataclass(frozen=True)
class Checkpoint:
    batch_count: int
    delta_count: int


class ContractionLog:
    """Append-only record of contraction events.

    Semantic batches drive rank recovery; the optional delta tape gives
    bit-for-bit undo (uncontract) and redo.
    """

    def __init__(self):
        self.batches = []
        self.delta = None

    def append(self, batch):
        self.batches.append(batch)

    def start_recording(self, engine: Engine | None = None):
        if self.delta is None:
            self.delta = DeltaRecorder()
        if engine is not None:
            engine.delta_recorder = self.delta

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(len(self.batches), len(self.delta.entries) if self.delta else 0)

    def contract_events(self):
        for b in self.batches:
            if isinstance(b, ContractBatch):
                yield b


class Machine:
    """Engine, memory, log, and the store layout for one algorithm run."""

    def __init__(self, forest: LinkedForest, config: PramConfig | None = None):
        self.forest = forest
        self.config = config or PramConfig()
        self.memory = Memory()
        self.engine = Engine(self.memory, self.config)
        self.log = ContractionLog()

        n = forest.n
        self.sentinel = None
        if n % 2:
            self.sentinel = n
            n += 1
        self.n = n
        self.columns = n // 2

        m = self.memory
        m.alloc("succ", n)
        m.alloc("pred", n)
        m.alloc("status", n, fill=NONE)
        m.alloc("weight", n, fill=1)
        m.alloc("color", n, fill=NONE)
        m.alloc("row", n, fill=UNPLACED)
        m.alloc("col", n, fill=UNPLACED)
        m.alloc("slot", 2 * self.columns, fill=NONE)
        m.alloc("cut", n, fill=0)
        m.alloc("pair", n, fill=NONE)
        m.alloc("first", n)   # first original node of this node's segment
        m.poke("succ", np.arange(forest.n), forest.succ)
        m.poke("pred", np.arange(forest.n), forest.pred)
        m.poke("first", np.arange(n), np.arange(n))

    # -- direct store access (host orchestration) ----------------------

    def peek(self, name):
        return self.memory.peek(name)

    def active_ids(self):
        return np.flatnonzero(self.peek("status") == NONE)

    def in_array_ids(self):
        st, row = self.peek("status"), self.peek("row")
        return np.flatnonzero((st == NONE) & (row >= 0))

    def pooled_ids(self):
        st, row = self.peek("status"), self.peek("row")
        return np.flatnonzero((st == NONE) & (row == POOLED))

    def apply(self, store, idx, values):
        """Host-side write that still feeds the undo tape."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        values = np.broadcast_to(np.asarray(values, dtype=np.int64), idx.shape)
        arr = self.peek(store)
        if self.log.delta is not None:
            self.log.delta.record(store, idx, arr[idx].copy(), values.copy())
        arr[idx] = values

    # -- two-row array --------------------------------------------------

    def two_rows(self):
        return TwoRowArray(self)

    # -- model operations ------------------------------------------------

    def contract(self, absorbed, host):
        """Absorb one active node into an adjacent active host.

        The host keeps its slot; the absorbed node's slot becomes
        vacant. The host inherits the absorbed node's outer neighbor
        and weight; the event is logged.
        """
        a, h = int(absorbed), int(host)
        status, succ, pred = self.peek("status"), self.peek("succ"), self.peek("pred")
        if status[a] != NONE or status[h] != NONE:
            raise ContractPreconditionError("contract requires two active nodes")
        if succ[a] == h:
            side = PRED_SIDE
        elif pred[a] == h:
            side = SUCC_SIDE
        else:
            raise ContractPreconditionError(f"nodes {a} and {h} are not adjacent")
        w = int(self.peek("weight")[a])
        if side == PRED_SIDE:
            outer = int(pred[a])
            if outer != NONE:
                self.apply("succ", outer, h)
            self.apply("pred", h, outer)
            self.apply("first", h, int(self.peek("first")[a]))
        else:
            outer = int(succ[a])
            if outer != NONE:
                self.apply("pred", outer, h)
            self.apply("succ", h, outer)
            self.apply("cut", h, int(self.peek("cut")[a]))
        self.apply("status", a, h)
        self.apply("weight", h, int(self.peek("weight")[h]) + w)
        self._vacate(a)
        self.log.append(
            ContractBatch(
                absorbed=np.array([a]), host=np.array([h]),
                side=np.array([side]), weight=np.array([w]),
            )
        )

    def _vacate(self, node):
        r, c = int(self.peek("row")[node]), int(self.peek("col")[node])
        if r >= 0:
            self.apply("slot", r * self.columns + c, NONE)
        self.apply("row", node, RETIRED)
        self.apply("col", node, RETIRED)

    def uncontract(self, back_to: Checkpoint):
        """Restore the model to an earlier checkpoint, bit for bit.

        Requires delta recording to have been active since the
        checkpoint was taken.
        """
        if self.log.delta is None:
            if back_to.batch_count == len(self.log.batches):
                return
            raise ListContractError("uncontract requires delta recording")
        entries = self.log.delta.entries
        if back_to.delta_count > len(entries) or back_to.batch_count > len(self.log.batches):
            raise ListContractError("invalid checkpoint")
        while len(entries) > back_to.delta_count:
            store, idx, old, _ = entries.pop()
            self.peek(store)[idx] = old
        del self.log.batches[back_to.batch_count:]

    def check_consistency(self):
        """Bidirectional link and weight invariants; raises on failure."""
        status, succ, pred = self.peek("status"), self.peek("succ"), self.peek("pred")
        active = status == NONE
        ids = np.flatnonzero(active)
        s = succ[ids]
        ok = s == NONE
        live = ids[~ok]
        if live.size and not (pred[succ[live]] == live).all():
            raise ListContractError("succ/pred inversion broken")
        p = pred[ids]
        live = ids[p != NONE]
        if live.size and not (succ[pred[live]] == live).all():
            raise ListContractError("pred/succ inversion broken")
        total = int(self.peek("weight")[ids].sum())
        if total != self.n:
            raise ListContractError(f"weight sum {total} != {self.n}")


class TwoRowArray:
    """View of the 2 x columns placement with the slot/position inverse."""

    def __init__(self, machine: Machine):
        self.machine = machine

    @property
    def columns(self):
        return self.machine.columns

    def slot(self, row, column):
        return int(self.machine.peek("slot")[row * self.columns + column])

    def position(self, node):
        r = int(self.machine.peek("row")[node])
        c = int(self.machine.peek("col")[node])
        return (r, c) if r >= 0 else None

    def grid(self):
        return self.machine.peek("slot")[: 2 * self.columns].reshape(2, self.columns).copy()

    def check_inverse(self):
        grid = self.grid()
        row, col = self.machine.peek("row"), self.machine.peek("col")
        for r in range(2):
            for c in range(self.columns):
                v = grid[r, c]
                if v != NONE and (row[v] != r or col[v] != c):
                    raise ListContractError(f"slot ({r},{c}) holds {v} with stale position")
        placed = np.flatnonzero(row >= 0)
        for v in placed:
            if grid[row[v], col[v]] != v:
                raise ListContractError(f"node {v} position not mirrored in slot")


def layout(machine: Machine, mode="columns"):
    """Place lists in succ order, back to back, two nodes per column.

    The default fills column by column (consecutive list nodes share a
    column). mode="rows" fills row 0 first and then row 1, which
    splits each long list into an upper and a lower part; that is the
    placement that keeps both rows populated through localization.

    This is the input placement the contraction machinery assumes; it
    is harness setup, performed before the metered phases start. An odd
    node count is padded with one isolated sentinel node.
    """
    forest = machine.forest
    m = machine.memory
    if machine.sentinel is not None:
        m.poke("succ", machine.sentinel, NONE)
        m.poke("pred", machine.sentinel, NONE)
    pos = 0
    order = np.empty(machine.n, dtype=np.int64)
    for h in forest.heads:
        v = int(h)
        while v != NONE:
            order[pos] = v
            pos += 1
            v = int(forest.succ[v])
    if machine.sentinel is not None:
        order[pos] = machine.sentinel
        pos += 1
    assert pos == machine.n
    k = np.arange(machine.n)
    if mode == "columns":
        rows, cols = k % 2, k // 2
    elif mode == "rows":
        rows, cols = k // machine.columns, k % machine.columns
    else:
        raise ValueError(f"unknown layout mode {mode!r}")
    m.poke("row", order, rows)
    m.poke("col", order, cols)
    m.poke("slot", rows * machine.columns + cols, order)
    return machine.two_rows()
