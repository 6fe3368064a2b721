"""Synchronous round-based EREW PRAM simulator.

The engine executes *steps*. A step is one synchronous parallel
instruction over ``n_tasks`` virtual tasks: every task first reads a
fixed set of cells, then writes a fixed set of cells. With ``p``
processors a step with ``t`` tasks costs ``ceil(t / p)`` engine rounds
(Brent scheduling) and ``t`` units of work. Reads observe the memory
state at the start of the step; writes become visible when the step
ends.

Exclusive access is checked per engine round: virtual task ``i`` runs
in round ``i // p`` on processor ``i % p``, and no cell may be read,
or written, by two distinct processors of the same round. On top of
that the engine refuses any step in which one task reads a cell that
a different task writes, because the outcome of such a step would
depend on the processor count.

Execution is sequential under the hood; the contract is observational
equivalence to the synchronous machine, which the access checks make
sound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BatchDependenceError, ErewViolationError

NONE = -1


@dataclass
class PramConfig:
    """Machine parameters: processor count and checking/trace switches."""

    num_processors: int = 1
    enforce_erew: bool = True
    record_trace: bool = False

    def __post_init__(self):
        if self.num_processors < 1:
            raise ValueError("num_processors must be >= 1")


@dataclass
class RoundMetrics:
    rounds: int = 0
    total_work: int = 0
    erew_violations: int = 0
    phase_breakdown: dict = field(default_factory=dict)

    def add(self, phase, rounds, work):
        self.rounds += rounds
        self.total_work += work
        self.phase_breakdown[phase] = self.phase_breakdown.get(phase, 0) + rounds


class AccessLog:
    """Per-round record of (cell, processor) reads and writes.

    Populated only when ``record_trace`` is on; the exclusivity checks
    themselves never depend on it.
    """

    def __init__(self):
        self.reads = {}
        self.writes = {}

    def record(self, round_index, kind, store, idx, procs):
        table = self.reads if kind == "r" else self.writes
        table.setdefault(round_index, []).append((store, idx, procs))


class Memory:
    """Named dense int64 stores addressed as (name, index) cells."""

    def __init__(self):
        self._stores = {}

    def alloc(self, name, size, fill=NONE):
        if name in self._stores:
            raise ValueError(f"store {name!r} already allocated")
        self._stores[name] = np.full(int(size), fill, dtype=np.int64)
        return name

    def free(self, name):
        del self._stores[name]

    def has(self, name):
        return name in self._stores

    def peek(self, name):
        """Host-side view for orchestration; not metered.

        Mutating the returned array bypasses the machine model; use
        ``poke`` only during setup and steps for everything else.
        """
        return self._stores[name]

    def poke(self, name, idx, values):
        """Unmetered setup write; not for use inside algorithm phases."""
        self._stores[name][idx] = values

    def snapshot(self, names=None):
        names = names if names is not None else list(self._stores)
        return {n: self._stores[n].copy() for n in names}


class Task:
    """Closure-style task: declared reads, then a compute returning writes."""

    __slots__ = ("reads", "compute")

    def __init__(self, reads, compute):
        self.reads = list(reads)
        self.compute = compute


class _StepContext:
    def __init__(self, engine, label, n_tasks):
        self.engine = engine
        self.label = label
        self.n_tasks = int(n_tasks)
        self._reads = []   # (store, idx_array)
        self._writes = []  # (store, idx_array, values_array)

    def read(self, store, idx):
        """Gather one cell per task; idx of -1 skips the read for that task.

        Returns the cell values as of the start of the step (writes of
        this step are not yet visible). Skipped entries return NONE.
        """
        idx = np.asarray(idx, dtype=np.int64)
        if idx.shape != (self.n_tasks,):
            raise ValueError(f"read index array must have shape ({self.n_tasks},)")
        arr = self.engine.memory.peek(store)
        mask = idx >= 0
        out = np.full(self.n_tasks, NONE, dtype=np.int64)
        out[mask] = arr[idx[mask]]
        self._reads.append((store, idx))
        return out

    def write(self, store, idx, values):
        """Buffer one write per task; idx of -1 skips the task's write."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.shape != (self.n_tasks,):
            raise ValueError(f"write index array must have shape ({self.n_tasks},)")
        values = np.broadcast_to(np.asarray(values, dtype=np.int64), (self.n_tasks,))
        self._writes.append((store, idx, values))


class Engine:
    """Sequential reference implementation of the synchronous machine."""

    def __init__(self, memory: Memory, config: PramConfig):
        self.memory = memory
        self.config = config
        self._metrics = RoundMetrics()
        self.access_log = AccessLog()
        self.trace = []
        self.delta_recorder = None
        self._round_counter = 0

    # -- metrics ------------------------------------------------------

    def metrics(self) -> RoundMetrics:
        return self._metrics

    # -- step execution -----------------------------------------------

    def step(self, label, n_tasks):
        return _StepGuard(self, label, n_tasks)

    def run_tasks(self, label, tasks):
        """Run closure-style tasks as one step (mainly for small batches).

        Each task declares its reads up front; its compute receives the
        read values and returns an iterable of (store, index, value)
        writes. Tasks are padded to a common read count internally.
        """
        n = len(tasks)
        if n == 0:
            return
        max_reads = max(len(t.reads) for t in tasks)
        with self.step(label, n) as s:
            values = []
            for slot in range(max_reads):
                idx = np.full(n, NONE, dtype=np.int64)
                stores = [None] * n
                for i, t in enumerate(tasks):
                    if slot < len(t.reads):
                        stores[i], idx[i] = t.reads[slot]
                # group by store to keep read() calls homogeneous
                for store in {st for st in stores if st is not None}:
                    sel = np.array([st == store for st in stores])
                    part = np.where(sel, idx, NONE)
                    got = s.read(store, part)
                    if slot == len(values):
                        values.append(np.zeros(n, dtype=np.int64))
                    values[slot][sel] = got[sel]
                if slot == len(values):
                    values.append(np.zeros(n, dtype=np.int64))
            for i, t in enumerate(tasks):
                vals = [values[slot][i] for slot in range(len(t.reads))]
                for store, idx_w, val in t.compute(vals):
                    one_idx = np.full(n, NONE, dtype=np.int64)
                    one_idx[i] = idx_w
                    s.write(store, one_idx, np.full(n, val, dtype=np.int64))

    # -- internals ------------------------------------------------------

    def _finish_step(self, ctx: _StepContext):
        t = ctx.n_tasks
        if t == 0:
            return
        p = self.config.num_processors
        rounds = -(-t // p)

        violations_by_round = np.zeros(rounds, dtype=np.int64)
        self._check_exclusive(ctx._reads, p, violations_by_round, "read", ctx.label)
        self._check_exclusive(
            [(st, ix) for st, ix, _ in ctx._writes], p, violations_by_round, "write", ctx.label
        )
        self._check_batch_isolation(ctx)

        total_viol = int(violations_by_round.sum())
        self._metrics.erew_violations += total_viol

        if self.config.record_trace:
            self._record_access(ctx, p)

        for r in range(rounds):
            active = min(p, t - r * p)
            if self.config.record_trace:
                self.trace.append(
                    f"round={self._round_counter} phase={ctx.label} "
                    f"active={active} violations={int(violations_by_round[r])}"
                )
            self._round_counter += 1

        if total_viol and self.config.enforce_erew:
            self._metrics.add(ctx.label, rounds, t)
            raise ErewViolationError(
                f"{total_viol} EREW violation(s) in phase {ctx.label!r}",
                violations=total_viol,
            )

        self._apply_writes(ctx)
        self._metrics.add(ctx.label, rounds, t)

    def _check_exclusive(self, accesses, p, violations_by_round, kind, label):
        nrounds = violations_by_round.size + 1
        per_store = {}
        for store, idx in accesses:
            per_store.setdefault(store, []).append(idx)
        for store, idx_list in per_store.items():
            tasks = np.concatenate(
                [np.flatnonzero(ix >= 0) for ix in idx_list]
            )
            cells = np.concatenate([ix[ix >= 0] for ix in idx_list])
            if cells.size < 2:
                continue
            key = cells * nrounds + tasks // p
            order = np.argsort(key, kind="stable")
            k_s = key[order]
            t_s = tasks[order]
            # same task touching the same cell twice is allowed
            bad = (k_s[1:] == k_s[:-1]) & (t_s[1:] != t_s[:-1])
            if bad.any():
                bad_rounds = np.unique(k_s[1:][bad]) % nrounds
                np.add.at(violations_by_round, bad_rounds, 1)

    def _check_batch_isolation(self, ctx):
        reads = {}
        for store, idx in ctx._reads:
            reads.setdefault(store, []).append(idx)
        for store, idx, _ in ctx._writes:
            if store not in reads:
                continue
            w_mask = idx >= 0
            if not w_mask.any():
                continue
            writers = np.flatnonzero(w_mask)
            w_cells = idx[w_mask]
            for r_idx in reads[store]:
                r_mask = r_idx >= 0
                readers = np.flatnonzero(r_mask)
                r_cells = r_idx[r_mask]
                order = np.argsort(w_cells, kind="stable")
                pos = np.searchsorted(w_cells[order], r_cells)
                pos_ok = pos < w_cells.size
                hit = np.zeros(r_cells.size, dtype=bool)
                hit[pos_ok] = w_cells[order][pos[pos_ok]] == r_cells[pos_ok]
                if not hit.any():
                    continue
                same = np.zeros(r_cells.size, dtype=bool)
                same[pos_ok] = writers[order][pos[pos_ok]] == readers[pos_ok]
                # a cell written by several tasks is caught by the EREW
                # check; here only reader != writer matters
                if (hit & ~same).any():
                    cell = int(r_cells[hit & ~same][0])
                    raise BatchDependenceError(
                        f"phase {ctx.label!r}: cell ({store}, {cell}) is read and "
                        "written by different tasks of one step"
                    )

    def _apply_writes(self, ctx):
        for store, idx, values in ctx._writes:
            mask = idx >= 0
            if not mask.any():
                continue
            arr = self.memory.peek(store)
            ids = idx[mask]
            vals = values[mask]
            if self.delta_recorder is not None:
                self.delta_recorder.record(store, ids, arr[ids].copy(), vals)
            arr[ids] = vals

    def _record_access(self, ctx, p):
        base = self._round_counter
        for store, idx in ctx._reads:
            mask = idx >= 0
            tasks = np.flatnonzero(mask)
            for r in np.unique(tasks // p):
                sel = tasks // p == r
                self.access_log.record(base + int(r), "r", store, idx[mask][sel], tasks[sel] % p)
        for store, idx, _ in ctx._writes:
            mask = idx >= 0
            tasks = np.flatnonzero(mask)
            for r in np.unique(tasks // p):
                sel = tasks // p == r
                self.access_log.record(base + int(r), "w", store, idx[mask][sel], tasks[sel] % p)


class _StepGuard:
    def __init__(self, engine, label, n_tasks):
        self.ctx = _StepContext(engine, label, n_tasks)

    def __enter__(self):
        return self.ctx

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.ctx.engine._finish_step(self.ctx)
        return False
