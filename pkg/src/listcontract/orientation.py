"""Orientation keys, survivor placement, and the full contraction pass.

After the uniformity step the column keys 2*top_color + bottom_color
repeat 0, 1, 3, 2 along each column chain, so every pair can tell
locally which of its two columns is the forward one. Each pair merges
into the bottom slot of its forward column; merged exempt nodes and
boundary pairs resolve by vacancy instead. Survivors end up packed in
the bottom row and the array folds to half the columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OrientationError
from .localize import clear_cuts, localize
from .model import Machine, MoveBatch, PRED_SIDE, SUCC_SIDE
from .pram import NONE
from .steps import contract_batch, move_nodes
from .uniform import (_mb, _read_mb, enforce_uniformity, opposite_pair_shortcut,
                      publish_mailboxes, row_color_and_pair)

FORWARD = 1
BACKWARD = -1

_CYCLE_NEXT = np.full(4, -1, dtype=np.int64)
_CYCLE_NEXT[[0, 1, 3, 2]] = [1, 3, 2, 0]


@dataclass
class OrientationKey:
    key: np.ndarray                  # per column, NONE where undefined
    direction: dict = field(default_factory=dict)   # node -> FORWARD | BACKWARD
    # per-pair placement plan(leader node, partner, target column, needs row move)
    plan_host: np.ndarray = None
    plan_absorbed: np.ndarray = None
    plan_col: np.ndarray = None
    plan_from_top: np.ndarray = None
    loose_nodes: np.ndarray = None   # unpaired tops to drop into their column
    loose_cols: np.ndarray = None


def derive_orientation(machine: Machine, phase="orient") -> OrientationKey:
    """Compute column keys and every pair's forward-column claim.

    Pattern-valid pairs claim the member column whose key is the cycle
    successor of the other member's key. Pairs bordering vacancies or
    exempt nodes claim the free side. Conflicting or underivable
    claims raise OrientationError.
    """
    eng = machine.engine
    publish_mailboxes(machine, phase)
    C = machine.columns
    cols = np.arange(C)
    with eng.step(f"{phase}/keys", C) as s:
        tc = _read_mb(machine, s, 0, "color", cols)
        bc = _read_mb(machine, s, 1, "color", cols)
        tn = _read_mb(machine, s, 0, "node", cols)
        bn = _read_mb(machine, s, 1, "node", cols)
    valid = np.isin(tc, (0, 1)) & np.isin(bc, (0, 1)) & (tn != NONE) & (bn != NONE)
    key = np.where(valid, 2 * tc + bc, NONE)

    host_l, abs_l, col_l, fromtop_l = [], [], [], []
    for row in (0, 1):
        leaders = _pair_leaders(machine, row)
        if leaders.size == 0:
            continue
        colarr, pair = machine.peek("col"), machine.peek("pair")
        c1 = colarr[leaders]
        partner = pair[leaders]
        c2 = colarr[partner]
        k1, k2 = key[c1], key[c2]
        other_tn = tn if row == 1 else None
        # pattern claim: the member whose key follows the other's
        follows_1 = (k1 != NONE) & (k2 != NONE) & (k1 == _cycle_next_of(k2))
        follows_2 = (k1 != NONE) & (k2 != NONE) & (k2 == _cycle_next_of(k1))
        pattern = follows_1 ^ follows_2
        claim = np.where(pattern & follows_1, c1, np.where(pattern & follows_2, c2, NONE))
        need = claim == NONE
        if need.any():
            # vacancy rule: claim the member column whose opposite cell
            # is empty; with both empty, the 0-colored member's column
            opp = bn if row == 0 else tn
            o1 = opp[c1] == NONE
            o2 = opp[c2] == NONE
            colr = machine.peek("color")
            zero_col = np.where(colr[leaders] == 0, c1, c2)
            vac = np.where(o1 & ~o2, c1,
                           np.where(o2 & ~o1, c2,
                                    np.where(o1 & o2, zero_col, NONE)))
            claim = np.where(need, vac, claim)
        if (claim == NONE).any():
            bad = np.flatnonzero(claim == NONE)[:8]
            raise OrientationError(
                "no forward column for pairs at columns "
                f"{list(zip(c1[bad].tolist(), c2[bad].tolist()))} "
                f"(keys {list(zip(k1[bad].tolist(), k2[bad].tolist()))})")
        host = np.where(claim == c1, leaders, partner)
        absorbed = np.where(claim == c1, partner, leaders)
        host_l.append(host)
        abs_l.append(absorbed)
        col_l.append(claim)
        fromtop_l.append(np.full(claim.size, row == 0))

    plan_host = np.concatenate(host_l) if host_l else np.empty(0, np.int64)
    plan_abs = np.concatenate(abs_l) if abs_l else np.empty(0, np.int64)
    plan_col = np.concatenate(col_l) if col_l else np.empty(0, np.int64)
    plan_ft = np.concatenate(fromtop_l) if fromtop_l else np.empty(0, bool)

    # unpaired actives: bottom nodes stay put, top nodes drop straight down
    st, row_a, pair_a = machine.peek("status"), machine.peek("row"), machine.peek("pair")
    colarr = machine.peek("col")
    loose = np.flatnonzero((st == NONE) & (row_a == 0) & (pair_a == NONE))
    loose_cols = colarr[loose]
    stay = np.flatnonzero((st == NONE) & (row_a == 1) & (pair_a == NONE))

    taken = np.concatenate([plan_col, loose_cols, colarr[stay]])
    uniq, counts = np.unique(taken, return_counts=True)
    if (counts > 1).any():
        raise OrientationError(
            f"bottom slots claimed twice at columns {uniq[counts > 1][:8].tolist()}")

    ok = OrientationKey(key=key, plan_host=plan_host, plan_absorbed=plan_abs,
                        plan_col=plan_col, plan_from_top=plan_ft,
                        loose_nodes=loose, loose_cols=loose_cols)
    ok.direction = _chain_directions(machine, key)
    return ok


def _cycle_next_of(k):
    out = np.full(k.shape, NONE, dtype=np.int64)
    m = k != NONE
    out[m] = _CYCLE_NEXT[k[m]]
    return out


def grid_dump(machine: Machine):
    """Text grid of the current placement: top colors, bottom colors,
    and the column keys. Vacant cells print as dots."""
    C = machine.columns
    grid = machine.two_rows().grid()
    color = machine.peek("color")

    def cell(v):
        if v == NONE:
            return "."
        c = color[v]
        return "x" if c == NONE else str(int(c))

    top = " ".join(cell(v) for v in grid[0])
    bot = " ".join(cell(v) for v in grid[1])
    keys = []
    for c in range(C):
        t, b = grid[0, c], grid[1, c]
        if t == NONE or b == NONE or color[t] == NONE or color[b] == NONE:
            keys.append(".")
        else:
            keys.append(str(int(2 * color[t] + color[b])))
    return f"row0: {top}\nrow1: {bot}\nkey : {' '.join(keys)}\n"


def _pair_leaders(machine, row):
    st, rw, pair, col = (machine.peek(n) for n in ("status", "row", "pair", "col"))
    ids = np.flatnonzero((st == NONE) & (rw == row) & (pair != NONE))
    if ids.size == 0:
        return ids
    return ids[col[ids] < col[pair[ids]]]


def _chain_directions(machine, key):
    """Diagnostic per-node direction labels: FORWARD when the oriented
    walk of the node's chain ascends columns at the chain's lowest
    column, BACKWARD otherwise."""
    direction = {}
    pair, col, row = (machine.peek(n) for n in ("pair", "col", "row"))
    # pair edges keyed by (row, frozenset of columns)
    edges = {}
    for r in (0, 1):
        for v in _pair_leaders(machine, r):
            p = int(pair[v])
            c1, c2 = int(col[v]), int(col[p])
            k1, k2 = int(key[c1]), int(key[c2])
            if k1 == NONE or k2 == NONE:
                continue
            if _CYCLE_NEXT[k2] != k1 and _CYCLE_NEXT[k1] != k2:
                raise OrientationError(
                    f"keys {k1},{k2} at columns {c1},{c2} match neither direction")
            edges[(r, c1)] = (int(v), p, c1, c2)
            edges[(r, c2)] = (int(v), p, c1, c2)
    seen = set()
    for start in list(edges):
        if start in seen:
            continue
        # flood the chain across alternating-row edge hops
        comp = []
        comp_keys, work = set(), [start]
        while work:
            r, c = work.pop()
            if (r, c) in comp_keys or (r, c) not in edges:
                continue
            comp_keys.add((r, c))
            v, p, c1, c2 = edges[(r, c)]
            comp_keys.add((r, c1))
            comp_keys.add((r, c2))
            comp.append((v, p, c1, c2))
            for nxt in ((1 - r, c1), (1 - r, c2)):
                if nxt in edges and nxt not in comp_keys:
                    work.append(nxt)
        seen |= comp_keys
        pairs_of_chain = {(v, p, c1, c2) for v, p, c1, c2 in comp}
        anchor = min(pairs_of_chain, key=lambda e: min(e[2], e[3]))
        _, _, c1, c2 = anchor
        fwd_col = c1 if _CYCLE_NEXT[int(key[c2])] == int(key[c1]) else c2
        back_col = c2 if fwd_col == c1 else c1
        lab = FORWARD if fwd_col > back_col else BACKWARD
        for v, p, _, _ in pairs_of_chain:
            direction[v] = lab
            direction[p] = lab
    return direction


def contract_along_orientation(machine: Machine, plan: OrientationKey, phase="pack"):
    """Merge every pair into its claimed bottom slot; drop loose tops."""
    eng = machine.engine
    h, a = plan.plan_host, plan.plan_absorbed
    if h.size:
        with eng.step(f"{phase}/sides", h.size) as s:
            sa = s.read("succ", a)
        side = np.where(sa == h, PRED_SIDE, SUCC_SIDE)
        contract_batch(machine, a, h, side, phase)
        ft = plan.plan_from_top
        if ft.any():
            move_nodes(machine, h[ft], 1, plan.plan_col[ft], f"{phase}/down")
        with eng.step(f"{phase}/clear", h.size) as s:
            s.write("pair", h, NONE)
            s.write("color", h, NONE)
    if plan.loose_nodes is not None and plan.loose_nodes.size:
        move_nodes(machine, plan.loose_nodes, 1, plan.loose_cols, f"{phase}/drop")
    rows = machine.peek("row")[machine.in_array_ids()]
    if rows.size and (rows != 1).any():
        raise OrientationError("survivors left outside the bottom row")


def fold_array(machine: Machine, phase="fold"):
    """Halve the array: bottom column c moves to (c % 2, c // 2)."""
    eng = machine.engine
    C = machine.columns
    new_c = -(-C // 2)
    ids = machine.in_array_ids()
    if ids.size:
        with eng.step(f"{phase}/rd", ids.size) as s:
            oc = s.read("col", ids)
            orow = s.read("row", ids)
        if (orow != 1).any():
            raise OrientationError("fold expects all survivors in the bottom row")
    with eng.step(f"{phase}/clear", 2 * C) as s:
        s.write("slot", np.arange(2 * C), NONE)
    if ids.size:
        nr, nc = oc % 2, oc // 2
        with eng.step(f"{phase}/wr", ids.size) as s:
            s.write("row", ids, nr)
            s.write("col", ids, nc)
            s.write("slot", nr * new_c + nc, ids)
        machine.log.append(MoveBatch(node=ids.copy(),
                                     from_row=np.ones(ids.size, np.int64), from_col=oc,
                                     to_row=nr, to_col=nc))
    machine.columns = new_c


def pool_short_lists(machine: Machine, min_len=4, phase="pool"):
    """Move lists shorter than min_len out of the array; pointer
    jumping will finish them. Their links stay intact."""
    eng = machine.engine
    ids = machine.in_array_ids()
    if ids.size == 0:
        return 0
    hops = min_len - 1
    up = ids.copy()
    a = np.zeros(ids.size, dtype=np.int64)
    for i in range(hops):
        with eng.step(f"{phase}/up{i}", ids.size) as s:
            nxt = s.read("pred", up)
        a = np.where(up != NONE, a + (nxt != NONE), a)
        up = np.where(up != NONE, nxt, NONE)
    down = ids.copy()
    b = np.zeros(ids.size, dtype=np.int64)
    for i in range(hops):
        with eng.step(f"{phase}/dn{i}", ids.size) as s:
            nxt = s.read("succ", down)
        b = np.where(down != NONE, b + (nxt != NONE), b)
        down = np.where(down != NONE, nxt, NONE)
    short = a + b < min_len - 1
    if not short.any():
        return 0
    sel = ids[short]
    C = machine.columns
    with eng.step(f"{phase}/out_rd", sel.size) as s:
        r = s.read("row", sel)
        c = s.read("col", sel)
    with eng.step(f"{phase}/out_wr", sel.size) as s:
        s.write("slot", r * C + c, NONE)
        s.write("row", sel, -3)
        s.write("col", sel, -3)
    return int(sel.size)


@dataclass
class PassReport:
    pre_active: int
    pooled: int
    survivors: int
    columns_before: int
    columns_after: int
    shortcut_pairs: int
    survivors_in_bottom_row: bool
    halved: bool


def uniform_contraction_pass(machine: Machine, min_run=100, phase="pass") -> PassReport:
    """One full contraction pass over the current two-row placement."""
    cols_before = machine.columns
    pooled = pool_short_lists(machine, phase=f"{phase}/pool")
    pre_active = machine.in_array_ids().size
    if pre_active == 0:
        report = PassReport(0, pooled, 0, cols_before, cols_before, 0, True, True)
        return report
    rows = machine.peek("row")[machine.in_array_ids()]
    both_rows = bool((rows == 0).any() and (rows == 1).any())
    if both_rows:
        # a single-row placement has no cross-row links; localization
        # and the uniformity coupling are vacuous for it
        localize(machine, min_run=min_run, phase=f"{phase}/localize")
    row_color_and_pair(machine, 1, phase=f"{phase}/row1")
    row_color_and_pair(machine, 0, phase=f"{phase}/row0")
    shortcut = 0
    if both_rows:
        shortcut = opposite_pair_shortcut(machine, phase=f"{phase}/shortcut")
        enforce_uniformity(machine, 0, 1, phase=f"{phase}/unif_top")
        enforce_uniformity(machine, 1, 0, phase=f"{phase}/unif_bot")
    plan = derive_orientation(machine, phase=f"{phase}/orient")
    contract_along_orientation(machine, plan, phase=f"{phase}/pack")
    survivors = machine.in_array_ids().size
    in_bottom = bool((machine.peek("row")[machine.in_array_ids()] == 1).all())
    fold_array(machine, phase=f"{phase}/fold")
    clear_cuts(machine, phase=f"{phase}/uncut")
    return PassReport(
        pre_active=pre_active, pooled=pooled, survivors=survivors,
        columns_before=cols_before, columns_after=machine.columns,
        shortcut_pairs=shortcut,
        survivors_in_bottom_row=in_bottom,
        halved=machine.columns <= -(-cols_before // 2),
    )
