"""Three-sided reporting for very small point sets via sweep-and-persist plus
a start-block table.

The points go into a persistent 1d structure in y-order.  Two packed
predecessor structures reduce a query to rank space, where an integer shape
code identifies the point set up to rank equivalence; rank-equivalent builds
share one table mapping (x-rank, y-rank) to the block id a scan starts from.
The scan itself runs on the original coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .bits import BitWriter, extract, width_for
from .emsim import BlockStore, Session
from .packedpred import PackedPredecessor, build_packed_pred
from .persist1d import P1Config, P1Structure


def default_m_max(block_bits: int) -> int:
    cap = 1
    while (cap + 1) ** 8 <= block_bits:
        cap += 1
    return max(4, cap)


def shape_code(points: Sequence[Tuple[int, int, int]]) -> int:
    """Integer identifying the point set in rank space: the y-rank permutation
    of the x-ordered points (ties on y broken by x), Lehmer-encoded, tagged
    with the point count."""
    m = len(points)
    by_x = sorted(points, key=lambda p: p[0])
    order = sorted(range(m), key=lambda i: (by_x[i][1], by_x[i][0]))
    rank = [0] * m
    for r, i in enumerate(order):
        rank[i] = r
    code = 0
    remaining = list(range(m))
    for r in rank:
        idx = remaining.index(r)
        code = code * len(remaining) + idx
        remaining.pop(idx)
    return (code << 7) | m


@dataclass
class TableRef:
    first_block: int
    entry_bits: int
    m: int

    def lookup(self, session: Session, store: BlockStore, rx: int, ry: int) -> int:
        side = self.m + 1
        if not (0 <= rx < side and 0 <= ry < side):
            raise ValueError("rank out of table range")
        index = rx * side + ry
        b = store.config.block_bits
        per = b // self.entry_bits
        block = session.read_int(self.first_block + index // per)
        return extract(block, b, (index % per) * self.entry_bits, self.entry_bits)


class TabRegistry:
    """Start-block tables shared between rank-equivalent point sets."""

    def __init__(self, store: BlockStore, session: Optional[Session] = None, debug: bool = False):
        self.store = store
        self.session = session or store.session()
        self.debug = debug
        self._tables: Dict[Tuple, TableRef] = {}
        self.entries_total = 0

    @property
    def shapes(self) -> int:
        return len(self._tables)

    def ensure(self, shape: Tuple, m: int, values: Sequence[int], entry_bits: int) -> TableRef:
        ref = self._tables.get(shape)
        if ref is not None:
            if self.debug:
                probe = self.store.session()
                for rx in range(m + 1):
                    for ry in range(m + 1):
                        got = ref.lookup(probe, self.store, rx, ry)
                        assert got == values[rx * (m + 1) + ry], "table sharing mismatch"
            return ref
        b = self.store.config.block_bits
        per = b // entry_bits
        n_blocks = max(1, (len(values) + per - 1) // per)
        first = self.store.allocate_run(n_blocks)
        for t in range(n_blocks):
            writer = BitWriter(b)
            for v in values[t * per : (t + 1) * per]:
                writer.put(v, entry_bits)
            writer.write(self.session, first + t)
        ref = TableRef(first, entry_bits, m)
        self._tables[shape] = ref
        self.entries_total += len(values)
        return ref


@dataclass(frozen=True)
class MicroConfig:
    coord_bits: int
    y_bits: int
    payload_bits: int = 0
    m_max: Optional[int] = None
    pinned: bool = False


@dataclass
class MicroStructure:
    store: BlockStore
    config: MicroConfig
    m: int
    shape: int
    x_pred: Optional[PackedPredecessor]
    y_pred: Optional[PackedPredecessor]
    p1d: Optional[P1Structure]
    table: Optional[TableRef]

    def query(self, session: Session, x1: int, x2: int, y: int) -> List[Tuple[int, int, int]]:
        """Points with x1 <= x <= x2 and y' <= y, exact."""
        if self.m == 0 or x1 > x2:
            return []
        hit = self.x_pred.predecessor(session, x1 - 1)
        # rank of the largest x strictly below the range; the table entry for
        # it points at the block a scan must start from
        rx = hit[1] if hit else 0
        hit = self.y_pred.predecessor(session, y)
        ry = hit[1] if hit else 0
        if ry == 0:
            return []
        start = self.table.lookup(session, self.store, rx, ry)
        return self.p1d.query_at_time(session, x1, x2, ry, start, aux_thresh=y)


def build_micro(
    store: BlockStore,
    points: Sequence[Tuple[int, int, int]],
    registry: TabRegistry,
    config: MicroConfig,
    *,
    session: Optional[Session] = None,
) -> MicroStructure:
    m_max = config.m_max or default_m_max(store.config.block_bits)
    m = len(points)
    if m > m_max:
        raise ValueError("micro capacity exceeded")
    xs = [p[0] for p in points]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate x coordinate")
    if session is None:
        session = store.session()
    if m == 0:
        return MicroStructure(store, config, 0, 0, None, None, None, None)

    shape = shape_code(points)
    ordered = sorted(points, key=lambda p: (p[1], p[0]))
    x_sorted = sorted(xs)

    p1cfg = P1Config(
        coord_bits=config.coord_bits,
        aux_bits=config.y_bits,
        budget=m,
        payload_bits=config.payload_bits,
        monotone_aux=True,
        layout="inline",
    )
    p1d = P1Structure(store, p1cfg, session=session)

    side = m + 1
    table = [1] * (side * side)  # column ry = 0: everything starts at block 1
    cur = [1] * side  # cur[rx]: block holding the largest inserted x-rank <= rx
    for tau, (x, yv, pay) in enumerate(ordered, start=1):
        event = p1d.insert(x, aux=yv, payload=pay, tau=tau)
        if event["split"]:
            old, lo, hi, lo_max, hi_min = event["split"]
            for rx in range(side):
                if cur[rx] == old:
                    beta = x_sorted[rx - 1] if rx else -1
                    cur[rx] = hi if hi_min <= beta else lo
        for rx in range(side):
            table[rx * side + tau] = cur[rx]

    levels = 2 if config.pinned and m > 1 else 1
    x_pred = build_packed_pred(
        store,
        x_sorted,
        list(range(1, m + 1)),
        config.coord_bits,
        width_for(m),
        session=session,
        min_levels=levels,
        pinned_reads=config.pinned,
    )
    ys = sorted({p[1] for p in points})
    counts = []
    i = 0
    for yv in ys:
        while i < len(ordered) and ordered[i][1] <= yv:
            i += 1
        counts.append(i)
    y_pred = build_packed_pred(
        store,
        ys,
        counts,
        config.y_bits,
        width_for(m),
        session=session,
        min_levels=min(levels, len(ys)) if config.pinned else 1,
        pinned_reads=config.pinned,
    )

    ref = registry.ensure(shape, m, table, p1cfg.id_bits)
    return MicroStructure(store, config, m, shape, x_pred, y_pred, p1d, ref)
