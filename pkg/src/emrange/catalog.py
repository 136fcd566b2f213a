"""Three-sided reporting for boundary-aligned x-ranges.

The points are swept in y-order into a persistent 1d structure; for every
boundary of the aligned grid we keep the history of "which block starts a
scan here" keyed by sweep time.  An aligned query is then: map y to a sweep
time, fetch the start block from the left boundary's history, and scan.

Time can be resolved internally (an own y-to-count predecessor) or supplied
by the caller that maintains a global sweep clock across many catalogs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .bits import width_for
from .emsim import BlockStore, Session
from .packedpred import PackedPredecessor, build_packed_pred
from .persist1d import P1Config, P1Structure


@dataclass(frozen=True)
class CatalogConfig:
    coord_bits: int
    y_bits: int
    payload_bits: int = 0
    internal_time: bool = True
    p1d_layout: str = "inline"
    pinned: bool = False
    time_budget: Optional[int] = None  # caller's sweep-clock range, if shared


@dataclass
class CatalogStructure:
    store: BlockStore
    config: CatalogConfig
    boundaries: List[int]
    p1d: P1Structure
    histories: List[PackedPredecessor]
    y_time: Optional[PackedPredecessor]
    n_points: int
    blocks_used: int

    def query(
        self,
        session: Session,
        lo_idx: int,
        hi_idx: int,
        *,
        y: Optional[int] = None,
        t: Optional[int] = None,
    ) -> List[Tuple[int, int, int]]:
        """Points with boundary[lo_idx] <= x < boundary[hi_idx] and y' <= y."""
        if not (0 <= lo_idx <= hi_idx < len(self.boundaries)):
            raise ValueError("catalog requires aligned range")
        if y is None:
            raise ValueError("query needs the y threshold")
        if self.config.internal_time:
            hit = self.y_time.predecessor(session, y) if self.y_time else None
            t = hit[1] if hit else 0
        elif t is None:
            raise ValueError("externally timed catalog needs t")
        if lo_idx == hi_idx or t <= 0 or self.n_points == 0:
            return []
        start = self.histories[lo_idx].predecessor(session, t)
        assert start is not None  # histories carry a time-0 entry
        x_lo = self.boundaries[lo_idx]
        x_hi = self.boundaries[hi_idx] - 1
        return self.p1d.query_at_time(session, x_lo, x_hi, t, start[1], aux_thresh=y)


def build_catalog(
    store: BlockStore,
    points: Sequence[Tuple[int, int, int]],
    boundaries: Sequence[int],
    config: CatalogConfig,
    *,
    session: Optional[Session] = None,
    taus: Optional[Sequence[int]] = None,
) -> CatalogStructure:
    """Points are (x, y, payload); boundaries are sorted grid x-values whose
    consecutive pairs delimit the allowed query spans.

    ``taus`` supplies the global sweep times of the (y, x)-ordered points when
    the catalog participates in a shared clock; histories are keyed by it.
    """
    if list(boundaries) != sorted(set(boundaries)):
        raise ValueError("unsorted boundaries")
    if len(boundaries) < 2:
        raise ValueError("need at least two boundaries")
    if session is None:
        session = store.session()
    before = store.allocated

    ordered = sorted(points, key=lambda p: (p[1], p[0]))
    if taus is None:
        taus = list(range(1, len(ordered) + 1))
    if len(taus) != len(ordered):
        raise ValueError("need one sweep time per point")
    budget = config.time_budget or (taus[-1] if taus else 1)

    p1cfg = P1Config(
        coord_bits=config.coord_bits,
        aux_bits=config.y_bits,
        budget=max(budget, 1),
        payload_bits=config.payload_bits,
        monotone_aux=True,
        layout=config.p1d_layout,
    )
    p1d = P1Structure(store, p1cfg, session=session)

    cur = [1] * len(boundaries)
    hist: List[List[Tuple[int, int]]] = [[(0, 1)] for _ in boundaries]
    for (x, yv, pay), tau in zip(ordered, taus):
        event = p1d.insert(x, aux=yv, payload=pay, tau=tau)
        if event["split"]:
            old, lo, hi, lo_max, hi_min = event["split"]
            for j, beta in enumerate(boundaries):
                if cur[j] == old:
                    # scans for x >= beta start at the block with pred(beta-1)
                    nxt = hi if hi_min < beta else lo
                    cur[j] = nxt
                    hist[j].append((tau, nxt))

    histories = []
    for entries in hist:
        histories.append(
            build_packed_pred(
                store,
                [e[0] for e in entries],
                [e[1] for e in entries],
                p1cfg.tau_bits,
                p1cfg.id_bits,
                session=session,
                min_levels=2 if config.pinned else 1,
                pinned_reads=config.pinned,
            )
        )

    y_time = None
    if config.internal_time:
        ys = sorted({p[1] for p in ordered})
        counts = []
        seen = 0
        i = 0
        for yv in ys:
            while i < len(ordered) and ordered[i][1] <= yv:
                i += 1
            counts.append(taus[i - 1] if i else 0)
        y_time = build_packed_pred(
            store,
            ys,
            counts,
            config.y_bits,
            p1cfg.tau_bits,
            session=session,
            min_levels=2 if config.pinned else 1,
            pinned_reads=config.pinned,
        )

    return CatalogStructure(
        store,
        config,
        list(boundaries),
        p1d,
        histories,
        y_time,
        len(ordered),
        store.allocated - before,
    )
