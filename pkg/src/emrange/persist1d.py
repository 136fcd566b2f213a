"""Insertion-only 1d reporting over a linked list of blocks, made partially
persistent.

Live blocks hold up to ``capacity`` points, unsorted within a block but
ordered between blocks.  A full block splits around its median into two new
blocks (ids keep increasing from 1); the old block is frozen and kept, so any
past version stays reachable.  Each block records the history of its
successor pointer keyed by the insertion counter, and a directory maps block
ids to storage locations.

Two on-disk layouts share the query algorithm:

* ``inline``: one block per list node; successor history hangs off it in a
  lazily allocated chain.  Smallest footprint.
* ``pinned``: the points block is followed by a fixed run of header blocks
  sized for the history, so a successor lookup always costs the same number
  of reads regardless of history length.

Only queries are billed; insertion-side list walking is accelerated with an
in-memory index, which changes nothing on disk.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .bits import BitReader, BitWriter, extract, width_for
from .emsim import BlockStore, Session

_DIR_ENTRY_BITS = 32
_PTR_BITS = 32


@dataclass(frozen=True)
class P1Config:
    coord_bits: int
    aux_bits: int
    budget: int
    payload_bits: int = 0
    monotone_aux: bool = False
    layout: str = "inline"  # "inline" | "pinned"

    @property
    def entry_bits(self) -> int:
        return self.coord_bits + self.aux_bits + self.payload_bits

    @property
    def tau_bits(self) -> int:
        return width_for(self.budget)

    @property
    def id_bits(self) -> int:
        return width_for(1 + 2 * self.budget)


class _LiveBlock:
    __slots__ = ("logical", "phys", "points", "init_succ", "cur_succ", "min_coord", "max_coord")

    def __init__(self, logical: int, phys: int, succ: int):
        self.logical = logical
        self.phys = phys
        self.points: List[Tuple[int, int, int]] = []  # (coord, aux, payload)
        self.init_succ = succ  # successor at creation; frozen into the block
        self.cur_succ = succ  # live successor; future splits inherit this
        self.min_coord = -1
        self.max_coord = -1


class P1Structure:
    def __init__(self, store: BlockStore, config: P1Config, session: Optional[Session] = None):
        self.store = store
        self.config = config
        self.session = session or store.session()
        b = store.config.block_bits
        entry = config.entry_bits
        if config.layout == "inline":
            fixed = 8 + 1 + config.id_bits + _PTR_BITS
            fit = (b - fixed) // entry
        elif config.layout == "pinned":
            fit = (b - 8) // entry
        else:
            raise ValueError(f"unknown layout {config.layout!r}")
        if fit < 1:
            raise ValueError("block too small for a single point entry")
        self.capacity = max(1, min(store.config.block_words - 1, fit))

        hist_entry = config.tau_bits + config.id_bits
        self._hist_per_chain = (b - 40) // hist_entry
        if config.layout == "pinned":
            fixed0 = 1 + config.id_bits + 8 + _PTR_BITS
            self._hdr_cap0 = (b - fixed0) // hist_entry
            self._hdr_capk = b // hist_entry
            h, total = 1, self._hdr_cap0
            while h < 3 or total < 18:
                h += 1
                total += self._hdr_capk
            self._hdr_blocks = h
            self._hdr_cap = total
        else:
            self._hdr_blocks = 0
            self._hdr_cap = 0

        self.time = 0
        self.next_id = 1
        self._coords: set = set()
        self._last_aux = -1
        self._dir_blocks: List[int] = []
        self._dir_per_block = b // _DIR_ENTRY_BITS
        self._dir_mem: List[int] = []
        self._hist_mem: Dict[int, List[Tuple[int, int]]] = {}
        self._chain_blocks: Dict[object, List[int]] = {}
        self.head_history: List[Tuple[int, int]] = []
        self._head_chain_first = 0
        self.overflow_events = 0
        self.max_hist_len = 0

        first = _LiveBlock(self._new_logical(), self._alloc_node(), 0)
        self._register(first)
        self.live: List[_LiveBlock] = [first]
        self._write_points(first)
        self._head_set(first.logical)

    # -- allocation / directory ---------------------------------------------

    def _new_logical(self) -> int:
        nid = self.next_id
        self.next_id += 1
        return nid

    def _alloc_node(self) -> int:
        phys = self.store.allocate()
        for _ in range(self._hdr_blocks):
            self.store.allocate()
        return phys

    def _register(self, blk: _LiveBlock) -> None:
        idx = blk.logical - 1
        assert idx == len(self._dir_mem)
        self._dir_mem.append(blk.phys)
        t = idx // self._dir_per_block
        if t >= len(self._dir_blocks):
            self._dir_blocks.append(self.store.allocate())
        writer = BitWriter(self.store.config.block_bits)
        lo = t * self._dir_per_block
        for phys in self._dir_mem[lo : lo + self._dir_per_block]:
            writer.put(phys, _DIR_ENTRY_BITS)
        writer.write(self.session, self._dir_blocks[t])

    def dir_read(self, session: Session, logical: int) -> int:
        idx = logical - 1
        if not 0 <= idx < len(self._dir_mem):
            raise ValueError(f"invalid block {logical}")
        block = session.read_int(self._dir_blocks[idx // self._dir_per_block])
        return extract(
            block,
            self.store.config.block_bits,
            (idx % self._dir_per_block) * _DIR_ENTRY_BITS,
            _DIR_ENTRY_BITS,
        )

    # -- on-disk encoding ---------------------------------------------------

    def _write_points(self, blk: _LiveBlock, frozen: bool = False) -> None:
        cfg = self.config
        writer = BitWriter(self.store.config.block_bits)
        writer.put(len(blk.points), 8)
        if cfg.layout == "inline":
            chain = self._chain_blocks.get(blk.logical)
            writer.put(1 if frozen else 0, 1)
            writer.put(blk.init_succ, cfg.id_bits)
            writer.put(chain[0] if chain else 0, _PTR_BITS)
        for coord, aux, payload in blk.points:
            writer.put(coord, cfg.coord_bits)
            writer.put(aux, cfg.aux_bits)
            if cfg.payload_bits:
                writer.put(payload, cfg.payload_bits)
        writer.write(self.session, blk.phys)
        if cfg.layout == "pinned":
            self._write_pinned_header(blk, frozen)

    def _write_pinned_header(self, blk: _LiveBlock, frozen: bool) -> None:
        cfg = self.config
        b = self.store.config.block_bits
        hist = self._hist_mem.get(blk.logical, [])
        inline, overflow = hist[: self._hdr_cap], hist[self._hdr_cap :]
        ovf_ptr = self._write_chain(blk.logical, overflow) if overflow else 0
        writer = BitWriter(b)
        writer.put(1 if frozen else 0, 1)
        writer.put(blk.init_succ, cfg.id_bits)
        writer.put(len(inline), 8)
        writer.put(ovf_ptr, _PTR_BITS)
        for tau, val in inline[: self._hdr_cap0]:
            writer.put(tau, cfg.tau_bits)
            writer.put(val, cfg.id_bits)
        writer.write(self.session, blk.phys + 1)
        rest = inline[self._hdr_cap0 :]
        for i in range(1, self._hdr_blocks):
            writer = BitWriter(b)
            for tau, val in rest[: self._hdr_capk]:
                writer.put(tau, cfg.tau_bits)
                writer.put(val, cfg.id_bits)
            rest = rest[self._hdr_capk :]
            writer.write(self.session, blk.phys + 1 + i)

    def _write_chain(self, key, entries: List[Tuple[int, int]]) -> int:
        cfg = self.config
        b = self.store.config.block_bits
        per = self._hist_per_chain
        chain = self._chain_blocks.setdefault(key, [])
        need = max(1, (len(entries) + per - 1) // per)
        while len(chain) < need:
            chain.append(self.store.allocate())
        for i in range(need):
            part = entries[i * per : (i + 1) * per]
            writer = BitWriter(b)
            writer.put(len(part), 8)
            writer.put(chain[i + 1] if i + 1 < need else 0, _PTR_BITS)
            for tau, val in part:
                writer.put(tau, cfg.tau_bits)
                writer.put(val, cfg.id_bits)
            writer.write(self.session, chain[i])
        return chain[0]

    def _head_set(self, logical: int) -> None:
        self.head_history.append((self.time, logical))
        self._head_chain_first = self._write_chain("head", self.head_history)

    def _append_hist(self, blk: _LiveBlock, tau: int, value: int) -> None:
        blk.cur_succ = value
        hist = self._hist_mem.setdefault(blk.logical, [])
        hist.append((tau, value))
        self.max_hist_len = max(self.max_hist_len, len(hist))
        if self.config.layout == "pinned":
            if len(hist) > self._hdr_cap:
                self.overflow_events += 1
            self._write_pinned_header(blk, frozen=False)
        else:
            self._write_chain(blk.logical, hist)
            self._write_points(blk)  # refresh the chain pointer

    # -- insertion ----------------------------------------------------------

    def insert(
        self, x: int, aux: Optional[int] = None, payload: int = 0, tau: Optional[int] = None
    ) -> dict:
        cfg = self.config
        if tau is None:
            tau = self.time + 1
        if tau <= self.time:
            raise ValueError("insertion times must increase")
        if tau > cfg.budget:
            raise ValueError("insertion budget exhausted")
        if x in self._coords:
            raise ValueError(f"duplicate coordinate {x}")
        if not 0 <= x < (1 << cfg.coord_bits):
            raise ValueError("coordinate out of range")
        if cfg.monotone_aux:
            if aux is None:
                raise ValueError("monotone structure needs an aux value")
            if aux < self._last_aux:
                raise ValueError("aux values must be non-decreasing")
            self._last_aux = aux
        elif aux is not None:
            raise ValueError("explicit-time structure assigns times itself")
        self.time = tau
        if aux is None:
            aux = tau
        self._coords.add(x)

        idx = self._target_index(x)
        blk = self.live[idx]
        blk.points.append((x, aux, payload))
        blk.max_coord = max(blk.max_coord, x)
        blk.min_coord = x if blk.min_coord < 0 else min(blk.min_coord, x)
        event = {"tau": tau, "target": blk.logical, "split": None}
        if len(blk.points) <= self.capacity:
            self._write_points(blk)
            return event

        pts = sorted(blk.points, key=lambda p: p[0])
        lo_size = (len(pts) + 1) // 2
        lo = _LiveBlock(self._new_logical(), self._alloc_node(), 0)
        hi = _LiveBlock(self._new_logical(), self._alloc_node(), blk.cur_succ)
        lo.points = pts[:lo_size]
        hi.points = pts[lo_size:]
        lo.init_succ = lo.cur_succ = hi.logical
        lo.min_coord, lo.max_coord = lo.points[0][0], lo.points[-1][0]
        hi.min_coord, hi.max_coord = hi.points[0][0], hi.points[-1][0]
        self._register(lo)
        self._register(hi)
        self._write_points(lo)
        self._write_points(hi)
        # the frozen block keeps its pre-insert contents on disk
        blk.points = [p for p in pts if p[0] != x]
        self._write_points(blk, frozen=True)
        event["split"] = (blk.logical, lo.logical, hi.logical, lo.max_coord, hi.min_coord)
        if idx > 0:
            self._append_hist(self.live[idx - 1], tau, lo.logical)
        else:
            self._head_set(lo.logical)
        self.live[idx : idx + 1] = [lo, hi]
        return event

    def _target_index(self, x: int) -> int:
        """Index of the live block holding the predecessor of x (head if none)."""
        lo, hi = 0, len(self.live) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            blk = self.live[mid]
            if blk.points and blk.min_coord <= x:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def live_snapshot(self) -> List[Tuple[int, int]]:
        """(min coordinate, logical id) per live block, in list order."""
        return [(blk.min_coord, blk.logical) for blk in self.live]

    @property
    def n_logical(self) -> int:
        return self.next_id - 1

    # -- queries ------------------------------------------------------------

    def start_block_at(self, session: Session, t: int) -> int:
        """Head block of the version-t list, for callers without a hint."""
        return self._chain_lookup(session, self._head_chain_first, t, default=1)

    def _chain_lookup(self, session: Session, first: int, t: int, default: int) -> int:
        cfg = self.config
        b = self.store.config.block_bits
        best = default
        ptr = first
        while ptr:
            reader = BitReader(session.read_int(ptr), b)
            n = reader.take(8)
            nxt = reader.take(_PTR_BITS)
            exhausted = True
            for _ in range(n):
                tau = reader.take(cfg.tau_bits)
                val = reader.take(cfg.id_bits)
                if tau <= t:
                    best = val
                else:
                    exhausted = False
                    break
            ptr = nxt if exhausted else 0
        return best

    def query_at_time(
        self,
        session: Session,
        x1: int,
        x2: int,
        t: int,
        start_id: int,
        aux_thresh: Optional[int] = None,
    ) -> List[Tuple[int, int, int]]:
        """All (coord, aux, payload) with x1 <= coord <= x2 present at time t.

        ``start_id`` must point at the block that held the predecessor of x1
        at time t (or the head of the version-t list when none exists).
        """
        cfg = self.config
        if cfg.monotone_aux and aux_thresh is None:
            raise ValueError("monotone structure needs aux_thresh")
        if x1 > x2 or t <= 0:
            return []
        limit = aux_thresh if cfg.monotone_aux else t
        out: List[Tuple[int, int, int]] = []
        cur = start_id
        hops = 0
        while cur:
            hops += 1
            if hops > self.n_logical + 2:
                raise AssertionError("successor cycle")
            phys = self.dir_read(session, cur)
            block = session.read_int(phys)
            reader = BitReader(block, self.store.config.block_bits)
            count = reader.take(8)
            init_succ = chain_ptr = 0
            if cfg.layout == "inline":
                reader.skip(1)
                init_succ = reader.take(cfg.id_bits)
                chain_ptr = reader.take(_PTR_BITS)
            stop = False
            for _ in range(count):
                coord = reader.take(cfg.coord_bits)
                aux = reader.take(cfg.aux_bits)
                payload = reader.take(cfg.payload_bits) if cfg.payload_bits else 0
                if aux > limit:
                    continue
                if coord > x2:
                    stop = True
                if x1 <= coord <= x2:
                    out.append((coord, aux, payload))
            if stop:
                break
            if cfg.layout == "inline":
                if chain_ptr:
                    cur = self._chain_lookup(session, chain_ptr, t, default=init_succ)
                else:
                    cur = init_succ
            else:
                cur = self._pinned_successor(session, phys, t)
        return out

    def _pinned_successor(self, session: Session, phys: int, t: int) -> int:
        cfg = self.config
        b = self.store.config.block_bits
        reader = BitReader(session.read_int(phys + 1), b)
        reader.skip(1)
        best = reader.take(cfg.id_bits)  # init successor
        hist_n = reader.take(8)
        ovf = reader.take(_PTR_BITS)
        seen = 0
        done = False
        for _ in range(min(hist_n, self._hdr_cap0)):
            tau = reader.take(cfg.tau_bits)
            val = reader.take(cfg.id_bits)
            seen += 1
            if tau <= t:
                best = val
            else:
                done = True
                break
        for i in range(1, self._hdr_blocks):
            block = session.read_int(phys + 1 + i)  # fixed-cost lookup
            if done or seen >= min(hist_n, self._hdr_cap):
                continue
            reader = BitReader(block, b)
            for _ in range(min(hist_n - seen, self._hdr_capk)):
                tau = reader.take(cfg.tau_bits)
                val = reader.take(cfg.id_bits)
                seen += 1
                if tau <= t:
                    best = val
                else:
                    done = True
                    break
        if ovf and not done and seen < hist_n:
            best = self._chain_lookup(session, ovf, t, default=best)
        return best
