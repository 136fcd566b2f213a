"""Parametrized priority-search-tree skeleton: a heap on y and a search tree
on x.

Each node keeps the B lowest-y points of its subtree (a leaf keeps whatever
remains), children partition the remaining points into f equal consecutive
x-groups, and f-1 splitter keys route searches.  Recursion stops once a
subproblem holds at most f*leaf_param + B points.  Nodes also carry their
root path packed into one machine word pair, plus an ancestor-id array, so
lowest common ancestors resolve with O(1) reads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .bits import BitReader, BitWriter, extract, width_for, write_record_array
from .emsim import BlockStore, Session
from .packedpred import PackedPredecessor, build_packed_pred

_ID_BITS = 32
_PATH_BITS = 64
_SPLIT_PAYLOAD_BITS = 7 + _ID_BITS  # child index alongside its node id


@dataclass(frozen=True)
class PstParams:
    f: int
    leaf_param: int

    def __post_init__(self) -> None:
        if self.f < 2:
            raise ValueError("branching parameter must be >= 2")
        if self.leaf_param < 1:
            raise ValueError("leaf parameter must be >= 1")


@dataclass
class PstNode:
    node_id: int
    kind: str  # "leaf" | "internal"
    depth: int
    n_own: int
    n_children: int
    x_lo: int
    x_hi: int
    path: int
    own_first: int
    own_blocks: int
    child0_id: int
    child_table_block: int
    anc_block: int
    splitter_root: int
    splitter_count: int
    splitter_levels: int


@dataclass
class PstTree:
    store: BlockStore
    params: PstParams
    root_id: int
    n: int
    coord_bits: int
    y_bits: int
    payload_bits: int
    node_count: int
    height: int
    hdr_blocks: int
    child_bits: int

    @property
    def point_bits(self) -> int:
        return self.coord_bits + self.y_bits + self.payload_bits

    # -- node access --------------------------------------------------------

    def read_node(self, session: Session, node_id: int) -> PstNode:
        b = self.store.config.block_bits
        combined = 0
        for i in range(self.hdr_blocks):
            combined = (combined << b) | session.read_int(node_id + i)
        reader = BitReader(combined, b * self.hdr_blocks)
        kind = reader.take(1)
        depth = reader.take(6)
        n_own = reader.take(16)
        n_children = reader.take(7)
        x_lo = reader.take(self.coord_bits)
        x_hi = reader.take(self.coord_bits)
        path = reader.take(_PATH_BITS)
        own_first = reader.take(_ID_BITS)
        own_blocks = reader.take(8)
        child0 = reader.take(_ID_BITS)
        child_table = reader.take(_ID_BITS)
        anc_block = reader.take(_ID_BITS)
        sp_root = reader.take(_ID_BITS)
        sp_count = reader.take(16)
        sp_levels = reader.take(3)
        return PstNode(
            node_id,
            "leaf" if kind == 0 else "internal",
            depth,
            n_own,
            n_children,
            x_lo,
            x_hi,
            path,
            own_first,
            own_blocks,
            child0,
            child_table,
            anc_block,
            sp_root,
            sp_count,
            sp_levels,
        )

    def read_own_points(
        self, session: Session, node: PstNode, y_limit: Optional[int] = None
    ) -> List[Tuple[int, int, int]]:
        """Own points in ascending y; stops at the first block above y_limit."""
        b = self.store.config.block_bits
        pb = self.point_bits
        per = b // pb
        out: List[Tuple[int, int, int]] = []
        for t in range(node.own_blocks):
            block = session.read_int(node.own_first + t)
            lo = t * per
            first_y = extract(block, b, self.coord_bits, self.y_bits)
            if y_limit is not None and lo < node.n_own and first_y > y_limit:
                break
            for i in range(lo, min(lo + per, node.n_own)):
                off = (i - lo) * pb
                x = extract(block, b, off, self.coord_bits)
                y = extract(block, b, off + self.coord_bits, self.y_bits)
                pay = (
                    extract(block, b, off + self.coord_bits + self.y_bits, self.payload_bits)
                    if self.payload_bits
                    else 0
                )
                out.append((x, y, pay))
        return out

    def read_children(self, session: Session, node: PstNode) -> List[int]:
        if node.n_children == 0:
            return []
        b = self.store.config.block_bits
        per = b // _ID_BITS
        ids = []
        for t in range((node.n_children + per - 1) // per):
            block = session.read_int(node.child_table_block + t)
            for i in range(t * per, min((t + 1) * per, node.n_children)):
                ids.append(extract(block, b, (i - t * per) * _ID_BITS, _ID_BITS))
        return ids

    def read_ancestor(self, session: Session, node: PstNode, depth: int) -> int:
        if not 0 <= depth < node.depth:
            raise ValueError("ancestor depth out of range")
        b = self.store.config.block_bits
        per = b // _ID_BITS
        block = session.read_int(node.anc_block + depth // per)
        return extract(block, b, (depth % per) * _ID_BITS, _ID_BITS)

    def splitters(self, node: PstNode) -> Optional[PackedPredecessor]:
        if node.splitter_count == 0:
            return None
        return PackedPredecessor(
            self.store,
            self.coord_bits,
            _SPLIT_PAYLOAD_BITS,
            "sketch",
            node.splitter_count,
            node.splitter_levels,
            node.splitter_root,
            0,
        )

    def locate_child(self, session: Session, node: PstNode, x: int) -> int:
        """Index of the child whose x-span contains x, clamped at the ends."""
        if node.kind != "internal":
            raise ValueError("locate_child needs an internal node")
        pp = self.splitters(node)
        hit = pp.predecessor(session, x) if pp else None
        if hit is None:
            return 0
        return hit[1] >> _ID_BITS

    def locate_child_id(self, session: Session, node: PstNode, x: int) -> Tuple[int, int]:
        """(index, node id) of the child covering x."""
        pp = self.splitters(node)
        hit = pp.predecessor(session, x) if pp else None
        if hit is None:
            return 0, node.child0_id
        payload = hit[1]
        return payload >> _ID_BITS, payload & ((1 << _ID_BITS) - 1)

    def lca(self, session: Session, a_id: int, b_id: int) -> int:
        """Deepest common ancestor, from depths and packed root paths."""
        a = self.read_node(session, a_id)
        b = self.read_node(session, b_id)
        common = 0
        for level in range(min(a.depth, b.depth)):
            shift = _PATH_BITS - (level + 1) * self.child_bits
            if (a.path >> shift) != (b.path >> shift):
                break
            common = level + 1
        if common == a.depth:
            return a_id
        if common == b.depth:
            return b_id
        return self.read_ancestor(session, a, common)


def build_layout(
    store: BlockStore,
    points: Sequence[Tuple[int, int, int]],
    params: PstParams,
    *,
    coord_bits: Optional[int] = None,
    y_bits: Optional[int] = None,
    payload_bits: int = 0,
    session: Optional[Session] = None,
) -> PstTree:
    """Points are (x, y, payload) with pairwise distinct x."""
    if not points:
        raise ValueError("need at least one point")
    xs = [p[0] for p in points]
    if len(set(xs)) != len(xs):
        raise ValueError("not rank space: duplicate x coordinate")
    if session is None:
        session = store.session()
    coord_bits = coord_bits or width_for(max(xs))
    y_bits = y_bits or width_for(max(p[1] for p in points))
    if payload_bits == 0 and any(len(p) > 2 and p[2] for p in points):
        payload_bits = width_for(max(p[2] for p in points))

    cfg = store.config
    b = cfg.block_bits
    B = cfg.block_words
    f = params.f
    child_bits = width_for(f - 1)
    hdr_bits = 1 + 6 + 16 + 7 + 2 * coord_bits + _PATH_BITS + 5 * _ID_BITS + 8 + 16 + 3
    hdr_blocks = (hdr_bits + b - 1) // b
    point_bits = coord_bits + y_bits + payload_bits
    per_point_block = b // point_bits
    per_id_block = b // _ID_BITS

    tree = PstTree(
        store,
        params,
        -1,
        len(points),
        coord_bits,
        y_bits,
        payload_bits,
        0,
        0,
        hdr_blocks,
        child_bits,
    )

    def write_points(pts: Sequence[Tuple[int, int, int]]) -> Tuple[int, int]:
        ordered = sorted(pts, key=lambda p: (p[1], p[0]))
        n_blocks = max(1, (len(ordered) + per_point_block - 1) // per_point_block)
        first = store.allocate_run(n_blocks)
        for t in range(n_blocks):
            writer = BitWriter(b)
            for x, y, pay in ordered[t * per_point_block : (t + 1) * per_point_block]:
                writer.put(x, coord_bits).put(y, y_bits)
                if payload_bits:
                    writer.put(pay, payload_bits)
            writer.write(session, first + t)
        return first, n_blocks

    def write_ids(ids: Sequence[int]) -> int:
        n_blocks = max(1, (len(ids) + per_id_block - 1) // per_id_block)
        first = store.allocate_run(n_blocks)
        for t in range(n_blocks):
            writer = BitWriter(b)
            for v in ids[t * per_id_block : (t + 1) * per_id_block]:
                writer.put(v, _ID_BITS)
            writer.write(session, first + t)
        return first

    def rec(pts: List[Tuple[int, int, int]], depth: int, path: int, ancestors: List[int]) -> int:
        tree.node_count += 1
        tree.height = max(tree.height, depth)
        node_id = store.allocate_run(hdr_blocks)
        stop = len(pts) <= f * params.leaf_param + B
        if depth * child_bits > _PATH_BITS:
            raise ValueError("path bits overflow; raise leaf_param or f")
        if stop:
            own = pts
            children: List[int] = []
            splitters: List[Tuple[int, int]] = []
        else:
            by_y = sorted(pts, key=lambda p: (p[1], p[0]))
            own = by_y[:B]
            own_set = set(own)
            rest = [p for p in pts if p not in own_set]
            groups: List[List[Tuple[int, int, int]]] = []
            q, r = divmod(len(rest), f)
            pos = 0
            for i in range(f):
                size = q + (1 if i < r else 0)
                if size:
                    groups.append(rest[pos : pos + size])
                pos += size
            anc_next = ancestors + [node_id]
            children = [
                rec(g, depth + 1, (path << child_bits) | i, anc_next)
                for i, g in enumerate(groups)
            ]
            splitters = [(g[0][0], i) for i, g in enumerate(groups) if i >= 1]

        own_first, own_blocks = write_points(own)
        child_table = write_ids(children) if children else 0
        anc_block = write_ids(ancestors) if ancestors else 0
        sp_root, sp_count, sp_levels = 0, 0, 0
        if splitters:
            payloads = [
                (idx << _ID_BITS) | children[idx] for _, idx in splitters
            ]
            pp = build_packed_pred(
                store,
                [key for key, _ in splitters],
                payloads,
                coord_bits,
                _SPLIT_PAYLOAD_BITS,
                session=session,
            )
            sp_root, sp_count, sp_levels = pp.root, pp.count, pp.levels

        shift = _PATH_BITS - depth * child_bits
        writer = BitWriter(b * hdr_blocks)
        writer.put(0 if stop else 1, 1)
        writer.put(depth, 6)
        writer.put(len(own), 16)
        writer.put(len(children), 7)
        writer.put(min(p[0] for p in pts), coord_bits)
        writer.put(max(p[0] for p in pts), coord_bits)
        writer.put((path << shift) if depth else 0, _PATH_BITS)
        writer.put(own_first, _ID_BITS)
        writer.put(own_blocks, 8)
        writer.put(children[0] if children else 0, _ID_BITS)
        writer.put(child_table, _ID_BITS)
        writer.put(anc_block, _ID_BITS)
        writer.put(sp_root, _ID_BITS)
        writer.put(sp_count, 16)
        writer.put(sp_levels, 3)
        full = writer.value << (b * hdr_blocks - writer.used)
        mask = (1 << b) - 1
        for i in range(hdr_blocks):
            chunk = (full >> ((hdr_blocks - 1 - i) * b)) & mask
            session.write_int(node_id + i, chunk)
        return node_id

    ordered = sorted(points, key=lambda p: p[0])
    tree.root_id = rec(list(ordered), 0, 0, [])
    return tree
