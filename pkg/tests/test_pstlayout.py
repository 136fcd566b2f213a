import pytest

from emrange.emsim import BlockStore, SimConfig
from emrange.pstlayout import PstParams, build_layout
from emrange.rng import SplitMix


def make_points(rng, n, y_max=None):
    xs = list(range(1, n + 1))
    rng.shuffle(xs)
    y_max = y_max or n
    return [(x, rng.randint(0, y_max), 0) for x in xs]


def collect_nodes(tree, session):
    out = []
    stack = [tree.root_id]
    while stack:
        node = tree.read_node(session, stack.pop())
        out.append(node)
        stack.extend(tree.read_children(session, node))
    return out


def subtree_points(tree, session, node_id):
    pts = []
    stack = [node_id]
    while stack:
        node = tree.read_node(session, stack.pop())
        pts.extend(tree.read_own_points(session, node))
        stack.extend(tree.read_children(session, node))
    return pts


def check_invariants(tree, session, points):
    B = tree.store.config.block_words
    f, lp = tree.params.f, tree.params.leaf_param
    nodes = collect_nodes(tree, session)
    seen = []
    for node in nodes:
        own = tree.read_own_points(session, node)
        assert len(own) == node.n_own
        seen.extend(own)
        if node.kind == "leaf":
            assert node.n_children == 0
            if node.depth > 0:
                assert len(own) <= f * lp + B
        else:
            assert len(own) == B
            max_own_y = max(p[1] for p in own)
            child_ids = tree.read_children(session, node)
            prev_hi = None
            for cid in child_ids:
                child = tree.read_node(session, cid)
                sub = subtree_points(tree, session, cid)
                # heap order: every own y is <= every descendant y
                assert min(p[1] for p in sub) >= max_own_y or all(
                    (p[1], p[0]) >= max((q[1], q[0]) for q in own) for p in sub
                )
                if prev_hi is not None:
                    assert child.x_lo > prev_hi
                prev_hi = child.x_hi
    assert sorted(seen) == sorted(points)
    # node count and height bounds
    assert tree.node_count <= max(4, 4 * len(points) // lp + 2)
    import math

    if len(points) > f * lp + B:
        assert tree.height <= math.ceil(math.log(len(points) / lp, f)) + 1


def test_single_leaf_when_small():
    store = BlockStore(SimConfig(4, 32))
    rng = SplitMix(1)
    params = PstParams(f=2, leaf_param=4)
    pts = make_points(rng, 10)  # 10 <= f*l + B = 12
    tree = build_layout(store, pts, params)
    sess = store.session()
    root = tree.read_node(sess, tree.root_id)
    assert root.kind == "leaf"
    assert root.n_own == 10


def test_duplicate_x_rejected():
    store = BlockStore(SimConfig(4, 32))
    with pytest.raises(ValueError, match="rank space"):
        build_layout(store, [(1, 1, 0), (1, 2, 0)], PstParams(2, 4))


def test_heap_and_search_order_small():
    store = BlockStore(SimConfig(4, 32))
    rng = SplitMix(7)
    pts = make_points(rng, 64)
    tree = build_layout(store, pts, PstParams(f=2, leaf_param=4))
    sess = store.session()
    check_invariants(tree, sess, pts)


@pytest.mark.parametrize("f,leaf_param,n", [(2, 4, 200), (4, 2, 300), (8, 8, 500)])
def test_invariants_random(f, leaf_param, n):
    store = BlockStore(SimConfig(8, 32))
    rng = SplitMix(f * 1000 + n)
    pts = make_points(rng, n)
    tree = build_layout(store, pts, PstParams(f, leaf_param))
    sess = store.session()
    check_invariants(tree, sess, pts)


def test_equal_split_balance_f2():
    store = BlockStore(SimConfig(4, 32))
    rng = SplitMix(5)
    pts = make_points(rng, 257)
    tree = build_layout(store, pts, PstParams(2, 4))
    sess = store.session()
    for node in collect_nodes(tree, sess):
        if node.kind == "internal" and node.n_children == 2:
            ids = tree.read_children(sess, node)
            sizes = [len(subtree_points(tree, sess, c)) for c in ids]
            assert abs(sizes[0] - sizes[1]) <= 1


def test_lca():
    store = BlockStore(SimConfig(8, 32))
    rng = SplitMix(13)
    pts = make_points(rng, 400)
    tree = build_layout(store, pts, PstParams(2, 2))
    sess = store.session()
    # parent map via traversal
    parent = {}
    stack = [tree.root_id]
    while stack:
        node = tree.read_node(sess, stack.pop())
        for cid in tree.read_children(sess, node):
            parent[cid] = node.node_id
            stack.append(cid)

    def walk_up_lca(a, b):
        anc = set()
        while True:
            anc.add(a)
            if a not in parent:
                break
            a = parent[a]
        while b not in anc:
            b = parent[b]
        return b

    ids = list(parent.keys()) + [tree.root_id]
    assert tree.lca(sess, tree.root_id, ids[3]) == tree.root_id
    for _ in range(60):
        a = ids[rng.randrange(len(ids))]
        b = ids[rng.randrange(len(ids))]
        assert tree.lca(sess, a, b) == walk_up_lca(a, b), (a, b)
    v = ids[rng.randrange(len(ids))]
    assert tree.lca(sess, v, v) == v


def test_locate_child():
    store = BlockStore(SimConfig(8, 32))
    rng = SplitMix(17)
    pts = make_points(rng, 300)
    tree = build_layout(store, pts, PstParams(4, 2))
    sess = store.session()
    for node in collect_nodes(tree, sess):
        if node.kind != "internal":
            continue
        kids = [tree.read_node(sess, c) for c in tree.read_children(sess, node)]
        for x in [0, node.x_lo, node.x_hi, node.x_hi + 5] + [
            rng.randint(node.x_lo, node.x_hi) for _ in range(10)
        ]:
            idx = tree.locate_child(sess, node, x)
            # interval-scan oracle with end clamping
            want = 0
            for i, child in enumerate(kids):
                if x >= child.x_lo:
                    want = i
            assert idx == want, (x, [(c.x_lo, c.x_hi) for c in kids])


def test_reproduces_f2_blg2_configuration():
    store = BlockStore(SimConfig(4, 32))
    rng = SplitMix(23)
    n = 256
    import math

    lg = math.ceil(math.log2(n))
    params = PstParams(f=2, leaf_param=store.config.block_words * lg * lg)
    pts = make_points(rng, n)
    tree = build_layout(store, pts, params)
    sess = store.session()
    root = tree.read_node(sess, tree.root_id)
    assert root.kind == "leaf"  # 256 <= 2*4*64 + 4
