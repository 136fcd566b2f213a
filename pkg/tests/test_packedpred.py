import bisect

import pytest
from hypothesis import given, settings, strategies as st

from emrange import packedpred
from emrange.emsim import BlockStore, SimConfig
from emrange.packedpred import build_packed_pred, node_capacity
from emrange.rng import SplitMix


def scan_pred(keys, q):
    i = bisect.bisect_right(keys, q)
    return keys[i - 1] if i else None


def make(b_words=8, w=32):
    return BlockStore(SimConfig(b_words, w))


@pytest.fixture(autouse=True)
def no_fusion_fallbacks():
    before = packedpred.DIAGNOSTICS["fusion_fallbacks"]
    yield
    assert packedpred.DIAGNOSTICS["fusion_fallbacks"] == before


@pytest.mark.parametrize("mode", ["sketch", "fallback"])
def test_small_examples(mode):
    store = make()
    pp = build_packed_pred(store, [3, 7, 9], [30, 70, 90], 16, 8, mode=mode)
    sess = store.session()
    assert pp.predecessor(sess, 8) == (7, 70)
    assert pp.predecessor(sess, 2) is None
    assert pp.predecessor(sess, 9) == (9, 90)
    assert pp.predecessor(sess, 100) == (9, 90)


@pytest.mark.parametrize("mode", ["sketch", "fallback"])
def test_empty(mode):
    store = make()
    pp = build_packed_pred(store, [], [], 16, 8, mode=mode)
    sess = store.session()
    assert pp.predecessor(sess, 5) is None


def test_build_errors():
    store = make()
    with pytest.raises(ValueError, match="sorted"):
        build_packed_pred(store, [5, 3], [0, 0], 16, 8)
    with pytest.raises(ValueError, match="sorted"):
        build_packed_pred(store, [3, 3], [0, 0], 16, 8)
    with pytest.raises(ValueError, match="key_bits"):
        build_packed_pred(store, [1], [0], 4096, 8)
    with pytest.raises(ValueError, match="equal length"):
        build_packed_pred(store, [1], [], 16, 8)


@pytest.mark.parametrize("mode", ["sketch", "fallback"])
@pytest.mark.parametrize("b_words,w", [(4, 32), (8, 32), (16, 32)])
def test_oracle_and_read_ceiling(mode, b_words, w):
    rng = SplitMix(0xC0FFEE ^ b_words)
    store = make(b_words, w)
    b = store.config.block_bits
    key_bits, payload_bits = 20, 12
    cap = node_capacity(b, key_bits, payload_bits, mode)
    for trial in range(8):
        # alternate single-node and two-level sizes
        m = rng.randint(0, cap) if trial % 2 == 0 else rng.randint(cap + 1, cap * cap)
        keys = sorted(rng.sample_distinct(1 << key_bits, m))
        pays = [rng.randrange(1 << payload_bits) for _ in keys]
        pp = build_packed_pred(store, keys, pays, key_bits, payload_bits, mode=mode)
        limit = 4 if pp.levels <= 1 else 8
        sess = store.session()
        queries = [rng.randrange(1 << key_bits) for _ in range(200)]
        queries += [k + d for k in keys[:50] for d in (-1, 0, 1)]
        for q in queries:
            q = max(0, min(q, (1 << key_bits) - 1))
            before = sess.stats.reads
            got = pp.predecessor(sess, q)
            assert sess.stats.reads - before <= limit, (mode, m, q)
            want = scan_pred(keys, q)
            if want is None:
                assert got is None
            else:
                assert got == (want, pays[keys.index(want)])


def test_space_linear():
    store = make(16, 32)  # block_bits = 512
    rng = SplitMix(7)
    key_bits = 20
    m = 100
    keys = sorted(rng.sample_distinct(1 << key_bits, m))
    before = store.allocated
    pp = build_packed_pred(store, keys, [0] * m, key_bits, 8)
    used = store.allocated - before
    # c * (1 + m*key_bits/block_bits) with c = 5
    assert used <= 5 * (1 + (m * key_bits) / store.config.block_bits)


def test_forced_levels_and_pinned_reads():
    store = make()
    keys = [5, 9, 12]
    pp = build_packed_pred(
        store, keys, [1, 2, 3], 16, 8, min_levels=2, pinned_reads=True
    )
    assert pp.levels == 2
    sess = store.session()
    for q in [0, 5, 10, 100]:
        before = sess.stats.reads
        pp.predecessor(sess, q)
        assert sess.stats.reads - before == 8


@settings(max_examples=60, deadline=None)
@given(
    keys=st.sets(st.integers(min_value=0, max_value=(1 << 16) - 1), max_size=40),
    queries=st.lists(st.integers(min_value=0, max_value=(1 << 16) - 1), max_size=20),
)
def test_matches_scan_oracle_property(keys, queries):
    store = make()
    ordered = sorted(keys)
    pp = build_packed_pred(store, ordered, list(range(len(ordered))), 16, 16)
    sess = store.session()
    for q in queries:
        got = pp.predecessor(sess, q)
        want = scan_pred(ordered, q)
        assert (got[0] if got else None) == want
