import os

import pytest

from emrange.emsim import BlockStore, SimConfig, int_to_words, words_to_int


@pytest.fixture
def store():
    return BlockStore(SimConfig(block_words=4, word_bits=32))


def test_allocation_order(store):
    assert store.allocate() == 0
    assert store.allocate() == 1
    sess = store.session()
    assert sess.read(0) == [0, 0, 0, 0]


def test_roundtrip_and_counters(store):
    sess = store.session()
    bid = store.allocate()
    sess.write(bid, [1, 2, 3, 4])
    assert sess.read(bid) == [1, 2, 3, 4]
    assert sess.read(bid) == [1, 2, 3, 4]
    assert sess.stats.reads == 2
    assert sess.stats.writes == 1


def test_session_counters_independent(store):
    bid = store.allocate()
    a, b = store.session(), store.session()
    a.read(bid)
    assert a.stats.reads == 1
    assert b.stats.reads == 0


def test_invalid_block(store):
    sess = store.session()
    store.allocate()
    with pytest.raises(ValueError, match="invalid block"):
        sess.read(999)
    with pytest.raises(ValueError, match="invalid block"):
        sess.write(5, [0, 0, 0, 0])


def test_word_overflow(store):
    sess = store.session()
    bid = store.allocate()
    with pytest.raises(ValueError, match="word overflow"):
        sess.write(bid, [1 << 32, 0, 0, 0])


def test_scatter_read(store):
    sess = store.session()
    ids = [store.allocate() for _ in range(3)]
    sess.write(ids[0], [10, 11, 12, 13])
    sess.write(ids[2], [30, 31, 32, 33])
    got = sess.scatter_read([(ids[2], 1), (ids[0], 3), (ids[0], 0)])
    assert got == [31, 13, 10]
    assert sess.stats.scatter_ios == 1
    assert sess.scatter_read([]) == []
    assert sess.stats.scatter_ios == 1
    with pytest.raises(ValueError, match="scatter width exceeded"):
        sess.scatter_read([(ids[0], 0)] * 5)
    with pytest.raises(ValueError):
        sess.scatter_read([(ids[0], 4)])


def test_determinism():
    def run():
        s = BlockStore(SimConfig(4, 32))
        sess = s.session()
        for i in range(10):
            bid = s.allocate()
            sess.write(bid, [i, i * 2, i * 3, i % 2])
        return [s.peek(i) for i in range(10)], sess.stats

    (blocks_a, stats_a), (blocks_b, stats_b) = run(), run()
    assert blocks_a == blocks_b
    assert (stats_a.reads, stats_a.writes) == (stats_b.reads, stats_b.writes)


def test_dump_load_roundtrip(tmp_path, store):
    sess = store.session()
    for i in range(5):
        bid = store.allocate()
        sess.write(bid, [i, 0xFFFFFFFF, i + 1, 0])
    path = os.path.join(tmp_path, "store.ems")
    store.dump(path)
    loaded = BlockStore.load(path)
    assert loaded.config == store.config
    assert loaded.allocated == store.allocated
    for i in range(5):
        assert loaded.peek(i) == store.peek(i)


def test_word_int_helpers():
    words = [1, 2, 3]
    v = words_to_int(words, 32)
    assert int_to_words(v, 32, 3) == words
