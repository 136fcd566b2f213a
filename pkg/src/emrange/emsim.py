"""Simulated external memory with exact I/O accounting.

The store is an infinite array of fixed-size blocks.  Each block holds
``block_words`` unsigned integers of ``word_bits`` bits.  All transfers go
through a :class:`Session`, which counts them: ``reads`` for ordinary block
reads, ``writes`` for block writes, and ``scatter_ios`` for the wide
word-gather primitive.  There is no cache: every read is charged, repeats
included.  In-memory computation on fetched words is free.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

_MAGIC = b"EMS1"


@dataclass(frozen=True)
class SimConfig:
    """Block geometry: B words per block, w bits per word, b = B*w bits."""

    block_words: int
    word_bits: int

    def __post_init__(self) -> None:
        if self.block_words < 2:
            raise ValueError("block_words must be >= 2")
        if self.word_bits < 16:
            raise ValueError("word_bits must be >= 16")

    @property
    def block_bits(self) -> int:
        return self.block_words * self.word_bits

    @property
    def word_mask(self) -> int:
        return (1 << self.word_bits) - 1


@dataclass
class IOStats:
    reads: int = 0
    writes: int = 0
    scatter_ios: int = 0

    def snapshot(self) -> "IOStats":
        return IOStats(self.reads, self.writes, self.scatter_ios)

    def delta(self, earlier: "IOStats") -> "IOStats":
        return IOStats(
            self.reads - earlier.reads,
            self.writes - earlier.writes,
            self.scatter_ios - earlier.scatter_ios,
        )

    @property
    def total(self) -> int:
        return self.reads + self.writes + self.scatter_ios


class BlockStore:
    """An allocatable store of zero-filled blocks with dense integer ids."""

    def __init__(self, config: SimConfig):
        self.config = config
        self._blocks: List[List[int]] = []
        # Cache of the big-integer view of each block; invalidated on write.
        # Decoding is in-memory work and free, so memoizing it is fair game.
        self._int_cache: dict = {}

    def __len__(self) -> int:
        return len(self._blocks)

    @property
    def allocated(self) -> int:
        return len(self._blocks)

    def session(self) -> "Session":
        return Session(self)

    def allocate(self) -> int:
        """Return a fresh block id; the block starts zero-filled."""
        self._blocks.append([0] * self.config.block_words)
        return len(self._blocks) - 1

    def allocate_run(self, count: int) -> int:
        """Allocate ``count`` consecutive blocks, returning the first id."""
        first = len(self._blocks)
        for _ in range(count):
            self.allocate()
        return first

    def _check_id(self, block_id: int) -> None:
        if not 0 <= block_id < len(self._blocks):
            raise ValueError(f"invalid block {block_id}")

    def peek(self, block_id: int) -> List[int]:
        """Uncounted read, for assertions and serialization only."""
        self._check_id(block_id)
        return list(self._blocks[block_id])

    def peek_int(self, block_id: int) -> int:
        self._check_id(block_id)
        cached = self._int_cache.get(block_id)
        if cached is None:
            cached = words_to_int(self._blocks[block_id], self.config.word_bits)
            self._int_cache[block_id] = cached
        return cached

    # -- serialization ----------------------------------------------------

    def dump(self, path: str) -> None:
        cfg = self.config
        bytes_per_word = (cfg.word_bits + 7) // 8
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<QQQ", cfg.block_words, cfg.word_bits, len(self._blocks)))
            for block in self._blocks:
                for word in block:
                    fh.write(word.to_bytes(bytes_per_word, "big"))

    @classmethod
    def load(cls, path: str) -> "BlockStore":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise ValueError("bad store file: wrong magic")
            block_words, word_bits, count = struct.unpack("<QQQ", fh.read(24))
            store = cls(SimConfig(block_words, word_bits))
            bytes_per_word = (word_bits + 7) // 8
            for _ in range(count):
                block = []
                for _ in range(block_words):
                    raw = fh.read(bytes_per_word)
                    if len(raw) != bytes_per_word:
                        raise ValueError("bad store file: truncated")
                    block.append(int.from_bytes(raw, "big"))
                store._blocks.append(block)
        return store


@dataclass
class Session:
    """Per-client transfer counters over a shared store."""

    store: BlockStore
    stats: IOStats = field(default_factory=IOStats)

    def read(self, block_id: int) -> List[int]:
        self.store._check_id(block_id)
        self.stats.reads += 1
        return list(self.store._blocks[block_id])

    def read_int(self, block_id: int) -> int:
        """Read a block as one big integer (word 0 in the high bits)."""
        self.store._check_id(block_id)
        self.stats.reads += 1
        return self.store.peek_int(block_id)

    def write(self, block_id: int, words: Sequence[int]) -> None:
        store = self.store
        store._check_id(block_id)
        cfg = store.config
        if len(words) != cfg.block_words:
            raise ValueError("block must have exactly block_words words")
        for word in words:
            if not 0 <= word <= cfg.word_mask:
                raise ValueError("word overflow")
        store._blocks[block_id] = list(words)
        store._int_cache.pop(block_id, None)
        self.stats.writes += 1

    def write_int(self, block_id: int, value: int) -> None:
        cfg = self.store.config
        self.write(block_id, int_to_words(value, cfg.word_bits, cfg.block_words))

    def scatter_read(self, addresses: Sequence[Tuple[int, int]]) -> List[int]:
        """Fetch up to block_words individually addressed words in one sI/O."""
        store = self.store
        cfg = store.config
        if len(addresses) > cfg.block_words:
            raise ValueError("scatter width exceeded")
        if not addresses:
            return []
        out = []
        for block_id, offset in addresses:
            store._check_id(block_id)
            if not 0 <= offset < cfg.block_words:
                raise ValueError(f"invalid word offset {offset}")
            out.append(store._blocks[block_id][offset])
        self.stats.scatter_ios += 1
        return out


def words_to_int(words: Sequence[int], word_bits: int) -> int:
    value = 0
    for word in words:
        value = (value << word_bits) | word
    return value


def int_to_words(value: int, word_bits: int, count: int) -> List[int]:
    mask = (1 << word_bits) - 1
    out = [0] * count
    for i in range(count - 1, -1, -1):
        out[i] = value & mask
        value >>= word_bits
    return out
