"""Bit-level record packing on top of the block store.

Blocks are treated as big-endian bit strings (bit 0 is the most significant
bit of word 0).  Records never span blocks: a fixed-width record array packs
``per_block = block_bits // width`` records into each block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

from .emsim import BlockStore, Session, int_to_words


def width_for(value: int) -> int:
    """Bits needed to store values in [0, value]."""
    return max(1, int(value).bit_length())


class BitWriter:
    """Accumulates (value, width) fields into block-sized bit strings."""

    def __init__(self, block_bits: int):
        self.block_bits = block_bits
        self.value = 0
        self.used = 0

    def put(self, value: int, width: int) -> "BitWriter":
        if width <= 0:
            raise ValueError("field width must be positive")
        if not 0 <= value < (1 << width):
            raise ValueError(f"field value {value} does not fit {width} bits")
        if self.used + width > self.block_bits:
            raise ValueError("block overflow while packing")
        self.value = (self.value << width) | value
        self.used += width
        return self

    def as_block_int(self) -> int:
        return self.value << (self.block_bits - self.used)

    def write(self, session: Session, block_id: int) -> None:
        session.write_int(block_id, self.as_block_int())


class BitReader:
    """Sequential field extraction from a block's big-integer view."""

    def __init__(self, block_int: int, block_bits: int):
        self.value = block_int
        self.block_bits = block_bits
        self.pos = 0

    def take(self, width: int) -> int:
        value = extract(self.value, self.block_bits, self.pos, width)
        self.pos += width
        return value

    def skip(self, width: int) -> None:
        self.pos += width


def extract(block_int: int, block_bits: int, bit_offset: int, width: int) -> int:
    shift = block_bits - bit_offset - width
    if shift < 0:
        raise ValueError("field extends past end of block")
    return (block_int >> shift) & ((1 << width) - 1)


@dataclass
class RecordArray:
    """Fixed-width records packed into consecutive blocks, one read per access.

    With ``overlap=True`` consecutive blocks share one record (block t holds
    records [t*(per_block-1), t*(per_block-1)+per_block)), so any two adjacent
    records can be fetched with a single read.
    """

    store: BlockStore
    first_block: int
    count: int
    width: int
    overlap: bool = False

    @property
    def per_block(self) -> int:
        return self.store.config.block_bits // self.width

    @property
    def stride(self) -> int:
        return self.per_block - 1 if self.overlap else self.per_block

    @property
    def n_blocks(self) -> int:
        if self.count == 0:
            return 0
        if not self.overlap:
            return (self.count + self.per_block - 1) // self.per_block
        if self.count == 1:
            return 1
        return (self.count - 2) // self.stride + 1

    def block_of(self, index: int) -> int:
        if not 0 <= index < self.count:
            raise IndexError(f"record {index} out of range")
        if self.overlap and index == self.count - 1 and index > 0:
            # the final record is always present in the last block
            return min(index // self.stride, self.n_blocks - 1)
        return index // self.stride

    def read_block_of(self, session: Session, index: int) -> int:
        return session.read_int(self.first_block + self.block_of(index))

    def get(self, block_int: int, index: int) -> int:
        """Decode record ``index`` from the (already read) block holding it."""
        slot = index - self.block_of(index) * self.stride
        return extract(block_int, self.store.config.block_bits, slot * self.width, self.width)

    def read(self, session: Session, index: int) -> int:
        return self.get(self.read_block_of(session, index), index)


def write_record_array(
    store: BlockStore,
    session: Session,
    values: Sequence[int],
    width: int,
    overlap: bool = False,
) -> RecordArray:
    cfg = store.config
    if width > cfg.block_bits:
        raise ValueError("record wider than a block")
    arr = RecordArray(store, store.allocated, len(values), width, overlap)
    first = store.allocate_run(max(arr.n_blocks, 1))
    arr.first_block = first
    for t in range(arr.n_blocks):
        lo = t * arr.stride
        hi = min(lo + arr.per_block, len(values))
        writer = BitWriter(cfg.block_bits)
        for v in values[lo:hi]:
            writer.put(v, width)
        writer.write(session, first + t)
    return arr
