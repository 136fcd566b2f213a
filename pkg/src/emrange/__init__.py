"""I/O-counted external-memory range reporting structures.

Everything is built over a simulated block store that charges one unit per
block transfer, so the advertised O(1 + k/B) query behaviour can be measured
rather than trusted.
"""

from .emsim import BlockStore, IOStats, Session, SimConfig

__all__ = [
    "BlockStore",
    "IOStats",
    "Session",
    "SimConfig",
]

__version__ = "0.1.0"
