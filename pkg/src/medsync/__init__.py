"""Offline-first remote consultation platform.

Each hospital runs a fully interactive local server; servers converge
asynchronously through anti-entropy sync whenever connectivity allows.
"""

__version__ = "0.1.0"

from .engine import ReplicationEngine
from .hlc import HlcTimestamp, HybridLogicalClock
from .model import partition_cases
from .state import materialize, state_hash

__all__ = [
    "HlcTimestamp",
    "HybridLogicalClock",
    "ReplicationEngine",
    "materialize",
    "partition_cases",
    "state_hash",
    "__version__",
]
