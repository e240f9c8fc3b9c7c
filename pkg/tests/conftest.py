import pytest

from medsync.events import Event
from medsync.fixtures import load_pilot
from medsync.hlc import HlcTimestamp


def mk_event(origin, seq, ms, kind, payload, logical=0, server=None):
    return Event(
        origin=origin,
        seq=seq,
        at=HlcTimestamp(ms, logical, server or origin),
        kind=kind,
        payload=payload,
    )


class ManualClock:
    """Settable wall clock for engines under test."""

    def __init__(self, start_ms=1_000_000):
        self.now_ms = start_ms

    def __call__(self):
        return self.now_ms

    def advance(self, delta_ms):
        self.now_ms += delta_ms
        return self.now_ms


@pytest.fixture(scope="session")
def pilot():
    return load_pilot()
