"""Shared fixtures: deterministic randomness per test, fresh deployments."""

import pytest

from pdid import crypto
from pdid.contract import GpmContract
from pdid.ledger import Ledger


@pytest.fixture(autouse=True)
def _system_randomness_after():
    """Let tests seed the RNG freely without leaking into later tests."""
    yield
    crypto.use_system_randomness()


@pytest.fixture
def seeded():
    """Deterministic randomness for loops that freeze their trial values."""
    crypto.set_insecure_seed(20260815)


@pytest.fixture
def deployment():
    """In-memory ledger plus contract, wired together."""
    ledger = Ledger()
    gpm = GpmContract.create(ledger.tx_included)
    return ledger, gpm


@pytest.fixture
def manual_clock():
    """Contract clock the test can advance by hand."""

    class Clock:
        def __init__(self):
            self.now = 1_000_000.0

        def __call__(self):
            return self.now

        def advance(self, dt):
            self.now += dt

    return Clock()
