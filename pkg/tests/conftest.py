"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from holofact import RngStream


@pytest.fixture
def stream() -> RngStream:
    """A fixed root stream; derive children per test for isolation."""
    return RngStream(master_seed=12345)


def all_bipolar_vectors(n: int) -> np.ndarray:
    """Every vector in {-1, +1}**n as a (2**n, n) int8 matrix."""
    count = 1 << n
    bits = (np.arange(count)[:, None] >> np.arange(n)[None, :]) & 1
    return (bits * 2 - 1).astype(np.int8)
