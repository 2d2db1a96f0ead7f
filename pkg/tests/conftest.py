import math

import numpy as np
import pytest

from cocyclelab import Frequency, TorusGrid, amo_cocycle

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@pytest.fixture
def golden() -> Frequency:
    return Frequency((GOLDEN,), tau=0.2, sigma=1.0)


@pytest.fixture
def amo3(golden):
    return amo_cocycle(3.0, 0.0, golden)


@pytest.fixture
def grid1024() -> TorusGrid:
    return TorusGrid(1024, 1)


def brute_force_min_norm(omega: np.ndarray, K: int):
    """Independent lattice scan used as the oracle for torus norms."""
    best = np.inf
    best_k = None
    d = omega.size
    ranges = [range(-K, K + 1)] * d
    import itertools

    for k in itertools.product(*ranges):
        if all(c == 0 for c in k):
            continue
        first_nonzero = next(c for c in k if c != 0)
        if first_nonzero < 0:
            continue
        val = abs(float(np.dot(k, omega)) - round(float(np.dot(k, omega))))
        if val < best:
            best = val
            best_k = k
    return best, best_k
