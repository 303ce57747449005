from __future__ import annotations

import pytest

from rewritedetect import textdist
from rewritedetect._kernels import logistic_gd
import numpy as np


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger kernel JIT compilation once, outside any timed test."""
    textdist.levenshtein("warm", "worm")
    textdist.diff("warm", "worm")
    logistic_gd(np.array([-1.0, 1.0]), np.array([0.0, 1.0]), 0.1, 8, 1e-12, 1e-4)
