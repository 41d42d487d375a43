from __future__ import annotations

import sys
from pathlib import Path as FsPath

import numpy as np
import pytest

sys.path.insert(0, str(FsPath(__file__).parent))

from sparsehawkes.kernels import ExponentialKernel
from sparsehawkes.model import ModelParams, Path


@pytest.fixture
def kernel3() -> ExponentialKernel:
    return ExponentialKernel(beta=3.0)


def random_path(rng: np.random.Generator, M: int, T: float = 5.0,
                max_events: int = 20) -> Path:
    """Arbitrary valid path (not from the Hawkes law; tests only need validity)."""
    events = []
    for _ in range(M):
        n = int(rng.integers(0, max_events + 1))
        t = np.sort(rng.uniform(0.0, T, n))
        t = np.unique(t)
        events.append(t)
    return Path(T=T, events=events)


def random_stable_params(rng: np.random.Generator, M: int, rho_target: float = 0.7) -> ModelParams:
    mu = rng.uniform(0.2, 0.8, M)
    A = rng.uniform(0.0, 1.0, (M, M)) * (rng.random((M, M)) < 0.6)
    rho = np.max(np.abs(np.linalg.eigvals(A))) if A.any() else 0.0
    if rho > 0:
        A *= rho_target / rho
    return ModelParams(mu=mu, A=A)
