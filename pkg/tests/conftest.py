import numpy as np
import pytest

import echoslice as es


def random_volume(rng: np.random.Generator, max_dim: int = 16, max_frames: int = 4) -> es.VolumeSequence:
    dims = (
        int(rng.integers(2, max_dim + 1)),
        int(rng.integers(2, max_dim + 1)),
        int(rng.integers(2, max_dim + 1)),
        int(rng.integers(1, max_frames + 1)),
    )
    meta = es.VolumeMeta(dims, es.BoundsMatrix(1.0, 11.0, -30.0, 30.0, -30.0, 30.0))
    return es.VolumeSequence(meta, rng.integers(0, 256, dims, dtype=np.uint8))


@pytest.fixture(scope="session")
def phantom_pair():
    """One deterministic phantom with its analytic truth, shared per session."""
    spec = es.standard_phantom(seed=7)
    return es.generate_phantom(spec)


@pytest.fixture(scope="session")
def phantom_volume(phantom_pair):
    return phantom_pair[0]


@pytest.fixture(scope="session")
def phantom_truth(phantom_pair):
    return phantom_pair[1]
