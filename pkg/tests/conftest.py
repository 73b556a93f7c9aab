import math

import pytest

from zkdecay import persistence as io


def small_config(**overrides) -> io.RunConfig:
    L = 40 * math.pi
    data = dict(
        equation="zk", grid={"n": [128, 128], "half_length": [L, L]},
        initial={"kind": "random-band-limited", "amplitude": 0.3, "k_cut": 0.4},
        dt=1e-2, t_start=2.0, t_end=3.0, snapshot_every=25, seed=3,
        diagnostics=[{"functional": "xi_2d", "name": "xi", "b": 0.3, "r": 1.0, "q": 1.1},
                     {"functional": "mass", "name": "mass"}])
    data.update(overrides)
    return io.RunConfig(**data)


@pytest.fixture
def config():
    return small_config()
