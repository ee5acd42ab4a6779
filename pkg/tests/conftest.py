import numpy as np
import pytest

import gl3ff.cli as cli
from gl3ff.model import BetheState, RootConfig, Twist, xxx_chain
from gl3ff.oracle import SpinChainSpec

RNG_SEED = 7


@pytest.fixture(scope="session")
def state_lib():
    """Solved desk-scale chains L=2..5 shared across test modules."""
    return cli.prepare_states(RNG_SEED)


@pytest.fixture(scope="session")
def chain2():
    xi = cli.seeded_inhomogeneities(2, RNG_SEED)
    spec = SpinChainSpec(L=2, xi=xi, c=1.0)
    return spec, spec.model()


@pytest.fixture(scope="session")
def chain3():
    xi = cli.seeded_inhomogeneities(3, RNG_SEED)
    spec = SpinChainSpec(L=3, xi=xi, c=1.0)
    return spec, spec.model()


@pytest.fixture()
def rng():
    return np.random.default_rng(RNG_SEED)


def vacuum_state(model):
    return BetheState(RootConfig((), ()), Twist.identity(), (), 0.0, model)


def make_state(model, u, v, twist=None):
    """Wrap raw roots without solving; tests use this for synthetic inputs."""
    return BetheState(RootConfig(tuple(u), tuple(v)),
                      twist or Twist.identity(), (0,) * (len(u) + len(v)),
                      0.0, model)


@pytest.fixture(scope="session")
def homog2():
    return xxx_chain(2, (0.0, 0.0), 1.0)
