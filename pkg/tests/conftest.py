import numpy as np
import pytest

from nesskit.device import DeviceProfile, ReservoirState, SystemConfig


def pytest_addoption(parser):
    parser.addoption(
        "--full", action="store_true", default=False,
        help="run the long transient acceptance criteria (minutes)")


def random_device(rng, *, step_leads=True, v_int_range=(-1.5, 2.5),
                  width_range=(0.5, 2.0), max_segments=4):
    """Random but numerically tame device for property tests.

    Interior evanescent depth is kept moderate (kappa * width <~ 9) so
    that transfer-matrix conditioning stays well below the tolerances
    the invariants are checked at.
    """
    a = rng.uniform(-1.0, 1.0)
    b = a + rng.uniform(*width_range)
    v_b = rng.uniform(-1.0, 0.5)
    v_a = v_b + (rng.uniform(0.0, 1.5) if step_leads and rng.random() < 0.6 else 0.0)
    k = rng.integers(1, max_segments + 1)
    cuts = np.sort(rng.uniform(a, b, size=k - 1))
    breakpoints = (a, *cuts, b)
    return DeviceProfile(
        a=a, b=b,
        m_a=rng.uniform(0.5, 2.0), m_b=rng.uniform(0.5, 2.0),
        v_a=v_a, v_b=v_b,
        breakpoints=breakpoints,
        masses=tuple(rng.uniform(0.5, 2.0, size=k)),
        potentials=tuple(rng.uniform(*v_int_range, size=k)))


def biased_config(rng, **device_kwargs):
    """Random device plus reservoirs with a definite bias mu_a > mu_b."""
    device = random_device(rng, **device_kwargs)
    mu_b = rng.uniform(-0.5, 0.5)
    mu_a = mu_b + rng.uniform(0.5, 2.0)
    beta = rng.uniform(0.8, 2.0)
    return SystemConfig(
        device=device,
        reservoir_left=ReservoirState(beta=beta, mu=mu_a, c=rng.uniform(0.5, 2.0)),
        reservoir_well=ReservoirState(beta=beta, mu=0.5 * (mu_a + mu_b)),
        reservoir_right=ReservoirState(beta=beta, mu=mu_b, c=rng.uniform(0.5, 2.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
