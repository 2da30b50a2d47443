import hypothesis
import numpy as np
import pytest

from fcpdc import FC_PRESET, PDC_PRESET, FrequencyGrid, ZGrid, default_grid

hypothesis.settings.register_profile(
    "default", max_examples=50, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def fc_spec():
    return FC_PRESET


@pytest.fixture(scope="session")
def pdc_spec():
    return PDC_PRESET


@pytest.fixture(scope="session")
def small_grid(fc_spec):
    return default_grid(fc_spec, 48)


@pytest.fixture(scope="session")
def small_zgrid(fc_spec):
    return ZGrid(49, fc_spec.length)


def trapezoid_weights(m, step):
    w = np.full(m, step)
    w[0] = w[-1] = step / 2
    return w
