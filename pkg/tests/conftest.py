import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wpcn import ScenarioConfig, generate_scenario
from wpcn.verify import load_smoke_config

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def smoke_config() -> ScenarioConfig:
    return load_smoke_config()


@pytest.fixture(scope="session")
def smoke_scenario(smoke_config):
    return generate_scenario(smoke_config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
