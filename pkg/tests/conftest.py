from importlib import resources
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def scenario_path(name: str) -> Path:
    return Path(str(resources.files("redcap_dim") / "scenarios" / f"{name}.json"))


@pytest.fixture
def fr1_path():
    return scenario_path("fr1_urban_micro")


@pytest.fixture
def fr2_path():
    return scenario_path("fr2_indoor")
