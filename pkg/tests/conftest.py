import pytest
from hypothesis import HealthCheck, settings

from metric_frames.metric_core import from_points

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def line3():
    return from_points([[0.0], [1.0], [3.0]])
