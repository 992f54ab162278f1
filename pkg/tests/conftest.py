import math

import pytest
from hypothesis import settings

from inls.coefficient import ProblemParams, PurePower
from inls.groundstate import build_ground_state

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

B_SET = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2)
GRAD_B1 = 8 * math.pi / 3
THRESHOLD_B1 = 2 * math.pi / 3


@pytest.fixture(scope="session")
def params1():
    return ProblemParams(1.0)


@pytest.fixture(scope="session")
def gs1(params1):
    return build_ground_state(params1)


@pytest.fixture(scope="session")
def pure1():
    return PurePower(1.0)
