import math

import pytest

from humps.weight import sine_weight, stepwise_weight

STEPS = [(0, 1, 1), (1, 2, -2), (2, 2.5, 0), (2.5, 3, 2)]


@pytest.fixture
def sine():
    return sine_weight(2 * math.pi, periodic=True)


@pytest.fixture
def steps():
    return stepwise_weight(STEPS)
