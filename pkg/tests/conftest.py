import os

import pytest

os.environ.setdefault("DYNTOMO_ENV", "testing")

from dyntomo.geometry import COORDINATE_DIRECTIONS, point  # noqa: E402
from dyntomo.models import TomographyInstance, WeightKind, WeightModel  # noqa: E402
from dyntomo.norms import NormSpec  # noqa: E402


def pts(*coords):
    return sorted(point(*c) for c in coords)


class SquaredMax(NormSpec):
    """The max-norm under h(x) = x^2, a strictly increasing change of h."""

    def h_length(self, vector):
        return super().h_length(vector) ** 2


@pytest.fixture
def grid1_truth():
    return [pts(("1/2", "1/2"), (5, 10), (10, 5)), pts((0, 0), (10, 1), (1, 10))]


@pytest.fixture
def grid1(grid1_truth):
    """Known first frame, three particles, nine-point grid {0,1,10}^2 at frame 1."""
    return TomographyInstance.from_point_sets(grid1_truth, COORDINATE_DIRECTIONS, known=[0],
                                              weights=WeightModel(WeightKind.SQUARED_EUCLIDEAN))


@pytest.fixture
def nohistory_frames():
    return [pts((0, 0), (0, 2)), pts((2, "9/10"), (2, "11/10")), pts((4, 0), (4, 2))]


@pytest.fixture
def nohistory(nohistory_frames):
    """Two particles, all three frames known; crossing vs bouncing ambiguity."""
    return TomographyInstance.from_point_sets(nohistory_frames, known=[0, 1, 2])


@pytest.fixture
def nohistory_triangle(nohistory_frames):
    return TomographyInstance.from_point_sets(nohistory_frames, known=[0, 1, 2],
                                              weights=WeightModel(WeightKind.TRIANGLE_AREA))


@pytest.fixture
def switching():
    """Middle frame has a 2x2 switching pair; the outer frames are known."""
    frames = [pts((0, 0), (6, 6)), pts((1, 3), (4, 2)), pts((2, -2), (2, 6))]
    return TomographyInstance.from_point_sets(frames, known=[0, 2])
