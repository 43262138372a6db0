from fractions import Fraction as F

import numpy as np
import pytest

from conftest import pts
from dyntomo import fitting, static, tracking
from dyntomo.errors import InputError
from dyntomo.fitting import SampleFitFamily
from dyntomo.geometry import COORDINATE_DIRECTIONS, point, xray
from jobs.evaluate import evaluate
from jobs.simulate import (THIRD_DIRECTION, Scenario, adversarial_instance, generate, instance_from_tracks,
                           reduction_instance)

KINKED = [(point(0, 0), point(2, "9/10"), point(4, 0)), (point(0, 2), point(2, "11/10"), point(4, 2))]


def test_instance_from_tracks_reproduces_xrays():
    instance, truth = instance_from_tracks(KINKED, known_frames=[0, 1, 2])
    assert instance.positionally_determined
    assert truth.objective == F(481, 25)
    for tau, frame in enumerate(truth.frames):
        assert instance.realizes(tau, frame)


def test_instance_from_tracks_rejects_collisions():
    with pytest.raises(InputError):
        instance_from_tracks([(point(0, 0), point(1, 1)), (point(2, 2), point(1, 1))])


def test_static_single_particle():
    instance, truth = generate(Scenario(1, t=3, motion="static", seed=4))
    assert len(set(truth.paths()[0])) == 1
    result = tracking.tomtrac_ilp(instance)
    assert result.objective == 0
    assert result.paths() == truth.paths()


def test_generation_is_deterministic():
    scenario = Scenario(3, t=3, motion="straight-line", seed=11, box=6)
    first, truth_a = generate(scenario)
    second, truth_b = generate(Scenario(3, t=3, motion="straight-line", seed=11, box=6))
    assert first.frames == second.frames
    assert truth_a.paths() == truth_b.paths()
    other, _ = generate(Scenario(3, t=3, motion="straight-line", seed=12, box=6))
    assert other.frames != first.frames or other.known_positions != first.known_positions


def test_straight_tracks_stay_in_box():
    _, truth = generate(Scenario(4, t=4, motion="straight-line", seed=2, box=5, speed=1))
    assert all(abs(c) <= 5 for path in truth.paths() for p in path for c in p)


def test_polynomial_tracks_have_requested_degree():
    _, truth = generate(Scenario(2, t=5, motion="polynomial", seed=3, degree=2))
    for path in truth.paths():
        curve = SampleFitFamily(3).fit(list(enumerate(path))[:3])
        assert [curve(tau) for tau in range(5)] == list(path)


def test_crossing_pairs_meet_between_frames():
    _, truth = generate(Scenario(2, t=3, motion="crossing", seed=8))
    a, b = truth.paths()
    midpoint = [tuple((x + y) / 2 for x, y in zip(path[0], path[1])) for path in (a, b)]
    assert midpoint[0] == midpoint[1]


def test_affine_scenario_follows_its_field():
    instance, truth = generate(Scenario(2, t=3, motion="affine-field", seed=1))
    field = instance.displacement
    assert field is not None and field.is_proper(instance.directions)
    for path in truth.paths():
        assert [field.apply(tau, path[tau]) for tau in range(2)] == list(path[1:])
    result = tracking.tomdisplacetrac(instance)
    assert result.validate(instance)


@pytest.mark.parametrize("kwargs", [
    {"n": 10, "box": 1},
    {"n": 2, "motion": "teleport"},
    {"n": 2, "seed": -1},
    {"n": 2, "t": 3, "known_frames": (5,)},
])
def test_scenario_validation(kwargs):
    with pytest.raises(InputError):
        Scenario(**kwargs)


def test_reduction_detects_inconsistent_triple():
    pair = pts((0, 0), (1, 1))
    f1, f2 = (xray(pair, s, k) for k, s in enumerate(COORDINATE_DIRECTIONS))
    f3 = xray(pts((0, 0), (0, 1)), THIRD_DIRECTION)
    assert static.consistent_brute_force([f1, f2, f3]) is None
    instance = reduction_instance(f1, f2, f3)
    assert tracking.tomtrac_ilp(instance).objective > 0


def test_reduction_needs_unit_counts():
    pair = pts((0, 0), (1, 1))
    f1, f2, f3 = xray(pair, COORDINATE_DIRECTIONS[0], 0), xray(pair, COORDINATE_DIRECTIONS[1], 1), \
        xray(pair, THIRD_DIRECTION)
    with pytest.raises(InputError):
        reduction_instance(f1, f2, f3)


def test_adversarial_truth_has_zero_cost():
    instance, truth = adversarial_instance(3, seed=5)
    assert truth.objective == 0
    assert tracking.tomtrac_ilp(instance).objective == 0
    via_scenario, _ = generate(Scenario(3, motion="adversarial", seed=5, box=3, t=2))
    assert via_scenario.frames == instance.frames


def midpoints_are_unambiguous(truth):
    """No wrong endpoint pair has its frame-1 midpoint on a true frame-1 point."""
    middle = set(truth.frames[1])
    paths = truth.paths()
    for i, a in enumerate(paths):
        for j, b in enumerate(paths):
            if i != j and tuple((x + y) / 2 for x, y in zip(a[0], b[2])) in middle:
                return False
    return True


def seeded_scenarios(motion, count, low, high):
    rng = np.random.default_rng(len(motion))
    seed = 0
    while count:
        seed += 1
        assert seed < 500, "too many ambiguous scenarios"
        instance, truth = generate(Scenario(int(rng.integers(low, high + 1)), t=3, motion=motion, seed=seed,
                                            known_frames=(0, 1, 2)))
        if midpoints_are_unambiguous(truth):
            count -= 1
            yield instance, truth


def test_path_fitting_recovers_straight_tracks():
    for instance, truth in seeded_scenarios("straight-line", 50, 2, 10):
        result = fitting.tomographic_path_fitting(instance, SampleFitFamily(2))
        assert result.validate(instance)
        assert evaluate(result, truth).edge_accuracy == 1


def test_path_fitting_beats_rolling_horizon_on_crossings():
    rolling_missed = 0
    for instance, truth in seeded_scenarios("crossing", 50, 2, 8):
        fitted = evaluate(fitting.tomographic_path_fitting(instance, SampleFitFamily(2)), truth)
        rolling = evaluate(tracking.rolling_horizon(instance), truth)
        assert fitted.edge_accuracy >= rolling.edge_accuracy
        rolling_missed += rolling.edge_accuracy < 1
    assert rolling_missed > 0
