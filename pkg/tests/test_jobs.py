import json
from fractions import Fraction as F

import pytest

from conftest import pts
from dyntomo import tracking
from dyntomo.errors import BudgetExhaustedError, InputError, InstanceFormatError
from dyntomo.geometry import COORDINATE_DIRECTIONS, XRayData, point
from dyntomo.models import TomographyInstance, TrackSet, WeightKind, WeightModel, WindowConstraint
from dyntomo.solver import FORBIDDEN
from jobs import tomo_cli
from jobs.evaluate import evaluate
from jobs.instance_io import (instance_from_dict, instance_to_dict, load_instance, load_tracks, save_instance,
                              trackset_from_dict, trackset_to_dict)
from jobs.jobs_config import EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, PLOT_DIV_ID


@pytest.fixture
def grid1_file(tmp_path, grid1):
    path = tmp_path / "grid1.json"
    save_instance(path, grid1)
    return str(path)


def test_instance_document_keeps_everything(grid1_truth):
    weights = WeightModel(WeightKind.EXPLICIT, {0: [[FORBIDDEN, 1, F(1, 2)]] * 3})
    instance = TomographyInstance.from_point_sets(
        grid1_truth, known=[0], weights=weights, windows={1: [WindowConstraint(1, {0, 3}, "=", 0)]})
    doc = json.loads(json.dumps(instance_to_dict(instance)))
    assert doc["weights"]["tables"]["0"][0] == ["inf", 1, "1/2"]
    decoded = instance_from_dict(doc)
    assert decoded.frames == instance.frames
    assert decoded.known_positions == instance.known_positions
    assert decoded.windows == instance.windows
    assert decoded.weights.tables == instance.weights.tables


def test_trackset_document():
    result = TrackSet.from_paths([(point(1, 0), point("1/2", 2))], objective=F(7, 3), diagnostics={"nodes": 4})
    doc = trackset_to_dict(result)
    assert doc["objective"] == "7/3"
    assert doc["tracks"] == [[["1", "0"], ["1/2", "2"]]]
    assert trackset_from_dict(doc).paths() == result.paths()


@pytest.mark.parametrize("mutate, field", [
    (lambda doc: doc.pop("frames"), "frames"),
    (lambda doc: doc["frames"][0][0][0].update(anchor=["x", "0"]), "frames[0][0][0].anchor"),
    (lambda doc: doc["frames"][0][1][0].update(count="2"), "frames[0][1][0].count"),
    (lambda doc: doc["weights"].update(kind="gravity"), "weights.kind"),
    (lambda doc: doc.update(frames=[5]), "frames[0]"),
    (lambda doc: doc.update(frames={"0": []}), "frames"),
    (lambda doc: doc.update(weights=[]), "weights"),
    (lambda doc: doc["weights"].update(norm=2), "weights.norm"),
    (lambda doc: doc.update(displacement=[["1", "0"], ["0", "1"]]), "displacement"),
    (lambda doc: doc.update(displacement={"matrix": [["1", "0"], ["0", "0"]]}), "displacement"),
    (lambda doc: doc.update(windows={"1": [{"window": [0, 3], "relation": "=", "bound": "2"}]}), "windows.1[0].bound"),
    (lambda doc: doc.update(windows={"1": [{"window": [0], "relation": "<", "bound": 0}]}), "windows.1[0]"),
    (lambda doc: doc.update(windows={"1": {"window": [0]}}), "windows.1"),
    (lambda doc: doc.update(known_positions={"0": "origin"}), "known_positions.0"),
])
def test_format_errors_name_the_field(grid1, mutate, field):
    doc = instance_to_dict(grid1)
    mutate(doc)
    with pytest.raises(InstanceFormatError) as excinfo:
        instance_from_dict(doc)
    assert excinfo.value.field == field
    assert field in str(excinfo.value)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "frames": [\n')
    with pytest.raises(InstanceFormatError) as excinfo:
        load_instance(path)
    assert "line" in str(excinfo.value)


def two_particle_truth():
    return TrackSet.from_paths([(point(0, 0), point(1, 0)), (point(0, 1), point(1, 1))], objective=2)


def test_evaluate_counts_edges_and_frames():
    truth = two_particle_truth()
    swapped = TrackSet.from_paths([(point(0, 0), point(1, 1)), (point(0, 1), point(1, 0))], objective=4)
    report = evaluate(swapped, truth, oracle_objective=2)
    assert report.edge_accuracy == 0
    assert report.frame_accuracy == [1, 1]
    assert report.objective_gap == 2
    table = report.frame_table()
    assert list(table.columns) == ["tau", "correct", "n", "accuracy"]
    assert table["correct"].tolist() == [2, 2]
    assert evaluate(truth, truth).edge_accuracy == 1


def test_evaluate_rejects_shape_mismatch():
    with pytest.raises(InputError):
        evaluate(TrackSet.from_paths([(point(0, 0),)]), two_particle_truth())


def test_report_csv(tmp_path):
    report = evaluate(two_particle_truth(), two_particle_truth())
    path = tmp_path / "report.csv"
    report.write(path)
    assert path.read_text().splitlines()[0] == "tau,correct,n,accuracy"


def test_cli_simulate_and_track(tmp_path):
    inst, truth, out = (str(tmp_path / name) for name in ("inst.json", "truth.json", "tracks.json"))
    assert tomo_cli.main(["simulate", "--motion", "straight-line", "--n", "2", "--t", "3", "--seed", "3",
                          "--box", "5", "--known-frames", "0,1,2", "--out", inst, "--truth", truth]) == EXIT_OK
    assert tomo_cli.main(["track", inst, "--algo", "markov", "--out", out]) == EXIT_OK
    assert load_tracks(out).validate(load_instance(inst))


def test_cli_rolling_gap_against_ilp(tmp_path, grid1_file):
    rolling, ilp, report = (str(tmp_path / name) for name in ("rolling.json", "ilp.json", "report.json"))
    assert tomo_cli.main(["track", grid1_file, "--algo", "rolling", "--out", rolling]) == EXIT_OK
    assert tomo_cli.main(["track", grid1_file, "--algo", "ilp", "--out", ilp]) == EXIT_OK
    assert tomo_cli.main(["eval", rolling, ilp, "--oracle", ilp, "--out", report]) == EXIT_OK
    doc = json.loads(open(report).read())
    assert F(doc["objective_gap"]) > 0


def test_cli_track_is_deterministic(tmp_path, grid1_file):
    first, second = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    tomo_cli.main(["track", grid1_file, "--algo", "ilp", "--out", first])
    tomo_cli.main(["track", grid1_file, "--algo", "ilp", "--out", second])
    assert open(first, "rb").read() == open(second, "rb").read()


def test_cli_mass_mismatch_is_input_error(tmp_path, grid1):
    doc = instance_to_dict(grid1)
    doc["frames"][1][0][0]["count"] += 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert tomo_cli.main(["reconstruct", str(path)]) == EXIT_INPUT


def test_cli_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert tomo_cli.main(["track", str(path)]) == EXIT_INPUT


def test_cli_infeasible_frame(tmp_path):
    frame = (XRayData(COORDINATE_DIRECTIONS[0], {point(0, 0): 2}, 0),
             XRayData(COORDINATE_DIRECTIONS[1], {point(0, 0): 2}, 1))
    path = tmp_path / "infeasible.json"
    save_instance(path, TomographyInstance(COORDINATE_DIRECTIONS, [frame]))
    assert tomo_cli.main(["reconstruct", str(path)]) == EXIT_INFEASIBLE


def test_cli_budget_exhausted(monkeypatch, grid1_file):
    def exhausted(instance, node_budget=None):
        raise BudgetExhaustedError("branch-and-bound stopped after 1 nodes")

    monkeypatch.setattr(tracking, "tomtrac_ilp", exhausted)
    assert tomo_cli.main(["track", grid1_file, "--algo", "ilp", "--budget", "1"]) == EXIT_BUDGET


def test_cli_without_command():
    assert tomo_cli.main([]) == EXIT_INPUT


def test_cli_xray_and_reconstruct(tmp_path):
    points, inst, frames = (tmp_path / name for name in ("points.json", "inst.json", "frames.json"))
    points.write_text(json.dumps({"frames": [[["0", "0"], ["1", "1"]], [["2", "0"], ["0", "2"]]]}))
    assert tomo_cli.main(["xray", str(points), "--known-frames", "0", "--out", str(inst)]) == EXIT_OK
    instance = load_instance(inst)
    assert instance.n == 2 and instance.t == 2
    assert instance.known_positions == {0: pts((0, 0), (1, 1))}
    assert tomo_cli.main(["reconstruct", str(inst), "--count", "--out", str(frames)]) == EXIT_OK
    doc = json.loads(frames.read_text())
    assert doc["count"] == [2, 2]
    assert doc["unique"] == [False, False]


def test_cli_windows(tmp_path, grid1_truth):
    instance = TomographyInstance.from_point_sets(grid1_truth, known=[0],
                                                  windows={1: [WindowConstraint(1, {0, 3}, "=", 0)]})
    inst, out = tmp_path / "win.json", tmp_path / "win_out.json"
    save_instance(inst, instance)
    assert tomo_cli.main(["windows", str(inst), "--algo", "ilp", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["frames"]["1"]["class"] == "tu-orthogonal"
    assert ["10", "0"] in doc["frames"]["1"]["points"]


def test_cli_plot_html(tmp_path, grid1_file):
    out = tmp_path / "plot.html"
    assert tomo_cli.main(["plot", grid1_file, "--out", str(out)]) == EXIT_OK
    assert PLOT_DIV_ID in out.read_text()


def test_cli_two_way_round_cap(tmp_path, switching):
    inst, out = tmp_path / "switching.json", tmp_path / "twoway.json"
    save_instance(inst, switching)
    assert tomo_cli.main(["track", str(inst), "--algo", "twoway", "--max-rounds", "1", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["status"] == "iteration_cap"


def test_cli_enumeration_bound(tmp_path, switching):
    inst = tmp_path / "switching.json"
    save_instance(inst, switching)
    assert tomo_cli.main(["reconstruct", str(inst), "--count", "--enum-bound", "2"]) == EXIT_INPUT


@pytest.mark.parametrize("mutate", [
    lambda doc: doc.update(weights=[]),
    lambda doc: doc.update(frames=[5]),
    lambda doc: doc.update(windows={"1": [{"window": [0, 3], "relation": "=", "bound": "2"}]}),
])
def test_cli_malformed_fields_are_input_errors(tmp_path, grid1, mutate):
    doc = instance_to_dict(grid1)
    mutate(doc)
    path = tmp_path / "malformed.json"
    path.write_text(json.dumps(doc))
    assert tomo_cli.main(["reconstruct", str(path)]) == EXIT_INPUT
    assert tomo_cli.main(["track", str(path), "--algo", "markov"]) == EXIT_INPUT


@pytest.mark.parametrize("bound", ["fast", "-1", "1/0"])
def test_cli_rejects_bad_speed_bound(tmp_path, switching, bound):
    inst = tmp_path / "switching.json"
    save_instance(inst, switching)
    assert tomo_cli.main(["track", str(inst), "--algo", "twoway", f"--speed-bound={bound}"]) == EXIT_INPUT


def test_cli_accepts_rational_speed_bound(tmp_path, switching):
    inst, out = tmp_path / "switching.json", tmp_path / "twoway.json"
    save_instance(inst, switching)
    assert tomo_cli.main(["track", str(inst), "--algo", "twoway", "--speed-bound", "3/2",
                          "--out", str(out)]) == EXIT_OK
    assert load_tracks(out).validate(switching)


def test_cli_point_file_must_hold_point_lists(tmp_path):
    points, inst = tmp_path / "points.json", tmp_path / "inst.json"
    points.write_text(json.dumps({"frames": [5]}))
    assert tomo_cli.main(["xray", str(points), "--out", str(inst)]) == EXIT_INPUT
