"""JSON reading and writing for instances, track sets and reports.

Rationals travel as "p/q" strings ("p" for integers).  Output is written
with sorted keys and a fixed indent so reruns give byte-identical files.
"""

import json
import logging
import math
from enum import Enum
from fractions import Fraction

from dyntomo.errors import InputError, InstanceFormatError
from dyntomo.geometry import LatticeDirection, XRayData, format_rational, point, to_rational
from dyntomo.models import (DisplacementField, TomographyInstance, TrackSet, WeightKind, WeightModel,
                            WindowConstraint)
from dyntomo.norms import NormSpec
from jobs.jobs_config import FORMAT_VERSION

logger = logging.getLogger(__name__)


def to_jsonable(value):
    """Recursively turn Fractions, points, enums and int-keyed dicts into JSON types."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, float):
        return "inf" if math.isinf(value) else value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    if isinstance(value, int):
        return value
    return str(value)


def _point_out(p):
    return [format_rational(c) for c in p]


def parse_point(raw, field):
    if not isinstance(raw, list):
        raise InstanceFormatError("expected a list of rational strings", field=field)
    try:
        return point(*raw)
    except InstanceFormatError as e:
        raise InstanceFormatError(str(e), field=field)


def _rational_in(raw, field):
    if raw == "inf":
        return math.inf
    try:
        return to_rational(raw)
    except InstanceFormatError as e:
        raise InstanceFormatError(str(e), field=field)


def _require(doc, key, field=None):
    if not isinstance(doc, dict) or key not in doc:
        raise InstanceFormatError(f"missing required key {key!r}", field=field or key)
    return doc[key]


def _frame_keyed(raw, field):
    if not isinstance(raw, dict):
        raise InstanceFormatError("expected an object keyed by frame index", field=field)
    try:
        return {int(k): v for k, v in raw.items()}
    except ValueError:
        raise InstanceFormatError("frame keys must be integers", field=field)


def instance_to_dict(instance: TomographyInstance) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "dim": instance.dim,
        "directions": [list(s.vector) for s in instance.directions],
        "frames": [[[{"anchor": _point_out(a), "count": f.lines[a]} for a in f.anchors()] for f in frame]
                   for frame in instance.frames],
    }
    if instance.known_positions:
        doc["known_positions"] = {str(tau): [_point_out(p) for p in pts]
                                  for tau, pts in sorted(instance.known_positions.items())}
    field = instance.displacement
    if field is not None:
        disp = {}
        if field.is_affine:
            disp["matrix"] = [[format_rational(v) for v in row] for row in field.matrix]
            disp["translation"] = [format_rational(v) for v in field.translation]
        if field.tables:
            disp["tables"] = {str(tau): [[_point_out(p), _point_out(q)] for p, q in sorted(table.items())]
                              for tau, table in sorted(field.tables.items())}
        doc["displacement"] = disp
    if instance.windows:
        doc["windows"] = {str(tau): [{"window": sorted(c.window), "relation": c.relation, "bound": c.bound}
                                     for c in cs] for tau, cs in sorted(instance.windows.items())}
    weights = instance.weights
    doc["weights"] = {"kind": weights.kind.value, "norm": str(weights.norm)}
    if weights.tables:
        doc["weights"]["tables"] = {str(tau): to_jsonable(m) for tau, m in sorted(weights.tables.items())}
    if weights.path_values:
        doc["weights"]["paths"] = [{"path": [_point_out(p) for p in path], "value": format_rational(v)}
                                   for path, v in sorted(weights.path_values.items())]
    return doc


def _expect(raw, kind, field):
    """Return raw when it is a JSON list or object as required."""
    if not isinstance(raw, kind):
        expected = "a list" if kind is list else "an object"
        raise InstanceFormatError(f"expected {expected}, got {type(raw).__name__}", field=field)
    return raw


def _integer(raw, field):
    if not isinstance(raw, int) or isinstance(raw, bool):
        raise InstanceFormatError("expected an integer", field=field)
    return raw


def instance_from_dict(doc: dict) -> TomographyInstance:
    """Decode an instance document.

    Raises:
        InstanceFormatError: naming the offending field
    """
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    raw_dirs = _expect(_require(doc, "directions"), list, "directions")
    try:
        directions = tuple(LatticeDirection(tuple(v)) for v in raw_dirs)
    except (TypeError, ValueError) as e:
        raise InstanceFormatError(str(e), field="directions")
    if "dim" in doc and any(s.dim != doc["dim"] for s in directions):
        raise InstanceFormatError(f"directions do not have dimension {doc['dim']}", field="dim")

    frames = []
    for tau, raw_frame in enumerate(_expect(_require(doc, "frames"), list, "frames")):
        _expect(raw_frame, list, f"frames[{tau}]")
        if len(raw_frame) != len(directions):
            raise InstanceFormatError(f"expected {len(directions)} X-rays", field=f"frames[{tau}]")
        xrays = []
        for k, raw_lines in enumerate(raw_frame):
            lines = {}
            for m, entry in enumerate(_expect(raw_lines, list, f"frames[{tau}][{k}]")):
                where = f"frames[{tau}][{k}][{m}]"
                anchor = parse_point(_require(entry, "anchor", where), where + ".anchor")
                lines[anchor] = _integer(_require(entry, "count", where), where + ".count")
            try:
                xrays.append(XRayData(directions[k], lines, k))
            except ValueError as e:
                raise InstanceFormatError(str(e), field=f"frames[{tau}][{k}]")
        frames.append(tuple(xrays))

    known = {}
    for tau, pts in _frame_keyed(doc.get("known_positions", {}), "known_positions").items():
        where = f"known_positions.{tau}"
        known[tau] = [parse_point(p, f"{where}[{m}]") for m, p in enumerate(_expect(pts, list, where))]

    displacement = None
    if doc.get("displacement"):
        raw = _expect(doc["displacement"], dict, "displacement")
        matrix = raw.get("matrix")
        if matrix is not None:
            matrix = [parse_point(row, f"displacement.matrix[{r}]")
                      for r, row in enumerate(_expect(matrix, list, "displacement.matrix"))]
        translation = raw.get("translation")
        if translation is not None:
            translation = parse_point(translation, "displacement.translation")
        tables = {}
        for tau, pairs in _frame_keyed(raw.get("tables", {}), "displacement.tables").items():
            where = f"displacement.tables.{tau}"
            table = {}
            for m, pair in enumerate(_expect(pairs, list, where)):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise InstanceFormatError("expected a [point, image] pair", field=f"{where}[{m}]")
                table[parse_point(pair[0], f"{where}[{m}]")] = parse_point(pair[1], f"{where}[{m}]")
            tables[tau] = table
        try:
            displacement = DisplacementField(matrix, translation, tables)
        except InputError as e:
            raise InstanceFormatError(str(e), field="displacement")

    windows = {}
    for tau, raw_windows in _frame_keyed(doc.get("windows", {}), "windows").items():
        windows[tau] = []
        for m, entry in enumerate(_expect(raw_windows, list, f"windows.{tau}")):
            where = f"windows.{tau}[{m}]"
            cells = _expect(_require(entry, "window", where), list, where + ".window")
            cells = frozenset(_integer(c, where + ".window") for c in cells)
            relation = _require(entry, "relation", where)
            bound = _integer(_require(entry, "bound", where), where + ".bound")
            try:
                windows[tau].append(WindowConstraint(tau, cells, relation, bound))
            except InputError as e:
                raise InstanceFormatError(str(e), field=where)

    raw_weights = _expect(doc.get("weights", {}), dict, "weights")
    try:
        kind = WeightKind(raw_weights.get("kind", WeightKind.SQUARED_EUCLIDEAN.value))
    except ValueError:
        raise InstanceFormatError(f"unknown weight kind {raw_weights.get('kind')!r}", field="weights.kind")
    tables = {}
    for tau, matrix in _frame_keyed(raw_weights.get("tables", {}), "weights.tables").items():
        where = f"weights.tables.{tau}"
        tables[tau] = [[_rational_in(v, where) for v in _expect(row, list, f"{where}[{r}]")]
                       for r, row in enumerate(_expect(matrix, list, where))]
    path_values = {}
    for m, entry in enumerate(_expect(raw_weights.get("paths", []), list, "weights.paths")):
        where = f"weights.paths[{m}]"
        path = tuple(parse_point(p, where + ".path") for p in _expect(_require(entry, "path", where), list,
                                                                     where + ".path"))
        path_values[path] = _rational_in(_require(entry, "value", where), where + ".value")
    raw_norm = raw_weights.get("norm")
    if raw_norm is not None and not isinstance(raw_norm, str):
        raise InstanceFormatError("norm must be a string", field="weights.norm")
    try:
        norm = NormSpec.parse(raw_norm)
    except InputError as e:
        raise InstanceFormatError(str(e), field="weights.norm")
    weights = WeightModel(kind, tables, norm, path_values)

    return TomographyInstance(directions, frames, known, displacement, weights, windows)


def trackset_to_dict(result: TrackSet) -> dict:
    objective = result.objective
    return {
        "version": FORMAT_VERSION,
        "status": result.status,
        "objective": to_jsonable(objective),
        "tracks": [[_point_out(p) for p in path] for path in result.paths()],
        "diagnostics": to_jsonable(result.diagnostics),
    }


def trackset_from_dict(doc: dict) -> TrackSet:
    raw_tracks = _expect(_require(doc, "tracks"), list, "tracks")
    paths = [tuple(parse_point(p, f"tracks[{m}]") for p in _expect(track, list, f"tracks[{m}]"))
             for m, track in enumerate(raw_tracks)]
    if len({len(p) for p in paths}) > 1:
        raise InstanceFormatError("tracks differ in length", field="tracks")
    objective = doc.get("objective")
    objective = _rational_in(objective, "objective") if objective is not None else None
    return TrackSet.from_paths(paths, objective=objective, status=doc.get("status", "ok"),
                               diagnostics=_expect(doc.get("diagnostics", {}), dict, "diagnostics"))


def dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path, doc: dict):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump(doc))
    logger.debug("wrote %s", path)


def read_json(path) -> dict:
    """Load a JSON document; decode errors carry the line number."""
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}", path=str(path))
    except OSError as e:
        raise InstanceFormatError(f"cannot read file: {e.strerror}", path=str(path))


def load_instance(path) -> TomographyInstance:
    doc = read_json(path)
    try:
        return instance_from_dict(doc)
    except InstanceFormatError as e:
        if e.path is None:
            raise InstanceFormatError(e.message, field=e.field, path=str(path))
        raise


def save_instance(path, instance: TomographyInstance):
    write_json(path, instance_to_dict(instance))


def load_tracks(path) -> TrackSet:
    return trackset_from_dict(read_json(path))


def save_tracks(path, result: TrackSet):
    write_json(path, trackset_to_dict(result))
