"""Scoring reconstructed tracks against ground truth."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

import pandas as pd

from dyntomo.errors import InputError
from dyntomo.models import TrackSet
from jobs.instance_io import dump, to_jsonable

logger = logging.getLogger(__name__)


@dataclass
class EvalReport:
    """Accuracy of a result against the truth.

    Edges and frames are compared as sets, so track labels never matter.
    """
    edge_accuracy: Fraction
    frame_accuracy: List[Fraction]
    objective: Optional[object] = None
    objective_gap: Optional[object] = None
    runtimes: Dict[str, float] = field(default_factory=dict)
    correct_points: List[int] = field(default_factory=list)
    n: int = 0

    def frame_table(self) -> pd.DataFrame:
        return pd.DataFrame({
            "tau": list(range(len(self.frame_accuracy))),
            "correct": self.correct_points,
            "n": [self.n] * len(self.frame_accuracy),
            "accuracy": [float(a) for a in self.frame_accuracy],
        })

    def to_dict(self) -> dict:
        return to_jsonable({
            "edge_accuracy": self.edge_accuracy,
            "frame_accuracy": self.frame_accuracy,
            "objective": self.objective,
            "objective_gap": self.objective_gap,
            "runtimes": {k: round(v, 6) for k, v in sorted(self.runtimes.items())},
        })

    def write(self, path):
        """Write the report as JSON, or the per-frame table when path ends in .csv."""
        path = str(path)
        if path.endswith(".csv"):
            self.frame_table().to_csv(path, index=False)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(dump(self.to_dict()))


def evaluate(result: TrackSet, truth: TrackSet, oracle_objective=None,
             runtimes: Optional[Dict[str, float]] = None) -> EvalReport:
    """Compare a result with the ground truth.

    Args:
        oracle_objective: optimum of the same instance, when an exact solver ran;
            the gap is the result's objective minus it

    Raises:
        InputError: if the two track sets differ in n or t
    """
    if result.n != truth.n or result.t != truth.t:
        raise InputError(f"cannot compare a {result.n}x{result.t} result with a {truth.n}x{truth.t} truth")
    truth_edges = truth.edges()
    if truth_edges:
        edge_accuracy = Fraction(len(result.edges() & truth_edges), len(truth_edges))
    else:
        edge_accuracy = Fraction(1)
    correct = [len(set(a) & set(b)) for a, b in zip(result.frames, truth.frames)]
    frame_accuracy = [Fraction(c, truth.n) if truth.n else Fraction(1) for c in correct]
    gap = None
    if oracle_objective is not None and result.objective is not None:
        gap = result.objective - oracle_objective
        if gap < 0:
            logger.warning("result objective %s is below the oracle optimum %s", result.objective, oracle_objective)
    report = EvalReport(edge_accuracy, frame_accuracy, result.objective, gap, dict(runtimes or {}), correct, truth.n)
    logger.info("edge accuracy %s, frame accuracy %s", edge_accuracy, [str(a) for a in frame_accuracy])
    return report
