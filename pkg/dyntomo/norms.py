"""Norm/transform pairs whose transformed distances stay rational."""

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from dyntomo.errors import InputError
from dyntomo.geometry import sub


@dataclass(frozen=True)
class NormSpec:
    """A norm together with a strictly increasing h making h(|x|) rational.

    euclid2 -> (euclidean, squaring), max -> (max-norm, identity),
    p:<int> -> (p-norm, p-th power).
    """
    kind: str = "euclid2"
    p: int = 2

    def __post_init__(self):
        if self.kind not in ("euclid2", "max", "p"):
            raise InputError(f"unknown norm {self.kind!r}")
        if self.kind == "p" and self.p < 1:
            raise InputError(f"p-norm needs p >= 1, got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """Parse the CLI spelling: euclid2, max or p:<int>."""
        text = (text or "euclid2").strip().lower()
        if text in ("euclid2", "euclid", "euclidean", "l2"):
            return cls("euclid2", 2)
        if text in ("max", "inf", "linf"):
            return cls("max", 1)
        if text.startswith("p:"):
            try:
                p = int(text[2:])
            except ValueError:
                raise InputError(f"bad p-norm spec {text!r}")
            return cls("euclid2", 2) if p == 2 else cls("p", p)
        raise InputError(f"unknown norm {text!r}; use euclid2, max or p:<int>")

    def h_length(self, vector: Sequence[Fraction]) -> Fraction:
        if self.kind == "max":
            return max((abs(Fraction(v)) for v in vector), default=Fraction(0))
        power = 2 if self.kind == "euclid2" else self.p
        return sum((abs(Fraction(v)) ** power for v in vector), Fraction(0))

    def h_distance(self, a: Sequence, b: Sequence) -> Fraction:
        return self.h_length(sub(tuple(a), b))

    def __str__(self):
        return "p:%d" % self.p if self.kind == "p" else self.kind


EUCLID2 = NormSpec("euclid2", 2)
