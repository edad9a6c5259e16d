"""Three-valued truth values with the truth and precision orders."""

from __future__ import annotations

import enum
from typing import Iterable

from .errors import PrecisionConflict


class TV(enum.Enum):
    F = "f"
    U = "u"
    T = "t"

    def __str__(self) -> str:
        return self.value

    @property
    def rank(self) -> int:
        # position in the truth order f < u < t
        return _RANK[self]

    def leq_t(self, other: TV) -> bool:
        return self.rank <= other.rank

    def leq_p(self, other: TV) -> bool:
        return self is TV.U or self is other

    def inverse(self) -> TV:
        return _INVERSE[self]

    @classmethod
    def from_bool(cls, value: bool) -> TV:
        return cls.T if value else cls.F

    @classmethod
    def parse(cls, text: str) -> TV:
        return cls(text.strip().lower())


_RANK = {TV.F: 0, TV.U: 1, TV.T: 2}
_INVERSE = {TV.F: TV.T, TV.T: TV.F, TV.U: TV.U}


def inverse(value: TV) -> TV:
    return value.inverse()


def glb_t(values: Iterable[TV]) -> TV:
    """Meet in the truth order; the empty meet is t."""
    result = TV.T
    for v in values:
        if v is TV.F:
            return TV.F
        if v is TV.U:
            result = TV.U
    return result


def lub_p(values: Iterable[TV]) -> TV:
    """Join in the precision order.

    Raises PrecisionConflict when both t and f occur, which means the
    inputs did not come from a precision chain.
    """
    result = TV.U
    for v in values:
        if v is TV.U:
            continue
        if result is TV.U:
            result = v
        elif result is not v:
            raise PrecisionConflict("t and f have no upper bound in the precision order")
    return result
