"""The four association measures as functions on the unit square, and
their contour-line geometry.

Coordinates follow the diagram convention: x is the risk in the
unexposed, y the risk in the exposed. Domain violations raise
DomainError rather than returning NaN or infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ContourRangeError, DomainError
from .tables import RiskPoint


class Measure(Enum):
    RISK_DIFFERENCE = "rd"
    RISK_RATIO = "rr"
    ODDS_RATIO = "or"
    CUMULATIVE_HAZARD_RATIO = "chr"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Measure.RISK_DIFFERENCE: "risk difference",
    Measure.RISK_RATIO: "risk ratio",
    Measure.ODDS_RATIO: "odds ratio",
    Measure.CUMULATIVE_HAZARD_RATIO: "cumulative hazard ratio",
}


@dataclass(frozen=True)
class ContourValue:
    """A measure together with one of its contour levels."""

    measure: Measure
    m: float

    def __post_init__(self):
        if self.measure is Measure.RISK_DIFFERENCE:
            if not -1.0 <= self.m <= 1.0:
                raise DomainError(f"risk difference level must be in [-1, 1], got {self.m}")
        elif self.m < 0.0:
            raise DomainError(f"{self.measure.label} level must be >= 0, got {self.m}")


def check_domain(measure: Measure, p: RiskPoint) -> None:
    """Raise DomainError naming the violated restriction, if any."""
    x, y = p.x, p.y
    if measure is Measure.RISK_DIFFERENCE:
        return
    if measure is Measure.RISK_RATIO:
        if x <= 0.0:
            raise DomainError(f"risk ratio undefined: requires x > 0, got x = {x}")
        return
    if measure is Measure.ODDS_RATIO:
        if not 0.0 < x < 1.0:
            raise DomainError(f"odds ratio undefined: requires 0 < x < 1, got x = {x}")
        if y >= 1.0:
            raise DomainError(f"odds ratio undefined: requires y < 1, got y = {y}")
        return
    # cumulative hazard ratio: ln(1-y)/ln(1-x) needs both logs defined and
    # a nonzero denominator
    if x >= 1.0:
        raise DomainError(f"cumulative hazard ratio undefined: requires x < 1, got x = {x}")
    if y >= 1.0:
        raise DomainError(f"cumulative hazard ratio undefined: requires y < 1, got y = {y}")
    if x <= 0.0:
        raise DomainError("cumulative hazard ratio undefined: ln(1-x) = 0 at x = 0")


def in_domain(measure: Measure, p: RiskPoint) -> bool:
    try:
        check_domain(measure, p)
    except DomainError:
        return False
    return True


def evaluate(measure: Measure, p: RiskPoint) -> float:
    """Value of the measure at a risk point; raises DomainError off-domain."""
    check_domain(measure, p)
    x, y = p.x, p.y
    if measure is Measure.RISK_DIFFERENCE:
        return y - x
    if measure is Measure.RISK_RATIO:
        return y / x
    if measure is Measure.ODDS_RATIO:
        return (y / (1.0 - y)) / (x / (1.0 - x))
    return math.log1p(-y) / math.log1p(-x)


def gradient(measure: Measure, p: RiskPoint) -> tuple[float, float]:
    """Partial derivatives (d/dx, d/dy) of the measure at an in-domain point."""
    check_domain(measure, p)
    x, y = p.x, p.y
    if measure is Measure.RISK_DIFFERENCE:
        return (-1.0, 1.0)
    if measure is Measure.RISK_RATIO:
        return (-y / (x * x), 1.0 / x)
    if measure is Measure.ODDS_RATIO:
        v = (y / (1.0 - y)) / (x / (1.0 - x))
        return (-v / (x * (1.0 - x)), v / (y * (1.0 - y)))
    lx = math.log1p(-x)
    return (math.log1p(-y) / ((1.0 - x) * lx * lx), -1.0 / ((1.0 - y) * lx))


def null_value(measure: Measure) -> float:
    """Value taken on the null line y = x: 0 for the risk difference, 1 otherwise."""
    return 0.0 if measure is Measure.RISK_DIFFERENCE else 1.0


def contour_y(c: ContourValue, x: float) -> float:
    """The unique y with evaluate(c.measure, (x, y)) = c.m, by algebraic
    inversion (extended continuously to the boundary of the square).

    Raises ContourRangeError when the contour exits [0, 1] at this x.
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must be in [0, 1], got {x}")
    m = c.m
    if c.measure is Measure.RISK_DIFFERENCE:
        y = x + m
    elif c.measure is Measure.RISK_RATIO:
        y = m * x
    elif c.measure is Measure.ODDS_RATIO:
        y = m * x / (1.0 - x + m * x) if (1.0 - x + m * x) != 0.0 else 0.0
    else:
        # continuous extension gives y = 0 at x = 0 for every level
        if x < 1.0:
            y = -math.expm1(m * math.log1p(-x))
        else:
            y = 1.0 if m > 0.0 else 0.0
    if y < -1e-15 or y > 1.0 + 1e-15:
        raise ContourRangeError(
            f"{c.measure.label} contour m = {m} leaves the unit square at x = {x} (y = {y})"
        )
    return min(1.0, max(0.0, y))


def valid_x_interval(c: ContourValue) -> tuple[float, float] | None:
    """Maximal closed sub-interval of [0, 1] on which contour_y stays in [0, 1].

    None when the contour never enters the square (not reachable for levels
    satisfying the ContourValue invariants, but kept for totality).
    """
    m = c.m
    if c.measure is Measure.RISK_DIFFERENCE:
        lo, hi = (0.0, 1.0 - m) if m >= 0.0 else (-m, 1.0)
    elif c.measure is Measure.RISK_RATIO:
        lo, hi = 0.0, (1.0 if m <= 1.0 else 1.0 / m)
    else:
        # odds ratio and cumulative hazard ratio contours stay inside the
        # square for every m >= 0
        lo, hi = 0.0, 1.0
    if lo > hi:
        return None
    return (lo, hi)


def contour_polyline(c: ContourValue, n: int) -> list[RiskPoint]:
    """n points along the contour, x equally spaced over valid_x_interval.

    Degenerate single-point intervals yield one point; an empty interval
    yields an empty list.
    """
    if n < 2:
        raise DomainError(f"need at least 2 samples, got {n}")
    interval = valid_x_interval(c)
    if interval is None:
        return []
    lo, hi = interval
    if hi - lo == 0.0:
        return [RiskPoint(lo, contour_y(c, lo))]
    step = (hi - lo) / (n - 1)
    xs = [lo + i * step for i in range(n - 1)] + [hi]
    return [RiskPoint(x, contour_y(c, x)) for x in xs]


def is_straight(measure: Measure) -> bool:
    """Whether every contour of the measure is a straight line."""
    return measure in (Measure.RISK_DIFFERENCE, Measure.RISK_RATIO)


def is_straight_at(c: ContourValue) -> bool:
    """Whether the single contour at level m is straight.

    Decided analytically from the second derivative of contour_y:
      RD:  y'' = 0 for every m
      RR:  y'' = 0 for every m
      OR:  y'' = -2m(m-1) / (1 + (m-1)x)^3, identically zero iff m in {0, 1}
      CHR: y'' = -m(m-1)(1-x)^(m-2),        identically zero iff m in {0, 1}
    """
    if is_straight(c.measure):
        return True
    return c.m in (0.0, 1.0)
