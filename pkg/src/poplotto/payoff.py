"""Pairwise contest payoffs between step densities.

The payoff of playing ``f`` against ``h`` is the probability that an
independent draw from ``f`` beats a draw from ``h``, with ties worth half:
``P(F > H) + 0.5 * P(F = H)``.  Because densities are piecewise constant,
the integral decomposes into closed-form cell contributions on the union
grid of both break sets; no quadrature is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .density import EPS, PiecewiseDensity

# Slack allowed when checking that contest inputs carry unit mass.
UNIT_MASS_TOL = 1e-6


@dataclass(frozen=True)
class Dyad:
    """Two-point strategy straddling a budget.

    Mass splits between ``low`` and ``high`` so the mean lands exactly on
    ``budget``; the split weight is determined by the geometry.  Dyads are
    the deviation certificates used by the equilibrium checks: a population
    strategy is unbeatable iff no dyad earns more against the aggregate.
    """

    low: float
    high: float
    budget: float

    def __post_init__(self) -> None:
        for name in ("low", "high", "budget"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError("dyad coordinates must be finite")
        if not 0.0 <= self.low < self.budget < self.high:
            raise ValueError(
                f"dyad needs 0 <= low < budget < high, got "
                f"({self.low}, {self.budget}, {self.high})"
            )

    @property
    def low_weight(self) -> float:
        """Fraction of mass placed at ``low``; lies strictly in (0, 1)."""
        return (self.high - self.budget) / (self.high - self.low)

    def as_density(self, mass: float = 1.0) -> PiecewiseDensity:
        lam = self.low_weight
        return PiecewiseDensity(
            (), (), ((self.low, mass * lam), (self.high, mass * (1.0 - lam)))
        )

    def to_dict(self) -> dict:
        return {
            "low": self.low,
            "high": self.high,
            "budget": self.budget,
            "low_weight": self.low_weight,
        }


def _require_unit_mass(dens: PiecewiseDensity, label: str) -> None:
    mass = dens.total_mass
    if abs(mass - 1.0) > UNIT_MASS_TOL:
        raise ValueError(f"{label} density must carry unit mass, has {mass!r}")


def win_prob(f: PiecewiseDensity, h: PiecewiseDensity) -> float:
    """Probability that a draw from ``f`` beats a draw from ``h``, ties half.

    Both inputs must be normalized.  Exact per cell: within a cell the
    opponent's cumulative mass is linear, so the integral of ``f`` against
    it is a rectangle plus a triangle.
    """
    _require_unit_mass(f, "first")
    _require_unit_mass(h, "second")
    pts = set(f.breakpoints) | set(h.breakpoints)
    pts.update(loc for loc, _ in f.atoms)
    pts.update(loc for loc, _ in h.atoms)
    grid = sorted(pts)
    merged: list[float] = []
    for x in grid:
        if not merged or x - merged[-1] >= EPS:
            merged.append(x)
    total = 0.0
    for lo, hi in zip(merged, merged[1:]):
        mid = 0.5 * (lo + hi)
        f_height = f.height_at(mid)
        if f_height <= 0.0:
            continue
        start = h.cdf(lo)
        h_height = h.height_at(mid)
        width = hi - lo
        total += f_height * (
            start.inclusive * width + 0.5 * h_height * width * width
        )
    for loc, mass in f.atoms:
        total += mass * h.cdf(loc).midpoint
    return total


def dyad_payoff(dyad: Dyad, aggregate: PiecewiseDensity) -> float:
    """Payoff of a dyad against the population aggregate.

    Equals ``win_prob`` of the dyad's two-atom density against the
    aggregate, but costs two cumulative lookups instead of a grid sweep.
    """
    _require_unit_mass(aggregate, "aggregate")
    lam = dyad.low_weight
    return (
        lam * aggregate.cdf(dyad.low).midpoint
        + (1.0 - lam) * aggregate.cdf(dyad.high).midpoint
    )


def population_payoff(f: PiecewiseDensity, aggregate: PiecewiseDensity) -> float:
    """Average payoff of strategy ``f`` against the whole population.

    In an infinite population every opponent is effectively a draw from the
    aggregate, so this is just ``win_prob(f, aggregate)``.
    """
    return win_prob(f, aggregate)
