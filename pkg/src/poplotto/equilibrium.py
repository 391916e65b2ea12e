"""Independent certification of candidate equilibria.

A candidate solution passes when no group can gain by moving its mass
elsewhere.  Two equivalent certificates are checked by separate routines
and never collapsed into one:

* the staircase conditions: the aggregate density is non-increasing,
  starts at zero cumulative mass, and is constant across each group's
  support hull (``verify_nash``);
* the chord conditions: for each group the aggregate's cumulative curve
  stays under a straight line through that group's operating point and
  touches it across the group's support (``verify_linear_bounds``).

On top of these, ``best_dyad`` searches for the most profitable two-point
deviation directly, and ``verify_subpop_consistency`` re-certifies every
budget-truncated prefix of the population.  All failures are report
content, not exceptions; tolerances are absolute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .density import EPS, PiecewiseDensity, mixture, step_gap
from .payoff import Dyad, dyad_payoff, win_prob
from .solver import EquilibriumSolution, DiscreteBudgetDistribution, SubPopulation


@dataclass(frozen=True)
class GroupCheck:
    """Per-group slice of a verification report.

    Fields not produced by the routine that built the report stay None and
    serialize as null.
    """

    budget: float
    payoff: float | None = None
    flat_violation: float | None = None
    intercept: float | None = None
    slope: float | None = None
    bound_violation: float | None = None
    support_gap: float | None = None

    def violations(self) -> list[float]:
        out = []
        for value in (self.flat_violation, self.bound_violation, self.support_gap):
            if value is not None:
                out.append(value)
        return out

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "payoff": self.payoff,
            "flat_violation": self.flat_violation,
            "intercept": self.intercept,
            "slope": self.slope,
            "bound_violation": self.bound_violation,
            "support_gap": self.support_gap,
        }


@dataclass(frozen=True)
class EquilibriumReport:
    """Violation magnitudes for one certification pass.

    ``passed`` holds iff every recorded violation is within ``tol``.
    """

    tol: float
    groups: tuple[GroupCheck, ...]
    monotone_violation: float | None = None
    cdf_at_zero: float | None = None
    mixture_gap: float | None = None
    best_dyad: Dyad | None = None
    best_dyad_gain: float | None = None

    def violations(self) -> list[float]:
        out = []
        for check in self.groups:
            out.extend(check.violations())
        for value in (self.monotone_violation, self.cdf_at_zero, self.mixture_gap):
            if value is not None:
                out.append(value)
        if self.best_dyad_gain is not None:
            out.append(max(self.best_dyad_gain, 0.0))
        return out

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.violations())

    def worst(self) -> float:
        vs = self.violations()
        return max(vs) if vs else 0.0

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "passed": self.passed,
            "groups": [check.to_dict() for check in self.groups],
            "monotone_violation": self.monotone_violation,
            "cdf_at_zero": self.cdf_at_zero,
            "mixture_gap": self.mixture_gap,
            "best_dyad": self.best_dyad.to_dict() if self.best_dyad else None,
            "best_dyad_gain": self.best_dyad_gain,
        }


@dataclass(frozen=True)
class PrefixCheck:
    """Verification verdict for one budget-truncated prefix."""

    count: int
    threshold: float
    report: EquilibriumReport

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "threshold": self.threshold,
            "passed": self.passed,
            "report": self.report.to_dict(),
        }


def _flat_violation(
    aggregate: PiecewiseDensity, hull: tuple[float, float] | None
) -> float:
    """How far the aggregate is from constant across ``hull``."""
    if hull is None:
        return 0.0
    lo, hi = hull
    if hi - lo <= EPS:
        return 0.0
    pts = sorted({lo, hi, *(x for x in aggregate.breakpoints if lo < x < hi)})
    seen: list[float] = []
    for a, b in zip(pts, pts[1:]):
        if b - a < EPS:
            continue
        seen.append(aggregate.height_at(0.5 * (a + b)))
    spread = max(seen) - min(seen) if seen else 0.0
    atom_breach = max(
        (mass for loc, mass in aggregate.atoms if lo + EPS < loc < hi - EPS),
        default=0.0,
    )
    return max(spread, atom_breach)


def verify_nash(
    sol: EquilibriumSolution, tol: float = EPS, with_payoffs: bool = True
) -> EquilibriumReport:
    """Certify the staircase conditions on a candidate solution.

    Checks that the aggregate density never increases, that no cumulative
    mass sits at zero, that the aggregate is constant across each group's
    support hull, and that the strategies actually mix to the aggregate.
    ``with_payoffs=False`` skips the per-group payoff sweep, which the
    prefix re-certification uses to stay fast.
    """
    agg = sol.aggregate
    rise = 0.0
    heights = agg.heights
    if heights and agg.breakpoints[0] > EPS:
        # support starts above zero, so the density rises from nothing
        rise = heights[0]
    for prev, nxt in zip(heights, heights[1:]):
        rise = max(rise, nxt - prev)
    interior_atom = max(
        (mass for loc, mass in agg.atoms if loc > EPS), default=0.0
    )
    monotone_violation = max(rise, interior_atom)
    cdf_at_zero = agg.cdf(0.0).inclusive
    blended = mixture([(1.0, g.strategy) for g in sol.groups])
    gap = step_gap(blended, agg)
    checks = []
    for g in sol.groups:
        payoff = None
        if with_payoffs:
            payoff = win_prob(g.strategy.normalized(), agg)
        checks.append(
            GroupCheck(
                budget=g.budget,
                payoff=payoff,
                flat_violation=_flat_violation(agg, g.strategy.support),
            )
        )
    return EquilibriumReport(
        tol=tol,
        groups=tuple(checks),
        monotone_violation=monotone_violation,
        cdf_at_zero=cdf_at_zero,
        mixture_gap=gap,
    )


def _chord_intercept(
    aggregate: PiecewiseDensity, budget: float, hull: tuple[float, float] | None
) -> float:
    """Intercept of the bounding line for one group.

    Built from the chord through the hull endpoints when the budget lies
    strictly between them; otherwise from the tangent at the budget, using
    the aggregate segment on its left.
    """
    if hull is not None:
        lo, hi = hull
        if lo < budget - EPS and hi > budget + EPS:
            g_lo = aggregate.cdf(lo).midpoint
            g_hi = aggregate.cdf(hi).midpoint
            return (hi * g_lo - lo * g_hi) / (hi - lo)
    slope = aggregate.height_at(budget)
    return aggregate.cdf(budget).midpoint - slope * budget


def verify_linear_bounds(
    sol: EquilibriumSolution, tol: float = EPS
) -> EquilibriumReport:
    """Certify the chord conditions on a candidate solution.

    For each group, the line through ``(0, intercept)`` and the group's
    operating point ``(budget, payoff)`` must dominate the aggregate's
    cumulative curve everywhere and agree with it across the group's
    support.
    """
    agg = sol.aggregate
    candidates = {0.0, *agg.breakpoints, *(loc for loc, _ in agg.atoms)}
    sup = agg.support
    if sup is not None:
        candidates.add(sup[1])
    candidate_list = sorted(candidates)
    checks = []
    for g in sol.groups:
        payoff = win_prob(g.strategy.normalized(), agg)
        intercept = _chord_intercept(agg, g.budget, g.strategy.support)
        slope = (payoff - intercept) / g.budget
        bound = 0.0
        for x in candidate_list:
            line = intercept + slope * x
            bound = max(bound, agg.cdf(x).inclusive - line)
        support_gap = 0.0
        for lo, hi in g.strategy.support_runs():
            pts = {lo, hi, *(x for x in agg.breakpoints if lo < x < hi)}
            for x in pts:
                line = intercept + slope * x
                support_gap = max(support_gap, abs(agg.cdf(x).midpoint - line))
        checks.append(
            GroupCheck(
                budget=g.budget,
                payoff=payoff,
                intercept=intercept,
                slope=slope,
                bound_violation=bound,
                support_gap=support_gap,
            )
        )
    return EquilibriumReport(tol=tol, groups=tuple(checks))


def best_dyad(
    budget: float, aggregate: PiecewiseDensity, tol: float = EPS
) -> tuple[Dyad, float]:
    """Most profitable two-point deviation for a unit budget holder.

    Scans dyads whose points sit on the aggregate's breakpoints, atom
    locations, zero, and one past the support; for a piecewise-linear
    cumulative curve the optimum lies on that grid, so the search is exact.
    Returns the best dyad and its gain over staying at the budget point.
    """
    if not (math.isfinite(budget) and budget > 0.0):
        raise ValueError(f"budget must be positive and finite, got {budget}")
    pts = {0.0, *aggregate.breakpoints, *(loc for loc, _ in aggregate.atoms)}
    sup = aggregate.support
    top = max(sup[1] if sup else 0.0, budget) + 1.0
    pts.add(top)
    lows = sorted(x for x in pts if x < budget - EPS)
    highs = sorted(x for x in pts if x > budget + EPS)
    baseline = aggregate.cdf(budget).midpoint
    best: Dyad | None = None
    best_value = -math.inf
    for lo in lows:
        for hi in highs:
            dyad = Dyad(lo, hi, budget)
            value = dyad_payoff(dyad, aggregate)
            if value > best_value + 1e-15:
                best = dyad
                best_value = value
    assert best is not None
    return best, best_value - baseline


def worst_deviation(
    sol: EquilibriumSolution, tol: float = EPS
) -> tuple[Dyad | None, float]:
    """Best dyad gain across all groups; the global deviation certificate."""
    worst_dyad: Dyad | None = None
    worst_gain = -math.inf
    for g in sol.groups:
        dyad, gain = best_dyad(g.budget, sol.aggregate, tol)
        if gain > worst_gain:
            worst_dyad = dyad
            worst_gain = gain
    if worst_dyad is None:
        return None, 0.0
    return worst_dyad, worst_gain


def payoff_identity_check(sol: EquilibriumSolution, tol: float = EPS) -> float:
    """Max gap between each group's payoff and the aggregate cumulative value
    at its budget.  At equilibrium the two coincide, which pins every
    pairwise outcome without computing it."""
    worst = 0.0
    for g in sol.groups:
        payoff = win_prob(g.strategy.normalized(), sol.aggregate)
        worst = max(worst, abs(payoff - sol.aggregate.cdf(g.budget).midpoint))
    return worst


def verify_subpop_consistency(
    dist: DiscreteBudgetDistribution,
    sol: EquilibriumSolution,
    tol: float = EPS,
    with_payoffs: bool = False,
) -> list[PrefixCheck]:
    """Re-certify every budget-truncated prefix of the solution.

    The prefix keeping the ``j`` lowest budgets is renormalized to unit
    mass and must itself pass ``verify_nash``.  Solutions built by the
    solver pass every prefix; hand-modified ones may not.
    """
    if len(dist) != len(sol.groups):
        raise ValueError("distribution and solution must have the same groups")
    for (budget, _), g in zip(dist.entries, sol.groups):
        if abs(budget - g.budget) > EPS:
            raise ValueError("distribution budgets do not match the solution")
    out = []
    for count in range(1, len(sol.groups) + 1):
        kept = sol.groups[:count]
        share = sum(g.mass for g in kept)
        scaled = tuple(
            SubPopulation(g.budget, g.mass / share, g.strategy.scaled(1.0 / share))
            for g in kept
        )
        agg = mixture([(1.0, g.strategy) for g in scaled])
        prefix_sol = EquilibriumSolution(scaled, agg)
        report = verify_nash(prefix_sol, tol, with_payoffs=with_payoffs)
        out.append(
            PrefixCheck(count=count, threshold=kept[-1].budget, report=report)
        )
    return out
