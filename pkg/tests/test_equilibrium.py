"""Certification routines: staircase checks, chord bounds, dyad search."""

from __future__ import annotations

import json

import pytest

from poplotto import (
    Dyad,
    EquilibriumReport,
    EquilibriumSolution,
    PiecewiseDensity,
    SubPopulation,
    best_dyad,
    mixture,
    payoff_identity_check,
    verify_linear_bounds,
    verify_nash,
    verify_subpop_consistency,
    worst_deviation,
)
from poplotto.structure import league_rewire


def test_nash_passes_on_solved_fixtures(pair_sol, wide_sol, nine_sol):
    for sol in (pair_sol, wide_sol, nine_sol):
        report = verify_nash(sol, tol=1e-12)
        assert report.passed
        assert report.worst() <= 1e-12


def test_nash_payoffs_match_cumulative_levels(pair_sol, wide_sol):
    report = verify_nash(pair_sol)
    assert report.groups[0].payoff == pytest.approx(0.4, abs=1e-12)
    assert report.groups[1].payoff == pytest.approx(0.6, abs=1e-12)
    report = verify_nash(wide_sol)
    assert report.groups[0].payoff == pytest.approx(0.25, abs=1e-12)
    assert report.groups[1].payoff == pytest.approx(0.75, abs=1e-12)
    skipped = verify_nash(pair_sol, with_payoffs=False)
    assert all(check.payoff is None for check in skipped.groups)


def test_nash_catches_rising_density():
    # support starting above zero leaves a gap an opponent can sit under
    block = PiecewiseDensity.uniform(1.0, 2.0)
    sol = EquilibriumSolution((SubPopulation(1.5, 1.0, block),), block)
    report = verify_nash(sol)
    assert not report.passed
    assert report.monotone_violation == pytest.approx(1.0, abs=1e-12)


def test_nash_catches_interior_step_up():
    rising = mixture(
        [
            (1.0, PiecewiseDensity((0.0, 1.0), (0.25,))),
            (1.0, PiecewiseDensity((1.0, 2.0), (0.75,))),
        ]
    )
    sol = EquilibriumSolution((SubPopulation(1.25, 1.0, rising),), rising)
    report = verify_nash(sol)
    assert report.monotone_violation == pytest.approx(0.5, abs=1e-12)


def test_nash_catches_mass_at_zero():
    lumpy = mixture(
        [
            (1.0, PiecewiseDensity.point(0.0, 0.5)),
            (1.0, PiecewiseDensity.uniform(0.0, 2.0, 0.5)),
        ]
    )
    sol = EquilibriumSolution((SubPopulation(0.5, 1.0, lumpy),), lumpy)
    report = verify_nash(sol)
    assert not report.passed
    assert report.cdf_at_zero == pytest.approx(0.5, abs=1e-12)


def test_nash_catches_strategy_aggregate_drift(pair_sol):
    shaved = (
        SubPopulation(
            pair_sol.groups[0].budget,
            pair_sol.groups[0].mass,
            pair_sol.groups[0].strategy.scaled(0.9),
        ),
        pair_sol.groups[1],
    )
    report = verify_nash(EquilibriumSolution(shaved, pair_sol.aggregate))
    assert not report.passed
    # the poorer block's height drops from 0.25 to 0.225 in the blend
    assert report.mixture_gap == pytest.approx(0.025, abs=1e-12)


def test_nash_catches_support_spanning_two_treads(wide_sol):
    # a strategy spread across both terraces sees two different levels
    spread = (
        SubPopulation(2.0, 0.5, PiecewiseDensity.uniform(0.0, 4.0, 0.5)),
        wide_sol.groups[1],
    )
    report = verify_nash(EquilibriumSolution(spread, wide_sol.aggregate))
    assert not report.passed
    assert report.groups[0].flat_violation == pytest.approx(0.21875, abs=1e-12)


def test_linear_bounds_pass_with_known_lines(pair_sol, wide_sol):
    """Chord intercepts and slopes for the two hand-traced fixtures."""
    report = verify_linear_bounds(pair_sol, tol=1e-12)
    assert report.passed
    for check in report.groups:
        assert check.intercept == pytest.approx(0.0, abs=1e-12)
        assert check.slope == pytest.approx(0.4, abs=1e-12)
    report = verify_linear_bounds(wide_sol, tol=1e-12)
    assert report.passed
    low, high = report.groups
    assert low.intercept == pytest.approx(0.0, abs=1e-12)
    assert low.slope == pytest.approx(0.25, abs=1e-12)
    assert high.intercept == pytest.approx(0.4375, abs=1e-12)
    assert high.slope == pytest.approx(0.03125, abs=1e-12)


def test_linear_bounds_catch_stretched_support(wide_sol):
    # hull reaching past the first tread cannot sit on one straight line
    stretched = (
        SubPopulation(1.5, 0.5, PiecewiseDensity.uniform(0.0, 3.0, 0.5)),
        wide_sol.groups[1],
    )
    report = verify_linear_bounds(EquilibriumSolution(stretched, wide_sol.aggregate))
    assert not report.passed
    assert report.groups[0].support_gap > 1e-3


def test_best_dyad_finds_no_gain_at_equilibrium(pair_sol, wide_sol, nine_sol):
    for sol in (pair_sol, wide_sol, nine_sol):
        for group in sol.groups:
            _, gain = best_dyad(group.budget, sol.aggregate)
            assert abs(gain) <= 1e-12


def test_best_dyad_exploits_convex_curve():
    # cumulative curve convex on [0, 2]: the extreme split beats the middle
    agg = PiecewiseDensity((0.0, 1.0, 2.0), (0.2, 0.8))
    dyad, gain = best_dyad(1.0, agg)
    assert dyad == Dyad(0.0, 2.0, 1.0)
    assert gain == pytest.approx(0.3, abs=1e-12)


def test_best_dyad_rejects_bad_budget():
    agg = PiecewiseDensity.uniform(0.0, 2.0)
    with pytest.raises(ValueError):
        best_dyad(0.0, agg)
    with pytest.raises(ValueError):
        best_dyad(float("inf"), agg)


def test_worst_deviation_certifies_fixture(pair_sol):
    dyad, gain = worst_deviation(pair_sol)
    assert dyad is not None
    assert abs(gain) <= 1e-12


def test_payoff_identity_on_fixtures(pair_sol, wide_sol, nine_sol):
    for sol in (pair_sol, wide_sol, nine_sol):
        assert payoff_identity_check(sol) <= 1e-12


def test_subpop_consistency_passes_on_solved(nine_dist, nine_sol):
    checks = verify_subpop_consistency(nine_dist, nine_sol, tol=1e-9)
    assert len(checks) == len(nine_sol.groups)
    assert all(check.passed for check in checks)
    assert [check.count for check in checks] == list(range(1, 10))
    assert checks[-1].threshold == 13.0


def test_subpop_consistency_fails_after_rewire(near_tie_dist, near_tie_sol):
    """A rewired league still mixes to the aggregate but breaks a prefix."""
    rewired = league_rewire(near_tie_sol, 0, seed=0)
    checks = verify_subpop_consistency(near_tie_dist, rewired, tol=1e-9)
    verdicts = [check.passed for check in checks]
    assert verdicts[-1] is True
    assert False in verdicts


def test_subpop_consistency_rejects_mismatches(pair_dist, pair_sol, wide_sol):
    with pytest.raises(ValueError):
        verify_subpop_consistency(pair_dist, wide_sol)
    shifted = EquilibriumSolution(
        (
            SubPopulation(1.1, 0.5, pair_sol.groups[0].strategy),
            pair_sol.groups[1],
        ),
        pair_sol.aggregate,
    )
    with pytest.raises(ValueError):
        verify_subpop_consistency(pair_dist, shifted)


def test_report_serializes_to_json(pair_sol):
    report = verify_nash(pair_sol)
    data = report.to_dict()
    assert set(data) == {
        "tol",
        "passed",
        "groups",
        "monotone_violation",
        "cdf_at_zero",
        "mixture_gap",
        "best_dyad",
        "best_dyad_gain",
    }
    assert data["passed"] is True
    json.dumps(data)
    bounds = verify_linear_bounds(pair_sol).to_dict()
    assert bounds["groups"][0]["slope"] == pytest.approx(0.4, abs=1e-12)
    json.dumps(bounds)


def test_empty_report_is_clean():
    report = EquilibriumReport(tol=1e-9, groups=())
    assert report.passed
    assert report.worst() == 0.0
