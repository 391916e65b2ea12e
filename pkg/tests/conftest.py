"""Shared fixtures: small populations whose equilibria are known exactly."""

from __future__ import annotations

import pytest

from poplotto import DiscreteBudgetDistribution, solve
from poplotto.structure import dice_to_population, search_dice_triple


def budget_rows(*rows: tuple[float, float]) -> DiscreteBudgetDistribution:
    return DiscreteBudgetDistribution.from_dict(
        {"subpopulations": [{"budget": b, "mass": m} for b, m in rows]}
    )


# Nine groups: three closely bunched low budgets, four mid budgets, one
# heavyweight whose pour floods every terrace below it, and one group on
# top.  Pinned because its outcome matrix mixes sure and probabilistic
# results in a way that defeats establishment transitivity while keeping
# certainty and dominance intact.
NINE_ROWS = (
    (1.0, 1.0),
    (1.05, 1.0),
    (1.1, 1.0),
    (5.0, 1.0),
    (5.2, 1.0),
    (5.4, 1.0),
    (5.6, 1.0),
    (7.0, 12.0),
    (13.0, 2.0),
)


@pytest.fixture(scope="session")
def pair_dist():
    return budget_rows((1.0, 0.5), (1.5, 0.5))


@pytest.fixture(scope="session")
def pair_sol(pair_dist):
    return solve(pair_dist)


@pytest.fixture(scope="session")
def wide_dist():
    return budget_rows((1.0, 0.5), (10.0, 0.5))


@pytest.fixture(scope="session")
def wide_sol(wide_dist):
    return solve(wide_dist)


@pytest.fixture(scope="session")
def near_tie_dist():
    # budgets 1.5 and 1.501 produce an outcome close enough to a coin flip
    # for a slice exchange to push it across
    return budget_rows((1.0, 1.0), (1.5, 1.0), (1.501, 1.0))


@pytest.fixture(scope="session")
def near_tie_sol(near_tie_dist):
    return solve(near_tie_dist)


@pytest.fixture(scope="session")
def nine_dist():
    return budget_rows(*NINE_ROWS)


@pytest.fixture(scope="session")
def nine_sol(nine_dist):
    return solve(nine_dist)


@pytest.fixture(scope="session")
def dice_triple():
    return search_dice_triple()


@pytest.fixture(scope="session")
def dice_pop(dice_triple):
    return dice_to_population(dice_triple)
