"""Population structure: leagues, pairwise outcomes, and their graph.

At equilibrium the aggregate density is a descending staircase, and groups
whose budgets land on the same stair tread share its height.  Those
``leagues`` settle every cross-league contest almost surely, while outcomes
inside a league stay probabilistic and can be reshaped without disturbing
the aggregate.  This module extracts the league partition, computes the
full pairwise outcome matrix, audits it against five transitivity notions,
embeds classic dice as populations, and performs the aggregate-preserving
rewiring that demonstrates how loosely the matrix is pinned down.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Sequence

import numpy as np

from .density import EPS, PiecewiseDensity, mixture
from .payoff import win_prob
from .solver import (
    DiscreteBudgetDistribution,
    EquilibriumSolution,
    SubPopulation,
    solve,
)


@dataclass(frozen=True)
class League:
    """Groups sharing one aggregate height, with the tread they stand on."""

    height: float
    members: tuple[int, ...]
    span: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "members": list(self.members),
            "span": list(self.span),
        }


@dataclass(frozen=True)
class LeaguePartition:
    """All leagues ordered by strictly decreasing height (poorest first)."""

    leagues: tuple[League, ...]

    def __iter__(self):
        return iter(self.leagues)

    def __len__(self) -> int:
        return len(self.leagues)

    def league_of(self, index: int) -> int:
        for rank, lg in enumerate(self.leagues):
            if index in lg.members:
                return rank
        raise KeyError(f"group {index} is in no league")

    def member_sets(self) -> list[frozenset[int]]:
        return [frozenset(lg.members) for lg in self.leagues]

    def to_dict(self) -> dict:
        return {"leagues": [lg.to_dict() for lg in self.leagues]}


def leagues(sol: EquilibriumSolution, tol: float = EPS) -> LeaguePartition:
    """Partition groups by the aggregate height at their budgets.

    A budget sitting exactly on a breakpoint reads the height of the
    segment on its left.  Heights within ``tol`` of each other chain into
    one league; the span is the x-range over which the aggregate holds the
    league's height.
    """
    agg = sol.aggregate
    n = len(sol.groups)
    heights = [agg.height_at(g.budget) for g in sol.groups]
    order = sorted(range(n), key=lambda i: (-heights[i], sol.groups[i].budget))
    groups_out: list[list[int]] = []
    for i in order:
        if groups_out and abs(heights[groups_out[-1][-1]] - heights[i]) <= tol:
            groups_out[-1].append(i)
        else:
            groups_out.append([i])
    built = []
    for members in groups_out:
        c = heights[members[0]]
        runs: list[tuple[float, float]] = []
        for lo, hi, h in agg.segments():
            if abs(h - c) <= tol:
                if runs and abs(runs[-1][1] - lo) <= EPS:
                    runs[-1] = (runs[-1][0], hi)
                else:
                    runs.append((lo, hi))
        anchor = sol.groups[members[0]].budget
        span = next(
            (r for r in runs if r[0] - EPS <= anchor <= r[1] + EPS),
            (anchor, anchor),
        )
        built.append(League(height=c, members=tuple(sorted(members)), span=span))
    return LeaguePartition(tuple(built))


@dataclass(frozen=True)
class SubLeague:
    """A set that forms a league in some truncation but not in the full one."""

    members: tuple[int, ...]
    thresholds: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"members": list(self.members), "thresholds": list(self.thresholds)}


@dataclass(frozen=True)
class SubLeagueReport:
    full: LeaguePartition
    sub_leagues: tuple[SubLeague, ...]

    def member_sets(self) -> list[frozenset[int]]:
        return [frozenset(s.members) for s in self.sub_leagues]

    def to_dict(self) -> dict:
        return {
            "full_leagues": self.full.to_dict(),
            "sub_leagues": [s.to_dict() for s in self.sub_leagues],
        }


def sub_leagues(
    dist: DiscreteBudgetDistribution, tol: float = EPS
) -> SubLeagueReport:
    """Find latent leagues: sets that are leagues only below some cutoff.

    Solves every budget truncation of the population and records league
    sets that do not survive into the full equilibrium, together with the
    truncation thresholds at which they appear.  Singletons are skipped: a
    lone group is a league in any truncation, so it says nothing about
    groups merging.  Only one level of nesting is reported; sub-leagues of
    sub-leagues show up under their own thresholds rather than recursively.
    """
    full_partition = leagues(solve(dist), tol)
    full_sets = set(full_partition.member_sets())
    found: dict[tuple[int, ...], list[float]] = {}
    for count in range(1, len(dist)):
        part = leagues(solve(dist.prefix(count)), tol)
        threshold = dist.budgets[count - 1]
        for lg in part.leagues:
            if len(lg.members) < 2 or frozenset(lg.members) in full_sets:
                continue
            found.setdefault(lg.members, []).append(threshold)
    subs = tuple(
        SubLeague(members=members, thresholds=tuple(ts))
        for members, ts in sorted(found.items())
    )
    return SubLeagueReport(full=full_partition, sub_leagues=subs)


@dataclass(frozen=True, eq=False)
class OutcomeMatrix:
    """Pairwise expected outcomes: ``probs[i, j]`` is i's payoff against j."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
            raise ValueError("outcome matrix must be square")
        if probs.size:
            if np.max(np.abs(np.diagonal(probs) - 0.5)) > 1e-12:
                raise ValueError("outcome matrix diagonal must be one half")
            if np.max(np.abs(probs + probs.T - 1.0)) > 1e-12:
                raise ValueError("outcome matrix must satisfy W + W^T = 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def to_dict(self) -> dict:
        return {"probs": self.probs.tolist()}


def outcome_matrix(sol: EquilibriumSolution) -> OutcomeMatrix:
    """Compute every pairwise contest.

    Only the upper triangle is computed; the lower follows from the
    zero-sum complement, which keeps the matrix exactly consistent.
    """
    n = len(sol.groups)
    probs = np.full((n, n), 0.5)
    norms = [g.strategy.normalized() for g in sol.groups]
    for i in range(n):
        for j in range(i + 1, n):
            p = win_prob(norms[i], norms[j])
            probs[i, j] = p
            probs[j, i] = 1.0 - p
    return OutcomeMatrix(probs)


@dataclass(frozen=True)
class TransitivityReport:
    """Which transitivity notions hold, with every violating triple.

    A triple ``(i, j, k)`` reads: j's result against i and k's against j
    form the hypothesis, k's against i the conclusion.  Probability-one
    comparisons are widened by ``tol`` on both sides.
    """

    tol: float
    weak_stochastic: tuple[tuple[int, int, int], ...]
    strong_stochastic: tuple[tuple[int, int, int], ...]
    certainty: tuple[tuple[int, int, int], ...]
    dominance: tuple[tuple[int, int, int], ...]
    establishment: tuple[tuple[int, int, int], ...]

    @property
    def flags(self) -> dict[str, bool]:
        return {
            "weak_stochastic": not self.weak_stochastic,
            "strong_stochastic": not self.strong_stochastic,
            "certainty": not self.certainty,
            "dominance": not self.dominance,
            "establishment": not self.establishment,
        }

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "flags": self.flags,
            "violations": {
                "weak_stochastic": [list(t) for t in self.weak_stochastic],
                "strong_stochastic": [list(t) for t in self.strong_stochastic],
                "certainty": [list(t) for t in self.certainty],
                "dominance": [list(t) for t in self.dominance],
                "establishment": [list(t) for t in self.establishment],
            },
        }


def transitivity_report(
    matrix: OutcomeMatrix, tol: float = EPS
) -> TransitivityReport:
    """Exhaustively audit all ordered triples against five notions.

    weak: two expected wins chain to an expected win.
    strong: the chained win is at least as strong as both links.
    certainty: two sure wins chain to a sure win.
    dominance: an expected win followed by a sure win chains to a sure win.
    establishment: a sure win followed by an expected win chains to a sure
    win; this is the one notion equilibrium populations can break.
    """
    W = matrix.probs
    sure = 1.0 - tol
    weak, strong, certain, dominance, establishment = [], [], [], [], []
    for i, j, k in permutations(range(matrix.n), 3):
        wji, wkj, wki = W[j, i], W[k, j], W[k, i]
        if wji >= 0.5 and wkj >= 0.5:
            if wki < 0.5 - tol:
                weak.append((i, j, k))
            if wki < max(wji, wkj) - tol:
                strong.append((i, j, k))
        if wji >= sure and wkj >= sure and wki < sure:
            certain.append((i, j, k))
        if wji >= 0.5 and wkj >= sure and wki < sure:
            dominance.append((i, j, k))
        if wji >= sure and wkj >= 0.5 and wki < sure:
            establishment.append((i, j, k))
    return TransitivityReport(
        tol=tol,
        weak_stochastic=tuple(weak),
        strong_stochastic=tuple(strong),
        certainty=tuple(certain),
        dominance=tuple(dominance),
        establishment=tuple(establishment),
    )


def dice_to_population(dice: Sequence[Sequence[int]]) -> EquilibriumSolution:
    """Embed dice as a population: face v becomes a flat block on [v-1, v].

    Each die turns into one group of equal population share whose strategy
    spreads 1/faces of its mass per face; repeated faces stack.  The group
    budget is the strategy's mean, pip total over faces minus one half.
    """
    if not dice:
        raise ValueError("at least one die is required")
    counts = {len(die) for die in dice}
    if counts == {0} or len(counts) != 1:
        raise ValueError("all dice must have the same positive face count")
    faces = counts.pop()
    share = 1.0 / len(dice)
    groups = []
    for die in dice:
        for v in die:
            if float(v) != int(v) or int(v) < 1:
                raise ValueError(f"face values must be integers >= 1, got {v}")
        strategy = mixture(
            [
                (share / faces, PiecewiseDensity.uniform(float(v) - 1.0, float(v)))
                for v in die
            ]
        )
        groups.append(SubPopulation(strategy.mean(), share, strategy))
    aggregate = mixture([(1.0, g.strategy) for g in groups])
    return EquilibriumSolution(tuple(groups), aggregate)


def _face_wins(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(1 for x in a for y in b if x > y)


def search_dice_triple() -> tuple[tuple[int, ...], ...]:
    """Brute-force a non-transitive triple of 30-pip six-sided dice.

    Assigns both copies of each value 1..9 to one of three dice, three
    values per die summing to 15, and returns the first assignment (in
    lexicographic order) whose dice beat each other cyclically with
    probability exactly 20/36.  The result is deterministic.
    """
    values = list(range(1, 10))
    assignment: list[int] = []

    def backtrack(pos: int, counts: list[int], sums: list[int]):
        if pos == len(values):
            dice = tuple(
                tuple(
                    sorted(
                        v for v, d in zip(values, assignment) for _ in range(2) if d == die
                    )
                )
                for die in range(3)
            )
            for order in ((0, 1, 2), (0, 2, 1)):
                a, b, c = (dice[t] for t in order)
                if (
                    _face_wins(a, b) * 36 == 20 * len(a) * len(b)
                    and _face_wins(b, c) * 36 == 20 * len(b) * len(c)
                    and _face_wins(c, a) * 36 == 20 * len(c) * len(a)
                ):
                    return (a, b, c)
            return None
        value = values[pos]
        for die in range(3):
            if counts[die] == 3 or sums[die] + value > 15:
                continue
            assignment.append(die)
            counts[die] += 1
            sums[die] += value
            hit = backtrack(pos + 1, counts, sums)
            if hit:
                return hit
            assignment.pop()
            counts[die] -= 1
            sums[die] -= value
        return None

    triple = backtrack(0, [0, 0, 0], [0, 0, 0])
    if triple is None:
        raise RuntimeError("no cyclic triple exists under these constraints")
    return triple


def _min_height(dens: PiecewiseDensity, lo: float, hi: float) -> float:
    """Smallest density height across ``[lo, hi]``."""
    pts = sorted({lo, hi, *(x for x in dens.breakpoints if lo < x < hi)})
    out = math.inf
    for a, b in zip(pts, pts[1:]):
        if b - a < EPS:
            continue
        out = min(out, dens.height_at(0.5 * (a + b)))
    return out if math.isfinite(out) else 0.0


def _patched(
    dens: PiecewiseDensity, cells: list[tuple[float, float]], deltas: list[float]
) -> PiecewiseDensity:
    """Add a flat delta per cell to a density."""
    pts = sorted(
        {*dens.breakpoints, *(edge for cell in cells for edge in cell)}
    )
    merged = [pts[0]]
    for x in pts[1:]:
        if x - merged[-1] >= EPS:
            merged.append(x)
    heights = []
    for lo, hi in zip(merged, merged[1:]):
        mid = 0.5 * (lo + hi)
        h = dens.height_at(mid)
        for (c_lo, c_hi), delta in zip(cells, deltas):
            if c_lo <= mid < c_hi:
                h += delta
        heights.append(max(h, 0.0))
    return PiecewiseDensity(tuple(merged), tuple(heights), dens.atoms)


def _slice_swap(
    sol: EquilibriumSolution,
    giver: int,
    taker: int,
    center: float,
    spacing: float,
    width: float,
    strength: float,
) -> EquilibriumSolution | None:
    """Exchange three equally spaced slices between two strategies.

    The giver sheds height ``s`` on the two outer slices and absorbs
    ``2s`` on the middle one; the taker does the opposite.  Equal spacing
    makes the exchange conserve both mass and mean for both groups, and
    the two deltas cancel so the aggregate is untouched.
    """
    cells = [
        (center - spacing - 0.5 * width, center - spacing + 0.5 * width),
        (center - 0.5 * width, center + 0.5 * width),
        (center + spacing - 0.5 * width, center + spacing + 0.5 * width),
    ]
    f_give = sol.groups[giver].strategy
    f_take = sol.groups[taker].strategy
    headroom_outer = min(
        _min_height(f_give, *cells[0]), _min_height(f_give, *cells[2])
    )
    headroom_mid = 0.5 * _min_height(f_take, *cells[1])
    s = strength * min(headroom_outer, headroom_mid)
    if s <= 100.0 * EPS:
        return None
    give_delta = [-s, 2.0 * s, -s]
    take_delta = [s, -2.0 * s, s]
    new_groups = list(sol.groups)
    new_groups[giver] = SubPopulation(
        sol.groups[giver].budget,
        sol.groups[giver].mass,
        _patched(f_give, cells, give_delta),
    )
    new_groups[taker] = SubPopulation(
        sol.groups[taker].budget,
        sol.groups[taker].mass,
        _patched(f_take, cells, take_delta),
    )
    return EquilibriumSolution(tuple(new_groups), sol.aggregate)


def league_rewire(
    sol: EquilibriumSolution,
    league_index: int,
    seed: int = 0,
    tol: float = EPS,
    attempts: int = 64,
) -> EquilibriumSolution:
    """Reshape outcomes inside one league without touching the aggregate.

    Tries equal-budget strategy trades first, then searches for a
    mass-and-mean-preserving slice exchange between two league members,
    preferring any move that flips an edge direction outright over one
    that merely shifts probabilities.  Raises if the league has fewer
    than two members, no overlapping supports, or no exchange that moves
    any outcome.  Deterministic for a given seed.
    """
    partition = leagues(sol, tol)
    if not 0 <= league_index < len(partition.leagues):
        raise ValueError(f"no league {league_index}")
    league = partition.leagues[league_index]
    members = league.members
    span_lo, span_hi = league.span
    if len(members) < 2:
        raise ValueError("league has fewer than two members, nothing to rewire")
    pairs = []
    for a, b in combinations(members, 2):
        hull_a = sol.groups[a].strategy.support
        hull_b = sol.groups[b].strategy.support
        if hull_a is None or hull_b is None:
            continue
        lo = max(hull_a[0], hull_b[0])
        hi = min(hull_a[1], hull_b[1])
        if hi - lo > 100.0 * EPS:
            pairs.append((a, b, lo, hi))
    if not pairs:
        raise ValueError("league members have no overlapping supports")
    rng = np.random.default_rng(seed)
    before = outcome_matrix(sol).probs

    fallback: EquilibriumSolution | None = None

    # Equal-budget members can trade entire strategies: the aggregate is a
    # mixture of the same densities, so it is literally unchanged, and a
    # cycle through the pair reverses.
    for a, b, _, _ in pairs:
        if abs(sol.groups[a].budget - sol.groups[b].budget) > tol:
            continue
        swapped = list(sol.groups)
        swapped[a] = SubPopulation(
            sol.groups[a].budget, sol.groups[a].mass, sol.groups[b].strategy
        )
        swapped[b] = SubPopulation(
            sol.groups[b].budget, sol.groups[b].mass, sol.groups[a].strategy
        )
        candidate = EquilibriumSolution(tuple(swapped), sol.aggregate)
        after = outcome_matrix(candidate).probs
        if np.any(
            ((before - 0.5) * (after - 0.5) < 0.0) & (np.abs(after - 0.5) > tol)
        ):
            return candidate
        if fallback is None and np.max(np.abs(after - before)) > tol:
            fallback = candidate

    def random_slices(
        current: EquilibriumSolution, giver: int, taker: int
    ) -> EquilibriumSolution | None:
        # the middle slice sits in a taker run, an outer one in a giver
        # run, so gapped supports (dice) stay reachable
        take_runs = [
            r
            for r in current.groups[taker].strategy.support_runs()
            if r[1] - r[0] > 100.0 * EPS
        ]
        give_runs = [
            r
            for r in current.groups[giver].strategy.support_runs()
            if r[1] - r[0] > 100.0 * EPS
        ]
        if not take_runs or not give_runs:
            return None
        t_lo, t_hi = take_runs[int(rng.integers(len(take_runs)))]
        center = t_lo + rng.random() * (t_hi - t_lo)
        g_lo, g_hi = give_runs[int(rng.integers(len(give_runs)))]
        anchor = g_lo + rng.random() * (g_hi - g_lo)
        spacing = abs(anchor - center)
        width_cap = min(
            2.0 * (t_hi - center),
            2.0 * (center - t_lo),
            spacing,
            2.0 * (center - spacing - span_lo),
            2.0 * (span_hi - center - spacing),
        )
        if spacing <= 100.0 * EPS or width_cap <= 100.0 * EPS:
            return None
        width = width_cap * (0.4 + 0.6 * rng.random())
        return _slice_swap(current, giver, taker, center, spacing, width, 1.0)

    for trial in range(2 * len(pairs)):
        # deterministic warm start: equal thirds of each hull overlap
        a, b, lo, hi = pairs[trial % len(pairs)]
        third = (hi - lo) / 3.0
        giver, taker = (a, b) if trial < len(pairs) else (b, a)
        candidate = _slice_swap(sol, giver, taker, 0.5 * (lo + hi), third, third, 1.0)
        if candidate is None:
            continue
        after = outcome_matrix(candidate).probs
        if np.any(
            ((before - 0.5) * (after - 0.5) < 0.0) & (np.abs(after - 0.5) > tol)
        ):
            return candidate
        if fallback is None and np.max(np.abs(after - before)) > tol:
            fallback = candidate

    # Greedy composition: single exchanges are bounded by slice headroom,
    # so chain several, each chosen to push the tightest pair across the
    # coin-flip line.  Every step preserves the invariants, hence so does
    # the composite.
    ti, tj = min(
        ((i, j) for i, j in combinations(members, 2)),
        key=lambda p: abs(before[p[0], p[1]] - 0.5),
    )
    direction = 1.0 if before[ti, tj] < 0.5 else -1.0
    current = sol
    value = before[ti, tj]
    stale = 0
    for _ in range(attempts):
        best: tuple[float, EquilibriumSolution] | None = None
        found = 0
        for _ in range(96):
            giver, taker = (ti, tj) if rng.random() < 0.5 else (tj, ti)
            candidate = random_slices(current, giver, taker)
            if candidate is None:
                continue
            found += 1
            moved = win_prob(
                candidate.groups[ti].strategy.normalized(),
                candidate.groups[tj].strategy.normalized(),
            )
            if best is None or (moved - value) * direction > (best[0] - value) * direction:
                best = (moved, candidate)
            if found >= 16:
                break
        if best is None or (best[0] - value) * direction <= 1e-13:
            stale += 1
            if stale >= 3:
                break
            continue
        stale = 0
        value, current = best
        if (value - 0.5) * (before[ti, tj] - 0.5) < 0.0 and abs(value - 0.5) > tol:
            return current
    if current is not sol and np.max(np.abs(outcome_matrix(current).probs - before)) > tol:
        return current
    if fallback is not None:
        return fallback
    raise ValueError("no slice exchange changed the outcome matrix")


def export_digraph(
    matrix: OutcomeMatrix,
    partition: LeaguePartition,
    fmt: str = "dot",
    budgets: Sequence[float] | None = None,
    tol: float = EPS,
) -> str:
    """Render the outcome digraph, leagues as clusters.

    An edge runs from each group to its expected winner; a certain edge
    marks a probability-one outcome.  Exact coin flips yield edges both
    ways.  Formats: ``dot`` (Graphviz) or ``json``.
    """
    W = matrix.probs
    n = matrix.n
    edges = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if W[j, i] >= 0.5:
                edges.append(
                    {
                        "from": i,
                        "to": j,
                        "prob": float(W[j, i]),
                        "certain": bool(W[j, i] >= 1.0 - tol),
                    }
                )
    nodes = []
    for i in range(n):
        node = {"id": i, "league": partition.league_of(i)}
        if budgets is not None:
            node["budget"] = float(budgets[i])
        nodes.append(node)
    if fmt == "json":
        return json.dumps({"nodes": nodes, "edges": edges}, indent=2)
    if fmt != "dot":
        raise ValueError(f"unsupported digraph format {fmt!r}")
    lines = ["digraph outcomes {", "  rankdir=BT;"]
    for rank, lg in enumerate(partition.leagues):
        lines.append(f"  subgraph cluster_{rank} {{")
        lines.append(f'    label="league {rank} (height {lg.height:.6g})";')
        for i in lg.members:
            label = f"g{i}"
            if budgets is not None:
                label += f" (b={budgets[i]:.6g})"
            lines.append(f'    n{i} [label="{label}"];')
        lines.append("  }")
    for e in edges:
        style = ", color=red" if e["certain"] else ""
        lines.append(
            f'  n{e["from"]} -> n{e["to"]} '
            f'[label="{e["prob"]:.3f}", certain={"true" if e["certain"] else "false"}{style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def step_samples_csv(sol: EquilibriumSolution) -> str:
    """CSV samples of the aggregate and every strategy for step plotting.

    Each segment contributes its two corners, so plotting x against value
    with straight lines reproduces the exact step function.  Atoms appear
    as their own rows.
    """
    lines = ["series,kind,x,value"]

    def emit(name: str, dens: PiecewiseDensity) -> None:
        for lo, hi, h in dens.segments():
            lines.append(f"{name},step,{lo!r},{h!r}")
            lines.append(f"{name},step,{hi!r},{h!r}")
        for loc, mass in dens.atoms:
            lines.append(f"{name},atom,{loc!r},{mass!r}")

    emit("aggregate", sol.aggregate)
    for idx, g in enumerate(sol.groups):
        emit(f"group{idx}", g.strategy)
    return "\n".join(lines) + "\n"
