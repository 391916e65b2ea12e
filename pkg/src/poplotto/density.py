"""Step-function densities on the non-negative reals.

A density is a finite list of constant-height segments plus optional point
masses.  Segments are half-open ``[x[j-1], x[j])``, so a value sitting on an
interior breakpoint belongs to the segment on its right.  Cumulative queries
report the mass strictly below a point and the mass sitting exactly on it
separately, which is what tie-splitting payoffs need.

Construction canonicalizes the representation: breakpoints closer than
``EPS`` are merged, the resulting zero-width segments are dropped,
zero-height edge segments are trimmed, adjacent segments of identical
height are coalesced, and coincident atoms are pooled.  Instances are
immutable and safe to share across threads.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

# Absolute tolerance shared by every geometric comparison in the package.
EPS = 1e-9


@dataclass(frozen=True)
class CdfValue:
    """Cumulative mass split into a strictly-below part and an exactly-at part."""

    below: float
    at: float

    @property
    def midpoint(self) -> float:
        """Mass below plus half the mass at; the tie-splitting evaluation."""
        return self.below + 0.5 * self.at

    @property
    def inclusive(self) -> float:
        return self.below + self.at


def _clean_segments(
    breakpoints: Sequence[float], heights: Sequence[float]
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    bp = [float(x) for x in breakpoints]
    hs = [float(h) for h in heights]
    if any(not math.isfinite(x) for x in bp) or any(not math.isfinite(h) for h in hs):
        raise ValueError("breakpoints and heights must be finite")
    if not bp and not hs:
        return (), ()
    if len(bp) != len(hs) + 1:
        raise ValueError(
            f"expected one more breakpoint than heights, got {len(bp)} and {len(hs)}"
        )
    for left, right in zip(bp, bp[1:]):
        if right < left - EPS:
            raise ValueError("breakpoints must be increasing")
    for h in hs:
        if h < -EPS:
            raise ValueError("heights must be non-negative")

    # Merge breakpoints closer than EPS by skipping the sliver segments.
    segs: list[tuple[float, float, float]] = []
    cursor = bp[0]
    for j, h in enumerate(hs):
        right = bp[j + 1]
        if right - cursor < EPS:
            continue
        h = max(h, 0.0)
        if segs and segs[-1][2] == h:
            segs[-1] = (segs[-1][0], right, h)
        else:
            segs.append((cursor, right, h))
        cursor = right
    while segs and segs[0][2] == 0.0:
        segs.pop(0)
    while segs and segs[-1][2] == 0.0:
        segs.pop()
    if not segs:
        return (), ()
    out_bp = [segs[0][0]] + [s[1] for s in segs]
    out_hs = [s[2] for s in segs]
    return tuple(out_bp), tuple(out_hs)


def _clean_atoms(
    atoms: Sequence[tuple[float, float]]
) -> tuple[tuple[float, float], ...]:
    cleaned: list[tuple[float, float]] = []
    for loc, mass in atoms:
        loc = float(loc)
        mass = float(mass)
        if not (math.isfinite(loc) and math.isfinite(mass)):
            raise ValueError("atoms must be finite")
        if loc < -EPS:
            raise ValueError("atom locations must be non-negative")
        if mass < -EPS:
            raise ValueError("atom masses must be non-negative")
        if mass <= 0.0:
            continue
        cleaned.append((max(loc, 0.0), mass))
    cleaned.sort()
    merged: list[tuple[float, float]] = []
    for loc, mass in cleaned:
        if merged and loc - merged[-1][0] <= EPS:
            merged[-1] = (merged[-1][0], merged[-1][1] + mass)
        else:
            merged.append((loc, mass))
    return tuple(merged)


@dataclass(frozen=True)
class PiecewiseDensity:
    """Non-negative step density with optional point masses.

    ``heights[j]`` applies on ``[breakpoints[j], breakpoints[j+1])``.  The
    empty tuple pair represents the zero density.
    """

    breakpoints: tuple[float, ...] = ()
    heights: tuple[float, ...] = ()
    atoms: tuple[tuple[float, float], ...] = ()
    _seg_cum: tuple[float, ...] = field(
        init=False, repr=False, compare=False, default=()
    )
    _atom_locs: tuple[float, ...] = field(
        init=False, repr=False, compare=False, default=()
    )
    _atom_cum: tuple[float, ...] = field(
        init=False, repr=False, compare=False, default=()
    )

    def __post_init__(self) -> None:
        bp, hs = _clean_segments(self.breakpoints, self.heights)
        atoms = _clean_atoms(self.atoms)
        seg_cum = [0.0]
        for j, h in enumerate(hs):
            seg_cum.append(seg_cum[-1] + h * (bp[j + 1] - bp[j]))
        atom_cum = [0.0]
        for _, mass in atoms:
            atom_cum.append(atom_cum[-1] + mass)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "heights", hs)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_seg_cum", tuple(seg_cum))
        object.__setattr__(self, "_atom_locs", tuple(a[0] for a in atoms))
        object.__setattr__(self, "_atom_cum", tuple(atom_cum))

    @classmethod
    def uniform(cls, lo: float, hi: float, mass: float = 1.0) -> "PiecewiseDensity":
        """Single flat block on ``[lo, hi]`` carrying ``mass``."""
        if not hi > lo:
            raise ValueError("uniform block needs hi > lo")
        return cls((float(lo), float(hi)), (float(mass) / (float(hi) - float(lo)),))

    @classmethod
    def point(cls, loc: float, mass: float = 1.0) -> "PiecewiseDensity":
        """Pure point mass at ``loc``."""
        return cls((), (), ((float(loc), float(mass)),))

    def segments(self) -> Iterator[tuple[float, float, float]]:
        """Yield ``(lo, hi, height)`` for each segment in order."""
        for j, h in enumerate(self.heights):
            yield self.breakpoints[j], self.breakpoints[j + 1], h

    @property
    def total_mass(self) -> float:
        return self._seg_cum[-1] + self._atom_cum[-1]

    @property
    def first_moment(self) -> float:
        moment = 0.0
        for lo, hi, h in self.segments():
            moment += h * (hi * hi - lo * lo) / 2.0
        for loc, mass in self.atoms:
            moment += mass * loc
        return moment

    def mean(self) -> float:
        mass = self.total_mass
        if mass <= EPS:
            raise ValueError("mean of a zero-mass density is undefined")
        return self.first_moment / mass

    def cdf(self, x: float) -> CdfValue:
        """Mass strictly below ``x`` and mass sitting exactly at ``x``.

        Atoms within ``EPS`` of ``x`` count as sitting at ``x``.
        """
        x = float(x)
        below = 0.0
        bp = self.breakpoints
        if bp:
            if x >= bp[-1]:
                below = self._seg_cum[-1]
            elif x > bp[0]:
                j = bisect.bisect_right(bp, x) - 1
                below = self._seg_cum[j] + self.heights[j] * (x - bp[j])
        lo = bisect.bisect_left(self._atom_locs, x - EPS)
        hi = bisect.bisect_right(self._atom_locs, x + EPS)
        below += self._atom_cum[lo]
        at = self._atom_cum[hi] - self._atom_cum[lo]
        return CdfValue(below, at)

    def height_at(self, x: float) -> float:
        """Density height at ``x``.

        On a breakpoint the left segment's height is reported, so plateau
        heights are stable when queried at their right edge.  Points within
        ``EPS`` of a breakpoint snap to it.
        """
        bp = self.breakpoints
        if not bp or x < bp[0] - EPS or x > bp[-1] + EPS:
            return 0.0
        j = bisect.bisect_left(bp, x)
        for idx in (j - 1, j):
            if 0 <= idx < len(bp) and abs(bp[idx] - x) <= EPS:
                return self.heights[0] if idx == 0 else self.heights[idx - 1]
        return self.heights[j - 1]

    @property
    def support(self) -> tuple[float, float] | None:
        """Hull of the support, or None for the zero density."""
        lo = math.inf
        hi = -math.inf
        for s_lo, s_hi, h in self.segments():
            if h > 0.0:
                lo = min(lo, s_lo)
                hi = max(hi, s_hi)
        for loc, _ in self.atoms:
            lo = min(lo, loc)
            hi = max(hi, loc)
        if lo > hi:
            return None
        return lo, hi

    def support_runs(self) -> list[tuple[float, float]]:
        """Maximal intervals of positive height, atoms as zero-width runs."""
        runs: list[tuple[float, float]] = []
        for lo, hi, h in self.segments():
            if h <= 0.0:
                continue
            if runs and abs(runs[-1][1] - lo) <= EPS:
                runs[-1] = (runs[-1][0], hi)
            else:
                runs.append((lo, hi))
        for loc, _ in self.atoms:
            runs.append((loc, loc))
        runs.sort()
        merged: list[tuple[float, float]] = []
        for lo, hi in runs:
            if merged and lo <= merged[-1][1] + EPS:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return merged

    def scaled(self, factor: float) -> "PiecewiseDensity":
        if not math.isfinite(factor) or factor < 0.0:
            raise ValueError("scale factor must be non-negative and finite")
        return PiecewiseDensity(
            self.breakpoints,
            tuple(h * factor for h in self.heights),
            tuple((loc, mass * factor) for loc, mass in self.atoms),
        )

    def normalized(self) -> "PiecewiseDensity":
        mass = self.total_mass
        if mass <= EPS:
            raise ValueError("cannot normalize a zero-mass density")
        return self.scaled(1.0 / mass)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` values by inverse transform sampling."""
        mass = self.total_mass
        if mass <= EPS:
            raise ValueError("cannot sample from a zero-mass density")
        running = 0.0
        pieces: list[tuple[float, float, float]] = []
        for lo, hi, h in self.segments():
            if h > 0.0:
                running += h * (hi - lo)
                pieces.append((running, lo, h))
        for loc, m in self.atoms:
            running += m
            pieces.append((running, loc, 0.0))
        cum = np.array([p[0] for p in pieces])
        lo_arr = np.array([p[1] for p in pieces])
        height_arr = np.array([p[2] for p in pieces])
        u = rng.random(n) * mass
        idx = np.searchsorted(cum, u, side="right")
        idx = np.minimum(idx, len(pieces) - 1)
        prev = np.where(idx > 0, cum[idx - 1], 0.0)
        h = height_arr[idx]
        offset = np.where(h > 0.0, (u - prev) / np.where(h > 0.0, h, 1.0), 0.0)
        return lo_arr[idx] + offset

    def to_dict(self) -> dict:
        return {
            "breakpoints": list(self.breakpoints),
            "heights": list(self.heights),
            "atoms": [[loc, mass] for loc, mass in self.atoms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewiseDensity":
        try:
            bp = tuple(float(x) for x in data["breakpoints"])
            hs = tuple(float(h) for h in data["heights"])
            atoms = tuple(
                (float(a[0]), float(a[1])) for a in data.get("atoms", ())
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"malformed density record: {exc}") from exc
        return cls(bp, hs, atoms)


def step_gap(a: PiecewiseDensity, b: PiecewiseDensity) -> float:
    """Largest pointwise difference between two densities.

    Compares segment heights on the union grid and atom masses at pooled
    locations; zero means the densities describe the same measure.
    """
    pts = sorted(set(a.breakpoints) | set(b.breakpoints))
    gap = 0.0
    for lo, hi in zip(pts, pts[1:]):
        if hi - lo < EPS:
            continue
        mid = 0.5 * (lo + hi)
        gap = max(gap, abs(a.height_at(mid) - b.height_at(mid)))
    locs = sorted(
        set(loc for loc, _ in a.atoms) | set(loc for loc, _ in b.atoms)
    )
    for loc in locs:
        gap = max(gap, abs(a.cdf(loc).at - b.cdf(loc).at))
    return gap


def mixture(parts: Sequence[tuple[float, PiecewiseDensity]]) -> PiecewiseDensity:
    """Weighted sum of densities.  Weights must be non-negative.

    The result's mass is the weighted sum of the parts' masses; atoms landing
    within ``EPS`` of each other are pooled by the constructor.
    """
    pts: list[float] = []
    atoms: list[tuple[float, float]] = []
    active: list[tuple[float, PiecewiseDensity]] = []
    for weight, dens in parts:
        weight = float(weight)
        if not math.isfinite(weight) or weight < 0.0:
            raise ValueError("mixture weights must be non-negative and finite")
        if weight == 0.0:
            continue
        active.append((weight, dens))
        pts.extend(dens.breakpoints)
        atoms.extend((loc, weight * mass) for loc, mass in dens.atoms)
    if not pts:
        return PiecewiseDensity((), (), tuple(atoms))
    grid = sorted(set(pts))
    merged = [grid[0]]
    for x in grid[1:]:
        if x - merged[-1] >= EPS:
            merged.append(x)
    heights = []
    for lo, hi in zip(merged, merged[1:]):
        mid = 0.5 * (lo + hi)
        heights.append(sum(w * d.height_at(mid) for w, d in active))
    return PiecewiseDensity(tuple(merged), tuple(heights), tuple(atoms))
