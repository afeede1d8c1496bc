"""Microscopic and macroscopic quantities from per-second GNSS fleet recordings.

Speeds come from consecutive-fix displacements, gaps from leader/follower
positions corrected for locator offsets and leader length.  Internally all
arithmetic is SI (m, s); km/h and vessels/km appear only at the boundary
(exact factors 3.6 and 1000).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, MalformedTrackError

MS_TO_KMH = 3.6
M_PER_KM = 1000.0

LOAD_STATES = ("loaded", "empty")


@dataclass(frozen=True)
class GnssFix:
    """One positioning fix: whole seconds since run start, easting/northing in m."""

    t: int
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite coordinates at t={self.t}")


@dataclass(frozen=True)
class VesselMeta:
    fleet_position: int  # 1 = leading vessel
    length: float  # m
    locator_offset: float  # m, locator to bow
    load_state: str  # "loaded" | "empty"

    def __post_init__(self):
        if self.fleet_position < 1:
            raise DomainError(f"fleet_position must be >= 1, got {self.fleet_position}")
        if self.length <= 0:
            raise DomainError(f"vessel length must be positive, got {self.length}")
        if self.locator_offset < 0:
            raise DomainError(f"locator_offset must be >= 0, got {self.locator_offset}")
        if self.load_state not in LOAD_STATES:
            raise DomainError(f"load_state must be one of {LOAD_STATES}, got {self.load_state!r}")


@dataclass(frozen=True)
class VesselTrack:
    meta: VesselMeta
    fixes: tuple[GnssFix, ...]

    def __post_init__(self):
        object.__setattr__(self, "fixes", tuple(self.fixes))
        if len(self.fixes) < 2:
            raise MalformedTrackError("a track needs at least 2 fixes")
        times = [f.t for f in self.fixes]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise MalformedTrackError("fix timestamps must be strictly increasing")


@dataclass(frozen=True)
class FleetRun:
    run_id: str
    tracks: tuple[VesselTrack, ...]
    delta_t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        positions = [tr.meta.fleet_position for tr in self.tracks]
        if positions != list(range(1, len(positions) + 1)):
            raise MalformedTrackError(
                f"fleet positions must be consecutive 1..n, got {positions}"
            )
        if self.delta_t <= 0:
            raise DomainError("delta_t must be positive")


@dataclass(frozen=True)
class FlowSample:
    """One macroscopic observation; flow must equal density * mean_speed."""

    density: float  # vessels/km
    mean_speed: float  # km/h
    flow: float  # vessels/h
    t: Optional[int] = None  # absent for surveillance intervals

    def __post_init__(self):
        if self.density <= 0:
            raise DomainError(f"density must be positive, got {self.density}")
        if self.mean_speed < 0:
            raise DomainError(f"mean_speed must be >= 0, got {self.mean_speed}")
        expected = self.density * self.mean_speed
        if abs(self.flow - expected) > 1e-9 * max(1.0, abs(expected)):
            raise DomainError(
                f"flow {self.flow} inconsistent with density*speed {expected}"
            )

    @classmethod
    def from_density_speed(cls, density, mean_speed, t=None):
        return cls(density=density, mean_speed=mean_speed, flow=density * mean_speed, t=t)


@dataclass(frozen=True)
class GapSample:
    """Gap at one timestamp; non-positive gaps are kept but flagged."""

    t: int
    gap_m: float
    overlap_flagged: bool = field(default=False)


@dataclass(frozen=True)
class SummaryStats:
    p15: float
    median: float
    p85: float
    mean: float


def _check_uniform_spacing(track: VesselTrack, delta_t: float) -> None:
    bad = [
        (a.t, b.t)
        for a, b in zip(track.fixes, track.fixes[1:])
        if b.t - a.t != delta_t
    ]
    if bad:
        raise MalformedTrackError(
            f"non-uniform time spacing (expected {delta_t}s) at fix pairs: {bad}"
        )


def derive_speed(track: VesselTrack, delta_t: float = 1.0) -> list[float]:
    """Per-step speeds in km/h from consecutive fixes; length = len(fixes) - 1."""
    _check_uniform_spacing(track, delta_t)
    out = []
    for a, b in zip(track.fixes, track.fixes[1:]):
        dist = math.hypot(b.x - a.x, b.y - a.y)
        out.append(dist / delta_t * MS_TO_KMH)
    return out


def speed_series(track: VesselTrack, delta_t: float = 1.0) -> dict[int, float]:
    """Speeds keyed by the timestamp of the earlier fix of each pair (km/h)."""
    speeds = derive_speed(track, delta_t)
    return {fix.t: v for fix, v in zip(track.fixes, speeds)}


def derive_gap(leader: VesselTrack, follower: VesselTrack) -> list[GapSample]:
    """Bow-to-stern gaps (m) on the timestamp intersection of the two tracks.

    gap(t) = distance(leader, follower) + d_leader - d_follower - L_leader.
    Missing timestamps on either side are skipped; non-positive gaps are
    retained with ``overlap_flagged`` set (GNSS error, not physical overlap).
    """
    if leader.meta.fleet_position != follower.meta.fleet_position - 1:
        raise DomainError(
            "leader must be the vessel immediately ahead of the follower "
            f"(positions {leader.meta.fleet_position} vs {follower.meta.fleet_position})"
        )
    lead = {f.t: f for f in leader.fixes}
    foll = {f.t: f for f in follower.fixes}
    common = sorted(lead.keys() & foll.keys())
    if not common:
        raise DomainError("tracks share no common timestamp")
    offset = leader.meta.locator_offset - follower.meta.locator_offset - leader.meta.length
    out = []
    for t in common:
        a, b = lead[t], foll[t]
        gap = math.hypot(a.x - b.x, a.y - b.y) + offset
        out.append(GapSample(t=t, gap_m=gap, overlap_flagged=gap <= 0))
    return out


def harmonic_mean_speed(speeds: Sequence[float]) -> float:
    """Space-mean speed: n / sum(1/v_i).  Requires all speeds positive."""
    if not len(speeds):
        raise DomainError("harmonic mean of an empty list is undefined")
    if any(v <= 0 for v in speeds):
        raise DomainError("harmonic mean undefined for non-positive speeds")
    return len(speeds) / sum(1.0 / v for v in speeds)


def fleet_density(gaps: Sequence[float], follower_lengths: Sequence[float]) -> float:
    """Vessels per km occupied by m followers: m / (sum of gap+length, in km)."""
    if len(gaps) == 0 or len(gaps) != len(follower_lengths):
        raise DomainError("gaps and follower_lengths must be equal-length and non-empty")
    if any(length <= 0 for length in follower_lengths):
        raise DomainError("vessel lengths must be positive")
    occupied_m = sum(g + length for g, length in zip(gaps, follower_lengths))
    return len(gaps) / (occupied_m / M_PER_KM)


def fleet_flow_samples(run: FleetRun) -> list[FlowSample]:
    """Per-timestamp (density, space-mean speed, flow) for a fleet run.

    Timestamps where any member speed or gap is unavailable are skipped.
    """
    speed_by_vessel = [speed_series(tr, run.delta_t) for tr in run.tracks]
    gap_by_pair = [
        {g.t: g.gap_m for g in derive_gap(lead, foll)}
        for lead, foll in zip(run.tracks, run.tracks[1:])
    ]
    follower_lengths = [tr.meta.length for tr in run.tracks[1:]]

    common: set[int] = set(speed_by_vessel[0])
    for series in speed_by_vessel[1:]:
        common &= set(series)
    for series in gap_by_pair:
        common &= set(series)

    out = []
    for t in sorted(common):
        speeds = [series[t] for series in speed_by_vessel]
        gaps = [series[t] for series in gap_by_pair]
        v_bar = harmonic_mean_speed(speeds)
        k = fleet_density(gaps, follower_lengths)
        out.append(FlowSample.from_density_speed(k, v_bar, t=t))
    return out


def density_from_flow_speed(flow: float, speed: float) -> float:
    """k = q / v (vessels/km); undefined for non-positive speed."""
    if speed <= 0:
        raise DomainError(f"density undefined for speed {speed} <= 0")
    return flow / speed


def summary_stats(values: Sequence[float]) -> SummaryStats:
    """15th/50th/85th percentiles (linear interpolation) plus arithmetic mean."""
    if not len(values):
        raise DomainError("summary_stats of an empty list")
    arr = np.asarray(values, dtype=float)
    p15, p50, p85 = np.percentile(arr, [15, 50, 85])
    return SummaryStats(p15=float(p15), median=float(p50), p85=float(p85), mean=float(arr.mean()))
