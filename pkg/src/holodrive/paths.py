"""Control-parameter schedules on the (theta, phi) sphere.

A loop is a chain of single-coordinate sweeps.  Within each sweep the moving
coordinate follows a sin^2(pi u / 2)-smoothed progress variable, so the
angular velocity vanishes at every joint and the assembled path is C^1.
Smoothing changes the speed profile only, never the path image, so the
holonomies carried around these loops are unaffected by it.

Both stock loops close exactly in (theta, phi): the sweep legs are followed
by a phi-return leg at the theta = 0 pole, where the Hamiltonian families in
this package are phi-independent and the return is physically inert.  Total
time is split equally between the three sweep stages, with the pole return
sharing the final stage's allotment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .transport import ParameterSchedule

THETA = 0
PHI = 1

_RAMPS = {
    "sin2": (
        lambda u: math.sin(math.pi * u / 2.0) ** 2,
        lambda u: (math.pi / 2.0) * math.sin(math.pi * u),
    ),
    "linear": (lambda u: u, lambda u: 1.0),
}


@dataclass(frozen=True)
class PathSegment:
    """One single-coordinate sweep: `kind` names the moving coordinate."""

    kind: str  # "theta-sweep" | "phi-sweep"
    start: float
    end: float
    fixed: float
    fraction: float

    def __post_init__(self):
        if self.kind not in ("theta-sweep", "phi-sweep"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.fraction <= 0:
            raise ValueError("segment duration fraction must be positive")

    def endpoint(self, where):
        """(theta, phi) at the segment start ('a') or end ('b')."""
        moving = self.start if where == "a" else self.end
        if self.kind == "theta-sweep":
            return np.array([moving, self.fixed])
        return np.array([self.fixed, moving])


def _same_sphere_point(a, b, tol=1e-12):
    """(theta, phi) pairs naming one point: theta equal, phi equal mod 2*pi
    (any phi at the poles)."""
    if abs(a[THETA] - b[THETA]) > tol:
        return False
    if min(abs(a[THETA]), abs(a[THETA] - math.pi)) <= tol:
        return True
    dphi = abs(a[PHI] - b[PHI]) % (2.0 * math.pi)
    return min(dphi, 2.0 * math.pi - dphi) <= tol


def _locate(segments, horizon, t):
    """(segment index, local progress u in [0, 1]) at time t."""
    u = min(max(t / horizon, 0.0), 1.0)
    acc = 0.0
    for i, seg in enumerate(segments):
        if u <= acc + seg.fraction or i == len(segments) - 1:
            return i, min(max((u - acc) / seg.fraction, 0.0), 1.0)
        acc += seg.fraction
    raise AssertionError("unreachable")


def _chain_point(segments, horizon, ramp, t):
    i, u = _locate(segments, horizon, t)
    seg = segments[i]
    shape, _ = _RAMPS[ramp]
    moving = seg.start + (seg.end - seg.start) * shape(u)
    if seg.kind == "theta-sweep":
        return np.array([moving, seg.fixed])
    return np.array([seg.fixed, moving])


def _chain_rate(segments, horizon, ramp, t):
    i, u = _locate(segments, horizon, t)
    seg = segments[i]
    _, slope = _RAMPS[ramp]
    speed = (seg.end - seg.start) * slope(u) / (seg.fraction * horizon)
    out = np.zeros(2)
    out[THETA if seg.kind == "theta-sweep" else PHI] = speed
    return out


@dataclass(frozen=True)
class LoopSchedule:
    """A closed chain of sweeps traversed in total time `horizon`."""

    segments: tuple[PathSegment, ...]
    horizon: float
    ramp: str = "sin2"

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("total time must be positive")
        if self.ramp not in _RAMPS:
            raise ValueError(f"unknown ramp {self.ramp!r}")
        fractions = sum(s.fraction for s in self.segments)
        if abs(fractions - 1.0) > 1e-12:
            raise ValueError("segment duration fractions must sum to 1")
        for a, b in zip(self.segments, self.segments[1:]):
            if np.max(np.abs(a.endpoint("b") - b.endpoint("a"))) > 1e-12:
                raise ValueError("segments are not continuous")
        first = self.segments[0].endpoint("a")
        last = self.segments[-1].endpoint("b")
        if not _same_sphere_point(first, last):
            raise ValueError(f"loop does not close on the sphere ({first} vs {last})")

    def point(self, t):
        """(theta, phi) at time t."""
        return _chain_point(self.segments, self.horizon, self.ramp, t)

    def rate(self, t):
        """d(theta, phi)/dt at time t."""
        return _chain_rate(self.segments, self.horizon, self.ramp, t)

    def segment_window(self, i):
        """[t0, t1] spanned by segment i."""
        before = sum(s.fraction for s in self.segments[:i])
        return before * self.horizon, (before + self.segments[i].fraction) * self.horizon

    def to_parameter_schedule(self):
        return ParameterSchedule(path=self.point, velocity=self.rate, horizon=self.horizon, is_loop=True)


def _check_opening(opening):
    if not -2.0 * math.pi < opening < 2.0 * math.pi:
        raise ValueError("opening angle must lie in (-2*pi, 2*pi)")


DEFAULT_FRACTIONS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0)


def orange_slice_schedule(phi1, horizon, ramp="sin2", fractions=DEFAULT_FRACTIONS):
    """Pole-to-pole meridian, equatorial opening phi1 at theta = pi, and return.

    Stages: theta 0 -> pi at phi = 0; phi 0 -> phi1 at theta = pi; theta
    pi -> 0 at phi = phi1, then phi back to 0 at the pole.  By default the
    first two stages take a third of `horizon` each and the final third is
    split between the descent and the pole return.
    """
    _check_opening(phi1)
    if horizon <= 0:
        raise ValueError("total time must be positive")
    f1, f2, f3, f4 = fractions
    segments = (
        PathSegment("theta-sweep", 0.0, math.pi, fixed=0.0, fraction=f1),
        PathSegment("phi-sweep", 0.0, phi1, fixed=math.pi, fraction=f2),
        PathSegment("theta-sweep", math.pi, 0.0, fixed=phi1, fraction=f3),
        PathSegment("phi-sweep", phi1, 0.0, fixed=0.0, fraction=f4),
    )
    return LoopSchedule(segments=segments, horizon=float(horizon), ramp=ramp)


def geodesic_triangle_schedule(phi2, horizon, ramp="sin2", fractions=DEFAULT_FRACTIONS):
    """Pole -> equator -> equatorial arc phi2 -> pole, closing at (0, 0).

    Stages: theta 0 -> pi/2 at phi = 0; phi 0 -> phi2 at theta = pi/2; theta
    pi/2 -> 0 at phi = phi2, then phi back to 0 at the pole.  Time split as in
    `orange_slice_schedule`.
    """
    _check_opening(phi2)
    if horizon <= 0:
        raise ValueError("total time must be positive")
    half_pi = math.pi / 2.0
    f1, f2, f3, f4 = fractions
    segments = (
        PathSegment("theta-sweep", 0.0, half_pi, fixed=0.0, fraction=f1),
        PathSegment("phi-sweep", 0.0, phi2, fixed=half_pi, fraction=f2),
        PathSegment("theta-sweep", half_pi, 0.0, fixed=phi2, fraction=f3),
        PathSegment("phi-sweep", phi2, 0.0, fixed=0.0, fraction=f4),
    )
    return LoopSchedule(segments=segments, horizon=float(horizon), ramp=ramp)


def solid_angle(loop):
    """Signed spherical area enclosed by a loop: the line integral of (1 - cos theta) dphi.

    Exact for these chains: theta sweeps contribute nothing (dphi = 0) and a
    phi sweep at fixed theta contributes (1 - cos theta) * (end - start).
    The sign follows the traversal orientation.
    """
    if not isinstance(loop, LoopSchedule):
        raise TypeError("solid_angle expects a closed LoopSchedule")
    total = 0.0
    for seg in loop.segments:
        if seg.kind == "phi-sweep":
            total += (1.0 - math.cos(seg.fixed)) * (seg.end - seg.start)
    return total


def sweep_schedule(kind, start, end, fixed, horizon, ramp="sin2"):
    """A single smoothed sweep as an open ParameterSchedule."""
    segments = (PathSegment(kind, start, end, fixed=fixed, fraction=1.0),)
    return ParameterSchedule(
        path=lambda t: _chain_point(segments, horizon, ramp, t),
        velocity=lambda t: _chain_rate(segments, horizon, ramp, t),
        horizon=float(horizon),
        is_loop=False,
    )
