"""Control schedules: piecewise-constant, linear ramp, and bang-bang.

Protocols store segment durations rather than absolute switch times, so
the durations sum exactly to the total time; absolute breakpoints are
derived on demand.  Zero-duration segments are dropped silently during
construction (they arise when a bang-bang switch sits at 0 or tau).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError


class Segment(NamedTuple):
    dt: float
    b: float
    j: float


@dataclass(frozen=True)
class BangBangParams:
    """One-switch-per-control schedule: b jumps 0 -> 1 at ``t_b``,
    j jumps 1 -> 0 at ``t_j``, over total time ``tau``."""

    tau: float
    t_b: float
    t_j: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValidationError(f"tau must be nonnegative and finite, got {self.tau}")
        for name, value in (("t_b", self.t_b), ("t_j", self.t_j)):
            if not 0.0 <= value <= self.tau:
                raise ValidationError(
                    f"{name}={value} outside the evolution window [0, {self.tau}]"
                )


@dataclass(frozen=True)
class Protocol:
    """Immutable piecewise-constant schedule for the two couplings."""

    tau: float
    segments: tuple[Segment, ...]
    case: int = -1
    lam: float = 1.0

    def __post_init__(self):
        if self.case not in (1, -1):
            raise ValidationError(f"case must be +1 or -1, got {self.case!r}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValidationError(f"lam must be positive and finite, got {self.lam}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValidationError(f"tau must be nonnegative and finite, got {self.tau}")
        for i, seg in enumerate(self.segments):
            if not (math.isfinite(seg.dt) and seg.dt > 0):
                raise ValidationError(f"segment {i}: duration {seg.dt} must be positive")
            for name, value in (("b", seg.b), ("j", seg.j)):
                if not (math.isfinite(value) and 0.0 <= value <= self.lam):
                    raise ValidationError(
                        f"segment {i}: {name}={value} outside [0, {self.lam}]"
                    )
        total = math.fsum(seg.dt for seg in self.segments)
        if abs(total - self.tau) > 1e-12:
            raise ValidationError(
                f"segment durations sum to {total}, expected tau={self.tau}"
            )

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def breakpoints(self) -> np.ndarray:
        """Absolute segment end times, derived from the durations."""
        return np.cumsum([seg.dt for seg in self.segments])


def make_pwc(tau: float, values, case: int = -1, lam: float = 1.0) -> Protocol:
    """Equal-duration piecewise-constant protocol from (b, j) pairs."""
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive and finite, got {tau}")
    pairs = list(values)
    if len(pairs) < 1:
        raise ValidationError("at least one (b, j) value pair is required")
    dt = tau / len(pairs)
    segments = tuple(Segment(dt, float(b), float(j)) for b, j in pairs)
    return Protocol(tau=tau, segments=segments, case=case, lam=lam)


def linear_protocol(tau: float, n_segments: int, case: int = -1) -> Protocol:
    """Linear ramp b: 1 -> 0, j: 0 -> 1, sampled at segment midpoints.

    Midpoint sampling halves the discretization bias relative to
    endpoint sampling.
    """
    if n_segments < 1:
        raise ValidationError(f"n_segments must be at least 1, got {n_segments}")
    fractions = (np.arange(n_segments) + 0.5) / n_segments
    return make_pwc(tau, [(1.0 - f, f) for f in fractions], case=case)


def bang_bang_protocol(params: BangBangParams, case: int = -1) -> Protocol:
    """Expand bang-bang switch times into at most three constant segments.

    Controls are right-continuous at their switch time: b is 1 from
    ``t_b`` on, j is 0 from ``t_j`` on.
    """
    tau = params.tau
    s1, s2 = sorted((params.t_b, params.t_j))
    edges = [0.0, s1, s2, tau]
    segments = []
    for start, end in zip(edges[:-1], edges[1:]):
        if end - start <= 0.0:
            continue
        b = 1.0 if start >= params.t_b else 0.0
        j = 0.0 if start >= params.t_j else 1.0
        segments.append(Segment(end - start, b, j))
    return Protocol(tau=tau, segments=tuple(segments), case=case)


def protocol_to_dict(protocol: Protocol) -> dict:
    """JSON-ready form: {"tau", "case", "segments": [{"dt", "b", "j"}, ...]}."""
    doc = {
        "tau": protocol.tau,
        "case": f"{protocol.case:+d}",
        "segments": [{"dt": s.dt, "b": s.b, "j": s.j} for s in protocol.segments],
    }
    if protocol.lam != 1.0:
        doc["lam"] = protocol.lam
    return doc


def protocol_from_dict(doc: dict) -> Protocol:
    """Inverse of :func:`protocol_to_dict`, with full validation."""
    try:
        case = int(doc["case"])
        segments = tuple(
            Segment(float(s["dt"]), float(s["b"]), float(s["j"]))
            for s in doc["segments"]
        )
        tau = float(doc["tau"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed protocol document: {exc}") from exc
    return Protocol(
        tau=tau, segments=segments, case=case, lam=float(doc.get("lam", 1.0))
    )
