"""Flight envelope: how frame rate bounds safe drone velocity.

Between two camera frames the drone travels d_frame = v / fps. To react
within the minimum obstacle-avoidance distance d_min it must see at least
`frames_to_react` frames before covering d_min, which bounds the velocity a
given frame rate supports (and, inverted, the frame rate a velocity needs).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class FlightParams:
    velocity_m_s: float
    d_min_m: float
    frames_to_react: int = 1
    fps: float = 0.0

    def __post_init__(self):
        if self.velocity_m_s < 0:
            raise DomainError("velocity must be >= 0")
        if self.d_min_m <= 0:
            raise DomainError("d_min must be > 0")
        if self.frames_to_react < 1:
            raise DomainError("frames_to_react must be >= 1")


def frame_distance(velocity_m_s: float, fps: float) -> float:
    """Distance traveled between consecutive frames."""
    if fps <= 0:
        raise DomainError(f"fps must be > 0, got {fps}")
    return velocity_m_s / fps


def min_fps(velocity_m_s: float, d_min_m: float, frames_to_react: int = 1) -> float:
    """Smallest frame rate that fits frames_to_react frames inside d_min."""
    if d_min_m <= 0:
        raise DomainError(f"d_min must be > 0, got {d_min_m}")
    if frames_to_react < 1:
        raise DomainError("frames_to_react must be >= 1")
    return velocity_m_s * frames_to_react / d_min_m


def max_velocity(fps: float, d_min_m: float, frames_to_react: int = 1) -> float:
    """Fastest velocity a frame rate supports for a given clearance."""
    if fps < 0:
        raise DomainError(f"fps must be >= 0, got {fps}")
    if d_min_m <= 0:
        raise DomainError(f"d_min must be > 0, got {d_min_m}")
    if frames_to_react < 1:
        raise DomainError("frames_to_react must be >= 1")
    return fps * d_min_m / frames_to_react
