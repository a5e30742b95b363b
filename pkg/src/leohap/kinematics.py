"""Discrete-time motion of the LEO constellation and the HAP relay.

All quantities are SI (meters, seconds). Satellites ride a straight,
periodically wrapped track: a satellite's *along-orbit coordinate* is its
offset along ``orbit_axis`` from ``track_origin`` and lives in ``[0, c_E)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np


def wrap(y, length: float):
    """Reduce ``y`` into ``[0, length)``; works on scalars and arrays."""
    out = np.mod(np.asarray(y, dtype=float), length)
    # np.mod returns ``length`` itself for tiny negative inputs
    out = np.where(out >= length, 0.0, out)
    return out if out.ndim else float(out)


def _require_finite(name: str, value) -> None:
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class KinematicsConfig:
    dt: float = 10.0
    a_max: float = 5.0
    window_length: float = 4000e3
    candidate_count: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.a_max > 0:
            raise ValueError(f"a_max must be > 0, got {self.a_max}")
        if not self.window_length > 0:
            raise ValueError(f"window_length must be > 0, got {self.window_length}")
        if self.candidate_count < 1:
            raise ValueError(f"candidate_count must be >= 1, got {self.candidate_count}")


@dataclass(frozen=True)
class SatelliteConstellation:
    """Snapshot of every satellite on one orbital plane.

    ``along`` holds the wrapped along-orbit coordinate of each satellite;
    ``positions`` are derived from it so the two can never disagree.
    """

    along: np.ndarray
    orbit_speed: float
    orbit_length: float
    altitude: float
    orbit_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    track_origin: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        axis = np.asarray(self.orbit_axis, dtype=float)
        if axis.shape != (3,) or axis[2] != 0.0 or not np.isclose(np.linalg.norm(axis), 1.0):
            raise ValueError(f"orbit_axis must be a horizontal unit 3-vector, got {axis}")
        object.__setattr__(self, "orbit_axis", axis)
        object.__setattr__(self, "track_origin", np.asarray(self.track_origin, dtype=float)[:2])
        along = wrap(np.asarray(self.along, dtype=float), self.orbit_length)
        object.__setattr__(self, "along", along)

    @classmethod
    def uniform(
        cls,
        count: int,
        orbit_length: float,
        orbit_speed: float,
        altitude: float,
        phase_offset: float = 0.0,
        orbit_axis=(0.0, 1.0, 0.0),
        track_origin=(0.0, 0.0),
    ) -> "SatelliteConstellation":
        """Equally spaced satellites, satellite 0 at ``phase_offset``."""
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        along = phase_offset + np.arange(count) * (orbit_length / count)
        return cls(
            along=along,
            orbit_speed=float(orbit_speed),
            orbit_length=float(orbit_length),
            altitude=float(altitude),
            orbit_axis=np.asarray(orbit_axis, dtype=float),
            track_origin=np.asarray(track_origin, dtype=float),
        )

    @property
    def count(self) -> int:
        return len(self.along)

    @property
    def spacing(self) -> float:
        return self.orbit_length / self.count

    def point_at(self, along) -> np.ndarray:
        """Cartesian point(s) on the track at the given along-orbit coordinate(s)."""
        along = np.asarray(along, dtype=float)
        xy = self.track_origin + along[..., None] * self.orbit_axis[:2]
        z = np.full(along.shape + (1,), self.altitude)
        return np.concatenate([xy, z], axis=-1)

    @property
    def positions(self) -> np.ndarray:
        return self.point_at(self.along)

    def coordinate_of(self, point) -> float:
        """Along-orbit coordinate of the projection of ``point`` onto the track."""
        point = np.asarray(point, dtype=float)
        return float(np.dot(point[:2] - self.track_origin, self.orbit_axis[:2]))


@dataclass(frozen=True)
class HapState:
    position: np.ndarray
    velocity: np.ndarray
    altitude: float

    def __post_init__(self):
        pos = np.array(self.position, dtype=float)
        vel = np.array(self.velocity, dtype=float)
        if pos.shape != (3,) or vel.shape != (2,):
            raise ValueError("HAP position must be a 3-vector and velocity a 2-vector")
        _require_finite("HAP position", pos)
        _require_finite("HAP velocity", vel)
        pos[2] = self.altitude
        pos.flags.writeable = False
        vel.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "velocity", vel)


def project_acceleration(a, a_max: float) -> np.ndarray:
    """Scale ``a`` back onto the disc of radius ``a_max`` if it lies outside."""
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a)
    if norm <= a_max:
        return a.copy()
    out = a * (a_max / norm)
    # guard the last ulp so the norm bound holds exactly
    n2 = np.linalg.norm(out)
    if n2 > a_max:
        out = out * np.nextafter(a_max / n2, 0.0)
    return out


def step_hap(h: HapState, a, cfg: KinematicsConfig) -> HapState:
    """Advance the HAP one slot under constant acceleration ``a``.

    The caller is responsible for projecting ``a`` onto the feasible disc;
    this function only rejects non-finite input.
    """
    a = np.asarray(a, dtype=float)
    _require_finite("acceleration", a)
    dt = cfg.dt
    xy = h.position[:2] + h.velocity * dt + 0.5 * a * dt * dt
    vel = h.velocity + a * dt
    return HapState(np.array([xy[0], xy[1], h.altitude]), vel, h.altitude)


def propagate_constellation(c: SatelliteConstellation, dt: float) -> SatelliteConstellation:
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return SatelliteConstellation(
        along=c.along + c.orbit_speed * dt,
        orbit_speed=c.orbit_speed,
        orbit_length=c.orbit_length,
        altitude=c.altitude,
        orbit_axis=c.orbit_axis,
        track_origin=c.track_origin,
    )


def window_candidates(
    c: SatelliteConstellation, cfg: KinematicsConfig, src
) -> List[Tuple[int, np.ndarray]]:
    """The ``candidate_count`` satellites closest ahead of Src along the orbit.

    Each satellite's offset from Src's along-orbit coordinate is taken
    modulo the orbit length; the nearest ones are kept (ties go to the lower
    index) and reported at their coordinate reduced modulo ``window_length``,
    ascending. Satellites already inside the window keep their true position.
    """
    k = min(cfg.candidate_count, c.count)
    s_src = c.coordinate_of(src)
    offset = wrap(c.along - s_src, c.orbit_length)
    # lexsort: last key is primary
    nearest = np.lexsort((np.arange(c.count), offset))[:k]
    wrapped = wrap(offset[nearest], cfg.window_length)
    order = np.lexsort((nearest, wrapped))
    points = c.point_at(s_src + wrapped[order])
    return [(int(nearest[j]), points[i]) for i, j in enumerate(order)]
