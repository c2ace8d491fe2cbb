"""Constellation geometry: Walker Delta snapshots, local orbital frames,
look angles, UPA steering vectors and service-group selection.

All positions are ECEF metres. The constellation is a snapshot: inertial and
Earth-fixed axes coincide at the epoch and Earth rotation is ignored.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import MU_EARTH, R_EARTH
from .errors import ConfigurationError, DegenerateFrameError, TargetBehindArrayError, VisibilityError


@dataclass(frozen=True)
class WalkerConfig:
    total_satellites: int = 1296
    planes: int = 72
    phase_factor: int = 45
    altitude: float = 550e3
    inclination: float = np.deg2rad(53.0)

    def validate(self):
        problems = []
        if self.total_satellites < 1 or self.planes < 1:
            problems.append("total_satellites and planes must be positive")
        elif self.total_satellites % self.planes:
            problems.append(
                f"total_satellites ({self.total_satellites}) not divisible by planes ({self.planes})"
            )
        if not 0 <= self.phase_factor < max(self.planes, 1):
            problems.append(f"phase_factor must lie in [0, planes), got {self.phase_factor}")
        if not self.altitude > 0:
            problems.append("altitude must be positive")
        if not 0 <= self.inclination <= np.pi:
            problems.append("inclination must lie in [0, pi]")
        return problems

    @property
    def radius(self):
        return R_EARTH + self.altitude

    @property
    def per_plane(self):
        return self.total_satellites // self.planes


@dataclass
class SatelliteState:
    position: np.ndarray
    velocity: np.ndarray
    clock_bias: float = 0.0
    plane: int = -1
    slot: int = -1


@dataclass(frozen=True)
class LocalFrame:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def matrix(self):
        """Rows are the frame axes, so ``matrix() @ v`` gives local coordinates."""
        return np.vstack([self.x, self.y, self.z])


@dataclass(frozen=True)
class AngularPair:
    elevation: float
    azimuth: float


@dataclass(frozen=True)
class UpaConfig:
    nx: int = 2
    ny: int = 2
    spacing: float = 0.5  # in wavelengths unless wavelength is given
    wavelength: float = 1.0

    @property
    def n(self):
        return self.nx * self.ny

    def validate(self):
        problems = []
        if self.nx < 1 or self.ny < 1:
            problems.append("UPA dimensions must be >= 1")
        if not self.spacing > 0:
            problems.append("antenna spacing must be positive")
        if not self.wavelength > 0:
            problems.append("wavelength must be positive")
        return problems


@dataclass
class UeState:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    clock_error: float = 0.0
    rx_gain: float = 1.0


def generate_walker(cfg: WalkerConfig, epoch_phase: float = 0.0):
    """Snapshot of a Walker Delta constellation ``i: N/P/F`` on circular orbits.

    Plane ``p`` has RAAN ``2*pi*p/P``; slot ``s`` in that plane has argument of
    latitude ``2*pi*s/S + 2*pi*F*p/N + epoch_phase`` with ``S = N/P``.
    """
    problems = cfg.validate()
    if problems:
        raise ConfigurationError("invalid Walker configuration: " + "; ".join(problems), problems=problems)
    n, planes = cfg.total_satellites, cfg.planes
    per_plane = n // planes
    r = cfg.radius
    speed = np.sqrt(MU_EARTH / r)
    ci, si = np.cos(cfg.inclination), np.sin(cfg.inclination)

    p_idx = np.repeat(np.arange(planes), per_plane)
    s_idx = np.tile(np.arange(per_plane), planes)
    raan = 2 * np.pi * p_idx / planes
    u = 2 * np.pi * s_idx / per_plane + 2 * np.pi * cfg.phase_factor * p_idx / n + epoch_phase
    cO, sO, cu, su = np.cos(raan), np.sin(raan), np.cos(u), np.sin(u)

    pos = r * np.column_stack([cO * cu - sO * su * ci, sO * cu + cO * su * ci, su * si])
    vel = speed * np.column_stack([-cO * su - sO * cu * ci, -sO * su + cO * cu * ci, cu * si])
    return [
        SatelliteState(pos[i].copy(), vel[i].copy(), 0.0, int(p_idx[i]), int(s_idx[i]))
        for i in range(n)
    ]


def local_frame(sat: SatelliteState) -> LocalFrame:
    """Local orbital frame: z toward the Earth centre, x along the velocity."""
    q = np.asarray(sat.position, float)
    eta = np.asarray(sat.velocity, float)
    nq, ne = np.linalg.norm(q), np.linalg.norm(eta)
    if nq == 0 or ne == 0:
        raise DegenerateFrameError("satellite position and velocity must be nonzero")
    z = -q / nq
    x = eta / ne
    y = np.cross(z, x)
    ny = np.linalg.norm(y)
    if ny < 1e-12:
        raise DegenerateFrameError("satellite velocity is parallel to its position")
    y = y / ny
    # x is only orthogonal to z for circular orbits; re-orthogonalise so the
    # frame is exactly orthonormal for arbitrary inputs
    x = np.cross(y, z)
    return LocalFrame(x, y, z)


def look_angles(frame: LocalFrame, q, p_target) -> AngularPair:
    """Elevation/azimuth of ``p_target`` seen by the array whose normal is ``frame.z``.

    The elevation is measured from the array normal (0 at nadir), and the
    azimuth from ``frame.x`` toward ``frame.y``. A target exactly at nadir has
    azimuth 0 by convention.
    """
    d = np.asarray(p_target, float) - np.asarray(q, float)
    nd = np.linalg.norm(d)
    dz = d @ frame.z
    if dz < 0:
        raise TargetBehindArrayError("target lies behind the array plane")
    theta = np.arccos(np.clip(dz / nd, -1.0, 1.0))
    d_perp = d - dz * frame.z
    if np.linalg.norm(d_perp) <= 1e-12 * nd:
        return AngularPair(float(theta), 0.0)
    phi = np.arctan2(d_perp @ frame.y, d_perp @ frame.x)
    return AngularPair(float(theta), float(phi))


def transmit_steering(upa: UpaConfig, theta, phi):
    """Unit-norm UPA steering vector, element ``(ix, iy)`` at index ``ix*ny + iy``."""
    k = 2 * np.pi / upa.wavelength * upa.spacing
    ix = np.repeat(np.arange(upa.nx), upa.ny)
    iy = np.tile(np.arange(upa.ny), upa.nx)
    st = np.sin(theta)
    phase = k * (ix * np.cos(phi) * st + iy * np.sin(phi) * st)
    return np.exp(1j * phase) / np.sqrt(upa.n)


# the receive array is the same full-duplex UPA
receive_steering = transmit_steering


def ue_elevation(p0, q, return_flag=False):
    """Elevation of the satellite at ``q`` above the local horizon of ``p0``.

    Sub-horizon geometry is clamped to 0; with ``return_flag`` the clamp is
    reported as a second return value.
    """
    p0 = np.asarray(p0, float)
    los = np.asarray(q, float) - p0
    cosang = p0 @ los / (np.linalg.norm(p0) * np.linalg.norm(los))
    raw = np.pi / 2 - np.arccos(np.clip(cosang, -1.0, 1.0))
    clamped = raw < 0
    el = float(min(max(raw, 0.0), np.pi / 2))
    if return_flag:
        return el, bool(clamped)
    return el


def elevations_from(point, positions):
    """Vectorised elevation of many satellite positions (N, 3) seen from ``point``."""
    point = np.asarray(point, float)
    los = np.asarray(positions, float) - point
    up = point / np.linalg.norm(point)
    s = (los @ up) / np.linalg.norm(los, axis=1)
    return np.arcsin(np.clip(s, -1.0, 1.0))


def select_service_group(constellation, area_center, k, mask=np.deg2rad(50.0)):
    """Indices of the ``k`` highest-elevation satellites above ``mask``.

    Sorted by descending elevation, so index 0 is the central satellite.
    """
    pos = np.array([s.position for s in constellation])
    el = elevations_from(area_center, pos)
    visible = np.flatnonzero(el >= mask)
    if visible.size < k:
        raise VisibilityError(
            f"only {visible.size} satellites above {np.rad2deg(mask):.1f} deg, need {k}"
        )
    order = visible[np.argsort(-el[visible], kind="stable")]
    return [int(i) for i in order[:k]]
