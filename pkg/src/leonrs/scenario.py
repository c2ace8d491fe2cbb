"""Scenario construction: constellation snapshot, service group, UE and area
placement, link budgets, per-UE link models and the sensing scene."""

import zlib
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .channel import array_gain, free_space_amplitude, nav_channel_gain, noise_power, rain_attenuation
from .config import ScenarioConfig
from .constants import R_EARTH, db_to_linear, dbm_to_watts
from .errors import LeonrsError, VisibilityError
from .fim import LinkModel, link_model
from .geometry import (
    SatelliteState, UeState, elevations_from, generate_walker, local_frame, look_angles,
    select_service_group, transmit_steering,
)
from .navigation import build_weighting, design_matrix, jacobian_map
from .sensing import AmbiguityTerm, SensingScene
from .waveform import doppler_shift, gen_nav_sequence

STREAMS = ("placement", "group", "clock", "rain", "reflect", "codes", "pseudorange", "velocity")


def substream(seed, name):
    """Independent generator for the named sub-stream of a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


@lru_cache(maxsize=8)
def _constellation(walker):
    return tuple(generate_walker(walker))


@dataclass
class Scene:
    """Everything the optimizer and the metrics need for one seeded scenario."""

    sats: list  # service group, central satellite first
    ues: list
    area: np.ndarray
    links: list  # LinkModel per UE
    sensing: SensingScene
    signals: list  # per UE, list of K NavSignal
    delays: np.ndarray  # (M, K) s
    dopplers: np.ndarray  # (M, K) Hz
    alphas: np.ndarray  # (M, K)
    elevations: np.ndarray  # (M, K) rad, UE-side
    Phi: list  # elevation weighting per UE
    J_ls: list  # delay-to-PVT Jacobians with equal weights
    power_budget: float  # W per satellite
    eta: float  # linear SAINR threshold
    weights: object
    N: int
    seed: int = 0
    scenario_hash: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def K(self):
        return len(self.sats)

    @property
    def M(self):
        return len(self.ues)

    def with_links(self, links):
        """Copy sharing geometry but carrying other link models (e.g. LS Jacobians)."""
        return replace(self, links=links)


def cap_angle(orbit_radius, elevation, earth_radius=R_EARTH):
    """Earth central angle from the sub-satellite point at which the satellite
    is seen at ``elevation``."""
    return float(np.arccos(earth_radius * np.cos(elevation) / orbit_radius) - elevation)


def _tangent_basis(n):
    a = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def sample_cap(rng, center_dir, psi_min, psi_max, size, radius=R_EARTH):
    """Points uniform in area on the spherical annulus psi in [psi_min, psi_max]."""
    n = np.asarray(center_dir, float) / np.linalg.norm(center_dir)
    e1, e2 = _tangent_basis(n)
    cz = rng.uniform(np.cos(psi_max), np.cos(psi_min), size)
    sz = np.sqrt(1 - cz**2)
    az = rng.uniform(0, 2 * np.pi, size)
    dirs = cz[:, None] * n + sz[:, None] * (np.cos(az)[:, None] * e1 + np.sin(az)[:, None] * e2)
    return radius * dirs


def sample_disc(rng, center, radius_m, size):
    """Points uniform in a tangent-plane disc around ``center``, projected to its sphere."""
    c = np.asarray(center, float)
    n = c / np.linalg.norm(c)
    e1, e2 = _tangent_basis(n)
    r = radius_m * np.sqrt(rng.uniform(0, 1, size))
    az = rng.uniform(0, 2 * np.pi, size)
    pts = c + r[:, None] * (np.cos(az)[:, None] * e1 + np.sin(az)[:, None] * e2)
    return pts * (np.linalg.norm(c) / np.linalg.norm(pts, axis=1))[:, None]


def _angle_between(u, v):
    c = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def _place(rng, center, psi_lo, psi_hi, group_pos, min_el, size, tries=200):
    out = []
    for _ in range(tries):
        p = sample_cap(rng, center, psi_lo, psi_hi, 1)[0]
        if np.all(elevations_from(p, group_pos) >= min_el):
            out.append(p)
            if len(out) == size:
                return np.array(out)
    raise VisibilityError(f"could not place {size} ground points seeing every group satellite")


def build_scene(cfg: ScenarioConfig, seed=None):
    """Seeded scene for ``cfg``; raises geometry/visibility errors with the scenario hash."""
    seed = cfg.seed if seed is None else int(seed)
    h = cfg.scenario_hash(seed)
    try:
        return _build_scene(cfg, seed, h)
    except LeonrsError as exc:
        if exc.scenario_hash is None:
            exc.scenario_hash = h
        raise


def _build_scene(cfg, seed, shash):
    sc = cfg.scenario
    params = cfg.channel_params()
    upa = cfg.upa_config()
    window = cfg.window()
    walker = cfg.walker()
    c = params.lightspeed
    K, M, L = sc.satellites_in_group, sc.ues, sc.ambiguity_areas

    constellation = _constellation(walker)
    r_orbit = walker.radius
    placement = substream(seed, "placement")

    # central satellite drawn at random; its nadir anchors the coverage cap
    ci = int(substream(seed, "group").integers(len(constellation)))
    ref = constellation[ci].position / np.linalg.norm(constellation[ci].position) * R_EARTH
    idx = select_service_group(constellation, ref, K, mask=np.deg2rad(cfg.constellation.group_mask_deg))
    clocks = substream(seed, "clock")
    sats = [SatelliteState(constellation[i].position.copy(), constellation[i].velocity.copy(),
                           float(clocks.normal(0, sc.satellite_clock_std)),
                           constellation[i].plane, constellation[i].slot) for i in idx]
    q = np.array([s.position for s in sats])
    frames = [local_frame(s) for s in sats]

    psi_hi = cap_angle(r_orbit, np.deg2rad(sc.elevation_min_deg))
    psi_lo = cap_angle(r_orbit, np.deg2rad(sc.elevation_max_deg)) if sc.elevation_max_deg < 90 else 0.0
    min_el = np.deg2rad(sc.min_link_elevation_deg)
    nadir = q[0]
    ue_pos = _place(placement, nadir, psi_lo, psi_hi, q, min_el, M)
    area = _place(placement, nadir, psi_lo, psi_hi, q, min_el, 1)[0]

    ues = []
    for p in ue_pos:
        up = p / np.linalg.norm(p)
        e1, e2 = _tangent_basis(up)
        speed = placement.uniform(0, sc.ue_speed_max)
        az = placement.uniform(0, 2 * np.pi)
        vel = speed * (np.cos(az) * e1 + np.sin(az) * e2)
        ues.append(UeState(p, vel, float(clocks.normal(0, sc.ue_clock_std)), params.rx_gain))

    # navigation links
    rain = substream(seed, "rain")
    code_seed = int(substream(seed, "codes").integers(2**31))
    sigma2 = noise_power(params.bandwidth, params.noise_temperature, params.boltzmann)
    links, signals, J_ls, Phis = [], [], [], []
    delays = np.zeros((M, K))
    dopps = np.zeros((M, K))
    alphas = np.zeros((M, K), complex)
    elev = np.zeros((M, K))
    wf = cfg.waveform
    for m, ue in enumerate(ues):
        d = np.linalg.norm(q - ue.position, axis=1)
        chi = rain_attenuation(rain, params.rain_mean_db, params.rain_var_db, K)
        steer = []
        for k in range(K):
            ang = look_angles(frames[k], q[k], ue.position)
            steer.append(transmit_steering(upa, ang.elevation, ang.azimuth))
            eps_b = 0.0 if cfg.channel.off_boresight == "tracked" else ang.elevation
            alphas[m, k] = nav_channel_gain(params, d[k], eps_b, chi[k], ue.rx_gain)
            dopps[m, k] = doppler_shift(sats[k].velocity, ue.velocity, q[k], ue.position, params.carrier, c)
            delays[m, k] = d[k] / c + ue.clock_error - sats[k].clock_bias
        elev[m] = elevations_from(ue.position, q)
        Phi = build_weighting(elev[m])
        Z, _ = design_matrix(q, ue.position, c)
        J = jacobian_map(Z, Phi, c)
        J_ls.append(jacobian_map(Z, np.eye(K), c))
        Phis.append(Phi)
        sigs = [gen_nav_sequence(code_seed, wf.code_length, m, k, wf.chip_rate_mhz * 1e6, wf.rolloff)
                for k in range(K)]
        signals.append(sigs)
        los = (q - ue.position) / d[:, None]
        links.append(link_model(alphas[m], np.array(steer), sigs, delays[m], dopps[m], los,
                                params.carrier, sigma2, J, window, c))

    sensing = _sensing_scene(cfg, seed, params, upa, sats, frames, area)
    return Scene(
        sats=sats, ues=ues, area=area, links=links, sensing=sensing, signals=signals,
        delays=delays, dopplers=dopps, alphas=alphas, elevations=elev, Phi=Phis, J_ls=J_ls,
        power_budget=cfg.power_budget(), eta=cfg.sainr_threshold(), weights=cfg.weights(),
        N=upa.n, seed=seed, scenario_hash=shash,
        meta={"central_index": int(idx[0]), "group": [int(i) for i in idx], "sigma2": sigma2,
              "cap_angle": psi_hi})


def _sensing_scene(cfg, seed, params, upa, sats, frames, area):
    """Round-trip gains via the sensing area and its ambiguity areas.

    Every echo travels satellite k -> reflector -> central satellite. The
    two free-space hops are scaled by a lumped gain (reflector cross-section,
    antenna and processing gains). With ``beam_pattern`` the transmit and
    receive beams point at the sensing area, so ambiguity echoes are weighted
    by the Bessel pattern at their offset from the beam centre.
    """
    se = cfg.sensing
    sc = cfg.scenario
    K, L, N = len(sats), sc.ambiguity_areas, upa.n
    q = np.array([s.position for s in sats])
    lumped = np.sqrt(db_to_linear(se.lumped_gain_db))
    lam = params.wavelength
    refl = substream(seed, "reflect")

    ang_r = look_angles(frames[0], q[0], area)
    a_r = transmit_steering(upa, ang_r.elevation, ang_r.azimuth)
    d_rx = np.linalg.norm(area - q[0])
    t = np.zeros(N * K, complex)
    nav_dirs = np.zeros((N * K, K), complex)
    gp = np.zeros(K, complex)
    for k in range(K):
        ang = look_angles(frames[k], q[k], area)
        at = transmit_steering(upa, ang.elevation, ang.azimuth)
        d_tx = np.linalg.norm(area - q[k])
        path = d_tx + d_rx
        gp[k] = lumped * free_space_amplitude(params, d_tx) * free_space_amplitude(params, d_rx) \
            * np.exp(-2j * np.pi * path / lam)
        t[k * N:(k + 1) * N] = np.conj(gp[k]) * at
        nav_dirs[k * N:(k + 1) * N, k] = at
    beta = complex(se.reflection_coefficient)
    nav_coef = np.abs(beta * gp) ** 2

    ambs = []
    if L:
        amb_pts = sample_disc(refl, area, sc.ambiguity_radius_km * 1e3, K * L).reshape(K, L, 3)
        btil = refl.uniform(se.ambiguity_reflection_min, se.ambiguity_reflection_max, (K, L))
        for k in range(K):
            for l in range(L):
                p = amb_pts[k, l]
                d_tx = np.linalg.norm(p - q[k])
                d_rx2 = np.linalg.norm(p - q[0])
                g = lumped * free_space_amplitude(params, d_tx) * free_space_amplitude(params, d_rx2)
                if se.beam_pattern:
                    off_tx = _angle_between(p - q[k], area - q[k])
                    off_rx = _angle_between(p - q[0], area - q[0])
                    g = g * np.sqrt(array_gain(off_tx, 1.0, params.eps_3db)
                                    * array_gain(off_rx, 1.0, params.eps_3db))
                ang_t = look_angles(frames[k], q[k], p)
                e = np.zeros(N * K, complex)
                e[k * N:(k + 1) * N] = transmit_steering(upa, ang_t.elevation, ang_t.azimuth)
                ang_rx = look_angles(frames[0], q[0], p)
                r = transmit_steering(upa, ang_rx.elevation, ang_rx.azimuth)
                ambs.append(AmbiguityTerm(k, float((btil[k, l] * g) ** 2), e, r, p))
    return SensingScene(a_r=a_r, t=t, beta=beta, nav_dirs=nav_dirs, nav_coef=nav_coef,
                        ambiguities=ambs, sigma_s2=dbm_to_watts(se.noise_power_dbm), area=area)
