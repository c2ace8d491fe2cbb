"""Scenario configuration: nested YAML sections with validated defaults."""

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .channel import ChannelParams
from .constants import db_to_linear, dbm_to_watts
from .errors import ConfigurationError
from .fim import PvtWeights
from .geometry import UpaConfig, WalkerConfig
from .navigation import VelocitySearchConfig
from .pso import PsoConfig
from .waveform import SamplingWindow


@dataclass
class ConstellationSection:
    total_satellites: int = 1296
    orbital_planes: int = 72
    phase_factor: int = 45
    orbital_altitude_km: float = 550.0
    orbital_inclination_deg: float = 53.0
    group_mask_deg: float = 20.0  # minimum elevation of auxiliary group members


@dataclass
class UpaSection:
    nx: int = 2
    ny: int = 2
    antennas: int = 0  # optional consistency check; 0 means "derive from nx*ny"
    spacing_wavelengths: float = 0.5


@dataclass
class ScenarioSection:
    satellites_in_group: int = 4
    ues: int = 2
    ambiguity_areas: int = 2
    elevation_min_deg: float = 50.0
    elevation_max_deg: float = 90.0
    ambiguity_radius_km: float = 10.0
    min_link_elevation_deg: float = 5.0
    ue_speed_max: float = 30.0  # m/s, horizontal
    ue_clock_std: float = 1e-6  # s
    satellite_clock_std: float = 1e-7  # s


@dataclass
class ChannelSection:
    signal_frequency_ghz: float = 35.0
    speed_of_light: float = 3.0e8
    boltzmann_constant: float = 1.38e-23
    channel_bandwidth_mhz: float = 20.0
    receive_gain_dbi: float = 55.0
    noise_temperature_k: float = 100.0
    rain_attenuation_mean_db: float = -2.6
    rain_attenuation_variance_db: float = 1.63
    maximum_antenna_gain_dbi: float = 16.0
    three_db_angle_deg: float = 0.4
    off_boresight: str = "tracked"  # or "array_normal"


@dataclass
class SensingSection:
    noise_power_dbm: float = -110.0
    reflection_coefficient: float = 1.0
    ambiguity_reflection_min: float = 0.1
    ambiguity_reflection_max: float = 0.5
    lumped_gain_db: float = 240.0
    beam_pattern: bool = True


@dataclass
class WaveformSection:
    observation_time_ms: float = 1.0
    sample_rate_mhz: float = 40.0
    chip_rate_mhz: float = 10.0
    code_length: int = 1023
    rolloff: float = 0.5


@dataclass
class NavigationSection:
    pseudorange_sigma_m: float = 5.0
    wls_max_iterations: int = 10
    wls_tolerance_m: float = 1e-4
    velocity_box_ms: float = 500.0
    velocity_grid_points: int = 11
    pso_particles: int = 40
    pso_iterations: int = 100
    pso_inertia: float = 0.7
    pso_cognitive: float = 1.5
    pso_social: float = 1.5


@dataclass
class PvtWeightSection:
    position: float = 1.0
    timing: float = 1e9
    velocity: float = 10.0


@dataclass
class OptimizerSection:
    maximum_transmit_power_dbm: float = 30.0
    minimum_required_sainr_db: float = 10.0
    pvt_error_weights: PvtWeightSection = field(default_factory=PvtWeightSection)
    initial_penalty_factor: float = 0.03  # on the dimensionless merit, see README
    amplification_coefficient: float = 1.5
    penalty_accuracy: float = 1e-4
    penalty_cap: float = 1e8
    max_outer_iterations: int = 40
    solver_tolerance: float = 1e-9
    convergence_threshold: float = 1e-3
    sensing_share_max: float = 0.99
    solver: str = "clarabel"
    sca_surrogate: str = "entrywise"  # or "product"
    reduce_navigation: bool = True  # exact compression of V_m onto its effective span


@dataclass
class ScenarioConfig:
    constellation: ConstellationSection = field(default_factory=ConstellationSection)
    upa: UpaSection = field(default_factory=UpaSection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    sensing: SensingSection = field(default_factory=SensingSection)
    waveform: WaveformSection = field(default_factory=WaveformSection)
    navigation: NavigationSection = field(default_factory=NavigationSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    seed: int = 0

    # ---- derived runtime objects -------------------------------------
    def walker(self):
        c = self.constellation
        return WalkerConfig(int(c.total_satellites), int(c.orbital_planes), int(c.phase_factor),
                            c.orbital_altitude_km * 1e3, np.deg2rad(c.orbital_inclination_deg))

    def channel_params(self):
        c = self.channel
        return ChannelParams(
            carrier=c.signal_frequency_ghz * 1e9, lightspeed=c.speed_of_light,
            bandwidth=c.channel_bandwidth_mhz * 1e6, noise_temperature=c.noise_temperature_k,
            boltzmann=c.boltzmann_constant, rx_gain=db_to_linear(c.receive_gain_dbi),
            b_max=db_to_linear(c.maximum_antenna_gain_dbi), eps_3db=np.deg2rad(c.three_db_angle_deg),
            rain_mean_db=c.rain_attenuation_mean_db, rain_var_db=c.rain_attenuation_variance_db)

    def upa_config(self):
        lam = self.channel.speed_of_light / (self.channel.signal_frequency_ghz * 1e9)
        return UpaConfig(int(self.upa.nx), int(self.upa.ny), self.upa.spacing_wavelengths * lam, lam)

    def window(self):
        w = self.waveform
        return SamplingWindow(w.observation_time_ms * 1e-3, w.sample_rate_mhz * 1e6, True)

    def weights(self):
        p = self.optimizer.pvt_error_weights
        return PvtWeights(p.position, p.timing, p.velocity)

    def power_budget(self):
        return dbm_to_watts(self.optimizer.maximum_transmit_power_dbm)

    def sainr_threshold(self):
        return db_to_linear(self.optimizer.minimum_required_sainr_db)

    def velocity_search(self):
        n = self.navigation
        return VelocitySearchConfig(
            half_width=n.velocity_box_ms, grid_points=int(n.velocity_grid_points),
            pso=PsoConfig(int(n.pso_particles), int(n.pso_iterations), n.pso_inertia,
                          n.pso_cognitive, n.pso_social))

    # ---- serialisation -------------------------------------------------
    def to_dict(self):
        return dataclasses.asdict(self)

    def dump(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def scenario_hash(self, seed=None):
        d = self.to_dict()
        d["seed"] = self.seed if seed is None else int(seed)
        blob = json.dumps(d, sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def validate(self):
        problems = []
        problems += self.walker().validate()
        problems += self.channel_params().validate()
        problems += self.upa_config().validate()
        u = self.upa
        if u.antennas and u.antennas != u.nx * u.ny:
            problems.append(f"upa.antennas = {u.antennas} but nx*ny = {u.nx * u.ny}")
        s = self.scenario
        if s.satellites_in_group < 4:
            problems.append("scenario.satellites_in_group must be >= 4 (3-D position plus clock)")
        if s.ues < 1:
            problems.append("scenario.ues must be >= 1")
        if s.ambiguity_areas < 0:
            problems.append("scenario.ambiguity_areas must be >= 0")
        if not 0 <= s.elevation_min_deg < s.elevation_max_deg <= 90:
            problems.append("scenario elevation range must satisfy 0 <= min < max <= 90")
        if s.ambiguity_radius_km <= 0:
            problems.append("scenario.ambiguity_radius_km must be positive")
        if s.ues >= 32 or s.satellites_in_group >= 32:
            problems.append("at most 31 UEs and 31 satellites keep spreading codes distinct")
        if self.channel.off_boresight not in ("tracked", "array_normal"):
            problems.append("channel.off_boresight must be 'tracked' or 'array_normal'")
        se = self.sensing
        if not 0 <= se.ambiguity_reflection_min <= se.ambiguity_reflection_max:
            problems.append("sensing ambiguity reflection range invalid")
        w = self.waveform
        if w.observation_time_ms <= 0 or w.chip_rate_mhz <= 0 or w.code_length < 1:
            problems.append("waveform durations, rates and code length must be positive")
        if w.sample_rate_mhz < 2 * self.channel.channel_bandwidth_mhz:
            problems.append("waveform.sample_rate_mhz must be at least twice the channel bandwidth")
        if not 0 <= w.rolloff <= 1:
            problems.append("waveform.rolloff must lie in [0, 1]")
        if w.chip_rate_mhz * (1 + w.rolloff) > self.channel.channel_bandwidth_mhz + 1e-9:
            problems.append("pulse bandwidth chip_rate*(1+rolloff) exceeds the channel bandwidth")
        n = self.navigation
        if n.pseudorange_sigma_m < 0 or n.velocity_box_ms <= 0:
            problems.append("navigation noise and velocity box must be positive")
        o = self.optimizer
        wts = o.pvt_error_weights
        if min(wts.position, wts.timing, wts.velocity) < 0:
            problems.append("pvt_error_weights must be non-negative")
        if o.initial_penalty_factor <= 0:
            problems.append("optimizer.initial_penalty_factor must be positive")
        if o.amplification_coefficient <= 1:
            problems.append("optimizer.amplification_coefficient must exceed 1")
        if o.penalty_accuracy <= 0:
            problems.append("optimizer.penalty_accuracy must be positive")
        if o.max_outer_iterations < 1:
            problems.append("optimizer.max_outer_iterations must be >= 1")
        if not 0 < o.sensing_share_max <= 1:
            problems.append("optimizer.sensing_share_max must lie in (0, 1]")
        if o.solver not in ("clarabel",):
            problems.append("optimizer.solver must be 'clarabel'")
        if o.sca_surrogate not in ("product", "entrywise"):
            problems.append("optimizer.sca_surrogate must be 'product' or 'entrywise'")
        return problems


def _fill(cls, data, path, problems):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        problems.append(f"{path or 'top level'}: expected a mapping")
        return cls()
    kwargs = {}
    known = {f.name: f for f in fields(cls)}
    for key, value in data.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in known:
            problems.append(f"{where}: unknown key")
            continue
        default = getattr(cls(), key)
        if dataclasses.is_dataclass(default):
            kwargs[key] = _fill(type(default), value, where, problems)
            continue
        try:
            kwargs[key] = _coerce(default, value)
        except (TypeError, ValueError):
            problems.append(f"{where}: expected {type(default).__name__}, got {value!r}")
    return cls(**kwargs)


def _coerce(default, value):
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise TypeError
    if isinstance(default, int):
        if isinstance(value, bool) or float(value) != int(float(value)):
            raise TypeError
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool):
            raise TypeError
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise TypeError
        return value
    return value


def config_from_dict(data):
    problems = []
    cfg = _fill(ScenarioConfig, data, "", problems)
    if not problems:
        problems = cfg.validate()
    if problems:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(problems), problems=problems)
    return cfg


def load_config(path):
    """Parse and validate a YAML scenario file; absent keys take defaults."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text, source=str(path))


def loads_config(text, source="<string>"):
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ConfigurationError(f"YAML parse error at {where}: {exc.problem}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"YAML parse error in {source}: {exc}") from exc
    return config_from_dict(data or {})


def with_override(cfg: ScenarioConfig, path, value):
    """Copy of ``cfg`` with the dotted field ``path`` set to ``value`` (re-validated)."""
    d = copy.deepcopy(cfg.to_dict())
    node = d
    parts = path.split(".")
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigurationError(f"unknown parameter path {path!r}")
        node = node[p]
    if not isinstance(node, dict) or parts[-1] not in node or isinstance(node[parts[-1]], dict):
        raise ConfigurationError(f"unknown parameter path {path!r}")
    node[parts[-1]] = value
    return config_from_dict(d)


def full_scale(cfg: ScenarioConfig = None):
    """Counts and array size of the full reference setup (slow)."""
    cfg = ScenarioConfig() if cfg is None else cfg
    d = cfg.to_dict()
    d["upa"].update(nx=4, ny=4, antennas=0)
    d["scenario"].update(satellites_in_group=5, ues=10, ambiguity_areas=5)
    return config_from_dict(d)
