"""Satellite-to-ground link budget."""

from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .constants import BOLTZMANN, SPEED_OF_LIGHT, db_to_linear


@dataclass(frozen=True)
class ChannelParams:
    carrier: float = 35e9
    lightspeed: float = SPEED_OF_LIGHT
    bandwidth: float = 20e6
    noise_temperature: float = 100.0
    boltzmann: float = BOLTZMANN
    rx_gain: float = db_to_linear(55.0)
    b_max: float = db_to_linear(16.0)
    eps_3db: float = np.deg2rad(0.4)
    rain_mean_db: float = -2.6
    rain_var_db: float = 1.63

    @property
    def wavelength(self):
        return self.lightspeed / self.carrier

    def validate(self):
        problems = []
        for name in ("carrier", "lightspeed", "bandwidth", "noise_temperature", "boltzmann",
                     "rx_gain", "b_max", "eps_3db"):
            if not getattr(self, name) > 0:
                problems.append(f"channel.{name} must be positive")
        if self.rain_var_db < 0:
            problems.append("channel.rain_var_db must be non-negative")
        return problems


def noise_power(bandwidth, temperature, boltzmann=BOLTZMANN):
    """Thermal noise power kappa*B*T in watts."""
    return boltzmann * bandwidth * temperature


def _pattern_term(u):
    u = np.asarray(u, float)
    out = np.ones_like(u)
    big = u >= 1e-4
    ub = u[big]
    out[big] = jv(1, ub) / (2 * ub) + 36 * jv(3, ub) / ub**3
    return out


def array_gain(eps_b, b_max, eps_3db):
    """Bessel-pattern satellite antenna gain at off-boresight angle ``eps_b``."""
    u = 2.071 * np.sin(eps_b) / np.sin(eps_3db)
    g = b_max * _pattern_term(np.abs(u)) ** 3
    return g if np.ndim(g) else float(g)


def rain_attenuation(rng, mean_db=-2.6, var_db=1.63, size=None):
    """Complex rain factor chi.

    The magnitude is drawn in the dB domain as N(mean_db, var_db) and converted
    to a linear amplitude; the phase is uniform on [0, 2*pi).
    """
    mag_db = rng.normal(mean_db, np.sqrt(var_db), size=size)
    psi = rng.uniform(0.0, 2 * np.pi, size=size)
    return 10.0 ** (mag_db / 20.0) * np.exp(-1j * psi)


def free_space_amplitude(params: ChannelParams, distance):
    return params.lightspeed / (4 * np.pi * params.carrier * np.asarray(distance, float))


def nav_channel_gain(params: ChannelParams, distance, eps_b, chi, rx_gain=None):
    """Complex navigation link gain alpha = sqrt(FSPL * G_m) * chi * sqrt(b)."""
    g_rx = params.rx_gain if rx_gain is None else rx_gain
    b = array_gain(eps_b, params.b_max, params.eps_3db)
    return free_space_amplitude(params, distance) * np.sqrt(g_rx) * chi * np.sqrt(b)


def sensing_round_trip_gain(params: ChannelParams, d_tx, d_rx, override=None):
    """Round-trip amplitude gain via a ground reflector (two free-space hops).

    An explicit ``override`` value is returned unchanged.
    """
    if override is not None:
        return override
    return free_space_amplitude(params, d_tx) * free_space_amplitude(params, d_rx)
