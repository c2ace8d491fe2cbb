"""Navigation baseband waveform: Gold-coded raised-cosine chips sampled over a
centred observation window, with analytic time derivative and Doppler.

The periodic chip train is band-limited, so it is represented exactly by a
finite Fourier series; no pulse truncation is involved."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import max_len_seq

from .constants import SPEED_OF_LIGHT
from .errors import WindowError

ROLLOFF = 0.5


@dataclass(frozen=True)
class FrameLayout:
    """Durations of the synchronisation and data subframes (metadata only)."""

    syn_subframe_duration: float = 1e-3
    data_subframe_duration: float = 9e-3

    def __post_init__(self):
        if not (self.syn_subframe_duration > 0 and self.data_subframe_duration > 0):
            raise ValueError("subframe durations must be positive")


@dataclass(frozen=True)
class SamplingWindow:
    duration: float = 1e-3
    sample_rate: float = 40e6
    centered: bool = True

    @property
    def n_samples(self):
        return int(round(self.duration * self.sample_rate))

    @property
    def dt(self):
        return 1.0 / self.sample_rate

    def times(self):
        n = self.n_samples
        if not self.centered:
            return np.arange(n, dtype=float) / self.sample_rate
        # build one half and mirror it so the times are exactly antisymmetric
        half = (np.arange(n // 2, dtype=float) + (0.5 if n % 2 == 0 else 1.0)) / self.sample_rate
        mid = [] if n % 2 == 0 else [0.0]
        return np.concatenate([-half[::-1], mid, half])


@dataclass(frozen=True)
class NavSignal:
    chips: np.ndarray
    chip_rate: float = 10e6
    rolloff: float = ROLLOFF
    scale: float = 1.0  # amplitude normalisation giving unit average power

    @property
    def bandwidth(self):
        """Two-sided occupied bandwidth of the raised-cosine spectrum."""
        return self.chip_rate * (1.0 + self.rolloff)

    @property
    def period(self):
        return len(self.chips) / self.chip_rate


def doppler_shift(eta, gamma, q, p, carrier, c=SPEED_OF_LIGHT):
    """Doppler f = -(eta - gamma)^T u f'/c with u the unit vector from UE to satellite."""
    u = np.asarray(q, float) - np.asarray(p, float)
    u = u / np.linalg.norm(u)
    return float(-(np.asarray(eta, float) - np.asarray(gamma, float)) @ u * carrier / c)


def _gold_pair():
    a = max_len_seq(10, taps=[3])[0]
    b = max_len_seq(10, taps=[2, 3, 6, 8, 9])[0]
    return 1.0 - 2.0 * a, 1.0 - 2.0 * b


_GOLD_CACHE = {}


def gold_code(index):
    """Gold code ``index`` in [0, 1025) of length 1023, values +-1."""
    if "pair" not in _GOLD_CACHE:
        _GOLD_CACHE["pair"] = _gold_pair()
    a, b = _GOLD_CACHE["pair"]
    if index == 1023:
        return a.copy()
    if index == 1024:
        return b.copy()
    return a * np.roll(b, index)


def gen_nav_sequence(seed, length=1023, ue=0, sat=0, chip_rate=10e6, rolloff=ROLLOFF):
    """Deterministic +-1 spreading code for the (UE, satellite) link.

    For length 1023 the code is drawn from the Gold family (periodic
    cross-correlation at most 65/1023) through a seeded permutation, so the
    pairs ``(ue, sat)`` with ``ue, sat < 32`` always receive distinct codes.
    Other lengths fall back to seeded random signs.
    """
    if length == 1023:
        perm = np.random.default_rng([int(seed), 0x601D]).permutation(1025)
        chips = gold_code(int(perm[(32 * ue + sat) % 1025]))
    else:
        rng = np.random.default_rng([int(seed), int(ue), int(sat)])
        chips = rng.choice([-1.0, 1.0], size=length)
    sig = NavSignal(chips=chips, chip_rate=chip_rate, rolloff=rolloff)
    k, coef = _harmonics(sig)
    return NavSignal(chips=chips, chip_rate=chip_rate, rolloff=rolloff,
                     scale=1.0 / np.sqrt(np.sum(np.abs(coef) ** 2)))


def rc_pulse(x, beta=ROLLOFF):
    """Raised-cosine pulse at normalised time ``x = t / Tc`` (p(0) = 1)."""
    x = np.asarray(x, float)
    den = 1.0 - (2.0 * beta * x) ** 2
    near = np.abs(den) < 1e-8
    safe = np.where(near, 0.0, x)
    out = np.sinc(safe) * np.cos(np.pi * beta * safe) / np.where(near, 1.0, den)
    # removable singularity at |x| = 1/(2 beta)
    return np.where(near, np.pi / 4 * np.sinc(1.0 / (2 * beta)), out) if beta > 0 else out


def rc_spectrum(f, chip_rate, beta=ROLLOFF):
    """Fourier transform of the raised-cosine pulse (peak value Tc)."""
    tc = 1.0 / chip_rate
    af = np.abs(np.asarray(f, float))
    f1 = (1 - beta) / (2 * tc)
    f2 = (1 + beta) / (2 * tc)
    out = np.where(af <= f1, tc, 0.0)
    if beta > 0:
        roll = (af > f1) & (af <= f2)
        out = np.where(roll, tc / 2 * (1 + np.cos(np.pi * tc / beta * (af - f1))), out)
    return out


def _harmonics(sig: NavSignal):
    """Fourier-series harmonics (indices, coefficients) of the periodic chip train."""
    L = len(sig.chips)
    tp = L / sig.chip_rate
    kmax = int(np.floor(sig.bandwidth / 2 * tp))
    k = np.arange(-kmax, kmax + 1)
    C = np.fft.fft(np.asarray(sig.chips, float))
    coef = rc_spectrum(k / tp, sig.chip_rate, sig.rolloff) * C[np.mod(k, L)] / tp
    return k, coef


def baseband(sig: NavSignal, t, deriv=False):
    """Unit-power pulse-shaped code s(t) (or ds/dt) at the times ``t``.

    The chip train is periodic and band-limited, so it is evaluated exactly
    through its Fourier series. Uniform time grids whose spacing divides the
    code period use an inverse FFT; other inputs use a direct sum.
    """
    t = np.asarray(t, float)
    k, coef = _harmonics(sig)
    tp = sig.period
    coef = coef * sig.scale
    if deriv:
        coef = coef * (2j * np.pi * k / tp)
    if t.ndim == 1 and t.size > 2:
        dt = (t[-1] - t[0]) / (t.size - 1)
        m = tp / dt if dt > 0 else 0.0
        M = int(round(m))
        if M > 2 * k.max() and abs(m - M) < 1e-9 * M and np.allclose(np.diff(t), dt, rtol=0, atol=1e-6 * dt):
            spec = np.zeros(M, complex)
            spec[np.mod(k, M)] = coef * np.exp(2j * np.pi * k * t[0] / tp)
            period_vals = np.fft.ifft(spec) * M
            return period_vals.real[np.arange(t.size) % M]
    out = np.empty(t.size)
    flat = t.ravel()
    for i in range(0, flat.size, 4096):
        ph = np.exp(2j * np.pi * np.outer(flat[i:i + 4096], k) / tp)
        out[i:i + 4096] = (ph @ coef).real
    return out.reshape(t.shape)


def _check_delay(window, tau):
    if abs(tau) >= window.duration:
        raise WindowError(f"delay {tau:.3e} s is outside the {window.duration:.3e} s window")


def wrap_delay(sig: NavSignal, tau):
    """Equivalent code-phase delay in [-period/2, period/2) of a periodic code."""
    p = sig.period
    return (tau + p / 2) % p - p / 2


def sample_signal(sig: NavSignal, window: SamplingWindow, tau, f_d):
    """Samples of s(t - tau) exp(j 2 pi f_d t) over the window."""
    _check_delay(window, tau)
    t = window.times()
    return baseband(sig, t - tau) * np.exp(2j * np.pi * f_d * t)


def sample_signal_derivative(sig: NavSignal, window: SamplingWindow, tau, f_d):
    """Samples of ds/dt evaluated at t - tau, carrying the same Doppler factor."""
    _check_delay(window, tau)
    t = window.times()
    return baseband(sig, t - tau, deriv=True) * np.exp(2j * np.pi * f_d * t)
