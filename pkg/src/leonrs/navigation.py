"""Hybrid PVT estimation: pseudo-range positioning/timing (Bancroft start,
iterated elevation-weighted least squares) and concentrated maximum-likelihood
velocity estimation from decoded navigation signals."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .constants import SPEED_OF_LIGHT
from .errors import GeometryError, WeightingError
from .geometry import ue_elevation
from .pso import PsoConfig, pso_maximize
from .waveform import baseband, wrap_delay


@dataclass
class PseudorangeSet:
    rho: np.ndarray  # m
    sat_clock: np.ndarray  # s
    sigma: np.ndarray  # m


@dataclass
class PvtFix:
    position: np.ndarray
    clock: float  # s
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list)


@dataclass(frozen=True)
class VelocitySearchConfig:
    center: tuple = (0.0, 0.0, 0.0)
    half_width: float = 500.0  # m/s
    grid_points: int = 11
    local_half_width: float = 20.0  # m/s, box refined around the spectral start
    pso: PsoConfig = PsoConfig()
    polish: bool = True


@dataclass
class VelocityEstimate:
    velocity: np.ndarray
    cost: float
    amplitudes: np.ndarray
    on_boundary: bool
    meta: dict = field(default_factory=dict)


def elevation_sigma(elevations, sigma0=5.0):
    """Pseudo-range error std sigma0/sin(elevation) (floored at 1e-3 in sin)."""
    return sigma0 / np.maximum(np.sin(np.asarray(elevations, float)), 1e-3)


def simulate_pseudoranges(sats, ue, rng, sigma0=5.0, sigmas=None, c=SPEED_OF_LIGHT):
    """rho_k = |q_k - p| + c (dt_ue - dt_sat_k) + eps_k with eps_k ~ N(0, sigma_k^2).

    By default ``sigma_k = sigma0 / sin(elevation_k)``; pass ``sigmas`` to override.
    """
    q = np.array([s.position for s in sats], float)
    p = np.asarray(ue.position, float)
    dsat = np.array([s.clock_bias for s in sats], float)
    if sigmas is None:
        sigmas = elevation_sigma([ue_elevation(p, qk) for qk in q], sigma0)
    sigmas = np.asarray(sigmas, float)
    eps = rng.standard_normal(len(sats)) * sigmas
    rho = np.linalg.norm(q - p, axis=1) + c * (ue.clock_error - dsat) + eps
    return PseudorangeSet(rho, dsat, sigmas)


def _lorentz(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3]


def bancroft_init(sats, pr: PseudorangeSet, c=SPEED_OF_LIGHT, earth_radius=6.371e6):
    """Closed-form position and receiver clock from K >= 4 pseudo-ranges.

    Returns ``(position, clock_seconds)``. Of the two algebraic roots the one
    whose norm is nearest ``earth_radius`` is kept.
    """
    q = np.array([s.position for s in sats], float)
    if len(q) < 4:
        raise GeometryError("Bancroft needs at least 4 pseudo-ranges")
    rho = np.asarray(pr.rho, float) + c * np.asarray(pr.sat_clock, float)
    B = np.column_stack([q, rho])
    BtB = B.T @ B
    if np.linalg.cond(BtB) > 1e14:
        raise GeometryError("degenerate satellite geometry (singular Bancroft normal matrix)")
    Bp = np.linalg.solve(BtB, B.T)
    a = 0.5 * _lorentz(B, B)
    u = Bp @ np.ones(len(q))
    v = Bp @ a
    A2 = _lorentz(u, u)
    A1 = 2 * (_lorentz(u, v) - 1)
    A0 = _lorentz(v, v)
    if abs(A2) < 1e-300:
        roots = np.array([-A0 / A1])
    else:
        disc = A1 * A1 - 4 * A2 * A0
        sq = np.sqrt(max(disc, 0.0))
        roots = np.array([(-A1 + sq) / (2 * A2), (-A1 - sq) / (2 * A2)])
    M = np.array([1.0, 1.0, 1.0, -1.0])
    cands = [M * (v + lam * u) for lam in roots]
    cands.sort(key=lambda y: (round(abs(np.linalg.norm(y[:3]) - earth_radius), 6), abs(y[3])))
    y = cands[0]
    return y[:3], y[3] / c


def build_weighting(elevations):
    """Diag(sin(el_k)) / max_k sin(el_k)."""
    s = np.sin(np.asarray(elevations, float))
    if not np.any(s > 0):
        raise WeightingError("all elevations are zero; weighting undefined")
    return np.diag(s / s.max())


def design_matrix(sat_positions, p0, c=SPEED_OF_LIGHT):
    """Linearised pseudo-range geometry Z: rows [(p0 - q_k)/|p0 - q_k|, c]."""
    q = np.asarray(sat_positions, float)
    diff = np.asarray(p0, float) - q
    d = np.linalg.norm(diff, axis=1)
    return np.column_stack([diff / d[:, None], np.full(len(q), c)]), d


def _weighted_solve(Z, Phi, rhs):
    """(Z^T Phi Z)^-1 Z^T Phi rhs, computed with the clock column rescaled to
    unit size so the conditioning test is scale-free."""
    s = 1.0 / np.linalg.norm(Z, axis=0)
    Zs = Z * s
    N = Zs.T @ Phi @ Zs
    if np.linalg.cond(N) > 1e12:
        raise GeometryError("singular WLS normal matrix")
    return s[:, None] * np.linalg.solve(N, Zs.T @ Phi @ rhs) if rhs.ndim == 2 else s * np.linalg.solve(N, Zs.T @ Phi @ rhs)


def jacobian_map(Z, Phi, c=SPEED_OF_LIGHT):
    """J = c (Z^T Phi Z)^-1 Z^T Phi, mapping delays (s) to [position; clock]."""
    return c * _weighted_solve(Z, np.asarray(Phi, float), np.eye(Z.shape[0]))


def wls_solve(sats, pr: PseudorangeSet, p0, Phi=None, max_iters=10, tol=1e-4, clock0=0.0,
              c=SPEED_OF_LIGHT):
    """Iterated (Gauss-Newton) weighted least squares for position and clock."""
    q = np.array([s.position for s in sats], float)
    K = len(q)
    if K < 4:
        raise GeometryError("position and time need at least 4 pseudo-ranges")
    Phi = np.eye(K) if Phi is None else np.asarray(Phi, float)
    rho_c = np.asarray(pr.rho, float) + c * np.asarray(pr.sat_clock, float)
    p = np.asarray(p0, float).copy()
    clock = float(clock0)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        Z, d = design_matrix(q, p, c)
        y = rho_c - d - c * clock
        trace.append(float(y @ Phi @ y))
        delta = _weighted_solve(Z, Phi, y)
        p = p + delta[:3]
        clock += delta[3]
        if np.linalg.norm(delta[:3]) < tol:
            converged = True
            break
    Z, d = design_matrix(q, p, c)
    y = rho_c - d - c * clock
    trace.append(float(y @ Phi @ y))
    return PvtFix(p, clock, it, converged, trace)


# --------------------------------------------------------------------------
# velocity


@dataclass
class DecodedLink:
    """Despread samples y_k(t) from one satellite plus the code that produced them."""

    signal: object
    samples: np.ndarray


def simulate_decoded_links(signals, amplitudes, delays, dopplers, window, rng=None, noise_var=0.0):
    """y_k(t) = b_k s_k(t - tau_k) exp(j 2 pi f_k t) + CN(0, noise_var) noise."""
    t = window.times()
    out = []
    for sig, b, tau, fd in zip(signals, amplitudes, delays, dopplers):
        y = b * baseband(sig, t - wrap_delay(sig, tau)) * np.exp(2j * np.pi * fd * t)
        if noise_var > 0:
            y = y + np.sqrt(noise_var / 2) * (rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size))
        out.append(DecodedLink(sig, y))
    return out


class _VelocityCost:
    """Concentrated likelihood sum_k |<u_k, y_k>|^2 / |u_k|^2 with u_k(gamma)
    the delayed code carrying the Doppler implied by gamma."""

    def __init__(self, links, sats, p_hat, clock_hat, window, carrier, c=SPEED_OF_LIGHT):
        t = window.times()
        self.t = t
        q = np.array([s.position for s in sats], float)
        eta = np.array([s.velocity for s in sats], float)
        dsat = np.array([s.clock_bias for s in sats], float)
        los = q - np.asarray(p_hat, float)
        rng_ = np.linalg.norm(los, axis=1)
        self.u = los / rng_[:, None]
        self.kf = carrier / c
        self.f_sat = -np.einsum("ij,ij->i", eta, self.u) * self.kf  # Doppler at gamma = 0
        z, norms = [], []
        for k, link in enumerate(links):
            tau = (rng_[k] + c * (clock_hat - dsat[k])) / c
            ref = baseband(link.signal, t - wrap_delay(link.signal, tau))
            z.append(np.conj(ref) * link.samples)
            norms.append(np.sum(np.abs(ref) ** 2))
        self.z = np.array(z)
        self.norms = np.array(norms)

    def freqs(self, gamma):
        gamma = np.atleast_2d(gamma)
        return self.f_sat[None, :] + self.kf * gamma @ self.u.T

    def exact(self, gamma):
        f = self.freqs(gamma)  # (P, K)
        out = np.empty(f.shape[0])
        for i in range(f.shape[0]):
            ph = np.exp(-2j * np.pi * f[i][:, None] * self.t[None, :])
            out[i] = np.sum(np.abs(np.sum(self.z * ph, axis=1)) ** 2 / self.norms)
        return out

    def amplitudes(self, gamma):
        f = self.freqs(gamma)[0]
        ph = np.exp(-2j * np.pi * f[:, None] * self.t[None, :])
        return np.sum(self.z * ph, axis=1) / self.norms

    def decimated(self, gamma_ref, block):
        """Cheap surrogate: mix to the Doppler of ``gamma_ref`` and block-sum."""
        f0 = self.freqs(gamma_ref)[0]
        n = (self.t.size // block) * block
        zz = self.z[:, :n] * np.exp(-2j * np.pi * f0[:, None] * self.t[None, :n])
        zd = zz.reshape(len(f0), -1, block).sum(axis=2)
        td = self.t[:n].reshape(-1, block).mean(axis=1)

        def fun(gamma):
            df = self.freqs(gamma) - f0[None, :]  # (P, K)
            ph = np.exp(-2j * np.pi * df[:, :, None] * td[None, None, :])
            return np.sum(np.abs(np.sum(zd[None] * ph, axis=2)) ** 2 / self.norms, axis=1)

        return fun


def mle_velocity(links, sats, p_hat, clock_hat, window, carrier, rng,
                 search: VelocitySearchConfig = VelocitySearchConfig(), c=SPEED_OF_LIGHT):
    """Velocity maximising the concentrated likelihood over a 3-D box.

    Stages: per-link Doppler spectrum peaks and a linear fit give a start
    point; an 11^3 grid over a local box around it, PSO over that box, and
    an optional Nelder-Mead polish on the exact cost refine it.
    """
    cost = _VelocityCost(links, sats, p_hat, clock_hat, window, carrier, c)
    center = np.asarray(search.center, float)
    lo_g, hi_g = center - search.half_width, center + search.half_width

    # stage 1: spectral start
    band = cost.kf * search.half_width * np.sqrt(3) * 1.05
    fs_needed = 4 * band
    block = max(1, int(window.sample_rate // fs_needed))
    f0 = cost.freqs(center)[0]
    n = (cost.t.size // block) * block
    zz = cost.z[:, :n] * np.exp(-2j * np.pi * f0[:, None] * cost.t[None, :n])
    zd = zz.reshape(len(f0), -1, block).sum(axis=2)
    td = cost.t[:n].reshape(-1, block).mean(axis=1)
    step = 1.0 / (8 * window.duration)
    grid = np.arange(-band, band + step, step)
    df_hat = np.empty(len(f0))
    for k in range(len(f0)):
        spec = np.abs(np.exp(-2j * np.pi * grid[:, None] * td[None, :]) @ zd[k]) ** 2
        i = int(np.argmax(spec))
        if 0 < i < len(grid) - 1:
            a, b, cc = spec[i - 1], spec[i], spec[i + 1]
            den = a - 2 * b + cc
            off = 0.5 * (a - cc) / den if den != 0 else 0.0
        else:
            off = 0.0
        df_hat[k] = grid[i] + off * step
    g0 = center + np.linalg.lstsq(cost.kf * cost.u, df_hat, rcond=None)[0]
    g0 = np.clip(g0, lo_g, hi_g)

    # stage 2: local grid
    hw = search.local_half_width
    lo, hi = np.maximum(g0 - hw, lo_g), np.minimum(g0 + hw, hi_g)
    fast = cost.decimated(g0, max(1, block // 4))
    axes = [np.linspace(lo[i], hi[i], search.grid_points) for i in range(3)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    gv = np.concatenate([fast(G[i:i + 256]) for i in range(0, len(G), 256)])
    g_grid = G[int(np.argmax(gv))]

    # stage 3: PSO seeded with the grid optimum and the spectral start
    g_pso, f_pso, hist = pso_maximize(fast, lo, hi, rng, search.pso, seeds=np.vstack([g_grid, g0]))

    g_best = g_pso
    if search.polish:
        res = minimize(lambda x: -cost.exact(x)[0], g_pso, method="Nelder-Mead",
                       options={"xatol": 1e-4, "fatol": 1e-12 * max(f_pso, 1e-300), "maxiter": 600,
                                "initial_simplex": g_pso + np.vstack([np.zeros(3), 0.5 * np.eye(3)])})
        if -res.fun >= cost.exact(g_pso)[0]:
            g_best = np.clip(res.x, lo_g, hi_g)
    final = float(cost.exact(g_best)[0])
    on_boundary = bool(np.any(np.isclose(g_best, lo_g, atol=1e-6 * search.half_width))
                       or np.any(np.isclose(g_best, hi_g, atol=1e-6 * search.half_width)))
    meta = {"spectral_start": g0, "grid_best": g_grid, "pso_best": g_pso, "pso_history": hist,
            "decimation": block}
    return VelocityEstimate(g_best, final, cost.amplitudes(g_best), on_boundary, meta)


def concentrated_cost(links, sats, p_hat, clock_hat, window, carrier, gammas, c=SPEED_OF_LIGHT):
    """Exact concentrated velocity likelihood at each row of ``gammas``."""
    return _VelocityCost(links, sats, p_hat, clock_hat, window, carrier, c).exact(gammas)
