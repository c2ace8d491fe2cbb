"""Remote-sensing receive chain at the central satellite.

The desired echo arrives along ``a_r`` (central satellite toward the sensing
area) with complex response ``t^H w`` where ``t`` stacks
``conj(g'_k) a_t(theta'_k)``. Ambiguity echoes and navigation leakage build
the interference matrix ``R``, which is linear in the lifted beams.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NoSignalError


@dataclass
class AmbiguityTerm:
    sat: int  # transmitting satellite k
    coef: float  # |beta~ g~|^2
    e: np.ndarray  # (NK,) a_t(theta~'_kkl) placed in block k
    r: np.ndarray  # (N,) a_r(theta~'_1kl)
    position: np.ndarray = None


@dataclass
class SensingScene:
    a_r: np.ndarray  # (N,)
    t: np.ndarray  # (NK,) stacked conj(g'_k) a_t(theta'_k)
    beta: complex
    nav_dirs: np.ndarray  # (NK, K): column k is a_t(theta'_k) placed in block k
    nav_coef: np.ndarray  # (K,) |beta g'_k|^2
    ambiguities: list = field(default_factory=list)
    sigma_s2: float = 1e-14
    area: np.ndarray = None

    @property
    def N(self):
        return self.a_r.size

    def desired_response(self, w):
        """h = a_r (t^H w), the array response to the sensing beam (without beta)."""
        return self.a_r * (np.conj(self.t) @ w)


def interference_matrix(ss: SensingScene, w=None, v=None, W=None, V=None):
    """Ambiguity-plus-navigation interference R (N x N Hermitian PSD).

    Vector inputs: ``w`` (NK,) and ``v`` list of (NK,) navigation beams.
    Lifted inputs: ``W`` (NK, NK) and ``V`` list of (NK, NK).
    """
    N = ss.N
    R = np.zeros((N, N), complex)
    lifted = W is not None or (V is not None and len(V) and np.ndim(V[0]) == 2)
    for amb in ss.ambiguities:
        if lifted:
            p = 0.0 if W is None else float(np.real(np.conj(amb.e) @ W @ amb.e))
        else:
            p = 0.0 if w is None else float(np.abs(np.conj(amb.e) @ w) ** 2)
        R += amb.coef * p * np.outer(amb.r, np.conj(amb.r))
    beams = V if lifted else v
    if beams is not None:
        nav = 0.0
        for B in beams:
            if lifted:
                leak = np.real(np.einsum("ik,ij,jk->k", np.conj(ss.nav_dirs), B, ss.nav_dirs))
            else:
                leak = np.abs(np.conj(ss.nav_dirs).T @ B) ** 2
            nav += float(ss.nav_coef @ leak)
        R += nav * np.outer(ss.a_r, np.conj(ss.a_r))
    return 0.5 * (R + R.conj().T)


def _noisy(ss, R):
    return R + ss.sigma_s2 * np.eye(ss.N)


def receive_gain(ss: SensingScene, R):
    """kappa = a_r^H (R + sigma_s^2 I)^-1 a_r."""
    return float(np.real(np.conj(ss.a_r) @ np.linalg.solve(_noisy(ss, R), ss.a_r)))


def mvdr_receive(ss: SensingScene, R, w):
    """z* = (R + s I)^-1 h / (h^H (R + s I)^-1 h)."""
    h = ss.desired_response(w)
    if not np.any(np.abs(h) > 0):
        raise NoSignalError("sensing beam produces no desired response")
    x = np.linalg.solve(_noisy(ss, R), h)
    return x / (np.conj(h) @ x)


def sainr(ss: SensingScene, R, z, w):
    """Gamma(z) = |z^H beta h|^2 / z^H (R + s I) z."""
    h = ss.desired_response(w)
    num = np.abs(np.conj(z) @ (ss.beta * h)) ** 2
    den = np.real(np.conj(z) @ _noisy(ss, R) @ z)
    return float(num / den)


def max_sainr(ss: SensingScene, R, w=None, W=None):
    """Closed-form MVDR SAINR |beta|^2 w^H H^H (R + s I)^-1 H w with H = a_r t^H."""
    kappa = receive_gain(ss, R)
    if W is not None:
        tw = float(np.real(np.conj(ss.t) @ W @ ss.t))
    else:
        tw = float(np.abs(np.conj(ss.t) @ w) ** 2)
    return float(np.abs(ss.beta) ** 2 * kappa * tw)


def uwr_weights(N):
    """Uniformly weighted reception."""
    return np.ones(N, complex) / np.sqrt(N)


def uwr_sainr(ss: SensingScene, R, w):
    return sainr(ss, R, uwr_weights(ss.N), w)
