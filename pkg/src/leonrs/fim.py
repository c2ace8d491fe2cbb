"""Fisher information for delay/Doppler/velocity and the PVT error metrics.

Notation for one UE with K satellites of N antennas each:

* ``H`` (K, N): row k is ``h_k = conj(alpha_k) a_t(theta_k)``, so the
  beamformed link amplitude is ``h_k^H v_k``.
* ``b`` (NK,): the stacked ``h_k``; the sensing beam leaks into the UE as
  ``b^H w``.
* ``C[ab]`` (K, K): Gram matrices ``dt * sum_t conj(d^a_i(t)) d^b_j(t)`` of
  the signal derivatives ``d^tau_k = -s'_k(t - tau_k) e^{j2 pi f_k t}`` and
  ``d^f_k = j 2 pi t s_k(t - tau_k) e^{j2 pi f_k t}``.

With ``Q = Hblk^H V Hblk`` (``Q[j, i] = h_j^H V h_i``) every FIM block is
``F^{ab}[i, j] = 2 Re(C^{ab}[i, j] Q[j, i]) / sigma_eq^2``, which is the same
number whether ``V`` is a lifted matrix or ``v v^H``.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import UnobservableError
from .waveform import baseband, wrap_delay

LAMBDA_SEL = np.hstack([np.eye(3), np.zeros((3, 1))])
GAMMA_SEL = np.array([[0.0, 0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class PvtWeights:
    position: float = 1.0
    timing: float = 1e9
    velocity: float = 10.0


@dataclass
class LinkModel:
    """Everything the FIM of one UE needs, independent of the beamformers."""

    H: np.ndarray  # (K, N)
    C: dict  # 'tt', 'ff', 'tf' -> (K, K) complex
    jf: np.ndarray  # (K, 3), d f_k / d gamma
    sigma2: float
    J: np.ndarray  # (4, K) delay -> [position; clock]

    @property
    def K(self):
        return self.H.shape[0]

    @property
    def N(self):
        return self.H.shape[1]

    @property
    def b(self):
        return self.H.reshape(-1)

    def block_h(self):
        """Hblk (NK, K): column k carries h_k in the k-th N-block."""
        K, N = self.H.shape
        out = np.zeros((K * N, K), complex)
        for k in range(K):
            out[k * N:(k + 1) * N, k] = self.H[k]
        return out


@dataclass
class FimBundle:
    F_tt: np.ndarray
    F_ff: np.ndarray
    F_tf: np.ndarray
    F_gamma: np.ndarray
    sigma_eq2: float
    jitter: dict = field(default_factory=dict)

    def full(self):
        return np.block([[self.F_tt, self.F_tf], [self.F_tf.T, self.F_ff]])


@dataclass
class PvtErrors:
    position: float  # m^2
    timing: float  # s^2
    velocity: float  # (m/s)^2
    weighted: float


def gram_matrices(signals, delays, dopplers, window):
    """Delay/Doppler derivative Gram matrices of K links over the window."""
    t = window.times()
    dt = window.dt
    Dt, Df = [], []
    for sig, tau, fd in zip(signals, delays, dopplers):
        tw = wrap_delay(sig, tau)
        car = np.exp(2j * np.pi * fd * t)
        Dt.append(-baseband(sig, t - tw, deriv=True) * car)
        Df.append(2j * np.pi * t * baseband(sig, t - tw) * car)
    Dt, Df = np.array(Dt), np.array(Df)
    return {
        "tt": dt * np.conj(Dt) @ Dt.T,
        "ff": dt * np.conj(Df) @ Df.T,
        "tf": dt * np.conj(Dt) @ Df.T,
    }


def link_model(alphas, steering, signals, delays, dopplers, los_units, carrier, sigma2, J, window,
               c=SPEED_OF_LIGHT):
    """Assemble a :class:`LinkModel` for one UE.

    ``steering`` is (K, N) with rows ``a_t(theta_km, phi_km)``; ``los_units``
    (K, 3) are unit vectors from the UE to each satellite.
    """
    H = np.conj(np.asarray(alphas))[:, None] * np.asarray(steering)
    C = gram_matrices(signals, delays, dopplers, window)
    jf = np.asarray(los_units, float) * carrier / c
    return LinkModel(H=H, C=C, jf=jf, sigma2=float(sigma2), J=np.asarray(J, float))


def equivalent_noise_variance(lm: LinkModel, w=None, W=None):
    """sigma^2 + |b^H w|^2, or sigma^2 + b^H W b for a lifted W."""
    b = lm.b
    if W is not None:
        return lm.sigma2 + float(np.real(np.conj(b) @ W @ b))
    if w is None:
        return lm.sigma2
    return lm.sigma2 + float(np.abs(np.conj(b) @ w) ** 2)


def q_matrix(lm: LinkModel, v=None, V=None):
    """Q[j, i] = h_j^H V h_i (K, K), from a vector ``v`` or a lifted ``V``."""
    K, N = lm.H.shape
    if V is not None:
        Vb = np.asarray(V).reshape(K, N, K, N)
        # Q[j, i] = sum_{a,b} conj(H[j,a]) V[j a, i b] H[i, b]
        return np.einsum("ja,jaib,ib->ji", np.conj(lm.H), Vb, lm.H)
    x = np.einsum("kn,kn->k", np.conj(lm.H), np.asarray(v).reshape(K, N))
    return np.outer(x, np.conj(x))


def fim_numerators(lm: LinkModel, Q):
    """2 Re(C[ab] * Q^T) for the three blocks: FIM times sigma_eq^2."""
    return {key: 2.0 * np.real(lm.C[key] * Q.T) for key in ("tt", "ff", "tf")}


def build_fim_bundle(lm: LinkModel, v=None, w=None, V=None, W=None):
    """FIM blocks for one UE from beam vectors (v, w) or lifted matrices (V, W)."""
    lifted = V is not None
    Q = q_matrix(lm, V=V) if lifted else q_matrix(lm, v=v)
    s2 = equivalent_noise_variance(lm, W=W) if lifted else equivalent_noise_variance(lm, w=w)
    X = fim_numerators(lm, Q)
    F_tt = _sym(X["tt"] / s2)
    F_ff = _sym(X["ff"] / s2)
    F_tf = X["tf"] / s2
    F_gamma = _sym(lm.jf.T @ F_ff @ lm.jf)
    return FimBundle(F_tt, F_ff, F_tf, F_gamma, s2)


def _sym(A):
    return 0.5 * (A + A.T)


def spd_inverse(A, name="matrix", rel_floor=1e-12):
    """Inverse of a symmetric positive-definite matrix via Cholesky.

    A jitter ``rel_floor * trace / n`` is added when the eigenvalue spread
    exceeds ``1 / rel_floor``; returns ``(inverse, jitter_used)``.
    """
    A = _sym(np.asarray(A, float))
    n = A.shape[0]
    ev = np.linalg.eigvalsh(A)
    if ev[-1] <= 0 or not np.all(np.isfinite(ev)):
        raise UnobservableError(f"{name} has no positive eigenvalue", detail={"eigenvalues": ev})
    jitter = 0.0
    if ev[0] < rel_floor * ev[-1]:
        if ev[0] < -1e-9 * ev[-1]:
            raise UnobservableError(f"{name} is indefinite", detail={"eigenvalues": ev})
        jitter = rel_floor * np.trace(A) / n
        A = A + jitter * np.eye(n)
    L = np.linalg.cholesky(A)
    Li = np.linalg.solve(L, np.eye(n))
    return Li.T @ Li, jitter


def effective_fim(bundle: FimBundle):
    """Schur complement F_tt - F_tf F_ff^-1 F_tf^T eliminating the Doppler nuisance."""
    d = np.diag(bundle.F_ff)
    scale = d.max() if d.size else 0.0
    dead = np.flatnonzero(d <= 1e-14 * max(scale, 1e-300))
    if scale <= 0 or dead.size:
        raise UnobservableError(
            f"Doppler information vanishes for satellite(s) {dead.tolist()}",
            detail={"satellites": dead.tolist()})
    Fi, jit = spd_inverse(bundle.F_ff, "F_ff")
    bundle.jitter["F_ff"] = jit
    return _sym(bundle.F_tt - bundle.F_tf @ Fi @ bundle.F_tf.T)


def pvt_errors(bundle: FimBundle, J, weights: PvtWeights = PvtWeights()):
    """Position (m^2), timing (s^2) and velocity ((m/s)^2) CRB metrics."""
    FE = effective_fim(bundle)
    FEi, jit = spd_inverse(FE, "effective delay FIM")
    bundle.jitter["F_E"] = jit
    Fgi, jit = spd_inverse(bundle.F_gamma, "velocity FIM")
    bundle.jitter["F_gamma"] = jit
    cov = J @ FEi @ J.T
    ep = float(np.trace(LAMBDA_SEL @ cov @ LAMBDA_SEL.T))
    et = float((GAMMA_SEL @ cov @ GAMMA_SEL.T)[0, 0])
    ev = float(np.trace(Fgi))
    total = weights.position * ep + weights.timing * et + weights.velocity * ev
    return PvtErrors(ep, et, ev, total)
