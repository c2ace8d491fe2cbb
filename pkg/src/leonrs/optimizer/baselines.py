"""Comparison designs: zero-forcing navigation beams, uniformly weighted
reception, equal-weight least squares and the navigation-only bound."""

import logging
from dataclasses import replace

import numpy as np

from ..errors import GeometryError, InfeasibleError
from ..navigation import bancroft_init, simulate_pseudoranges, wls_solve
from ..scenario import substream
from ..sensing import interference_matrix, max_sainr, uwr_sainr
from .algorithm import OptimizerSettings, evaluate_beams, run_algorithm1

log = logging.getLogger(__name__)


def zf_directions(scene, k, reg=None):
    """Unit-norm zero-forcing navigation directions of satellite ``k`` (N, M).

    Column m has zero response at every other UE's channel. Falls back to a
    regularised inverse when the UE channels are (nearly) dependent.
    """
    Hk = np.array([lm.H[k] for lm in scene.links])  # (M, N), rows h_{k,m}
    A = np.conj(Hk)  # response of x at UE m is h^H x = A[m] @ x
    G = A @ A.conj().T
    flagged = False
    if reg is None and (Hk.shape[0] > Hk.shape[1] or np.linalg.cond(G) > 1e10):
        reg = 1e-6 * np.real(np.trace(G)) / G.shape[0]
        flagged = True
    if reg:
        G = G + reg * np.eye(G.shape[0])
    D = A.conj().T @ np.linalg.inv(G)
    return D / np.linalg.norm(D, axis=0), flagged


def zf_beams(scene, share):
    """Matched sensing beam plus zero-forcing navigation beams per satellite."""
    K, N, M = scene.K, scene.N, scene.M
    P = scene.power_budget
    ss = scene.sensing
    w = np.zeros(N * K, complex)
    v = [np.zeros(N * K, complex) for _ in range(M)]
    flagged = False
    for k in range(K):
        blk = slice(k * N, (k + 1) * N)
        at = ss.nav_dirs[blk, k]
        ph = np.exp(1j * np.angle(np.conj(at) @ ss.t[blk]))
        w[blk] = np.sqrt(share * P) * at * ph
        D, f = zf_directions(scene, k)
        flagged |= f
        for m in range(M):
            v[m][blk] = np.sqrt((1 - share) * P / M) * D[:, m]
    return w, v, flagged


def baseline_zfbf(scene, share_max=0.99, iters=40):
    """ZF navigation beams with the smallest sensing share meeting the SAINR target."""

    def gam(s):
        w, v, _ = zf_beams(scene, s)
        return max_sainr(scene.sensing, interference_matrix(scene.sensing, w=w, v=v), w=w)

    if gam(0.5) >= scene.eta:
        share = 0.5
    else:
        if gam(share_max) < scene.eta:
            raise InfeasibleError("ZFBF cannot meet the SAINR requirement", binding=["sainr"],
                                  scenario_hash=scene.scenario_hash)
        lo, hi = 0.5, share_max
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if gam(mid) >= scene.eta:
                hi = mid
            else:
                lo = mid
        share = hi
    w, v, flagged = zf_beams(scene, share)
    return evaluate_beams(scene, w, v, method="zfbf", flags={"sensing_share": share, "regularized": flagged})


def baseline_uwr(scene, w, v):
    """SAINR with all-ones/sqrt(N) reception instead of MVDR."""
    return uwr_sainr(scene.sensing, interference_matrix(scene.sensing, w=w, v=v), w)


def ls_links(scene):
    """Link models whose delay-to-PVT map uses equal observation weights."""
    return [replace(lm, J=J) for lm, J in zip(scene.links, scene.J_ls)]


def baseline_ls(scene, w, v):
    """Metrics of given beams when the receiver solves plain least squares."""
    return evaluate_beams(scene, w, v, links=ls_links(scene), method="ls")


def baseline_navigation_only(scene, settings: OptimizerSettings = None):
    """The same penalised loop without the SAINR requirement."""
    return run_algorithm1(scene, settings, with_sainr=False, method="navigation_only")


def position_rmse(scene, trials=500, sigma0=5.0, weighted=True, seed=None, ue=0):
    """Monte Carlo position RMSE (m) of iterated (W)LS from a Bancroft start.

    Pseudo-range noise has std sigma0/sin(elevation). The same noise draws
    are used whether or not the elevation weighting is applied, so paired
    comparisons see identical data.
    """
    rng = substream(scene.seed if seed is None else seed, f"pseudorange{ue}")
    u = scene.ues[ue]
    Phi = scene.Phi[ue] if weighted else None
    err = np.empty(trials)
    for i in range(trials):
        pr = simulate_pseudoranges(scene.sats, u, rng, sigma0)
        try:
            p0, b0 = bancroft_init(scene.sats, pr)
        except GeometryError:
            p0, b0 = np.zeros(3), 0.0
        fix = wls_solve(scene.sats, pr, p0, Phi, max_iters=20, tol=1e-6, clock0=b0)
        err[i] = np.linalg.norm(fix.position - u.position)
    return float(np.sqrt(np.mean(err**2))), err
