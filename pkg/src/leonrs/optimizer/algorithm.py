"""Penalty-based SDR/SCA/BCD joint beamforming design and beam evaluation."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import InfeasibleError, SolverError, UnobservableError
from ..fim import build_fim_bundle, pvt_errors
from ..sensing import interference_matrix, max_sainr, uwr_sainr
from .conic import INFEASIBLE, OPTIMAL, UNBOUNDED, conic_solve
from .sdp import SdpContext, UeScaling, build_penalized_sdp

log = logging.getLogger(__name__)


@dataclass
class OptimizerSettings:
    rho0: float = 0.03
    amplification: float = 1.5
    penalty_accuracy: float = 1e-4
    penalty_cap: float = 1e8
    max_outer: int = 40
    solver_tol: float = 1e-9
    conv_threshold: float = 1e-3
    share_max: float = 0.99
    solver: str = "clarabel"
    max_halvings: int = 8
    surrogate: str = "entrywise"
    reduce_navigation: bool = True

    @classmethod
    def from_config(cls, cfg):
        o = cfg.optimizer
        return cls(o.initial_penalty_factor, o.amplification_coefficient, o.penalty_accuracy,
                   o.penalty_cap, int(o.max_outer_iterations), o.solver_tolerance,
                   o.convergence_threshold, o.sensing_share_max, o.solver,
                   surrogate=o.sca_surrogate, reduce_navigation=o.reduce_navigation)


@dataclass
class BeamformingSolution:
    method: str
    w: np.ndarray
    v: list
    powers: np.ndarray  # (K,) W per satellite
    sainr: float  # MVDR, linear
    sainr_uwr: float
    objective: float  # mean weighted PVT error over UEs
    errors: list  # PvtErrors per UE
    trace: list = field(default_factory=list)  # normalised merit per accepted iterate
    objective_trace: list = field(default_factory=list)  # normalised PVT objective
    rank_residual: float = 0.0
    penalty: float = 0.0
    iterations: int = 0
    converged: bool = True
    flags: dict = field(default_factory=dict)
    wall_time: float = 0.0


# --------------------------------------------------------------------------
# evaluation


def satellite_powers(w, v, K, N):
    tot = np.abs(np.asarray(w)) ** 2
    for vm in v:
        tot = tot + np.abs(np.asarray(vm)) ** 2
    return tot.reshape(K, N).sum(axis=1)


def evaluate_beams(scene, w, v, links=None, method="beams", **extra):
    """Metrics of concrete beam vectors through the shared FIM/sensing pipeline."""
    links = scene.links if links is None else links
    errs = [pvt_errors(build_fim_bundle(lm, v=vm, w=w), lm.J, scene.weights) for lm, vm in zip(links, v)]
    R = interference_matrix(scene.sensing, w=w, v=v)
    if np.any(np.abs(np.conj(scene.sensing.t) @ w) > 0):
        g = max_sainr(scene.sensing, R, w=w)
        gu = uwr_sainr(scene.sensing, R, w)
    else:
        g = gu = 0.0
    return BeamformingSolution(
        method=method, w=np.asarray(w), v=[np.asarray(x) for x in v],
        powers=satellite_powers(w, v, scene.K, scene.N), sainr=float(g), sainr_uwr=float(gu),
        objective=float(np.mean([e.weighted for e in errs])), errors=errs, **extra)


def lifted_objective(scene, W, V):
    """Mean weighted PVT error of lifted beams (exact, not linearised)."""
    tot = 0.0
    for lm, Vm in zip(scene.links, V):
        tot += pvt_errors(build_fim_bundle(lm, V=Vm, W=W), lm.J, scene.weights).weighted
    return tot / len(V)


# --------------------------------------------------------------------------
# initial point


def matched_beams(scene, share):
    """Matched sensing/navigation beams with a per-satellite sensing share."""
    K, N, M = scene.K, scene.N, scene.M
    P = scene.power_budget
    ss = scene.sensing
    w = np.zeros(N * K, complex)
    v = [np.zeros(N * K, complex) for _ in range(M)]
    for k in range(K):
        blk = slice(k * N, (k + 1) * N)
        at = ss.nav_dirs[blk, k]
        # phase chosen so the echoes of all satellites add coherently
        ph = np.exp(1j * np.angle(np.conj(at) @ ss.t[blk]))
        w[blk] = np.sqrt(share * P) * at * ph
        for m in range(M):
            h = scene.links[m].H[k]
            v[m][blk] = np.sqrt((1 - share) * P / M) * h / np.linalg.norm(h)
    return w, v


def initial_point(scene, share_max=0.99, eta=None, with_sainr=True, iters=40):
    """Feasible start: 50/50 split, then bisection on the sensing share."""
    eta = scene.eta if eta is None else eta

    def gam(s):
        w, v = matched_beams(scene, s)
        return max_sainr(scene.sensing, interference_matrix(scene.sensing, w=w, v=v), w=w)

    if not with_sainr or gam(0.5) >= eta:
        return matched_beams(scene, 0.5) + (0.5,)
    if gam(share_max) < eta:
        raise InfeasibleError(
            f"SAINR {10 * np.log10(gam(share_max)):.2f} dB at sensing share {share_max} "
            f"is below the {10 * np.log10(eta):.2f} dB requirement", binding=["sainr"],
            scenario_hash=scene.scenario_hash)
    lo, hi = 0.5, share_max
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if gam(mid) >= eta:
            hi = mid
        else:
            lo = mid
    return matched_beams(scene, hi) + (hi,)


# --------------------------------------------------------------------------
# joint design loop


def _leading(X, prev=None):
    ev, U = np.linalg.eigh(X)
    lam = ev[-1]
    ties = np.flatnonzero(ev >= lam - 1e-10 * max(abs(lam), 1e-300))
    if prev is not None and ties.size > 1:
        best = max(ties, key=lambda i: abs(np.conj(U[:, i]) @ prev))
        return U[:, best], ev[best]
    return U[:, -1], lam


def rank_residual(X):
    """tr(X) - lambda_max(X)."""
    ev = np.linalg.eigvalsh(X)
    return float(max(np.sum(ev) - ev[-1], 0.0))


def extract_vector(X):
    """sqrt(lambda_max) times the leading eigenvector."""
    u, lam = _leading(X)
    return np.sqrt(max(lam, 0.0)) * u


def _scalings(scene, w, v):
    out, objs = [], []
    for lm, vm in zip(scene.links, v):
        b = build_fim_bundle(lm, v=vm, w=w)
        e = pvt_errors(b, lm.J, scene.weights)
        out.append(UeScaling(1 / np.sqrt(np.mean(np.diag(b.F_tt))), 1 / np.sqrt(np.mean(np.diag(b.F_ff))),
                             e.position, e.timing, e.velocity))
        objs.append(e.weighted)
    return out, float(np.mean(objs))


def _lifted_scalings(scene, W, V):
    out = []
    for lm, Vm in zip(scene.links, V):
        b = build_fim_bundle(lm, V=Vm, W=W)
        e = pvt_errors(b, lm.J, scene.weights)
        out.append(UeScaling(1 / np.sqrt(np.mean(np.diag(b.F_tt))), 1 / np.sqrt(np.mean(np.diag(b.F_ff))),
                             e.position, e.timing, e.velocity))
    return out


def run_algorithm1(scene, settings: OptimizerSettings = None, init=None, with_sainr=True,
                   method="algorithm1"):
    """Penalised SDR with SCA linearisation and BCD updates of R.

    Every outer iteration rebuilds R (and its MVDR filter) from the current
    beams, re-expands the FIM model and leading eigenvectors, solves the
    penalised SDP and takes a (possibly damped) step. The penalty grows by the
    amplification factor whenever the merit has settled with a rank residual
    above the accuracy.

    The merit is dimensionless: weighted PVT error over its initial value
    plus ``rho`` times the rank residual over the per-satellite budget. The
    reported rank residual is in watts.
    """
    st = OptimizerSettings() if settings is None else settings
    t0 = time.perf_counter()
    if init is None:
        w0, v0, share = initial_point(scene, st.share_max, with_sainr=with_sainr)
    else:
        w0, v0 = init
        share = None
    P = scene.power_budget
    M = scene.M
    scal, obj0 = _scalings(scene, w0, v0)
    ctx = SdpContext(scene, scal, obj0, reduce_navigation=st.reduce_navigation)

    Wn = np.outer(w0, np.conj(w0)) / P
    Vn = [np.outer(x, np.conj(x)) / P for x in v0]
    rho = st.rho0
    iota_W = _leading(Wn)[0]
    iota_V = [_leading(X)[0] for X in Vn]

    def merit(Wn_, Vn_, rho_):
        obj = lifted_objective(scene, P * Wn_, [P * X for X in Vn_]) / obj0
        res = P * (rank_residual(Wn_) + sum(rank_residual(X) for X in Vn_))
        return obj + rho_ * res / P, obj, res

    cur, cur_obj, cur_res = merit(Wn, Vn, rho)
    trace, obj_trace, res_trace = [cur], [cur_obj], [cur_res]
    flags = {"penalty_capped": False, "stalled": False, "damped_steps": 0, "initial_share": share}
    converged = False
    it = 0
    for it in range(1, st.max_outer + 1):
        R = interference_matrix(scene.sensing, W=P * Wn, V=[P * X for X in Vn])
        if it > 1:
            # LMI blocks re-scaled to the current iterate; obj0 stays fixed
            ctx.scalings = _lifted_scalings(scene, P * Wn, [P * X for X in Vn])
        iota_W = _leading(Wn, iota_W)[0]
        iota_V = [_leading(X, p)[0] for X, p in zip(Vn, iota_V)]
        prob = build_penalized_sdp(ctx, Wn, Vn, R, iota_W, iota_V, rho, with_sainr=with_sainr,
                                   surrogate=st.surrogate)
        res = conic_solve(prob, st.solver_tol, st.solver)
        log.debug("solve %s iters %d time %.2fs viol %.2e", res.raw_status, res.iterations, res.solve_time,
                  res.violation)
        if res.status != OPTIMAL and res.usable:
            flags["numerical_accepted"] = flags.get("numerical_accepted", 0) + 1
        elif res.status != OPTIMAL:
            if it == 1 and res.status == INFEASIBLE:
                raise InfeasibleError("penalised SDP infeasible at the first iteration",
                                      binding=res.binding(), scenario_hash=scene.scenario_hash)
            if res.status == UNBOUNDED or it == 1:
                raise SolverError(f"conic solve failed: {res.raw_status}", status=res.status,
                                  scenario_hash=scene.scenario_hash)
            flags["solver_status"] = res.raw_status
            log.warning("outer iteration %d: solver status %s, stopping", it, res.raw_status)
            break
        Wc = _psd_part(ctx.W.value(res.x))
        Vc = [_psd_part(ctx.V[m].value(res.x)) for m in range(M)]

        step = 1.0
        accepted = False
        for _ in range(st.max_halvings + 1):
            Wt = Wn + step * (Wc - Wn)
            Vt = [X + step * (Y - X) for X, Y in zip(Vn, Vc)]
            try:
                new, new_obj, new_res = merit(Wt, Vt, rho)
            except UnobservableError:
                new = np.inf
            if new <= cur * (1 + 1e-6):
                accepted = True
                break
            step *= 0.5
            flags["damped_steps"] += 1
        if not accepted:
            flags["stalled"] = True
            converged = cur_res <= st.penalty_accuracy
            break
        rel = abs(cur - new) / max(abs(cur), 1e-300)
        Wn, Vn = Wt, Vt
        cur, cur_obj, cur_res = new, new_obj, new_res
        trace.append(cur)
        obj_trace.append(cur_obj)
        res_trace.append(cur_res)
        log.debug("iter %d merit %.6g obj %.6g residual %.3g rho %.3g step %.3g", it, cur, cur_obj,
                  cur_res, rho, step)
        if rel < st.conv_threshold:
            if cur_res <= st.penalty_accuracy:
                converged = True
                break
            if rho * st.amplification > st.penalty_cap:
                rho = st.penalty_cap
                flags["penalty_capped"] = True
            else:
                rho *= st.amplification
            cur = cur_obj + rho * cur_res / P
        if len(trace) > 5 and np.ptp(trace[-5:]) > st.conv_threshold * abs(trace[-1]) and \
                np.any(np.diff(trace[-5:]) > 0):
            flags["stalled"] = True

    w = extract_vector(P * Wn)
    v = [extract_vector(P * X) for X in Vn]
    pw = satellite_powers(w, v, scene.K, scene.N)
    if np.max(pw) > P * (1 + 1e-6):
        s = np.sqrt(P / np.max(pw))
        w, v = w * s, [x * s for x in v]
        flags["rescaled"] = True
    flags["residual_trace"] = res_trace
    sol = evaluate_beams(scene, w, v, method=method, trace=trace, objective_trace=obj_trace,
                         rank_residual=cur_res, penalty=rho, iterations=it, converged=converged,
                         flags=flags)
    sol.wall_time = time.perf_counter() - t0
    return sol


def _psd_part(X):
    X = 0.5 * (X + X.conj().T)
    ev, U = np.linalg.eigh(X)
    ev = np.maximum(ev, 0.0)
    return (U * ev) @ U.conj().T
