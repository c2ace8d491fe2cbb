"""Penalised SDP of one outer iteration: lifted beams, SCA-linearised FIM
blocks, Schur-complement LMIs, power constraints and the SAINR requirement as a fixed-MVDR-filter row.

All matrix variables are normalised by the per-satellite power budget
(``W = P * What``), the objective by the weighted PVT error of the initial
point, and each UE's delay/Doppler blocks by the diagonal scale of its
initial FIM, so the conic problem is well conditioned.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..fim import GAMMA_SEL, LAMBDA_SEL, LinkModel, equivalent_noise_variance, fim_numerators, q_matrix
from .conic import ConicProblem, HermitianVar, SubspaceHermitianVar, SymVar, VarSpace, tri_indices

KINDS = ("tt", "ff", "tf")


def selector(k, K, N):
    """Delta_k (N x NK) picking satellite k's block out of a stacked vector."""
    D = np.zeros((N, N * K))
    D[:, k * N:(k + 1) * N] = np.eye(N)
    return D


def fim_gram_operators(lm: LinkModel):
    """G[kind][i, j] (NK x NK) with ``X^kind[i, j] = Re tr(G V)``.

    Block (i, j) of G is ``2 C[i, j] h_i h_j^H``; every other block is zero.
    """
    K, N = lm.H.shape
    out = {}
    for kind in KINDS:
        G = np.zeros((K, K, N * K, N * K), complex)
        for i in range(K):
            for j in range(K):
                G[i, j, i * N:(i + 1) * N, j * N:(j + 1) * N] = \
                    2 * lm.C[kind][i, j] * np.outer(lm.H[i], np.conj(lm.H[j]))
        out[kind] = G
    return out


@dataclass
class LinearizedFim:
    """SCA model of one FIM block around (W#, V#):

    F(V, W) ~= X(V)/s# - X(V#)/s#^2 * (s(W) - s#),  s(W) = sigma^2 + b^H W b.
    """

    kind: str
    G: np.ndarray  # (K, K, NK, NK)
    X0: np.ndarray  # (K, K) numerators at V#
    s0: float
    b: np.ndarray
    bWb0: float

    def value(self, V, W):
        XV = np.real(np.einsum("ijab,ba->ij", self.G, V))
        sW = self.s0 + float(np.real(np.conj(self.b) @ W @ self.b)) - self.bWb0
        return XV / self.s0 - self.X0 / self.s0**2 * (sW - self.s0)


def sca_linearize_fim_entry(kind, lm: LinkModel, W0, V0, G=None):
    """Affine model of the FIM block ``kind`` ('tt', 'ff' or 'tf') of one UE."""
    if G is None:
        G = fim_gram_operators(lm)[kind]
    X0 = fim_numerators(lm, q_matrix(lm, V=V0))[kind]
    s0 = equivalent_noise_variance(lm, W=W0)
    b = lm.b
    return LinearizedFim(kind, G, X0, s0, b, float(np.real(np.conj(b) @ W0 @ b)))


@dataclass
class UeScaling:
    s_tau: float
    s_f: float
    a_P: float
    a_T: float
    a_V: float


def navigation_basis(scene, m, tol=1e-9):
    """Orthonormal block-diagonal basis of span{h_km, a_t(theta'_k)} per satellite.

    UE m's navigation beam enters its FIM only through h_km^H v, the sensing
    interference only through a_t(theta'_k)^H v and the power budget through
    block norms, so compressing V_m onto this span changes no metric, never
    raises a block power and never raises the rank.
    """
    lm = scene.links[m]
    ss = scene.sensing
    K, N = scene.K, scene.N
    cols = []
    for k in range(K):
        blk = slice(k * N, (k + 1) * N)
        A = np.column_stack([lm.H[k], ss.nav_dirs[blk, k]])
        U, sv, _ = np.linalg.svd(A, full_matrices=False)
        U = U[:, sv > tol * sv[0]]
        Bk = np.zeros((N * K, U.shape[1]), complex)
        Bk[blk] = U
        cols.append(Bk)
    return np.hstack(cols)


class SdpContext:
    """Variable layout and beam-independent coefficients, built once per run.

    With ``reduce_navigation`` each V_m lives on :func:`navigation_basis`
    (2K instead of NK dimensions); the lifted values are unchanged.
    """

    def __init__(self, scene, scalings, obj0, weights=None, reduce_navigation=False):
        self.scene = scene
        self.K, self.N, self.M = scene.K, scene.N, scene.M
        self.P = scene.power_budget
        self.weights = scene.weights if weights is None else weights
        self.scalings = scalings
        self.obj0 = obj0
        K, NK = self.K, self.N * self.K
        vs = VarSpace()
        self.W = HermitianVar(vs, "W", NK)
        if reduce_navigation:
            self.V = [SubspaceHermitianVar(vs, f"V{m}", navigation_basis(scene, m)) for m in range(self.M)]
        else:
            self.V = [HermitianVar(vs, f"V{m}", NK) for m in range(self.M)]
        self.U = [SymVar(vs, f"U{m}", K) for m in range(self.M)]
        self.Om = [SymVar(vs, f"Omega{m}", 3) for m in range(self.M)]
        self.Omt = [SymVar(vs, f"OmegaT{m}", 1) for m in range(self.M)]
        self.Omv = [SymVar(vs, f"OmegaV{m}", 3) for m in range(self.M)]
        # y_m = P b_m^H What b_m / sigma^2 keeps the FIM rows sparse in W
        self.Y = [SymVar(vs, f"leak{m}", 1) for m in range(self.M)]
        self.n = vs.n
        self.G = [fim_gram_operators(lm) for lm in scene.links]
        self.Gcoef = [{k: self.V[m].coef(g[k]) for k in KINDS} for m, g in enumerate(self.G)]
        self.bcoef = [self.W.coef(np.outer(lm.b, np.conj(lm.b))) for lm in scene.links]
        ss = scene.sensing
        self.tcoef = self.W.coef(np.outer(ss.t, np.conj(ss.t)))
        self.sel_coef = []
        self.sel_coef_v = []
        for k in range(K):
            E = np.zeros((NK, NK))
            E[k * self.N:(k + 1) * self.N, k * self.N:(k + 1) * self.N] = np.eye(self.N)
            self.sel_coef.append(self.W.coef(E))
            self.sel_coef_v.append([V.coef(E) for V in self.V])

    def _place(self, var, coef):
        row = np.zeros(coef.shape[:-1] + (self.n,))
        row[..., var.slice] = coef
        return row

    def linearized(self, m, Wn0, Vn0, surrogate="entrywise"):
        """Affine FIM blocks of UE m as (coef (K, K, n), const (K, K)) in FIM units.

        ``Wn0`` and ``Vn0`` are normalised expansion points. ``entrywise``
        linearises every entry X(V)/s(W) around the expansion point;
        ``product`` freezes the shared denominator at s(W#), which is exact in
        V, and leaves the W dependence to the objective (see
        :func:`build_penalized_sdp`).
        """
        lm = self.scene.links[m]
        P = self.P
        bWb0 = P * float(np.real(np.conj(lm.b) @ Wn0 @ lm.b))
        s0 = lm.sigma2 + bWb0
        out = {}
        if surrogate == "product":
            for kind in KINDS:
                out[kind] = (self._place(self.V[m], (P / s0) * self.Gcoef[m][kind]), np.zeros((self.K, self.K)))
            return out
        if surrogate != "entrywise":
            raise ValueError(f"unknown surrogate {surrogate!r}")
        X0 = fim_numerators(lm, q_matrix(lm, V=P * Vn0))
        for kind in KINDS:
            coef = self._place(self.V[m], (P / s0) * self.Gcoef[m][kind])
            coef[..., self.Y[m].slice.start] = -(lm.sigma2 / s0**2) * X0[kind]
            const = X0[kind] * bWb0 / s0**2
            out[kind] = (coef, const)
        return out

    def census(self, prob):
        return prob.census()


def _rows_from(entries_coef, entries_const):
    return sp.csr_matrix(entries_coef), np.asarray(entries_const)


def _sym_entries(size):
    r, c = tri_indices(size)
    return r, c


def build_penalized_sdp(ctx: SdpContext, Wn0, Vn0, R, iota_W, iota_V, rho, with_sainr=True,
                        eta=None, surrogate="entrywise"):
    """Conic problem of one outer iteration at the expansion point (Wn0, Vn0).

    Every FIM block of UE m shares the denominator s_m(W) = sigma^2 + b^H W b,
    so its weighted PVT error factors as s_m(W) g_m(V_m) with g_m convex.
    ``surrogate="entrywise"`` linearises each FIM entry in (V, W).
    ``surrogate="product"`` keeps g_m exact through LMIs built with s_m(W#)
    and linearises only the product: E_m ~ g_m + E_m# (s_m(W) - s_m#)/s_m#.
    That model is exact in W for fixed V and in V for fixed W.

    Census for (K, M, N): M LMIs of size 2K, M of size K+3, M of size K+1,
    M of size 6 (velocity block) and M+1 Hermitian PSD cones of size NK
    (embedded as 2NK real cones). Constraints involving NK x NK matrices:
    M+1 PSD cones, K power traces and one SAINR trace.
    """
    sc = ctx.scene
    K, M, n = ctx.K, ctx.M, ctx.n
    w = ctx.weights
    eta = sc.eta if eta is None else eta
    c = np.zeros(n)
    for m in range(M):
        s = ctx.scalings[m]
        c += (w.position * s.a_P / (M * ctx.obj0)) * ctx.Om[m].trace_coef(n)
        c += (w.timing * s.a_T / (M * ctx.obj0)) * ctx.Omt[m].trace_coef(n)
        c += (w.velocity * s.a_V / (M * ctx.obj0)) * ctx.Omv[m].trace_coef(n)
    NK = ctx.N * K
    c[ctx.W.slice] += rho * ctx.W.coef(np.eye(NK) - np.outer(iota_W, np.conj(iota_W)))
    for m in range(M):
        c[ctx.V[m].slice] += rho * ctx.V[m].coef(np.eye(NK) - np.outer(iota_V[m], np.conj(iota_V[m])))
    c0 = 0.0
    if surrogate == "product":
        for m in range(M):
            lm = sc.links[m]
            s = ctx.scalings[m]
            E0 = w.position * s.a_P + w.timing * s.a_T + w.velocity * s.a_V
            s0 = lm.sigma2 + ctx.P * float(np.real(np.conj(lm.b) @ Wn0 @ lm.b))
            # y_m = P b^H What b / sigma^2, so s_m = sigma^2 (1 + y_m)
            c[ctx.Y[m].slice.start] += E0 * lm.sigma2 / (s0 * M * ctx.obj0)
            c0 += E0 * (lm.sigma2 - s0) / (s0 * M * ctx.obj0)
    prob = ConicProblem(n, c, c0)

    for m in range(M):
        lm = sc.links[m]
        s = ctx.scalings[m]
        lin = ctx.linearized(m, Wn0, Vn0[m], surrogate)
        Uidx = ctx.U[m].index_matrix()

        # delay-Doppler Schur LMI:  [[F_tt - U, F_tf], [F_tf^T, F_ff]] >= 0
        size = 2 * K
        r, cc = _sym_entries(size)
        rows = np.zeros((r.size, n))
        const = np.zeros(r.size)
        for e, (i, j) in enumerate(zip(r, cc)):
            if j < K:
                co, cs = lin["tt"]
                rows[e] = s.s_tau**2 * co[i, j]
                const[e] = s.s_tau**2 * cs[i, j]
                rows[e, Uidx[i, j]] -= 1.0
            elif i < K:
                co, cs = lin["tf"]
                rows[e] = s.s_tau * s.s_f * co[i, j - K]
                const[e] = s.s_tau * s.s_f * cs[i, j - K]
            else:
                co, cs = lin["ff"]
                rows[e] = s.s_f**2 * co[i - K, j - K]
                const[e] = s.s_f**2 * cs[i - K, j - K]
        prob.add_lmi(f"ue{m}:fim", size, sp.csr_matrix(rows), const)

        # position:  [[Omega, Lambda J], [., U]] >= 0
        for name, var, sel, a in (("pos", ctx.Om[m], LAMBDA_SEL, s.a_P),
                                  ("time", ctx.Omt[m], GAMMA_SEL, s.a_T)):
            d = var.n
            size = d + K
            B = (s.s_tau / np.sqrt(a)) * (sel @ lm.J)
            Oidx = var.index_matrix()
            r, cc = _sym_entries(size)
            rows = np.zeros((r.size, n))
            const = np.zeros(r.size)
            for e, (i, j) in enumerate(zip(r, cc)):
                if j < d:
                    rows[e, Oidx[i, j]] = 1.0
                elif i < d:
                    const[e] = B[i, j - d]
                else:
                    rows[e, Uidx[i - d, j - d]] = 1.0
            prob.add_lmi(f"ue{m}:{name}", size, sp.csr_matrix(rows), const)

        # velocity:  [[Omega'', I], [I, F_gamma]] >= 0
        co, cs = lin["ff"]
        cof = 0.5 * (co + np.swapaxes(co, 0, 1))
        csf = 0.5 * (cs + cs.T)
        Fg_co = s.a_V * np.einsum("ia,jb,ijn->abn", lm.jf, lm.jf, cof)
        Fg_cs = s.a_V * lm.jf.T @ csf @ lm.jf
        Vidx = ctx.Omv[m].index_matrix()
        r, cc = _sym_entries(6)
        rows = np.zeros((r.size, n))
        const = np.zeros(r.size)
        for e, (i, j) in enumerate(zip(r, cc)):
            if j < 3:
                rows[e, Vidx[i, j]] = 1.0
            elif i < 3:
                const[e] = 1.0 if i == j - 3 else 0.0
            else:
                rows[e] = Fg_co[i - 3, j - 3]
                const[e] = Fg_cs[i - 3, j - 3]
        prob.add_lmi(f"ue{m}:vel", 6, sp.csr_matrix(rows), const)

    for m in range(M):
        row = np.zeros(n)
        row[ctx.W.slice] = (ctx.P / sc.links[m].sigma2) * ctx.bcoef[m]
        row[ctx.Y[m].slice.start] = -1.0
        prob.add_eq(f"leak{m}", row, 0.0)

    # per-satellite power budget (normalised to 1)
    for k in range(K):
        row = np.zeros(n)
        row[ctx.W.slice] = ctx.sel_coef[k]
        for m in range(M):
            row[ctx.V[m].slice] = ctx.sel_coef_v[k][m]
        prob.add_ineq(f"power{k}", row, 1.0)

    if with_sainr:
        prob.add_ineq("sainr", sainr_row(ctx, R, eta), -1.0)

    rows, const = ctx.W.embedding_lmi(n)
    prob.add_lmi("W:psd", 2 * NK, rows, const)
    for m in range(M):
        rows, const = ctx.V[m].embedding_lmi(n)
        prob.add_lmi(f"V{m}:psd", 2 * ctx.V[m].n, rows, const)
    return prob


def sainr_row(ctx: SdpContext, R, eta):
    """Linear SAINR row for the MVDR filter of ``R``, held fixed.

    With ``u = (R + s I)^-1 a_r`` the requirement
    ``|beta|^2 |u^H a_r|^2 t^H W t >= eta u^H (R(W, V) + s I) u`` is linear in
    the lifted beams. The beams that produced ``R`` satisfy it whenever their
    MVDR SAINR does, and any point satisfying it has MVDR SAINR >= eta, so
    the requirement carries across outer iterations.
    Returned as ``row @ x <= -1`` in normalised variables.
    """
    ss = ctx.scene.sensing
    n = ctx.n
    u = np.linalg.solve(R + ss.sigma_s2 * np.eye(ss.N), ss.a_r)
    ua = abs(np.conj(u) @ ss.a_r) ** 2
    scale = ctx.P / (ss.sigma_s2 * float(np.real(np.conj(u) @ u)))
    GW = (abs(ss.beta) ** 2 * ua / eta) * np.outer(ss.t, np.conj(ss.t))
    for amb in ss.ambiguities:
        GW = GW - amb.coef * abs(np.conj(u) @ amb.r) ** 2 * np.outer(amb.e, np.conj(amb.e))
    GV = -ua * (ss.nav_dirs * ss.nav_coef) @ np.conj(ss.nav_dirs).T
    row = np.zeros(n)
    row[ctx.W.slice] = -scale * ctx.W.coef(GW)
    for m in range(ctx.M):
        row[ctx.V[m].slice] = -scale * ctx.V[m].coef(GV)
    return row


def lmi_census(prob: ConicProblem, K, M, N):
    """Counts grouped the way the complexity statement groups them."""
    by = {}
    for L in prob.lmis:
        tag = L.name.split(":")[-1]
        by[tag] = by.get(tag, 0) + 1
    nk_terms = by.get("psd", 0) + sum(1 for name, _, _ in prob.in_rows
                                      if name.startswith("power") or name == "sainr")
    return {
        f"size_{K + 1}": by.get("time", 0),
        f"size_{K + 3}": by.get("pos", 0) + (by.get("vel", 0) if K == 3 else 0),
        "size_6_velocity": by.get("vel", 0),
        f"size_{2 * K}": by.get("fim", 0),
        f"size_{N * K}": nk_terms,
    }
