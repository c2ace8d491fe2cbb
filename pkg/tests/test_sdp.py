import numpy as np
import pytest

from leonrs.fim import build_fim_bundle, fim_numerators, q_matrix
from leonrs.optimizer.algorithm import _leading, _scalings, initial_point
from leonrs.optimizer.conic import OPTIMAL, conic_solve
from leonrs.optimizer.sdp import (SdpContext, build_penalized_sdp, lmi_census, navigation_basis,
                                  sainr_row)
from leonrs.sensing import interference_matrix, max_sainr


@pytest.fixture(scope="module")
def start(desk_scene):
    w, v, _ = initial_point(desk_scene)
    P = desk_scene.power_budget
    Wn = np.outer(w, np.conj(w)) / P
    Vn = [np.outer(x, np.conj(x)) / P for x in v]
    scal, obj0 = _scalings(desk_scene, w, v)
    return w, v, Wn, Vn, scal, obj0


def lifted_point(ctx, Wn, Vn):
    x = np.zeros(ctx.n)
    x[ctx.W.slice] = ctx.W.params(Wn)
    for m, X in enumerate(Vn):
        x[ctx.V[m].slice] = ctx.V[m].params(X)
        lm = ctx.scene.links[m]
        x[ctx.Y[m].slice] = ctx.P * np.real(np.conj(lm.b) @ Wn @ lm.b) / lm.sigma2
    return x


def random_lifted(rng, n, rank=2):
    A = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return A @ A.conj().T


def test_census_full_variables(desk_scene, start):
    _, _, Wn, Vn, scal, obj0 = start
    sc = desk_scene
    K, M, N = sc.K, sc.M, sc.N
    ctx = SdpContext(sc, scal, obj0, reduce_navigation=False)
    R = interference_matrix(sc.sensing, W=sc.power_budget * Wn, V=[sc.power_budget * X for X in Vn])
    prob = build_penalized_sdp(ctx, Wn, Vn, R, _leading(Wn)[0], [_leading(X)[0] for X in Vn], 0.03)
    sizes = sorted(L.size for L in prob.lmis)
    expect = sorted([2 * K] * M + [K + 3] * M + [K + 1] * M + [6] * M + [2 * N * K] * (M + 1))
    assert sizes == expect
    c = lmi_census(prob, K, M, N)
    assert c[f"size_{K + 1}"] == M and c[f"size_{2 * K}"] == M and c["size_6_velocity"] == M
    assert c[f"size_{N * K}"] == (M + 1) + K + 1


def test_navigation_basis_is_exact(desk_scene, rng):
    sc = desk_scene
    NK = sc.N * sc.K
    for m in range(sc.M):
        B = navigation_basis(sc, m)
        np.testing.assert_allclose(B.conj().T @ B, np.eye(B.shape[1]), atol=1e-12)
        V = random_lifted(rng, NK)
        Vp = B @ (B.conj().T @ V @ B) @ B.conj().T
        lm = sc.links[m]
        a, b = build_fim_bundle(lm, V=V), build_fim_bundle(lm, V=Vp)
        np.testing.assert_allclose(b.full(), a.full(), rtol=1e-9, atol=1e-9 * np.abs(a.full()).max())
        Ra = interference_matrix(sc.sensing, V=[V])
        Rb = interference_matrix(sc.sensing, V=[Vp])
        np.testing.assert_allclose(Rb, Ra, rtol=1e-9, atol=1e-12 * np.abs(Ra).max())
        for k in range(sc.K):
            blk = slice(k * sc.N, (k + 1) * sc.N)
            assert np.real(np.trace(Vp[blk, blk])) <= np.real(np.trace(V[blk, blk])) * (1 + 1e-12)


@pytest.mark.parametrize("reduce", [False, True])
def test_linearized_tangent_at_expansion_point(desk_scene, start, rng, reduce):
    _, _, Wn, Vn, scal, obj0 = start
    sc = desk_scene
    ctx = SdpContext(sc, scal, obj0, reduce_navigation=reduce)
    x0 = lifted_point(ctx, Wn, Vn)
    P = sc.power_budget
    for m in range(sc.M):
        lin = ctx.linearized(m, Wn, Vn[m])
        lm = sc.links[m]
        b = build_fim_bundle(lm, V=P * Vn[m], W=P * Wn)
        exact = {"tt": b.F_tt, "ff": b.F_ff, "tf": b.F_tf}
        for kind, (coef, const) in lin.items():
            val = coef @ x0 + const
            np.testing.assert_allclose(val, exact[kind], rtol=1e-10, atol=1e-10 * np.abs(exact[kind]).max())


def test_product_surrogate_exact_in_v(desk_scene, start, rng):
    _, _, Wn, Vn, scal, obj0 = start
    sc = desk_scene
    ctx = SdpContext(sc, scal, obj0)
    P = sc.power_budget
    m = 0
    lm = sc.links[m]
    Vr = navigation_basis(sc, m)
    Vnew = Vr @ random_lifted(rng, Vr.shape[1]) @ Vr.conj().T * 1e-3
    x = lifted_point(ctx, Wn, [Vnew, Vn[1]])
    lin = ctx.linearized(m, Wn, Vn[m], surrogate="product")
    b = build_fim_bundle(lm, V=P * Vnew, W=P * Wn)
    coef, const = lin["tt"]
    np.testing.assert_allclose(coef @ x + const, b.F_tt, rtol=1e-9, atol=1e-10 * np.abs(b.F_tt).max())


def test_sainr_row_matches_fixed_filter(desk_scene, start, rng):
    _, _, Wn, Vn, scal, obj0 = start
    sc = desk_scene
    ss = sc.sensing
    P = sc.power_budget
    ctx = SdpContext(sc, scal, obj0, reduce_navigation=False)
    R = interference_matrix(ss, W=P * Wn, V=[P * X for X in Vn])
    row = sainr_row(ctx, R, sc.eta)
    u = np.linalg.solve(R + ss.sigma_s2 * np.eye(ss.N), ss.a_r)

    def fixed_filter_sainr(W, V):
        Rx = interference_matrix(ss, W=W, V=V)
        num = abs(ss.beta) ** 2 * abs(np.conj(u) @ ss.a_r) ** 2 * np.real(np.conj(ss.t) @ W @ ss.t)
        return num / np.real(np.conj(u) @ (Rx + ss.sigma_s2 * np.eye(ss.N)) @ u)

    # at the point that produced R the fixed filter is the MVDR filter
    g = max_sainr(ss, R, W=P * Wn)
    assert fixed_filter_sainr(P * Wn, [P * X for X in Vn]) == pytest.approx(g, rel=1e-9)
    assert (row @ lifted_point(ctx, Wn, Vn) <= -1) == (g >= sc.eta)
    NK = sc.N * sc.K
    uu = np.real(np.conj(u) @ u)
    for _ in range(50):
        W = random_lifted(rng, NK, 1) * 10 ** rng.uniform(-3, 0) / NK
        V = [random_lifted(rng, NK) * 10 ** rng.uniform(-3, 0) / NK for _ in range(sc.M)]
        val = row @ lifted_point(ctx, W, V)
        # row @ x + 1 = -(P / (s |u|^2)) (num(W) / eta - u^H (R + s I) u), so the
        # row holds exactly when the fixed-filter SAINR reaches eta
        Rx = interference_matrix(ss, W=P * W, V=[P * X for X in V])
        num = abs(ss.beta) ** 2 * abs(np.conj(u) @ ss.a_r) ** 2 * np.real(np.conj(ss.t) @ (P * W) @ ss.t)
        den = np.real(np.conj(u) @ (Rx + ss.sigma_s2 * np.eye(ss.N)) @ u)
        expect = -(num / sc.eta - den) / (ss.sigma_s2 * uu) - 1
        assert val == pytest.approx(expect, rel=1e-9, abs=1e-9)
        assert (val <= -1) == (fixed_filter_sainr(P * W, [P * X for X in V]) >= sc.eta) or \
            abs(val + 1) < 1e-9


def test_reduced_and_full_sdp_agree(desk_scene, start):
    _, _, Wn, Vn, scal, obj0 = start
    sc = desk_scene
    P = sc.power_budget
    R = interference_matrix(sc.sensing, W=P * Wn, V=[P * X for X in Vn])
    iw, iv = _leading(Wn)[0], [_leading(X)[0] for X in Vn]
    vals = []
    for reduce in (False, True):
        ctx = SdpContext(sc, scal, obj0, reduce_navigation=reduce)
        res = conic_solve(build_penalized_sdp(ctx, Wn, Vn, R, iw, iv, 0.03), tol=1e-8)
        assert res.status == OPTIMAL
        vals.append(res.objective)
    assert vals[1] == pytest.approx(vals[0], rel=1e-5)


def test_sdp_solution_respects_budget(desk_scene, start):
    _, _, Wn, Vn, scal, obj0 = start
    sc = desk_scene
    P = sc.power_budget
    ctx = SdpContext(sc, scal, obj0, reduce_navigation=True)
    R = interference_matrix(sc.sensing, W=P * Wn, V=[P * X for X in Vn])
    prob = build_penalized_sdp(ctx, Wn, Vn, R, _leading(Wn)[0], [_leading(X)[0] for X in Vn], 0.03)
    res = conic_solve(prob)
    assert res.status == OPTIMAL
    W = ctx.W.value(res.x)
    V = [ctx.V[m].value(res.x) for m in range(sc.M)]
    for k in range(sc.K):
        blk = slice(k * sc.N, (k + 1) * sc.N)
        tot = np.real(np.trace(W[blk, blk])) + sum(np.real(np.trace(X[blk, blk])) for X in V)
        assert tot <= 1 + 1e-6
    assert np.linalg.eigvalsh(W)[0] >= -1e-7


def test_numerators_consistent(desk_scene, start):
    # fim_numerators(Q) / s equals the bundle blocks before symmetrisation
    _, v, _, _, _, _ = start
    lm = desk_scene.links[0]
    X = fim_numerators(lm, q_matrix(lm, v=v[0]))
    b = build_fim_bundle(lm, v=v[0])
    np.testing.assert_allclose(X["tf"] / b.sigma_eq2, b.F_tf, rtol=1e-12)
