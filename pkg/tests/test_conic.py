import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from leonrs.errors import InfeasibleError, SolverError, UnboundedError
from leonrs.optimizer.conic import (INFEASIBLE, OPTIMAL, UNBOUNDED, ConicProblem, HermitianVar,
                                    SubspaceHermitianVar, SymVar, VarSpace, conic_solve, tri_indices)


def herm(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A + A.conj().T


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_hermitian_coef_matches_trace(n, seed):
    rng = np.random.default_rng(seed)
    sp_ = VarSpace()
    var = HermitianVar(sp_, "X", n)
    X = herm(rng, n)
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))  # not Hermitian on purpose
    x = np.zeros(sp_.n)
    x[var.slice] = var.params(X)
    np.testing.assert_allclose(var.value(x), X, atol=1e-12)
    assert var.coef(G) @ x[var.slice] == pytest.approx(np.real(np.trace(G @ X)), rel=1e-10, abs=1e-10)


def test_batched_coef():
    rng = np.random.default_rng(0)
    var = HermitianVar(VarSpace(), "X", 3)
    G = rng.standard_normal((2, 4, 3, 3)) + 1j * rng.standard_normal((2, 4, 3, 3))
    C = var.coef(G)
    assert C.shape == (2, 4, 9)
    np.testing.assert_allclose(C[1, 2], var.coef(G[1, 2]))


def test_embedding_lmi_spectrum():
    rng = np.random.default_rng(1)
    n = 4
    sp_ = VarSpace()
    var = HermitianVar(sp_, "X", n)
    X = herm(rng, n)
    x = var.params(X)
    rows, const = var.embedding_lmi(sp_.n)
    prob = ConicProblem(sp_.n, np.zeros(sp_.n))
    prob.add_lmi("emb", 2 * n, rows, const)
    E = prob.lmi_value(prob.lmis[0], x)
    ev = np.linalg.eigvalsh(X)
    np.testing.assert_allclose(np.linalg.eigvalsh(E), np.sort(np.repeat(ev, 2)), atol=1e-10)


def test_subspace_var_roundtrip():
    rng = np.random.default_rng(2)
    B, _ = np.linalg.qr(rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3)))
    sp_ = VarSpace()
    var = SubspaceHermitianVar(sp_, "V", B)
    Y = herm(rng, 3)
    X = B @ Y @ B.conj().T
    x = var.params(X)
    np.testing.assert_allclose(var.value(x), X, atol=1e-12)
    G = herm(rng, 6)
    assert var.coef(G) @ x == pytest.approx(np.real(np.trace(G @ X)), rel=1e-10)


def test_sdp_min_eigenvalue_oracle():
    # min Re tr(C X) s.t. tr X = 1, X >= 0 has value lambda_min(C)
    rng = np.random.default_rng(3)
    n = 4
    C = herm(rng, n)
    sp_ = VarSpace()
    var = HermitianVar(sp_, "X", n)
    prob = ConicProblem(sp_.n, var.coef(C))
    prob.add_eq("trace", var.coef(np.eye(n)), 1.0)
    rows, const = var.embedding_lmi(sp_.n)
    prob.add_lmi("psd", 2 * n, rows, const)
    res = conic_solve(prob, tol=1e-9)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-6)
    X = var.value(res.x)
    u = np.linalg.eigh(C)[1][:, 0]
    assert abs(np.conj(u) @ X @ u) == pytest.approx(1.0, abs=1e-5)


def test_real_sdp_dense_lmi():
    # max x s.t. [[1, x], [x, 1]] >= 0  ->  x = 1
    prob = ConicProblem(1, np.array([-1.0]))
    prob.add_dense_lmi("box", [[(np.zeros(1), 1.0), (np.ones(1), 0.0)],
                               [(np.ones(1), 0.0), (np.zeros(1), 1.0)]])
    res = conic_solve(prob, tol=1e-9)
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(1.0, abs=1e-6)
    assert prob.census() == {2: 1}


def test_sym_var_trace_and_index():
    sp_ = VarSpace()
    S = SymVar(sp_, "S", 3)
    x = np.arange(sp_.n, dtype=float)
    X = S.value(x)
    np.testing.assert_array_equal(X, X.T)
    assert S.trace_coef(sp_.n) @ x == pytest.approx(np.trace(X))
    idx = S.index_matrix()
    np.testing.assert_array_equal(x[idx], X)


def test_infeasible_and_unbounded():
    prob = ConicProblem(1, np.array([1.0]))
    prob.add_ineq("up", np.array([[1.0]]), -1.0)  # x <= -1
    prob.add_ineq("low", np.array([[-1.0]]), -1.0)  # x >= 1
    assert conic_solve(prob).status == INFEASIBLE
    with pytest.raises(InfeasibleError):
        conic_solve(prob, raise_on_failure=True)
    prob = ConicProblem(1, np.array([1.0]))
    prob.add_ineq("up", np.array([[1.0]]), 0.0)
    assert conic_solve(prob).status == UNBOUNDED
    with pytest.raises(UnboundedError):
        conic_solve(prob, raise_on_failure=True)


def test_unknown_solver():
    with pytest.raises(SolverError):
        conic_solve(ConicProblem(1, np.zeros(1)), solver="nope")


def test_violation_and_binding():
    prob = ConicProblem(2, np.array([-1.0, -1.0]))
    prob.add_ineq("sum", sp.csr_matrix([[1.0, 1.0]]), 1.0)
    prob.add_ineq("x", np.array([[1.0, 0.0]]), 5.0)
    prob.add_ineq("pos", -np.eye(2), np.zeros(2))
    res = conic_solve(prob)
    assert res.status == OPTIMAL and res.violation <= 1e-7
    assert "sum" in res.binding() and "x" not in res.binding()
    assert prob.violation(np.array([2.0, 0.0])) == pytest.approx(1.0)


def test_tri_indices_order():
    r, c = tri_indices(3)
    assert list(zip(r, c)) == [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)]
