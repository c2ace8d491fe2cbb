"""Solver-agnostic conic problem in real variables and a Clarabel backend.

A :class:`ConicProblem` has a real decision vector ``x`` and

* a linear objective ``c^T x + c0``,
* equality rows ``A_eq x = b_eq`` and inequality rows ``A_in x <= b_in``,
* linear matrix inequalities ``mat(const + rows @ x) >= 0`` where ``rows``
  lists the upper triangle of a real symmetric matrix column by column.

Hermitian matrix variables are parameterised by :class:`HermitianVar`
(real part symmetric, imaginary part skew) and constrained through the real
embedding ``[[Re, -Im], [Im, Re]]``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import InfeasibleError, SolverError, UnboundedError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical"


def tri_indices(n):
    """(row, col) of the upper triangle in column-major order."""
    rows, cols = [], []
    for j in range(n):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    return np.array(rows, int), np.array(cols, int)


class VarSpace:
    """Allocator for the real decision vector."""

    def __init__(self):
        self.n = 0
        self.blocks = {}

    def alloc(self, name, size):
        sl = slice(self.n, self.n + size)
        self.blocks[name] = sl
        self.n += size
        return sl


class HermitianVar:
    """n x n Hermitian matrix variable: n(n+1)/2 real-part and n(n-1)/2
    imaginary-part parameters (upper triangle, row-major)."""

    def __init__(self, space: VarSpace, name, n):
        self.n = n
        self.name = name
        iu = np.triu_indices(n)
        ju = np.triu_indices(n, 1)
        self.re_idx = iu
        self.im_idx = ju
        self.n_re = iu[0].size
        self.n_im = ju[0].size
        self.slice = space.alloc(name, self.n_re + self.n_im)

    @property
    def start(self):
        return self.slice.start

    def coef(self, G):
        """Coefficients (..., n_params) with ``Re tr(G X) = coef @ params``.

        ``G`` may carry leading batch dimensions.
        """
        G = np.asarray(G)
        GT = np.swapaxes(G, -1, -2)
        ca = np.real(GT)  # multiplies Re X[b, a]
        cb = -np.imag(GT)  # multiplies Im X[b, a]
        a, b = self.re_idx
        re = ca[..., a, b] + ca[..., b, a]
        diag = a == b
        re[..., diag] = ca[..., a[diag], b[diag]]
        a2, b2 = self.im_idx
        im = cb[..., a2, b2] - cb[..., b2, a2]
        return np.concatenate([re, im], axis=-1)

    def value(self, x):
        p = x[self.slice]
        X = np.zeros((self.n, self.n), complex)
        a, b = self.re_idx
        X[a, b] += p[: self.n_re]
        X[b, a] = X[a, b]
        a2, b2 = self.im_idx
        im = p[self.n_re:]
        X[a2, b2] += 1j * im
        X[b2, a2] -= 1j * im
        return X

    def params(self, X):
        """Parameter vector of a Hermitian matrix (inverse of :meth:`value`)."""
        a, b = self.re_idx
        a2, b2 = self.im_idx
        return np.concatenate([np.real(X[a, b]), np.imag(X[a2, b2])])

    def embedding_lmi(self, n_vars):
        """Rows for ``[[Re X, -Im X], [Im X, Re X]] >= 0`` (size 2n)."""
        n = self.n
        r, c = tri_indices(2 * n)
        re_pos = -np.ones((n, n), int)
        a, b = self.re_idx
        re_pos[a, b] = np.arange(self.n_re)
        re_pos[b, a] = re_pos[a, b]
        im_pos = -np.ones((n, n), int)
        im_sign = np.zeros((n, n))
        a2, b2 = self.im_idx
        im_pos[a2, b2] = self.n_re + np.arange(self.n_im)
        im_pos[b2, a2] = im_pos[a2, b2]
        im_sign[a2, b2] = 1.0
        im_sign[b2, a2] = -1.0
        ri, ci = r % n, c % n
        top, left = r < n, c < n
        same = top == left  # diagonal quadrant blocks hold Re X
        cols = np.where(same, re_pos[ri, ci], im_pos[ri, ci])
        # lower-left block holds Im X, upper-right -Im X
        vals = np.where(same, 1.0, np.where(~top & left, im_sign[ri, ci], -im_sign[ri, ci]))
        keep = cols >= 0
        rows = sp.csr_matrix((vals[keep], (np.flatnonzero(keep), self.start + cols[keep])),
                             shape=(r.size, n_vars))
        return rows, np.zeros(r.size)


class SubspaceHermitianVar(HermitianVar):
    """Hermitian variable confined to the range of an orthonormal basis ``B``
    (n_full x d): X = B Y B^H with Y a d x d Hermitian parameter block.

    Coefficients and values are expressed in the full space, so callers do
    not see the reduction.
    """

    def __init__(self, space: VarSpace, name, basis):
        self.basis = np.asarray(basis, complex)
        self.n_full = self.basis.shape[0]
        super().__init__(space, name, self.basis.shape[1])

    def coef(self, G):
        B = self.basis
        return super().coef(B.conj().T @ np.asarray(G) @ B)

    def value(self, x):
        B = self.basis
        return B @ super().value(x) @ B.conj().T

    def params(self, X):
        B = self.basis
        return super().params(B.conj().T @ X @ B)


class SymVar:
    """n x n real symmetric matrix variable (upper triangle, row-major)."""

    def __init__(self, space: VarSpace, name, n):
        self.n = n
        self.name = name
        self.idx = np.triu_indices(n)
        self.slice = space.alloc(name, self.idx[0].size)

    def index_matrix(self):
        """n x n array of decision-vector indices of each entry."""
        out = np.zeros((self.n, self.n), int)
        a, b = self.idx
        out[a, b] = self.slice.start + np.arange(a.size)
        out[b, a] = out[a, b]
        return out

    def value(self, x):
        X = np.zeros((self.n, self.n))
        a, b = self.idx
        X[a, b] = x[self.slice]
        X[b, a] = X[a, b]
        return X

    def trace_coef(self, n_vars):
        c = np.zeros(n_vars)
        a, b = self.idx
        c[self.slice.start + np.flatnonzero(a == b)] = 1.0
        return c


@dataclass
class Lmi:
    name: str
    size: int
    rows: sp.csr_matrix  # (size(size+1)/2, n_vars)
    const: np.ndarray


@dataclass
class ConicProblem:
    n: int
    c: np.ndarray
    c0: float = 0.0
    eq_rows: list = field(default_factory=list)  # (name, A, b)
    in_rows: list = field(default_factory=list)
    lmis: list = field(default_factory=list)

    def add_eq(self, name, A, b):
        self.eq_rows.append((name, sp.csr_matrix(np.atleast_2d(A)) if not sp.issparse(A) else A.tocsr(),
                             np.atleast_1d(np.asarray(b, float))))

    def add_ineq(self, name, A, b):
        """A x <= b."""
        self.in_rows.append((name, sp.csr_matrix(np.atleast_2d(A)) if not sp.issparse(A) else A.tocsr(),
                             np.atleast_1d(np.asarray(b, float))))

    def add_lmi(self, name, size, rows, const):
        rows = rows.tocsr() if sp.issparse(rows) else sp.csr_matrix(rows)
        self.lmis.append(Lmi(name, int(size), rows, np.asarray(const, float)))

    def add_dense_lmi(self, name, entries):
        """LMI from a square nested list of (coef vector, const) pairs."""
        size = len(entries)
        r, c = tri_indices(size)
        coefs = np.array([entries[i][j][0] for i, j in zip(r, c)])
        const = np.array([entries[i][j][1] for i, j in zip(r, c)])
        self.add_lmi(name, size, sp.csr_matrix(coefs), const)

    def census(self):
        """Count of LMIs per matrix dimension."""
        out = {}
        for L in self.lmis:
            out[L.size] = out.get(L.size, 0) + 1
        return out

    def violation(self, x):
        """Largest constraint violation of ``x`` (equalities, inequalities, LMI eigenvalues)."""
        worst = 0.0
        for _, A, b in self.eq_rows:
            worst = max(worst, float(np.max(np.abs(A @ x - b))))
        for _, A, b in self.in_rows:
            worst = max(worst, float(np.max(A @ x - b)))
        for L in self.lmis:
            worst = max(worst, float(-np.linalg.eigvalsh(self.lmi_value(L, x))[0]))
        return worst

    def lmi_value(self, lmi: Lmi, x):
        v = lmi.const + lmi.rows @ x
        M = np.zeros((lmi.size, lmi.size))
        r, c = tri_indices(lmi.size)
        M[r, c] = v
        M[c, r] = v
        return M


@dataclass
class ConicResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int = 0
    solve_time: float = 0.0
    raw_status: str = ""
    ineq_duals: dict = field(default_factory=dict)
    violation: float = np.inf

    @property
    def usable(self):
        """Optimal, or a numerically flagged point that is still feasible."""
        return self.status == OPTIMAL or (self.status == NUMERICAL and self.violation <= 1e-6)

    def binding(self, tol=1e-6):
        return [k for k, v in self.ineq_duals.items() if np.max(np.abs(v)) > tol]


def _svec_scale(size):
    r, c = tri_indices(size)
    return np.where(r == c, 1.0, np.sqrt(2.0))


def _clarabel_solve(prob: ConicProblem, tol):
    import clarabel

    A_blocks, b_blocks, cones = [], [], []
    if prob.eq_rows:
        A = sp.vstack([a for _, a, _ in prob.eq_rows])
        A_blocks.append(A)
        b_blocks.append(np.concatenate([b for _, _, b in prob.eq_rows]))
        cones.append(clarabel.ZeroConeT(A.shape[0]))
    n_in = 0
    if prob.in_rows:
        A = sp.vstack([a for _, a, _ in prob.in_rows])
        n_in = A.shape[0]
        A_blocks.append(A)
        b_blocks.append(np.concatenate([b for _, _, b in prob.in_rows]))
        cones.append(clarabel.NonnegativeConeT(A.shape[0]))
    for L in prob.lmis:
        s = _svec_scale(L.size)
        A_blocks.append(-sp.diags(s) @ L.rows)
        b_blocks.append(s * L.const)
        cones.append(clarabel.PSDTriangleConeT(L.size))
    A = sp.vstack(A_blocks).tocsc()
    b = np.concatenate(b_blocks)
    P = sp.csc_matrix((prob.n, prob.n))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.tol_infeas_abs = tol
    settings.tol_infeas_rel = tol
    settings.max_iter = 500
    solver = clarabel.DefaultSolver(P, np.asarray(prob.c, float), A, b, cones, settings)
    sol = solver.solve()
    raw = str(sol.status)
    name = raw.split(".")[-1]
    if name in ("Solved", "AlmostSolved"):
        status = OPTIMAL
    elif name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        status = INFEASIBLE
    elif name in ("DualInfeasible", "AlmostDualInfeasible"):
        status = UNBOUNDED
    else:
        status = NUMERICAL
    x = np.asarray(sol.x, float)
    z = np.asarray(sol.z, float)
    duals = {}
    off = sum(a.shape[0] for _, a, _ in prob.eq_rows)
    for name_, a, _ in prob.in_rows:
        duals[name_] = z[off:off + a.shape[0]]
        off += a.shape[0]
    viol = prob.violation(x) if status in (OPTIMAL, NUMERICAL) and np.all(np.isfinite(x)) else np.inf
    obj = float(prob.c @ x + prob.c0) if status == OPTIMAL or viol <= 1e-6 else np.nan
    return ConicResult(status, x, obj, int(sol.iterations), float(sol.solve_time), raw, duals, viol)


SOLVERS = {"clarabel": _clarabel_solve}


def conic_solve(prob: ConicProblem, tol=1e-7, solver="clarabel", raise_on_failure=False):
    """Solve ``prob``; statuses are optimal / infeasible / unbounded / numerical."""
    if solver not in SOLVERS:
        raise SolverError(f"unknown conic solver {solver!r}", status=NUMERICAL)
    res = SOLVERS[solver](prob, tol)
    if raise_on_failure and res.status != OPTIMAL:
        if res.status == INFEASIBLE:
            raise InfeasibleError("conic problem infeasible", status=res.status, binding=res.binding())
        if res.status == UNBOUNDED:
            raise UnboundedError("conic problem unbounded", status=res.status)
        raise SolverError(f"conic solver failed ({res.raw_status})", status=res.status)
    return res
