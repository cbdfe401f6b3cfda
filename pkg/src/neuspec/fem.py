"""Finite-element Neumann eigenvalues of Delta and Delta^(2m) on planar domains.

Continuous Lagrange elements (order 1 or 2) give a mass/stiffness pair
(M, A); both Neumann-type boundary conditions of the even-order problems
are natural, so no constraints are imposed.  The order-2m operator is
realized mixed as K_q = A (M^{-1} A)^(q-1) with q = 2m applied matrix
free, so its discrete eigenpairs are exactly the q-th powers of the
(A, M) pencil's with the same vectors; the independent particular-
solutions module is what probes whether that squaring survives at the
continuous level.

The eigensolver builds a subspace by block Lanczos on the inverse
operator (q nested A-solves per application; deflated Jacobi-CG on the
mean-zero complement at inner tolerance 1e-12, with a machine-tight
polish of the final pairs), fully reorthogonalized in the M inner
product, then extracts Rayleigh-Ritz pairs of the pencil and evaluates
the order-2m values through the exact symmetric splitting of K_q.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .geometry import Domain
from .meshing import Mesh
from .quadrature import cached_mesh, triangle_rule

__all__ = [
    "OperatorPair",
    "EigResult",
    "ConvergenceStudy",
    "assemble",
    "eig_neumann_laplacian",
    "eig_polyharmonic_neumann",
    "convergence_study",
    "SolverError",
]

CG_TOL = 1e-12
CG_MAXITER = 40000
RESIDUAL_TOL = 1e-9
_SEED_SEQUENCE = 20240


class SolverError(RuntimeError):
    """Inner CG or the eigensolver failed to converge within budget."""


@dataclass(frozen=True)
class OperatorPair:
    """Assembled mass and stiffness operators of one mesh/order combination."""

    M: sp.csr_matrix
    A: sp.csr_matrix
    dimension: int
    order: int


@dataclass(frozen=True)
class EigResult:
    """Eigenvalue estimates with vectors and operator residual norms.

    values are ascending; vectors are M-orthonormal and M-orthogonal to
    the constant mode; residuals are ||K v - value * M v|| in the M^{-1}
    norm.  power records m (0 for the plain Laplacian); mesh_h the target
    edge length.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    power: int
    mesh_h: float

    def to_json(self, order: int | None = None) -> str:
        payload = {
            "values": [float(v) for v in self.values],
            "residuals": [float(r) for r in self.residuals],
            "h": self.mesh_h,
            "m": self.power,
        }
        if order is not None:
            payload["order"] = order
        return json.dumps(payload, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def _p1_matrices(mesh: Mesh):
    v = mesh.vertices
    t = mesh.triangles
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    e1 = p1 - p0
    e2 = p2 - p0
    jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * jac
    # gradients of barycentric coordinates
    g1 = np.stack([p1[:, 1] - p2[:, 1], p2[:, 0] - p1[:, 0]], axis=1) / jac[:, None]
    g2 = np.stack([p2[:, 1] - p0[:, 1], p0[:, 0] - p2[:, 0]], axis=1) / jac[:, None]
    g3 = np.stack([p0[:, 1] - p1[:, 1], p1[:, 0] - p0[:, 0]], axis=1) / jac[:, None]
    grads = np.stack([g1, g2, g3], axis=1)  # (nt, 3, 2)
    ke = np.einsum("tik,tjk,t->tij", grads, grads, area)
    ref_mass = (np.ones((3, 3)) + np.eye(3)) / 12.0
    me = ref_mass[None, :, :] * area[:, None, None]
    return me, ke, t


def _p2_reference():
    pts, w = triangle_rule(4)
    xi, eta = pts[:, 0], pts[:, 1]
    lam = np.stack([1.0 - xi - eta, xi, eta], axis=1)  # (nq, 3)
    n_vals = np.concatenate(
        [
            lam * (2.0 * lam - 1.0),
            4.0 * lam[:, [0, 1, 2]] * lam[:, [1, 2, 0]],
        ],
        axis=1,
    )  # (nq, 6): vertices then midpoints (01, 12, 20)
    # dN/dlambda (nq, 6, 3)
    nq = len(w)
    dndl = np.zeros((nq, 6, 3))
    for k in range(3):
        dndl[:, k, k] = 4.0 * lam[:, k] - 1.0
    for e, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        dndl[:, 3 + e, a] = 4.0 * lam[:, b]
        dndl[:, 3 + e, b] = 4.0 * lam[:, a]
    return n_vals, dndl, w


def _edge_numbering(mesh: Mesh):
    """Deterministic edge indices keyed by sorted vertex pairs."""
    edges = {}
    t = mesh.triangles
    conn = np.empty((len(t), 3), dtype=int)
    for i, tri in enumerate(t):
        for e, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
            key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
            idx = edges.get(key)
            if idx is None:
                idx = len(edges)
                edges[key] = idx
            conn[i, e] = idx
    return conn, len(edges)


def _p2_matrices(mesh: Mesh):
    n_vals, dndl, w = _p2_reference()
    v = mesh.vertices
    t = mesh.triangles
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    e1 = p1 - p0
    e2 = p2 - p0
    jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    g1 = np.stack([p1[:, 1] - p2[:, 1], p2[:, 0] - p1[:, 0]], axis=1) / jac[:, None]
    g2 = np.stack([p2[:, 1] - p0[:, 1], p0[:, 0] - p2[:, 0]], axis=1) / jac[:, None]
    g3 = np.stack([p0[:, 1] - p1[:, 1], p1[:, 0] - p0[:, 0]], axis=1) / jac[:, None]
    gradl = np.stack([g1, g2, g3], axis=1)  # (nt, 3, 2)

    ref_mass = np.einsum("q,qi,qj->ij", w, n_vals, n_vals)  # reference mass / |J|
    me = ref_mass[None, :, :] * jac[:, None, None]
    gradn = np.einsum("qij,tjk->qtik", dndl, gradl)  # (nq, nt, 6, 2)
    ke = np.einsum("q,qtik,qtjk,t->tij", w, gradn, gradn, jac)

    conn_e, n_edges = _edge_numbering(mesh)
    nv = len(v)
    dofs = np.concatenate([t, nv + conn_e], axis=1)  # (nt, 6)
    return me, ke, dofs, nv + n_edges


def assemble(mesh: Mesh, order: int = 2) -> OperatorPair:
    """Mass and stiffness operators for continuous Lagrange elements."""
    v = mesh.vertices
    t = mesh.triangles
    e1 = v[t[:, 1]] - v[t[:, 0]]
    e2 = v[t[:, 2]] - v[t[:, 0]]
    if np.any(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] <= 0.0):
        raise ValueError("mesh contains a degenerate or inverted triangle")
    if order == 1:
        me, ke, dofs = _p1_matrices(mesh)
        ndof = len(mesh.vertices)
    elif order == 2:
        me, ke, dofs, ndof = _p2_matrices(mesh)
    else:
        raise ValueError("element order must be 1 or 2")
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    m_mat = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    a_mat = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    # exact symmetrization removes assembly-order roundoff
    m_mat = 0.5 * (m_mat + m_mat.T)
    a_mat = 0.5 * (a_mat + a_mat.T)
    return OperatorPair(M=m_mat.tocsr(), A=a_mat.tocsr(), dimension=ndof, order=order)


# ---------------------------------------------------------------------------
# Deflated CG and the pencil solver
# ---------------------------------------------------------------------------

try:
    import numba as _numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False


if _HAVE_NUMBA:
    # fused BLAS-1 passes; sequential loops keep results bit-reproducible

    @_numba.njit(cache=True)
    def _fused_update(x, r, p, ap, alpha):
        rn2 = 0.0
        xn2 = 0.0
        for i in range(x.size):
            x[i] += alpha * p[i]
            r[i] -= alpha * ap[i]
            rn2 += r[i] * r[i]
            xn2 += x[i] * x[i]
        return rn2, xn2

    @_numba.njit(cache=True)
    def _fused_direction(z, r, p, diag_inv, rz_old):
        rz = 0.0
        for i in range(r.size):
            z[i] = diag_inv[i] * r[i]
            rz += r[i] * z[i]
        beta = rz / rz_old
        for i in range(p.size):
            p[i] = z[i] + beta * p[i]
        return rz
else:

    def _fused_update(x, r, p, ap, alpha):
        x += alpha * p
        r -= alpha * ap
        return float(r @ r), float(x @ x)

    def _fused_direction(z, r, p, diag_inv, rz_old):
        np.multiply(diag_inv, r, out=z)
        rz = float(r @ z)
        p *= rz / rz_old
        p += z
        return rz


def _pcg(mat, b, diag_inv, opnorm, tol=CG_TOL, maxiter=CG_MAXITER, project=None,
         label="CG"):
    """Jacobi-preconditioned CG solve(s) of `mat x = b` (columns independent).

    Stops on the normwise backward error ||r|| <= tol * (||Op|| ||x|| + ||b||),
    which keeps the 1e-12 tolerance attainable in double precision where a
    plain relative residual would stagnate below the roundoff floor on
    ill-conditioned fine-mesh operators.

    `project` removes the operator's null component from the right-hand
    side (and from periodic residual recomputations).  The residual then
    stays in the compatible subspace by itself, since every update is an
    operator image; the iterates may drift along the null direction, and
    callers normalize that once at the end.
    """
    single = b.ndim == 1
    b_mat = b[:, None] if single else b
    if project is not None:
        b_mat = project(b_mat)
    cols = []
    for j in range(b_mat.shape[1]):
        cols.append(_pcg_single(mat, np.ascontiguousarray(b_mat[:, j]), diag_inv,
                                opnorm, tol, maxiter, project, label))
    out = np.stack(cols, axis=1)
    return out[:, 0] if single else out


def _pcg_single(mat, b, diag_inv, opnorm, tol, maxiter, project, label):
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = math.sqrt(float(r @ r))
    if bnorm == 0.0:
        return x
    z = diag_inv * r
    p = z.copy()
    rz = float(r @ z)
    for it in range(maxiter):
        ap = mat @ p
        alpha = rz / float(p @ ap)
        rn2, xn2 = _fused_update(x, r, p, ap, alpha)
        if it % 64 == 63:
            r[:] = b - mat @ x  # forestall recurrence drift
            if project is not None:
                r -= np.sum(r) / r.size  # null component is span{1}
            rn2 = float(r @ r)
        if math.sqrt(rn2) <= tol * (opnorm * math.sqrt(xn2) + bnorm):
            return x
        rz = _fused_direction(z, r, p, diag_inv, rz)
    raise SolverError(f"{label} did not converge in {maxiter} iterations")


class _Pencil:
    """Operator algebra for (A, M) with the constant mode deflated.

    Internally works on symmetrically RCM-permuted copies of the
    operators: the locality of the reordered sparsity pattern speeds the
    bandwidth-bound CG matvecs by roughly a quarter.  `restore` maps
    solution vectors back to mesh dof order.
    """

    def __init__(self, op: OperatorPair):
        from scipy.sparse.csgraph import reverse_cuthill_mckee

        self.perm = np.asarray(reverse_cuthill_mckee(op.M, symmetric_mode=True))
        self.M = op.M[self.perm][:, self.perm].tocsr()
        self.A = op.A[self.perm][:, self.perm].tocsr()
        self.n = op.dimension
        self.ones = np.ones(self.n)
        self.m_ones = self.M @ self.ones
        self.ones_m_ones = float(self.ones @ self.m_ones)
        self.diag_inv_a = 1.0 / self.A.diagonal()
        self.diag_inv_m = 1.0 / self.M.diagonal()
        self.norm_a = float(np.max(np.abs(self.A).sum(axis=1)))
        self.norm_m = float(np.max(np.abs(self.M).sum(axis=1)))

    def restore(self, vecs):
        """Permute solver-space vectors (columns) back to mesh dof order."""
        out = np.empty_like(vecs)
        out[self.perm] = vecs
        return out

    def project_m(self, v):
        """M-orthogonal projection against constants (vector or columns)."""
        if v.ndim == 1:
            return v - self.ones * (float(self.m_ones @ v) / self.ones_m_ones)
        return v - self.ones[:, None] * (self.m_ones @ v)[None, :] / self.ones_m_ones

    def _project_e(self, v):
        if v.ndim == 1:
            return v - self.ones * (float(np.sum(v)) / self.n)
        return v - self.ones[:, None] * np.sum(v, axis=0)[None, :] / self.n

    def solve_a(self, b, tol=CG_TOL):
        x = _pcg(
            self.A,
            b,
            self.diag_inv_a,
            self.norm_a,
            tol=tol,
            project=self._project_e,
            label="stiffness CG",
        )
        return self.project_m(x)

    def solve_m(self, b):
        return _pcg(self.M, b, self.diag_inv_m, self.norm_m, label="mass CG")

    def apply_inverse(self, x, q):
        """(A^{-1} M)^q with deflation after every solve; block-friendly."""
        for _ in range(q):
            x = self.solve_a(self.M @ x)
        return x

    def apply_forward(self, x, q):
        """K_q x = A (M^{-1} A)^(q-1) x."""
        w = self.A @ x
        for _ in range(q - 1):
            w = self.A @ self.solve_m(w)
        return w

    def apply_half(self, x, half):
        """(M^{-1} A)^half x; the symmetric factor of K_(2*half)."""
        for _ in range(half):
            x = self.solve_m(self.A @ x)
        return x

    def m_norm(self, v):
        return math.sqrt(max(float(v @ (self.M @ v)), 0.0))

    def minv_norm(self, r):
        return math.sqrt(max(float(r @ self.solve_m(r)), 0.0))


def _m_orthonormalize(pen: _Pencil, block, basis, rng_pool):
    """M-orthonormalize `block` against `basis` and itself.

    Deficient columns (Lanczos breakdown) are replaced from the
    deterministic random pool and re-orthogonalized.
    """
    cols = []
    for k in range(block.shape[1]):
        v = block[:, k]
        for _ in range(3):
            for b in basis:
                v = v - b @ (b.T @ (pen.M @ v))
            for u in cols:
                v = v - u * float(u @ (pen.M @ v))
            v = pen.project_m(v)
            nrm = pen.m_norm(v)
            if nrm > 1e-10:
                break
            v = pen.project_m(next(rng_pool))
        nrm = pen.m_norm(v)
        if nrm <= 1e-12:
            continue
        cols.append(v / nrm)
    if not cols:
        return np.empty((block.shape[0], 0))
    return np.stack(cols, axis=1)


def _rng_vector_pool(n):
    """Deterministic start/restart vectors: one fixed-seed draw per request."""
    seed = _SEED_SEQUENCE
    while True:
        rng = np.random.Generator(np.random.PCG64(seed))
        yield rng.standard_normal(n)
        seed += 1


def _lowest_pencil_eigs(op: OperatorPair, count: int, q: int):
    """Smallest `count` nonzero eigenvalues of K_q v = theta M v.

    The subspace comes from block Lanczos on (A^{-1}M)^q, i.e. inverse
    iteration by q nested deflated A-solves per vector.  The discrete
    operator is exactly the q-fold composition of the (A, M) pencil, so
    its eigenvectors coincide with the pencil eigenvectors; extraction is
    therefore Rayleigh-Ritz on (A, M), and theta is evaluated at the
    extracted vectors through the exact symmetric splitting

        v^T K_q v = ||(M^{-1}A)^(q/2) v||_M^2          (q even)

    whose roundoff floor is eps * lambda_max^(q/2) instead of the
    eps * lambda_max^q of a naive forward application.  The per-pair
    residual certifies the factored problem at mu = theta^(1/q):
    ||A v - mu M v|| in the M^{-1} norm, which bounds the relative theta
    error at q times the relative mu error without the lambda_max^(q-1)
    amplification a raw K-residual would suffer in double precision.
    """
    pen = _Pencil(op)
    if count < 1:
        raise ValueError("count must be >= 1")
    if count + 2 >= op.dimension:
        raise ValueError("mesh too small for requested eigenvalue count")
    if op.dimension <= _DENSE_LIMIT:
        return _dense_pencil_eigs(op, pen, count, q)
    pool = _rng_vector_pool(op.dimension)
    block_size = count + 1

    first = np.stack([next(pool) for _ in range(block_size)], axis=1)
    block = _m_orthonormalize(pen, first, [], pool)
    basis = [block]
    a_blocks = [pen.A @ block]

    max_blocks = max(12, 72 // block_size)
    max_cols = op.dimension - 2  # complement of constants, minus slack
    theta = vecs = resid = None
    for step in range(max_blocks):
        if sum(blk.shape[1] for blk in basis) + block_size > max_cols:
            break
        new = pen.apply_inverse(basis[-1], q)
        new = _m_orthonormalize(pen, new, basis, pool)
        if new.shape[1] == 0:
            break
        basis.append(new)
        a_blocks.append(pen.A @ new)
        if step < 1:
            continue
        v_mat = np.concatenate(basis, axis=1)
        s = v_mat.T @ np.concatenate(a_blocks, axis=1)
        s = 0.5 * (s + s.T)
        g = v_mat.T @ (pen.M @ v_mat)
        g = 0.5 * (g + g.T)
        mu_all, y = _projected_eigh(s, g)
        mus = mu_all[:count]
        vecs = v_mat @ y[:, :count]
        for i in range(count):
            vecs[:, i] /= pen.m_norm(vecs[:, i])
        mus, vecs, resid = _polish_pairs(pen, vecs, mus)
        if np.all(resid <= RESIDUAL_TOL * np.maximum(1.0, mus)):
            theta = _quadratic_values(pen, vecs, q)
            return theta, pen.restore(vecs), resid
    if vecs is None:
        raise SolverError("eigensolver made no progress")
    raise SolverError(
        f"eigensolver residuals {resid} above tolerance after "
        f"{len(basis)} blocks (pencil values {mus})"
    )


def _polish_pairs(pen: _Pencil, vecs, mus, max_sweeps=4):
    """Inverse-iteration refinement of converged-ish Ritz vectors.

    Inexact inner solves leave the Lanczos subspace with a residual floor
    near cg_tol * cond(A); a few inverse-iteration sweeps with solves at
    the machine-precision backward-error floor push the pairs to the
    1e-9 contract on fine meshes.  Laplacian-level refinement is enough
    for every operator power because the mixed operators share the
    pencil's eigenvectors exactly.
    """
    count = vecs.shape[1]
    resid = np.empty(count)
    for i in range(count):
        r = pen.A @ vecs[:, i] - mus[i] * (pen.M @ vecs[:, i])
        resid[i] = pen.minv_norm(r)
    for _ in range(max_sweeps):
        if np.all(resid <= RESIDUAL_TOL * np.maximum(1.0, mus)):
            break
        if np.any(resid > 1e3 * RESIDUAL_TOL * np.maximum(1.0, mus)):
            break  # not close enough; let the outer Lanczos keep working
        w = pen.solve_a(pen.M @ vecs, tol=1e-15)
        for i in range(count):
            nrm = pen.m_norm(w[:, i])
            if nrm == 0.0:
                return mus, vecs, resid
            w[:, i] /= nrm
        s = w.T @ (pen.A @ w)
        g = w.T @ (pen.M @ w)
        mu_new, y = scipy.linalg.eigh(0.5 * (s + s.T), 0.5 * (g + g.T))
        vecs = w @ y
        mus = mu_new
        for i in range(count):
            vecs[:, i] /= pen.m_norm(vecs[:, i])
            r = pen.A @ vecs[:, i] - mus[i] * (pen.M @ vecs[:, i])
            resid[i] = pen.minv_norm(r)
    return mus, vecs, resid


_DENSE_LIMIT = 1200


def _dense_pencil_eigs(op: OperatorPair, pen: _Pencil, count: int, q: int):
    """Direct dense solve for small operator pairs.

    Bulletproof where deep operator powers make the Krylov basis
    numerically collinear; also faster than iteration at this size.
    """
    vals, vecs_all = scipy.linalg.eigh(op.A.toarray(), op.M.toarray())
    # the zero constant mode leads; everything after is the Neumann ladder
    mus = vals[1 : count + 1]
    vecs = np.empty((op.dimension, count))
    resid = np.empty(count)
    for i in range(count):
        v = vecs_all[:, 1 + i]
        v = v - np.ones(op.dimension) * (
            float((op.M @ np.ones(op.dimension)) @ v) / pen.ones_m_ones
        )
        v_hat = v[pen.perm]
        v_hat /= pen.m_norm(v_hat)
        r = pen.A @ v_hat - mus[i] * (pen.M @ v_hat)
        resid[i] = pen.minv_norm(r)
        vecs[:, i] = pen.restore(v_hat)
    theta = _quadratic_values_mesh_order(pen, vecs, q)
    return theta, vecs, resid


def _quadratic_values_mesh_order(pen: _Pencil, vecs, q):
    hat = vecs[pen.perm]
    return _quadratic_values(pen, hat, q)


def _projected_eigh(s, g):
    """Generalized symmetric eigensolve robust to a numerically singular Gram.

    A nearly exhausted Krylov basis can leave G = V^T M V indefinite at
    roundoff level; in that case the pencil is solved on G's well-
    conditioned invariant subspace.
    """
    try:
        return scipy.linalg.eigh(s, g)
    except scipy.linalg.LinAlgError:
        w, u = scipy.linalg.eigh(g)
        keep = w > 1e-10 * w.max()
        u = u[:, keep] / np.sqrt(w[keep])[None, :]
        s2 = u.T @ s @ u
        vals, y = scipy.linalg.eigh(0.5 * (s2 + s2.T))
        return vals, u @ y


def _quadratic_values(pen: _Pencil, vecs, q):
    """K_q Rayleigh quotients of M-normalized vectors via symmetric splitting."""
    out = np.empty(vecs.shape[1])
    for i in range(vecs.shape[1]):
        v = vecs[:, i]
        if q == 1:
            out[i] = float(v @ (pen.A @ v))
        elif q % 2 == 0:
            w = pen.apply_half(v, q // 2)
            out[i] = float(w @ (pen.M @ w))
        else:
            w = pen.apply_half(v, (q - 1) // 2)
            out[i] = float(w @ (pen.A @ w))
    return out


def eig_neumann_laplacian(mesh: Mesh, count: int, order: int = 2) -> EigResult:
    """Smallest `count` nonzero Neumann eigenvalues of the Laplacian."""
    op = assemble(mesh, order)
    values, vectors, residuals = _lowest_pencil_eigs(op, count, q=1)
    return EigResult(
        values=values, vectors=vectors, residuals=residuals, power=0, mesh_h=mesh.h
    )


def eig_polyharmonic_neumann(mesh: Mesh, count: int, m: int, order: int = 2) -> EigResult:
    """Smallest `count` nonzero Neumann eigenvalues of Delta^(2m).

    The operator K = A (M^{-1} A)^(2m-1) is applied matrix-free; inverse
    iteration uses 2m nested deflated A-solves.  Conditioning grows
    rapidly with m; m >= 3 emits a warning in the result residuals check.
    """
    if not (1 <= m <= 4):
        raise ValueError("operator power m must be in 1..4")
    op = assemble(mesh, order)
    if m >= 3:
        import warnings

        warnings.warn(
            f"Delta^{2 * m} spectra are severely ill-conditioned at fine meshes",
            RuntimeWarning,
            stacklevel=2,
        )
    values, vectors, residuals = _lowest_pencil_eigs(op, count, q=2 * m)
    return EigResult(
        values=values, vectors=vectors, residuals=residuals, power=m, mesh_h=mesh.h
    )


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceStudy:
    """Eigenvalue estimates over a mesh family with Richardson extrapolation.

    extrapolated is None when the value sequence is not monotone (the raw
    values are still reported); error_bar = |extrapolated - finest| or the
    last increment when extrapolation is withheld.
    """

    h_list: tuple
    values: tuple
    observed_order: float | None
    extrapolated: float | None
    error_bar: float
    monotone: bool
    power: int

    @property
    def best(self) -> float:
        return self.extrapolated if self.extrapolated is not None else self.values[-1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "h": list(self.h_list),
                "values": list(self.values),
                "observed_order": self.observed_order,
                "extrapolated": self.extrapolated,
                "error_bar": self.error_bar,
                "monotone": self.monotone,
                "m": self.power,
            },
            sort_keys=True,
            indent=2,
        )


def convergence_study(d: Domain, m: int, h_list, count: int = 1, order: int = 2,
                      workers: int = 1) -> ConvergenceStudy:
    """Run the eigensolver over a descending mesh family and extrapolate.

    m = 0 studies the Laplacian; m >= 1 the operator Delta^(2m).  The
    lowest eigenvalue estimate per mesh enters a least-squares fit of the
    convergence order, and one Richardson step gives the extrapolated
    limit with error bar |extrapolated - finest|.  workers > 1 solves the
    mesh family concurrently; per-mesh results are identical to serial.
    """
    h_list = tuple(float(h) for h in h_list)
    if len(h_list) < 3:
        raise ValueError("need at least 3 mesh sizes")
    if any(h_list[i] <= h_list[i + 1] for i in range(len(h_list) - 1)):
        raise ValueError("mesh sizes must be strictly descending")

    def run_one(h: float) -> float:
        mesh = cached_mesh(d, h)
        if m == 0:
            res = eig_neumann_laplacian(mesh, count, order)
        else:
            res = eig_polyharmonic_neumann(mesh, count, m, order)
        return float(res.values[0])

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        # meshes are built serially first: the cache is not locked
        for h in h_list:
            cached_mesh(d, h)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = tuple(pool.map(run_one, h_list))
    else:
        values = tuple(run_one(h) for h in h_list)

    diffs = [values[i] - values[i + 1] for i in range(len(values) - 1)]
    monotone = all(d > 0 for d in diffs) or all(d < 0 for d in diffs)
    if not monotone:
        return ConvergenceStudy(
            h_list=h_list,
            values=values,
            observed_order=None,
            extrapolated=None,
            error_bar=abs(diffs[-1]),
            monotone=False,
            power=m,
        )
    # least-squares slope of log|v_i - v_finest-ish| against log h using
    # consecutive increments, which avoids assuming the limit
    ratios = []
    for i in range(len(values) - 2):
        num = diffs[i]
        den = diffs[i + 1]
        if den != 0 and num / den > 0:
            ratios.append(math.log(num / den) / math.log(h_list[i] / h_list[i + 1]))
    observed = float(np.mean(ratios)) if ratios else None
    p = observed if observed and observed > 0.5 else 2.0
    r = (h_list[-2] / h_list[-1]) ** p
    extrapolated = values[-1] + (values[-1] - values[-2]) / (r - 1.0)
    return ConvergenceStudy(
        h_list=h_list,
        values=values,
        observed_order=observed,
        extrapolated=extrapolated,
        error_bar=abs(extrapolated - values[-1]),
        monotone=True,
        power=m,
    )
