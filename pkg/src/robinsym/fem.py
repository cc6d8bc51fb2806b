"""P1 finite elements for the Robin-Poisson problem and the principal eigenpair.

The boundary term beta * integral(u v) over the boundary uses exact edge-mass
blocks L/6 [[2,1],[1,2]]; no lumping, so the compatibility identity
beta * boundary_integral(u) = volume_integral(f) holds to solver tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from .meshing import Mesh


class SolverError(RuntimeError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


class SourceError(ValueError):
    """Source term violates admissibility (nonnegative, not identically zero)."""


@dataclass
class SourceSpec:
    """Right-hand side: constant, callable f(x, y), nodal values, or a radial
    decreasing profile evaluated as f(|x - centroid|)."""

    kind: str                      # const | expr | nodal | radial
    value: float = 1.0
    fn: object = None
    values: np.ndarray | None = None
    centroid: tuple = (0.0, 0.0)
    label: str = ""

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "const":
            return np.full(x.shape, float(self.value))
        if self.kind == "expr":
            return np.asarray(self.fn(x, y), dtype=float)
        if self.kind == "radial":
            r = np.hypot(x - self.centroid[0], y - self.centroid[1])
            return np.asarray(self.fn(r), dtype=float)
        raise SourceError("nodal sources evaluate through their mesh")

    def nodal_values(self, mesh: Mesh):
        if self.kind == "nodal":
            v = np.asarray(self.values, dtype=float)
            if len(v) != mesh.num_nodes:
                raise SourceError("nodal source length does not match mesh")
            return v
        return self.evaluate(mesh.nodes[:, 0], mesh.nodes[:, 1])


def constant_source(c=1.0) -> SourceSpec:
    return SourceSpec(kind="const", value=c, label=f"const {c:g}")


def _check_admissible(vals):
    if np.any(vals < -1e-14):
        raise SourceError("source must be nonnegative")
    if not np.any(vals > 0):
        raise SourceError("source must not be identically zero")
    if not np.all(np.isfinite(vals)):
        raise SourceError("source must be square-integrable (finite values)")


@dataclass
class ScalarField:
    """Nodal values of a piecewise-linear function on a mesh."""

    mesh: Mesh
    values: np.ndarray

    @property
    def u_min(self) -> float:
        return float(self.values.min())

    @property
    def u_max(self) -> float:
        return float(self.values.max())


@dataclass
class SparseSystem:
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    mesh: Mesh
    beta: float


def _p1_geometry(mesh: Mesh):
    p = mesh.nodes[mesh.triangles]
    b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
    c = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    return p, b, c, area


def stiffness_matrix(mesh: Mesh) -> sparse.csr_matrix:
    _, b, c, area = _p1_geometry(mesh)
    t = mesh.triangles
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(t[:, i])
            cols.append(t[:, j])
            vals.append((b[:, i] * b[:, j] + c[:, i] * c[:, j]) / (4.0 * area))
    n = mesh.num_nodes
    A = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
    return A.tocsr()


def boundary_mass_matrix(mesh: Mesh) -> sparse.csr_matrix:
    e = mesh.boundary_edges
    length = mesh.boundary_lengths()
    rows, cols, vals = [], [], []
    for i in range(2):
        for j in range(2):
            rows.append(e[:, i])
            cols.append(e[:, j])
            vals.append(length * (2.0 if i == j else 1.0) / 6.0)
    n = mesh.num_nodes
    B = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
    return B.tocsr()


def mass_matrix(mesh: Mesh) -> sparse.csr_matrix:
    _, _, _, area = _p1_geometry(mesh)
    t = mesh.triangles
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(t[:, i])
            cols.append(t[:, j])
            vals.append(area * (2.0 if i == j else 1.0) / 12.0)
    n = mesh.num_nodes
    M = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
    return M.tocsr()


def load_vector(mesh: Mesh, f: SourceSpec) -> np.ndarray:
    """Load by 3-point (edge midpoint) quadrature, exact for quadratics."""
    if f.kind == "nodal":
        fn = f.nodal_values(mesh)
        fm = 0.5 * (fn[mesh.triangles][:, [0, 1, 2]] + fn[mesh.triangles][:, [1, 2, 0]])
    else:
        p = mesh.nodes[mesh.triangles]
        mids = 0.5 * (p + np.roll(p, -1, axis=1))  # midpoints of edges 01, 12, 20
        fm = f.evaluate(mids[..., 0], mids[..., 1])
    _check_admissible(fm)
    _, _, _, area = _p1_geometry(mesh)
    # basis function i is 1/2 on the two edges touching vertex i, 0 opposite
    contrib = np.empty_like(fm)
    contrib[:, 0] = fm[:, 0] + fm[:, 2]
    contrib[:, 1] = fm[:, 0] + fm[:, 1]
    contrib[:, 2] = fm[:, 1] + fm[:, 2]
    contrib *= (area / 6.0)[:, None]
    load = np.zeros(mesh.num_nodes)
    np.add.at(load, mesh.triangles.ravel(), contrib.ravel())
    return load


def assemble_robin_system(mesh: Mesh, f: SourceSpec, beta: float) -> SparseSystem:
    if beta <= 0:
        raise ValueError("beta must be positive")
    A = stiffness_matrix(mesh) + beta * boundary_mass_matrix(mesh)
    rhs = load_vector(mesh, f)
    return SparseSystem(matrix=A.tocsr(), rhs=rhs, mesh=mesh, beta=beta)


def _jacobi(A):
    d = A.diagonal()
    inv = np.where(d > 0, 1.0 / np.maximum(d, 1e-300), 1.0)
    return sparse.diags(inv)


def _cg_solve(A, b, rtol=1e-12, maxiter=None, x0=None):
    x, info = cg(A, b, x0=x0, rtol=rtol, atol=0.0, M=_jacobi(A),
                 maxiter=maxiter or max(2000, 20 * A.shape[0]))
    return x, info


def solve_poisson(system: SparseSystem, rtol=1e-12) -> ScalarField:
    """Jacobi-preconditioned CG; guarantees relative residual <= 1e-10."""
    A, b = system.matrix, system.rhs
    bnorm = float(np.linalg.norm(b))
    x, _ = _cg_solve(A, b, rtol=rtol)
    hist = [float(np.linalg.norm(b - A @ x)) / bnorm]
    for tighter in (rtol * 1e-1, rtol * 1e-2):
        if hist[-1] <= 1e-10:
            break
        x, _ = _cg_solve(A, b, rtol=tighter, x0=x)
        hist.append(float(np.linalg.norm(b - A @ x)) / bnorm)
    if hist[-1] > 1e-10:
        raise SolverError(f"CG stalled at relative residual {hist[-1]:.3e}", hist)
    return ScalarField(mesh=system.mesh, values=x)


def solve_robin_poisson(mesh: Mesh, f: SourceSpec, beta: float) -> ScalarField:
    return solve_poisson(assemble_robin_system(mesh, f, beta))


def principal_robin_eigenpair(mesh: Mesh, beta: float, tol=1e-10, maxiter=200):
    """Smallest eigenvalue of (K + beta B) w = lambda M w by inverse power
    iteration with CG inner solves; eigenfunction has unit L2 norm, positive."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    A = (stiffness_matrix(mesh) + beta * boundary_mass_matrix(mesh)).tocsr()
    M = mass_matrix(mesh)
    w = np.ones(mesh.num_nodes)
    w /= math.sqrt(w @ (M @ w))
    lam = float(w @ (A @ w))
    for _ in range(maxiter):
        z, info = _cg_solve(A, M @ w, rtol=1e-13)
        nz = math.sqrt(z @ (M @ z))
        if nz == 0:
            raise SolverError("inverse iteration produced the zero vector")
        w = z / nz
        lam_new = float(w @ (A @ w)) / float(w @ (M @ w))
        if abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise SolverError(f"eigen iteration cap {maxiter} exceeded")
    if w.sum() < 0:
        w = -w
    w /= math.sqrt(w @ (M @ w))
    return lam, ScalarField(mesh=mesh, values=w)


# ---------------------------------------------------------------------------
# integration

# 7-point Radon rule, degree 5, barycentric coordinates and weights
_RADON_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [0.059715871789770, 0.470142064105115, 0.470142064105115],
    [0.470142064105115, 0.059715871789770, 0.470142064105115],
    [0.470142064105115, 0.470142064105115, 0.059715871789770],
    [0.797426985353087, 0.101286507323456, 0.101286507323456],
    [0.101286507323456, 0.797426985353087, 0.101286507323456],
    [0.101286507323456, 0.101286507323456, 0.797426985353087],
])
_RADON_W = np.array([0.225, 0.132394152788506, 0.132394152788506, 0.132394152788506,
                     0.125939180544827, 0.125939180544827, 0.125939180544827])


def field_integral(u: ScalarField) -> float:
    """Exact integral of the piecewise-linear interpolant."""
    _, _, _, area = _p1_geometry(u.mesh)
    return float(np.sum(area * u.values[u.mesh.triangles].mean(axis=1)))


def field_integral_pow(u: ScalarField, p: float) -> float:
    """Integral of |u|^p; exact for p = 1, 2 on one-signed fields, 7-point
    quadrature (degree 5) otherwise."""
    _, _, _, area = _p1_geometry(u.mesh)
    v = u.values[u.mesh.triangles]
    if p == 1.0 and (u.values >= 0).all():
        return float(np.sum(area * v.mean(axis=1)))
    if p == 2.0:
        s = v.sum(axis=1)
        return float(np.sum(area / 12.0 * (s * s + (v * v).sum(axis=1))))
    vals = np.abs(v @ _RADON_BARY.T) ** p
    return float(np.sum(area * (vals @ _RADON_W)))


def boundary_integral(u: ScalarField) -> float:
    """Exact boundary integral of the trace (edge trapezoid = exact for P1)."""
    e = u.mesh.boundary_edges
    length = u.mesh.boundary_lengths()
    return float(np.sum(length * 0.5 * (u.values[e[:, 0]] + u.values[e[:, 1]])))


def integrate_field(u: ScalarField, mode: str = "l1", p: float | None = None) -> float:
    """Dispatch: 'l1'/'l2'/'lp' integrate |u|^p over the domain (returning the
    integral, not the norm); 'boundary_l1' integrates |u| over the boundary."""
    if mode == "l1":
        return field_integral_pow(u, 1.0)
    if mode == "l2":
        return field_integral_pow(u, 2.0)
    if mode == "lp":
        if p is None or p < 1:
            raise ValueError("lp mode needs p >= 1")
        return field_integral_pow(u, float(p))
    if mode == "boundary_l1":
        return boundary_integral(ScalarField(u.mesh, np.abs(u.values)))
    raise ValueError(f"unknown mode {mode!r}")


def nodal_source_field(mesh: Mesh, f: SourceSpec) -> ScalarField:
    """Interpolate a source onto the mesh (used to rearrange f)."""
    vals = f.nodal_values(mesh)
    _check_admissible(vals)
    return ScalarField(mesh=mesh, values=np.maximum(vals, 0.0))
