"""Spatial/temporal grids, discrete PDE operators, and analytic eigen-oracles.

The domain is the unit square with homogeneous Dirichlet boundaries on all
sides.  Interior dofs are numbered lexicographically with the x1 index
running fastest: dof k sits at ((i+1)h, (j+1)h) with i = k % n_side,
j = k // n_side.  The mass matrix is lumped to the scalar M_scale = h^d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidConfigError


@dataclass(frozen=True)
class Grid:
    """Uniform interior lattice of the unit square."""

    n_side: int
    h: float
    d: int = 2

    @property
    def n_x(self) -> int:
        return self.n_side**2

    @property
    def m_scale(self) -> float:
        """Lumped mass coefficient h^d."""
        return self.h**self.d

    def ij_to_dof(self, i: int, j: int) -> int:
        return j * self.n_side + i

    def dof_to_ij(self, k: int) -> tuple[int, int]:
        return k % self.n_side, k // self.n_side

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(x1, x2) coordinates of every dof, each of length n_x."""
        pts = self.h * np.arange(1, self.n_side + 1)
        x2, x1 = np.meshgrid(pts, pts, indexing="ij")
        return x1.ravel(), x2.ravel()


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid for implicit Euler with n_t steps on (0, T]."""

    n_t: int
    tau: float
    T: float = 1.0


@dataclass(frozen=True)
class SpatialOperator:
    """Discrete diffusion(-convection) operator on a Grid.

    L approximates -Δ (heat) or -nu·Δ + wind·∇ (convection-diffusion) with
    zero Dirichlet data.  Immutable after assembly; safe for shared reads.
    """

    kind: str  # "heat" | "convdiff"
    grid: Grid
    L: sp.csr_matrix
    nu: float = 1.0
    wind: tuple[float, float] = (0.0, 0.0)

    @property
    def m_scale(self) -> float:
        return self.grid.m_scale


def build_grid(n_side: int) -> Grid:
    """Interior grid with mesh size h = 1/(n_side+1)."""
    if n_side < 2:
        raise InvalidConfigError(f"n_side must be >= 2, got {n_side}")
    return Grid(n_side=int(n_side), h=1.0 / (n_side + 1))


def build_time_grid(n_t: int, T: float = 1.0) -> TimeGrid:
    if n_t < 1 or T <= 0:
        raise InvalidConfigError(f"need n_t >= 1 and T > 0, got n_t={n_t}, T={T}")
    return TimeGrid(n_t=int(n_t), tau=T / n_t, T=T)


def _laplacian_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def _upwind_1d(n: int, h: float, w: float) -> sp.csr_matrix:
    """First-order upwind discretization of w·d/dx, zero Dirichlet."""
    if w == 0.0:
        return sp.csr_matrix((n, n))
    if w > 0:
        # w*(u_i - u_{i-1})/h
        return (w / h) * sp.diags([np.full(n - 1, -1.0), np.ones(n)], [-1, 0], format="csr")
    # w*(u_{i+1} - u_i)/h, rewritten so the diagonal stays positive
    return (-w / h) * sp.diags([np.ones(n), np.full(n - 1, -1.0)], [0, 1], format="csr")


def assemble_heat(grid: Grid) -> SpatialOperator:
    """5-point FD Laplacian, symmetric, diagonal entries 4/h²."""
    A1 = _laplacian_1d(grid.n_side, grid.h)
    eye = sp.identity(grid.n_side, format="csr")
    L = (sp.kron(eye, A1) + sp.kron(A1, eye)).tocsr()
    return SpatialOperator(kind="heat", grid=grid, L=L)


def assemble_convdiff(grid: Grid, nu: float, wind: tuple[float, float]) -> SpatialOperator:
    """nu·(5-point Laplacian) + first-order upwind wind·∇; nonsymmetric for wind ≠ 0."""
    if nu <= 0:
        raise InvalidConfigError(f"viscosity nu must be positive, got {nu}")
    n, h = grid.n_side, grid.h
    eye = sp.identity(n, format="csr")
    L = nu * (sp.kron(eye, _laplacian_1d(n, h)) + sp.kron(_laplacian_1d(n, h), eye))
    w1, w2 = float(wind[0]), float(wind[1])
    if w1 != 0.0:
        L = L + sp.kron(eye, _upwind_1d(n, h, w1))
    if w2 != 0.0:
        L = L + sp.kron(_upwind_1d(n, h, w2), eye)
    return SpatialOperator(kind="convdiff", grid=grid, L=L.tocsr(), nu=nu, wind=(w1, w2))


def analytic_poisson_eig(m: int, n: int, a: float = 1.0, b: float = 1.0) -> float:
    """Continuous Dirichlet-Laplacian eigenvalue π²[(m/a)² + (n/b)²] on [0,a]×[0,b]."""
    if m < 1 or n < 1 or a <= 0 or b <= 0:
        raise InvalidConfigError("need m,n >= 1 and a,b > 0")
    return np.pi**2 * ((m / a) ** 2 + (n / b) ** 2)


def discrete_fd_eig(m: int, n: int, grid: Grid) -> float:
    """Exact eigenvalue (4/h²)(sin²(mπh/2) + sin²(nπh/2)) of the FD Laplacian."""
    if not (1 <= m <= grid.n_side and 1 <= n <= grid.n_side):
        raise InvalidConfigError(
            f"mode indices must lie in [1, {grid.n_side}], got ({m}, {n})"
        )
    h = grid.h
    return (4.0 / h**2) * (np.sin(m * np.pi * h / 2) ** 2 + np.sin(n * np.pi * h / 2) ** 2)


def analytic_separable_eigvec(m: int, n: int, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Rank-1 factors (f1, f2) of the (m,n) FD Laplacian eigenvector.

    The dense eigenvector is f2 ⊗ f1 under the package dof ordering
    (x1 fastest); the pair is normalized so the full vector has unit norm.
    """
    if not (1 <= m <= grid.n_side and 1 <= n <= grid.n_side):
        raise InvalidConfigError(
            f"mode indices must lie in [1, {grid.n_side}], got ({m}, {n})"
        )
    pts = np.arange(1, grid.n_side + 1) * grid.h
    f1 = np.sin(m * np.pi * pts)
    f2 = np.sin(n * np.pi * pts)
    f1 /= np.linalg.norm(f1)
    f2 /= np.linalg.norm(f2)
    return f1, f2


def eigvec_dense(m: int, n: int, grid: Grid) -> np.ndarray:
    """Unit-norm dense FD Laplacian eigenvector for mode (m, n)."""
    f1, f2 = analytic_separable_eigvec(m, n, grid)
    return np.outer(f2, f1).ravel()


def export_coo(op: SpatialOperator, path) -> None:
    """Write the sparse operator as 'row col value' lines (0-based indices)."""
    coo = op.L.tocoo()
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")


def import_coo(path, n: int) -> sp.csr_matrix:
    """Read a matrix written by export_coo."""
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            i, j, v = line.split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
