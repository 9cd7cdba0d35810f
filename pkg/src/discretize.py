# src/discretize.py

"""
src/discretize.py

Discretization module for the damped-wave resolvent laboratory.
Builds the periodic grid with its A-weighted quadrature and the angular-mode
operators h²Δ_n + i h a (damped), h²Δ_n + i W (absorbing) and
h²Δ_n + i h √z a - z (modified) in symmetric flux form, so that the
w-weighted inner product makes the real part exactly self-adjoint.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
import scipy.sparse as sp

try:
    from .geometry import ProfileSet, WarpedSurface
except ImportError:
    from geometry import ProfileSet, WarpedSurface

logger = logging.getLogger(__name__)

MIN_GRID_POINTS = 64
OPERATOR_KINDS = ("free", "damped", "absorbing", "modified")


class InvalidResolutionError(ValueError):
    """Raised when a grid is too coarse."""


class BranchCutError(ValueError):
    """Raised when √z is requested across the principal branch cut."""


@dataclass(frozen=True)
class Grid1D:
    """
    Periodic grid over [-1, 1) with the A-weighted quadrature.

    Attributes:
        N (int): Number of points
        dx (float): Spacing period / N
        x (np.ndarray): Nodes x_j = -1 + j dx
        A (np.ndarray): Warp at the nodes
        A_half (np.ndarray): Warp at the midpoints x_j + dx/2
        weights (np.ndarray): w_j = A(x_j) dx
    """

    N: int
    dx: float
    x: np.ndarray
    A: np.ndarray
    A_half: np.ndarray
    weights: np.ndarray


def build_grid(surface: WarpedSurface, N: int) -> Grid1D:
    """
    Build the periodic grid of a surface.

    Args:
        surface (WarpedSurface): Surface supplying A
        N (int): Number of points (>= 64, power of two preferred)

    Returns:
        Grid1D: Grid with positive weights

    Raises:
        InvalidResolutionError: If N < 64
    """
    if N < MIN_GRID_POINTS:
        raise InvalidResolutionError(
            f"Počet bodů sítě musí být alespoň {MIN_GRID_POINTS}, zadáno: {N}"
        )

    dx = surface.period / N
    x = -1.0 + dx * np.arange(N)
    A = surface.A(x)
    A_half = surface.A(x + 0.5 * dx)
    return Grid1D(N=N, dx=dx, x=x, A=A, A_half=A_half, weights=A * dx)


def grid_size_for(
    h: float,
    points_per_h: float = 32.0,
    min_points: int = 256,
    max_points: int = 4096,
) -> int:
    """
    Resolution policy: N = max(min_points, next power of two >= points_per_h / h).

    Args:
        h (float): Semiclassical parameter
        points_per_h (float): Points per unit of 1/h
        min_points (int): Lower bound
        max_points (int): Upper bound

    Returns:
        int: Grid size
    """
    target = max(float(min_points), points_per_h / h)
    N = 2 ** int(math.ceil(math.log2(target)))
    return int(min(max(N, min_points), max_points))


def mode_stiffness(grid: Grid1D, n: int) -> sp.csr_matrix:
    """
    Symmetric stiffness matrix K with w_j (Δ_n f)_j = (K f)_j.

    (Δ_n f)_j = -(1/(A_j dx²))[A_{j+1/2}(f_{j+1}-f_j) - A_{j-1/2}(f_j-f_{j-1})]
                + (n²/A_j²) f_j

    Args:
        grid (Grid1D): Periodic grid
        n (int): Angular mode

    Returns:
        scipy.sparse.csr_matrix: Real symmetric N×N matrix
    """
    N, dx = grid.N, grid.dx
    idx = np.arange(N)
    right = np.roll(idx, -1)
    flux_right = grid.A_half / dx
    flux_left = np.roll(grid.A_half, 1) / dx

    diag = flux_right + flux_left + n**2 * dx / grid.A
    rows = np.concatenate([idx, idx, right])
    cols = np.concatenate([idx, right, idx])
    data = np.concatenate([diag, -flux_right, -flux_right])
    return sp.csr_matrix((data, (rows, cols)), shape=(N, N))


@dataclass(frozen=True)
class ModeOperator:
    """
    Discretized operator for angular mode n at semiclassical parameter h.

    Attributes:
        surface (WarpedSurface): Surface
        profiles (ProfileSet): Coefficients
        grid (Grid1D): Grid and weights
        h (float): Semiclassical parameter
        n (int): Angular mode
        kind (str): "free", "damped", "absorbing" or "modified"
        z (complex, optional): Spectral parameter built into the modified kind
        stiffness (scipy.sparse.csr_matrix): K, with Δ_n = diag(1/w) K
        skew (np.ndarray): Diagonal s with matrix = h²Δ_n + i·diag(s) - shift
        shift (complex): z for the modified kind, else 0
        matrix (scipy.sparse.csr_matrix): The operator matrix
    """

    surface: WarpedSurface
    profiles: Optional[ProfileSet]
    grid: Grid1D
    h: float
    n: int
    kind: str
    z: Optional[complex]
    stiffness: sp.csr_matrix
    skew: np.ndarray
    shift: complex
    matrix: sp.csr_matrix

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @property
    def laplacian(self) -> sp.csr_matrix:
        """Unscaled mode Laplacian Δ_n = diag(1/w) K."""
        return sp.diags(1.0 / self.grid.weights) @ self.stiffness

    def symmetrized(self, z: complex = 0.0) -> sp.csc_matrix:
        """
        Weighted symmetrization S = D^{1/2}(M - z)D^{-1/2}, D = diag(w).

        The Hermitian part is h² D^{-1/2} K D^{-1/2}; the skew part is
        i·diag(skew). Its singular values are those of M - z in the weighted
        norm.
        """
        inv_sqrt = 1.0 / np.sqrt(self.grid.weights)
        hermitian = sp.diags(inv_sqrt) @ self.stiffness @ sp.diags(inv_sqrt)
        diagonal = 1j * self.skew - self.shift - z
        S = self.h**2 * hermitian + sp.diags(diagonal)
        return sp.csc_matrix(S, dtype=complex)


def build_mode_operator(
    surface: WarpedSurface,
    profiles: Optional[ProfileSet],
    h: float,
    n: int,
    kind: str = "damped",
    z: Optional[complex] = None,
    N: Optional[int] = None,
    grid: Optional[Grid1D] = None,
) -> ModeOperator:
    """
    Build the mode operator of the requested family.

    matrix = h²Δ_n + i h diag(a)          (damped)
           = h²Δ_n + i diag(W)            (absorbing)
           = h²Δ_n + i h √z diag(a) - z   (modified, principal √z)
           = h²Δ_n                        (free)

    Args:
        surface (WarpedSurface): Surface
        profiles (ProfileSet, optional): Coefficients (not needed for "free")
        h (float): Semiclassical parameter in (0, 1]
        n (int): Angular mode (>= 0)
        kind (str): Operator family
        z (complex, optional): Spectral parameter for the modified kind
        N (int, optional): Grid size (resolution policy if omitted)
        grid (Grid1D, optional): Prebuilt grid shared across modes

    Returns:
        ModeOperator: The discretized operator

    Raises:
        ValueError: For invalid h, n or kind
        BranchCutError: For the modified kind with Re z <= 0
    """
    if not 0.0 < h <= 1.0:
        raise ValueError(f"Semiklasický parametr h musí ležet v (0, 1], zadáno: {h}")
    if n < 0:
        raise ValueError(f"Úhlový mód musí být nezáporný, zadáno: {n}")
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"Neznámý typ operátoru: {kind}")
    if kind != "free" and profiles is None:
        raise ValueError(f"Operátor typu {kind} vyžaduje profily koeficientů")

    if grid is None:
        grid = build_grid(surface, N if N is not None else grid_size_for(h))

    stiffness = mode_stiffness(grid, n)
    shift = 0.0 + 0.0j
    if kind == "free":
        skew = np.zeros(grid.N)
    elif kind == "damped":
        skew = h * profiles.a(grid.x)
    elif kind == "absorbing":
        skew = profiles.W(grid.x)
    else:
        if z is None or complex(z).real <= 0.0:
            raise BranchCutError(
                f"Modifikovaný operátor vyžaduje Re z > 0, zadáno: {z}"
            )
        z = complex(z)
        # complex for Im z != 0
        skew = h * np.sqrt(z) * profiles.a(grid.x)
        shift = z

    laplacian = sp.diags(1.0 / grid.weights) @ stiffness
    matrix = h**2 * laplacian + sp.diags(1j * skew - shift)
    logger.debug("Mode operator kind=%s h=%.5g n=%d N=%d", kind, h, n, grid.N)
    return ModeOperator(
        surface=surface,
        profiles=profiles,
        grid=grid,
        h=h,
        n=n,
        kind=kind,
        z=z,
        stiffness=stiffness,
        skew=np.asarray(skew),
        shift=shift,
        matrix=sp.csr_matrix(matrix, dtype=complex),
    )


def weighted_inner(u: np.ndarray, v: np.ndarray, grid: Grid1D) -> complex:
    """
    Weighted pairing <u, v> = Σ w_j u_j conj(v_j).

    Raises:
        ValueError: If the lengths differ from each other or from the grid
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.shape[0] != grid.N:
        raise ValueError(
            f"Nesouhlasí délky vektorů: {u.shape}, {v.shape}, síť {grid.N}"
        )
    return complex(np.sum(grid.weights * u * np.conj(v)))


def weighted_norm(u: np.ndarray, grid: Grid1D) -> float:
    """Weighted norm sqrt(<u, u>)."""
    return math.sqrt(max(weighted_inner(u, u, grid).real, 0.0))


def stationary_identity_residual(op: ModeOperator, u: np.ndarray, z: complex) -> float:
    """
    Residual of Im<(P - z)u, u> = h<au, u> - (Im z)||u||² for the damped kind.

    Args:
        op (ModeOperator): Damped mode operator
        u (np.ndarray): Test vector
        z (complex): Spectral parameter

    Returns:
        float: |Im<(P - z)u, u> - h<au, u> + (Im z)||u||²| / (||u||² + tiny)
    """
    if op.kind != "damped":
        raise ValueError("Identita platí pro tlumený operátor (kind=damped)")
    grid = op.grid
    u = np.asarray(u, dtype=complex)
    Pu = op.matrix @ u - z * u
    lhs = weighted_inner(Pu, u, grid).imag
    a = op.profiles.a(grid.x)
    damping = op.h * weighted_inner(a * u, u, grid).real
    norm2 = weighted_inner(u, u, grid).real
    return abs(lhs - damping + complex(z).imag * norm2) / (norm2 + 1e-300)


def operator_triplets(op: ModeOperator) -> pd.DataFrame:
    """
    Triplet list (row, col, re, im) of the operator matrix.

    Returns:
        pandas.DataFrame: One row per stored nonzero, sorted by (row, col)
    """
    coo = op.matrix.tocoo()
    table = pd.DataFrame(
        {"row": coo.row, "col": coo.col, "re": coo.data.real, "im": coo.data.imag}
    )
    return table.sort_values(["row", "col"]).reset_index(drop=True)
