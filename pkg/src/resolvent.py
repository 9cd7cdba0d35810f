# src/resolvent.py

"""
src/resolvent.py

Resolvent module for the damped-wave resolvent laboratory.
Computes weighted resolvent norms of the mode operators (1/σ_min of the
weighted symmetrization), their supremum over angular modes, cutoff resolvent
norms, log-log scaling fits of the loss factor α(h), and the checks that
transfer a complex-absorption bound to the damped operator: real-axis and
strip norms, spectrum-free strip widths and the empirical constants of the
control estimate chain.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs, eigsh, splu

try:
    from .discretize import (
        Grid1D,
        ModeOperator,
        build_grid,
        build_mode_operator,
        grid_size_for,
        weighted_norm,
    )
    from .geometry import Profile, ProfileSet, WarpedSurface, reduce_periodic
except ImportError:
    from discretize import (
        Grid1D,
        ModeOperator,
        build_grid,
        build_mode_operator,
        grid_size_for,
        weighted_norm,
    )
    from geometry import Profile, ProfileSet, WarpedSurface, reduce_periodic

logger = logging.getLogger(__name__)

NEAR_POLE_RATIO = 1e-14
TAIL_TOLERANCE = 1.05
C0_SWEEP = np.logspace(-3.0, 1.0, 20)


class InsufficientSamplesError(ValueError):
    """Raised when a scaling fit gets too few or too narrowly spread samples."""


class InvalidCutoffError(ValueError):
    """Raised when a cutoff meets the projected trapped set."""


class MissingFitError(ValueError):
    """Raised when a transfer check runs without a fitted α(h)."""


@dataclass
class ScanSettings:
    """
    Numerical settings shared by all resolvent scans.

    Attributes:
        points_per_h (float): Resolution policy, N ~ points_per_h / h
        min_points (int): Smallest grid
        max_points (int): Largest grid
        dense_limit (int): Largest N handled by dense SVD
        n_max_factor (float): n_max = ceil(n_max_factor * max A / h)
        subsample (int): Stride over angular modes
        delta (float): Half-width of the real window [1 - delta, 1 + delta]
        threads (int): Worker threads for independent mode tasks
        max_iterations (int): Restart budget of the iterative σ_min
    """

    points_per_h: float = 32.0
    min_points: int = 256
    max_points: int = 4096
    dense_limit: int = 1024
    n_max_factor: float = 2.0
    subsample: int = 1
    delta: float = 0.25
    threads: int = 1
    max_iterations: int = 200

    def grid_size(self, h: float) -> int:
        return grid_size_for(h, self.points_per_h, self.min_points, self.max_points)


@dataclass
class NormSample:
    """
    One resolvent norm evaluation.

    Attributes:
        h (float): Semiclassical parameter
        z (complex): Spectral parameter
        n (int): Angular mode
        norm (float): ||(operator - z)^{-1}|| in the weighted norm
        kind (str): Operator family
        cutoff (str): "none", "right" or "both"
        method (str): "dense" or "iterative"
        near_pole (bool): σ_min below NEAR_POLE_RATIO * ||M||
    """

    h: float
    z: complex
    n: int
    norm: float
    kind: str
    cutoff: str = "none"
    method: str = "dense"
    near_pole: bool = False

    def as_row(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "h": self.h,
            "re_z": complex(self.z).real,
            "im_z": complex(self.z).imag,
            "n": self.n,
            "norm": self.norm,
            "cutoff": self.cutoff,
        }


def _sparse_norm_estimate(S: sp.spmatrix) -> float:
    return float(np.max(np.abs(S).sum(axis=1)))


def smallest_singular_value(
    S: sp.spmatrix, method: str = "auto", dense_limit: int = 1024,
    max_iterations: int = 200,
) -> Tuple[float, str]:
    """
    Smallest singular value of a sparse square matrix.

    Dense SVD for N <= dense_limit; otherwise shift-invert Lanczos on
    (S*S)^{-1} = S^{-1}S^{-*} with a sparse LU factorization of S, falling
    back to dense SVD if the iteration does not converge.

    Args:
        S: Sparse matrix
        method (str): "auto", "dense" or "iterative"
        dense_limit (int): Switch size for "auto"
        max_iterations (int): Restart budget of the Lanczos iteration

    Returns:
        Tuple (sigma_min, method used)
    """
    N = S.shape[0]
    if method == "dense" or (method == "auto" and N <= dense_limit):
        dense = S.toarray() if sp.issparse(S) else np.asarray(S)
        return float(la.svdvals(dense).min()), "dense"

    try:
        lu = splu(sp.csc_matrix(S))
    except RuntimeError:
        # exactly singular factorization
        return 0.0, "iterative"

    def matvec(v):
        return lu.solve(lu.solve(np.asarray(v, dtype=complex).ravel(), trans="H"))

    inverse_gram = LinearOperator((N, N), matvec=matvec, dtype=complex)
    try:
        mu = eigsh(inverse_gram, k=1, which="LM", tol=1e-13,
                   maxiter=max_iterations, return_eigenvectors=False)
    except ArpackNoConvergence:
        logger.warning("Iterace σ_min nekonvergovala (N=%d), přechod na husté SVD", N)
        return float(la.svdvals(S.toarray()).min()), "dense"
    return 1.0 / math.sqrt(float(np.max(mu.real))), "iterative"


def resolvent_sample(
    op: ModeOperator, z: complex = 1.0, method: str = "auto",
    dense_limit: int = 1024, max_iterations: int = 200,
) -> NormSample:
    """
    Weighted resolvent norm of a mode operator as a NormSample.

    For the modified kind z is already built into the operator and the
    argument is ignored.
    """
    shift = 0.0 if op.kind == "modified" else z
    S = op.symmetrized(shift)
    sigma, used = smallest_singular_value(S, method, dense_limit, max_iterations)
    near_pole = sigma < NEAR_POLE_RATIO * _sparse_norm_estimate(S)
    if near_pole:
        logger.warning("Blízko pólu: h=%.5g n=%d z=%s σ_min=%.3e",
                       op.h, op.n, z, sigma)
    norm = math.inf if sigma == 0.0 else 1.0 / sigma
    return NormSample(
        h=op.h, z=op.z if op.kind == "modified" else complex(z), n=op.n,
        norm=norm, kind=op.kind, method=used, near_pole=near_pole,
    )


def resolvent_norm(
    op: ModeOperator, z: complex = 1.0, method: str = "auto", dense_limit: int = 1024
) -> float:
    """
    Operator norm of (M - z)^{-1} in the weighted space, 1/σ_min(S).

    Args:
        op (ModeOperator): Mode operator M
        z (complex): Spectral parameter (ignored for the modified kind)
        method (str): "auto", "dense" or "iterative"
        dense_limit (int): Dense/iterative switch size

    Returns:
        float: The norm (inf at an exact pole)
    """
    return resolvent_sample(op, z, method, dense_limit).norm


def _as_node_values(cutoff: Union[Profile, np.ndarray, float], grid: Grid1D) -> np.ndarray:
    if isinstance(cutoff, Profile):
        return np.asarray(cutoff(grid.x), dtype=float)
    values = np.asarray(cutoff, dtype=float)
    if values.ndim == 0:
        return np.full(grid.N, float(values))
    return values


def cutoff_resolvent_norm(
    op: ModeOperator,
    z: complex,
    side: str,
    cutoff: Union[Profile, np.ndarray, float],
    trapped_points: Optional[np.ndarray] = None,
    method: str = "auto",
    dense_limit: int = 1024,
) -> float:
    """
    Norm of R diag(chi) (side="right") or diag(chi) R diag(chi) (side="both").

    Args:
        op (ModeOperator): Mode operator
        z (complex): Spectral parameter
        side (str): "right" or "both"
        cutoff: Profile, node values, or a constant
        trapped_points (np.ndarray, optional): Projected trapped set; the
            cutoff must vanish there (skipped when None)
        method (str): "auto", "dense" or "iterative"
        dense_limit (int): Dense/iterative switch size

    Returns:
        float: The cutoff resolvent norm

    Raises:
        InvalidCutoffError: If the cutoff does not vanish on the trapped set
    """
    if side not in ("right", "both"):
        raise ValueError(f"Neznámá strana ořezu: {side}")

    c = _as_node_values(cutoff, op.grid)
    if trapped_points is not None and len(trapped_points) > 0:
        trapped_points = np.asarray(trapped_points, dtype=float)
        if isinstance(cutoff, Profile):
            on_trapped = cutoff(trapped_points)
        else:
            offsets = reduce_periodic(op.grid.x[:, None] - trapped_points[None, :])
            on_trapped = c[np.abs(offsets).argmin(axis=0)]
        if np.max(np.abs(on_trapped)) > 1e-12:
            raise InvalidCutoffError(
                "Ořezová funkce zasahuje do projekce zachycené množiny"
            )
    if not np.any(c):
        return 0.0

    shift = 0.0 if op.kind == "modified" else z
    S = op.symmetrized(shift)
    N = S.shape[0]
    if method == "dense" or (method == "auto" and N <= dense_limit):
        return _dense_cutoff_norm(S, c, side)

    lu = splu(sp.csc_matrix(S))
    left = c if side == "both" else np.ones(N)

    def matvec(v):
        v = np.asarray(v, dtype=complex).ravel()
        y = left * lu.solve(c * v)
        return c * lu.solve(left * y, trans="H")

    gram = LinearOperator((N, N), matvec=matvec, dtype=complex)
    try:
        mu = eigsh(gram, k=1, which="LA", tol=1e-12, return_eigenvectors=False)
    except ArpackNoConvergence:
        logger.warning("Iterace ořezané normy nekonvergovala (N=%d), přechod na husté řešení", N)
        return _dense_cutoff_norm(S, c, side)
    return math.sqrt(max(float(mu.real.max()), 0.0))


def _dense_cutoff_norm(S: sp.spmatrix, c: np.ndarray, side: str) -> float:
    N = S.shape[0]
    R = la.solve(S.toarray(), np.eye(N, dtype=complex))
    if side == "right":
        composed = R * c[None, :]
    else:
        composed = c[:, None] * R * c[None, :]
    return float(la.norm(composed, 2))


@dataclass
class ScalingFit:
    """
    Log-log fit of resolvent norms against h.

    Attributes:
        model (str): "power" (norm ≈ C h^exponent) or "log" (norm ≈ C |log h|/h)
        exponent (float): Fitted power exponent (slope in log-log)
        coefficient (float): C of the selected model
        residual (float): RMS residual of the selected model in log coordinates
        h_range (tuple): (min h, max h)
        residuals (dict): RMS residuals of both models
        coefficients (dict): C of both models
    """

    model: str
    exponent: float
    coefficient: float
    residual: float
    h_range: Tuple[float, float]
    residuals: Dict[str, float] = field(default_factory=dict)
    coefficients: Dict[str, float] = field(default_factory=dict)

    def alpha(self, h) -> np.ndarray:
        """
        Loss factor α(h) = h * predicted norm, floored at 1.
        """
        h = np.asarray(h, dtype=float)
        if self.model == "log":
            value = self.coefficients["log"] * np.abs(np.log(h))
        else:
            value = self.coefficients["power"] * h ** (self.exponent + 1.0)
        return np.maximum(value, 1.0)

    def as_dict(self) -> Dict[str, object]:
        return {
            "model": self.model,
            "exponent": self.exponent,
            "coefficient": self.coefficient,
            "residual": self.residual,
            "h_range": list(self.h_range),
            "residuals": dict(self.residuals),
            "coefficients": dict(self.coefficients),
        }


def fit_scaling(
    samples: Sequence[Tuple[float, float]], model: str = "power",
    min_samples: int = 5, min_span: float = 8.0,
) -> ScalingFit:
    """
    Fit norm(h) by a power law and by C|log h|/h in log-log coordinates.

    Args:
        samples: Pairs (h, norm)
        model (str): Model reported as selected, "power" or "log"
        min_samples (int): Minimum number of samples
        min_span (float): Minimum ratio max h / min h

    Returns:
        ScalingFit: Both models' residuals plus the selected model

    Raises:
        InsufficientSamplesError: If there are too few samples or the span is short
    """
    if model not in ("power", "log"):
        raise ValueError(f"Neznámý model škálování: {model}")
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[0] < min_samples:
        raise InsufficientSamplesError(
            f"Fit vyžaduje alespoň {min_samples} vzorků, zadáno: {len(samples)}"
        )
    h, norms = data[:, 0], data[:, 1]
    if h.max() / h.min() < min_span:
        raise InsufficientSamplesError(
            f"Rozsah h musí pokrývat alespoň faktor {min_span}, "
            f"zadáno: {h.max() / h.min():.3g}"
        )

    log_h = np.log(h)
    log_norm = np.log(norms)
    design = np.column_stack([log_h, np.ones_like(log_h)])
    (slope, intercept), *_ = np.linalg.lstsq(design, log_norm, rcond=None)
    power_residual = float(np.sqrt(np.mean((design @ [slope, intercept] - log_norm) ** 2)))

    residuals = {"power": power_residual}
    coefficients = {"power": float(math.exp(intercept))}
    if np.all(h < 1.0):
        template = np.log(np.abs(log_h)) - log_h
        log_c = float(np.mean(log_norm - template))
        residuals["log"] = float(np.sqrt(np.mean((template + log_c - log_norm) ** 2)))
        coefficients["log"] = math.exp(log_c)
    else:
        residuals["log"] = math.inf
        coefficients["log"] = math.nan
        if model == "log":
            raise InsufficientSamplesError("Logaritmický model vyžaduje h < 1")

    return ScalingFit(
        model=model,
        exponent=float(slope),
        coefficient=coefficients[model],
        residual=residuals[model],
        h_range=(float(h.min()), float(h.max())),
        residuals=residuals,
        coefficients=coefficients,
    )


def log_constant_ratio(samples: Sequence[Tuple[float, float]]) -> float:
    """
    Spread max/min of C(h) = norm * h / |log h| over the samples.

    A bounded ratio means the norms follow C|log h|/h with one constant.
    """
    data = np.asarray(samples, dtype=float)
    h, norms = data[:, 0], data[:, 1]
    if np.any(h >= 1.0):
        raise InsufficientSamplesError("Logaritmický model vyžaduje h < 1")
    constants = norms * h / np.abs(np.log(h))
    return float(constants.max() / constants.min())


def strip_constant(scans: Sequence["StripScan"]) -> float:
    """
    Common strip constant of a family of strip scans: the smallest threshold.
    """
    if not scans:
        raise InsufficientSamplesError("Konstanta pásu vyžaduje alespoň jeden sken")
    return float(min(s.threshold for s in scans))


@dataclass
class GlobalNorm:
    """
    Supremum over angular modes of the mode resolvent norms.

    Attributes:
        h (float): Semiclassical parameter
        z (complex): Spectral parameter
        kind (str): Operator family
        norm (float): max over scanned modes
        n_star (int): Maximizing mode
        modes (np.ndarray): Scanned modes
        mode_norms (np.ndarray): Norm per scanned mode
        band_edge (int): First mode of the elliptic tail
        truncation_suspect (bool): Tail not monotone within tolerance
        near_pole (bool): Some mode hit the near-pole threshold
        N (int): Grid size
    """

    h: float
    z: complex
    kind: str
    norm: float
    n_star: int
    modes: np.ndarray
    mode_norms: np.ndarray
    band_edge: int
    truncation_suspect: bool
    near_pole: bool
    N: int

    def samples(self) -> List[NormSample]:
        return [
            NormSample(h=self.h, z=self.z, n=int(n), norm=float(v), kind=self.kind)
            for n, v in zip(self.modes, self.mode_norms)
        ]


def band_edge_mode(surface: WarpedSurface, h: float, z: complex, margin: float = 0.25) -> int:
    """
    First angular mode whose potential (hn)²/A² exceeds Re z + margin everywhere.
    """
    return int(math.ceil(surface.max_warp * math.sqrt(max(complex(z).real, 0.0) + margin) / h))


def tail_is_monotone(mode_norms: np.ndarray, modes: np.ndarray, band_edge: int) -> bool:
    """Mode norms past the band edge are nonincreasing up to TAIL_TOLERANCE."""
    tail = mode_norms[modes >= band_edge]
    if len(tail) < 2:
        return True
    return bool(np.all(tail[1:] <= TAIL_TOLERANCE * tail[:-1]))


class ResolventScanner:
    """
    Resolvent scans over modes, spectral parameters and h for one geometry.

    Attributes:
        surface (WarpedSurface): Surface
        profiles (ProfileSet): Coefficients
        settings (ScanSettings): Numerical settings
    """

    def __init__(self, surface: WarpedSurface, profiles: ProfileSet,
                 settings: Optional[ScanSettings] = None):
        """
        Initialize the scanner.

        Args:
            surface (WarpedSurface): Surface
            profiles (ProfileSet): Coefficients
            settings (ScanSettings, optional): Numerical settings
        """
        self.surface = surface
        self.profiles = profiles
        self.settings = settings or ScanSettings()

    def _map(self, func, items):
        if self.settings.threads > 1:
            with ThreadPoolExecutor(max_workers=self.settings.threads) as pool:
                return list(pool.map(func, items))
        return [func(item) for item in items]

    def mode_range(self, h: float) -> np.ndarray:
        n_max = int(math.ceil(self.settings.n_max_factor * self.surface.max_warp / h))
        return np.arange(0, n_max + 1, max(1, self.settings.subsample))

    def grid_for(self, h: float, N: Optional[int] = None) -> Grid1D:
        return build_grid(self.surface, N if N is not None else self.settings.grid_size(h))

    def mode_sample(self, h: float, n: int, z: complex, kind: str,
                    grid: Optional[Grid1D] = None) -> NormSample:
        grid = grid or self.grid_for(h)
        op = build_mode_operator(self.surface, self.profiles, h, int(n), kind,
                                 z=z if kind == "modified" else None, grid=grid)
        return resolvent_sample(op, z, "auto", self.settings.dense_limit,
                                self.settings.max_iterations)

    def global_norm(self, h: float, z: complex = 1.0, kind: str = "damped",
                    N: Optional[int] = None, modes: Optional[np.ndarray] = None) -> GlobalNorm:
        """
        Supremum of the mode resolvent norms over n in [0, n_max].

        Args:
            h (float): Semiclassical parameter
            z (complex): Spectral parameter
            kind (str): Operator family
            N (int, optional): Grid size override
            modes (np.ndarray, optional): Explicit mode list

        Returns:
            GlobalNorm: Norm, maximizing mode and tail diagnostics
        """
        grid = self.grid_for(h, N)
        modes = self.mode_range(h) if modes is None else np.asarray(modes)
        samples = self._map(lambda n: self.mode_sample(h, n, z, kind, grid), modes)
        norms = np.array([s.norm for s in samples])

        edge = band_edge_mode(self.surface, h, z)
        monotone = tail_is_monotone(norms, modes, edge)
        if not monotone:
            logger.warning("Podezření na useknutí módů: h=%.5g z=%s (chvost není monotónní)",
                           h, z)
        best = int(np.argmax(norms))
        result = GlobalNorm(
            h=h, z=complex(z), kind=kind, norm=float(norms[best]),
            n_star=int(modes[best]), modes=modes, mode_norms=norms, band_edge=edge,
            truncation_suspect=not monotone,
            near_pole=any(s.near_pole for s in samples), N=grid.N,
        )
        logger.info("Globální norma kind=%s h=%.5g z=%s: %.6g (n*=%d, N=%d)",
                    kind, h, z, result.norm, result.n_star, grid.N)
        return result

    def scan(self, h_list: Sequence[float], z: complex = 1.0,
             kind: str = "damped") -> List[GlobalNorm]:
        """Global norms for every h in h_list."""
        return [self.global_norm(h, z, kind) for h in h_list]

    def fit(self, h_list: Sequence[float], z: complex = 1.0, kind: str = "absorbing",
            model: str = "power") -> Tuple[ScalingFit, List[GlobalNorm]]:
        """Scan h_list and fit the scaling law of the global norms."""
        results = self.scan(h_list, z, kind)
        return fit_scaling([(r.h, r.norm) for r in results], model), results

    def resolution_study(self, h: float, z: complex = 1.0, kind: str = "damped") -> Dict[str, float]:
        """
        Global norm at the policy grid N and at 2N.

        Returns:
            dict: N, norm_N, norm_2N and their relative change
        """
        N = self.settings.grid_size(h)
        coarse = self.global_norm(h, z, kind, N=N)
        fine = self.global_norm(h, z, kind, N=2 * N, modes=coarse.modes)
        change = abs(fine.norm - coarse.norm) / coarse.norm
        return {"h": h, "N": N, "norm_N": coarse.norm, "norm_2N": fine.norm,
                "relative_change": change}

    def cutoff_scan(self, h_list: Sequence[float], cutoff: Profile, side: str = "right",
                    z: complex = 1.0, kind: str = "absorbing",
                    trapped_points: Optional[np.ndarray] = None) -> List[NormSample]:
        """
        Supremum over modes of the cutoff resolvent norm for each h.
        """
        results = []
        for h in h_list:
            grid = self.grid_for(h)

            def one(n, h=h, grid=grid):
                op = build_mode_operator(self.surface, self.profiles, h, int(n), kind,
                                         grid=grid)
                return cutoff_resolvent_norm(op, z, side, cutoff, trapped_points,
                                             "auto", self.settings.dense_limit)

            modes = self.mode_range(h)
            values = np.array(self._map(one, modes))
            best = int(np.argmax(values))
            results.append(NormSample(h=h, z=complex(z), n=int(modes[best]),
                                      norm=float(values[best]), kind=kind, cutoff=side))
            logger.info("Ořezaná norma (%s) h=%.5g: %.6g", side, h, values[best])
        return results

    def verify_transfer(self, h_list: Sequence[float], absorbing_fit: Optional[ScalingFit],
                        c0: float = 0.1, n_real: int = 5,
                        constant_factor: float = 10.0) -> "TransferReport":
        """
        Compare the damped operator's norms with the absorbing-model bound α(h)/h.

        For each h the damped global norm is evaluated at n_real points of the
        real window and at 1 ± i c0 h/α(h); C(h) = damped norm * h / α(h).

        Args:
            h_list: Semiclassical parameters
            absorbing_fit (ScalingFit): Fitted α(h) of the absorbing model
            c0 (float): Strip constant
            n_real (int): Number of real spectral parameters
            constant_factor (float): Allowed max/min ratio of C(h)

        Returns:
            TransferReport: Per-h rows, damped fit and verdicts

        Raises:
            MissingFitError: If absorbing_fit is None
        """
        if absorbing_fit is None:
            raise MissingFitError("Chybí fit α(h) absorpčního modelu")

        delta = self.settings.delta
        rows = []
        for h in h_list:
            alpha = float(absorbing_fit.alpha(h))
            gamma = c0 * h / alpha
            real_points = np.linspace(1.0 - delta, 1.0 + delta, n_real)
            real_norms = [self.global_norm(h, z, "damped").norm for z in real_points]
            strip_norms = [self.global_norm(h, 1.0 + s * 1j * gamma, "damped").norm
                           for s in (-1.0, 1.0)]
            damped = max(real_norms + strip_norms)
            rows.append({
                "h": h,
                "alpha": alpha,
                "damped_norm": damped,
                "damped_norm_real": max(real_norms),
                "damped_norm_strip": max(strip_norms),
                "constant": damped * h / alpha,
                "weak_prediction": alpha**2 / h,
            })

        damped_fit = fit_scaling([(r["h"], r["damped_norm"]) for r in rows],
                                 absorbing_fit.model)
        constants = np.array([r["constant"] for r in rows])
        ratio = float(constants.max() / constants.min())
        report = TransferReport(
            rows=rows,
            absorbing_fit=absorbing_fit,
            damped_fit=damped_fit,
            exponent_gap=abs(damped_fit.exponent - absorbing_fit.exponent),
            constant_ratio=ratio,
            bounded=ratio <= constant_factor,
        )
        logger.info("Přenos: rozdíl exponentů %.4f, poměr konstant %.3f",
                    report.exponent_gap, ratio)
        return report

    def spectral_gap(self, h: float, alpha: float, n_shifts: int = 8,
                     k_start: int = 16) -> Dict[str, float]:
        """
        Smallest Im λ over damped eigenvalues with Re λ in the real window.

        Shift-invert eigensolves at n_shifts centers along the window; each
        solve is enlarged until the returned eigenvalues cover a disc of
        radius equal to the shift spacing. Modes past the band edge carry no
        spectrum in the window and are skipped.

        Returns:
            dict: gap (min Im λ), scaled_gap (gap * α/h), coverage height
        """
        delta = self.settings.delta
        spacing = 2.0 * delta / n_shifts
        centers = 1.0 - delta + spacing * (np.arange(n_shifts) + 0.5)
        height = math.sqrt(spacing**2 - (0.5 * spacing) ** 2)
        grid = self.grid_for(h)
        edge = band_edge_mode(self.surface, h, 1.0 + delta)
        modes = [n for n in self.mode_range(h) if n <= edge]

        def one(n):
            op = build_mode_operator(self.surface, self.profiles, h, int(n), "damped",
                                     grid=grid)
            S = op.symmetrized(0.0)
            N = S.shape[0]
            found = []
            if N <= 256:
                found = list(la.eigvals(S.toarray()))
            else:
                for center in centers:
                    k = k_start
                    while True:
                        if k >= N - 2:
                            found.extend(la.eigvals(S.toarray()))
                            break
                        values = eigs(S, k=k, sigma=center, which="LM",
                                      return_eigenvectors=False)
                        if np.max(np.abs(values - center)) >= spacing:
                            found.extend(values)
                            break
                        k *= 2
            found = np.asarray(found)
            window = found[np.abs(found.real - 1.0) <= delta]
            window = window[window.imag <= height]
            return float(window.imag.min()) if len(window) else height

        gaps = self._map(one, modes)
        gap = min(gaps) if gaps else height
        return {"h": h, "gap": gap, "scaled_gap": gap * alpha / h, "height": height}

    def strip_scan(self, h: float, alpha_fit: ScalingFit, c0: float, n_points: int = 5,
                   kind: str = "damped", sigma_floor: float = 1e-2) -> "StripScan":
        """
        Minimum of σ_min(P - z) α(h)/h over a rectangle grid in the strip.

        Damped kind: z in [1 - δ, 1 + δ] + i[-c0, c0] h/α(h); modified kind:
        z in [1 - c0/α, 1 + c0/α] + i[-c0, c0] h/α(h). The largest empty strip
        is found from the damped spectrum (spectral_gap) for the damped kind and
        by a monotone sweep over C0_SWEEP with the grid minimum for the
        modified kind.

        Args:
            h (float): Semiclassical parameter
            alpha_fit (ScalingFit): Fitted α(h)
            c0 (float): Strip constant
            n_points (int): Real-direction grid points
            kind (str): "damped" or "modified"
            sigma_floor (float): Scaled σ below which the strip counts as hit

        Returns:
            StripScan: Grid minimum, argmin and threshold
        """
        if kind not in ("damped", "modified"):
            raise ValueError(f"Pásový test podporuje typy damped a modified, zadáno: {kind}")
        alpha = float(alpha_fit.alpha(h))
        grid = self.grid_for(h)
        edge = band_edge_mode(self.surface, h, 1.0 + self.settings.delta)
        modes = [n for n in self.mode_range(h) if n <= edge]

        def grid_minimum(c):
            half_width = self.settings.delta if kind == "damped" else c / alpha
            re_points = np.linspace(1.0 - half_width, 1.0 + half_width, n_points)
            im_points = np.array([-c, 0.0, c]) * h / alpha
            best = (math.inf, None, None)
            for re in re_points:
                for im in im_points:
                    z = complex(re, im)
                    sigmas = self._map(
                        lambda n, z=z: 1.0 / self.mode_sample(h, n, z, kind, grid).norm,
                        modes,
                    )
                    k = int(np.argmin(sigmas))
                    if sigmas[k] < best[0]:
                        best = (float(sigmas[k]), z, int(modes[k]))
            return best

        sigma, z_min, n_min = grid_minimum(c0)
        scaled = sigma * alpha / h

        scaled_gap = math.nan
        if kind == "damped":
            gap = self.spectral_gap(h, alpha)
            limit = gap["scaled_gap"]
            scaled_gap = limit
            below = C0_SWEEP[C0_SWEEP < limit]
            threshold = float(below.max()) if len(below) else 0.0
        else:
            lo, hi = -1, len(C0_SWEEP)
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if grid_minimum(C0_SWEEP[mid])[0] * alpha / h >= sigma_floor:
                    lo = mid
                else:
                    hi = mid
            threshold = float(C0_SWEEP[lo]) if lo >= 0 else 0.0

        empty = scaled >= sigma_floor
        if not empty:
            logger.warning("Pás zasahuje spektrum: h=%.5g c0=%.3g σ·α/h=%.3e < %.3g",
                           h, c0, scaled, sigma_floor)
        return StripScan(h=h, c0=c0, kind=kind, alpha=alpha, min_scaled_sigma=scaled,
                         argmin_z=z_min, argmin_n=n_min, threshold=threshold,
                         empty=empty, scaled_gap=scaled_gap)

    def verify_control_chain(self, h: float, z: float, f_samples: Sequence[np.ndarray],
                             alpha: float, n: Optional[int] = None) -> "ControlChainReport":
        """
        Empirical constants of the control estimate chain for u = (P - z)^{-1} f.

        (i)   ||B1 u|| <= (α/h)||B1 f|| + C √α ||phi u||
        (ii)  ||(1 - B1) u||, ||phi u|| <= (C/h)||f|| + C ||chi u||
        (iii) ||chi u||² <= (C/h) ||f|| ||u||

        Args:
            h (float): Semiclassical parameter
            z (float): Real spectral parameter
            f_samples: Right-hand sides on the grid of this h
            alpha (float): α(h)
            n (int, optional): Angular mode (defaults to the Clairaut level A(0)/h)

        Returns:
            ControlChainReport: Per-sample and maximal constants
        """
        if n is None:
            n = int(round(self.surface.min_warp / h))
        grid = self.grid_for(h)
        op = build_mode_operator(self.surface, self.profiles, h, n, "damped", grid=grid)
        lu = splu(sp.csc_matrix(op.matrix - z * sp.identity(grid.N, format="csc")))

        x = grid.x
        B1 = self.profiles.B1(x)
        phi = self.profiles.phi(x)
        chi = self.profiles.chi(x)
        level = self.profiles.chi.level
        chi_weight = 1.0 / (0.6 * level)

        def norm(v):
            return weighted_norm(v, grid)

        rows = []
        for f in f_samples:
            f = np.asarray(f, dtype=complex)
            u = lu.solve(f)
            nf, nu = norm(f), norm(u)
            nB1u, nB1f = norm(B1 * u), norm(B1 * f)
            nphiu, nchiu = norm(phi * u), norm(chi * u)
            nrest = norm((1.0 - B1) * u)

            excess = max(nB1u - alpha / h * nB1f, 0.0)
            c_i = excess / (math.sqrt(alpha) * nphiu) if nphiu > 0 else 0.0
            scale = nf / h + nchiu
            c_iii = nchiu**2 * h / (nf * nu) if nf * nu > 0 else 0.0
            rows.append({
                "C_i": c_i,
                "C_ii_rest": nrest / scale,
                "C_ii_phi": nphiu / scale,
                "C_iii": c_iii,
                "C_iii_normalized": c_iii / chi_weight,
                "B1u_ratio": nB1u / (alpha / h * nf) if nf > 0 else 0.0,
            })

        keys = rows[0].keys() if rows else []
        maxima = {k: max(r[k] for r in rows) for k in keys}
        return ControlChainReport(h=h, z=z, n=n, alpha=alpha, rows=rows, maxima=maxima,
                                  chi_weight=chi_weight)

    def lower_half_plane_check(self, h: float, z_list: Sequence[complex],
                               n: Optional[int] = None) -> List[Dict[str, float]]:
        """
        Absorbing-model norms against the numerical-range bound 1/|Im z|, Im z < 0.
        """
        if n is None:
            n = int(round(self.surface.min_warp / h))
        grid = self.grid_for(h)
        rows = []
        for z in z_list:
            if complex(z).imag >= 0.0:
                raise ValueError(f"Očekáváno Im z < 0, zadáno: {z}")
            sample = self.mode_sample(h, n, z, "absorbing", grid)
            bound = 1.0 / abs(complex(z).imag)
            rows.append({"h": h, "re_z": complex(z).real, "im_z": complex(z).imag,
                         "n": n, "norm": sample.norm, "bound": bound,
                         "holds": sample.norm <= bound * (1.0 + 1e-10)})
        return rows


@dataclass
class TransferReport:
    """Outcome of the damping-vs-absorption transfer check."""

    rows: List[Dict[str, float]]
    absorbing_fit: ScalingFit
    damped_fit: ScalingFit
    exponent_gap: float
    constant_ratio: float
    bounded: bool


@dataclass
class StripScan:
    """Outcome of a strip scan."""

    h: float
    c0: float
    kind: str
    alpha: float
    min_scaled_sigma: float
    argmin_z: Optional[complex]
    argmin_n: Optional[int]
    threshold: float
    empty: bool
    scaled_gap: float = math.nan

    def as_row(self) -> Dict[str, object]:
        z = self.argmin_z if self.argmin_z is not None else complex(math.nan, math.nan)
        return {"h": self.h, "c0": self.c0, "kind": self.kind, "alpha": self.alpha,
                "min_scaled_sigma": self.min_scaled_sigma, "argmin_re_z": z.real,
                "argmin_im_z": z.imag, "argmin_n": self.argmin_n,
                "threshold": self.threshold, "scaled_gap": self.scaled_gap,
                "empty": self.empty}


@dataclass
class ControlChainReport:
    """Empirical constants of the control estimate chain at one h."""

    h: float
    z: float
    n: int
    alpha: float
    rows: List[Dict[str, float]]
    maxima: Dict[str, float]
    chi_weight: float


def global_resolvent_norm(surface: WarpedSurface, profiles: ProfileSet, h: float,
                          z: complex = 1.0, kind: str = "damped",
                          settings: Optional[ScanSettings] = None) -> Tuple[float, int]:
    """
    Supremum over angular modes of the resolvent norm and the maximizing mode.
    """
    result = ResolventScanner(surface, profiles, settings).global_norm(h, z, kind)
    return result.norm, result.n_star


def verify_transfer(surface: WarpedSurface, profiles: ProfileSet, h_list: Sequence[float],
                    absorbing_fit: Optional[ScalingFit], c0: float = 0.1,
                    settings: Optional[ScanSettings] = None) -> TransferReport:
    """Transfer check with a default scanner (see ResolventScanner.verify_transfer)."""
    return ResolventScanner(surface, profiles, settings).verify_transfer(h_list, absorbing_fit, c0)


def strip_scan(surface: WarpedSurface, profiles: ProfileSet, h: float, alpha_fit: ScalingFit,
               c0: float, n_points: int = 5, kind: str = "damped",
               settings: Optional[ScanSettings] = None) -> StripScan:
    """Strip scan with a default scanner (see ResolventScanner.strip_scan)."""
    return ResolventScanner(surface, profiles, settings).strip_scan(h, alpha_fit, c0,
                                                                     n_points, kind)


def verify_control_chain(surface: WarpedSurface, profiles: ProfileSet, h: float, z: float,
                         f_samples: Sequence[np.ndarray], alpha: float = 1.0,
                         n: Optional[int] = None,
                         settings: Optional[ScanSettings] = None) -> ControlChainReport:
    """Control chain check with a default scanner."""
    return ResolventScanner(surface, profiles, settings).verify_control_chain(
        h, z, f_samples, alpha, n)
