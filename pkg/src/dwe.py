# src/dwe.py

"""
src/dwe.py

Damped wave equation module for the damped-wave resolvent laboratory.
Evolves (∂_t² + Δ + a∂_t)u = 0 mode by mode with a Crank-Nicolson scheme on
the first-order system, measures and fits energy decay, and converts
resolvent bounds on the generator into energy decay profiles F(t).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import splu

try:
    from .discretize import ModeOperator
    from .geometry import Profile
    from .resolvent import ScalingFit
except ImportError:
    from discretize import ModeOperator
    from geometry import Profile
    from resolvent import ScalingFit

logger = logging.getLogger(__name__)

DECAY_MODELS = ("exp", "exp-sqrt", "poly-log")
CFL_LIMIT = 0.5
ENERGY_GROWTH_TOLERANCE = 1e-10
F_COND_TOLERANCE = 1e-12
QUALITATIVE_DECADES = 2.0
WEAK_TRANSFER_LIMIT = 2.0


class SchemeError(ValueError):
    """Raised when the time step is unresolved or the energy grows."""


class NonMonotoneTraceError(ValueError):
    """Raised when an energy trace to be fitted is not nonincreasing."""


class RegularityError(ValueError):
    """Raised when k <= N + 1 in the resolvent-to-decay conversion."""


@dataclass
class WaveState:
    """
    State (u, ∂_t u) of one angular mode.

    Attributes:
        n (int): Angular mode
        u (np.ndarray): Displacement on the grid
        v (np.ndarray): Velocity on the grid
        t (float): Time
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.u, self.v]).astype(complex)


@dataclass
class Generator:
    """
    First-order generator d/dt (u, v) = (v, -Δ_n u - a v) of one mode.

    Attributes:
        op (ModeOperator): Operator supplying the grid and stiffness
        damping (np.ndarray): a at the grid nodes
        matrix (scipy.sparse.csr_matrix): 2N×2N block matrix
    """

    op: ModeOperator
    damping: np.ndarray
    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.op.n

    @property
    def size(self) -> int:
        return self.op.grid.N

    @property
    def omega_max(self) -> float:
        """Gershgorin bound on the largest frequency sqrt(max eig Δ_n)."""
        K = self.op.stiffness
        row_sums = np.asarray(abs(K).sum(axis=1)).ravel()
        return math.sqrt(float(np.max(row_sums / self.op.grid.weights)))


def assemble_generator(op: ModeOperator, damping: Optional[Profile] = None) -> Generator:
    """
    Assemble the block generator [[0, I], [-Δ_n, -diag(a)]] at h = 1.

    Args:
        op (ModeOperator): Mode operator (its unscaled Laplacian is used)
        damping (Profile, optional): Damping (op.profiles.a by default)

    Returns:
        Generator: The generator with its grid data
    """
    N = op.grid.N
    if damping is None:
        a = op.profiles.a(op.grid.x) if op.profiles is not None else np.zeros(N)
    else:
        a = damping(op.grid.x)
    identity = sp.identity(N, format="csr")
    matrix = sp.bmat(
        [[None, identity], [-op.laplacian, sp.diags(-a)]], format="csr"
    )
    return Generator(op=op, damping=np.asarray(a, dtype=float), matrix=matrix)


def energy(state: WaveState, generator: Generator) -> float:
    """
    Mode energy ½(Σ w|v|² + u*Ku), K the flux-form stiffness.

    Returns:
        float: Nonnegative energy
    """
    w = generator.op.grid.weights
    kinetic = float(np.sum(w * np.abs(state.v) ** 2))
    potential = float(np.real(np.vdot(state.u, generator.op.stiffness @ state.u)))
    return 0.5 * (kinetic + max(potential, 0.0))


def dissipated_power(v: np.ndarray, generator: Generator) -> float:
    """Instantaneous dissipation Σ w a |v|²."""
    w = generator.op.grid.weights
    return float(np.sum(w * generator.damping * np.abs(v) ** 2))


class CrankNicolson:
    """
    Crank-Nicolson stepper (I - dt/2 G) y' = (I + dt/2 G) y.

    The step is the implicit midpoint rule, so the discrete energy obeys
    E' - E = -dt Σ w a |(v + v')/2|² exactly.
    """

    def __init__(self, generator: Generator, dt: float):
        self.generator = generator
        self.dt = dt
        size = generator.matrix.shape[0]
        identity = sp.identity(size, format="csc", dtype=complex)
        G = sp.csc_matrix(generator.matrix, dtype=complex)
        self.explicit = (identity + 0.5 * dt * G).tocsr()
        self.lu = splu((identity - 0.5 * dt * G).tocsc())

    def step(self, y: np.ndarray) -> np.ndarray:
        return self.lu.solve(self.explicit @ y)


def initial_data(generator: Generator, width_points: float = 10.0,
                 center: float = 0.0, amplitude: float = 1.0) -> WaveState:
    """
    u0 = 0 and u1 a Gaussian bump of width width_points·dx around center.

    For n = 0 the weighted mean of u1 is removed so the stationary constant
    mode is projected out.
    """
    grid = generator.op.grid
    width = width_points * grid.dx
    offset = np.mod(grid.x - center + 1.0, 2.0) - 1.0
    v = amplitude * np.exp(-0.5 * (offset / width) ** 2)
    if generator.n == 0:
        v = v - np.sum(grid.weights * v) / np.sum(grid.weights)
    return WaveState(n=generator.n, u=np.zeros(grid.N, dtype=complex),
                     v=v.astype(complex))


@dataclass
class Evolution:
    """
    Result of a time evolution.

    Attributes:
        state (WaveState): Final state
        trace (pandas.DataFrame): t, E, dissipated_power
        dissipation_residual (float): |E(T) - E(0) + trapezoid ∫ Σ w a|v|²| / E(0)
        max_step_residual (float): Largest per-step residual relative to E(0)
    """

    state: WaveState
    trace: pd.DataFrame
    dissipation_residual: float
    max_step_residual: float


def evolve(
    state: WaveState,
    generator: Generator,
    dt: float,
    steps: int,
    record_every: int = 1,
    check_cfl: bool = True,
) -> Evolution:
    """
    Evolve a mode with Crank-Nicolson and record the energy trace.

    Args:
        state (WaveState): Initial state
        generator (Generator): Generator of the same mode
        dt (float): Time step
        steps (int): Number of steps
        record_every (int): Trace sampling stride
        check_cfl (bool): Enforce dt·ω_max <= 0.5

    Returns:
        Evolution: Final state, trace and dissipation-identity residuals

    Raises:
        SchemeError: If dt does not resolve ω_max or the energy grows by more
            than 1e-10·E(0) in a step
    """
    if check_cfl and dt * generator.omega_max > CFL_LIMIT:
        raise SchemeError(
            f"Časový krok {dt:.3e} nerozliší frekvenci ω_max = "
            f"{generator.omega_max:.3e} (dt·ω_max > {CFL_LIMIT})"
        )

    stepper = CrankNicolson(generator, dt)
    N = generator.size
    y = state.stacked()
    E0 = energy(state, generator)
    scale = max(E0, 1e-300)
    E_prev = E0
    q_prev = dissipated_power(state.v, generator)

    rows = [(state.t, E0, q_prev)]
    cumulative = 0.0
    worst = 0.0
    t = state.t
    for k in range(1, steps + 1):
        y = stepper.step(y)
        t = state.t + k * dt
        current = WaveState(n=state.n, u=y[:N], v=y[N:], t=t)
        E = energy(current, generator)
        q = dissipated_power(current.v, generator)
        if E > E_prev + ENERGY_GROWTH_TOLERANCE * scale:
            raise SchemeError(
                f"Energie vzrostla v kroku {k}: {E_prev:.6e} -> {E:.6e}"
            )
        residual = E - E_prev + 0.5 * dt * (q_prev + q)
        cumulative += residual
        worst = max(worst, abs(residual) / scale)
        if k % record_every == 0 or k == steps:
            rows.append((t, E, q))
        E_prev, q_prev = E, q

    trace = pd.DataFrame(rows, columns=["t", "E", "dissipated_power"])
    final = WaveState(n=state.n, u=y[:N].copy(), v=y[N:].copy(), t=t)
    logger.debug("Evoluce módu n=%d: %d kroků, E %.3e -> %.3e", state.n, steps,
                 E0, trace["E"].iloc[-1])
    return Evolution(state=final, trace=trace,
                     dissipation_residual=abs(cumulative) / scale,
                     max_step_residual=worst)


def evolve_modes(generators: Sequence[Generator], states: Sequence[WaveState],
                 dt: float, steps: int, record_every: int = 1,
                 threads: int = 1) -> List[Evolution]:
    """Evolve independent modes in parallel; results in input order."""
    jobs = list(zip(states, generators))
    if threads <= 1 or len(jobs) <= 1:
        return [evolve(s, g, dt, steps, record_every) for s, g in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(evolve, s, g, dt, steps, record_every) for s, g in jobs]
        return [f.result() for f in futures]


def step_norm_ratio(generator: Generator, dt: float, samples: int = 10,
                    seed: int = 0) -> float:
    """
    Largest energy-norm growth sqrt(E(step y)/E(y)) over random vectors.
    """
    rng = np.random.default_rng(seed)
    stepper = CrankNicolson(generator, dt)
    N = generator.size
    worst = 0.0
    for _ in range(samples):
        y = rng.standard_normal(2 * N) + 1j * rng.standard_normal(2 * N)
        before = energy(WaveState(generator.n, y[:N], y[N:]), generator)
        z = stepper.step(y)
        after = energy(WaveState(generator.n, z[:N], z[N:]), generator)
        worst = max(worst, math.sqrt(after / before))
    return worst


def generator_spectral_gap(generator: Generator) -> float:
    """
    Smallest decay rate -Re λ over the nonzero spectrum of the generator.

    Dense eigensolve; meant for grids of a few hundred points.
    """
    eigenvalues = la.eigvals(generator.matrix.toarray())
    nonzero = eigenvalues[np.abs(eigenvalues) > 1e-9]
    return float(np.min(-nonzero.real))


@dataclass
class DecayFit:
    """
    Least-squares fit of log E against a decay template.

    Attributes:
        model (str): "exp", "exp-sqrt" or "poly-log"
        parameters (dict): rate (exp, exp-sqrt) or s, q (poly-log), plus log_C
        residual (float): RMS residual of log E
        decades (float): Decades of decay spanned by the trace
        qualitative (bool): Fewer than two decades captured
        samples (int): Number of points used
    """

    model: str
    parameters: Dict[str, float]
    residual: float
    decades: float
    qualitative: bool
    samples: int

    def as_dict(self) -> Dict[str, object]:
        return {
            "model": self.model,
            "parameters": dict(self.parameters),
            "residual": self.residual,
            "decades": self.decades,
            "qualitative": self.qualitative,
            "samples": self.samples,
        }


def _check_monotone(E: np.ndarray) -> None:
    growth = np.diff(E)
    if np.any(growth > ENERGY_GROWTH_TOLERANCE * max(E[0], 1e-300)):
        raise NonMonotoneTraceError("Energetický průběh není nerostoucí")


def fit_decay(trace: pd.DataFrame, model: str = "exp",
              t_min: float = 0.0) -> DecayFit:
    """
    Fit log E(t) to a decay template.

    exp:       log E = log C - rate·t
    exp-sqrt:  log E = log C - rate·√t
    poly-log:  log E = log C - s·log t + q·s·log log t   (t > e)

    Args:
        trace (pandas.DataFrame): Columns t and E
        model (str): Template name
        t_min (float): Ignore samples before this time

    Returns:
        DecayFit: Parameters, residual and the qualitative flag

    Raises:
        NonMonotoneTraceError: If E increases anywhere
        ValueError: For unknown models or too few usable samples
    """
    if model not in DECAY_MODELS:
        raise ValueError(f"Neznámý model útlumu: {model}")

    t = trace["t"].to_numpy(dtype=float)
    E = trace["E"].to_numpy(dtype=float)
    _check_monotone(E)

    mask = (t >= t_min) & (E > 0.0)
    if model == "poly-log":
        mask &= t > math.e
    t, E = t[mask], E[mask]
    if t.size < 3:
        raise ValueError(f"Model {model} vyžaduje alespoň 3 použitelné vzorky")

    logE = np.log(E)
    if model == "exp":
        design = np.column_stack([np.ones_like(t), -t])
    elif model == "exp-sqrt":
        design = np.column_stack([np.ones_like(t), -np.sqrt(t)])
    else:
        design = np.column_stack([np.ones_like(t), -np.log(t), np.log(np.log(t))])

    coeffs, *_ = np.linalg.lstsq(design, logE, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coeffs - logE) ** 2)))
    if model == "poly-log":
        s = float(coeffs[1])
        parameters = {"log_C": float(coeffs[0]), "s": s,
                      "q": float(coeffs[2] / s) if s != 0.0 else math.nan}
    else:
        parameters = {"log_C": float(coeffs[0]), "rate": float(coeffs[1])}

    decades = float(np.log10(E[0] / E[-1]))
    qualitative = decades < QUALITATIVE_DECADES
    if qualitative:
        logger.warning("Fit %s zachycuje jen %.2f dekády útlumu; výsledek je kvalitativní",
                       model, decades)
    return DecayFit(model=model, parameters=parameters, residual=residual,
                    decades=decades, qualitative=qualitative, samples=int(t.size))


def compare_decay_models(trace: pd.DataFrame, t_min: float = 0.0) -> pd.DataFrame:
    """Fit every template that has enough samples; one row per model."""
    rows = []
    for model in DECAY_MODELS:
        try:
            fit = fit_decay(trace, model, t_min)
        except NonMonotoneTraceError:
            raise
        except ValueError as exc:
            logger.debug("Model %s přeskočen: %s", model, exc)
            continue
        rows.append({"model": model, "residual": fit.residual,
                     "qualitative": fit.qualitative, **fit.parameters})
    return pd.DataFrame(rows)


# Resolvent-to-decay calculus. Strip widths are passed as functions of
# ρ = log r so that profiles up to F = exp(1e6) stay representable.


@dataclass
class DecayModel:
    """
    Decay profile derived from a resolvent bound.

    Attributes:
        G (callable): Resolvent growth G(|Re λ|)
        P (callable): Strip width as a function of ρ = log|Re λ|, nonincreasing
        k (int): Regularity index
        N (float): Power bound on G
        region (str): Description of Ω = {|Im λ| <= P(|Re λ|)}
        t (np.ndarray): Time grid
        log_F (np.ndarray): log F on the grid
        residual (np.ndarray): (k+1)/2·log F - t·P(log F) on the grid
        fit (DecayFit, optional): Fitted decay of a simulation, if any
        label (str): Profile name
    """

    G: Callable
    P: Callable
    k: int
    N: float
    region: str
    t: np.ndarray
    log_F: np.ndarray
    residual: np.ndarray
    fit: Optional[DecayFit] = None
    label: str = ""

    @property
    def F(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_F)

    @property
    def residual_max(self) -> float:
        return float(np.max(self.residual))

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.log_F) >= 0.0))

    def energy_bound(self, s: float) -> np.ndarray:
        """E(t)/E(0) <= min(1, F(t)^{-s}) for 0 < s <= k."""
        return energy_bound(self.log_F, s, self.k)

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "log_F": self.log_F,
                             "residual": self.residual,
                             "energy_bound": self.energy_bound(float(self.k))})

    def as_dict(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "k": self.k,
            "N": self.N,
            "region": self.region,
            "residual_max": self.residual_max,
            "t": self.t.tolist(),
            "log_F": self.log_F.tolist(),
            "fit": self.fit.as_dict() if self.fit is not None else None,
        }


def energy_bound(log_F: np.ndarray, s: float, k: int) -> np.ndarray:
    """
    Interpolated energy bound min(1, F^{-s}) between E <= E(0) and the
    k-regular estimate.

    Raises:
        ValueError: If s is outside (0, k]
    """
    if not 0.0 < s <= k:
        raise ValueError(f"Index interpolace s musí ležet v (0, {k}], zadáno: {s}")
    return np.minimum(1.0, np.exp(-s * np.asarray(log_F, dtype=float)))


def f_condition_residual(log_F: np.ndarray, t: np.ndarray, P: Callable,
                         k: int) -> np.ndarray:
    """
    Residual (k+1)/2·log F - t·P(log F) of F(t)^{(k+1)/2} <= exp(t P(F(t))).

    Nonpositive values satisfy the condition. Where F <= 1 the left side
    vanishes and -t·P(1) is reported (P taken at r = e).
    """
    log_F = np.asarray(log_F, dtype=float)
    t = np.asarray(t, dtype=float)
    positive = log_F > 0.0
    rho = np.where(positive, log_F, 1.0)
    P_values = np.asarray(P(rho), dtype=float) * np.ones_like(rho)
    return np.where(positive, 0.5 * (k + 1) * log_F - t * P_values, -t * P_values)


def _saturate(t: float, P: Callable, k: int, iterations: int = 200) -> float:
    # largest log F with (k+1)/2·log F <= t P(log F), by bisection
    def phi(L):
        return 0.5 * (k + 1) * L - t * float(P(L))

    lo, hi = 0.0, 1.0
    while phi(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise ValueError("Saturace F nenalezena: P neklesá")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if phi(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    return lo


def rate_from_resolvent(
    G: Callable,
    P: Callable,
    k: int,
    N: float,
    t: Optional[np.ndarray] = None,
    label: str = "",
) -> DecayModel:
    """
    Build F from the saturation F(t)^{(k+1)/2} = exp(t P(F(t))).

    Args:
        G (callable): Resolvent growth function of r
        P (callable): Nonincreasing strip width as a function of log r
        k (int): Regularity index
        N (float): Power bound G(r) = O(r^N)
        t (np.ndarray, optional): Time grid (log-spaced on [1, 1e6] by default)
        label (str): Name stored on the model

    Returns:
        DecayModel: F on the grid with its F-condition residual

    Raises:
        RegularityError: If k <= N + 1
    """
    if k <= N + 1:
        raise RegularityError(
            f"Regularita k = {k} nestačí: vyžaduje se k > N + 1 = {N + 1:.4g}"
        )
    if t is None:
        t = np.logspace(0.0, 6.0, 121)
    t = np.asarray(t, dtype=float)

    log_F = np.array([_saturate(float(s), P, k) for s in t])
    log_F = np.maximum.accumulate(log_F)
    residual = f_condition_residual(log_F, t, P, k)
    violations = residual > F_COND_TOLERANCE * np.maximum(1.0, 0.5 * (k + 1) * log_F)
    if np.any(violations):
        logger.warning("Podmínka F porušena v %d bodech", int(np.sum(violations)))
    return DecayModel(G=G, P=P, k=k, N=N,
                      region="|Im λ| <= P(|Re λ|)", t=t, log_F=log_F,
                      residual=residual, label=label)


@dataclass
class StripProfile:
    """
    Canonical (G, P, F) triple with F in closed form.

    Attributes:
        name (str): Profile name
        G (callable): Resolvent growth of r
        P (callable): Strip width of ρ = log r
        N (float): Power bound on G
        k (int): Regularity index
        log_F (callable): log F(t)
        constants (dict): Constants of the closed form
    """

    name: str
    G: Callable
    P: Callable
    N: float
    k: int
    log_F: Callable[[np.ndarray], np.ndarray]
    constants: Dict[str, float] = field(default_factory=dict)

    def residual(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return f_condition_residual(self.log_F(t), t, self.P, self.k)

    def decay_model(self, t: Optional[np.ndarray] = None) -> DecayModel:
        """Closed-form F on a grid, wrapped like a saturated model."""
        if self.k <= self.N + 1:
            raise RegularityError(
                f"Regularita k = {self.k} nestačí: vyžaduje se k > {self.N + 1:.4g}"
            )
        t = np.logspace(0.0, 6.0, 121) if t is None else np.asarray(t, dtype=float)
        log_F = np.asarray(self.log_F(t), dtype=float)
        return DecayModel(G=self.G, P=self.P, k=self.k, N=self.N,
                          region="|Im λ| <= P(|Re λ|)", t=t, log_F=log_F,
                          residual=self.residual(t), label=self.name)


def minimal_sqrt_constant(k: int = 2) -> float:
    """Smallest C with F = exp(√t/C) admissible for P = 1/log: C = sqrt((k+1)/2)."""
    return math.sqrt(0.5 * (k + 1))


def log_strip_profile(k: int = 2, C: Optional[float] = None) -> StripProfile:
    """P(r) = 1/log r, G(r) = log(2 + r), F(t) = exp(√t/C)."""
    C_min = minimal_sqrt_constant(k)
    C = C_min if C is None else C
    if C < C_min:
        raise ValueError(f"Konstanta C = {C} je menší než minimální {C_min:.6f}")
    return StripProfile(
        name="log",
        G=lambda r: np.log(2.0 + np.asarray(r, dtype=float)),
        P=lambda rho: 1.0 / np.asarray(rho, dtype=float),
        N=0.0,
        k=k,
        log_F=lambda t: np.sqrt(t) / C,
        constants={"C": C, "C_min": C_min},
    )


def poly_strip_profile(m: int, k: int = 2) -> StripProfile:
    """
    P(r) = r^{(1-m)/(m+1)}, G(r) = r^{(m-1)/(m+1)} and the floored profile
    F(t) = max(1, t^s / log^q t) for t >= exp(q/s), F = 1 before, with
    s = (m+1)/(m-1), q = 3(m+1)²/(2(m-1)²).
    """
    if m < 2:
        raise ValueError("Polynomiální profil vyžaduje m >= 2")
    s = (m + 1) / (m - 1)
    q = 3.0 * (m + 1) ** 2 / (2.0 * (m - 1) ** 2)
    N = (m - 1) / (m + 1)
    start = math.exp(q / s)

    def log_F(t):
        t = np.asarray(t, dtype=float)
        safe = np.maximum(t, start)
        template = s * np.log(safe) - q * np.log(np.log(safe))
        return np.where(t >= start, np.maximum(template, 0.0), 0.0)

    return StripProfile(
        name=f"poly-m{m}",
        G=lambda r: np.asarray(r, dtype=float) ** N,
        P=lambda rho: np.exp(-N * np.asarray(rho, dtype=float)),
        N=N,
        k=k,
        log_F=log_F,
        constants={"m": m, "s": s, "q": q, "t_start": start},
    )


def constant_strip_profile(p0: float, k: int = 2) -> StripProfile:
    """Constant P = p0 (GCC): F(t) = exp(2 p0 t/(k+1)) saturates the condition."""
    return StripProfile(
        name="constant",
        G=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        P=lambda rho: np.full_like(np.asarray(rho, dtype=float), p0),
        N=0.0,
        k=k,
        log_F=lambda t: 2.0 * p0 * np.asarray(t, dtype=float) / (k + 1),
        constants={"p0": p0},
    )


@dataclass
class GeneratorBounds:
    """
    Resolvent growth and strip width of the wave generator from a fitted α.

    Attributes:
        G (callable): G(r) = α(1/r) (α² in weak mode)
        P (callable): c/G as a function of ρ = log r
        N (float): Power of G
        k (int): Smallest integer regularity with k > N + 1
        weak (bool): α grew too fast and was squared
        model (str): Fit model of α
        c (float): Strip constant
    """

    G: Callable
    P: Callable
    N: float
    k: int
    weak: bool
    model: str
    c: float

    def decay_model(self, t: Optional[np.ndarray] = None) -> DecayModel:
        return rate_from_resolvent(self.G, self.P, self.k, self.N, t,
                                   label=f"alpha-{self.model}")


def alpha_to_G_P(fit: ScalingFit, c: float = 1.0,
                 polynomial_limit: float = WEAK_TRANSFER_LIMIT) -> GeneratorBounds:
    """
    Transfer a fitted α(h) to the generator: G(r) = α(1/r), P(r) = c/α(1/r).

    Power fits with norm exponent e give α(h) = C h^{e+1} and N = -(e+1)
    (clipped at 0); log fits give G(r) = C log(2 + r) with N = 0. When the
    power exceeds polynomial_limit the weak transfer with α² is used.

    Args:
        fit (ScalingFit): Fit of the norm against h
        c (float): Empirical strip constant
        polynomial_limit (float): Largest N accepted before weak mode

    Returns:
        GeneratorBounds: G, P, N, k and the weak-mode flag
    """
    C = abs(fit.coefficient)
    if fit.model == "log":
        N = 0.0

        def alpha_of_rho(rho):
            return np.maximum(1.0, C * np.logaddexp(np.asarray(rho, dtype=float),
                                                    math.log(2.0)))
    else:
        N = max(0.0, -(fit.exponent + 1.0))

        def alpha_of_rho(rho):
            return np.maximum(1.0, C * np.exp(N * np.asarray(rho, dtype=float)))

    weak = N > polynomial_limit
    power = 2.0 if weak else 1.0
    if weak:
        logger.warning("α roste rychleji než r^%.1f; použit slabý přenos s α²",
                       polynomial_limit)
        N = 2.0 * N

    def G(r):
        with np.errstate(divide="ignore"):
            return alpha_of_rho(np.log(np.asarray(r, dtype=float))) ** power

    def P(rho):
        return c / alpha_of_rho(rho) ** power

    k = int(math.floor(N + 1.0)) + 1
    return GeneratorBounds(G=G, P=P, N=N, k=k, weak=weak, model=fit.model, c=c)
