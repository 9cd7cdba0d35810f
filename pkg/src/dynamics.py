# src/dynamics.py

"""
src/dynamics.py

Geodesic dynamics module for the damped-wave resolvent laboratory.
Integrates the geodesic flow of p = ξ² + η²/A(x)² on the warped product,
classifies trajectories as damped or undamped, computes the geometric control
time, the transverse monodromy and Lyapunov exponent of the closed geodesic at
the neck, the unstable Jacobian along it and the topological pressure of a
weight on the trapped orbit.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

try:
    from .geometry import Profile, WarpedSurface, reduce_periodic
except ImportError:
    from geometry import Profile, WarpedSurface, reduce_periodic

logger = logging.getLogger(__name__)

DRIFT_BUDGET = 1e-9
DEGENERACY_TOLERANCE = 1e-8


class FlowError(ValueError):
    """Raised when the step size is too large or the energy drift exceeds budget."""


class NonClosedOrbitError(ValueError):
    """Raised when an orbit analysis is requested for a non-closed geodesic."""


class DegenerateOrbitError(ValueError):
    """Raised when a hyperbolic quantity is requested on a parabolic orbit."""


class EmptySampleError(ValueError):
    """Raised when a pressure estimate gets no sample points."""


@dataclass(frozen=True)
class GeodesicState:
    """
    Point of T*X in coordinates (x, θ, ξ, η).

    Attributes:
        x (float): Position along the profile curve
        theta (float): Angle
        xi (float): Momentum dual to x
        eta (float): Momentum dual to θ (Clairaut invariant)
    """

    x: float
    theta: float
    xi: float
    eta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.theta, self.xi, self.eta], dtype=float)

    @classmethod
    def from_array(cls, y) -> "GeodesicState":
        return cls(float(y[0]), float(y[1]), float(y[2]), float(y[3]))


def hamiltonian(y: np.ndarray, surface: WarpedSurface) -> np.ndarray:
    """p = ξ² + η²/A(x)² for state arrays of shape (4, ...)."""
    A = surface.A(y[0])
    return y[2] ** 2 + y[3] ** 2 / A**2


def vector_field(y: np.ndarray, surface: WarpedSurface) -> np.ndarray:
    """
    Hamilton equations ẋ = 2ξ, θ̇ = 2η/A², ξ̇ = 2η²A'/A³, η̇ = 0.
    """
    A, A1, _ = surface.warp(y[0])
    dy = np.empty_like(y)
    dy[0] = 2.0 * y[2]
    dy[1] = 2.0 * y[3] / A**2
    dy[2] = 2.0 * y[3] ** 2 * A1 / A**3
    dy[3] = 0.0
    return dy


def jacobian_field(y: np.ndarray, surface: WarpedSurface) -> np.ndarray:
    """Jacobian of the vector field at a single state (4×4)."""
    A, A1, A2 = (float(v) for v in surface.warp(y[0]))
    eta = y[3]
    J = np.zeros((4, 4))
    J[0, 2] = 2.0
    J[1, 0] = -4.0 * eta * A1 / A**3
    J[1, 3] = 2.0 / A**2
    J[2, 0] = 2.0 * eta**2 * (A2 / A**3 - 3.0 * A1**2 / A**4)
    J[2, 3] = 4.0 * eta * A1 / A**3
    return J


def _rk4_step(y: np.ndarray, dt, surface: WarpedSurface) -> np.ndarray:
    k1 = vector_field(y, surface)
    k2 = vector_field(y + 0.5 * dt * k1, surface)
    k3 = vector_field(y + 0.5 * dt * k2, surface)
    k4 = vector_field(y + dt * k3, surface)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_variational_step(y: np.ndarray, Phi: np.ndarray, dt: float,
                          surface: WarpedSurface):
    def rhs(state, matrix):
        return vector_field(state, surface), jacobian_field(state, surface) @ matrix

    k1, m1 = rhs(y, Phi)
    k2, m2 = rhs(y + 0.5 * dt * k1, Phi + 0.5 * dt * m1)
    k3, m3 = rhs(y + 0.5 * dt * k2, Phi + 0.5 * dt * m2)
    k4, m4 = rhs(y + dt * k3, Phi + dt * m3)
    y_next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    Phi_next = Phi + dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
    return y_next, Phi_next


def default_step(state: GeodesicState) -> float:
    """Largest admissible step 1e-3 / max(1, |ξ| + |η|)."""
    return 1e-3 / max(1.0, abs(state.xi) + abs(state.eta))


@dataclass
class FlowResult:
    """
    Outcome of a flow call.

    Attributes:
        state (GeodesicState): Final state (x unwrapped)
        drift (float): |p(t) - p(0)|
        trajectory (pandas.DataFrame, optional): t, x, theta, xi, eta, a
    """

    state: GeodesicState
    drift: float
    trajectory: Optional[pd.DataFrame] = None


def flow(
    state: GeodesicState,
    t: float,
    surface: WarpedSurface,
    dt: Optional[float] = None,
    record_every: int = 0,
    damping: Optional[Profile] = None,
) -> FlowResult:
    """
    Integrate the geodesic flow for time t with fixed-step RK4.

    Args:
        state (GeodesicState): Initial state
        t (float): Time (negative integrates backward)
        surface (WarpedSurface): Surface
        dt (float, optional): Step size (default_step if omitted)
        record_every (int): Record every k-th step into a trajectory (0 = off)
        damping (Profile, optional): Damping evaluated along the trajectory

    Returns:
        FlowResult: Final state, energy drift and optional trajectory

    Raises:
        FlowError: If dt exceeds default_step or the drift exceeds 1e-9 max(|t|, 1)
    """
    bound = default_step(state)
    if dt is None:
        dt = bound
    elif dt > bound * (1.0 + 1e-12):
        raise FlowError(f"Krok {dt:.3e} překračuje povolenou mez {bound:.3e}")

    steps = max(1, int(math.ceil(abs(t) / dt))) if t != 0.0 else 0
    h = t / steps if steps else 0.0
    y = state.as_array()
    p0 = float(hamiltonian(y, surface))

    records = []
    for k in range(steps):
        if record_every and k % record_every == 0:
            records.append((k * h, *y))
        y = _rk4_step(y, h, surface)
    if record_every:
        records.append((steps * h, *y))

    drift = abs(float(hamiltonian(y, surface)) - p0)
    if drift > DRIFT_BUDGET * max(abs(t), 1.0):
        raise FlowError(f"Drift energie {drift:.3e} překračuje rozpočet")

    trajectory = None
    if record_every:
        trajectory = pd.DataFrame(records, columns=["t", "x", "theta", "xi", "eta"])
        trajectory["a"] = damping(trajectory["x"].to_numpy()) if damping is not None else 0.0
    return FlowResult(state=GeodesicState.from_array(y), drift=drift, trajectory=trajectory)


def unit_cosphere_states(surface: WarpedSurface, n_x: int = 32, n_dir: int = 16) -> np.ndarray:
    """
    Sample S*X = {p = 1}: x on a uniform grid, directions ξ = cos φ, η = A sin φ.

    Returns:
        np.ndarray: States of shape (4, n_x * n_dir)
    """
    x = -1.0 + 2.0 * np.arange(n_x) / n_x
    phi = 2.0 * math.pi * np.arange(n_dir) / n_dir
    X, F = np.meshgrid(x, phi, indexing="ij")
    A = surface.A(X)
    cos, sin = np.cos(F), np.sin(F)
    cos = np.where(np.abs(cos) < 1e-12, 0.0, cos)
    sin = np.where(np.abs(sin) < 1e-12, 0.0, sin)
    return np.vstack([X.ravel(), np.zeros(X.size), cos.ravel(), (A * sin).ravel()])


@dataclass
class Classification:
    """
    Control status of a trajectory.

    Attributes:
        undamped (bool): The trajectory never meets {a > 0} within ±T_max
        t_hit (float): First time |t| with a(x(t)) > threshold (inf if none)
        integral (float): ∫ a(x(t)) dt over [-T_max, T_max]
    """

    undamped: bool
    t_hit: float
    integral: float


def classify_batch(
    states: np.ndarray,
    surface: WarpedSurface,
    damping: Profile,
    T_max: float = 20.0,
    threshold: float = 1e-3,
    dt: float = 5e-3,
) -> List[Classification]:
    """
    Classify many states at once by integrating forward and backward in time.

    Args:
        states (np.ndarray): States of shape (4, K) on p = 1
        surface (WarpedSurface): Surface
        damping (Profile): Damping a
        T_max (float): Time horizon in each direction
        threshold (float): Damping level that counts as a hit
        dt (float): Step size

    Returns:
        list of Classification, one per state
    """
    K = states.shape[1]
    y = np.hstack([states, states]).astype(float)
    step = np.concatenate([np.full(K, dt), np.full(K, -dt)])
    steps = int(math.ceil(T_max / dt))

    values = damping(y[0])
    hit = np.where(values > threshold, 0.0, np.inf)
    integral = np.zeros(2 * K)
    p0 = hamiltonian(y, surface)
    for k in range(1, steps + 1):
        y = _rk4_step(y, step, surface)
        new_values = damping(y[0])
        integral += 0.5 * dt * (values + new_values)
        fresh = np.isinf(hit) & (new_values > threshold)
        hit[fresh] = k * dt
        values = new_values

    drift = float(np.max(np.abs(hamiltonian(y, surface) - p0)))
    logger.debug("Klasifikace %d stavů, max drift %.3e", K, drift)

    total = integral[:K] + integral[K:]
    first = np.minimum(hit[:K], hit[K:])
    cutoff = threshold * T_max * 1e-6
    return [
        Classification(undamped=bool(total[i] < cutoff), t_hit=float(first[i]),
                       integral=float(total[i]))
        for i in range(K)
    ]


def classify_undamped(
    state: GeodesicState,
    damping: Profile,
    surface: WarpedSurface,
    T_max: float = 20.0,
    threshold: float = 1e-3,
    dt: float = 5e-3,
) -> Classification:
    """
    Decide whether a unit-speed trajectory is undamped or controlled.

    Args:
        state (GeodesicState): State on p = 1
        damping (Profile): Damping a
        surface (WarpedSurface): Surface
        T_max (float): Time horizon in each direction
        threshold (float): Damping level that counts as a hit
        dt (float): Step size

    Returns:
        Classification: undamped flag, first hit time and damping integral
    """
    return classify_batch(state.as_array()[:, None], surface, damping, T_max,
                          threshold, dt)[0]


@dataclass
class GccResult:
    """
    Geometric control time over a sample of S*X.

    Attributes:
        T0 (float): max first-hit time (inf when some sample is undamped)
        unbounded (bool): Some sample is undamped or never hits
        undamped_count (int): Number of undamped samples
        table (pandas.DataFrame): Per-sample x, xi, eta, t_hit, undamped
    """

    T0: float
    unbounded: bool
    undamped_count: int
    table: pd.DataFrame


def gcc_time(
    surface: WarpedSurface,
    damping: Profile,
    n_x: int = 32,
    n_dir: int = 16,
    T_max: float = 20.0,
    threshold: float = 1e-3,
    dt: float = 5e-3,
) -> GccResult:
    """
    Geometric control time T0: every sampled geodesic meets {a > threshold}
    within T0 (forward or backward).
    """
    states = unit_cosphere_states(surface, n_x, n_dir)
    results = classify_batch(states, surface, damping, T_max, threshold, dt)
    table = pd.DataFrame({
        "x": states[0], "xi": states[2], "eta": states[3],
        "t_hit": [r.t_hit for r in results],
        "undamped": [r.undamped for r in results],
    })
    undamped = int(table["undamped"].sum())
    T0 = float(table["t_hit"].max())
    unbounded = undamped > 0 or math.isinf(T0)
    if unbounded:
        T0 = math.inf
    logger.info("GCC: T0=%s, nestlumených vzorků %d z %d", T0, undamped, len(table))
    return GccResult(T0=T0, unbounded=unbounded, undamped_count=undamped, table=table)


def projected_trapped_points(surface: WarpedSurface, damping: Profile,
                             samples: int = 4096) -> np.ndarray:
    """
    x-projection of the closed geodesics ξ = 0 missed by the damping.

    Circles x = const with ξ = 0 are geodesics iff A'(x) = 0; they are
    undamped iff a(x) = 0. For the flat surface every undamped x qualifies.
    """
    x = -1.0 + 2.0 * np.arange(samples) / samples
    _, A1, _ = surface.warp(x)
    mask = (np.abs(A1) < 1e-12) & (damping(x) == 0.0)
    return x[mask]


@dataclass
class OrbitAnalysis:
    """
    Closed geodesic at the neck with its linearization.

    Attributes:
        surface (WarpedSurface): Surface
        orbit (GeodesicState): Initial point of the orbit
        period (float): Period T = π A(0)²/η
        monodromy (np.ndarray): Transverse 2×2 monodromy on (δx, δξ)
        eigenvalues (np.ndarray): Monodromy eigenvalues
        lam (float): Lyapunov exponent log(spectral radius)/T
        unstable (np.ndarray): Unstable eigendirection in (δx, δξ)
        stable (np.ndarray): Stable eigendirection in (δx, δξ)
        determinant (float): det(monodromy)
        degenerate (bool): Parabolic linearization (λ = 0)
        dt (float): Step used for variational integration
        jacobian_samples (dict): t -> J_t^u computed so far
        pressure (float, optional): Pressure value once estimated
    """

    surface: WarpedSurface
    orbit: GeodesicState
    period: float
    monodromy: np.ndarray
    eigenvalues: np.ndarray
    lam: float
    unstable: np.ndarray
    stable: np.ndarray
    determinant: float
    degenerate: bool
    dt: float
    jacobian_samples: Dict[float, float] = field(default_factory=dict)
    pressure: Optional[float] = None

    def as_dict(self) -> Dict[str, object]:
        return {
            "T": self.period,
            "lambda": self.lam,
            "Pr": self.pressure,
            "det": self.determinant,
            "degenerate": self.degenerate,
            "monodromy": self.monodromy.tolist(),
            "eigenvalues_re": np.real(self.eigenvalues).tolist(),
            "eigenvalues_im": np.imag(self.eigenvalues).tolist(),
        }


def variational_flow(state: GeodesicState, t: float, surface: WarpedSurface,
                     dt: float = 1e-3):
    """
    Flow a state together with its 4×4 variational matrix.

    Returns:
        Tuple (final state array, Φ(t))
    """
    steps = max(1, int(math.ceil(abs(t) / dt)))
    h = t / steps
    y = state.as_array()
    Phi = np.eye(4)
    for _ in range(steps):
        y, Phi = _rk4_variational_step(y, Phi, h, surface)
    return y, Phi


def neck_orbit(surface: WarpedSurface, p: float = 1.0) -> GeodesicState:
    """Closed geodesic x = 0, ξ = 0, η = A(0)√p."""
    return GeodesicState(0.0, 0.0, 0.0, surface.min_warp * math.sqrt(p))


def monodromy(surface: WarpedSurface, orbit: Optional[GeodesicState] = None,
              dt: float = 1e-3) -> OrbitAnalysis:
    """
    Transverse monodromy and Lyapunov exponent of a closed geodesic ξ = 0.

    Args:
        surface (WarpedSurface): Surface
        orbit (GeodesicState, optional): Point on the orbit (neck orbit by default)
        dt (float): Step of the variational integration

    Returns:
        OrbitAnalysis: Monodromy, λ, eigendirections and degeneracy flag

    Raises:
        NonClosedOrbitError: If ξ != 0, A'(x) != 0 or η = 0
    """
    orbit = orbit or neck_orbit(surface)
    A, A1, _ = (float(v) for v in surface.warp(orbit.x))
    if orbit.xi != 0.0 or abs(A1) > 1e-12 or orbit.eta == 0.0:
        raise NonClosedOrbitError(
            "Monodromie vyžaduje uzavřenou geodetiku ξ = 0 v kritickém bodě A"
        )

    period = math.pi * A**2 / abs(orbit.eta)
    _, Phi = variational_flow(orbit, period, surface, dt)
    M = Phi[np.ix_([0, 2], [0, 2])]
    eigenvalues, vectors = np.linalg.eig(M)
    radius = float(np.max(np.abs(eigenvalues)))
    lam = max(math.log(radius) / period, 0.0)
    degenerate = lam < DEGENERACY_TOLERANCE

    order = np.argsort(-np.abs(eigenvalues))
    unstable = np.real(vectors[:, order[0]])
    stable = np.real(vectors[:, order[1]])
    det = float(np.linalg.det(M))
    if degenerate:
        logger.warning("Degenerovaná (parabolická) orbita: λ = %.3e", lam)
    logger.info("Monodromie: T=%.6f λ=%.6f det=%.9f", period, lam, det)
    return OrbitAnalysis(
        surface=surface, orbit=orbit, period=period, monodromy=M,
        eigenvalues=eigenvalues, lam=lam, unstable=unstable / np.linalg.norm(unstable),
        stable=stable / np.linalg.norm(stable), determinant=det,
        degenerate=degenerate, dt=dt,
    )


def unstable_jacobian(analysis: OrbitAnalysis, t: float,
                      start: Optional[GeodesicState] = None) -> float:
    """
    J_t^u(ρ) = det de^{-tH_p} restricted to the weak-unstable plane at ρ.

    The plane is spanned by H_p(ρ) and the unstable direction; the ratio of
    Gram areas before and after the backward linearized flow is returned.

    Args:
        analysis (OrbitAnalysis): Hyperbolic orbit analysis
        t (float): Time (J_0 = 1)
        start (GeodesicState, optional): Base point ρ on the orbit

    Returns:
        float: J_t^u

    Raises:
        DegenerateOrbitError: If the orbit is parabolic
    """
    if analysis.degenerate:
        raise DegenerateOrbitError("Nestabilní Jakobián není definován pro λ = 0")
    if t == 0.0:
        return 1.0

    rho = start or analysis.orbit
    surface = analysis.surface
    flow_direction = vector_field(rho.as_array(), surface)
    unstable = np.array([analysis.unstable[0], 0.0, analysis.unstable[1], 0.0])
    basis = np.column_stack([flow_direction, unstable])

    _, Phi = variational_flow(rho, -t, surface, analysis.dt)
    pushed = Phi @ basis
    area_before = math.sqrt(abs(np.linalg.det(basis.T @ basis)))
    area_after = math.sqrt(abs(np.linalg.det(pushed.T @ pushed)))
    value = area_after / area_before
    analysis.jacobian_samples[float(t)] = value
    return value


def orbit_points(analysis: OrbitAnalysis, count: int) -> List[GeodesicState]:
    """Equally spaced points (in time) along the closed orbit."""
    o = analysis.orbit
    A = analysis.surface.min_warp if o.x == 0.0 else float(analysis.surface.A(o.x))
    rate = 2.0 * o.eta / A**2
    times = analysis.period * np.arange(count) / count
    return [GeodesicState(o.x, float(o.theta + rate * s), o.xi, o.eta) for s in times]


def half_log_unstable_weight(analysis: OrbitAnalysis) -> Callable[[GeodesicState], float]:
    """
    Weight f(ρ) = ½ log J_1^u(ρ) of the pressure condition.

    The flow commutes with rotations in θ, so values are cached on (x, ξ, η).
    """
    cache: Dict[tuple, float] = {}

    def weight(state: GeodesicState) -> float:
        key = (round(state.x, 12), round(state.xi, 12), round(state.eta, 12))
        if key not in cache:
            cache[key] = 0.5 * math.log(unstable_jacobian(analysis, 1.0, start=state))
        return cache[key]

    return weight


Weight = Union[float, Callable[[GeodesicState], float]]


def _evaluate_weight(f: Weight, states: Sequence[GeodesicState]) -> np.ndarray:
    if callable(f):
        return np.array([f(s) for s in states], dtype=float)
    return np.full(len(states), float(f))


def birkhoff_pressure(analysis: OrbitAnalysis, f: Weight, samples: int = 32) -> float:
    """
    Pressure on a single closed orbit: the orbit average (1/T)∮ f dt.
    """
    if samples < 1:
        raise EmptySampleError("Odhad tlaku vyžaduje alespoň jeden vzorek")
    values = _evaluate_weight(f, orbit_points(analysis, samples))
    return float(np.mean(values))


def _embed(Y: np.ndarray) -> np.ndarray:
    # (x, cos θ, sin θ, ξ, η) avoids the angle seam
    return np.stack([reduce_periodic(Y[..., 0]), np.cos(Y[..., 1]), np.sin(Y[..., 1]),
                     Y[..., 2], Y[..., 3]], axis=-1)


def greedy_separated_sum(trajectories: np.ndarray, weights: np.ndarray, n: int,
                         eps: float) -> float:
    """
    log Z_{n,ε}: log of Σ exp(Σ_{k<n} f(e^{k}ρ)) over a greedy maximal
    (ε, n)-separated subset of the sampled points.

    Args:
        trajectories (np.ndarray): Time-1 iterates, shape (K, n_total, 4)
        weights (np.ndarray): f at those iterates, shape (K, n_total)
        n (int): Number of iterates used
        eps (float): Separation

    Returns:
        float: log Z (a lower bound of the supremum over separated sets)
    """
    K = trajectories.shape[0]
    if K == 0:
        raise EmptySampleError("Prázdná množina vzorků")
    points = _embed(trajectories[:, :n, :])
    selected: List[int] = []
    for i in range(K):
        if not selected:
            selected.append(i)
            continue
        diff = points[selected] - points[i][None, :, :]
        distance = np.max(np.linalg.norm(diff, axis=-1), axis=1)
        if np.all(distance > eps):
            selected.append(i)
    sums = weights[selected, :n].sum(axis=1)
    top = sums.max()
    return float(top + math.log(np.exp(sums - top).sum()))


@dataclass
class PressureEstimate:
    """
    Pressure of a weight on a sampled invariant set.

    Attributes:
        birkhoff (float): Orbit average of f
        per_eps (pandas.DataFrame): eps, n, P_n, P_2n, extrapolated
        value (float): Extrapolated value at the smallest eps
        lower_bound_note (str): Greedy sets only bound the supremum from below
    """

    birkhoff: float
    per_eps: pd.DataFrame
    value: float
    lower_bound_note: str = "greedy separated sets: lower bound of the supremum"


def pressure(
    analysis: OrbitAnalysis,
    f: Weight,
    n_steps: int = 8,
    eps_list: Sequence[float] = (0.4, 0.2, 0.1),
    sample_size: int = 48,
) -> PressureEstimate:
    """
    Topological pressure of f on the closed orbit by two routes.

    Route 1: the orbit average (entropy of one orbit is 0). Route 2: greedy
    (ε, n)-separated sums over orbit samples iterated by the time-one map,
    with Richardson extrapolation 2 P_{2n} - P_n for each ε.

    Args:
        analysis (OrbitAnalysis): Orbit analysis
        f: Constant or callable weight on states
        n_steps (int): Base number of time-one iterates n
        eps_list: Separations
        sample_size (int): Number of sample points on the orbit

    Returns:
        PressureEstimate: Both routes, per-ε table and extrapolated value

    Raises:
        EmptySampleError: If sample_size < 1
    """
    if sample_size < 1:
        raise EmptySampleError("Odhad tlaku vyžaduje alespoň jeden vzorek")

    starts = orbit_points(analysis, sample_size)
    total = 2 * n_steps
    Y = np.stack([s.as_array() for s in starts], axis=1)
    trajectories = np.empty((sample_size, total, 4))
    weights = np.empty((sample_size, total))
    for k in range(total):
        trajectories[:, k, :] = Y.T
        weights[:, k] = _evaluate_weight(f, [GeodesicState.from_array(c) for c in Y.T])
        Y = _batch_time_one(Y, analysis.surface, analysis.dt)

    rows = []
    for eps in eps_list:
        p_n = greedy_separated_sum(trajectories, weights, n_steps, eps) / n_steps
        p_2n = greedy_separated_sum(trajectories, weights, total, eps) / total
        rows.append({"eps": eps, "n": n_steps, "P_n": p_n, "P_2n": p_2n,
                     "extrapolated": 2.0 * p_2n - p_n})
    table = pd.DataFrame(rows)
    birkhoff = birkhoff_pressure(analysis, f)
    value = float(table.loc[table["eps"].idxmin(), "extrapolated"])
    analysis.pressure = value
    logger.info("Tlak: Birkhoff %.6f, separované množiny %.6f", birkhoff, value)
    return PressureEstimate(birkhoff=birkhoff, per_eps=table, value=value)


def _batch_time_one(Y: np.ndarray, surface: WarpedSurface, dt: float) -> np.ndarray:
    steps = int(math.ceil(1.0 / dt))
    h = 1.0 / steps
    for _ in range(steps):
        Y = _rk4_step(Y, h, surface)
    return Y


def stable_set_states(surface: WarpedSurface, u_values: Sequence[float],
                      eta: float = 1.0, orientation: str = "inward",
                      energy_mismatch: float = 0.0) -> np.ndarray:
    """
    States on ξ² + η²/A(u)² = η²/A(0)² (the stable/unstable set of the neck).

    Args:
        surface (WarpedSurface): Surface
        u_values: Positions
        eta (float): Angular momentum
        orientation (str): "inward" (ξ toward u = 0) or "outward"
        energy_mismatch (float): Relative excess of ξ² over the set value

    Returns:
        np.ndarray: States of shape (4, len(u_values))
    """
    u = np.asarray(u_values, dtype=float)
    A = surface.A(u)
    xi_sq = eta**2 / surface.min_warp**2 - eta**2 / A**2
    xi_sq = xi_sq + energy_mismatch * eta**2
    xi = np.sqrt(np.maximum(xi_sq, 0.0)) * np.sign(u)
    if orientation == "inward":
        xi = -xi
    return np.vstack([u, np.zeros_like(u), xi, np.full_like(u, eta)])


def stable_manifold_check(
    surface: WarpedSurface,
    states: np.ndarray,
    t: float = 20.0,
    dt: float = 5e-4,
    converge_tol: float = 1e-6,
    escape_radius: float = 0.5,
) -> pd.DataFrame:
    """
    Flow states near the peanut neck and measure approach to the trapped circle.

    Args:
        surface (WarpedSurface): Peanut surface
        states (np.ndarray): States of shape (4, K)
        t (float): Time horizon
        dt (float): Step size
        converge_tol (float): Distance counted as convergence to (u, ξ) = (0, 0)
        escape_radius (float): |u| counted as escape

    Returns:
        pandas.DataFrame: u0, xi0, min_distance, final_distance, max_abs_u,
            converged, escaped
    """
    if surface.kind != "peanut":
        raise ValueError("Test stabilní variety je definován pro plochu typu peanut")

    Y = np.array(states, dtype=float)
    distance = np.hypot(Y[0], Y[2])
    min_distance = distance.copy()
    max_abs_u = np.abs(Y[0])
    steps = int(math.ceil(t / dt))
    h = t / steps
    for _ in range(steps):
        Y = _rk4_step(Y, h, surface)
        distance = np.hypot(reduce_periodic(Y[0]), Y[2])
        min_distance = np.minimum(min_distance, distance)
        max_abs_u = np.maximum(max_abs_u, np.abs(reduce_periodic(Y[0])))

    return pd.DataFrame({
        "u0": states[0],
        "xi0": states[2],
        "min_distance": min_distance,
        "final_distance": distance,
        "max_abs_u": max_abs_u,
        "converged": min_distance < converge_tol,
        "escaped": max_abs_u > escape_radius,
    })
