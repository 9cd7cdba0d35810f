# src/geometry.py

"""
src/geometry.py

Geometry module for the damped-wave resolvent laboratory.
Defines the model surfaces of revolution (warped products dx² + A²(x)dθ² over
a periodic x-cell) and the smooth axisymmetric coefficient profiles
(damping a, absorption W, cutoffs chi, B1, phi) used by every other module.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

logger = logging.getLogger(__name__)

PERIOD = 2.0
SURFACE_KINDS = ("torus", "peanut", "flat")
PROFILE_NAMES = ("a", "W", "chi", "B1", "phi")
SMOOTHNESS_KINDS = ("exp", "quintic")

# Peanut blend: cosh on |u| <= start, constant cap cosh(1) on |u| >= end
PEANUT_BLEND_START = 0.5
PEANUT_BLEND_END = 0.9


class InvalidParameterError(ValueError):
    """Raised when a surface or profile parameter is out of range."""


class InvalidSupportError(ValueError):
    """Raised when a profile support enters its forbidden zone."""


def reduce_periodic(x):
    """
    Reduce coordinates to the fundamental cell [-1, 1).

    Args:
        x: Scalar or array of x-coordinates

    Returns:
        Coordinates shifted by multiples of the period into [-1, 1)
    """
    return np.mod(np.asarray(x, dtype=float) + 1.0, PERIOD) - 1.0


def smooth_step(t, smoothness: str = "exp"):
    """
    Smooth monotone step from 0 (t <= 0) to 1 (t >= 1) with two derivatives.

    The "exp" step is the C-infinity transition 1 / (1 + exp(1/t - 1/(1-t)))
    built from exp(-1/t) bumps; "quintic" is the C² polynomial smoothstep.

    Args:
        t: Scalar or array argument
        smoothness: "exp" or "quintic"

    Returns:
        Tuple (psi, dpsi, d2psi) of arrays shaped like t
    """
    t = np.asarray(t, dtype=float)
    psi = np.where(t >= 1.0, 1.0, 0.0)
    dpsi = np.zeros_like(t)
    d2psi = np.zeros_like(t)
    inside = (t > 0.0) & (t < 1.0)
    if not np.any(inside):
        return psi, dpsi, d2psi

    s = t[inside]
    if smoothness == "exp":
        phi = 1.0 / s - 1.0 / (1.0 - s)
        dphi = -1.0 / s**2 - 1.0 / (1.0 - s) ** 2
        d2phi = 2.0 / s**3 - 2.0 / (1.0 - s) ** 3
        p = expit(-phi)
        q = p * (1.0 - p)
        dp = -q * dphi
        d2p = -dp * (1.0 - 2.0 * p) * dphi - q * d2phi
    elif smoothness == "quintic":
        p = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
        dp = 30.0 * s**2 * (1.0 - s) ** 2
        d2p = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    else:
        raise InvalidParameterError(f"Nepodporovaný typ hladkosti: {smoothness}")

    psi[inside] = p
    dpsi[inside] = dp
    d2psi[inside] = d2p
    return psi, dpsi, d2psi


@dataclass(frozen=True)
class WarpedSurface:
    """
    Surface of revolution dx² + A²(x)dθ² over the periodic cell x in [-1, 1).

    Attributes:
        kind (str): "torus", "peanut" or "flat"
        m (int): Degeneracy order of the thin part at x = 0 (peanut acts as m=1)
        period (float): Length of the x-cell
        metadata (dict): Construction constants (kappa, blend radii, ...)
    """

    kind: str
    m: int
    period: float = PERIOD
    metadata: Dict[str, float] = field(default_factory=dict)

    def warp(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Evaluate the warp function and its first two derivatives.

        Args:
            x: Scalar or array of positions (reduced modulo the period)

        Returns:
            Tuple (A, A', A'')
        """
        xr = reduce_periodic(x)
        if self.kind == "torus":
            return _torus_warp(xr, self.m)
        if self.kind == "peanut":
            return _peanut_warp(xr)
        ones = np.ones_like(xr)
        return ones, np.zeros_like(xr), np.zeros_like(xr)

    def A(self, x) -> np.ndarray:
        """Warp function values only."""
        return self.warp(x)[0]

    @property
    def min_warp(self) -> float:
        """Minimum of A (attained at the thin part x = 0)."""
        return float(self.A(0.0))

    @property
    def max_warp(self) -> float:
        """Maximum of A (attained at the fat part x = ±1)."""
        return float(self.A(-1.0))


def _torus_warp(x: np.ndarray, m: int):
    kappa = (2.0 / math.pi) ** (2 * m)
    half_pi = 0.5 * math.pi
    s = np.sin(half_pi * x)
    c = np.cos(half_pi * x)

    g = 1.0 + kappa * s ** (2 * m)
    g1 = kappa * 2 * m * s ** (2 * m - 1) * c * half_pi
    g2 = (
        kappa
        * 2
        * m
        * half_pi**2
        * ((2 * m - 1) * s ** (2 * m - 2) * c**2 - s ** (2 * m))
    )

    inv = 1.0 / (2 * m)
    A = g**inv
    A1 = A * inv * g1 / g
    A2 = A * inv * ((inv - 1.0) * (g1 / g) ** 2 + g2 / g)
    return A, A1, A2


def _peanut_warp(x: np.ndarray):
    cap = math.cosh(1.0)
    width = PEANUT_BLEND_END - PEANUT_BLEND_START
    beta, dbeta, d2beta = smooth_step((np.abs(x) - PEANUT_BLEND_START) / width)
    dbeta = dbeta * np.sign(x) / width
    d2beta = d2beta / width**2

    ch = np.cosh(x)
    sh = np.sinh(x)
    A = ch + beta * (cap - ch)
    A1 = sh * (1.0 - beta) + dbeta * (cap - ch)
    A2 = ch * (1.0 - beta) - 2.0 * dbeta * sh + d2beta * (cap - ch)
    return A, A1, A2


def build_surface(kind: str, m: int = 1) -> WarpedSurface:
    """
    Build one of the model surfaces.

    Torus family: A(x) = (1 + kappa sin^{2m}(pi x / 2))^{1/(2m)} with
    kappa = (2/pi)^{2m}, matching (1 + |x|^{2m})^{1/(2m)} to leading order at
    x = 0. Peanut: A(u) = cosh(u) near the neck blended into a constant cap.

    Args:
        kind (str): "torus", "peanut" or "flat"
        m (int): Degeneracy order (integer >= 1)

    Returns:
        WarpedSurface: The constructed surface

    Raises:
        InvalidParameterError: If kind is unknown or m is not an integer >= 1
    """
    if kind not in SURFACE_KINDS:
        raise InvalidParameterError(f"Neznámý typ plochy: {kind}")

    if isinstance(m, bool) or not float(m).is_integer() or m < 1:
        raise InvalidParameterError(
            f"Řád degenerace m musí být celé číslo >= 1, zadáno: {m}"
        )
    m = int(m)

    if kind == "torus":
        metadata = {"kappa": (2.0 / math.pi) ** (2 * m)}
    elif kind == "peanut":
        m = 1
        metadata = {
            "blend_start": PEANUT_BLEND_START,
            "blend_end": PEANUT_BLEND_END,
            "cap": math.cosh(1.0),
        }
    else:
        metadata = {}

    surface = WarpedSurface(kind=kind, m=m, metadata=metadata)
    logger.debug("Built %s surface m=%d, A in [%.6f, %.6f]", kind, m,
                 surface.min_warp, surface.max_warp)
    return surface


def warp_eval(surface: WarpedSurface, x):
    """Evaluate (A, A', A'') of a surface at x (reduced modulo the period)."""
    return surface.warp(x)


@dataclass(frozen=True)
class Profile:
    """
    Smooth even coefficient profile on the periodic x-cell.

    Shapes:
        "rise"   baseline + (plateau - baseline) * psi((|x| - inner)/(outer - inner))
        "fall"   plateau * (1 - psi((|x| - inner)/(outer - inner)))
        "window" plateau on inner <= |x| <= outer with ramps of width `ramp`
        "level"  plateau * psi((source(x)/level - 0.6)/0.4), a level-set cutoff

    Attributes:
        name (str): Coefficient name (a, W, chi, B1, phi)
        shape (str): One of the shapes above
        inner (float): Inner radius of the transition
        outer (float): Outer radius of the transition
        plateau (float): Maximum value
        baseline (float): Value near x = 0 for "rise" profiles
        ramp (float): Ramp width for "window" profiles
        smoothness (str): Step family
        source (Profile, optional): Profile a level-set cutoff is built from
        level (float): Level used by "level" profiles
    """

    name: str
    shape: str
    inner: float
    outer: float
    plateau: float = 1.0
    baseline: float = 0.0
    ramp: float = 0.0
    smoothness: str = "exp"
    source: Optional["Profile"] = None
    level: float = 1.0

    def __call__(self, x) -> np.ndarray:
        r = np.abs(reduce_periodic(x))
        if self.shape == "rise":
            psi = smooth_step((r - self.inner) / (self.outer - self.inner),
                              self.smoothness)[0]
            return self.baseline + (self.plateau - self.baseline) * psi
        if self.shape == "fall":
            psi = smooth_step((r - self.inner) / (self.outer - self.inner),
                              self.smoothness)[0]
            return self.plateau * (1.0 - psi)
        if self.shape == "window":
            up = smooth_step((r - (self.inner - self.ramp)) / self.ramp,
                             self.smoothness)[0]
            down = smooth_step((r - self.outer) / self.ramp, self.smoothness)[0]
            return self.plateau * up * (1.0 - down)
        # level-set cutoff of the source profile
        ratio = self.source(x) / self.level
        return self.plateau * smooth_step((ratio - 0.6) / 0.4, self.smoothness)[0]

    @property
    def support(self) -> Tuple[Tuple[float, float], ...]:
        """Closed x-intervals containing the support (symmetric pairs)."""
        if self.shape == "rise":
            if self.baseline > 0.0:
                return ((-1.0, 1.0),)
            return ((-1.0, -self.inner), (self.inner, 1.0))
        if self.shape == "fall":
            return ((-self.outer, self.outer),)
        if self.shape == "window":
            lo = self.inner - self.ramp
            hi = min(self.outer + self.ramp, 1.0)
            return ((-hi, -lo), (lo, hi))
        return self.source.support


def make_profile(
    name: str,
    inner: float = 0.0,
    outer: float = 1.0,
    plateau: float = 1.0,
    smoothness: str = "exp",
    baseline: float = 0.0,
    forbidden_radius: float = 0.0,
    ramp: float = 0.1,
    source: Optional[Profile] = None,
) -> Profile:
    """
    Build a coefficient profile with its support validated per name.

    Damping a and absorption W rise from zero on |x| <= inner to the plateau on
    |x| >= outer and must vanish on [-forbidden_radius, forbidden_radius];
    B1 equals 1 on |x| <= inner and vanishes for |x| >= outer; phi equals 1 on
    inner <= |x| <= outer (the support of grad B1) and vanishes near x = 0;
    chi is the level-set cutoff of the damping `source`: it equals 1 where
    a >= max a and is supported in {a > 0.6 max a}.

    Args:
        name (str): Profile name
        inner (float): Inner transition radius
        outer (float): Outer transition radius
        plateau (float): Plateau value (> 0)
        smoothness (str): Step family, "exp" (C-infinity) or "quintic" (C²)
        baseline (float): Value near x = 0 for a or W (> 0 only without trapping)
        forbidden_radius (float): Half-width of the zone a or W must avoid
        ramp (float): Ramp width for phi
        source (Profile, optional): Damping profile chi is built from

    Returns:
        Profile: Validated profile

    Raises:
        InvalidParameterError: For unknown names or inconsistent radii
        InvalidSupportError: If the support enters the forbidden zone
    """
    if name not in PROFILE_NAMES:
        raise InvalidParameterError(f"Neznámý profil: {name}")
    if smoothness not in SMOOTHNESS_KINDS:
        raise InvalidParameterError(f"Nepodporovaný typ hladkosti: {smoothness}")
    if plateau <= 0.0:
        raise InvalidParameterError("Hodnota plató musí být kladná")

    if name == "chi":
        if source is None:
            raise InvalidParameterError("Profil chi vyžaduje zdrojový profil tlumení")
        level = control_level(source)
        return Profile(name="chi", shape="level", inner=source.inner,
                       outer=source.outer, plateau=1.0, smoothness=smoothness,
                       source=source, level=level)

    if not 0.0 <= inner < outer <= 1.0:
        raise InvalidParameterError(
            f"Poloměry přechodu musí splňovat 0 <= inner < outer <= 1, "
            f"zadáno: {inner}, {outer}"
        )

    if name in ("a", "W"):
        if baseline < 0.0 or baseline > plateau:
            raise InvalidParameterError("Základní hodnota musí ležet v [0, plató]")
        if baseline > 0.0 and forbidden_radius > 0.0:
            raise InvalidSupportError(
                f"Profil {name} s kladnou základní hodnotou zasahuje "
                f"do zakázané zóny |x| <= {forbidden_radius}"
            )
        if inner < forbidden_radius:
            raise InvalidSupportError(
                f"Nosič profilu {name} (|x| >= {inner}) zasahuje "
                f"do zakázané zóny |x| <= {forbidden_radius}"
            )
        return Profile(name=name, shape="rise", inner=inner, outer=outer,
                       plateau=plateau, baseline=baseline, smoothness=smoothness)

    if name == "B1":
        return Profile(name="B1", shape="fall", inner=inner, outer=outer,
                       plateau=plateau, smoothness=smoothness)

    # phi
    if inner - ramp <= 0.0:
        raise InvalidSupportError("Nosič profilu phi nesmí obsahovat bod x = 0")
    return Profile(name="phi", shape="window", inner=inner, outer=outer,
                   plateau=plateau, ramp=ramp, smoothness=smoothness)


def control_level(damping: Profile, samples: int = 4097) -> float:
    """
    Level eps0 of the damping on the controlled region, found by sampling.

    Args:
        damping (Profile): Damping profile a
        samples (int): Number of sample points on the cell

    Returns:
        float: max a over the sample grid
    """
    x = np.linspace(-1.0, 1.0, samples)
    return float(np.max(damping(x)))


def damping_floor(damping: Profile, samples: int = 4097) -> float:
    """Minimum of the damping over the cell (positive iff no undamped set)."""
    x = np.linspace(-1.0, 1.0, samples)
    return float(np.min(damping(x)))


@dataclass(frozen=True)
class ProfileSet:
    """
    The coefficient profiles of one experiment.

    Attributes:
        a (Profile): Damping
        W (Profile): Complex absorbing potential
        chi (Profile): Control cutoff built from a
        B1 (Profile): Cutoff equal to 1 near the trapped set
        phi (Profile): Cutoff equal to 1 on the support of grad B1
    """

    a: Profile
    W: Profile
    chi: Profile
    B1: Profile
    phi: Profile

    def as_dict(self) -> Dict[str, Profile]:
        return {"a": self.a, "W": self.W, "chi": self.chi, "B1": self.B1,
                "phi": self.phi}


def build_profile_set(
    damping_inner: float = 0.3,
    damping_outer: float = 0.5,
    plateau: float = 1.0,
    baseline: float = 0.0,
    forbidden_radius: float = 0.1,
    cutoff_inner: float = 0.15,
    cutoff_outer: float = 0.25,
    smoothness: str = "exp",
) -> ProfileSet:
    """
    Build a consistent profile set.

    W has the same shape as a (absorption replacing damping); B1 is supported
    inside O1 = {|x| < damping_inner}; phi covers the transition of B1.

    Returns:
        ProfileSet: Validated profiles

    Raises:
        InvalidSupportError: If B1 is not supported inside O1
    """
    if baseline == 0.0 and cutoff_outer > damping_inner:
        raise InvalidSupportError(
            "Nosič B1 musí ležet v oblasti bez tlumení "
            f"(|x| < {damping_inner}), zadáno outer = {cutoff_outer}"
        )

    a = make_profile("a", damping_inner, damping_outer, plateau, smoothness,
                     baseline=baseline, forbidden_radius=forbidden_radius)
    W = make_profile("W", damping_inner, damping_outer, plateau, smoothness,
                     baseline=baseline, forbidden_radius=forbidden_radius)
    chi = make_profile("chi", smoothness=smoothness, source=a)
    B1 = make_profile("B1", cutoff_inner, cutoff_outer, 1.0, smoothness)
    ramp = 0.5 * cutoff_inner
    phi = make_profile("phi", cutoff_inner, cutoff_outer, 1.0, smoothness,
                       ramp=ramp)
    return ProfileSet(a=a, W=W, chi=chi, B1=B1, phi=phi)


def sample_geometry(
    surface: WarpedSurface, profiles: ProfileSet, n_points: int = 513
) -> pd.DataFrame:
    """
    Tabulate the warp and all profiles on a uniform grid of the cell.

    Args:
        surface (WarpedSurface): Surface
        profiles (ProfileSet): Coefficient profiles
        n_points (int): Number of samples including both endpoints

    Returns:
        pandas.DataFrame: Columns x, A, dA, d2A, a, W, chi, B1, phi
    """
    x = np.linspace(-1.0, 1.0, n_points)
    A, A1, A2 = surface.warp(x)
    table = {"x": x, "A": A, "dA": A1, "d2A": A2}
    for name, profile in profiles.as_dict().items():
        table[name] = profile(x)
    return pd.DataFrame(table)
