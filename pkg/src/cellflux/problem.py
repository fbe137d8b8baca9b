"""Model definition: nonlinearity, domain geometry, and closed-form threshold constants.

The simulated equation is the nondimensionalized conservation law

    c_t = div(grad c - c * A(t)),      A(t) = integral_{boundary} f(c) nu dsigma,

with zero total flux through the boundary.  Everything in this module is pure
arithmetic on the model parameters; nothing here touches a mesh or a solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

KINDS = ("signed_power", "negative_power", "sublinear_power", "saturating")
GEOMETRIES = ("interval", "cylinder")


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Structurally invalid configuration (bad kind, bad geometry, bad counts)."""


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^d in R^{d+1}; sigma_0 = 2."""
    if d < 0:
        raise ConfigError(f"sphere dimension must be >= 0, got {d}")
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


def ball_volume(d: int, radius: float) -> float:
    """Volume of the d-dimensional ball of given radius."""
    return sphere_area(d - 1) * radius**d / d


@dataclass(frozen=True)
class NonlinearitySpec:
    """Boundary production law f.

    kind:
      signed_power    f(s) = |s|^(m-1) s        (m >= 1, defined on all of R)
      negative_power  f(s) = -s^m               (m >= 1, s >= 0)
      sublinear_power f(s) = s^m                (0 < m < 1, s >= 0)
      saturating      f(s) = level*s/(s+alpha)
    """

    kind: str
    m: float = 1.0
    level: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown nonlinearity kind {self.kind!r}")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ConfigError(f"exponent m must be positive, got {self.m}")
        if self.kind == "sublinear_power" and not self.m < 1:
            raise ConfigError("sublinear_power requires 0 < m < 1")
        if self.kind in ("signed_power", "negative_power") and self.m < 1:
            raise ConfigError(f"{self.kind} requires m >= 1")
        if self.kind == "saturating" and not (self.level > 0 and self.alpha > 0):
            raise ConfigError("saturating requires positive level and alpha")


def eval_f(spec: NonlinearitySpec, s: float) -> float:
    """Evaluate f(s).  Raises DomainError for negative s when f is only defined on s >= 0."""
    if not math.isfinite(s):
        raise DomainError(f"non-finite argument {s}")
    k = spec.kind
    if k == "signed_power":
        return math.copysign(abs(s) ** spec.m, s)
    if s < 0.0:
        raise DomainError(f"{k} is defined on s >= 0, got s = {s}")
    if k == "negative_power":
        return -(s**spec.m)
    if k == "sublinear_power":
        return s**spec.m
    # saturating
    return spec.level * s / (s + spec.alpha) if s > 0.0 else 0.0


@dataclass(frozen=True)
class DomainSpec:
    """Interval (0, L) or finite cylinder (0, L) x B'_R in ambient dimension n."""

    geometry: str
    L: float
    R: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigError(f"length L must be positive, got {self.L}")
        if self.geometry == "cylinder":
            if self.R is None or not self.R > 0:
                raise ConfigError("cylinder requires R > 0")
            if self.n is None or self.n < 2:
                raise ConfigError("cylinder requires ambient dimension n >= 2")

    @property
    def cross_section_volume(self) -> float:
        """|B'_R|, the (n-1)-ball volume; 1 for the interval."""
        if self.geometry == "interval":
            return 1.0
        return ball_volume(self.n - 1, self.R)

    @property
    def volume(self) -> float:
        return self.L * self.cross_section_volume


@dataclass(frozen=True)
class ProblemSpec:
    """Full model: f, the domain, and the velocity-report parameters.

    chi and a_frac enter only the reported cell velocity u(t); the simulated
    dynamics is the nondimensionalized equation and never sees them.
    """

    nonlinearity: NonlinearitySpec
    domain: DomainSpec
    chi: float = 1.0
    a_frac: float = 1.0

    def __post_init__(self):
        if self.chi < 0:
            raise ConfigError(f"chi must be >= 0, got {self.chi}")
        if not 0.0 <= self.a_frac <= 1.0:
            raise ConfigError(f"a_frac must lie in [0, 1], got {self.a_frac}")

    @property
    def m(self) -> float:
        return self.nonlinearity.m


def nondimensionalize(chi: float, a_frac: float, volume: float, m: float) -> float:
    """Concentration scale lambda with lambda^m = volume/(a_frac*chi).

    Maps a physical concentration to the canonical variable of the
    nondimensionalized equation (power-law f).
    """
    for name, v in (("chi", chi), ("a_frac", a_frac), ("volume", volume), ("m", m)):
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"{name} must be strictly positive, got {v}")
    return (volume / (a_frac * chi)) ** (1.0 / m)


@dataclass(frozen=True)
class ThresholdReport:
    """Closed-form constants governing the global-vs-blow-up dichotomies.

    Entries that do not apply to the given (m, M, phi0) are None:
    ell/K exist only for m > 1, the finite blow-up time bound only for
    m = 1 with M > 1 and phi0 < M L / 2, and the Lyapunov constant only
    for exponents p with p > 1 and m <= p < 2m.
    """

    N0: float
    critical_mass_m1: float
    half_moment_bound: float
    ell: float | None
    K: float | None
    Tstar_upper_bound: float
    K0_lyapunov: float | None
    small_data_radius: float | None


def thresholds(
    spec: ProblemSpec,
    M: float,
    phi0: float = 0.0,
    p: float = 2.0,
    M0: float | None = None,
) -> ThresholdReport:
    """Evaluate every computable threshold for mass M and first moment phi0.

    For the cylinder branch of ell the caller must supply M0, the sup over the
    cross-section of the axial marginal of the initial data (this module does
    no quadrature).
    """
    if not M > 0:
        raise DomainError(f"mass must be positive, got {M}")
    if phi0 < 0:
        raise DomainError(f"first moment must be >= 0, got {phi0}")
    m = spec.m
    L = spec.domain.L

    N0 = m ** (-1.0 / m)
    half_moment = 0.5 * M * L

    ell = K = None
    if m > 1.0:
        # 2^{-(m+1)/(m-1)} M^{m/(m-1)} in the log domain; the exponents blow
        # up as m -> 1+ and a harmless overflow just drops this term from min
        lpw = (-(m + 1.0) * math.log(2.0) + m * math.log(M)) / (m - 1.0)
        pw = math.exp(lpw) if lpw < 700.0 else math.inf
        if spec.domain.geometry == "interval":
            ell = min(L / 2.0, pw)
        else:
            if M0 is None or not M0 > 0:
                raise DomainError("cylinder ell requires the caller-supplied M0 > 0")
            B = spec.domain.cross_section_volume
            ell = min(L / 2.0, M * L / (4.0 * B * M0), pw / B)
        K = 0.5 * ell * M

    Tstar = math.inf
    if m == 1.0 and M > 1.0 and phi0 < half_moment:
        Tstar = phi0 / ((M - 1.0) * (M - 2.0 * phi0 / L) / L)

    K0 = radius = None
    if p > 1.0 and m <= p < 2.0 * m:
        K0 = m / (p - 1.0) * spec.domain.volume ** ((p - m) / p)
        radius = K0 ** (-1.0 / m)

    return ThresholdReport(
        N0=N0,
        critical_mass_m1=1.0,
        half_moment_bound=half_moment,
        ell=ell,
        K=K,
        Tstar_upper_bound=Tstar,
        K0_lyapunov=K0,
        small_data_radius=radius,
    )
