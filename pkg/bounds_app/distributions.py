"""
Parametric marginal distributions.

Every distribution exposes the left-continuous quantile, the cdf, quantile
integrals over sub-intervals of [0, 1], the expected shortfall and the
density-monotonicity class of its p-tails. Instances are immutable and all
methods are pure, so they can be shared between threads and processes.

Families:
    - Pareto(alpha, theta): cdf 1 - (theta / x) ** alpha on [theta, inf).
    - Uniform(a, b).
    - Gamma(shape, scale).
    - Weibull(scale, shape).
    - LogNormal(mu, sigma).
    - Binomial(m, q) and Bernoulli(q).
    - PointMass(x).
    - Exponential(rate).
    - PowerFunction(c): cdf x ** c on [0, 1].

Wrappers: AffineDistribution (shift and scale), TailDistribution (p-tail),
ReflectedDistribution (law of -X) and WeightedQuantileSum (weighted sum of
quantile functions, the comonotonic sum when all weights are 1).
"""
import enum
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
from scipy import integrate, optimize, special

logger = logging.getLogger(__name__)

QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-12
QUAD_LIMIT = 200
MAX_TAIL_PANELS = 60
INVERSION_XTOL = 1e-14
INVERSION_RTOL = 1e-12
INVERSION_MAXITER = 200
SNAP_STEPS = 64


class DensityClass(enum.Enum):
    """Monotonicity of a density on the support of a (tail) distribution."""

    DECREASING = 'decreasing'
    INCREASING = 'increasing'
    CONSTANT = 'constant'
    UNKNOWN = 'unknown'

    def flipped(self) -> 'DensityClass':
        """Class of the law of -X."""
        if self is DensityClass.DECREASING:
            return DensityClass.INCREASING
        if self is DensityClass.INCREASING:
            return DensityClass.DECREASING
        return self


class MarginClass(enum.Enum):
    """Joint density class of a margin vector."""

    ALL_DECREASING = 'allDecreasing'
    ALL_INCREASING = 'allIncreasing'
    MIXED = 'mixed'


DECREASING_LIKE = frozenset({DensityClass.DECREASING, DensityClass.CONSTANT})
INCREASING_LIKE = frozenset({DensityClass.INCREASING, DensityClass.CONSTANT})


def combine_classes(classes) -> DensityClass:
    """Class of a law whose quantile is a positive combination of the given ones."""
    classes = set(classes)
    if not classes or classes == {DensityClass.CONSTANT}:
        return DensityClass.CONSTANT
    if classes <= DECREASING_LIKE:
        return DensityClass.DECREASING
    if classes <= INCREASING_LIKE:
        return DensityClass.INCREASING
    return DensityClass.UNKNOWN


def check_level(p: float) -> None:
    """Reject probability levels outside the open unit interval."""
    if not 0 < p < 1:
        raise ValidationError(
            _('Probability level %(p)s is outside (0, 1).'),
            params={'p': p},
        )


def check_limits(a: float, b: float) -> None:
    """Reject integration limits that are not 0 <= a <= b <= 1."""
    if not 0 <= a <= b <= 1:
        raise ValidationError(
            _('Integration limits %(a)s, %(b)s must satisfy 0 <= a <= b <= 1.'),
            params={'a': a, 'b': b},
        )


def check_positive(value: float, name: str) -> None:
    """Reject parameters that are not strictly positive."""
    if not value > 0:
        raise ValidationError(
            _('Parameter %(name)s must be positive, got %(value)s.'),
            params={'name': name, 'value': value},
        )


def check_probability(value: float, name: str) -> None:
    """Reject parameters outside [0, 1]."""
    if not 0 <= value <= 1:
        raise ValidationError(
            _('Parameter %(name)s must lie in [0, 1], got %(value)s.'),
            params={'name': name, 'value': value},
        )


def invert_cdf(cdf, level: float, lower: float, upper: float) -> float:
    """
    Return inf{x : cdf(x) >= level} for x bracketed by [lower, upper].

    The caller guarantees cdf(upper) >= level and cdf(x) < level for x < lower.

    Args:
        cdf: Nondecreasing right-continuous function.
        level: Probability level.
        lower: Lower bracket.
        upper: Upper bracket.

    Returns:
        float: The right-continuous inverse at level.
    """
    if cdf(lower) >= level:
        return lower
    root = optimize.brentq(
        lambda x: cdf(x) - level, lower, upper,
        xtol=INVERSION_XTOL, rtol=INVERSION_RTOL, maxiter=INVERSION_MAXITER,
    )
    step = 2 * (INVERSION_XTOL + INVERSION_RTOL * abs(root))
    # brentq may stop just left of a jump
    while cdf(root) < level and root < upper:
        root = min(root + step, upper)
        step *= 2
    return root


class Distribution(ABC):
    """Base class for marginal distributions."""

    family = 'distribution'

    @abstractmethod
    def cdf(self, x: float) -> float:
        """Cumulative distribution function."""

    @abstractmethod
    def _quantile(self, u: float) -> float:
        """Left quantile for u in [0, 1]; u=0 and u=1 give the support endpoints."""

    @property
    @abstractmethod
    def mean(self) -> float:
        """Mean, math.inf when the right tail is not integrable."""

    @abstractmethod
    def tail_density_class(self, p: float) -> DensityClass:
        """Density class of the p-tail distribution, p in [0, 1)."""

    @property
    def tail_index(self):
        """Pareto-type tail index when known, used by numeric quadrature."""
        return None

    @property
    def lower_endpoint(self) -> float:
        """Left end of the support."""
        return self._quantile(0.0)

    @property
    def upper_endpoint(self) -> float:
        """Right end of the support."""
        return self._quantile(1.0)

    @property
    def has_finite_mean(self) -> bool:
        """Whether the mean is finite."""
        return math.isfinite(self.mean)

    @property
    def density_class(self) -> DensityClass:
        """Density class of the whole distribution."""
        return self.tail_density_class(0.0)

    def quantile(self, p: float) -> float:
        """
        Value-at-Risk at level p: inf{x : cdf(x) >= p}.

        Args:
            p: Probability level in (0, 1).

        Returns:
            float: The left quantile.
        """
        check_level(p)
        return self._right_continuous(self._quantile(p), p)

    def upper_quantile(self, p: float) -> float:
        """
        Upper Value-at-Risk at level p: inf{x : cdf(x) > p}.

        Args:
            p: Probability level in (0, 1).

        Returns:
            float: The upper quantile; larger than quantile(p) only on a cdf plateau.
        """
        check_level(p)
        return self._quantile(math.nextafter(p, 1.0))

    def quantiles(self, levels) -> np.ndarray:
        """Quantiles at an array of levels in [0, 1]."""
        return np.array([self._quantile(float(level)) for level in levels], dtype=float)

    def quantile_integral(self, a: float, b: float) -> float:
        """
        Integral of the quantile function over [a, b].

        Args:
            a: Lower limit in [0, 1].
            b: Upper limit in [a, 1].

        Returns:
            float: The integral, math.inf for a non-integrable upper tail.
        """
        check_limits(a, b)
        if a == b:
            return 0.0
        return self._integral(a, b)

    def expected_shortfall(self, p: float) -> float:
        """
        Expected Shortfall at level p, the average quantile above p.

        Args:
            p: Probability level in (0, 1).

        Returns:
            float: ES_p, math.inf for infinite-mean tails.
        """
        check_level(p)
        return self._integral(p, 1.0) / (1 - p)

    def numeric_quantile_integral(self, a: float, b: float) -> float:
        """
        Integral of the quantile over [a, b] by adaptive quadrature in u-space.

        Heavy tails with a known tail index use the substitution
        v = (1 - u) ** (1 - 1 / alpha); otherwise panels shrink geometrically
        toward u = 1.

        Args:
            a: Lower limit in [0, 1].
            b: Upper limit in [a, 1].

        Returns:
            float: The integral.
        """
        check_limits(a, b)
        if a == b:
            return 0.0
        if b < 1:
            return self._quad(a, b)
        alpha = self.tail_index
        if alpha is None:
            return self._quad_panels(a)
        if alpha <= 1:
            return math.inf
        return self._quad_substituted(a, alpha)

    def scaled(self, factor: float) -> 'Distribution':
        """Distribution F^factor of factor * X."""
        if factor < 0:
            raise ValidationError(
                _('Scale factor must be nonnegative, got %(factor)s.'),
                params={'factor': factor},
            )
        if factor == 0:
            return PointMass(0.0)
        if factor == 1:
            return self
        return AffineDistribution(self, 0.0, factor)

    def shifted(self, shift: float) -> 'Distribution':
        """Distribution T_shift(F) of X + shift."""
        if shift == 0:
            return self
        return AffineDistribution(self, shift, 1.0)

    def p_tail(self, p: float) -> 'Distribution':
        """Distribution of quantile(U) with U uniform on [p, 1]."""
        check_level(p)
        return TailDistribution(self, p)

    def negated(self) -> 'Distribution':
        """Distribution of -X."""
        return ReflectedDistribution(self)

    def _integral(self, a: float, b: float) -> float:
        return self.numeric_quantile_integral(a, b)

    def _right_continuous(self, x: float, p: float) -> float:
        for _step in range(SNAP_STEPS):
            if self.cdf(x) >= p:
                return x
            x = math.nextafter(x, math.inf)
        return x

    def _quad(self, a: float, b: float) -> float:
        value, _error = integrate.quad(
            self._quantile, a, b, epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT,
        )
        return value

    def _quad_substituted(self, a: float, alpha: float) -> float:
        exponent = 1 - 1 / alpha

        def integrand(v):
            return self._quantile(1 - v ** (1 / exponent)) * v ** (1 / exponent - 1) / exponent

        value, _error = integrate.quad(
            integrand, 0.0, (1 - a) ** exponent,
            epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT,
        )
        return value

    def _quad_panels(self, a: float) -> float:
        total = 0.0
        lower = a
        for _panel in range(MAX_TAIL_PANELS):
            upper = 1 - (1 - lower) / 2
            piece = self._quad(lower, upper)
            total += piece
            if abs(piece) < QUAD_ABS_TOL:
                return total
            lower = upper
        logger.warning('Quantile integral of %s did not settle near u=1', self)
        return math.inf


@dataclass(frozen=True)
class Pareto(Distribution):
    """Pareto distribution P_{alpha, theta}."""

    alpha: float
    theta: float = 1.0

    family = 'pareto'

    def __post_init__(self):
        check_positive(self.alpha, 'alpha')
        check_positive(self.theta, 'theta')

    def cdf(self, x):
        if x < self.theta:
            return 0.0
        return -math.expm1(self.alpha * math.log(self.theta / x))

    def _quantile(self, u):
        if u >= 1:
            return math.inf
        return self.theta * (1 - u) ** (-1 / self.alpha)

    def _integral(self, a, b):
        exponent = 1 - 1 / self.alpha
        if b >= 1:
            if self.alpha <= 1:
                return math.inf
            return self.theta * (1 - a) ** exponent / exponent
        if self.alpha == 1:
            return self.theta * (math.log1p(-a) - math.log1p(-b))
        return self.theta * ((1 - a) ** exponent - (1 - b) ** exponent) / exponent

    @property
    def mean(self):
        if self.alpha <= 1:
            return math.inf
        return self.alpha * self.theta / (self.alpha - 1)

    @property
    def tail_index(self):
        return self.alpha

    def tail_density_class(self, p):
        return DensityClass.DECREASING

    def scaled(self, factor):
        if factor > 0:
            return Pareto(self.alpha, self.theta * factor)
        return super().scaled(factor)

    def p_tail(self, p):
        check_level(p)
        return Pareto(self.alpha, self.theta * (1 - p) ** (-1 / self.alpha))


@dataclass(frozen=True)
class Uniform(Distribution):
    """Uniform distribution on [a, b]."""

    a: float
    b: float

    family = 'uniform'

    def __post_init__(self):
        if not self.b > self.a:
            raise ValidationError(
                _('Uniform bounds need b > a, got a=%(a)s, b=%(b)s.'),
                params={'a': self.a, 'b': self.b},
            )

    def cdf(self, x):
        return min(1.0, max(0.0, (x - self.a) / (self.b - self.a)))

    def _quantile(self, u):
        return self.a + (self.b - self.a) * u

    def _integral(self, a, b):
        return self.a * (b - a) + (self.b - self.a) * (b * b - a * a) / 2

    @property
    def mean(self):
        return (self.a + self.b) / 2

    def tail_density_class(self, p):
        return DensityClass.CONSTANT

    def scaled(self, factor):
        if factor > 0:
            return Uniform(self.a * factor, self.b * factor)
        return super().scaled(factor)

    def shifted(self, shift):
        return Uniform(self.a + shift, self.b + shift)

    def p_tail(self, p):
        check_level(p)
        return Uniform(self._quantile(p), self.b)


@dataclass(frozen=True)
class Exponential(Distribution):
    """Exponential distribution with the given rate."""

    rate: float

    family = 'exponential'

    def __post_init__(self):
        check_positive(self.rate, 'rate')

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return -math.expm1(-self.rate * x)

    def _quantile(self, u):
        if u >= 1:
            return math.inf
        return -math.log1p(-u) / self.rate

    def _integral(self, a, b):
        return (self._antiderivative(b) - self._antiderivative(a)) / self.rate

    @staticmethod
    def _antiderivative(u):
        rest = 1 - u
        return float(special.xlogy(rest, rest)) - rest

    @property
    def mean(self):
        return 1 / self.rate

    def tail_density_class(self, p):
        return DensityClass.DECREASING

    def scaled(self, factor):
        if factor > 0:
            return Exponential(self.rate / factor)
        return super().scaled(factor)


@dataclass(frozen=True)
class Gamma(Distribution):
    """Gamma distribution Gamma(shape, scale)."""

    shape: float
    scale: float = 1.0

    family = 'gamma'

    def __post_init__(self):
        check_positive(self.shape, 'shape')
        check_positive(self.scale, 'scale')

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return float(special.gammainc(self.shape, x / self.scale))

    def _quantile(self, u):
        if u >= 1:
            return math.inf
        return self.scale * float(special.gammaincinv(self.shape, u))

    def _integral(self, a, b):
        upper = math.inf if b >= 1 else self._quantile(b) / self.scale
        lower = self._quantile(a) / self.scale
        survival = special.gammaincc(self.shape + 1, [lower, upper])
        return self.shape * self.scale * float(survival[0] - survival[1])

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def mode(self) -> float:
        """Mode of the density (0 when shape <= 1)."""
        return max(0.0, (self.shape - 1) * self.scale)

    def tail_density_class(self, p):
        if self.shape <= 1 or self._quantile(p) >= self.mode:
            return DensityClass.DECREASING
        return DensityClass.UNKNOWN

    def scaled(self, factor):
        if factor > 0:
            return Gamma(self.shape, self.scale * factor)
        return super().scaled(factor)


@dataclass(frozen=True)
class Weibull(Distribution):
    """Weibull distribution Weibull(scale, shape)."""

    scale: float
    shape: float

    family = 'weibull'

    def __post_init__(self):
        check_positive(self.scale, 'scale')
        check_positive(self.shape, 'shape')

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return -math.expm1(-(x / self.scale) ** self.shape)

    def _quantile(self, u):
        if u >= 1:
            return math.inf
        return self.scale * (-math.log1p(-u)) ** (1 / self.shape)

    def _integral(self, a, b):
        order = 1 + 1 / self.shape
        upper = math.inf if b >= 1 else -math.log1p(-b)
        survival = special.gammaincc(order, [-math.log1p(-a), upper])
        return self.scale * math.gamma(order) * float(survival[0] - survival[1])

    @property
    def mean(self):
        return self.scale * math.gamma(1 + 1 / self.shape)

    @property
    def mode(self) -> float:
        """Mode of the density (0 when shape <= 1)."""
        if self.shape <= 1:
            return 0.0
        return self.scale * ((self.shape - 1) / self.shape) ** (1 / self.shape)

    def tail_density_class(self, p):
        if self.shape <= 1 or self._quantile(p) >= self.mode:
            return DensityClass.DECREASING
        return DensityClass.UNKNOWN

    def scaled(self, factor):
        if factor > 0:
            return Weibull(self.scale * factor, self.shape)
        return super().scaled(factor)


@dataclass(frozen=True)
class LogNormal(Distribution):
    """Log-normal distribution of exp(mu + sigma * Z)."""

    mu: float
    sigma: float

    family = 'lognormal'

    def __post_init__(self):
        check_positive(self.sigma, 'sigma')

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return float(special.ndtr((math.log(x) - self.mu) / self.sigma))

    def _quantile(self, u):
        if u <= 0:
            return 0.0
        if u >= 1:
            return math.inf
        return math.exp(self.mu + self.sigma * float(special.ndtri(u)))

    def _integral(self, a, b):
        shifted = special.ndtr(self.sigma - special.ndtri([a, b]))
        return math.exp(self.mu + self.sigma ** 2 / 2) * float(shifted[0] - shifted[1])

    @property
    def mean(self):
        return math.exp(self.mu + self.sigma ** 2 / 2)

    @property
    def mode(self) -> float:
        """Mode of the density."""
        return math.exp(self.mu - self.sigma ** 2)

    def tail_density_class(self, p):
        if self._quantile(p) >= self.mode:
            return DensityClass.DECREASING
        return DensityClass.UNKNOWN

    def scaled(self, factor):
        if factor > 0:
            return LogNormal(self.mu + math.log(factor), self.sigma)
        return super().scaled(factor)


@dataclass(frozen=True)
class PowerFunction(Distribution):
    """Power-function distribution with cdf x ** c on [0, 1]."""

    c: float

    family = 'power'

    def __post_init__(self):
        check_positive(self.c, 'c')

    def cdf(self, x):
        if x <= 0:
            return 0.0
        if x >= 1:
            return 1.0
        return x ** self.c

    def _quantile(self, u):
        return u ** (1 / self.c)

    def _integral(self, a, b):
        order = 1 + 1 / self.c
        return (b ** order - a ** order) / order

    @property
    def mean(self):
        return self.c / (self.c + 1)

    def tail_density_class(self, p):
        if self.c < 1:
            return DensityClass.DECREASING
        if self.c > 1:
            return DensityClass.INCREASING
        return DensityClass.CONSTANT


@dataclass(frozen=True)
class PointMass(Distribution):
    """Degenerate distribution at x."""

    x: float

    family = 'pointmass'

    def cdf(self, x):
        return 1.0 if x >= self.x else 0.0

    def _quantile(self, u):
        return self.x

    def _integral(self, a, b):
        return self.x * (b - a)

    @property
    def mean(self):
        return self.x

    def tail_density_class(self, p):
        return DensityClass.CONSTANT

    def scaled(self, factor):
        super().scaled(factor)
        return PointMass(self.x * factor)

    def shifted(self, shift):
        return PointMass(self.x + shift)

    def p_tail(self, p):
        check_level(p)
        return self

    def negated(self):
        return PointMass(-self.x)


class LatticeDistribution(Distribution):
    """Binomial-type distribution on {0, ..., m} with a step quantile."""

    m = 1
    q = 0.5

    @cached_property
    def _plateaus(self) -> np.ndarray:
        levels = special.bdtr(np.arange(self.m + 1), self.m, self.q)
        levels[-1] = 1.0
        return levels

    def cdf(self, x):
        if x < 0:
            return 0.0
        if x >= self.m:
            return 1.0
        return float(self._plateaus[int(math.floor(x))])

    def _quantile(self, u):
        if u <= 0:
            return 0.0
        return float(min(int(np.searchsorted(self._plateaus, u, side='left')), self.m))

    def _integral(self, a, b):
        total = 0.0
        previous = 0.0
        for k, level in enumerate(self._plateaus):
            overlap = min(b, level) - max(a, previous)
            if overlap > 0:
                total += k * overlap
            previous = level
        return total

    @property
    def mean(self):
        return self.m * self.q

    def tail_density_class(self, p):
        return DensityClass.UNKNOWN


@dataclass(frozen=True)
class Binomial(LatticeDistribution):
    """Binomial distribution with m trials and success probability q."""

    m: int
    q: float

    family = 'binomial'

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError(
                _('Binomial trials must be a positive integer, got %(m)s.'),
                params={'m': self.m},
            )
        check_probability(self.q, 'q')


@dataclass(frozen=True)
class Bernoulli(LatticeDistribution):
    """Bernoulli distribution B_q."""

    q: float

    family = 'bernoulli'

    def __post_init__(self):
        check_probability(self.q, 'q')


@dataclass(frozen=True)
class AffineDistribution(Distribution):
    """Distribution T_shift(F^scale) of shift + scale * X."""

    base: Distribution
    shift: float = 0.0
    scale: float = 1.0

    family = 'affine'

    def __post_init__(self):
        check_positive(self.scale, 'scale')

    def cdf(self, x):
        return self.base.cdf((x - self.shift) / self.scale)

    def _quantile(self, u):
        return self.shift + self.scale * self.base._quantile(u)

    def _integral(self, a, b):
        return self.shift * (b - a) + self.scale * self.base._integral(a, b)

    def quantile(self, p):
        check_level(p)
        return self.shift + self.scale * self.base.quantile(p)

    @property
    def mean(self):
        return self.shift + self.scale * self.base.mean

    @property
    def tail_index(self):
        return self.base.tail_index

    def tail_density_class(self, p):
        return self.base.tail_density_class(p)

    def scaled(self, factor):
        if factor > 0:
            return AffineDistribution(self.base, self.shift * factor, self.scale * factor)
        return super().scaled(factor)

    def shifted(self, shift):
        return AffineDistribution(self.base, self.shift + shift, self.scale)


@dataclass(frozen=True)
class TailDistribution(Distribution):
    """p-tail distribution: law of base.quantile(U), U uniform on [level, 1]."""

    base: Distribution
    level: float

    family = 'tail'

    def __post_init__(self):
        check_level(self.level)

    def _lift(self, u: float) -> float:
        return self.level + (1 - self.level) * u

    def cdf(self, x):
        return max(0.0, (self.base.cdf(x) - self.level) / (1 - self.level))

    def _quantile(self, u):
        return self.base._quantile(self._lift(u))

    def _integral(self, a, b):
        return self.base._integral(self._lift(a), self._lift(b)) / (1 - self.level)

    @property
    def mean(self):
        return self.base._integral(self.level, 1.0) / (1 - self.level)

    @property
    def tail_index(self):
        return self.base.tail_index

    def tail_density_class(self, p):
        return self.base.tail_density_class(self._lift(p))

    def p_tail(self, p):
        check_level(p)
        return TailDistribution(self.base, self._lift(p))


@dataclass(frozen=True)
class ReflectedDistribution(Distribution):
    """Law of -X for a continuous base distribution."""

    base: Distribution

    family = 'reflected'

    def cdf(self, x):
        return 1 - self.base.cdf(-x)

    def _quantile(self, u):
        return -self.base._quantile(1 - u)

    def _integral(self, a, b):
        return -self.base._integral(1 - b, 1 - a)

    @property
    def mean(self):
        return -self.base.mean

    def tail_density_class(self, p):
        # the p-tail of -X mirrors the lower part of X, so only a class that
        # holds on the whole support of X carries over
        return self.base.density_class.flipped()

    def negated(self):
        return self.base


@dataclass(frozen=True)
class WeightedQuantileSum(Distribution):
    """
    Law whose quantile is sum_j w_j * quantile_j.

    With unit weights this is the comonotonic sum F_1 (+) ... (+) F_n.
    """

    components: tuple

    family = 'quantile_sum'

    def __post_init__(self):
        if not self.components:
            raise ValidationError(_('A quantile sum needs at least one component.'))
        for weight, _component in self.components:
            if weight < 0:
                raise ValidationError(
                    _('Quantile weights must be nonnegative, got %(weight)s.'),
                    params={'weight': weight},
                )

    @property
    def active(self) -> tuple:
        """Components with positive weight."""
        return tuple((weight, comp) for weight, comp in self.components if weight > 0)

    def cdf(self, x):
        if x < self._quantile(0.0):
            return 0.0
        top = math.nextafter(1.0, 0.0)
        if x >= self._quantile(top):
            return 1.0 if x >= self._quantile(1.0) else top
        # last level whose quantile is <= x, so plateaus give the right-continuous value
        return optimize.bisect(
            lambda u: 1.0 if self._quantile(u) > x else -1.0, 0.0, top,
            xtol=INVERSION_XTOL, rtol=INVERSION_RTOL, maxiter=INVERSION_MAXITER,
        )

    def _quantile(self, u):
        return math.fsum(weight * comp._quantile(u) for weight, comp in self.active)

    def quantiles(self, levels):
        total = np.zeros(len(levels))
        for weight, comp in self.active:
            total += weight * comp.quantiles(levels)
        return total

    def _integral(self, a, b):
        return math.fsum(weight * comp._integral(a, b) for weight, comp in self.active)

    def _right_continuous(self, x, p):
        return x

    @property
    def mean(self):
        return math.fsum(weight * comp.mean for weight, comp in self.active)

    @property
    def tail_index(self):
        indices = [comp.tail_index for _weight, comp in self.active]
        if any(index is None for index in indices):
            return None
        return min(indices)

    def tail_density_class(self, p):
        return combine_classes(comp.tail_density_class(p) for _weight, comp in self.active)


def comonotonic_sum(margins: 'MarginVector') -> Distribution:
    """
    Distribution F_1 (+) ... (+) F_n whose quantile is the sum of the margins' quantiles.

    Args:
        margins: Margin vector.

    Returns:
        Distribution: Closed-form family when recognisable, otherwise a quantile sum.
    """
    kinds = {type(margin) for margin in margins}
    if kinds == {Pareto} and len({margin.alpha for margin in margins}) == 1:
        return Pareto(margins[0].alpha, math.fsum(margin.theta for margin in margins))
    if kinds == {PointMass}:
        return PointMass(math.fsum(margin.x for margin in margins))
    if kinds == {Uniform}:
        return Uniform(
            math.fsum(margin.a for margin in margins), math.fsum(margin.b for margin in margins),
        )
    return WeightedQuantileSum(tuple((1.0, margin) for margin in margins))


@dataclass(frozen=True)
class MarginVector:
    """Ordered tuple F = (F_1, ..., F_n) of marginal distributions, n >= 2."""

    margins: tuple

    def __post_init__(self):
        object.__setattr__(self, 'margins', tuple(self.margins))
        if len(self.margins) < 2:
            raise ValidationError(
                _('A margin vector needs at least two margins, got %(n)s.'),
                params={'n': len(self.margins)},
            )
        for margin in self.margins:
            if not isinstance(margin, Distribution):
                raise ValidationError(
                    _('Margin %(margin)r is not a distribution.'), params={'margin': margin},
                )

    def __len__(self):
        return len(self.margins)

    def __iter__(self):
        return iter(self.margins)

    def __getitem__(self, index):
        return self.margins[index]

    @property
    def n(self) -> int:
        """Number of margins."""
        return len(self.margins)

    @property
    def means(self) -> tuple:
        """Margin means."""
        return tuple(margin.mean for margin in self.margins)

    def permuted(self, order) -> 'MarginVector':
        """Margins reordered by the index sequence order."""
        return MarginVector(tuple(self.margins[index] for index in order))

    def tail_density_class(self, p: float) -> MarginClass:
        """Whether all p-tails are in M_D, all in M_I, or neither."""
        classes = {margin.tail_density_class(p) for margin in self.margins}
        if classes <= DECREASING_LIKE:
            return MarginClass.ALL_DECREASING
        if classes <= INCREASING_LIKE:
            return MarginClass.ALL_INCREASING
        return MarginClass.MIXED

    @property
    def density_class(self) -> MarginClass:
        """Joint density class of the full margins."""
        return self.tail_density_class(0.0)


FAMILIES = {
    'pareto': (Pareto, ('alpha', 'theta')),
    'uniform': (Uniform, ('a', 'b')),
    'gamma': (Gamma, ('shape', 'scale')),
    'weibull': (Weibull, ('scale', 'shape')),
    'lognormal': (LogNormal, ('mu', 'sigma')),
    'binomial': (Binomial, ('m', 'q')),
    'bernoulli': (Bernoulli, ('q',)),
    'pointmass': (PointMass, ('x',)),
    'exponential': (Exponential, ('rate',)),
    'power': (PowerFunction, ('c',)),
}


def build_distribution(family: str, params: dict, shift: float = 0.0, scale: float = 1.0):
    """
    Build a distribution from the config grammar.

    Args:
        family: Family name, a key of FAMILIES.
        params: Family parameters by name.
        shift: Additive location x of T_x.
        scale: Multiplicative factor lambda of F^lambda.

    Returns:
        Distribution: The (possibly shifted and scaled) distribution.
    """
    if family not in FAMILIES:
        raise ValidationError(_('Unknown family %(family)s.'), params={'family': family})
    cls, names = FAMILIES[family]
    missing = [name for name in names if params.get(name) is None]
    if missing:
        raise ValidationError(
            _('Family %(family)s needs parameters %(missing)s.'),
            params={'family': family, 'missing': ', '.join(missing)},
        )
    distribution = cls(**{name: params[name] for name in names})
    return distribution.scaled(scale).shifted(shift)
