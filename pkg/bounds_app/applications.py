"""
Applications of the worst-case bounds.

    - Merging constants a_{r,w} of weighted r-means of p-values.
    - Worst-case risk of a portfolio of identically distributed losses.
    - Joint mixability checks for Bernoulli tuples and decreasing densities.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from bounds_app.bounds import (
    BoundResult,
    OptimizerOptions,
    essential_infimum_worst_case,
    worst_case_es_result,
    worst_case_var,
)
from bounds_app.distributions import (
    DECREASING_LIKE,
    Distribution,
    Exponential,
    MarginVector,
    Pareto,
    PointMass,
    PowerFunction,
    check_probability,
)
from bounds_app.mixtures import WeightVector

logger = logging.getLogger(__name__)

CROSS_CHECK_LEVELS = (1e-3, 1e-4, 1e-5)
CROSS_CHECK_RTOL = 1e-3
INTEGER_TOL = 1e-12
MEAN_LENGTH_TOL = 1e-12


class DivergentBoundError(ValidationError):
    """Raised when a worst-case essential infimum is infinite."""


@dataclass(frozen=True)
class PMergeSpec:
    """Exponent r and simplex weights w of the merging function a (sum w_i p_i^r)^(1/r)."""

    r: float
    weights: WeightVector

    def __post_init__(self):
        if not isinstance(self.weights, WeightVector):
            object.__setattr__(self, 'weights', WeightVector(tuple(self.weights), simplex=True))
        elif not self.weights.simplex:
            object.__setattr__(self, 'weights', WeightVector(self.weights.weights, simplex=True))
        if not math.isfinite(self.r):
            raise ValidationError(
                _('Only finite exponents are supported, got %(r)s.'), params={'r': self.r},
            )

    @classmethod
    def symmetric(cls, r: float, n: int) -> 'PMergeSpec':
        """Equal weights 1/n."""
        return cls(r, WeightVector((1 / n,) * n, simplex=True))

    def margin(self, weight: float) -> Distribution:
        """
        Law of the i-th transformed p-value.

        r < 0: w P^r is Pareto(-1/r, w).
        r = 0: w log(1/P) is w Exp(1).
        r > 0: -w P^r, the negated power-function law with c = 1/r scaled by w.
        """
        if weight == 0:
            return PointMass(0.0)
        if self.r < 0:
            return Pareto(-1 / self.r, weight)
        if self.r == 0:
            return Exponential(1.0).scaled(weight)
        return PowerFunction(1 / self.r).scaled(weight).negated()

    def margins(self) -> tuple:
        """Transformed laws with positive weight."""
        return tuple(self.margin(weight) for weight in self.weights if weight > 0)

    def constant(self, inner: float) -> float:
        """Map the worst-case essential infimum of the transformed sum to a_{r,w}."""
        if self.r < 0:
            return inner ** (-1 / self.r)
        if self.r == 0:
            return math.exp(inner)
        return (-inner) ** (-1 / self.r)


@dataclass(frozen=True)
class MergeConstant:
    """Merging constant with its small-p cross-check."""

    value: float
    inner: float
    extrapolated: float = None
    consistent: bool = True
    result: BoundResult = None

    def as_dict(self) -> dict:
        """JSON-friendly representation."""
        return {
            'value': self.value,
            'inner': self.inner,
            'extrapolated': self.extrapolated,
            'consistent': self.consistent,
            'converged': self.result.converged if self.result is not None else True,
        }


def _extrapolate_to_zero(margins: MarginVector, opts: OptimizerOptions) -> float:
    levels = np.array(CROSS_CHECK_LEVELS)
    values = np.array([worst_case_var(level, margins, opts).value for level in levels])
    _slope, intercept = np.polyfit(levels, values, 1)
    return float(intercept)


def p_merge_constant(
    spec: PMergeSpec, opts: OptimizerOptions = None, cross_check: bool = True,
) -> MergeConstant:
    """
    Merging constant a_{r,w} from the worst-case essential infimum.

    Args:
        spec: Exponent and weights.
        opts: Optimizer budget.
        cross_check: Also extrapolate the worst-case VaR from small levels to 0.

    Returns:
        MergeConstant: The constant; consistent is False when the two routes
        disagree by more than 1e-3 relative.

    Raises:
        DivergentBoundError: When the inner worst-case value is infinite.
    """
    opts = opts or OptimizerOptions()
    margins = spec.margins()
    if len(margins) == 1:
        inner = margins[0].lower_endpoint
        return MergeConstant(value=spec.constant(inner), inner=inner)
    margins = MarginVector(margins)
    result = essential_infimum_worst_case(margins, opts)
    if not math.isfinite(result.value):
        raise DivergentBoundError(
            _('The worst-case essential infimum diverges for r=%(r)s.'), params={'r': spec.r},
        )
    value = spec.constant(result.value)
    if not cross_check:
        return MergeConstant(value=value, inner=result.value, result=result)
    extrapolated = _extrapolate_to_zero(margins, opts)
    gap = abs(extrapolated - result.value) / max(1.0, abs(result.value))
    consistent = gap <= CROSS_CHECK_RTOL
    if not consistent:
        logger.warning(
            'Merging constant for r=%s: p=0 value %s and extrapolation %s disagree',
            spec.r, result.value, extrapolated,
        )
    return MergeConstant(
        value=value,
        inner=result.value,
        extrapolated=extrapolated,
        consistent=consistent,
        result=result,
    )


def portfolio_margins(distribution: Distribution, weights) -> MarginVector:
    """Margins (F^{w_1}, ..., F^{w_n}) of a weighted portfolio of F-distributed losses."""
    weights = weights if isinstance(weights, WeightVector) else WeightVector(tuple(weights))
    return MarginVector(tuple(distribution.scaled(weight) for weight in weights))


def portfolio_worst_case(
    p: float,
    distribution: Distribution,
    weights,
    opts: OptimizerOptions = None,
    measure: str = 'var',
) -> BoundResult:
    """
    Worst-case VaR_p or ES_p of sum_i w_i X_i with X_i ~ F.

    Args:
        p: Probability level in (0, 1).
        distribution: Common law F.
        weights: Nonnegative portfolio weights.
        opts: Optimizer budget for the VaR path.
        measure: 'var' or 'es'.

    Returns:
        BoundResult: The worst-case value.
    """
    margins = portfolio_margins(distribution, weights)
    if measure == 'es':
        return worst_case_es_result(p, margins)
    if measure == 'var':
        return worst_case_var(p, margins, opts)
    raise ValidationError(_('Unknown risk measure %(measure)s.'), params={'measure': measure})


@dataclass(frozen=True)
class JMCertificate:
    """Joint mixability verdict, with arcs (start, length) on the unit circle when feasible."""

    feasible: bool
    center: float = None
    construction: tuple = None

    def coverage(self, u: float) -> int:
        """Number of arcs covering u in [0, 1)."""
        if not self.construction:
            return 0
        return sum(1 for start, length in self.construction if (u - start) % 1.0 < length)

    def breakpoints(self) -> tuple:
        """Sorted arc endpoints in [0, 1), 0 included."""
        points = {0.0}
        for start, length in self.construction or ():
            points.add(start % 1.0)
            points.add((start + length) % 1.0)
        return tuple(sorted(points))

    def coverage_is_constant(self) -> bool:
        """Whether every point of the circle is covered exactly center times."""
        if not self.feasible or self.construction is None:
            return False
        points = self.breakpoints() + (1.0,)
        midpoints = [(left + right) / 2 for left, right in zip(points, points[1:]) if right > left]
        return all(self.coverage(point) == self.center for point in midpoints)


def bernoulli_jm(probabilities) -> JMCertificate:
    """
    Joint mixability of Bernoulli laws B_{q_1}, ..., B_{q_n}.

    The tuple is jointly mixable iff sum q_i is an integer k. Arcs of lengths
    q_i laid end to end from 0 around the unit circle then cover every point
    exactly k times; X_i is the indicator that a uniform point lies on arc i.

    Args:
        probabilities: Bernoulli parameters in [0, 1].

    Returns:
        JMCertificate: Verdict, center and arc construction.
    """
    probabilities = tuple(float(value) for value in probabilities)
    for value in probabilities:
        check_probability(value, 'q')
    total = math.fsum(probabilities)
    center = round(total)
    if abs(total - center) > INTEGER_TOL:
        return JMCertificate(feasible=False)
    arcs = []
    position = 0.0
    for value in probabilities:
        arcs.append((position % 1.0, value))
        position += value
    return JMCertificate(feasible=True, center=center, construction=tuple(arcs))


def mean_length_jm_check(margins: MarginVector) -> bool:
    """
    Mean-length condition for margins with decreasing densities on bounded supports.

    Supports [l_i, h_i] are shifted to [0, h_i - l_i]; the condition reads
    sum (mean_i - l_i) >= max (h_i - l_i).

    Args:
        margins: Margins with bounded support and decreasing or constant density.

    Returns:
        bool: Whether the aggregation set contains a point mass.
    """
    excess = []
    lengths = []
    for margin in margins:
        lower, upper = margin.lower_endpoint, margin.upper_endpoint
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ValidationError(
                _('Margin %(margin)s needs a bounded support.'), params={'margin': margin},
            )
        if margin.density_class not in DECREASING_LIKE:
            raise ValidationError(
                _('Margin %(margin)s needs a decreasing density.'), params={'margin': margin},
            )
        excess.append(margin.mean - lower)
        lengths.append(upper - lower)
    return math.fsum(excess) >= max(lengths) - MEAN_LENGTH_TOL
