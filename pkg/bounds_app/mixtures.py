"""Distribution mixtures LF and quantile mixtures L (x) F of a margin vector."""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from bounds_app.distributions import (
    Bernoulli,
    DensityClass,
    Distribution,
    MarginVector,
    Pareto,
    PointMass,
    WeightedQuantileSum,
    invert_cdf,
)

logger = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-12


class DoublyStochasticMatrix:
    """Square nonnegative matrix with unit row and column sums, stored read-only."""

    def __init__(self, entries):
        matrix = np.array(entries, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(
                _('A doubly stochastic matrix must be square, got shape %(shape)s.'),
                params={'shape': matrix.shape},
            )
        if matrix.shape[0] < 2:
            raise ValidationError(_('A doubly stochastic matrix needs n >= 2.'))
        if (matrix < -STOCHASTIC_TOL).any():
            raise ValidationError(_('Matrix entries must be nonnegative.'))
        rows = np.abs(matrix.sum(axis=1) - 1).max()
        columns = np.abs(matrix.sum(axis=0) - 1).max()
        if max(rows, columns) > STOCHASTIC_TOL:
            raise ValidationError(
                _('Row and column sums must equal 1, deviation %(deviation)s.'),
                params={'deviation': max(rows, columns)},
            )
        matrix = np.clip(matrix, 0.0, None)
        matrix.flags.writeable = False
        self.entries = matrix

    @classmethod
    def identity(cls, n: int) -> 'DoublyStochasticMatrix':
        """Identity matrix I_n."""
        return cls(np.eye(n))

    @classmethod
    def uniform(cls, n: int) -> 'DoublyStochasticMatrix':
        """Matrix (1/n)_{n x n}."""
        return cls(np.full((n, n), 1 / n))

    @classmethod
    def convex_identity_uniform(cls, a: float, n: int) -> 'DoublyStochasticMatrix':
        """Matrix a * I_n + (1 - a) * (1/n)_{n x n}."""
        if not 0 <= a <= 1:
            raise ValidationError(
                _('Mixing weight %(a)s is outside [0, 1].'), params={'a': a},
            )
        return cls(a * np.eye(n) + (1 - a) * np.full((n, n), 1 / n))

    @property
    def n(self) -> int:
        """Dimension."""
        return self.entries.shape[0]

    @property
    def rows(self) -> tuple:
        """Rows as tuples of floats."""
        return tuple(tuple(float(value) for value in row) for row in self.entries)

    def apply(self, vector) -> np.ndarray:
        """Matrix-vector product L @ vector."""
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.n,):
            raise ValidationError(
                _('Vector of length %(got)s does not match dimension %(n)s.'),
                params={'got': vector.shape, 'n': self.n},
            )
        return self.entries @ vector

    def is_permutation(self) -> bool:
        """Whether every row has a single unit entry."""
        return bool(np.isclose(self.entries.max(axis=1), 1.0, atol=STOCHASTIC_TOL).all())

    def __eq__(self, other):
        if not isinstance(other, DoublyStochasticMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return 'DoublyStochasticMatrix({0})'.format(self.rows)


@dataclass(frozen=True)
class WeightVector:
    """Vector of nonnegative weights; simplex=True additionally requires unit sum."""

    weights: tuple
    simplex: bool = False

    def __post_init__(self):
        weights = tuple(float(weight) for weight in self.weights)
        object.__setattr__(self, 'weights', weights)
        if not weights:
            raise ValidationError(_('A weight vector cannot be empty.'))
        if any(weight < 0 or math.isnan(weight) for weight in weights):
            raise ValidationError(
                _('Weights must be nonnegative, got %(weights)s.'), params={'weights': weights},
            )
        if self.simplex and abs(math.fsum(weights) - 1) > STOCHASTIC_TOL:
            raise ValidationError(
                _('Simplex weights must sum to 1, got %(total)s.'),
                params={'total': math.fsum(weights)},
            )

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def __getitem__(self, index):
        return self.weights[index]

    @property
    def total(self) -> float:
        """Sum of the weights."""
        return math.fsum(self.weights)

    def as_array(self) -> np.ndarray:
        """Weights as a float array."""
        return np.array(self.weights, dtype=float)


def dirac_weights(k: int, n: int) -> WeightVector:
    """Unit vector 1_k of length n (k is zero-based)."""
    weights = [0.0] * n
    weights[k] = 1.0
    return WeightVector(tuple(weights), simplex=True)


@dataclass(frozen=True)
class MixtureDistribution(Distribution):
    """
    Mixture sum_j w_j F_j with weights on the simplex.

    The quantile is obtained by inverting the mixed cdf; quantile integrals
    use truncated expectations of the components so only one inversion per
    limit is needed.
    """

    components: tuple

    family = 'mixture'

    def __post_init__(self):
        object.__setattr__(self, 'components', tuple(
            (float(weight), comp) for weight, comp in self.components
        ))
        WeightVector(tuple(weight for weight, _comp in self.components), simplex=True)

    @property
    def active(self) -> tuple:
        """Components with positive weight."""
        return tuple((weight, comp) for weight, comp in self.components if weight > 0)

    def cdf(self, x):
        return min(1.0, math.fsum(weight * comp.cdf(x) for weight, comp in self.active))

    def _quantile(self, u):
        if u <= 0:
            return min(comp.lower_endpoint for _weight, comp in self.active)
        if u >= 1:
            return max(comp.upper_endpoint for _weight, comp in self.active)
        candidates = [comp._quantile(u) for _weight, comp in self.active]
        return invert_cdf(self.cdf, u, min(candidates), max(candidates))

    def _right_continuous(self, x, p):
        return x

    def _lower_integral(self, u: float) -> float:
        if u <= 0:
            return 0.0
        threshold = self._quantile(u)
        total = math.fsum(
            weight * comp._integral(0.0, comp.cdf(threshold)) for weight, comp in self.active
        )
        return total - threshold * (self.cdf(threshold) - u)

    def _upper_integral(self, u: float) -> float:
        threshold = self._quantile(u)
        total = 0.0
        for weight, comp in self.active:
            level = comp.cdf(threshold)
            piece = comp._integral(level, 1.0) if level < 1 else 0.0
            if math.isinf(piece):
                return math.inf
            total += weight * piece
        return total + threshold * (self.cdf(threshold) - u)

    def _integral(self, a, b):
        if b >= 1:
            return self._upper_integral(a)
        return self._lower_integral(b) - self._lower_integral(a)

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
        if p > 0:
            start = self._quantile(p)
        else:
            start = min(comp.lower_endpoint for _weight, comp in self.active)
        classes = set()
        uppers = set()
        late = False
        for _weight, comp in self.active:
            if comp.upper_endpoint <= start and p > 0:
                continue
            if isinstance(comp, PointMass):
                return DensityClass.UNKNOWN
            uppers.add(comp.upper_endpoint)
            # a component entering inside the tail makes the density jump up
            late = late or comp.lower_endpoint > start
            level = comp.cdf(start) if p > 0 else 0.0
            classes.add(comp.tail_density_class(min(level, math.nextafter(1.0, 0.0))))
        if classes <= {DensityClass.DECREASING, DensityClass.CONSTANT} and not late:
            if classes == {DensityClass.CONSTANT} and len(uppers) == 1:
                return DensityClass.CONSTANT
            return DensityClass.DECREASING
        if classes <= {DensityClass.INCREASING, DensityClass.CONSTANT} and len(uppers) == 1:
            if classes == {DensityClass.CONSTANT} and not late:
                return DensityClass.CONSTANT
            return DensityClass.INCREASING
        return DensityClass.UNKNOWN


class QuantileMixtureDistribution(WeightedQuantileSum):
    """Law with quantile sum_j w_j F_j^{-1}, weights on the simplex."""

    family = 'quantile_mixture'

    def __post_init__(self):
        super().__post_init__()
        WeightVector(tuple(weight for weight, _comp in self.components), simplex=True)


def _check_dimension(matrix: DoublyStochasticMatrix, margins: MarginVector) -> None:
    if matrix.n != margins.n:
        raise ValidationError(
            _('Matrix dimension %(n)s does not match %(m)s margins.'),
            params={'n': matrix.n, 'm': margins.n},
        )


def _unit_row(row) -> int:
    hits = [index for index, weight in enumerate(row) if weight > 0]
    if len(hits) == 1:
        return hits[0]
    return -1


def distribution_mixture(matrix: DoublyStochasticMatrix, margins: MarginVector) -> MarginVector:
    """
    L-mixture LF whose i-th component is sum_j L_ij F_j.

    Args:
        matrix: Doubly stochastic matrix of matching dimension.
        margins: Margin vector F.

    Returns:
        MarginVector: The mixed margins.
    """
    _check_dimension(matrix, margins)
    mixed = []
    for row in matrix.rows:
        unit = _unit_row(row)
        if unit >= 0:
            mixed.append(margins[unit])
        elif all(isinstance(margin, Bernoulli) for margin in margins):
            mixed.append(Bernoulli(min(1.0, math.fsum(
                weight * margin.q for weight, margin in zip(row, margins)
            ))))
        else:
            mixed.append(MixtureDistribution(tuple(zip(row, margins))))
    return MarginVector(tuple(mixed))


def quantile_mixture(matrix: DoublyStochasticMatrix, margins: MarginVector) -> MarginVector:
    """
    L-quantile mixture L (x) F whose i-th quantile is sum_j L_ij F_j^{-1}.

    Args:
        matrix: Doubly stochastic matrix of matching dimension.
        margins: Margin vector F.

    Returns:
        MarginVector: Exact Pareto components for common-alpha Pareto margins,
        quantile mixtures otherwise.
    """
    _check_dimension(matrix, margins)
    if _common_pareto_alpha(margins) is not None:
        return pareto_quantile_mixture(matrix.entries, margins)
    mixed = []
    for row in matrix.rows:
        unit = _unit_row(row)
        if unit >= 0:
            mixed.append(margins[unit])
        else:
            mixed.append(QuantileMixtureDistribution(tuple(zip(row, margins))))
    return MarginVector(tuple(mixed))


def _common_pareto_alpha(margins: MarginVector):
    if all(isinstance(margin, Pareto) for margin in margins):
        alphas = {margin.alpha for margin in margins}
        if len(alphas) == 1:
            return alphas.pop()
    return None


def pareto_quantile_mixture(matrix, margins: MarginVector) -> MarginVector:
    """
    L (x) P_{alpha, theta} = P_{alpha, L theta} for any nonnegative matrix L with positive rows.

    Args:
        matrix: Nonnegative square array, not necessarily doubly stochastic.
        margins: Pareto margins sharing one tail parameter.

    Returns:
        MarginVector: Pareto margins with scales L theta.
    """
    alpha = _common_pareto_alpha(margins)
    if alpha is None:
        raise ValidationError(_('Margins must be Pareto with a common alpha.'))
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (margins.n, margins.n) or (matrix < 0).any():
        raise ValidationError(
            _('Expected a nonnegative %(n)s x %(n)s matrix.'), params={'n': margins.n},
        )
    thetas = matrix @ np.array([margin.theta for margin in margins])
    return MarginVector(tuple(Pareto(alpha, float(theta)) for theta in thetas))


def matrix_power(matrix: DoublyStochasticMatrix, k: int) -> DoublyStochasticMatrix:
    """L^k with L^0 the identity."""
    if int(k) != k or k < 0:
        raise ValidationError(
            _('Matrix power must be a nonnegative integer, got %(k)s.'), params={'k': k},
        )
    power = np.linalg.matrix_power(matrix.entries, int(k))
    # renormalise rounding drift before revalidation
    power = power / power.sum(axis=1, keepdims=True)
    return DoublyStochasticMatrix(power)
