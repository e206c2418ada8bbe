"""
Majorization, Birkhoff decomposition and grid-based order checks.

The stochastic and convex order checks are sound on the grid: a false
verdict is never returned at a grid point, but violations strictly between
grid points can go unnoticed.
"""
import logging
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
from networkx.algorithms import bipartite

from bounds_app.distributions import Distribution, check_level
from bounds_app.mixtures import DoublyStochasticMatrix, WeightVector

logger = logging.getLogger(__name__)

SUM_TOL = 1e-10
PARTIAL_SUM_TOL = 1e-12
MATCHING_TOL = 1e-13
RESIDUAL_MASS = 1e-11
MEAN_TOL = 1e-8
ES_TOL = 1e-9
SINKHORN_ITERATIONS = 1000
SINKHORN_TOL = 1e-14
GRID_POINTS = 512
GRID_TAIL_POINTS = 64


class NoSuchMatrixError(ValidationError):
    """Raised when gam is not majorized by lam, so no L with gam = L lam exists."""


class DecompositionError(ValidationError):
    """Raised when no permutation fits on the positive entries of a residual matrix."""


def _as_vector(weights) -> np.ndarray:
    if isinstance(weights, WeightVector):
        return weights.as_array()
    return WeightVector(tuple(weights)).as_array()


def _check_pair(lam: np.ndarray, gam: np.ndarray) -> None:
    if lam.shape != gam.shape:
        raise ValidationError(
            _('Vectors of lengths %(a)s and %(b)s cannot be compared.'),
            params={'a': lam.size, 'b': gam.size},
        )
    if abs(lam.sum() - gam.sum()) > SUM_TOL:
        raise ValidationError(
            _('Majorization needs equal sums, got %(a)s and %(b)s.'),
            params={'a': lam.sum(), 'b': gam.sum()},
        )


def majorizes(lam, gam) -> bool:
    """
    Whether lam dominates gam in majorization order (gam < lam).

    Args:
        lam: Nonnegative weights.
        gam: Nonnegative weights of the same length and sum.

    Returns:
        bool: True iff every descending partial sum of gam is at most that of lam.
    """
    lam, gam = _as_vector(lam), _as_vector(gam)
    _check_pair(lam, gam)
    lam_sums = np.cumsum(np.sort(lam)[::-1])
    gam_sums = np.cumsum(np.sort(gam)[::-1])
    return bool((gam_sums <= lam_sums + PARTIAL_SUM_TOL).all())


def permutation_matrix(permutation) -> np.ndarray:
    """Matrix with a one at (i, permutation[i])."""
    n = len(permutation)
    matrix = np.zeros((n, n))
    matrix[np.arange(n), list(permutation)] = 1.0
    return matrix


def majorization_matrix(lam, gam) -> DoublyStochasticMatrix:
    """
    Doubly stochastic L with gam = L lam, assembled from T-transforms.

    Args:
        lam: Majorizing weights.
        gam: Majorized weights.

    Returns:
        DoublyStochasticMatrix: A valid mixing matrix.

    Raises:
        NoSuchMatrixError: When gam is not majorized by lam.
    """
    if not majorizes(lam, gam):
        raise NoSuchMatrixError(
            _('%(gam)s is not majorized by %(lam)s.'),
            params={'gam': tuple(gam), 'lam': tuple(lam)},
        )
    lam, gam = _as_vector(lam), _as_vector(gam)
    n = lam.size
    lam_order = np.argsort(-lam, kind='stable')
    gam_order = np.argsort(-gam, kind='stable')
    current = lam[lam_order].copy()
    target = gam[gam_order]
    transform = np.eye(n)
    for _step in range(n):
        above = np.flatnonzero(current - target > PARTIAL_SUM_TOL)
        if above.size == 0:
            break
        j = above[-1]
        below = np.flatnonzero(target[j + 1:] - current[j + 1:] > PARTIAL_SUM_TOL)
        if below.size == 0:
            break
        k = j + 1 + below[0]
        delta = min(current[j] - target[j], target[k] - current[k])
        share = delta / (current[j] - current[k])
        step = np.eye(n)
        step[[j, k], [j, k]] = 1 - share
        step[[j, k], [k, j]] = share
        current = step @ current
        transform = step @ transform
    matrix = permutation_matrix(gam_order).T @ transform @ permutation_matrix(lam_order)
    logger.debug('Majorization matrix for %s -> %s: %s', lam, gam, matrix)
    return DoublyStochasticMatrix(matrix)


@dataclass(frozen=True)
class BirkhoffDecomposition:
    """Convex combination of permutations, terms as (weight, permutation)."""

    terms: tuple

    @property
    def weights(self) -> tuple:
        """Term weights."""
        return tuple(weight for weight, _perm in self.terms)

    def matrix(self) -> np.ndarray:
        """Reconstructed matrix sum_k weight_k P(pi_k)."""
        n = len(self.terms[0][1])
        total = np.zeros((n, n))
        for weight, permutation in self.terms:
            total += weight * permutation_matrix(permutation)
        return total

    def __str__(self):
        lines = ['weight        permutation']
        lines.extend(
            '{0:<13.10f} {1}'.format(weight, ' '.join(str(col) for col in permutation))
            for weight, permutation in self.terms
        )
        return '\n'.join(lines)


def _perfect_matching(residual: np.ndarray):
    n = residual.shape[0]
    graph = nx.Graph()
    rows = [('row', i) for i in range(n)]
    graph.add_nodes_from(rows, bipartite=0)
    graph.add_nodes_from((('col', j) for j in range(n)), bipartite=1)
    graph.add_edges_from(
        (('row', int(i)), ('col', int(j))) for i, j in zip(*np.nonzero(residual > MATCHING_TOL))
    )
    matching = bipartite.maximum_matching(graph, top_nodes=rows)
    permutation = [matching.get(row) for row in rows]
    if any(partner is None for partner in permutation):
        return None
    return tuple(partner[1] for partner in permutation)


def birkhoff(matrix: DoublyStochasticMatrix) -> BirkhoffDecomposition:
    """
    Greedy Birkhoff decomposition of a doubly stochastic matrix.

    Args:
        matrix: The matrix to decompose.

    Returns:
        BirkhoffDecomposition: Terms whose weighted permutation matrices sum to matrix.

    Raises:
        DecompositionError: When no perfect matching exists on the positive entries.
    """
    residual = np.array(matrix.entries)
    n = matrix.n
    terms = []
    remaining = 1.0
    while remaining >= RESIDUAL_MASS:
        permutation = _perfect_matching(residual)
        if permutation is None or len(terms) > n * n:
            raise DecompositionError(
                _('No permutation fits the residual matrix, mass left %(mass)s.'),
                params={'mass': remaining},
            )
        cells = (np.arange(n), list(permutation))
        weight = float(residual[cells].min())
        residual[cells] -= weight
        residual[residual < MATCHING_TOL] = 0.0
        terms.append((weight, permutation))
        remaining -= weight
    logger.debug('Birkhoff decomposition with %d terms', len(terms))
    return BirkhoffDecomposition(tuple(terms))


def sinkhorn(n: int, seed=None, iterations: int = SINKHORN_ITERATIONS) -> DoublyStochasticMatrix:
    """
    Random doubly stochastic matrix by Sinkhorn scaling of a positive random matrix.

    Args:
        n: Dimension.
        seed: Seed or numpy Generator.
        iterations: Maximum number of row/column scaling rounds.

    Returns:
        DoublyStochasticMatrix: The scaled matrix.
    """
    rng = np.random.default_rng(seed)
    matrix = rng.random((n, n)) + 0.01
    for _round in range(iterations):
        matrix /= matrix.sum(axis=1, keepdims=True)
        matrix /= matrix.sum(axis=0, keepdims=True)
        if np.abs(matrix.sum(axis=1) - 1).max() < SINKHORN_TOL:
            break
    return DoublyStochasticMatrix(matrix)


def default_grid() -> np.ndarray:
    """512 equally spaced levels plus 64 geometric levels near each end of (0, 1)."""
    inner = np.linspace(0, 1, GRID_POINTS + 2)[1:-1]
    near_zero = np.geomspace(1e-9, 1e-3, GRID_TAIL_POINTS)
    return np.unique(np.concatenate([near_zero, inner, 1 - near_zero]))


def _grid(grid) -> np.ndarray:
    if grid is None:
        return default_grid()
    levels = np.asarray(grid, dtype=float)
    if levels.size == 0:
        raise ValidationError(_('The probability grid is empty.'))
    for level in levels:
        check_level(level)
    return levels


def stochastic_order_leq(first: Distribution, second: Distribution, grid=None) -> bool:
    """
    Whether first is below second in stochastic order, checked in quantile space.

    Args:
        first: Distribution F.
        second: Distribution G.
        grid: Probability levels in (0, 1), default_grid() when omitted.

    Returns:
        bool: True iff F^{-1}(u) <= G^{-1}(u) at every grid level.
    """
    for level in _grid(grid):
        low, high = first.quantile(level), second.quantile(level)
        if low > high + PARTIAL_SUM_TOL * max(1.0, abs(high)):
            return False
    return True


def convex_order_leq(first: Distribution, second: Distribution, grid=None) -> bool:
    """
    Whether first is below second in convex order, via ES comparison on the grid.

    Args:
        first: Distribution F with finite mean.
        second: Distribution G with finite mean.
        grid: Probability levels in (0, 1), default_grid() when omitted.

    Returns:
        bool: False for unequal means; otherwise True iff ES_p(F) <= ES_p(G) on the grid.
    """
    if not (first.has_finite_mean and second.has_finite_mean):
        raise ValidationError(_('Convex order is only checked for finite-mean distributions.'))
    if not math.isclose(first.mean, second.mean, rel_tol=MEAN_TOL, abs_tol=MEAN_TOL):
        return False
    for level in _grid(grid):
        if first.expected_shortfall(level) > second.expected_shortfall(level) + ES_TOL:
            return False
    return True


def _tuple_check(check, firsts, seconds, grid) -> bool:
    firsts, seconds = tuple(firsts), tuple(seconds)
    if len(firsts) != len(seconds):
        raise ValidationError(
            _('Tuples of lengths %(a)s and %(b)s cannot be compared.'),
            params={'a': len(firsts), 'b': len(seconds)},
        )
    levels = _grid(grid)
    return all(check(first, second, levels) for first, second in zip(firsts, seconds))


def tuple_stochastic_leq(firsts, seconds, grid=None) -> bool:
    """Componentwise stochastic order of two margin tuples."""
    return _tuple_check(stochastic_order_leq, firsts, seconds, grid)


def tuple_convex_leq(firsts, seconds, grid=None) -> bool:
    """Componentwise convex order of two margin tuples."""
    return _tuple_check(convex_order_leq, firsts, seconds, grid)
