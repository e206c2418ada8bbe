"""Rearrangement algorithm: a lower estimate of the worst-case VaR."""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from bounds_app.bounds import BoundResult, Exactness, Method

logger = logging.getLogger(__name__)

DEFAULT_N = 10000
DEFAULT_EPS = 1e-9
DEFAULT_MAX_SWEEPS = 1000


class GridKind(enum.Enum):
    """Placement of the discretisation levels inside [p, 1]."""

    MIDPOINT = 'midpoint'
    UPPER = 'upper'


@dataclass(frozen=True)
class RearrangementOptions:
    """Grid size, stopping rule and grid placement of a rearrangement run."""

    n: int = DEFAULT_N
    eps: float = DEFAULT_EPS
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    grid: GridKind = GridKind.MIDPOINT


@dataclass(frozen=True)
class QuantileMatrix:
    """N x n matrix whose column j holds tail quantiles of margin j."""

    values: np.ndarray
    level: float
    grid_kind: GridKind = GridKind.MIDPOINT

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 1:
            raise ValidationError(
                _('A quantile matrix needs at least two rows and one column, got %(shape)s.'),
                params={'shape': values.shape},
            )
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    @property
    def shape(self) -> tuple:
        """(N, n)."""
        return self.values.shape

    @property
    def row_sums(self) -> np.ndarray:
        """Sum of each row."""
        return self.values.sum(axis=1)

    def to_csv(self, path) -> None:
        """Dump the matrix with one column per margin."""
        frame = pd.DataFrame(
            self.values, columns=['margin_{0}'.format(j) for j in range(self.shape[1])],
        )
        frame.to_csv(path, index_label='row')


def grid_levels(p: float, size: int, kind: GridKind = GridKind.MIDPOINT) -> np.ndarray:
    """Levels p + (1-p)(i - 1/2)/N (midpoint) or p + (1-p) i/N (upper), i = 1..N."""
    steps = np.arange(1, size + 1, dtype=float)
    if kind is GridKind.MIDPOINT:
        steps -= 0.5
    return p + (1 - p) * steps / size


def discretize_tail(p: float, margins, size: int = DEFAULT_N, kind=GridKind.MIDPOINT) -> QuantileMatrix:
    """
    Tail quantiles of every margin on a grid inside [p, 1].

    Args:
        p: Tail level in [0, 1).
        margins: Sequence of distributions.
        size: Number of rows N, at least 2.
        kind: Midpoint or upper grid.

    Returns:
        QuantileMatrix: Columns sorted ascending.
    """
    kind = GridKind(kind)
    if not 0 <= p < 1:
        raise ValidationError(_('Tail level %(p)s is outside [0, 1).'), params={'p': p})
    if size < 2:
        raise ValidationError(_('The grid needs at least two rows, got %(n)s.'), params={'n': size})
    levels = grid_levels(p, size, kind)
    columns = []
    for margin in margins:
        column = margin.quantiles(levels)
        if not np.isfinite(column).all():
            raise ValidationError(
                _('Margin %(margin)s has an unbounded quantile on the %(kind)s grid.'),
                params={'margin': margin, 'kind': kind.value},
            )
        columns.append(np.sort(column))
    return QuantileMatrix(np.column_stack(columns), p, kind)


@dataclass(frozen=True)
class RearrangementResult:
    """Outcome of a rearrangement run."""

    lower_var: float
    matrix: QuantileMatrix
    sweeps: int
    history: tuple
    settled: bool = True

    def as_bound(self) -> BoundResult:
        """The estimate as a lower-bound BoundResult."""
        return BoundResult(
            value=self.lower_var,
            method=Method.RA_LOWER,
            exactness=Exactness.LOWER_BOUND,
            evaluations=self.sweeps,
            converged=self.settled,
        )


def _oppositely_ordered(column: np.ndarray, others: np.ndarray) -> np.ndarray:
    positions = np.argsort(others, kind='stable')
    arranged = np.empty_like(column)
    arranged[positions] = np.sort(column)[::-1]
    return arranged


def rearrange(
    matrix: QuantileMatrix,
    eps: float = DEFAULT_EPS,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    seed: int = 0,
) -> RearrangementResult:
    """
    Maximise the minimal row sum by re-sorting columns against the others.

    Args:
        matrix: Discretised tail quantiles.
        eps: Stop when a sweep improves the minimal row sum by less than this.
        max_sweeps: Hard limit on the number of sweeps.
        seed: Seed of the initial column shuffles.

    Returns:
        RearrangementResult: The minimal row sum of the final matrix and the sweep history.
    """
    rng = np.random.default_rng(seed)
    values = np.array(matrix.values)
    for j in range(values.shape[1]):
        values[:, j] = rng.permutation(values[:, j])
    totals = values.sum(axis=1)
    history = [float(totals.min())]
    sweeps = 0
    settled = False
    while sweeps < max_sweeps:
        sweeps += 1
        for j in range(values.shape[1]):
            others = totals - values[:, j]
            values[:, j] = _oppositely_ordered(values[:, j], others)
            totals = others + values[:, j]
        history.append(float(totals.min()))
        logger.debug('Rearrangement sweep %d: minimal row sum %s', sweeps, history[-1])
        if history[-1] - history[-2] < eps:
            settled = True
            break
    else:
        logger.warning('Rearrangement stopped after %d sweeps without settling', max_sweeps)
    lower_var = history[-1]
    if not math.isfinite(lower_var):
        raise ValidationError(_('The rearranged matrix has a non-finite row sum.'))
    return RearrangementResult(
        lower_var=lower_var,
        matrix=QuantileMatrix(values, matrix.level, matrix.grid_kind),
        sweeps=sweeps,
        history=tuple(history),
        settled=settled,
    )


def ra_lower_bound(p: float, margins, options: RearrangementOptions = None, seed: int = 0):
    """Discretise the p-tails of margins and rearrange them."""
    options = options or RearrangementOptions()
    matrix = discretize_tail(p, margins, options.n, options.grid)
    return rearrange(matrix, options.eps, options.max_sweeps, seed)
