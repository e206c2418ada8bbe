"""
Worst-case VaR and ES of an aggregate risk with given margins.

The worst-case VaR is computed through its dual representation as an
infimum over the set of beta vectors with nonnegative coordinates summing
to less than one. The infimum is an equality when all p-tails of the
margins have decreasing densities or all have increasing densities, and an
upper bound otherwise.
"""
import enum
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
from scipy import optimize, special

from bounds_app.distributions import MarginClass, MarginVector, check_level
from bounds_app.orders import majorizes

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 20
DEFAULT_SEED = 42
DEFAULT_MAX_EVALS = 5000
DEFAULT_TOL = 1e-10
SMALL_BETA = 1e-6
AGREEMENT_RTOL = 1e-4
BETA_SLACK = 1e-12
DEGENERATE_SLACK = 1e-8


class Method(enum.Enum):
    """How a bound value was obtained."""

    DUAL_EXACT = 'dualExact'
    DUAL_UPPER_BOUND = 'dualUpperBound'
    COMONOTONIC_ES = 'comonotonicES'
    ANALYTIC_PARETO = 'analyticPareto'
    RA_LOWER = 'raLower'


class Exactness(enum.Enum):
    """Whether a value is the worst case itself or a one-sided bound."""

    EXACT = 'exact'
    UPPER_BOUND = 'upperBound'
    LOWER_BOUND = 'lowerBound'


@dataclass(frozen=True)
class BetaVector:
    """Point of B_n: beta_i in [0, 1) with sum beta_i < 1."""

    beta: tuple

    def __post_init__(self):
        beta = tuple(float(value) for value in self.beta)
        object.__setattr__(self, 'beta', beta)
        if any(not 0 <= value < 1 for value in beta):
            raise ValidationError(
                _('Beta coordinates must lie in [0, 1), got %(beta)s.'), params={'beta': beta},
            )
        if math.fsum(beta) > 1 - BETA_SLACK:
            raise ValidationError(
                _('Beta coordinates must sum to less than 1, got %(total)s.'),
                params={'total': math.fsum(beta)},
            )

    @classmethod
    def zeros(cls, n: int) -> 'BetaVector':
        """The origin of B_n."""
        return cls((0.0,) * n)

    @property
    def total(self) -> float:
        """Sum of the coordinates."""
        return math.fsum(self.beta)

    def __len__(self):
        return len(self.beta)


@dataclass(frozen=True)
class OptimizerOptions:
    """Multi-start Nelder-Mead budget."""

    restarts: int = DEFAULT_RESTARTS
    seed: int = DEFAULT_SEED
    max_evals: int = DEFAULT_MAX_EVALS
    tol: float = DEFAULT_TOL


@dataclass(frozen=True)
class BoundResult:
    """Value of a worst-case risk measure with its provenance."""

    value: float
    method: Method
    exactness: Exactness
    beta_star: tuple = None
    evaluations: int = 0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        """JSON-friendly representation; infinite values become the string 'inf'."""
        payload = asdict(self)
        payload['value'] = self.value if math.isfinite(self.value) else str(self.value)
        payload['method'] = self.method.value
        payload['exactness'] = self.exactness.value
        payload['beta_star'] = list(self.beta_star) if self.beta_star is not None else None
        return payload


def _tail_average(margin, lower: float, upper: float) -> float:
    span = upper - lower
    if span <= 0:
        return margin._quantile(upper)
    return margin._integral(lower, upper) / span


def _objective(p: float, margins: MarginVector, beta) -> float:
    # Each margin is averaged over [upper_i - width, upper_i]; the span that is
    # integrated is also the divisor, and a vanishing slack takes the left limit.
    slack = max(0.0, 1 - math.fsum(beta))
    width = (1 - p) * slack
    total = 0.0
    for margin, beta_i in zip(margins, beta):
        upper = 1 - (1 - p) * beta_i
        if slack <= DEGENERATE_SLACK:
            piece = margin._quantile(upper)
        else:
            piece = _tail_average(margin, max(0.0, upper - width), upper)
        if math.isinf(piece) or math.isnan(piece):
            return math.inf
        total += piece
    return total


def dual_objective(p: float, margins: MarginVector, beta: BetaVector) -> float:
    """
    Dual objective whose infimum over B_n bounds the worst-case VaR.

    Args:
        p: Probability level in (0, 1).
        margins: Margin vector F.
        beta: Point of B_n.

    Returns:
        float: sum_i of the quantile integrals of F_i over
        [p + (1-p)(beta - beta_i), 1 - (1-p) beta_i], divided by (1-p)(1-beta);
        math.inf when an integral diverges. Once 1 - beta drops below
        DEGENERATE_SLACK each average is replaced by its limit F_i^{-1}(1 - (1-p) beta_i).
    """
    check_level(p)
    if not isinstance(beta, BetaVector):
        beta = BetaVector(tuple(beta))
    if len(beta) != margins.n:
        raise ValidationError(
            _('Beta of length %(got)s does not match %(n)s margins.'),
            params={'got': len(beta), 'n': margins.n},
        )
    return _objective(p, margins, beta.beta)


def _to_beta(z: np.ndarray) -> np.ndarray:
    return special.softmax(np.append(z, 0.0))[:-1]


def _to_z(beta) -> np.ndarray:
    beta = np.clip(np.asarray(beta, dtype=float), 1e-300, None)
    slack = max(1 - beta.sum(), 1e-300)
    return np.log(beta) - math.log(slack)


class _DualSearch:
    """Counts evaluations of the dual objective in the softmax parameterisation."""

    def __init__(self, p: float, margins: MarginVector, opts: OptimizerOptions):
        self.p = p
        self.margins = margins
        self.opts = opts
        self.evaluations = 0

    def value(self, beta) -> float:
        self.evaluations += 1
        if math.fsum(beta) > 1 + BETA_SLACK:
            return math.inf
        return _objective(self.p, self.margins, beta)

    def value_z(self, z) -> float:
        return self.value(_to_beta(z))

    def minimize(self, start: np.ndarray):
        outcome = optimize.minimize(
            self.value_z, start, method='Nelder-Mead',
            options={
                'maxfev': self.opts.max_evals,
                'xatol': self.opts.tol,
                'fatol': self.opts.tol,
                'adaptive': self.margins.n > 3,
            },
        )
        return float(outcome.fun), _to_beta(outcome.x)

    def symmetric_start(self) -> np.ndarray:
        n = self.margins.n
        outcome = optimize.minimize_scalar(
            lambda c: self.value(np.full(n, c / n)),
            bounds=(0.0, 1 - 1e-9), method='bounded', options={'xatol': 1e-10},
        )
        return np.full(n, float(outcome.x) / n)

    def starts(self):
        n = self.margins.n
        yield np.full(n, SMALL_BETA)
        yield self.symmetric_start()
        for restart in range(self.opts.restarts):
            rng = np.random.default_rng([self.opts.seed, restart])
            yield rng.dirichlet(np.ones(n + 1))[:n]


def _relative_gap(value: float, best: float) -> float:
    if value == best:
        return 0.0
    return abs(value - best) / max(1.0, abs(best))


def restarts_agree(values, best: float) -> bool:
    """
    Whether independent restarts reproduce the best value.

    Args:
        values: Final values of the restarts, without any polishing step.
        best: Best value found overall.

    Returns:
        bool: True for an infinite best or when at least two restarts lie
        within AGREEMENT_RTOL of it.
    """
    if math.isinf(best):
        return True
    agreeing = sum(
        1 for value in values
        if math.isfinite(value) and _relative_gap(value, best) <= AGREEMENT_RTOL
    )
    return agreeing >= 2


def _inside_simplex(beta: np.ndarray) -> np.ndarray:
    total = beta.sum()
    if total > 1 - BETA_SLACK:
        return beta * ((1 - BETA_SLACK) / total)
    return beta


def _optimize_dual(p: float, margins: MarginVector, opts: OptimizerOptions):
    search = _DualSearch(p, margins, opts)
    origin = np.zeros(margins.n)
    restarts = []
    for index, start in enumerate(search.starts()):
        value, beta = search.minimize(_to_z(start))
        logger.debug('Dual restart %d at p=%s: value %s', index, p, value)
        restarts.append((value, beta))
    best_value, best_beta = min(
        [(search.value(origin), origin)] + restarts, key=lambda candidate: candidate[0],
    )
    if math.isfinite(best_value) and best_beta.sum() > 0:
        polished, beta = search.minimize(_to_z(best_beta))
        if polished < best_value:
            best_value, best_beta = polished, beta
    converged = restarts_agree([value for value, _beta in restarts], best_value)
    if not converged:
        logger.warning(
            'Dual search at p=%s did not reproduce its best value %s across restarts',
            p, best_value,
        )
    beta_star = tuple(float(value) for value in _inside_simplex(best_beta))
    return best_value, beta_star, search.evaluations, converged


def _exactness(margins: MarginVector, p: float):
    if margins.tail_density_class(p) is MarginClass.MIXED:
        return Method.DUAL_UPPER_BOUND, Exactness.UPPER_BOUND
    return Method.DUAL_EXACT, Exactness.EXACT


def worst_case_var(p: float, margins: MarginVector, opts: OptimizerOptions = None) -> BoundResult:
    """
    Worst-case VaR_p over all dependence structures with the given margins.

    Args:
        p: Probability level in (0, 1).
        margins: Margin vector F.
        opts: Optimizer budget, defaults when omitted.

    Returns:
        BoundResult: Exact for monotone-density p-tails, an upper bound otherwise.
    """
    check_level(p)
    opts = opts or OptimizerOptions()
    value, beta_star, evaluations, converged = _optimize_dual(p, margins, opts)
    method, exactness = _exactness(margins, p)
    return BoundResult(
        value=value,
        method=method,
        exactness=exactness,
        beta_star=beta_star,
        evaluations=evaluations,
        converged=converged,
    )


def worst_case_es(p: float, margins: MarginVector) -> float:
    """
    Worst-case ES_p, the ES of the comonotonic sum.

    Args:
        p: Probability level in (0, 1).
        margins: Margin vector F.

    Returns:
        float: sum_i ES_p(F_i), math.inf for an infinite-mean tail.
    """
    check_level(p)
    return math.fsum(margin.expected_shortfall(p) for margin in margins)


def worst_case_es_result(p: float, margins: MarginVector) -> BoundResult:
    """worst_case_es wrapped as an exact BoundResult."""
    return BoundResult(
        value=worst_case_es(p, margins),
        method=Method.COMONOTONIC_ES,
        exactness=Exactness.EXACT,
    )


def pareto_var_bounds(p: float, alpha: float, theta) -> tuple:
    """
    Analytic sandwich of the worst-case VaR for Pareto margins with alpha > 1.

    Args:
        p: Probability level in (0, 1).
        alpha: Common tail parameter, greater than 1.
        theta: Positive scale parameters.

    Returns:
        tuple: (sum theta / (1-p)^(1/alpha), alpha/(alpha-1) times that).
    """
    check_level(p)
    if not alpha > 1:
        raise ValidationError(
            _('Pareto bounds need alpha > 1, got %(alpha)s.'), params={'alpha': alpha},
        )
    thetas = tuple(float(value) for value in theta)
    if not thetas or any(value <= 0 for value in thetas):
        raise ValidationError(_('Pareto scales must be positive.'))
    lower = math.fsum(thetas) / (1 - p) ** (1 / alpha)
    return lower, alpha / (alpha - 1) * lower


def essential_infimum_worst_case(margins: MarginVector, opts: OptimizerOptions = None) -> BoundResult:
    """
    Limit of the worst-case VaR_p as p decreases to 0.

    The dual objective is evaluated with p = 0 substituted directly.

    Args:
        margins: Margin vector F.
        opts: Optimizer budget, defaults when omitted.

    Returns:
        BoundResult: math.inf when the objective diverges for every beta.
    """
    opts = opts or OptimizerOptions()
    value, beta_star, evaluations, converged = _optimize_dual(0.0, margins, opts)
    method, exactness = _exactness(margins, 0.0)
    return BoundResult(
        value=value,
        method=method,
        exactness=exactness,
        beta_star=beta_star,
        evaluations=evaluations,
        converged=converged,
    )


def location_scale_margins(base, scales, shifts=None) -> MarginVector:
    """Margin vector T_x(F^lambda) = (T_{x_1}(F^{lambda_1}), ..., T_{x_n}(F^{lambda_n}))."""
    scales = tuple(scales)
    shifts = tuple(shifts) if shifts is not None else (0.0,) * len(scales)
    if len(shifts) != len(scales):
        raise ValidationError(_('Shifts and scales must have the same length.'))
    return MarginVector(tuple(
        base.scaled(scale).shifted(shift) for scale, shift in zip(scales, shifts)
    ))


def location_scale_worst_case(
    p: float, base, scales, shifts, opts: OptimizerOptions = None,
) -> BoundResult:
    """
    Worst-case VaR_p of T_x(F^lambda), computed as that of F^lambda plus sum x.

    Args:
        p: Probability level in (0, 1).
        base: Distribution F.
        scales: Nonnegative scales lambda.
        shifts: Locations x.
        opts: Optimizer budget.

    Returns:
        BoundResult: Shifted result of the scaled margins.
    """
    result = worst_case_var(p, location_scale_margins(base, scales), opts)
    shift = math.fsum(shifts)
    return BoundResult(
        value=result.value + shift,
        method=result.method,
        exactness=result.exactness,
        beta_star=result.beta_star,
        evaluations=result.evaluations,
        converged=result.converged,
        extra={'shift': shift},
    )


def compare_location_scale(
    p: float, base, lam, x, gam, y, opts: OptimizerOptions = None,
) -> dict:
    """
    Evaluate both sides of VaR(T_x(F^lam)) <= VaR(T_y(F^gam)).

    The inequality is guaranteed when F has a monotone density,
    gam is majorized by lam and sum x <= sum y.

    Returns:
        dict: left and right BoundResults, whether the hypotheses hold and
        whether the inequality was observed within the optimizer tolerance.
    """
    left = location_scale_worst_case(p, base, lam, x, opts)
    right = location_scale_worst_case(p, base, gam, y, opts)
    hypotheses = majorizes(lam, gam) and math.fsum(x) <= math.fsum(y)
    tolerance = AGREEMENT_RTOL * max(1.0, abs(right.value))
    return {
        'left': left,
        'right': right,
        'hypotheses': hypotheses,
        'holds': left.value <= right.value + tolerance,
    }
