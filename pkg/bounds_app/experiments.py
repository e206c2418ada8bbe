"""
Sweeps of worst-case values along powers of a mixing matrix.

For every k in the configured list the quantile mixture L^k (x) F and the
distribution mixture L^k F are evaluated with each requested engine:

    - dual: worst-case VaR from the dual representation,
    - ra: rearrangement lower estimate,
    - es: worst-case ES (comonotonic sum).

Results are pandas DataFrames with one row per (k, kind, engine).
"""
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import metadata
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError

from bounds_app.bounds import OptimizerOptions, worst_case_es_result, worst_case_var
from bounds_app.distributions import MarginVector
from bounds_app.mixtures import (
    DoublyStochasticMatrix,
    distribution_mixture,
    matrix_power,
    quantile_mixture,
)
from bounds_app.rearrangement import RearrangementOptions, ra_lower_bound

logger = logging.getLogger(__name__)

QUANTILE = 'quantile'
DISTRIBUTION = 'distribution'
KINDS = (QUANTILE, DISTRIBUTION)
ENGINES = ('dual', 'ra', 'es')
COLUMNS = (
    'k', 'kind', 'engine', 'value', 'exactness', 'converged', 'beta_star', 'wall_time_ms', 'error',
)
CHECK_COLUMNS = COLUMNS + ('noise', 'seeds')
NOISE_FACTOR = 3
NOISE_FLOOR = 1e-9
VERSIONED_PACKAGES = ('numpy', 'scipy', 'pandas', 'networkx', 'Django', 'djangorestframework')


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description."""

    name: str
    margins: MarginVector
    matrix: DoublyStochasticMatrix
    k_list: tuple
    p: float
    engines: tuple = ('dual',)
    kinds: tuple = KINDS
    optimizer: OptimizerOptions = OptimizerOptions()
    rearrangement: RearrangementOptions = RearrangementOptions()
    seeds: int = 5
    output: str = None
    raw: dict = field(default_factory=dict, compare=False)

    def with_overrides(self, seed=None, engines=None) -> 'ExperimentConfig':
        """Copy with the optimizer seed or the engine list replaced."""
        config = self
        if seed is not None:
            config = replace(config, optimizer=replace(config.optimizer, seed=seed))
        if engines:
            config = replace(config, engines=tuple(engines))
        return config


def mixed_margins(config: ExperimentConfig, k: int, kind: str) -> MarginVector:
    """L^k (x) F for the quantile kind, L^k F for the distribution kind."""
    power = matrix_power(config.matrix, k)
    if kind == QUANTILE:
        return quantile_mixture(power, config.margins)
    return distribution_mixture(power, config.margins)


def _evaluate(config: ExperimentConfig, margins: MarginVector, engine: str, seed: int) -> dict:
    if engine == 'dual':
        result = worst_case_var(config.p, margins, config.optimizer)
        beta_star = ';'.join(repr(value) for value in result.beta_star or ())
        return {
            'value': result.value,
            'exactness': result.exactness.value,
            'converged': result.converged,
            'beta_star': beta_star,
        }
    if engine == 'ra':
        result = ra_lower_bound(config.p, margins, config.rearrangement, seed).as_bound()
    else:
        result = worst_case_es_result(config.p, margins)
    return {
        'value': result.value,
        'exactness': result.exactness.value,
        'converged': result.converged,
        'beta_star': '',
    }


def compute_row(task) -> dict:
    """
    Evaluate one (k, kind, engine) cell; failures are recorded in the row.

    Args:
        task: Tuple (config, k, kind, engine).

    Returns:
        dict: Row keyed by COLUMNS.
    """
    config, k, kind, engine = task
    started = time.perf_counter()
    row = {
        'k': k,
        'kind': kind,
        'engine': engine,
        'value': math.nan,
        'exactness': '',
        'converged': False,
        'beta_star': '',
        'error': '',
    }
    try:
        row.update(_evaluate(config, mixed_margins(config, k, kind), engine, config.optimizer.seed))
    except (ValidationError, ArithmeticError, ValueError, RuntimeError) as error:
        logger.warning('Engine %s failed at k=%s (%s): %s', engine, k, kind, error)
        row['error'] = str(error)
    row['wall_time_ms'] = (time.perf_counter() - started) * 1000
    return row


def _map(function, tasks, workers: int) -> list:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(function, tasks))
    return [function(task) for task in tasks]


def run_sweep(config: ExperimentConfig, workers: int = 1) -> pd.DataFrame:
    """
    Worst-case values of both mixture kinds for every k and engine.

    Args:
        config: Experiment description.
        workers: Process pool size; rows keep the k, kind, engine order.

    Returns:
        pandas.DataFrame: Columns as in COLUMNS.
    """
    tasks = [
        (config, k, kind, engine)
        for k in config.k_list
        for kind in config.kinds
        for engine in config.engines
    ]
    logger.info('Sweep %s: %d cells on %d workers', config.name, len(tasks), workers)
    return pd.DataFrame(_map(compute_row, tasks, workers), columns=COLUMNS)


def _ra_seed_row(task) -> dict:
    config, k, kind, seed = task
    row = compute_row((replace(config, optimizer=replace(config.optimizer, seed=seed)), k, kind, 'ra'))
    row['seed'] = seed
    return row


def run_monotonicity_check(config: ExperimentConfig, workers: int = 1):
    """
    Rearrangement curves over k repeated for several seeds, with a monotonicity verdict.

    The noise of each point is the standard deviation across seeds. A curve is
    non-monotone when some consecutive pair decreases by more than three times
    the combined noise.

    Args:
        config: Experiment description; config.seeds runs per point.
        workers: Process pool size.

    Returns:
        tuple: (pandas.DataFrame with CHECK_COLUMNS, verdict bool).
    """
    seeds = [config.optimizer.seed + offset for offset in range(config.seeds)]
    tasks = [
        (config, k, kind, seed)
        for k in config.k_list
        for kind in config.kinds
        for seed in seeds
    ]
    raw = pd.DataFrame(_map(_ra_seed_row, tasks, workers))
    rows = []
    for (k, kind), group in raw.groupby(['k', 'kind'], sort=False):
        values = group['value'].to_numpy(dtype=float)
        rows.append({
            'k': k,
            'kind': kind,
            'engine': 'ra',
            'value': float(np.mean(values)),
            'exactness': group['exactness'].iloc[0],
            'converged': bool(group['converged'].all()),
            'beta_star': '',
            'wall_time_ms': float(group['wall_time_ms'].sum()),
            'error': ';'.join(message for message in group['error'] if message),
            'noise': float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
            'seeds': len(values),
        })
    frame = pd.DataFrame(rows, columns=CHECK_COLUMNS)
    verdict = non_monotone(frame[frame['kind'] == QUANTILE])
    logger.info('Monotonicity check %s: non-monotone detected = %s', config.name, verdict)
    return frame, verdict


def non_monotone(curve: pd.DataFrame) -> bool:
    """Whether some consecutive decrease of the curve exceeds the noise band."""
    curve = curve.sort_values('k')
    values = curve['value'].to_numpy(dtype=float)
    noise = curve['noise'].to_numpy(dtype=float)
    for index in range(len(values) - 1):
        band = NOISE_FACTOR * (noise[index] + noise[index + 1])
        floor = NOISE_FLOOR * max(1.0, abs(values[index]))
        if values[index] - values[index + 1] > band + floor:
            return True
    return False


def curve_is_nondecreasing(frame: pd.DataFrame, kind: str, engine: str, rtol: float = 1e-6) -> bool:
    """Whether the (kind, engine) curve is nondecreasing in k up to a relative tolerance."""
    curve = frame[(frame['kind'] == kind) & (frame['engine'] == engine)].sort_values('k')
    values = curve['value'].to_numpy(dtype=float)
    return all(
        later >= earlier - rtol * max(1.0, abs(earlier))
        for earlier, later in zip(values, values[1:])
    )


def package_versions() -> dict:
    """Installed versions of the numerical stack."""
    versions = {}
    for package in VERSIONED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = None
    return versions


def metadata_path(csv_path) -> Path:
    """Sidecar path next to the CSV: results.csv -> results.meta.json."""
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + '.meta.json')


def write_outputs(frame: pd.DataFrame, csv_path, config: ExperimentConfig, verdict=None) -> Path:
    """
    Write the CSV table and its JSON metadata sidecar.

    Args:
        frame: Result table.
        csv_path: Destination of the CSV.
        config: Configuration echoed into the sidecar.
        verdict: Non-monotonicity verdict of a monotonicity check.

    Returns:
        Path: The sidecar path.
    """
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(csv_path, index=False)
    sidecar = metadata_path(csv_path)
    payload = {
        'name': config.name,
        'config': config.raw,
        'seed': config.optimizer.seed,
        'versions': package_versions(),
        'all_converged': bool(frame['converged'].all()) if len(frame) else True,
    }
    if verdict is not None:
        payload['non_monotone_detected'] = verdict
    sidecar.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return sidecar
