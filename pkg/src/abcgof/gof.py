"""The two goodness-of-fit statistics and their Monte Carlo P-values.

The prior statistic is the mean scaled distance from the observed summary
statistics to the accepted nearest simulations in a reference table. The
posterior statistic replaces the accepted simulations with fresh replicates
simulated from parameters drawn from the regression-adjusted posterior. Both
get a null distribution by repeatedly treating one table row as if it were
the observed data (leave-one-out pseudo-observed datasets), and the P-value
is the fraction of null values at least as large as the observed one.

Randomness is derived from a single master seed through `SeedSequence`
spawning: replicate j always receives the stream derived for index j, so
results are identical for any worker count and execution order.
"""

from __future__ import annotations

import abc
import json
from dataclasses import dataclass

import numpy as np

from .adjust import adjusted_posterior, sample_posterior
from .core import (
    DataError,
    ObservedStats,
    ReferenceTable,
    ScalingVector,
    fit_scaling,
    mad,
    scaled_distances,
)
from .parallel import parallel_map
from .rejection import reject


class Simulator(abc.ABC):
    """The generating mechanism: one statistic vector from one parameter vector.

    Implementations must be pure given the rng (identical seeds, identical
    output) and stateless, so one instance can be shared across worker
    threads. `param_transforms` names the scale ("identity", "log" or
    "logit") on which the regression adjustment handles each parameter, so
    constrained parameters stay inside their support; see
    :func:`abcgof.adjust.adjusted_posterior`.
    """

    name: str = "simulator"
    param_names: tuple[str, ...] = ()
    stat_names: tuple[str, ...] = ()
    param_transforms: tuple[str, ...] = ()

    @abc.abstractmethod
    def draw_prior(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one parameter vector from the prior."""

    @abc.abstractmethod
    def simulate(self, theta, rng: np.random.Generator) -> np.ndarray:
        """Simulate one summary-statistic vector for the given parameters."""

    def config(self) -> dict:
        """A JSON-serializable description used in manifests and result echoes."""
        return {"name": self.name}


class SimulationError(RuntimeError):
    """A simulator failed; carries the parameter draw that triggered it."""

    def __init__(self, theta, cause: Exception):
        self.theta = np.asarray(theta, dtype=float)
        self.cause = cause
        super().__init__(f"simulator failed for parameters {self.theta.tolist()}: {cause}")


@dataclass(frozen=True)
class GofSettings:
    acceptance_rate: float
    M: int
    n_prime: int | None
    seed: int


@dataclass(frozen=True, eq=False)
class GofResult:
    """Observed test statistic, its Monte Carlo null distribution, and P-value."""

    statistic_kind: str  # "prior" or "post"
    observed_value: float
    null_values: np.ndarray
    p_value: float
    settings: GofSettings

    def __post_init__(self):
        nulls = np.asarray(self.null_values, dtype=float).copy()
        if nulls.size != self.settings.M or not np.all(np.isfinite(nulls)):
            raise ValueError("null values must be M finite numbers")
        nulls.setflags(write=False)
        object.__setattr__(self, "null_values", nulls)
        recomputed = p_value(self.observed_value, nulls)
        if self.p_value != recomputed:
            raise ValueError("p_value does not match its null distribution")

    @property
    def p_value_conservative(self) -> float:
        """(1 + exceedance count) / (1 + M): never exactly zero at finite M."""
        count = int(np.count_nonzero(self.null_values >= self.observed_value))
        return (1 + count) / (1 + self.settings.M)

    def to_dict(self) -> dict:
        return {
            "kind": self.statistic_kind,
            "observed_D": self.observed_value,
            "p_value": self.p_value,
            "p_value_conservative": self.p_value_conservative,
            "M": self.settings.M,
            "acceptance_rate": self.settings.acceptance_rate,
            "n_prime": self.settings.n_prime,
            "seed": self.settings.seed,
            "null_values": self.null_values.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def _seed_int(seed) -> int:
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        return int(entropy if not isinstance(entropy, (list, tuple)) else entropy[0])
    return int(seed)


def p_value(observed: float, nulls) -> float:
    """Fraction of null statistics >= the observed one (ties count)."""
    nulls = np.asarray(nulls, dtype=float)
    if nulls.size < 1:
        raise ValueError("need at least one null value")
    return float(np.count_nonzero(nulls >= observed) / nulls.size)


def d_prior(
    table: ReferenceTable,
    observed,
    scaling: ScalingVector,
    rate: float,
    exclude: int | None = None,
) -> float:
    """Mean scaled distance from the observed statistics to the accepted rows."""
    accepted = reject(table, observed, scaling, rate, exclude=exclude)
    return float(accepted.distances.mean())


def null_distribution_prior(
    table: ReferenceTable,
    scaling: ScalingVector,
    rate: float,
    M: int,
    seed,
    threads: int = 1,
) -> np.ndarray:
    """Leave-one-out null distribution of the prior statistic.

    M distinct rows are chosen uniformly without replacement (all rows when
    M equals the table size, with no randomness consumed), each is treated
    as the observed data, and the statistic is computed on the remaining
    rows. The scaling is the global one, not refit per replicate.
    """
    rows = _pseudo_observed_rows(table.n, M, seed)
    values = parallel_map(
        lambda r: d_prior(table, table.stats[r], scaling, rate, exclude=int(r)),
        rows,
        threads=threads,
    )
    return np.asarray(values, dtype=float)


def _pseudo_observed_rows(n: int, M: int, seed) -> np.ndarray:
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if M > n:
        raise DataError("more replicates than simulations")
    if M == n:
        return np.arange(n)
    rng = np.random.default_rng(_seed_sequence(seed))
    return rng.choice(n, size=M, replace=False)


# ---------------------------------------------------------------------------
# Posterior-replicate statistic


def posterior_replicates(
    table: ReferenceTable,
    observed,
    scaling: ScalingVector,
    rate: float,
    simulator: Simulator,
    n_prime: int,
    rng: np.random.Generator,
    exclude: int | None = None,
) -> np.ndarray:
    """Simulate n' statistic vectors from the adjusted posterior for `observed`."""
    if n_prime < 1:
        raise ValueError(f"n_prime must be >= 1, got {n_prime}")
    accepted = reject(table, observed, scaling, rate, exclude=exclude)
    posterior = adjusted_posterior(
        table, accepted, observed, scaling, transforms=simulator.param_transforms
    )
    draws = sample_posterior(posterior, n_prime, rng)
    replicates = np.empty((n_prime, table.n_stats))
    for i, theta in enumerate(draws):
        try:
            replicates[i] = simulator.simulate(theta, rng)
        except Exception as exc:  # noqa: BLE001 - report the offending draw
            raise SimulationError(theta, exc) from exc
    if not np.all(np.isfinite(replicates)):
        bad = np.flatnonzero(~np.all(np.isfinite(replicates), axis=1))[0]
        raise SimulationError(draws[bad], ValueError("non-finite simulated statistics"))
    return replicates


def replicate_scaling(replicates: np.ndarray, prior_scaling: ScalingVector) -> ScalingVector:
    """MAD scaling refit on posterior replicates, column by column.

    A replicate column with zero MAD (a degenerate simulator) falls back to
    the prior-table scale for that column instead of being dropped, so the
    distance stays finite and meaningful; columns already dropped by the
    prior scaling stay dropped.
    """
    replicates = np.asarray(replicates, dtype=float)
    scales = np.array([mad(replicates[:, j]) for j in range(replicates.shape[1])])
    dropped = set(prior_scaling.dropped)
    for j in range(scales.size):
        if scales[j] == 0.0 and j not in dropped:
            scales[j] = prior_scaling.scales[j]
    return ScalingVector(scales=scales, dropped=frozenset(dropped))


def d_post(
    table: ReferenceTable,
    observed,
    scaling: ScalingVector,
    rate: float,
    simulator: Simulator,
    n_prime: int,
    rng: np.random.Generator,
) -> tuple[float, np.ndarray]:
    """Mean scaled distance from the observed statistics to posterior replicates.

    Returns the statistic and the raw n' x k replicate matrix (reusable for
    posterior predictive checks). Distances use a MAD scaling refit on the
    replicate matrix, not the prior-table scaling.
    """
    if isinstance(observed, ObservedStats):
        vec = observed.align(table)
    else:
        vec = np.asarray(observed, dtype=float).ravel()
    replicates = posterior_replicates(table, vec, scaling, rate, simulator, n_prime, rng)
    rscaling = replicate_scaling(replicates, scaling)
    value = float(scaled_distances(replicates, vec, rscaling).mean())
    return value, replicates


@dataclass(frozen=True, eq=False)
class _PosteriorNullParts:
    rows: np.ndarray
    values: np.ndarray
    replicates: list  # one n' x k matrix per pseudo-observed row
    pooled: np.ndarray  # (M * n') x k


def _null_post_parts(
    table: ReferenceTable,
    scaling: ScalingVector,
    rate: float,
    simulator: Simulator,
    n_prime: int,
    M: int,
    seed,
    threads: int = 1,
) -> _PosteriorNullParts:
    root = _seed_sequence(seed)
    rows_seed, replicate_root = root.spawn(2)
    rows = _pseudo_observed_rows(table.n, M, rows_seed)
    streams = replicate_root.spawn(M)

    def one(job):
        row, stream = job
        rng = np.random.default_rng(stream)
        return posterior_replicates(
            table, table.stats[row], scaling, rate, simulator, n_prime, rng, exclude=int(row)
        )

    replicates = parallel_map(one, list(zip(rows, streams)), threads=threads)
    pooled = np.vstack(replicates)
    pooled_scaling = replicate_scaling(pooled, scaling)
    values = np.array(
        [
            scaled_distances(reps, table.stats[row], pooled_scaling).mean()
            for row, reps in zip(rows, replicates)
        ]
    )
    return _PosteriorNullParts(rows=rows, values=values, replicates=replicates, pooled=pooled)


def null_distribution_post(
    table: ReferenceTable,
    scaling: ScalingVector,
    rate: float,
    simulator: Simulator,
    n_prime: int,
    M: int,
    seed,
    threads: int = 1,
) -> np.ndarray:
    """Leave-one-out null distribution of the posterior statistic.

    Two-pass: all M x n' replicates are simulated first, their pooled matrix
    defines one MAD scaling, and every null value is then computed under
    that common scaling. Replicate j derives its random stream from
    (master seed, j), so any worker count gives identical output.
    """
    parts = _null_post_parts(table, scaling, rate, simulator, n_prime, M, seed, threads=threads)
    return parts.values


# ---------------------------------------------------------------------------
# Pipeline glue


def gfit(
    table: ReferenceTable,
    observed: ObservedStats,
    rate: float,
    M: int,
    seed,
    threads: int = 1,
) -> GofResult:
    """Goodness-of-fit test of the table's model using the prior statistic."""
    scaling = fit_scaling(table)
    observed_value = d_prior(table, observed, scaling, rate)
    nulls = null_distribution_prior(table, scaling, rate, M, seed, threads=threads)
    return GofResult(
        statistic_kind="prior",
        observed_value=observed_value,
        null_values=nulls,
        p_value=p_value(observed_value, nulls),
        settings=GofSettings(acceptance_rate=rate, M=M, n_prime=None, seed=_seed_int(seed)),
    )


def gfit_post(
    table: ReferenceTable,
    observed: ObservedStats,
    rate: float,
    simulator: Simulator,
    n_prime: int,
    M: int,
    seed,
    threads: int = 1,
) -> GofResult:
    """Goodness-of-fit test using the posterior-replicate statistic.

    The M null values use the scaling fit on their pooled M x n' replicates;
    the observed value uses a scaling fit on that pool extended with the
    observed run's own n' replicates, mirroring how each null replicate's
    own simulations participate in the pool.
    """
    scaling = fit_scaling(table)
    root = _seed_sequence(seed)
    observed_seed, null_seed = root.spawn(2)
    parts = _null_post_parts(
        table, scaling, rate, simulator, n_prime, M, null_seed, threads=threads
    )
    vec = observed.align(table)
    observed_reps = posterior_replicates(
        table, vec, scaling, rate, simulator, n_prime, np.random.default_rng(observed_seed)
    )
    observed_value = observed_d_post(vec, observed_reps, parts.pooled, scaling)
    return GofResult(
        statistic_kind="post",
        observed_value=observed_value,
        null_values=parts.values,
        p_value=p_value(observed_value, parts.values),
        settings=GofSettings(acceptance_rate=rate, M=M, n_prime=n_prime, seed=_seed_int(seed)),
    )


def observed_d_post(
    observed_vec: np.ndarray,
    observed_replicates: np.ndarray,
    null_pooled: np.ndarray | None,
    prior_scaling: ScalingVector,
) -> float:
    """Observed posterior statistic under the pooled replicate scaling.

    When null replicates are available the scaling pool is their matrix
    extended with the observed run's replicates; otherwise the observed
    run's replicates alone.
    """
    if null_pooled is None:
        pool = observed_replicates
    else:
        pool = np.vstack([null_pooled, observed_replicates])
    rscaling = replicate_scaling(pool, prior_scaling)
    return float(scaled_distances(observed_replicates, observed_vec, rscaling).mean())
