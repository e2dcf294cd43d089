"""Monte-Carlo ensemble harness for the system-dynamics model.

Each replicate redraws the flagged input parameters from a normal
distribution centred on the base value with standard deviation
``sigma_fraction * base``, then integrates the deterministic model.  The
four experiment scenarios are: vary illness duration, vary contact rate,
vary infection probability, and vary all three together.

Randomness is counter-based: the draw for a given parameter of a given
replicate depends only on ``(master_seed, replicate_index, parameter id)``,
so ensembles are bit-identical no matter how many workers execute them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import EnsembleResult, SirParams, WeeklySeries
from .sd import DEFAULT_DT, integrate, weekly_sample

# Stream ids for per-parameter RNG derivation; fixed, part of the
# reproducibility contract.
_STREAM_ILLNESS = 0
_STREAM_CONTACT = 1
_STREAM_INFECTION = 2

# Attempts at redrawing an out-of-domain value before clamping.
_MAX_REDRAWS = 100


@dataclass(frozen=True)
class VariationSpec:
    """Which parameters a Monte-Carlo experiment perturbs, and how much.

    ``sigma_fraction`` is the per-parameter standard deviation expressed
    as a fraction of the parameter's base value.
    """

    vary_illness: bool = False
    vary_contact: bool = False
    vary_infection: bool = False
    sigma_fraction: float = 0.1
    replicates: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if not (self.vary_illness or self.vary_contact or self.vary_infection):
            raise ValueError("at least one vary flag must be set")
        if not self.sigma_fraction > 0.0:
            raise ValueError(f"sigma_fraction must be > 0, got {self.sigma_fraction}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")


def _param_rng(master_seed: int, replicate_index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(replicate_index, stream))
    )


def _draw_truncated(rng, mean, sigma, lower, upper, lower_open):
    """Normal draw restricted to [lower, upper]; redraw, then clamp.

    Returns (value, clamped).  Clamping is a last resort that in practice
    needs sigma_fraction of several hundred percent to trigger; open lower
    bounds clamp to a small positive fraction of the mean so derived rates
    stay finite.
    """
    value = mean
    for _ in range(_MAX_REDRAWS):
        value = rng.normal(mean, sigma)
        if lower_open:
            if lower < value <= upper:
                return value, False
        elif lower <= value <= upper:
            return value, False
    floor = lower + 1e-9 * abs(mean) if lower_open else lower
    return min(max(value, floor), upper), True


def _sample_with_info(
    base: SirParams, spec: VariationSpec, replicate_index: int
) -> tuple[SirParams, int]:
    """Perturbed parameter set for one replicate plus the clamp count."""
    if not 0 <= replicate_index < spec.replicates:
        raise ValueError(
            f"replicate_index must be in [0, {spec.replicates}), got {replicate_index}"
        )
    illness = base.illness_duration
    contact = base.contact_rate
    infection = base.infection_prob
    clamped = 0

    if spec.vary_illness:
        rng = _param_rng(spec.master_seed, replicate_index, _STREAM_ILLNESS)
        illness, c = _draw_truncated(
            rng, base.illness_duration, spec.sigma_fraction * base.illness_duration,
            lower=0.0, upper=math.inf, lower_open=True,
        )
        clamped += c
    if spec.vary_contact:
        rng = _param_rng(spec.master_seed, replicate_index, _STREAM_CONTACT)
        contact, c = _draw_truncated(
            rng, base.contact_rate, spec.sigma_fraction * base.contact_rate,
            lower=0.0, upper=math.inf, lower_open=False,
        )
        clamped += c
    if spec.vary_infection:
        rng = _param_rng(spec.master_seed, replicate_index, _STREAM_INFECTION)
        infection, c = _draw_truncated(
            rng, base.infection_prob, spec.sigma_fraction * base.infection_prob,
            lower=0.0, upper=1.0, lower_open=False,
        )
        clamped += c

    params = SirParams(
        population=base.population,
        contact_rate=contact,
        infection_prob=infection,
        illness_duration=illness,
        initial_infected=base.initial_infected,
    )
    return params, clamped


def sample_params(base: SirParams, spec: VariationSpec, replicate_index: int) -> SirParams:
    """Parameter set for one Monte-Carlo replicate.

    Flagged parameters are redrawn from Normal(base, sigma_fraction * base)
    truncated to their valid domain; unflagged parameters are returned
    bit-identical to the base values.
    """
    params, _ = _sample_with_info(base, spec, replicate_index)
    return params


def count_clamped(base: SirParams, spec: VariationSpec) -> int:
    """Number of boundary-clamped draws across the whole ensemble.

    Recomputes the (deterministic) draws without integrating, so run
    metadata can record the warning count cheaply.
    """
    return sum(_sample_with_info(base, spec, r)[1] for r in range(spec.replicates))


def _mc_replicate(args) -> np.ndarray:
    base, spec, weeks, dt, r = args
    params, _ = _sample_with_info(base, spec, r)
    try:
        traj = integrate(params, horizon_days=7.0 * weeks, dt=dt)
        return weekly_sample(traj, weeks).infected
    except Exception as exc:
        raise RuntimeError(f"replicate {r} failed: {exc}") from exc


def run_sd_ensemble(
    base: SirParams,
    spec: VariationSpec,
    weeks: int,
    dt: float = DEFAULT_DT,
    threads: int = 1,
) -> EnsembleResult:
    """Run the Monte-Carlo ensemble for one variation scenario.

    Replicate ``r`` integrates ``sample_params(base, spec, r)`` and samples
    it weekly.  Results are assembled in replicate order and are a pure
    function of the inputs, independent of ``threads``.
    """
    if weeks < 1:
        raise ValueError(f"weeks must be >= 1, got {weeks}")
    jobs = [(base, spec, weeks, dt, r) for r in range(spec.replicates)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_mc_replicate, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        rows = [_mc_replicate(job) for job in jobs]
    series = tuple(WeeklySeries(weeks=weeks, infected=row) for row in rows)
    return EnsembleResult(replicates=spec.replicates, series=series)
