"""Shared domain types and epidemiological parameter definitions.

Both simulation paradigms consume the same :class:`SirParams`.  The ODE
model composes them into the classic transmission coefficient via
frequency-dependent mixing, ``a = contact_rate * infection_prob / N``, and
a recovery rate ``b = 1 / illness_duration``, so that a contact rate and a
per-contact infection probability mean the same thing to the agent-based
model and to the differential equations.

All types are immutable after construction and validate their fields, so
they can be shared freely between worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Population of the Osterlovsta study region (Russian influenza, Sweden,
#: 1889-90) used as the default experiment size.
DEFAULT_POPULATION = 52910

#: Per-contact transmission probability fitted to the influenza data.
DEFAULT_INFECTION_PROB = 0.065

#: Mean infectious period in days fitted to the influenza data.
DEFAULT_ILLNESS_DURATION = 4.2

#: Fraction of the population ever infected in the study region; the
#: default contact rate is calibrated so the deterministic model hits it.
DEFAULT_ATTACK_RATE = 0.61


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class SirParams:
    """Epidemiological parameter set shared by both simulation paradigms.

    Attributes
    ----------
    population : int
        Total number of individuals, N >= 1.
    contact_rate : float
        Contacts per individual per day, >= 0.
    infection_prob : float
        Probability of transmission per susceptible-infectious contact,
        in [0, 1].
    illness_duration : float
        Days spent infectious, > 0.  The recovery rate is its inverse.
    initial_infected : int
        Index cases at t = 0, in [0, population].
    """

    population: int
    contact_rate: float
    infection_prob: float
    illness_duration: float
    initial_infected: int = 1

    def __post_init__(self):
        _require(self.population >= 1, f"population must be >= 1, got {self.population}")
        _require(self.contact_rate >= 0.0, f"contact_rate must be >= 0, got {self.contact_rate}")
        _require(
            0.0 <= self.infection_prob <= 1.0,
            f"infection_prob must be in [0, 1], got {self.infection_prob}",
        )
        _require(
            self.illness_duration > 0.0,
            f"illness_duration must be > 0, got {self.illness_duration}",
        )
        _require(
            0 <= self.initial_infected <= self.population,
            f"initial_infected must be in [0, population], got {self.initial_infected}",
        )

    @property
    def recovery_rate(self) -> float:
        """Per-day recovery rate b = 1 / illness_duration."""
        return 1.0 / self.illness_duration


def derived_rates(params: SirParams) -> tuple[float, float]:
    """ODE coefficients (a, b) implied by a parameter set.

    ``a = contact_rate * infection_prob / population`` is the per-pair
    transmission coefficient of the frequency-dependent SIR equations;
    ``b`` is the recovery rate.  ``a`` is homogeneous of degree -1 in the
    population and +1 in each of contact rate and infection probability.
    """
    a = params.contact_rate * params.infection_prob / params.population
    b = 1.0 / params.illness_duration
    return a, b


def basic_reproduction_number(params: SirParams) -> float:
    """R0 = a * N / b = contact_rate * infection_prob * illness_duration."""
    a, b = derived_rates(params)
    return a * params.population / b


@dataclass(frozen=True)
class CompartmentState:
    """Sizes of the three compartments at one instant.

    Counts are reals so a single type serves both the continuous ODE
    states and the integer agent-count states.
    """

    s: float
    i: float
    r: float

    def __post_init__(self):
        _require(self.s >= 0.0 and self.i >= 0.0 and self.r >= 0.0,
                 f"compartment counts must be non-negative, got ({self.s}, {self.i}, {self.r})")

    @property
    def total(self) -> float:
        return self.s + self.i + self.r


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A simulated compartment path at integration resolution.

    ``states`` has shape (steps + 1, 3) with columns (S, I, R); row 0 is
    the initial condition and row k is the state at time ``k * dt`` days.
    """

    dt: float
    states: np.ndarray

    def __post_init__(self):
        _require(self.dt > 0.0, f"dt must be > 0, got {self.dt}")
        states = np.asarray(self.states, dtype=float)
        _require(states.ndim == 2 and states.shape[1] == 3,
                 f"states must have shape (n, 3), got {states.shape}")
        _require(states.shape[0] >= 1, "trajectory must be non-empty")
        _require(bool((states >= 0.0).all()), "trajectory contains negative compartment counts")
        states = states.copy()
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def horizon_days(self) -> float:
        return (len(self) - 1) * self.dt

    @property
    def s(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def i(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def r(self) -> np.ndarray:
        return self.states[:, 2]

    def state(self, index: int) -> CompartmentState:
        s, i, r = self.states[index]
        return CompartmentState(s, i, r)


@dataclass(frozen=True, eq=False)
class WeeklySeries:
    """Infected counts sampled at consecutive week boundaries.

    ``infected[w]`` is the prevalence at the end of week ``w + 1``
    (day ``7 * (w + 1)``), the end-of-week convention used throughout.
    """

    weeks: int
    infected: np.ndarray

    def __post_init__(self):
        _require(self.weeks >= 1, f"weeks must be >= 1, got {self.weeks}")
        infected = _frozen_array(self.infected)
        _require(infected.ndim == 1 and infected.size == self.weeks,
                 f"expected {self.weeks} weekly values, got {infected.size}")
        _require(bool((infected >= 0.0).all()), "weekly infected counts must be non-negative")
        object.__setattr__(self, "infected", infected)

    def __len__(self) -> int:
        return self.weeks

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeeklySeries):
            return NotImplemented
        return self.weeks == other.weeks and bool(np.array_equal(self.infected, other.infected))


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Replicate-by-week matrix of infected counts from an ensemble run."""

    replicates: int
    series: tuple[WeeklySeries, ...] = field(default_factory=tuple)

    def __post_init__(self):
        series = tuple(self.series)
        _require(self.replicates >= 1, f"replicates must be >= 1, got {self.replicates}")
        _require(len(series) == self.replicates,
                 f"expected {self.replicates} series, got {len(series)}")
        horizons = {s.weeks for s in series}
        _require(len(horizons) == 1, f"all replicates must share one horizon, got {horizons}")
        object.__setattr__(self, "series", series)

    @property
    def weeks(self) -> int:
        return self.series[0].weeks

    @property
    def matrix(self) -> np.ndarray:
        """(replicates, weeks) array of infected counts."""
        return np.vstack([s.infected for s in self.series])

    def __eq__(self, other) -> bool:
        if not isinstance(other, EnsembleResult):
            return NotImplemented
        return (self.replicates == other.replicates
                and bool(np.array_equal(self.matrix, other.matrix)))


def final_size_reproduction_number(attack_rate: float) -> float:
    """R0 for which the closed SIR epidemic infects ``attack_rate`` of everyone.

    Inverts the final-size relation ``1 - s_inf = 1 - exp(-R0 (1 - s_inf))``
    at ``1 - s_inf = attack_rate``, which solves in closed form.
    """
    _require(0.0 < attack_rate < 1.0, f"attack_rate must be in (0, 1), got {attack_rate}")
    return -math.log(1.0 - attack_rate) / attack_rate


def attack_fraction(r0: float, tol: float = 1e-14) -> float:
    """Final epidemic size fraction for a given R0 (Newton iteration).

    Solves ``f(x) = x - 1 + exp(-R0 x) = 0`` for the attack fraction x.
    Returns 0 when R0 <= 1 (no epidemic in the deterministic limit).
    """
    if r0 <= 1.0:
        return 0.0
    x = 1.0 - 1.0 / r0  # always below the root, Newton converges monotonically
    for _ in range(100):
        fx = x - 1.0 + math.exp(-r0 * x)
        dfx = 1.0 - r0 * math.exp(-r0 * x)
        step = fx / dfx
        x -= step
        if abs(step) < tol:
            break
    return x


def calibrate_contact_rate(
    target_attack: float = DEFAULT_ATTACK_RATE,
    infection_prob: float = DEFAULT_INFECTION_PROB,
    illness_duration: float = DEFAULT_ILLNESS_DURATION,
) -> float:
    """Contact rate for which the deterministic model hits a target attack rate.

    The observed data fixes the attack rate (61% of the study population)
    but not the contact rate, so the default contact rate is derived from
    ``R0 = contact_rate * infection_prob * illness_duration`` with R0 taken
    from the final-size relation.  With the default inputs this yields
    R0 ~= 1.5436 and ~5.654 contacts per day.
    """
    r0 = final_size_reproduction_number(target_attack)
    return r0 / (infection_prob * illness_duration)


def default_params(
    population: int = DEFAULT_POPULATION,
    initial_infected: int = 1,
) -> SirParams:
    """Parameter set for the default experiment configuration."""
    return SirParams(
        population=population,
        contact_rate=calibrate_contact_rate(),
        infection_prob=DEFAULT_INFECTION_PROB,
        illness_duration=DEFAULT_ILLNESS_DURATION,
        initial_infected=initial_infected,
    )
