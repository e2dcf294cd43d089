"""Deterministic system-dynamics SIR integrator.

The model is the classic coupled system

    dS/dt = -a S I
    dI/dt =  a S I - b I
    dR/dt =  b I

integrated with fixed-step classical 4th-order Runge-Kutta.  SIR is smooth
and non-stiff, so a fixed step keeps weekly sampling exact and results
bit-reproducible; the default step is 0.1 day.
"""

from __future__ import annotations

import numpy as np

from .core import CompartmentState, SirParams, Trajectory, WeeklySeries, derived_rates

#: Default integration step in days.
DEFAULT_DT = 0.1

#: Relative tolerance on |S + I + R - N| along a trajectory.
CONSERVATION_RTOL = 1e-6

# Negative excursions beyond this (relative to N) mean the step is too large.
_NEGATIVE_RTOL = 1e-9


class StepSizeError(RuntimeError):
    """The integration step pushed a state out of the valid region."""


class HorizonError(ValueError):
    """The trajectory is too short for the requested weekly sampling."""


def sir_derivatives(state: CompartmentState, a: float, b: float) -> tuple[float, float, float]:
    """Right-hand side (dS, dI, dR) of the SIR equations at one state.

    The three rates sum to zero analytically; the population only moves
    between compartments.
    """
    if a < 0.0 or b < 0.0:
        raise ValueError(f"rates must be non-negative, got a={a}, b={b}")
    infection = a * state.s * state.i
    recovery = b * state.i
    return -infection, infection - recovery, recovery


def integrate(params: SirParams, horizon_days: float, dt: float = DEFAULT_DT) -> Trajectory:
    """Integrate the SIR equations from (N - I0, I0, 0) over ``horizon_days``.

    Parameters
    ----------
    params : SirParams
        Epidemiological parameters; the ODE coefficients come from
        :func:`sirvar.core.derived_rates`.
    horizon_days : float
        Length of the integration in days, >= dt.
    dt : float
        Fixed step in days.

    Returns
    -------
    Trajectory
        ``floor(horizon_days / dt) + 1`` states including the initial one.

    Raises
    ------
    StepSizeError
        If any step leaves the valid region (negative compartments beyond
        roundoff, or conservation drift above ``CONSERVATION_RTOL * N``).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if dt > horizon_days:
        raise ValueError(f"dt={dt} exceeds horizon_days={horizon_days}")

    a, b = derived_rates(params)
    n = float(params.population)
    steps = int(np.floor(horizon_days / dt + 1e-12))
    out = np.empty((steps + 1, 3), dtype=float)

    s = n - float(params.initial_infected)
    i = float(params.initial_infected)
    r = 0.0
    out[0] = (s, i, r)

    neg_tol = _NEGATIVE_RTOL * n
    cons_tol = CONSERVATION_RTOL * n
    half = 0.5 * dt
    sixth = dt / 6.0

    for k in range(steps):
        s1, i1 = -a * s * i, a * s * i - b * i
        sa, ia = s + half * s1, i + half * i1
        s2, i2 = -a * sa * ia, a * sa * ia - b * ia
        sb, ib = s + half * s2, i + half * i2
        s3, i3 = -a * sb * ib, a * sb * ib - b * ib
        sc, ic = s + dt * s3, i + dt * i3
        s4, i4 = -a * sc * ic, a * sc * ic - b * ic
        ds = sixth * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
        di = sixth * (i1 + 2.0 * i2 + 2.0 * i3 + i4)
        s += ds
        i += di
        r -= ds + di  # dR = -(dS + dI); keeps the sum conserved to roundoff

        if s < -neg_tol or i < -neg_tol or r < -neg_tol:
            raise StepSizeError(
                f"state left the valid region at step {k + 1} (t={(k + 1) * dt:.3f} d) "
                f"with dt={dt}: S={s:.6g}, I={i:.6g}, R={r:.6g}; reduce dt"
            )
        if abs(s + i + r - n) > cons_tol:
            raise StepSizeError(
                f"conservation drift exceeds {cons_tol:.3g} at step {k + 1} with dt={dt}"
            )
        # Clip roundoff-scale negatives so downstream types stay valid.
        if s < 0.0:
            s = 0.0
        if i < 0.0:
            i = 0.0
        out[k + 1] = (s, i, r)

    return Trajectory(dt=dt, states=out)


def weekly_sample(traj: Trajectory, weeks: int) -> WeeklySeries:
    """Resample a trajectory onto the weekly reporting grid.

    ``infected[w]`` is the prevalence at day ``7 * (w + 1)``, i.e. at the
    end of each week.  The step must divide the week boundaries (true for
    the defaults), otherwise the requested instants are not on the grid.
    """
    if weeks < 1:
        raise ValueError(f"weeks must be >= 1, got {weeks}")
    if traj.horizon_days < 7.0 * weeks - 1e-9:
        raise HorizonError(
            f"trajectory spans {traj.horizon_days:.3f} days, "
            f"need at least {7 * weeks} for {weeks} weeks"
        )
    indices = np.empty(weeks, dtype=int)
    for w in range(weeks):
        day = 7.0 * (w + 1)
        idx = int(round(day / traj.dt))
        if abs(idx * traj.dt - day) > 1e-9:
            raise ValueError(f"dt={traj.dt} does not place day {day} on the integration grid")
        indices[w] = idx
    return WeeklySeries(weeks=weeks, infected=traj.i[indices])
