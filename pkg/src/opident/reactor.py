"""Synthetic reactor step-back transients from six-group point kinetics.

The state is the power ``P`` (percent of full power) and the delayed-neutron
precursor concentrations ``C_g`` expressed in the same units::

    dP/dt   = ((rho(t) - beta) / Lambda) P + sum_g lambda_g C_g
    dC_g/dt = (beta_g / Lambda) P - lambda_g C_g

Integration uses fixed-step classical RK4, starting from the equilibrium
``C_g(0) = beta_g P(0) / (Lambda lambda_g)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationFailure, InvalidInputError

# U-235 thermal fission: relative group abundances and decay constants (1/s)
_GROUP_ABUNDANCE = (0.033, 0.219, 0.196, 0.395, 0.115, 0.042)
DEFAULT_BETA_TOTAL = 0.0065
DEFAULT_DECAY = (0.0124, 0.0305, 0.111, 0.301, 1.14, 3.01)
DEFAULT_GENERATION_TIME = 1e-3

STANDARD_POWERS = (100.0, 90.0, 80.0, 70.0)
STANDARD_DROPS = (30.0, 50.0)
DEFAULT_WORTH_MK = -10.0
DEFAULT_DROP_DURATION = 2.0

TRANSIENT_COLUMNS = ("t_s", "rod_fraction", "initial_power_pct", "drop_pct", "power_pct")


@dataclass(frozen=True)
class PointKineticsParams:
    """Delayed-neutron data.

    Attributes:
        beta: delayed fraction of each precursor group.
        decay: decay constant of each group, 1/s.
        generation_time: prompt neutron generation time, s.
    """

    beta: tuple = tuple(a * DEFAULT_BETA_TOTAL for a in _GROUP_ABUNDANCE)
    decay: tuple = DEFAULT_DECAY
    generation_time: float = DEFAULT_GENERATION_TIME

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "decay", tuple(float(d) for d in self.decay))
        if len(self.beta) != len(self.decay) or not self.beta:
            raise InvalidInputError("beta and decay must have the same non-zero length")
        values = (*self.beta, *self.decay, self.generation_time)
        if not all(math.isfinite(v) and v > 0 for v in values):
            raise InvalidInputError("beta, decay and generation_time must be positive and finite")

    @property
    def groups(self) -> int:
        return len(self.beta)

    @property
    def beta_total(self) -> float:
        return math.fsum(self.beta)


@dataclass(frozen=True)
class StepBackScenario:
    """One rod-drop transient.

    ``drop_duration_s == 0`` gives an instantaneous insertion just after t = 0.
    """

    initial_power_pct: float
    drop_pct: float
    total_rod_worth_mk: float = DEFAULT_WORTH_MK
    drop_duration_s: float = DEFAULT_DROP_DURATION
    horizon_s: float = 14.0
    dt_s: float = 0.1

    def __post_init__(self):
        if not 0 < self.initial_power_pct <= 100:
            raise InvalidInputError(f"initial_power_pct={self.initial_power_pct} outside (0, 100]")
        if not 0 <= self.drop_pct <= 100:
            raise InvalidInputError(f"drop_pct={self.drop_pct} outside [0, 100]")
        if self.total_rod_worth_mk > 0 or not math.isfinite(self.total_rod_worth_mk):
            raise InvalidInputError("total_rod_worth_mk must be finite and non-positive")
        if self.drop_duration_s < 0 or self.dt_s <= 0 or self.horizon_s <= 0:
            raise InvalidInputError("drop_duration_s must be >= 0, horizon_s and dt_s > 0")
        steps = self.horizon_s / self.dt_s
        if abs(steps - round(steps)) > 1e-9:
            raise InvalidInputError("horizon_s must be a whole multiple of dt_s")

    @property
    def sample_count(self) -> int:
        return int(round(self.horizon_s / self.dt_s)) + 1

    @property
    def sample_times(self) -> np.ndarray:
        return np.arange(self.sample_count) * self.dt_s


@dataclass(frozen=True, eq=False)
class Transient:
    """Sampled output of one scenario."""

    scenario: StepBackScenario
    t: np.ndarray
    rod_fraction: np.ndarray
    power_pct: np.ndarray
    precursors: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.t)


def rod_position(t, scenario: StepBackScenario):
    """Inserted rod length as a fraction of full travel at time ``t``."""
    if np.any(np.asarray(t) < 0):
        raise InvalidInputError("t must be non-negative")
    final = scenario.drop_pct / 100.0
    if scenario.drop_duration_s == 0:
        out = np.where(np.asarray(t) > 0, final, 0.0)
    else:
        out = final * np.minimum(np.asarray(t, dtype=float) / scenario.drop_duration_s, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def reactivity(rod_fraction, total_rod_worth_mk=DEFAULT_WORTH_MK):
    """Linear rod worth: rho = worth * fraction, returned in dk/k."""
    f = np.asarray(rod_fraction, dtype=float)
    if np.any(f < 0) or np.any(f > 1) or not np.all(np.isfinite(f)):
        raise InvalidInputError("rod fraction must lie in [0, 1]")
    rho = total_rod_worth_mk * 1e-3 * f
    return float(rho) if np.ndim(rho) == 0 else rho


def _scenario_reactivity(scenario):
    final = scenario.drop_pct / 100.0
    worth = scenario.total_rod_worth_mk * 1e-3
    dur = scenario.drop_duration_s

    def rho(t):
        if dur == 0:
            return worth * final if t > 0 else 0.0
        return worth * final * min(t / dur, 1.0)

    return rho


def integrate_point_kinetics(
    params: PointKineticsParams,
    scenario: StepBackScenario,
    dt_int: float = 1e-3,
    reactivity_fn=None,
    sample_dt: float | None = None,
) -> Transient:
    """Integrate the point-kinetics equations for one scenario.

    Args:
        params: delayed-neutron data.
        scenario: initial power, rod drop and sampling grid.
        dt_int: RK4 step; must divide the sampling interval.
        reactivity_fn: optional ``rho(t)`` overriding the scenario's rod ramp.
        sample_dt: optional output interval overriding ``scenario.dt_s``.

    Returns:
        A :class:`Transient` sampled on ``0, sample_dt, ..., horizon_s``.
    """
    sample_dt = scenario.dt_s if sample_dt is None else sample_dt
    per_sample = sample_dt / dt_int
    n_per = int(round(per_sample))
    if n_per < 1 or abs(per_sample - n_per) > 1e-9 * max(1.0, per_sample):
        raise InvalidInputError("dt_int must divide the sampling interval")
    n_samples = int(round(scenario.horizon_s / sample_dt)) + 1
    h = sample_dt / n_per
    rho = reactivity_fn or _scenario_reactivity(scenario)

    beta = np.array(params.beta)
    lam = np.array(params.decay)
    gen = params.generation_time
    beta_total = params.beta_total
    g = params.groups

    # linear system y' = (A + rho(t)/Lambda e0 e0^T) y with y = [P, C_1..C_G]
    a = np.zeros((g + 1, g + 1))
    a[0, 0] = -beta_total / gen
    a[0, 1:] = lam
    a[1:, 0] = beta / gen
    a[1:, 1:] = -np.diag(lam)

    def deriv(t, y):
        dy = a @ y
        dy[0] += rho(t) / gen * y[0]
        return dy

    p0 = float(scenario.initial_power_pct)
    y = np.concatenate([[p0], beta * p0 / (gen * lam)])
    states = np.empty((n_samples, g + 1))
    states[0] = y
    step = 0
    with np.errstate(over="ignore", invalid="ignore"):  # blow-ups are caught by the finiteness check
        for k in range(1, n_samples):
            for _ in range(n_per):
                t = step * h
                k1 = deriv(t, y)
                k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1)
                k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2)
                k4 = deriv(t + h, y + h * k3)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                step += 1
            if not np.all(np.isfinite(y)):
                raise IntegrationFailure(f"non-finite state at t={k * sample_dt:g} s")
            states[k] = y

    t = np.arange(n_samples) * sample_dt
    if reactivity_fn is None:
        rods = rod_position(t, scenario)
    else:
        rods = np.full(n_samples, np.nan)
    return Transient(scenario, t, np.asarray(rods, dtype=float), states[:, 0].copy(), states[:, 1:].copy())


def generate_stepback_corpus(
    params: PointKineticsParams | None = None,
    worth_mk: float = DEFAULT_WORTH_MK,
    drop_duration_s: float = DEFAULT_DROP_DURATION,
    powers=STANDARD_POWERS,
    drops=STANDARD_DROPS,
    dt_int: float = 1e-3,
) -> list:
    """All power x drop combinations, drop-major (30% block first)."""
    params = params or PointKineticsParams()
    corpus = []
    for drop in drops:
        for power in powers:
            scenario = StepBackScenario(float(power), float(drop), worth_mk, drop_duration_s)
            corpus.append(integrate_point_kinetics(params, scenario, dt_int=dt_int))
    return corpus


def write_transient_csv(corpus, path):
    """Write a corpus with columns t_s, rod_fraction, initial_power_pct, drop_pct, power_pct."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRANSIENT_COLUMNS)
        for tr in corpus:
            sc = tr.scenario
            for t, rod, p in zip(tr.t, tr.rod_fraction, tr.power_pct):
                writer.writerow([repr(float(t)), repr(float(rod)), repr(float(sc.initial_power_pct)),
                                 repr(float(sc.drop_pct)), repr(float(p))])
