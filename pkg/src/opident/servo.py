"""Trapezoidal velocity profiles for the servo position corpus.

A profile accelerates at ``a`` to ``v_max``, cruises, then decelerates at
``-a`` so that it comes to rest exactly at the target position and holds
there. Position is evaluated in closed form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidProfileError

STANDARD_ACCELERATIONS = (5e6, 1e6)
DEFAULT_VELOCITIES = tuple(v * 1e5 for v in (7.0, 7.5, 8.0, 8.5, 9.0, 9.5, 10.0, 10.5, 11.0))
DEFAULT_TARGET = 1.5e6

SERVO_COLUMNS = ("t_s", "accel_ppu_s2", "vel_ppu_s", "pos_ppu")


@dataclass(frozen=True)
class MotionProfile:
    acceleration: float
    peak_velocity: float
    target_position: float = DEFAULT_TARGET
    horizon_s: float = 5.0
    sample_count: int = 5000

    def __post_init__(self):
        if not (self.acceleration > 0 and self.peak_velocity > 0):
            raise InvalidProfileError("acceleration and peak_velocity must be positive")
        if self.target_position < self.peak_velocity ** 2 / self.acceleration:
            raise InvalidProfileError(
                f"target {self.target_position:g} ppu is shorter than the accelerate/decelerate "
                f"distance {self.peak_velocity ** 2 / self.acceleration:g} ppu"
            )
        if self.horizon_s <= 0 or self.sample_count < 1:
            raise InvalidProfileError("horizon_s and sample_count must be positive")

    @property
    def accel_end(self) -> float:
        return self.peak_velocity / self.acceleration

    @property
    def cruise_end(self) -> float:
        return self.target_position / self.peak_velocity

    @property
    def stop_time(self) -> float:
        return self.cruise_end + self.accel_end

    @property
    def sample_times(self) -> np.ndarray:
        return np.arange(self.sample_count) * (self.horizon_s / self.sample_count)

    def phase_fractions(self):
        """Fraction of the motion time spent ramping (accel + decel) and cruising."""
        ramp = 2 * self.accel_end / self.stop_time
        return ramp, 1.0 - ramp


def profile_state(profile: MotionProfile, t):
    """Position and velocity at time ``t`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > profile.horizon_s):
        raise InvalidInputError(f"t outside [0, {profile.horizon_s}]")
    a, v, target = profile.acceleration, profile.peak_velocity, profile.target_position
    t1, t2, t3 = profile.accel_end, profile.cruise_end, profile.stop_time
    tau = np.clip(t3 - t_arr, 0.0, None)
    phases = [t_arr <= t1, t_arr <= t2, t_arr < t3]
    pos = np.select(
        phases,
        [0.5 * a * t_arr ** 2, 0.5 * v * t1 + v * (t_arr - t1), target - 0.5 * a * tau ** 2],
        default=target,
    )
    vel = np.select(phases, [a * t_arr, np.full_like(t_arr, v), a * tau], default=0.0)
    if pos.ndim == 0:
        return float(pos), float(vel)
    return pos, vel


@dataclass(frozen=True, eq=False)
class ServoSeries:
    profile: MotionProfile
    t: np.ndarray
    velocity: np.ndarray
    position: np.ndarray

    def __len__(self):
        return len(self.t)


def generate_servo_corpus(velocities=DEFAULT_VELOCITIES, accelerations=STANDARD_ACCELERATIONS,
                          target=DEFAULT_TARGET, horizon_s=5.0, sample_count=5000) -> list:
    """One series per (acceleration, velocity) pair, acceleration-major."""
    corpus = []
    for a in accelerations:
        for v in velocities:
            profile = MotionProfile(float(a), float(v), float(target), horizon_s, sample_count)
            if profile.stop_time > horizon_s:
                raise InvalidProfileError(
                    f"profile a={a:g}, v={v:g} stops at {profile.stop_time:.3f} s, after the "
                    f"{horizon_s:g} s horizon"
                )
            t = profile.sample_times
            pos, vel = profile_state(profile, t)
            corpus.append(ServoSeries(profile, t, vel, pos))
    return corpus


def write_servo_csv(corpus, path):
    """Write a corpus with columns t_s, accel_ppu_s2, vel_ppu_s, pos_ppu."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERVO_COLUMNS)
        for s in corpus:
            a = repr(float(s.profile.acceleration))
            for t, v, p in zip(s.t, s.velocity, s.position):
                writer.writerow([repr(float(t)), a, repr(float(v)), repr(float(p))])
