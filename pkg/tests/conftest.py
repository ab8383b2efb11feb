"""Shared fixtures: synthetic force signals and corpus builders."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from pflkit import dataset_report
from pflkit.trace_analysis import ForceTrace


def make_trace(samples, sample_rate=1000.0, onset_threshold=20.0) -> ForceTrace:
    return ForceTrace(sample_rate, np.asarray(samples, dtype=float), onset_threshold)


def triangle_pulse(
    peak=300.0, start=20.0, rise_s=0.05, fall_s=0.05, tail_s=0.0, sample_rate=1000.0
) -> ForceTrace:
    """Rise from the threshold to a peak, fall to zero, optional zero tail."""
    n_rise = int(round(rise_s * sample_rate))
    n_fall = int(round(fall_s * sample_rate))
    n_tail = int(round(tail_s * sample_rate))
    rise = np.linspace(start, peak, n_rise + 1)
    fall = np.linspace(peak, 0.0, n_fall + 1)[1:]
    return make_trace(np.concatenate([rise, fall, np.zeros(n_tail)]), sample_rate)


def plateau_trace(level=150.0, rise_s=0.02, hold_s=2.0, sample_rate=1000.0) -> ForceTrace:
    n_rise = int(round(rise_s * sample_rate))
    n_hold = int(round(hold_s * sample_rate))
    rise = np.linspace(20.0, level, n_rise + 1)
    return make_trace(np.concatenate([rise, np.full(n_hold, level)]), sample_rate)


def damped_sinusoid_trace(
    offset=150.0,
    amplitude=200.0,
    decay=5.0,
    omega=2.0 * math.pi * 8.0,
    duration_s=1.5,
    sample_rate=1000.0,
) -> ForceTrace:
    """offset + amplitude * exp(-decay t) * cos(omega t); peak at t = 0."""
    t = np.arange(int(round(duration_s * sample_rate)) + 1) / sample_rate
    return make_trace(offset + amplitude * np.exp(-decay * t) * np.cos(omega * t), sample_rate)


def synthetic_record(
    robot="UR10e",
    place=0,
    velocity=0.2,
    skin_setting="none",
    safety_setting="Pre-4",
    repetition=0,
    peak=100.0,
    tail_level=0.0,
    tail_s=0.0,
) -> dataset_report.MeasurementRecord:
    """Measurement with a prescribed peak and an optional clamping tail.

    Peaks live inside the first 0.5 s; a nonzero tail extends past 0.5 s so
    the second limit window sees force.
    """
    sample_rate = 1000.0
    rise = np.linspace(20.0, peak, 21)
    fall = np.linspace(peak, tail_level, 21)[1:]
    tail = np.full(int(round(tail_s * sample_rate)), tail_level)
    samples = np.concatenate([rise, fall, tail])
    directions = {0: (0.0, 0.0, -1.0), 1: (0.0, 1.0, 0.0), 2: (1.0, 0.0, 0.0),
                  3: (0.0, 1.0, 0.0), 4: (1.0, 0.0, 0.0)}
    kind = dataset_report.QUASI_STATIC if place in (0, 1, 2) else dataset_report.TRANSIENT
    return dataset_report.MeasurementRecord(
        robot=robot,
        place=place,
        direction=directions[place],
        contact_kind=kind,
        velocity=velocity,
        skin_setting=skin_setting,
        safety_setting=safety_setting,
        repetition=repetition,
        trace=make_trace(samples, sample_rate),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)
