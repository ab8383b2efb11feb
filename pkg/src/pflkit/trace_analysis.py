"""Collision metrics from a sampled post-impact force signal.

Traces follow the convention of the impact-measuring device used for
validating collaborative applications: recording starts the instant the
force crosses the onset threshold (20 N by default), runs at a fixed sample
rate, and stops after the duration cap (5 s). Time zero of every trace is
therefore the onset, and the pre-threshold ramp is not part of the data.

The post-impact force profile splits into a dynamic phase (up to the first
minimum after the force peak) and a follow-up phase whose shape names the
collision type:

    Type 1  force returns below the onset threshold and stays there
            (the robot separates or retracts)
    Type 2  sustained oscillation about a nonzero level
    Type 3  force settles at a nonzero clamping level

Force values are always read from the raw signal. A centred moving-average
smoother is applied only where extremum *positions* are searched, because
load-cell noise creates spurious minima; the window is a repo convention,
configurable and 5 ms by default.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_ONSET_THRESHOLD = 20.0  # N, trigger level of the measuring device
DEFAULT_DURATION_CAP = 5.0      # s, device records this long after triggering
DEFAULT_SMOOTHING_WINDOW = 0.005  # s, centred moving average for extremum search
DEFAULT_SETTLE_WINDOW = 0.5     # s, tail used for clamping force and typing
WINDOW_SPLIT = 0.5              # s, boundary between the two force-limit windows

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class TraceError(ValueError):
    """Invalid trace data or an operation on an unsuitable trace."""


class CollisionType(enum.Enum):
    TYPE1 = "Type1"
    TYPE2 = "Type2"
    TYPE3 = "Type3"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class ForceTrace:
    """Force samples in N at a fixed rate, starting at the onset threshold.

    Samples beyond the duration cap are dropped on construction, mirroring
    the device. An empty trace is legal and represents "never triggered".
    """

    sample_rate: float
    samples: np.ndarray
    onset_threshold: float = DEFAULT_ONSET_THRESHOLD
    duration_cap: float = DEFAULT_DURATION_CAP

    def __post_init__(self):
        if not self.sample_rate > 0.0:
            raise TraceError("sample rate must be positive")
        if not self.duration_cap > 0.0:
            raise TraceError("duration cap must be positive")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise TraceError("samples must be a 1-D sequence")
        if samples.size and not np.all(np.isfinite(samples)):
            raise TraceError("samples must all be finite")
        cap = int(round(self.duration_cap * self.sample_rate)) + 1
        samples = np.array(samples[:cap])
        if samples.size and samples[0] < self.onset_threshold:
            raise TraceError(
                "first sample below the onset threshold; traces start at the "
                "threshold crossing (use ForceTrace.from_signal to trigger)"
            )
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_signal(
        cls,
        signal,
        sample_rate: float,
        onset_threshold: float = DEFAULT_ONSET_THRESHOLD,
        duration_cap: float = DEFAULT_DURATION_CAP,
    ) -> "ForceTrace":
        """Apply the trigger convention to a raw sampled signal."""
        sig = np.asarray(signal, dtype=float)
        hits = np.nonzero(sig >= onset_threshold)[0]
        start = hits[0] if hits.size else sig.size
        return cls(sample_rate, sig[start:], onset_threshold, duration_cap)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate

    @property
    def duration(self) -> float:
        return 0.0 if len(self) == 0 else (len(self) - 1) / self.sample_rate


def _require_nonempty(trace: ForceTrace) -> None:
    if len(trace) == 0:
        raise TraceError("empty trace")


def _window_samples(trace: ForceTrace, window: float) -> int:
    return max(1, int(round(window * trace.sample_rate)))


def smooth(samples: np.ndarray, window_samples: int) -> np.ndarray:
    """Centred moving average; shrinks the window near the edges."""
    n = samples.size
    if n == 0 or window_samples <= 1:
        return np.array(samples, dtype=float)
    half = window_samples // 2
    padded = np.concatenate(([0.0], np.cumsum(samples, dtype=float)))
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    return (padded[hi] - padded[lo]) / (hi - lo)


def peak(trace: ForceTrace) -> tuple[float, float]:
    """Global force maximum and its time; earliest index wins ties."""
    _require_nonempty(trace)
    idx = int(np.argmax(trace.samples))
    return float(trace.samples[idx]), idx / trace.sample_rate


def phase1_duration(
    trace: ForceTrace, smoothing_window: float = DEFAULT_SMOOTHING_WINDOW
) -> float | None:
    """Time from onset to the first local minimum after the force peak.

    The minimum is located on the smoothed signal, anchored just after the
    raw peak. Returns None when no interior local minimum exists before the
    trace ends (a monotone rise, or a robot that keeps pushing).
    """
    _require_nonempty(trace)
    raw_peak = int(np.argmax(trace.samples))
    s = smooth(trace.samples, _window_samples(trace, smoothing_window))
    for i in range(raw_peak + 1, len(s) - 1):
        if s[i] < s[i - 1] and s[i] <= s[i + 1]:
            return i / trace.sample_rate
    return None


def clamping_force(trace: ForceTrace, settle_window: float = DEFAULT_SETTLE_WINDOW) -> float:
    """Mean force over the final settling window (default: last 0.5 s)."""
    _require_nonempty(trace)
    w = _window_samples(trace, settle_window)
    if len(trace) < w:
        raise TraceError(
            f"trace ({trace.duration:.3f} s) shorter than the settling window "
            f"({settle_window:.3f} s)"
        )
    return float(trace.samples[-w:].mean())


def impulse_to_peak(trace: ForceTrace) -> float:
    """Trapezoidal integral of the force from onset to the peak, N s."""
    _require_nonempty(trace)
    idx = int(np.argmax(trace.samples))
    return float(_trapezoid(trace.samples[: idx + 1], dx=1.0 / trace.sample_rate))


def trace_impulse(trace: ForceTrace) -> float:
    """Trapezoidal integral of the force over the whole trace, N s."""
    _require_nonempty(trace)
    return float(_trapezoid(trace.samples, dx=1.0 / trace.sample_rate))


def estimate_robot_mass(trace: ForceTrace, v0: float) -> float:
    """Apparent robot mass from the impulse-momentum balance J / v0.

    Assumes the approach velocity v0 has dropped to zero at the force peak.
    On measured traces of stiff position-controlled robots the estimate can
    exceed the rigid-body effective mass several-fold, because the controller
    keeps feeding momentum after contact; treat it as an empirical indicator,
    not ground truth.
    """
    if not v0 > 0.0:
        raise TraceError("approach velocity must be positive")
    return impulse_to_peak(trace) / v0


def window_maxima(trace: ForceTrace, split: float = WINDOW_SPLIT) -> tuple[float, float]:
    """Force maxima before and after the split time (default 0.5 s).

    Measured from onset. The second value is 0 for traces that end before
    the split, there being no observed force in that window.
    """
    if len(trace) == 0:
        return 0.0, 0.0
    boundary = int(math.ceil(split * trace.sample_rate))
    first = trace.samples[:boundary]
    second = trace.samples[boundary:]
    return (
        float(first.max()) if first.size else 0.0,
        float(second.max()) if second.size else 0.0,
    )


def _alternating_extrema(values: np.ndarray) -> list[tuple[int, float, str]]:
    """Interior local extrema of a signal, plateaus collapsed to their start."""
    out: list[tuple[int, float, str]] = []
    direction = 0  # -1 falling, +1 rising, 0 not yet moving
    turn = 0  # where the current monotone run began to level off
    for i in range(1, values.size):
        if values[i] > values[i - 1]:
            if direction == -1:
                out.append((turn, float(values[turn]), "min"))
            direction = 1
            turn = i
        elif values[i] < values[i - 1]:
            if direction == 1:
                out.append((turn, float(values[turn]), "max"))
            direction = -1
            turn = i
    return out


def count_oscillation_cycles(post_peak: np.ndarray, amplitude: float) -> int:
    """Number of trough-to-crest swings at least `amplitude` tall."""
    cycles = 0
    trough: float | None = None
    for _, value, kind in _alternating_extrema(post_peak):
        if kind == "min":
            trough = value
        elif trough is not None:
            if value - trough >= amplitude:
                cycles += 1
            trough = None
    return cycles


def classify(
    trace: ForceTrace,
    min_cycles: int = 2,
    amplitude_ratio: float = 0.25,
    settle_window: float = DEFAULT_SETTLE_WINDOW,
    smoothing_window: float = DEFAULT_SMOOTHING_WINDOW,
) -> CollisionType:
    """Assign the post-impact force profile to Type 1, 2, or 3.

    Type 2 requires at least `min_cycles` post-peak swings whose peak-to-
    trough amplitude reaches `amplitude_ratio` of the peak force, a relative
    rule that is invariant under force scaling. Types 1 and 3 compare the
    trace tail (the settle window, never reaching back past the peak)
    against the onset threshold, so they are threshold-relative by
    construction: a uniformly scaled trace may legitimately change class.
    Traces that end at their peak cannot be judged and come back
    Unclassified.
    """
    _require_nonempty(trace)
    peak_force, _ = peak(trace)
    raw_peak = int(np.argmax(trace.samples))
    s = smooth(trace.samples, _window_samples(trace, smoothing_window))
    cycles = count_oscillation_cycles(s[raw_peak:], amplitude_ratio * peak_force)
    if cycles >= min_cycles:
        return CollisionType.TYPE2
    tail_start = max(raw_peak + 1, len(trace) - _window_samples(trace, settle_window))
    tail = trace.samples[tail_start:]
    if tail.size == 0:
        return CollisionType.UNCLASSIFIED
    if tail.max() < trace.onset_threshold:
        return CollisionType.TYPE1
    if tail.mean() >= trace.onset_threshold:
        return CollisionType.TYPE3
    return CollisionType.UNCLASSIFIED


@dataclass(frozen=True)
class CollisionMetrics:
    """Everything derived from one trace; None marks quantities that need
    extra inputs (estimated mass needs v0) or that the trace cannot support
    (clamping force on a trace shorter than the settling window)."""

    peak_force: float
    peak_time: float
    phase1_duration: float | None
    clamping_force: float | None
    impulse_to_peak: float
    estimated_mass: float | None
    collision_type: CollisionType
    force_in_first_500ms_max: float
    force_after_500ms_max: float


def compute_metrics(trace: ForceTrace, v0: float | None = None) -> CollisionMetrics:
    """Run the full metric set on one trace."""
    peak_force, peak_time = peak(trace)
    try:
        clamp = clamping_force(trace)
    except TraceError:
        clamp = None
    first, second = window_maxima(trace)
    return CollisionMetrics(
        peak_force=peak_force,
        peak_time=peak_time,
        phase1_duration=phase1_duration(trace),
        clamping_force=clamp,
        impulse_to_peak=impulse_to_peak(trace),
        estimated_mass=estimate_robot_mass(trace, v0) if v0 else None,
        collision_type=classify(trace),
        force_in_first_500ms_max=first,
        force_after_500ms_max=second,
    )


def metrics_record(metrics: CollisionMetrics, **extra) -> dict:
    """JSON-ready record of the metrics, with optional extra fields."""
    record = {
        "peak_force_N": metrics.peak_force,
        "peak_time_s": metrics.peak_time,
        "phase1_duration_s": metrics.phase1_duration,
        "clamping_force_N": metrics.clamping_force,
        "impulse_to_peak_Ns": metrics.impulse_to_peak,
        "estimated_mass_kg": metrics.estimated_mass,
        "collision_type": metrics.collision_type.value,
        "force_max_below_500ms_N": metrics.force_in_first_500ms_max,
        "force_max_above_500ms_N": metrics.force_after_500ms_max,
    }
    record.update(extra)
    return record


def metrics_json_line(metrics: CollisionMetrics, **extra) -> str:
    return json.dumps(metrics_record(metrics, **extra), sort_keys=True)


def load_trace(
    path,
    sample_rate: float | None = None,
    onset_threshold: float = DEFAULT_ONSET_THRESHOLD,
) -> ForceTrace:
    """Read a trace file.

    Two layouts are accepted: two delimited columns (time_s, force_N) with a
    uniform time step, or a single force column with `sample_rate` declared
    by the caller. Comma and whitespace delimiters both work; lines starting
    with '#' and a single header line are skipped.
    """
    path = Path(path)
    rows: list[list[str]] = []
    with path.open() as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            rows.append(line.replace(",", " ").split())
    if rows and not _is_float(rows[0][0]):
        rows = rows[1:]  # header line
    if not rows:
        return ForceTrace(sample_rate or 1.0, np.array([]), onset_threshold)
    width = len(rows[0])
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise TraceError(f"{path}: non-numeric trace data ({exc})") from None
    if width == 1:
        if sample_rate is None:
            raise TraceError(f"{path}: single-column trace needs a declared sample rate")
        return ForceTrace(sample_rate, data[:, 0], onset_threshold)
    if width != 2:
        raise TraceError(f"{path}: expected 1 or 2 columns, found {width}")
    times, forces = data[:, 0], data[:, 1]
    if times.size > 1:
        steps = np.diff(times)
        dt = float(np.median(steps))
        if dt <= 0 or not np.allclose(steps, dt, rtol=1e-3, atol=1e-9):
            raise TraceError(f"{path}: time column is not uniformly sampled")
        rate = 1.0 / dt
    else:
        rate = sample_rate or 1.0
    return ForceTrace(rate, forces, onset_threshold)


def save_trace(trace: ForceTrace, path) -> None:
    """Write a trace as two-column CSV (time_s, force_N)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "force_N"])
        for t, f in zip(trace.times, trace.samples):
            writer.writerow([f"{t:.6f}", f"{f:.6f}"])


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True
