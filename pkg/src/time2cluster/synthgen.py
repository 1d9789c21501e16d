"""Deterministic synthetic series with known behaviour labels.

The named scenarios stand in for the accelerometer and clinical recordings
used to motivate the method. Each scenario is a concatenation of segments
with a ground-truth label per timepoint.

Scenarios (nominal 100 Hz):

``walkrun``
    Slow gait cycle (period ~200) then fast gait cycle (period ~90), 2000
    points each, drifting phase plus sensor noise. K=2.
``walkrunplay``
    As ``walkrun`` followed by a spiky, pulse-like third behaviour
    (period 140 with a stack of harmonics). K=3.
``stairs``
    Three gait-like regimes at periods 160, 110 and 70. K=3.
``tilt``
    Low-amplitude cycling at one baseline, a short flat calibration gap,
    then a larger, faster cycle at a raised baseline. K=2.
``noisetail``
    ``walkrun`` followed by 1500 points of white noise. The noise region
    carries label 2; clustering still uses K=2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import InvalidArgumentError, TimeSeries, make_rng

KINDS = ("sinusoid", "random_walk", "white_noise", "constant")


@dataclass(frozen=True)
class SegmentSpec:
    """One homogeneous stretch of a synthetic series.

    ``phase_jitter`` is the std (radians) of the phase drift accumulated over
    one period; the phase performs a Gaussian random walk. ``harmonics`` adds
    extra sinusoids as ``(period, relative_amplitude)`` pairs sharing the
    same drifting phase.
    """

    kind: str
    length: int
    period: Optional[float] = None
    amplitude: float = 1.0
    phase_jitter: float = 0.0
    noise_std: float = 0.0
    label: int = 0
    offset: float = 0.0
    harmonics: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown segment kind {self.kind!r}")
        if self.length < 1:
            raise InvalidArgumentError("segment length must be >= 1")
        if (self.kind == "sinusoid") != (self.period is not None):
            raise InvalidArgumentError("period is required for sinusoids and only for them")
        if self.period is not None and self.period <= 0:
            raise InvalidArgumentError("period must be positive")
        if self.phase_jitter < 0 or self.noise_std < 0:
            raise InvalidArgumentError("jitter and noise levels must be non-negative")
        if self.label < 0:
            raise InvalidArgumentError("labels must be non-negative")


def _segment(spec: SegmentSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.length
    t = np.arange(n, dtype=np.float64)
    if spec.kind == "sinusoid":
        if spec.phase_jitter > 0:
            steps = rng.normal(0.0, spec.phase_jitter / np.sqrt(spec.period), n)
            phase = np.cumsum(steps) - steps[0]
        else:
            phase = 0.0
        x = np.sin(2 * np.pi * t / spec.period + phase)
        for period, rel in spec.harmonics:
            x = x + rel * np.sin(2 * np.pi * t / period + phase * spec.period / period)
        x = spec.amplitude * x
    elif spec.kind == "random_walk":
        x = np.cumsum(rng.normal(0.0, spec.amplitude, n))
    elif spec.kind == "white_noise":
        x = rng.normal(0.0, spec.amplitude, n)
    else:
        x = np.zeros(n)
    x = x + spec.offset
    if spec.noise_std > 0:
        x = x + rng.normal(0.0, spec.noise_std, n)
    return x


def generate(segments: Sequence[SegmentSpec], seed: int = 0, name: Optional[str] = None):
    """Concatenate `segments`; returns ``(TimeSeries, labels)`` with one label per point."""
    segments = list(segments)
    if not segments:
        raise InvalidArgumentError("need at least one segment")
    if sum(s.length for s in segments) < 2:
        raise InvalidArgumentError("total length must be >= 2")
    rng = make_rng(seed)
    values = np.concatenate([_segment(s, rng) for s in segments])
    labels = np.concatenate([np.full(s.length, s.label, dtype=np.int64) for s in segments])
    return TimeSeries(values, name=name, sample_rate_hz=100.0), labels


@dataclass(frozen=True)
class Scenario:
    series: TimeSeries
    labels: np.ndarray
    m: int
    ks: int
    k: int
    period: int


def _walk(length=2000, label=0):
    return SegmentSpec("sinusoid", length, period=200, phase_jitter=0.6, noise_std=0.15,
                       harmonics=((100, 0.4),), label=label)


def _run(length=2000, label=1):
    return SegmentSpec("sinusoid", length, period=90, amplitude=1.6, phase_jitter=0.6,
                       noise_std=0.15, harmonics=((45, 0.3),), label=label)


def _play(length=2000, label=2):
    return SegmentSpec("sinusoid", length, period=140, phase_jitter=0.5, noise_std=0.15,
                       harmonics=((70, 0.9), (140 / 3, 0.8), (35, 0.7), (28, 0.6)), label=label)


_SCENARIOS = {
    "walkrun": lambda: ([_walk(), _run()], 200, 200, 2, 200),
    "walkrunplay": lambda: ([_walk(), _run(), _play()], 200, 200, 3, 200),
    "stairs": lambda: (
        [
            SegmentSpec("sinusoid", 1500, period=160, phase_jitter=0.5, noise_std=0.1, label=0),
            SegmentSpec("sinusoid", 1500, period=110, phase_jitter=0.5, noise_std=0.1,
                        harmonics=((55, 0.5),), label=1),
            SegmentSpec("sinusoid", 1500, period=70, phase_jitter=0.5, noise_std=0.1,
                        harmonics=((23, 0.4),), label=2),
        ],
        160, 160, 3, 160,
    ),
    "tilt": lambda: (
        [
            SegmentSpec("sinusoid", 2000, period=120, amplitude=0.5, phase_jitter=0.4,
                        noise_std=0.05, offset=1.0, label=0),
            SegmentSpec("constant", 150, offset=1.0, label=0),
            SegmentSpec("sinusoid", 2000, period=60, amplitude=2.0, phase_jitter=0.4,
                        noise_std=0.05, offset=3.0, harmonics=((20, 0.5),), label=1),
        ],
        120, 120, 2, 120,
    ),
    "noisetail": lambda: (
        [_walk(), _run(), SegmentSpec("white_noise", 1500, amplitude=1.0, label=2)],
        200, 200, 2, 200,
    ),
}

SCENARIO_NAMES = tuple(_SCENARIOS)


def scenario(name: str, seed: int = 0) -> Scenario:
    """Build a named scenario with its recommended ``m``, ``ks`` and ``K``."""
    if name not in _SCENARIOS:
        raise InvalidArgumentError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}"
        )
    segments, m, ks, k, period = _SCENARIOS[name]()
    ts, labels = generate(segments, seed=seed, name=name)
    return Scenario(ts, labels, m, ks, k, period)
