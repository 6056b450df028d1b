"""Continuous detection: one decision per 0.5 s window, merged into events.

Consecutive windows whose subject probability clears the threshold coalesce
into one detection event. A gap tolerance (default 0) lets a run survive that
many negative windows, since back-to-back coughs may straddle a boundary.
The incremental stepper produces exactly the event stream of the batch path
and holds constant state regardless of stream length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import net
from .dsp import DualChannelRecording, DualChannelWindow, normalize, slice_windows
from .errors import OutOfOrderWindow, RateMismatch


@dataclass(frozen=True)
class DetectionEvent:
    """A merged run of positive windows."""

    start_s: float
    end_s: float
    mean_confidence: float
    window_count: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "start_s": self.start_s,
                "end_s": self.end_s,
                "mean_confidence": self.mean_confidence,
                "window_count": self.window_count,
            },
            sort_keys=True,
        )


def events_to_ndjson(events: list[DetectionEvent]) -> str:
    return "".join(e.to_json() + "\n" for e in events)


def _merge_positive_runs(
    probs: list[float],
    starts: list[float],
    window_s: float,
    threshold: float,
    gap_tolerance: int,
) -> list[DetectionEvent]:
    """Batch merge rule; the reference the streaming path must reproduce."""
    events: list[DetectionEvent] = []
    run_start = None
    run_end = 0.0
    run_sum = 0.0
    run_count = 0
    gap = 0
    for p, start in zip(probs, starts):
        if p >= threshold:
            if run_start is None:
                run_start = start
            run_sum += p
            run_count += 1
            run_end = start + window_s
            gap = 0
        elif run_start is not None:
            gap += 1
            if gap > gap_tolerance:
                events.append(DetectionEvent(run_start, run_end, run_sum / run_count, run_count))
                run_start, run_sum, run_count, gap = None, 0.0, 0, 0
    if run_start is not None:
        events.append(DetectionEvent(run_start, run_end, run_sum / run_count, run_count))
    return events


def detect(
    spec: net.ModelSpec,
    params: list[np.ndarray],
    rec: DualChannelRecording,
    threshold: float = 0.5,
    gap_tolerance: int = 0,
) -> list[DetectionEvent]:
    """Slice, normalize and score a whole recording, merging positive windows.

    The recording must already be at the model's rate; decimate first.
    """
    if rec.sample_rate_hz != spec.sample_rate_hz:
        raise RateMismatch(
            f"recording at {rec.sample_rate_hz} Hz, model wants {spec.sample_rate_hz}"
        )
    windows = slice_windows(rec)
    probs = [net.forward(spec, params, normalize(w))[0] for w in windows]
    starts = [w.start_s for w in windows]
    window_s = spec.input_len / spec.sample_rate_hz
    return _merge_positive_runs(probs, starts, window_s, threshold, gap_tolerance)


@dataclass(frozen=True)
class DetectorState:
    """Constant-size progress record between streaming steps; JSON-serializable."""

    next_start_s: float | None = None  # expected start of the next window
    run_start_s: float | None = None
    run_end_s: float = 0.0
    run_prob_sum: float = 0.0
    run_count: int = 0
    gap_run: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "next_start_s": self.next_start_s,
                "run_start_s": self.run_start_s,
                "run_end_s": self.run_end_s,
                "run_prob_sum": self.run_prob_sum,
                "run_count": self.run_count,
                "gap_run": self.gap_run,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "DetectorState":
        return cls(**json.loads(text))


class StreamingDetector:
    """Incremental form of detect(): feed raw windows in time order.

    Windows are normalized internally, exactly as detect() does, so feeding a
    recording's windows one by one reproduces detect()'s event list verbatim.
    """

    def __init__(
        self,
        spec: net.ModelSpec,
        params: list[np.ndarray],
        threshold: float = 0.5,
        gap_tolerance: int = 0,
    ):
        self.spec = spec
        self.params = params
        self.threshold = threshold
        self.gap_tolerance = gap_tolerance
        self.window_s = spec.input_len / spec.sample_rate_hz

    def new_state(self) -> DetectorState:
        return DetectorState()

    def step(
        self, state: DetectorState, window: DualChannelWindow
    ) -> tuple[DetectorState, DetectionEvent | None]:
        """Score one window; emits an event when a positive run just ended."""
        if window.sample_rate_hz != self.spec.sample_rate_hz:
            raise RateMismatch(
                f"window at {window.sample_rate_hz} Hz, model wants {self.spec.sample_rate_hz}"
            )
        if state.next_start_s is not None and not np.isclose(
            window.start_s, state.next_start_s, atol=1e-6
        ):
            raise OutOfOrderWindow(
                f"window starts at {window.start_s}, expected {state.next_start_s}"
            )
        p = net.forward(self.spec, self.params, normalize(window))[0]
        next_start = window.start_s + self.window_s
        if p >= self.threshold:
            return (
                replace(
                    state,
                    next_start_s=next_start,
                    run_start_s=window.start_s if state.run_start_s is None else state.run_start_s,
                    run_end_s=window.start_s + self.window_s,
                    run_prob_sum=state.run_prob_sum + p,
                    run_count=state.run_count + 1,
                    gap_run=0,
                ),
                None,
            )
        if state.run_start_s is not None:
            gap = state.gap_run + 1
            if gap > self.gap_tolerance:
                event = DetectionEvent(
                    state.run_start_s,
                    state.run_end_s,
                    state.run_prob_sum / state.run_count,
                    state.run_count,
                )
                return DetectorState(next_start_s=next_start), event
            return replace(state, next_start_s=next_start, gap_run=gap), None
        return replace(state, next_start_s=next_start), None

    def flush(self, state: DetectorState) -> tuple[DetectorState, DetectionEvent | None]:
        """Close any open run at end of stream; state returns to fresh."""
        if state.run_start_s is not None:
            event = DetectionEvent(
                state.run_start_s,
                state.run_end_s,
                state.run_prob_sum / state.run_count,
                state.run_count,
            )
            return DetectorState(), event
        return DetectorState(), None


def stream_state_step(
    detector: StreamingDetector, state: DetectorState, next_window: DualChannelWindow
) -> tuple[DetectorState, DetectionEvent | None]:
    """Functional alias for StreamingDetector.step."""
    return detector.step(state, next_window)
