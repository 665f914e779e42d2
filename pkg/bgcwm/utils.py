"""Shared utility helpers."""

import time
from typing import Callable


class SweepClock:
    """Wall time of one chain, split into initialization and sampling sweeps.

    `timing()` goes into the chain metadata; nothing here reaches trace.csv,
    which stays byte-reproducible.
    """

    def __init__(self, clock: Callable[[], float] = time.perf_counter) -> None:
        self._clock = clock
        self.start_time: float | None = None
        self.sampling_start: float | None = None
        self.end_time: float | None = None
        self.sweeps = 0

    def __enter__(self) -> "SweepClock":
        self.start_time = self._clock()
        return self

    def __exit__(self, *args) -> None:
        self.end_time = self._clock()

    def initialized(self) -> None:
        self.sampling_start = self._clock()

    def sweep_done(self) -> None:
        self.sweeps += 1

    def _now(self) -> float:
        return self.end_time if self.end_time is not None else self._clock()

    @property
    def elapsed_s(self) -> float:
        return self._now() - self.start_time

    def timing(self) -> dict:
        end = self._now()
        sampling_start = self.sampling_start if self.sampling_start is not None else end
        sampling = end - sampling_start
        return {
            "wall_time_s": end - self.start_time,
            "init_s": sampling_start - self.start_time,
            "sampling_s": sampling,
            "sweeps": self.sweeps,
            "sweeps_per_s": self.sweeps / sampling if sampling > 0 else None,
        }


def parse_k_range(text: str) -> list[int]:
    """'1:5' -> [1, 2, 3, 4, 5]; '3' -> [3]."""
    if ":" in text:
        low, high = (int(part) for part in text.split(":", 1))
    else:
        low = high = int(text)
    if low < 1 or high < low:
        raise ValueError(f"Invalid K range '{text}'")
    return list(range(low, high + 1))
