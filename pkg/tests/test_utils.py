"""Tests for shared helpers."""

import pytest

from bgcwm.utils import SweepClock, parse_k_range


class TestParseKRange:
    def test_closed_range(self):
        assert parse_k_range("1:5") == [1, 2, 3, 4, 5]

    def test_single_value(self):
        assert parse_k_range("3") == [3]

    @pytest.mark.parametrize("text", ["0:3", "4:2", "a:b"])
    def test_invalid_ranges(self, text):
        with pytest.raises(ValueError):
            parse_k_range(text)


class TestSweepClock:
    """Chain timing split into initialization and sampling."""

    @staticmethod
    def _ticks(*values: float):
        readings = iter(values)
        return lambda: next(readings)

    def test_sampling_rate_excludes_initialization(self):
        with SweepClock(self._ticks(10.0, 14.0, 19.0)) as clock:
            clock.initialized()
            for _ in range(50):
                clock.sweep_done()
        assert clock.timing() == {
            "wall_time_s": 9.0,
            "init_s": 4.0,
            "sampling_s": 5.0,
            "sweeps": 50,
            "sweeps_per_s": 10.0,
        }
        assert clock.elapsed_s == 9.0

    def test_failed_initialization_has_no_rate(self):
        with SweepClock(self._ticks(0.0, 2.5)) as clock:
            pass
        timing = clock.timing()
        assert timing["init_s"] == 2.5
        assert timing["sweeps"] == 0
        assert timing["sweeps_per_s"] is None
