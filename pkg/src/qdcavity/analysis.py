"""Small signal-analysis helpers for oscillation and peak diagnostics.

Pulsed observables carry two superposed timescales: the vacuum Rabi
period pi hbar / g (tens of ps at the reference coupling) and, when the
far-detuned couplings are kept, fast ripples at 2 pi hbar / delta
(about 1 ps). Peak extraction therefore smooths over the ripple scale
first, and ripple detection projects onto the single known frequency.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks


def moving_average(y, window_points):
    """Centered moving average with edge renormalization."""
    y = np.asarray(y, dtype=float)
    w = int(window_points)
    if w < 1:
        raise ValueError("window_points must be >= 1")
    if w == 1 or len(y) == 0:
        return y.copy()
    kernel = np.ones(min(w, len(y)))
    sums = np.convolve(y, kernel, mode="same")
    counts = np.convolve(np.ones_like(y), kernel, mode="same")
    return sums / counts


def _uniform_step(x):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two samples")
    steps = np.diff(x)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-6, atol=0.0):
        raise ValueError("axis must be uniformly spaced")
    return dt


def find_series_peaks(x, y, min_prominence, smooth_span=None, min_spacing=None):
    """Indices of local maxima of y over x after optional smoothing.

    smooth_span and min_spacing are in x units; min_prominence is in
    (possibly smoothed) y units.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    work = y
    dt = _uniform_step(x)
    if smooth_span is not None and smooth_span > dt:
        work = moving_average(y, max(1, int(round(smooth_span / dt))))
    distance = None
    if min_spacing is not None:
        distance = max(1, int(round(min_spacing / dt)))
    peaks, _ = find_peaks(work, prominence=min_prominence, distance=distance)
    return peaks


def single_frequency_amplitude(times, y, period):
    """Amplitude of the oscillation of y at the given period.

    Detrends with a moving average over one period, then projects onto
    exp(-2 pi i t / period). Returns the peak amplitude of that component.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    dt = _uniform_step(times)
    span = max(1, int(round(period / dt)))
    detrended = y - moving_average(y, span)
    phase = np.exp(-2j * np.pi * times / period)
    return float(2.0 * np.abs(np.mean(detrended * phase)))
