"""Fourier analysis, peak picking and series comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks as _scipy_find_peaks

_CHUNK = 256


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        if len(t) > 2:
            dt = np.diff(t)
            if np.abs(dt - dt[0]).max() > 1e-9 * max(abs(dt[0]), 1e-300):
                raise ValueError("time grid is not uniform")

    def window(self, lo: float, hi: float) -> "TimeSeries":
        keep = (self.times >= lo) & (self.times <= hi)
        return TimeSeries(self.times[keep], self.values[keep], dict(self.meta))


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    window: str = "rect"
    meta: dict = field(default_factory=dict)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.amplitudes)


def fourier_transform(
    series: TimeSeries, nu_grid, subtract_mean: bool = False, taper: str | None = None
) -> Spectrum:
    """Trapezoid evaluation of int dt P(t) exp(-i 2 pi nu t) over the series window.

    Frequencies are in cycles per unit of ``series.times``; with times in
    units of 2 pi / omega they come out in units of omega.
    """
    nu = np.asarray(nu_grid, dtype=float)
    if nu.size == 0:
        raise ValueError("empty frequency grid")
    if series.times.size < 2:
        raise ValueError("series needs at least two samples")
    if np.any(np.diff(nu) <= 0):
        raise ValueError("frequency grid must be ascending")
    t, y = series.times, series.values
    span = t[-1] - t[0]
    if subtract_mean:
        y = y - np.trapezoid(y, t) / span
    if taper == "hann":
        y = y * np.sin(np.pi * (t - t[0]) / span) ** 2
    elif taper is not None:
        raise ValueError(f"unknown taper {taper!r}")
    out = np.empty(nu.size, dtype=complex)
    for start in range(0, nu.size, _CHUNK):
        block = nu[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.trapezoid(y * np.exp(-2j * np.pi * np.multiply.outer(block, t)), t, axis=1)
    return Spectrum(nu, out, taper or "rect", {"subtract_mean": subtract_mean, "span": (t[0], t[-1])})


@dataclass(frozen=True)
class PeakList:
    peaks: list  # (frequency, magnitude), strongest first
    complete: bool  # False when fewer maxima than requested were found


def find_peaks(
    spec: Spectrum,
    count: int,
    min_separation: float = 0.0,
    band: tuple[float, float] | None = None,
    rel_height: float = 0.0,
) -> PeakList:
    """Strongest local maxima of |amplitude| with parabolic sub-bin refinement.

    ``min_separation`` (frequency units) suppresses weaker maxima closer than
    that to a stronger one.  ``rel_height`` drops maxima below that fraction
    of the strongest maximum considered.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    mag = spec.magnitude
    nu = spec.frequencies
    idx, _ = _scipy_find_peaks(mag)
    if band is not None:
        idx = idx[(nu[idx] >= band[0]) & (nu[idx] <= band[1])]
    idx = idx[np.argsort(mag[idx])[::-1]]
    if idx.size and rel_height > 0:
        idx = idx[mag[idx] >= rel_height * mag[idx[0]]]
    chosen: list[tuple[float, float]] = []
    for i in idx:
        f, a = _refine(nu, mag, i)
        if all(abs(f - g) >= min_separation for g, _ in chosen):
            chosen.append((f, a))
        if len(chosen) == count:
            break
    return PeakList(chosen, len(chosen) == count)


def _refine(nu: np.ndarray, mag: np.ndarray, i: int) -> tuple[float, float]:
    a, b, c = mag[i - 1], mag[i], mag[i + 1]
    den = a - 2 * b + c
    if den == 0:
        return float(nu[i]), float(b)
    delta = 0.5 * (a - c) / den
    step = 0.5 * (nu[i + 1] - nu[i - 1])
    return float(nu[i] + delta * step), float(b - 0.25 * (a - c) * delta)


@dataclass(frozen=True)
class SeriesComparison:
    rms: float
    max_abs: float
    window_rms: dict  # (lo, hi) -> rms


def compare_series(a: TimeSeries, b: TimeSeries, windows=()) -> SeriesComparison:
    if a.times.shape != b.times.shape or np.abs(a.times - b.times).max(initial=0.0) > 1e-12 * max(1.0, np.abs(a.times).max(initial=0.0)):
        raise ValueError("series are on different time grids")
    d = a.values - b.values
    per = {}
    for lo, hi in windows:
        keep = (a.times >= lo) & (a.times <= hi)
        per[(lo, hi)] = float(np.sqrt(np.mean(d[keep] ** 2))) if keep.any() else float("nan")
    return SeriesComparison(float(np.sqrt(np.mean(d**2))), float(np.abs(d).max()), per)
