"""Photon counting, signal-to-noise and interference fringes.

Counts are Poisson in every time bin. Expected values combine the echo
intensity (through the optical path and detector), fluorescence collected
into the detection mode, and uniform dark counts.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import curve_fit

from .echo import EchoResult, Pulse, afc_echo_phase
from .spectral import CombSpec


class DetectionError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.07
    dark_rate: float = 10.0
    path_transmission: float = 0.15
    chopper_open: bool = True

    def __post_init__(self):
        for name in ("efficiency", "path_transmission"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise DetectionError(f"{name} must lie in [0, 1], got {v}")
        if self.dark_rate < 0:
            raise DetectionError("dark_rate must be non-negative")


@dataclass(frozen=True)
class PhaseNoiseModel:
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise DetectionError("sigma must be non-negative")

    @classmethod
    def from_visibility(cls, v1: float) -> "PhaseNoiseModel":
        """Jitter that limits the first-order fringe to visibility ``v1``."""
        if not 0 < v1 <= 1:
            raise DetectionError("visibility must lie in (0, 1]")
        return cls(math.sqrt(-2 * math.log(v1)))


@dataclass
class CountHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    n_trials: int
    seed: Optional[int]
    expected: Optional[np.ndarray] = None
    dark_per_bin: float = 0.0

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.size != self.bin_edges.size - 1:
            raise DetectionError("counts must have one entry per bin")
        if np.any(self.counts < 0):
            raise DetectionError("counts must be non-negative")

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def window_bins(self, t_start: float, t_stop: float) -> tuple[int, int]:
        """Bin range [i, j) whose starts fall inside [t_start, t_stop)."""
        starts = self.bin_edges[:-1]
        i = int(np.searchsorted(starts, t_start - 1e-12 * self.bin_width))
        j = int(np.searchsorted(starts, t_stop - 1e-12 * self.bin_width))
        return i, j

    def window_sum(self, window: tuple[int, int]) -> int:
        i, j = window
        return int(self.counts[i:j].sum())

    def subtract_darks(self) -> np.ndarray:
        """Counts minus the dark-count expectation of each bin."""
        return self.counts - self.dark_per_bin

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_start_s", "bin_end_s", "counts"])
            for a, b, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
                w.writerow([f"{a:.17g}", f"{b:.17g}", int(c)])


def _rng(seed, index: Optional[int] = None) -> np.random.Generator:
    if seed is None:
        raise DetectionError("a seed is required for reproducible counts")
    key = [int(v) for v in np.atleast_1d(seed)]
    if index is not None:
        key.append(int(index))
    return np.random.default_rng(key)


def _bin_integral(times: np.ndarray, rate: np.ndarray, edges: np.ndarray) -> np.ndarray:
    cum = cumulative_trapezoid(rate, times, initial=0.0)
    return np.diff(np.interp(edges, times, cum))


def expected_counts(result: Optional[EchoResult], fluor: Union[float, Callable, None],
                    det: DetectorModel, n_trials: int, bin_edges: np.ndarray,
                    collection: float = 1.0) -> np.ndarray:
    """Mean counts per bin summed over ``n_trials`` identical trials."""
    edges = np.asarray(bin_edges, dtype=float)
    widths = np.diff(edges)
    mean = det.dark_rate * widths
    if det.chopper_open:
        if result is not None:
            mean = mean + det.path_transmission * det.efficiency * _bin_integral(
                result.times, result.intensity, edges)
        if fluor is not None:
            if callable(fluor):
                tt = np.linspace(edges[0], edges[-1], 8 * widths.size + 1)
                f = _bin_integral(tt, np.asarray(fluor(tt), dtype=float) * np.ones_like(tt), edges)
            else:
                f = float(fluor) * widths
            mean = mean + collection * det.efficiency * f
    return n_trials * mean


def simulate_counts(result: Optional[EchoResult], fluor: Union[float, Callable, None],
                    det: DetectorModel, n_trials: int, bin_width: float, seed: int,
                    collection: float = 1.0, t_range: Optional[tuple] = None) -> CountHistogram:
    """Poisson histogram of detection times accumulated over ``n_trials``.

    ``fluor`` is the fluorescence rate seen during a trial (photons/s before
    collection), either a constant or a function of in-trial time.
    """
    if bin_width <= 0:
        raise DetectionError("bin_width must be positive")
    if n_trials < 1:
        raise DetectionError("n_trials must be at least 1")
    if t_range is None:
        if result is None:
            raise DetectionError("t_range is required without an echo result")
        t_range = (float(result.times[0]), float(result.times[-1]))
    n_bins = max(1, int(round((t_range[1] - t_range[0]) / bin_width)))
    edges = t_range[0] + bin_width * np.arange(n_bins + 1)
    mu = expected_counts(result, fluor, det, n_trials, edges, collection)
    counts = _rng(seed).poisson(mu)
    return CountHistogram(edges, counts, n_trials, seed, mu, n_trials * det.dark_rate * bin_width)


def snr(hist: CountHistogram, window_a: tuple[int, int], window_b: tuple[int, int]) -> Optional[float]:
    """(N_A - N_B) / N_B, or None when window B holds no counts."""
    (a0, a1), (b0, b1) = window_a, window_b
    if a1 - a0 != b1 - b0 or a1 <= a0:
        raise DetectionError("windows must be non-empty with equal bin counts")
    if a0 < b1 and b0 < a1:
        raise DetectionError("windows overlap")
    n_a, n_b = hist.window_sum(window_a), hist.window_sum(window_b)
    if n_b == 0:
        return None
    return (n_a - n_b) / n_b


def visibility_model(sigma: float, m: int = 1) -> float:
    if sigma < 0 or m < 1:
        raise DetectionError("need sigma >= 0 and m >= 1")
    return math.exp(-((m * sigma) ** 2) / 2)


def matched_lo_photons(echo_efficiency: float, mean_photons: float, transmission: float) -> float:
    """LO input photon number whose transmitted part equals the echo energy."""
    if transmission <= 0:
        raise DetectionError("LO transmission must be positive")
    return echo_efficiency * mean_photons / transmission


@dataclass(frozen=True)
class FringePoint:
    delta0: float
    counts: int
    expected: float

    @property
    def counts_err(self) -> float:
        return math.sqrt(max(self.counts, 1))


def fringe_to_csv(points: Sequence[FringePoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta0_hz", "counts", "counts_err"])
        for p in points:
            w.writerow([f"{p.delta0:.17g}", int(p.counts), f"{p.counts_err:.17g}"])


def interference_scan(echo: EchoResult, lo: Pulse, delta_scan, comb: CombSpec,
                      noise: PhaseNoiseModel, det: DetectorModel, n_trials: int, seed: int,
                      m: int = 1, n_cycles: int = 4000, fluor_rate: float = 0.0,
                      collection: float = 1.0, subtract_darks: bool = True) -> list[FringePoint]:
    """Counts in the echo-``m`` window while the transmitted LO overlaps it.

    Echo and LO share one temporal mode, so the detected energy is
    |A_e exp(i(phi_m + dphi)) + A_lo|^2. The jitter dphi is drawn once per
    preparation cycle with standard deviation m * sigma. Each scan point
    uses its own generator seeded from (seed, index).
    """
    e = echo.echo(m)
    if e is None:
        raise DetectionError(f"echo order {m} not present in the storage result")
    if n_trials < n_cycles:
        n_cycles = n_trials
    n_echo = e.efficiency * echo.pulse.mean_photons
    n_lo = lo.mean_photons * echo.transmitted_fraction
    if n_echo > 0 and abs(n_lo / n_echo - 1) > 0.05:
        warnings.warn(f"LO energy {n_lo:.3g} differs from echo energy {n_echo:.3g} by more than 5%",
                      stacklevel=2)
    a_e, a_lo = math.sqrt(n_echo), math.sqrt(n_lo)
    width = 2 * e.fwhm
    ref = comb.center_offset - echo.pulse.carrier_offset
    # measured phase at the simulated detuning, analytic slope elsewhere
    phi_ref = e.phase - afc_echo_phase(ref, comb.delta, m)[1]
    per_cycle = n_trials / n_cycles
    scale = det.path_transmission * det.efficiency if det.chopper_open else 0.0
    background = det.dark_rate * width + (collection * det.efficiency * fluor_rate * width
                                          if det.chopper_open else 0.0)
    points = []
    for k, d0 in enumerate(np.asarray(delta_scan, dtype=float)):
        rng = _rng(seed, k)
        jitter = rng.normal(0.0, m * noise.sigma, n_cycles) if noise.sigma > 0 else np.zeros(n_cycles)
        phi = phi_ref + afc_echo_phase(float(d0), comb.delta, m)[1] + jitter
        energy = a_e ** 2 + a_lo ** 2 + 2 * a_e * a_lo * np.cos(phi)
        mu = per_cycle * float(np.sum(scale * energy + background))
        c = int(rng.poisson(mu))
        if subtract_darks:
            c = max(0, int(round(c - n_trials * det.dark_rate * width)))
        points.append(FringePoint(float(d0), c, mu))
    return points


@dataclass
class FringeFit:
    visibility: float
    phase_offset: float
    period: float
    offset: float
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"V": self.visibility, "V_err": self.errors.get("visibility", float("nan")),
                "P": self.period, "P_err": self.errors.get("period", float("nan")),
                "phi0": self.phase_offset, "phi0_err": self.errors.get("phase_offset", float("nan"))}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def _fringe(x, c0, v, p, phi0):
    return c0 * (1 + v * np.cos(2 * np.pi * x / p + phi0))


def fit_fringe(points, period_guess: Optional[float] = None) -> FringeFit:
    """Least-squares fit of c0 (1 + V cos(2 pi x / P + phi0)).

    Starting values come from a linear fit on a grid of trial periods.
    Errors are standard errors from the Poisson-weighted covariance.
    """
    if len(points) and isinstance(points[0], FringePoint):
        x = np.array([p.delta0 for p in points])
        y = np.array([p.counts for p in points], dtype=float)
    else:
        arr = np.asarray(points, dtype=float)
        x, y = arr[:, 0], arr[:, 1]
    if x.size < 6:
        raise DetectionError("need at least 6 scan points")
    span = float(x.max() - x.min())
    if span <= 0:
        raise DetectionError("degenerate scan: all detunings equal")
    if period_guess is None:
        trials = np.linspace(span / (x.size / 2), span, 400)
    else:
        trials = period_guess * np.linspace(0.7, 1.3, 121)
    if period_guess is None and span < trials.min():
        raise DetectionError("scan must cover at least one period")
    best = None
    for p in trials:
        a = np.column_stack([np.ones_like(x), np.cos(2 * np.pi * x / p), np.sin(2 * np.pi * x / p)])
        coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
        r = float(np.sum((a @ coef - y) ** 2))
        if best is None or r < best[0]:
            best = (r, p, coef)
    _, p0, (c, ca, sa) = best
    c0 = c if c != 0 else 1.0
    v0 = math.hypot(ca, sa) / abs(c0)
    phi0 = math.atan2(-sa, ca)
    sigma = np.sqrt(np.maximum(y, 1.0))
    try:
        popt, pcov = curve_fit(_fringe, x, y, p0=[c0, v0, p0, phi0], sigma=sigma,
                               absolute_sigma=True, maxfev=20000)
    except RuntimeError as exc:
        raise DetectionError(f"fringe fit did not converge: {exc}") from exc
    c0, v, p, phi = popt
    if v < 0:
        v, phi = -v, phi + math.pi
    if p < 0:
        p, phi = -p, -phi
    err = np.sqrt(np.clip(np.diag(pcov), 0, None))
    return FringeFit(float(min(max(v, 0.0), 1.0)), float(phi % (2 * math.pi)), float(p), float(c0),
                     {"offset": float(err[0]), "visibility": float(err[1]),
                      "period": float(err[2]), "phase_offset": float(err[3])})


def fit_exponential_decay(t, y, sigma=None) -> dict:
    """Fit y = A exp(-t / tau) + B; returns values and standard errors."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 4:
        raise DetectionError("need at least 4 points for a decay fit")
    tau0 = (t.max() - t.min()) / 3 or 1.0
    popt, pcov = curve_fit(lambda s, a, tau, b: a * np.exp(-s / tau) + b, t, y,
                           p0=[max(y[0] - y[-1], 1e-12), tau0, max(y[-1], 0.0)],
                           sigma=sigma, absolute_sigma=sigma is not None, maxfev=20000)
    err = np.sqrt(np.clip(np.diag(pcov), 0, None))
    return {"amplitude": float(popt[0]), "tau": float(popt[1]), "offset": float(popt[2]),
            "amplitude_err": float(err[0]), "tau_err": float(err[1]), "offset_err": float(err[2])}
