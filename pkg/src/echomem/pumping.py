"""Memory preparation by swept optical pumping between two ground Zeeman levels.

Each spectral class carries four populations: g1 (absorbing ground level),
g2 (other Zeeman level), e (excited) and p (persistent reservoir). The pump
sweeps a sawtooth across the span and is gated off inside ``gate_windows``;
a class is pumped g1 -> e while the pump sits within half a resonance width
of it. Stimulated emission is folded into a shortened excited lifetime.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .spectral import SpectralProfile, CombSpec, comb_peak_centers

G1, G2, E, P = range(4)


class PreparationError(ValueError):
    pass


@dataclass(frozen=True, kw_only=True)
class MaterialParams:
    persistent_fraction: float
    t1: float = 11e-3
    tz: float = 130e-3
    t_persistent: float = 900.0
    branch_beta: float = 0.1
    infinite_lifetimes: bool = False

    def __post_init__(self):
        for name in ("t1", "tz", "t_persistent"):
            if getattr(self, name) <= 0:
                raise PreparationError(f"{name} must be positive")
        if not 0 <= self.branch_beta <= 1:
            raise PreparationError("branch_beta must lie in [0, 1]")
        if not 0 <= self.persistent_fraction <= 1:
            raise PreparationError("persistent_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class PumpSchedule:
    sweep_span: float
    sweep_rate: float
    pump_rate: float
    gate_windows: tuple = ()
    duration: float = 120e-3
    stimulation_gain: float = 1.0
    t_extra: float = 23.5e-3
    t_wait: float = 86e-3
    resonance_width: Optional[float] = None

    def __post_init__(self):
        if self.sweep_span <= 0 or self.sweep_rate <= 0:
            raise PreparationError("sweep span and rate must be positive")
        if self.pump_rate < 0 or self.duration < 0:
            raise PreparationError("pump rate and duration must be non-negative")
        if self.stimulation_gain < 1:
            raise PreparationError("stimulation gain must be >= 1")
        if self.t_extra < 0 or self.t_wait < 0:
            raise PreparationError("t_extra and t_wait must be non-negative")
        wins = tuple(tuple(map(float, w)) for w in self.gate_windows)
        half = self.sweep_span / 2
        for lo, hi in wins:
            if not (-half <= lo < hi <= half):
                raise PreparationError(f"gate window ({lo:g}, {hi:g}) outside the sweep span")
        object.__setattr__(self, "gate_windows", wins)

    @property
    def period(self) -> float:
        return self.sweep_span / self.sweep_rate

    def gate_open(self, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=float)
        closed = np.zeros(nu.shape, dtype=bool)
        for lo, hi in self.gate_windows:
            closed |= (nu >= lo) & (nu <= hi)
        return ~closed

    @staticmethod
    def line_gate(width: float) -> tuple:
        return ((-width / 2, width / 2),)

    @staticmethod
    def comb_gates(spec: CombSpec, width: Optional[float] = None) -> tuple:
        w = spec.peak_fwhm if width is None else width
        return tuple((c - w / 2, c + w / 2) for c in comb_peak_centers(spec))


@dataclass(frozen=True)
class PopulationField:
    grid: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    e: np.ndarray
    p: np.ndarray

    @classmethod
    def ground(cls, grid) -> "PopulationField":
        grid = np.asarray(grid, dtype=float)
        z = np.zeros_like(grid)
        return cls(grid, np.ones_like(grid), z, z.copy(), z.copy())

    @classmethod
    def from_stack(cls, grid, x: np.ndarray) -> "PopulationField":
        return cls(grid, x[:, G1].copy(), x[:, G2].copy(), x[:, E].copy(), x[:, P].copy())

    def stack(self) -> np.ndarray:
        return np.stack([self.g1, self.g2, self.e, self.p], axis=1)

    def total(self) -> np.ndarray:
        return self.g1 + self.g2 + self.e + self.p

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["detuning_hz", "g1", "g2", "e", "p"])
            for row in zip(self.grid, self.g1, self.g2, self.e, self.p):
                w.writerow([f"{v:.17g}" for v in row])


def rate_matrix(mat: MaterialParams, t1: Optional[float] = None, pump: float = 0.0) -> np.ndarray:
    """Generator M with dx/dt = M x for x = (g1, g2, e, p)."""
    m = np.zeros((4, 4))
    m[E, G1] += pump
    m[G1, G1] -= pump
    if mat.infinite_lifetimes:
        return m
    gamma = 1.0 / (mat.t1 if t1 is None else t1)
    beta, pf = mat.branch_beta, mat.persistent_fraction
    m[E, E] -= gamma
    m[G1, E] += (1 - beta) * gamma
    m[G2, E] += beta * (1 - pf) * gamma
    m[P, E] += beta * pf * gamma
    m[G2, G2] -= 1 / mat.tz
    m[G1, G2] += 1 / mat.tz
    m[P, P] -= 1 / mat.t_persistent
    m[G1, P] += 1 / mat.t_persistent
    return m


def _expm_batch(m: np.ndarray, durations: np.ndarray) -> np.ndarray:
    durations = np.asarray(durations, dtype=float)
    uniq, inv = np.unique(durations, return_inverse=True)
    mats = np.stack([expm(m * d) for d in uniq])
    return mats[inv]


@dataclass
class PreparationRun:
    """Outcome of a preparation: sampled history plus the final populations."""

    times: list
    history: list
    final: PopulationField
    schedule: PumpSchedule
    material: MaterialParams

    def summary(self, raw: Optional[SpectralProfile] = None) -> dict:
        f = self.final
        out = {"residual_excited_total": float(np.sum(f.e))}
        pumped = ~self.schedule.gate_open(f.grid) if self.schedule.gate_windows else None
        in_span = np.abs(f.grid) <= self.schedule.sweep_span / 2
        open_ = self.schedule.gate_open(f.grid) & in_span
        pit = float(np.median(f.g1[open_])) if open_.any() else 1.0
        peak = float(np.max(f.g1[pumped & in_span])) if pumped is not None and (pumped & in_span).any() else pit
        scale = 1.0 if raw is None else float(np.max(raw.depth))
        out["pit_depth"] = scale * pit
        out["peak_contrast"] = (peak - pit) / peak if peak > 0 else 0.0
        return out

    def to_files(self, csv_path, json_path, raw: Optional[SpectralProfile] = None) -> None:
        self.final.to_csv(csv_path)
        Path(json_path).write_text(json.dumps(self.summary(raw), indent=2, sort_keys=True))


def stability_bound(schedule: PumpSchedule, mat: MaterialParams) -> float:
    """Largest admissible explicit step, min(T1_eff, 1/pump_rate) / 10."""
    t1_eff = mat.t1 / schedule.stimulation_gain
    inv_pump = 1 / schedule.pump_rate if schedule.pump_rate > 0 else np.inf
    return min(t1_eff, inv_pump) / 10


def evolve_preparation(initial: PopulationField, schedule: PumpSchedule,
                       mat: MaterialParams, dt: Optional[float] = None) -> PreparationRun:
    """Propagate the rate equations through pumping and the stimulation tail.

    Rates are piecewise constant (each class is pumped only during its
    resonance dwell), so each sweep pass is propagated exactly with matrix
    exponentials. The history is sampled at the end of every pass and after
    the tail. ``dt`` is only checked against the explicit-step bound so that
    a configuration valid here is also valid for :func:`reference_preparation`.
    """
    if dt is not None and dt > stability_bound(schedule, mat):
        raise PreparationError(
            f"dt={dt:g} s exceeds the stability bound {stability_bound(schedule, mat):g} s")
    grid = initial.grid
    x = initial.stack()
    t1_eff = mat.t1 / schedule.stimulation_gain
    m_off = rate_matrix(mat, t1_eff)
    m_on = rate_matrix(mat, t1_eff, schedule.pump_rate)
    period = schedule.period
    width = schedule.resonance_width
    if width is None:
        width = 2 * abs(grid[1] - grid[0])
    dwell = width / schedule.sweep_rate
    half = schedule.sweep_span / 2
    pumped = (np.abs(grid) <= half) & schedule.gate_open(grid)
    # time within a pass at which the pump window reaches each class
    offset = np.clip((grid + half - width / 2) / schedule.sweep_rate, 0.0, period)

    def pass_maps(length: float) -> np.ndarray:
        start = np.minimum(offset, length)
        on = np.where(pumped, np.clip(length - start, 0.0, dwell), 0.0)
        after = length - start - on
        a = _expm_batch(m_off, start)
        b = _expm_batch(m_on, on)
        c = _expm_batch(m_off, after)
        return np.einsum("nij,njk,nkl->nil", c, b, a)

    n_full = int(math.floor(schedule.duration / period + 1e-12))
    remainder = schedule.duration - n_full * period
    times, history = [0.0], [initial]
    if n_full:
        q = pass_maps(period)
        for k in range(n_full):
            x = np.einsum("nij,nj->ni", q, x)
            times.append((k + 1) * period)
            history.append(PopulationField.from_stack(grid, x))
    if remainder > 1e-15:
        x = np.einsum("nij,nj->ni", pass_maps(remainder), x)
        times.append(schedule.duration)
        history.append(PopulationField.from_stack(grid, x))
    if schedule.t_extra > 0:
        x = x @ expm(m_off * schedule.t_extra).T
        times.append(schedule.duration + schedule.t_extra)
        history.append(PopulationField.from_stack(grid, x))
    return PreparationRun(times, history, history[-1], schedule, mat)


def reference_preparation(initial: PopulationField, schedule: PumpSchedule, mat: MaterialParams,
                          dt: float, tol: float = 1e-6, max_halvings: int = 6) -> PopulationField:
    """Fine-step RK4 integration of the same rate equations, used as an oracle.

    Steps are aligned to every pump switching instant of each class. The run
    is repeated with halved steps until the final populations change by less
    than ``tol`` (relative).
    """
    bound = stability_bound(schedule, mat)
    if dt > bound:
        raise PreparationError(f"dt={dt:g} s exceeds the stability bound {bound:g} s")
    prev = _rk4_run(initial, schedule, mat, dt)
    for _ in range(max_halvings):
        dt /= 2
        cur = _rk4_run(initial, schedule, mat, dt)
        change = np.max(np.abs(cur - prev)) / max(np.max(np.abs(cur)), 1e-300)
        prev = cur
        if change < tol:
            break
    return PopulationField.from_stack(initial.grid, prev)


def _rk4_run(initial, schedule, mat, dt) -> np.ndarray:
    grid = initial.grid
    t1_eff = mat.t1 / schedule.stimulation_gain
    m_off = rate_matrix(mat, t1_eff)
    m_on = rate_matrix(mat, t1_eff, schedule.pump_rate)
    width = schedule.resonance_width or 2 * abs(grid[1] - grid[0])
    half = schedule.sweep_span / 2
    period = schedule.period
    # coarser steps are fine while the pump is away from a class
    dt_off = max(dt, min(t1_eff, mat.tz) / 50)
    out = np.empty((grid.size, 4))
    for n, nu in enumerate(grid):
        x = initial.stack()[n].copy()
        events = [0.0, schedule.duration]
        pumpable = abs(nu) <= half and bool(schedule.gate_open(nu))
        if pumpable:
            start = min(max((nu + half - width / 2) / schedule.sweep_rate, 0.0), period)
            k = 0
            while k * period < schedule.duration:
                for ev in (k * period + start, k * period + min(start + width / schedule.sweep_rate, period)):
                    if ev < schedule.duration:
                        events.append(ev)
                k += 1
        events = sorted(set(events))
        for a, b in zip(events[:-1], events[1:]):
            mid = 0.5 * (a + b)
            phase = mid % period
            on = pumpable and start <= phase < start + width / schedule.sweep_rate
            m = m_on if on else m_off
            x = _rk4_segment(m, x, b - a, dt if on else dt_off)
        if schedule.t_extra > 0:
            x = _rk4_segment(m_off, x, schedule.t_extra, dt_off)
        out[n] = x
    return out


def _rk4_segment(m, x, length, dt):
    n = max(1, int(math.ceil(length / dt)))
    h = length / n
    for _ in range(n):
        k1 = m @ x
        k2 = m @ (x + 0.5 * h * k1)
        k3 = m @ (x + 0.5 * h * k2)
        k4 = m @ (x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def populations_after(pops: PopulationField, mat: MaterialParams, t: float) -> PopulationField:
    """Free relaxation (no pump, no stimulation) for a time ``t``."""
    if t < 0:
        raise PreparationError("waiting time must be non-negative")
    x = pops.stack() @ expm(rate_matrix(mat) * t).T
    return PopulationField.from_stack(pops.grid, x)


def realized_profile(final: PopulationField, raw: SpectralProfile) -> SpectralProfile:
    """Absorption left after pumping: raw depth times the g1 population.

    The raw background is scaled by the median g1 of the grid, which stands
    for the bulk of the pumped pit.
    """
    if final.grid.shape != raw.grid.shape or not np.allclose(final.grid, raw.grid, rtol=0, atol=1e-9 * raw.step):
        raise PreparationError("population field and profile use different grids")
    g1 = np.clip(final.g1, 0.0, 1.0)
    bg = raw.background * float(np.median(g1))
    return SpectralProfile(raw.grid, raw.depth * g1, bg, peak_fwhm=raw.peak_fwhm, period=raw.period)


def decay_profile(raw: SpectralProfile, populations: PopulationField, mat: MaterialParams,
                  t_wait: float) -> SpectralProfile:
    """Profile at ``t_wait`` after preparation, as pumped population relaxes back."""
    return realized_profile(populations_after(populations, mat, t_wait), raw)


def fluorescence_rate(final: PopulationField, mat: MaterialParams, t) -> np.ndarray:
    """Spontaneous decay rate (excited-class units per second) at time ``t`` after preparation."""
    t = np.asarray(t, dtype=float)
    return float(np.sum(final.e)) * np.exp(-t / mat.t1) / mat.t1
