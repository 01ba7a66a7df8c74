"""Spectral absorption structures and discrete ensembles sampled from them.

All frequencies are detunings in Hz from the signal carrier. Optical depths are
dimensionless. Profiles are immutable; every transform returns a new object.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicSpline

FWHM_TO_STD = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
DEFAULT_GRID_POINTS = 2**14
DEFAULT_WAVENUMBER = 2.0 * np.pi / 1536e-9


class ProfileError(ValueError):
    """Raised for profiles that cannot be constructed or transformed."""


@dataclass(frozen=True)
class SpectralProfile:
    """Optical depth on a uniform detuning grid plus a flat background.

    ``depth`` is the tailored feature only; ``background`` is the absorbing
    floor d0 that is present everywhere in the window.
    """

    grid: np.ndarray
    depth: np.ndarray
    background: float = 0.0
    peak_fwhm: Optional[float] = None
    period: Optional[float] = None
    effective_background: Optional[float] = None
    low_contrast: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        depth = np.asarray(self.depth, dtype=float)
        if grid.ndim != 1 or grid.shape != depth.shape:
            raise ProfileError("grid and depth must be 1-D arrays of equal length")
        if grid.size < 2:
            raise ProfileError("grid needs at least two points")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ProfileError("grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
            raise ProfileError("grid must be uniformly spaced")
        if np.any(depth < 0) or self.background < 0:
            raise ProfileError("optical depth must be non-negative")
        grid.setflags(write=False)
        depth.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "background", float(self.background))

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def window(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def width(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    def area(self) -> float:
        """Integral of the feature depth over detuning (Hz)."""
        return float(trapezoid(self.depth, self.grid))

    def total_depth(self, detuning) -> np.ndarray:
        """Feature plus background at arbitrary detunings (zero feature outside)."""
        d = np.interp(detuning, self.grid, self.depth, left=0.0, right=0.0)
        return d + self.background

    def with_depth(self, depth, background: Optional[float] = None, **changes) -> "SpectralProfile":
        bg = self.background if background is None else background
        return replace(self, depth=np.asarray(depth, dtype=float), background=bg, **changes)

    def to_csv(self, path) -> None:
        lines = [f"# background={self.background!r}"]
        if self.peak_fwhm is not None:
            lines.append(f"# peak_fwhm_hz={self.peak_fwhm!r}")
        if self.period is not None:
            lines.append(f"# period_hz={self.period!r}")
        lines.append("detuning_hz,optical_depth")
        lines.extend(f"{g:.17g},{d:.17g}" for g, d in zip(self.grid, self.depth))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SpectralProfile":
        meta = {}
        rows = []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = float(value)
            elif line and not line.startswith("detuning_hz"):
                a, b = line.split(",")
                rows.append((float(a), float(b)))
        if "background" not in meta:
            raise ProfileError(f"{path}: missing '# background=' header")
        arr = np.array(rows, dtype=float)
        return cls(
            grid=arr[:, 0],
            depth=arr[:, 1],
            background=meta["background"],
            peak_fwhm=meta.get("peak_fwhm_hz"),
            period=meta.get("period_hz"),
        )


@dataclass(frozen=True)
class CombSpec:
    delta: float
    peak_fwhm: float
    peak_depth: float
    background: float = 0.0
    n_peaks: int = 15
    center_offset: float = 0.0

    @property
    def finesse(self) -> float:
        return self.delta / self.peak_fwhm

    @classmethod
    def from_finesse(cls, delta, finesse, peak_depth, background=0.0, n_peaks=15, center_offset=0.0):
        return cls(delta, delta / finesse, peak_depth, background, n_peaks, center_offset)


@dataclass(frozen=True)
class VoltPerWidthCalibration:
    """Linear Stark calibration anchored at one (voltage, broadening) pair."""

    u_ref: float = 70.0
    b_ref: float = 3.0

    def __post_init__(self):
        if self.u_ref <= 0 or self.b_ref <= 1:
            raise ProfileError("calibration needs u_ref > 0 and b_ref > 1")


@dataclass(frozen=True)
class AtomEnsemble:
    detuning: np.ndarray
    position: np.ndarray
    weight: np.ndarray
    length: float
    seed: Optional[int] = None
    wavenumber: float = DEFAULT_WAVENUMBER
    is_background: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.is_background is None:
            object.__setattr__(self, "is_background", np.zeros(len(self.detuning), dtype=bool))

    def __len__(self):
        return len(self.detuning)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weight))


def _symmetric_grid(window_width: float, grid_points: int) -> np.ndarray:
    # index n//2 sits exactly on zero detuning
    step = window_width / grid_points
    return (np.arange(grid_points) - grid_points // 2) * step


def gaussian(x, center, fwhm):
    return np.exp(-4.0 * np.log(2.0) * ((x - center) / fwhm) ** 2)


def make_single_line(
    gamma_fwhm: float,
    peak_depth: float,
    background: float = 0.0,
    window_width: Optional[float] = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> SpectralProfile:
    """Gaussian absorption line centred on zero detuning atop a flat background."""
    if gamma_fwhm <= 0:
        raise ProfileError(f"line width must be positive, got {gamma_fwhm}")
    if window_width is None:
        window_width = 10.0 * gamma_fwhm
    if window_width < 6.0 * gamma_fwhm:
        raise ProfileError(
            f"window {window_width:g} Hz narrower than 6 x FWHM ({6 * gamma_fwhm:g} Hz); "
            "the line would be truncated"
        )
    if grid_points < 256:
        raise ProfileError("need at least 256 grid points")
    grid = _symmetric_grid(window_width, grid_points)
    depth = peak_depth * gaussian(grid, 0.0, gamma_fwhm)
    return SpectralProfile(grid, depth, background, peak_fwhm=gamma_fwhm)


def comb_peak_centers(spec: CombSpec) -> np.ndarray:
    half = (spec.n_peaks - 1) / 2.0
    return spec.center_offset + (np.arange(spec.n_peaks) - half) * spec.delta


def make_comb(spec: CombSpec, window_width: Optional[float] = None,
              grid_points: int = DEFAULT_GRID_POINTS) -> SpectralProfile:
    """Sum of identical Gaussian peaks spaced by ``spec.delta``.

    Overlap of neighbouring peaks raises the inter-peak floor; that floor is
    reported in ``effective_background`` (d0 + floor). Weak contrast sets
    ``low_contrast`` and emits a warning instead of failing.
    """
    if spec.n_peaks < 1:
        raise ProfileError("n_peaks must be >= 1")
    if spec.delta <= 0 or spec.peak_fwhm <= 0:
        raise ProfileError("comb spacing and peak width must be positive")
    if spec.finesse <= 1:
        raise ProfileError(f"finesse must exceed 1, got {spec.finesse:g}")
    if window_width is None:
        window_width = (spec.n_peaks + 4) * spec.delta
    if window_width < (spec.n_peaks + 2) * spec.delta:
        raise ProfileError(
            f"window {window_width:g} Hz too narrow for {spec.n_peaks} peaks "
            f"(need {(spec.n_peaks + 2) * spec.delta:g} Hz)"
        )
    grid = _symmetric_grid(window_width, grid_points)
    centers = comb_peak_centers(spec)
    depth = np.zeros_like(grid)
    for c in centers:
        depth += spec.peak_depth * gaussian(grid, c, spec.peak_fwhm)

    floor = 0.0
    low_contrast = False
    if spec.n_peaks > 1:
        mid = centers[len(centers) // 2]
        inside = np.abs(grid - mid) <= spec.delta / 2
        floor = float(depth[inside].min())
        peak = float(depth[inside].max())
        low_contrast = (peak - floor) / peak < 0.5
        if low_contrast:
            warnings.warn(f"comb contrast below 0.5 (finesse {spec.finesse:.2f})", stacklevel=2)
    return SpectralProfile(
        grid, depth, spec.background,
        peak_fwhm=spec.peak_fwhm,
        period=spec.delta if spec.n_peaks > 1 else None,
        effective_background=spec.background + floor,
        low_contrast=low_contrast,
    )


def stark_broaden(profile: SpectralProfile, factor: float) -> SpectralProfile:
    """Rescale the feature about zero detuning: delta -> b*delta, depth -> depth/b.

    The background is left untouched. The grid is extended (same step) when
    the broadened feature would not fit.
    """
    b = float(factor)
    if b < 1:
        raise ProfileError(f"broadening factor must be >= 1, got {b}")
    if b == 1:
        return profile
    grid = profile.grid
    depth = profile.depth
    significant = np.nonzero(depth > 1e-12 * depth.max())[0] if depth.max() > 0 else []
    if len(significant):
        lo, hi = grid[significant[0]] * b, grid[significant[-1]] * b
        step = profile.step
        n_lo = max(0, int(np.ceil((grid[0] - lo) / step)) + 1)
        n_hi = max(0, int(np.ceil((hi - grid[-1]) / step)) + 1)
        if n_lo or n_hi:
            grid = np.concatenate([
                grid[0] - step * np.arange(n_lo, 0, -1),
                grid,
                grid[-1] + step * np.arange(1, n_hi + 1),
            ])
    spline = CubicSpline(profile.grid, profile.depth, extrapolate=False)
    new = np.nan_to_num(spline(grid / b), nan=0.0) / b
    new = np.clip(new, 0.0, None)
    old_area = profile.area()
    new_area = trapezoid(new, grid)
    if new_area > 0:
        new *= old_area / new_area
    return SpectralProfile(
        grid, new, profile.background,
        peak_fwhm=None if profile.peak_fwhm is None else profile.peak_fwhm * b,
        period=None if profile.period is None else profile.period * b,
    )


def voltage_to_broadening(u: float, calib: VoltPerWidthCalibration = VoltPerWidthCalibration()) -> float:
    """Broadening factor for an applied voltage; added width is linear in |u|."""
    if u < 0:
        raise ProfileError("voltage magnitude must be non-negative")
    return 1.0 + (calib.b_ref - 1.0) * u / calib.u_ref


def feature_fwhm(profile: SpectralProfile) -> float:
    """Width of the feature used to scale Stark shifts.

    Uses the stored peak width when known, otherwise measures the FWHM of the
    tallest peak by linear interpolation of the half-maximum crossings.
    """
    if profile.peak_fwhm is not None:
        return profile.peak_fwhm
    d = profile.depth
    i = int(np.argmax(d))
    half = d[i] / 2
    if half <= 0:
        raise ProfileError("profile has no feature")
    left = i
    while left > 0 and d[left] > half:
        left -= 1
    right = i
    while right < len(d) - 1 and d[right] > half:
        right += 1
    g = profile.grid

    def cross(a, b):
        if d[a] == d[b]:
            return g[a]
        return g[a] + (half - d[a]) * (g[b] - g[a]) / (d[b] - d[a])

    return float(cross(right - 1, right) - cross(left, left + 1))


def sample_ensemble(
    profile: SpectralProfile,
    n_atoms: int,
    length: float = 6e-3,
    seed: int = 0,
    include_background: bool = False,
    wavenumber: float = DEFAULT_WAVENUMBER,
) -> AtomEnsemble:
    """Draw atoms by inverse-CDF sampling of the feature.

    With ``include_background`` a share of atoms proportional to the
    background's area in the window is spread uniformly across it.
    """
    if n_atoms < 1:
        raise ProfileError("need at least one atom")
    area = profile.area()
    if area <= 0:
        raise ProfileError("cannot sample a zero-area profile")
    rng = np.random.default_rng(seed)
    n_bg = 0
    if include_background and profile.background > 0:
        bg_area = profile.background * profile.width
        n_bg = int(rng.binomial(n_atoms, bg_area / (bg_area + area)))
    n_feat = n_atoms - n_bg
    cdf = cumulative_trapezoid(profile.depth, profile.grid, initial=0.0)
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    det = np.interp(rng.random(n_feat), cdf[keep], profile.grid[keep])
    if n_bg:
        lo, hi = profile.window
        det = np.concatenate([det, rng.uniform(lo, hi, n_bg)])
    pos = rng.uniform(0.0, length, n_atoms)
    flags = np.zeros(n_atoms, dtype=bool)
    flags[n_feat:] = True
    return AtomEnsemble(det, pos, np.ones(n_atoms), length, seed, wavenumber, flags)


def profile_cdf(profile: SpectralProfile, x) -> np.ndarray:
    cdf = cumulative_trapezoid(profile.depth, profile.grid, initial=0.0)
    return np.interp(x, profile.grid, cdf / cdf[-1])


def detuning_grid(window_width: float, grid_points: int) -> np.ndarray:
    """Uniform grid of ``grid_points`` detunings with zero on the centre index."""
    if window_width <= 0 or grid_points < 2:
        raise ProfileError("need a positive window and at least two points")
    return _symmetric_grid(window_width, grid_points)


def split_background(profile: SpectralProfile) -> SpectralProfile:
    """Move the lowest depth of the feature into the flat background.

    A pumped pit leaves a floor everywhere in the window; treating it as
    background keeps it out of the Stark-shifted feature.
    """
    floor = float(np.min(profile.depth))
    return SpectralProfile(profile.grid, profile.depth - floor, profile.background + floor,
                           peak_fwhm=profile.peak_fwhm, period=profile.period)
