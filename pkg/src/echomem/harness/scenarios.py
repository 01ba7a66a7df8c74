"""Built-in scenario pipelines.

Each pipeline takes a validated config and an output directory, writes its
CSV/JSON files there and returns a dict of metrics. All randomness is
drawn from generators keyed on the config seed plus a fixed per-use tag.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import replace
from pathlib import Path
from typing import Callable

import numpy as np

from ..detection import (DetectorModel, PhaseNoiseModel, fit_exponential_decay, fit_fringe,
                         fringe_to_csv, interference_scan, matched_lo_photons, simulate_counts, snr,
                         visibility_model)
from ..echo import (EchoResult, FieldSchedule, Pulse, afc_echo_times, afc_efficiency,
                    afc_efficiency_gaussian, compress_stretch_fwhm, multimode_capacity,
                    simulate_storage)
from ..pumping import (MaterialParams, PopulationField, PumpSchedule, decay_profile,
                       evolve_preparation, fluorescence_rate)
from ..spectral import (CombSpec, SpectralProfile, VoltPerWidthCalibration, detuning_grid,
                        feature_fwhm, make_comb, make_single_line, split_background)
from .config import ScenarioConfig


class ScenarioError(RuntimeError):
    pass


def write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# builders shared by several scenarios


def material(cfg: ScenarioConfig, **override) -> MaterialParams:
    m = dict(cfg.section("material"))
    m.update(override)
    return MaterialParams(**m)


def detector(cfg: ScenarioConfig) -> DetectorModel:
    d = cfg.section("detector")
    return DetectorModel(d["efficiency"], d["dark_rate"], d["path_transmission"], d["chopper_open"])


def pulse(cfg: ScenarioConfig, mean_photons=None) -> Pulse:
    p = cfg.section("pulse")
    n = p["mean_photons"] if mean_photons is None else mean_photons
    return Pulse(p["center"], p["fwhm"], n, p["carrier_offset"])


def comb_spec(cfg: ScenarioConfig) -> CombSpec:
    c = cfg.section("comb")
    return CombSpec.from_finesse(c["delta"], c["finesse"], c["peak_depth"], c["background"],
                                 c["n_peaks"], center_offset=c["center_offset"])


def comb_profile(cfg: ScenarioConfig) -> SpectralProfile:
    s = cfg.section("sim")
    return make_comb(comb_spec(cfg), window_width=s["window_width"], grid_points=s["grid_points"])


def pump_schedule(cfg: ScenarioConfig, gain=None) -> PumpSchedule:
    p = cfg.section("pump")
    span = p["sweep_span"] or cfg.section("sim")["window_width"]
    return PumpSchedule(
        sweep_span=span, sweep_rate=p["sweep_rate"], pump_rate=p["pump_rate"],
        gate_windows=PumpSchedule.line_gate(cfg.section("line")["gamma"]),
        duration=p["duration"], stimulation_gain=p["stimulation_gain"] if gain is None else gain,
        t_extra=p["t_extra"], t_wait=p["t_wait"], resonance_width=p["resonance_width"])


def raw_line_region(cfg: ScenarioConfig) -> SpectralProfile:
    """Unpumped inhomogeneous line: flat depth across the simulated window."""
    s = cfg.section("sim")
    grid = detuning_grid(s["window_width"], s["grid_points"])
    return SpectralProfile(grid, np.full(grid.size, cfg.section("line")["peak_depth"]), 0.0)


def stark_calibration(cfg: ScenarioConfig, gamma_ref: float) -> VoltPerWidthCalibration:
    """Calibration from [field]; ``stark_width`` pins the width added at u1."""
    f = cfg.section("field")
    if f["stark_width"] is not None:
        return VoltPerWidthCalibration(abs(f["u1"]), 1.0 + f["stark_width"] / gamma_ref)
    return VoltPerWidthCalibration(f["u_ref"], f["b_ref"])


def crib_schedule(cfg: ScenarioConfig, gamma_ref: float) -> FieldSchedule:
    f = cfg.section("field")
    if f["t_flip"] is None:
        raise ScenarioError("field.t_flip is required for CRIB storage")
    t_off = f["t_off"] if f["t_off"] is not None else 1.0
    return FieldSchedule.crib(f["u1"], f["t_flip"], u2=f["u2"], t_on=f["t_on"], t_off=t_off,
                              calib=stark_calibration(cfg, gamma_ref))


def crib_storage(cfg: ScenarioConfig, profile: SpectralProfile, n_bar: float = 1.0) -> EchoResult:
    prof = split_background(profile)
    sched = crib_schedule(cfg, feature_fwhm(prof))
    s = cfg.section("sim")
    return simulate_storage(prof, pulse(cfg, n_bar), sched, resolution=s["resolution"], t_end=s["t_end"])


def scaled(result: EchoResult, n_bar: float) -> EchoResult:
    """Same storage run for a different input photon number (linear response)."""
    k = n_bar / result.pulse.mean_photons
    root = math.sqrt(k)
    return replace(result, intensity=result.intensity * k, field=result.field * root,
                   echo_field=result.echo_field * root,
                   pulse=replace(result.pulse, mean_photons=n_bar))


def mean_fluorescence(final: PopulationField, mat: MaterialParams, t_start: float, duration: float,
                      collection: float) -> float:
    """Fluorescence photon rate averaged over the trials that follow ``t_start``."""
    total = float(np.sum(final.e))
    frac = math.exp(-t_start / mat.t1) - math.exp(-(t_start + duration) / mat.t1)
    return collection * total * frac / duration


def trace_rows(*results: EchoResult):
    t = results[0].times
    return [[float(t[i])] + [float(r.intensity[i]) for r in results] for i in range(t.size)]


# --------------------------------------------------------------------------
# scenarios


def noise_decay(cfg: ScenarioConfig, out: Path):
    """Fluorescence noise versus waiting time for several stimulation gains, with n_bar = 0."""
    det = detector(cfg)
    tr, sc = cfg.section("trials"), cfg.section("scan")
    coll = cfg.section("detector")["collection"]
    mat = material(cfg)
    grid = raw_line_region(cfg).grid
    gains = sorted(sc["gains"])
    t_waits = np.asarray(sc["t_waits"])
    window = tr["window"]
    rows, floors, fits, residual = [], {}, {}, []
    for gi, gain in enumerate(gains):
        run = evolve_preparation(PopulationField.ground(grid), pump_schedule(cfg, gain), mat)
        if gi == 0:
            run.final.to_csv(out / "preparation.csv")
            write_json(out / "preparation.json", run.summary())
        counts, expected = [], []
        for k, tw in enumerate(t_waits):
            rate = coll * float(fluorescence_rate(run.final, mat, tw))
            h = simulate_counts(None, rate, det, tr["n_trials"], window, seed=[cfg.seed, 1, gi, k],
                                collection=1.0, t_range=(0.0, window))
            counts.append(int(h.counts.sum()))
            expected.append(float(h.expected.sum()))
            rows.append([float(gain), float(tw), counts[-1], expected[-1]])
        residual.append(run.summary()["residual_excited_total"])
        floors[gain] = det.efficiency * coll * float(fluorescence_rate(run.final, mat, 0.0)) + det.dark_rate
        c = np.asarray(counts, dtype=float)
        if c[0] > 2 * tr["n_trials"] * det.dark_rate * window:
            fits[gain] = fit_exponential_decay(t_waits, c, sigma=np.sqrt(np.maximum(c, 1.0)))
    write_rows(out / "noise_decay.csv", ["stimulation_gain", "t_wait_s", "counts", "expected"], rows)
    if gains[0] not in fits:
        raise ScenarioError("fluorescence at the lowest gain is below the dark floor; cannot fit a lifetime")
    fit = fits[gains[0]]
    floor_list = [floors[g] for g in gains]
    metrics = {
        "fitted_lifetime_s": fit["tau"],
        "fitted_lifetime_err_s": fit["tau_err"],
        "gains": gains,
        "noise_floor_t0_hz": floor_list,
        "noise_floor_strictly_decreasing": bool(all(b < a for a, b in zip(floor_list, floor_list[1:]))),
        "residual_excited_total": residual,
    }
    write_json(out / "noise_fit.json", {"gain": gains[0], **fit})
    return metrics


def snr_vs_wait(cfg: ScenarioConfig, out: Path):
    """CRIB efficiency versus waiting time, and SNR versus input photon number."""
    det = detector(cfg)
    tr, sc, pm = cfg.section("trials"), cfg.section("scan"), cfg.section("pump")
    coll = cfg.section("detector")["collection"]
    raw = raw_line_region(cfg)
    t_waits = sorted(sc["t_waits"])
    curves, results = {}, {}
    mats = {"configured": material(cfg), "pure_tz": material(cfg, persistent_fraction=0.0)}
    for label, mat in mats.items():
        run = evolve_preparation(PopulationField.ground(raw.grid), pump_schedule(cfg), mat)
        effs = []
        for tw in t_waits:
            res = crib_storage(cfg, decay_profile(raw, run.final, mat, tw))
            if not res.echoes:
                raise ScenarioError(f"no CRIB echo found at t_wait={tw:g} s")
            effs.append(max(res.echoes, key=lambda e: e.efficiency).efficiency)
        curves[label] = np.asarray(effs)
        results[label] = run
    ratio = curves["configured"] / curves["configured"][0]
    ref_ratio = curves["pure_tz"] / curves["pure_tz"][0]
    tz = cfg.section("material")["tz"]
    tz_ratio = np.exp(-np.asarray(t_waits) / tz)
    write_rows(out / "efficiency_vs_wait.csv",
               ["t_wait_s", "efficiency", "efficiency_pure_tz", "ratio", "ratio_pure_tz", "exp_t_over_tz"],
               [[float(t), float(a), float(b), float(c), float(d), float(e)] for t, a, b, c, d, e in
                zip(t_waits, curves["configured"], curves["pure_tz"], ratio, ref_ratio, tz_ratio)])

    # SNR at the nominal waiting time, fixed noise, scanned input
    mat = mats["configured"]
    run = results["configured"]
    base = crib_storage(cfg, decay_profile(raw, run.final, mat, pm["t_wait"]))
    echo = max(base.echoes, key=lambda e: e.efficiency)
    fl = mean_fluorescence(run.final, mat, pm["t_wait"], tr["measure_duration"], coll)
    half = echo.fwhm
    b_center = echo.t_peak + 4 * echo.fwhm
    if b_center + half > base.times[-1]:
        raise ScenarioError("simulation ends before the noise window; raise sim.t_end")
    n_bars = sorted(sc["n_bars"])
    snrs, rows = [], []
    for k, nb in enumerate(n_bars):
        h = simulate_counts(scaled(base, nb), fl, det, tr["n_trials"], cfg.section("detector")["bin_width"],
                            seed=[cfg.seed, 2, k])
        wa = h.window_bins(echo.t_peak - half, echo.t_peak + half)
        wb = (wa[0] + int(round((b_center - echo.t_peak) / h.bin_width)),
              wa[1] + int(round((b_center - echo.t_peak) / h.bin_width)))
        s = snr(h, wa, wb)
        snrs.append(float("nan") if s is None else s)
        rows.append([float(nb), h.window_sum(wa), h.window_sum(wb), snrs[-1]])
    write_rows(out / "snr_vs_nbar.csv", ["mean_photons", "n_a", "n_b", "snr"], rows)
    x, y = np.asarray(n_bars), np.asarray(snrs)
    slope, icpt = np.polyfit(x, y, 1)
    r2 = 1 - np.sum((y - (slope * x + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
    later = slice(1, None)
    return {
        "efficiency_t0": float(curves["configured"][0]),
        "efficiency_ratio": ratio.tolist(),
        "efficiency_ratio_pure_tz": ref_ratio.tolist(),
        "exp_t_over_tz": tz_ratio.tolist(),
        "t_waits_s": [float(t) for t in t_waits],
        "slower_than_pure_tz_model": bool(np.all(ratio[later] > ref_ratio[later])),
        "slower_than_exp_tz_at_longest_wait": bool(ratio[-1] > tz_ratio[-1]),
        "snr_slope": float(slope),
        "snr_intercept": float(icpt),
        "snr_r2": float(r2),
        "snr_values": [float(v) for v in snrs],
    }


def crib_echo(cfg: ScenarioConfig, out: Path):
    """Full CRIB pipeline: pumped line, Stark broadening and flip, photon counting."""
    det = detector(cfg)
    tr, pm = cfg.section("trials"), cfg.section("pump")
    coll = cfg.section("detector")["collection"]
    raw = raw_line_region(cfg)
    mat = material(cfg)
    run = evolve_preparation(PopulationField.ground(raw.grid), pump_schedule(cfg), mat)
    run.to_files(out / "preparation.csv", out / "preparation.json", raw)
    prof = split_background(decay_profile(raw, run.final, mat, pm["t_wait"]))
    prof.to_csv(out / "profile.csv")
    res = crib_storage(cfg, prof, cfg.section("pulse")["mean_photons"])
    res.to_csv(out / "trace.csv")
    res.to_json(out / "echoes.json")
    if not res.echoes:
        raise ScenarioError("no CRIB echo found")
    echo = max(res.echoes, key=lambda e: e.efficiency)
    fl = mean_fluorescence(run.final, mat, pm["t_wait"], tr["measure_duration"], coll)
    h = simulate_counts(res, fl, det, tr["n_trials"], cfg.section("detector")["bin_width"], seed=[cfg.seed, 3])
    h.to_csv(out / "histogram.csv")
    wa = h.window_bins(echo.t_peak - echo.fwhm, echo.t_peak + echo.fwhm)
    shift = int(round(4 * echo.fwhm / h.bin_width))
    s = snr(h, wa, (wa[0] + shift, wa[1] + shift)) if wa[1] + shift <= h.counts.size else None
    return {
        "echo_time_s": echo.t_peak,
        "echo_efficiency": echo.efficiency,
        "echo_fwhm_s": echo.fwhm,
        "flip_time_s": cfg.section("field")["t_flip"],
        "background_depth": prof.background,
        "feature_depth": float(prof.depth.max()),
        "snr": s,
    }


def pulse_shape(cfg: ScenarioConfig, out: Path):
    """Echo compression and stretching from asymmetric field reversal.

    The window and grid are sized from the largest Stark width in the scan so
    the broadened line stays inside the simulated band.
    """
    ln, f, s = cfg.section("line"), cfg.section("field"), cfg.section("sim")
    if f["stark_width"] is None or f["t_flip"] is None:
        raise ScenarioError("pulse-shape needs field.stark_width and field.t_flip")
    p = pulse(cfg)
    g0 = ln["gamma"]
    u1 = f["u1"]
    cal = VoltPerWidthCalibration(abs(u1), 1.0 + f["stark_width"] / g0)
    tau = f["t_flip"] - p.center_time
    rows, metrics = [], {"alpha": [], "fwhm_ratio": [], "echo_time_s": [], "predicted_time_s": []}
    for u2 in sorted(cfg.section("scan")["u2"]):
        pred = compress_stretch_fwhm(p.fwhm, u1, u2, cal)
        s_max = f["stark_width"] * max(1.0, u2 / u1)
        win = 1.69 * s_max + 10 * g0
        n = int(2 ** math.ceil(math.log2(win / (g0 / 6))))
        prof = make_single_line(g0, ln["peak_depth"], ln["background"], window_width=win, grid_points=n)
        t_echo = f["t_flip"] + tau * pred["tau_scale"]
        sched = FieldSchedule.crib(u1, f["t_flip"], u2=u2, t_on=f["t_on"], t_off=t_echo + 10 * p.fwhm, calib=cal)
        res = simulate_storage(prof, p, sched, resolution=min(s["resolution"], 1 / (10 * prof.width)),
                               t_end=t_echo + 4 * pred["fwhm"])
        if not res.echoes:
            raise ScenarioError(f"no echo found for u2={u2:g} V")
        e = max(res.echoes, key=lambda x: x.efficiency)
        ratio = e.fwhm / pred["fwhm"]
        rows.append([float(u2), pred["alpha"], e.fwhm, pred["fwhm"], ratio, e.t_peak, t_echo, e.efficiency])
        metrics["alpha"].append(pred["alpha"])
        metrics["fwhm_ratio"].append(ratio)
        metrics["echo_time_s"].append(e.t_peak)
        metrics["predicted_time_s"].append(t_echo)
        res.to_csv(out / f"trace_u2_{u2:g}V.csv")
    write_rows(out / "pulse_shape.csv",
               ["u2_v", "alpha", "echo_fwhm_s", "predicted_fwhm_s", "fwhm_ratio", "echo_time_s",
                "predicted_time_s", "efficiency"], rows)
    return metrics


def afc_echo(cfg: ScenarioConfig, out: Path):
    """AFC storage on the configured comb, with counting statistics."""
    c, tr = cfg.section("comb"), cfg.section("trials")
    prof = comb_profile(cfg)
    prof.to_csv(out / "profile.csv")
    p = pulse(cfg)
    res = simulate_storage(prof, p, resolution=cfg.section("sim")["resolution"], t_end=cfg.section("sim")["t_end"])
    res.to_csv(out / "trace.csv")
    res.to_json(out / "echoes.json")
    e1, e2 = res.echo(1), res.echo(2)
    if e1 is None or e2 is None:
        raise ScenarioError("expected two AFC echoes")
    det = detector(cfg)
    h = simulate_counts(res, 0.0, det, tr["n_trials"], cfg.section("detector")["bin_width"], seed=[cfg.seed, 4])
    h.to_csv(out / "histogram.csv")
    wa = h.window_bins(e1.t_peak - p.fwhm, e1.t_peak + p.fwhm)
    # noise window halfway between echo 2 and the (absent) third echo
    shift = int(round(1.5 / c["delta"] / h.bin_width))
    s = snr(h, wa, (wa[0] + shift, wa[1] + shift))
    return {
        "echo_times_s": [e1.t_peak, e2.t_peak],
        "expected_times_s": afc_echo_times(c["delta"], 2),
        "time_step_s": res.step,
        "eta1": e1.efficiency,
        "eta2": e2.efficiency,
        "eta1_closed_form": afc_efficiency(c["peak_depth"], c["finesse"], c["background"], 1),
        "eta1_gaussian_form": afc_efficiency_gaussian(c["peak_depth"], c["finesse"], c["background"], 1),
        "eta2_gaussian_form": afc_efficiency_gaussian(c["peak_depth"], c["finesse"], c["background"], 2),
        "snr": s,
    }


def fringe_scan(cfg: ScenarioConfig, out: Path):
    """Phase of echoes 1 and 2 read out against a transmitted local oscillator."""
    c, tr, sc, nz = (cfg.section(k) for k in ("comb", "trials", "scan", "noise"))
    spec = comb_spec(cfg)
    prof = comb_profile(cfg)
    p = pulse(cfg)
    res = simulate_storage(prof, p, resolution=cfg.section("sim")["resolution"], t_end=cfg.section("sim")["t_end"])
    if nz["sigma"] is not None:
        noise = PhaseNoiseModel(nz["sigma"])
    elif nz["visibility_v1"] is not None:
        noise = PhaseNoiseModel.from_visibility(nz["visibility_v1"])
    else:
        noise = PhaseNoiseModel(0.0)
    det = detector(cfg)
    metrics = {"sigma_rad": noise.sigma}
    for m in (1, 2):
        e = res.echo(m)
        if e is None:
            raise ScenarioError(f"echo {m} missing")
        lo = Pulse(m / c["delta"], p.fwhm, matched_lo_photons(e.efficiency, p.mean_photons, res.transmitted_fraction))
        period = c["delta"] / m
        scan = np.linspace(-sc["delta0_periods"] * period / 2, sc["delta0_periods"] * period / 2, sc["delta0_points"])
        pts = interference_scan(res, lo, scan, spec, noise, det, tr["n_trials"], seed=[cfg.seed, 5], m=m,
                                n_cycles=tr["n_cycles"])
        fit = fit_fringe(pts, period_guess=period)
        fringe_to_csv(pts, out / f"fringe_m{m}.csv")
        fit.to_json(out / f"fringe_fit_m{m}.json")
        metrics[f"V{m}"] = fit.visibility
        metrics[f"V{m}_err"] = fit.errors["visibility"]
        metrics[f"V{m}_model"] = visibility_model(noise.sigma, m)
        metrics[f"period{m}_hz"] = fit.period
        metrics[f"period{m}_err_hz"] = fit.errors["period"]
        metrics[f"expected_period{m}_hz"] = period
    # phase slope d(phi)/d(delta0) is 2 pi / P
    metrics["phase_slope_ratio"] = metrics["period1_hz"] / metrics["period2_hz"]
    return metrics


def combined_gate(cfg: ScenarioConfig, out: Path):
    """Reference AFC, unreversed Stark gate, and gate with polarity reversal at 1/delta."""
    c, f, s = cfg.section("comb"), cfg.section("field"), cfg.section("sim")
    prof = comb_profile(cfg)
    p = pulse(cfg)
    delta = c["delta"]
    t1 = 1 / delta
    gamma = feature_fwhm(prof)
    if f["stark_width"] is None:
        raise ScenarioError("combined-gate needs field.stark_width")
    cal = VoltPerWidthCalibration(abs(f["u1"]), 1.0 + f["stark_width"] / gamma)
    t_on = f["t_on"]
    if not p.center_time + 2 * p.fwhm <= t_on < t1:
        raise ScenarioError("field.t_on must fall after the pulse and before the first echo")
    t_off = 2 * t1 - t_on
    t_end = s["t_end"] or 2 * t1 + 3 * p.fwhm
    kw = dict(resolution=s["resolution"], t_end=t_end)
    ref = simulate_storage(prof, p, **kw)
    unrev = simulate_storage(prof, p, FieldSchedule(((t_on, t_end + p.fwhm, f["u1"]),), cal), **kw)
    rev = simulate_storage(prof, p, FieldSchedule(((t_on, t1, f["u1"]), (t1, t_off, -f["u1"])), cal), **kw)
    write_rows(out / "traces.csv", ["time_s", "reference", "unreversed", "reversed"], trace_rows(ref, unrev, rev))
    half = 2 * p.fwhm
    w = lambda r, m: r.window_efficiency(m * t1, half)
    literal = afc_efficiency(c["peak_depth"], c["finesse"], c["background"], 2)
    gauss = afc_efficiency_gaussian(c["peak_depth"], c["finesse"], c["background"], 2)
    return {
        "stark_width_over_delta": f["stark_width"] / delta,
        "echo1_reference": w(ref, 1),
        "echo1_unreversed": w(unrev, 1),
        "echo1_suppression": w(ref, 1) / max(w(unrev, 1), 1e-300),
        "echo2_reference": w(ref, 2),
        "echo2_unreversed": w(unrev, 2),
        "echo2_reversed": w(rev, 2),
        "echo2_literal_prediction": literal,
        "echo2_gaussian_prediction": gauss,
        "echo2_ratio_literal": w(rev, 2) / literal,
        "echo2_ratio_gaussian": w(rev, 2) / gauss,
    }


def capacity_curves(cfg: ScenarioConfig, out: Path):
    """Mode counts: CRIB versus optical depth at a target efficiency, AFC versus peak count."""
    cp, sc = cfg.section("capacity"), cfg.section("scan")
    crib_rows, afc_rows = [], []
    for d in sorted(sc["d_values"]):
        r = multimode_capacity("crib", d=d, target_efficiency=cp["target_efficiency"], d0=cp["d0"])
        crib_rows.append([float(d), r["modes"], r["broadening"], r["efficiency"]])
    for n in sorted(sc["n_peaks"]):
        r = multimode_capacity("afc", n_peaks=n, c=cp["c"], d=cp["d"], finesse=cp["finesse"], d0=cp["d0"])
        afc_rows.append([int(n), r["modes"], r["efficiency"]])
    write_rows(out / "capacity_crib.csv", ["optical_depth", "modes", "broadening", "efficiency"], crib_rows)
    write_rows(out / "capacity_afc.csv", ["n_peaks", "modes", "efficiency"], afc_rows)
    d = np.array([r[0] for r in crib_rows])
    b = np.array([r[2] for r in crib_rows])
    slope = float(np.polyfit(d, b, 1)[0]) if d.size > 1 else float("nan")
    return {
        "crib_modes": [r[1] for r in crib_rows],
        "crib_broadening_per_depth": slope,
        "afc_modes": [r[1] for r in afc_rows],
        "afc_efficiency": afc_rows[0][2] if afc_rows else None,
    }


SCENARIOS: dict[str, Callable] = {
    "noise-decay": noise_decay,
    "snr-vs-wait": snr_vs_wait,
    "crib-echo": crib_echo,
    "pulse-shape": pulse_shape,
    "afc-echo": afc_echo,
    "fringe-scan": fringe_scan,
    "combined-gate": combined_gate,
    "capacity-curves": capacity_curves,
}
