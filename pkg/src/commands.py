"""
Subcommand runners: read the config, call the library, write artifacts, check thresholds
"""

import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .console import logger
from .constants import (
    ADJOINT_TOL,
    CLT_KS_LIMIT,
    CLT_KS_SCALE,
    CLT_MONOTONE_TOL,
    GRAM_TOL,
    KERNEL_DIAGONAL_TOL,
    LADDER_TOL,
    LOCALIZATION_CENTER_TOL,
    LOCALIZATION_MAX_SLOPE,
    REJECTION_BAND,
    ROTATION_TOL,
    UNCORRELATION_FINAL,
    ZONAL_NUMERIC_TOL,
    ZONAL_SPECTRAL_TOL,
    Subcommand,
)
from .display import show_failures, show_outputs, show_run_header, show_table
from .errors import ConfigError, ThresholdViolation
from .export import (
    write_coefficients,
    write_csv,
    write_frame,
    write_manifest,
    write_spectrum,
    write_wavelets,
)
from .fields import empirical_spectrum, sample_field, shell_energy_ensemble
from .filters import build_filter, daubechies_bounds
from .frame import build_frame, frame_bound_estimate, gap_sweep, localization_study, wavelet_coefficients
from .geometry import SpherePoint, great_circle_points
from .harmonics import gram_residual, ladder_errors, zonal_pole_errors
from .parser import ExperimentConfig, read_frame
from .stats import (
    clt_experiment,
    interior_scale,
    rejection_rate,
    scale_statistics,
    select_decorrelating_scales,
    uncorrelation_experiment,
)
from .wigner import kernel_diagonal_error, rotation_homomorphism_error


@dataclass
class RunResult:
    """Artifacts, summary and failed checks of one subcommand run"""
    subcommand: str
    outputs: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[ThresholdViolation] = field(default_factory=list)

    def require(self, check: str, observed: float, threshold: float, ok: bool, detail: str = ""):
        if not ok:
            self.failures.append(ThresholdViolation(check, observed, threshold, detail))


# --- harmonics-check --------------------------------------------------------

def run_harmonics_check(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.HARMONICS_CHECK.value)
    rng = np.random.default_rng([config.seed, 0])
    L = config.L
    small_L = min(L, 16)
    rows = []
    for s in range(-abs(config.spin), abs(config.spin) + 1):
        checks = [("gram_residual", gram_residual(s, L), GRAM_TOL),
                  ("kernel_diagonal", kernel_diagonal_error(s, L, rng), KERNEL_DIAGONAL_TOL)]
        spectral, numeric = zonal_pole_errors(s, small_L)
        checks += [("zonal_spectral", spectral, ZONAL_SPECTRAL_TOL), ("zonal_numeric", numeric, ZONAL_NUMERIC_TOL)]
        fd_error, adjoint = ladder_errors(s, small_L, rng)
        checks += [("spin_ladder", fd_error, LADDER_TOL), ("adjoint", adjoint, ADJOINT_TOL),
                   ("wigner_homomorphism", rotation_homomorphism_error(s, small_L, rng), ROTATION_TOL)]
        for name, observed, threshold in checks:
            ok = observed < threshold
            rows.append((name, s, observed, threshold, ok))
            result.require(name, observed, threshold, ok, f"s={s}")
    header = ["check", "spin", "observed", "threshold", "passed"]
    result.outputs.append(write_csv(config.out_dir / "harmonics.csv", header, rows))
    show_table("Harmonics checks", header, rows)
    result.summary = {"checks": len(rows), "failed": len(result.failures)}
    return result


# --- frames ---------------------------------------------------------------

def run_frame_build(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.FRAME_BUILD.value)
    filt = build_filter(config.a)
    lower, upper = daubechies_bounds(filt)
    frame = build_frame(config.a, config.b, config.spin, config.L, filt)
    target = frame_path or config.out_dir / "frame.json"
    result.outputs.append(write_frame(target, frame))
    rows = []
    for j in frame.j_range:
        lo, hi = frame.shell_range(j)
        rows.append((j, frame.partition(j).n_cells, lo, hi))
    show_table(f"Frame s={frame.spin} L={frame.band_limit} b={frame.b}", ["j", "cells", "l_min", "l_max"], rows)
    result.summary = {"n_elements": frame.n_elements, "j_range": list(frame.j_range),
                      "daubechies_A": lower, "daubechies_B": upper}
    return result


def run_frame_check(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.FRAME_CHECK.value)
    if frame_path is not None:
        frames = [read_frame(frame_path)]
    else:
        b_list = config.b_list or [config.b, config.b / 2.0, config.b / 4.0]
        filt = build_filter(config.a)
        frames = [build_frame(config.a, b, config.spin, config.L, filt) for b in b_list]
    frames.sort(key=lambda fr: fr.b, reverse=True)
    estimates, trial_rows = [], []
    for frame in frames:
        bounds = frame_bound_estimate(frame, config.trials, config.seed, threads=config.threads)
        estimates.append((frame.b, bounds))
        trial_rows.extend((frame.b, k, ratio) for k, ratio in enumerate(bounds.ratios))
    sweep = gap_sweep([b for b, _ in estimates], [bounds.gap for _, bounds in estimates])
    for b, gap in zip(sweep.b_values, sweep.gaps):
        result.require("frame_gap_positive", gap, 0.0, gap > 0.0, f"b={b}")
    for k in range(1, len(sweep.gaps)):
        result.require("frame_gap_decreasing", sweep.gaps[k], sweep.gaps[k - 1], sweep.gaps[k] < sweep.gaps[k - 1],
                       f"b={sweep.b_values[k]}")
    # gap <= C0 b with C0 fixed at the coarsest b. Midpoint cell centres make the
    # gap fall like b^2, so gap/b halves per halving of b instead of staying
    # within a factor 2 of constant.
    for b, gap, ok in zip(sweep.b_values, sweep.gaps, sweep.within_linear_bound()):
        result.require("frame_gap_below_linear_bound", gap, sweep.c0 * b, bool(ok), f"b={b} C0={sweep.c0:.4g}")
    rows = [(b, bounds.a_est, bounds.b_est, bounds.gap, bounds.c0_est, ratio, order)
            for (b, bounds), ratio, order in zip(estimates, sweep.gap_over_b, sweep.orders)]
    header = ["b", "A_est", "B_est", "gap", "C0_est", "gap_over_b", "order"]
    result.outputs.append(write_csv(config.out_dir / "frame_check.csv", header, rows))
    result.outputs.append(write_csv(config.out_dir / "frame_trials.csv", ["b", "trial", "ratio"], trial_rows))
    show_table("Frame bounds", header, rows)
    result.summary = {"C0_est": max(r[4] for r in rows), "rows": len(rows),
                      "linear_c0": sweep.c0, "gap_order": sweep.fitted_order}
    return result


# --- fields ---------------------------------------------------------------

def run_simulate(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.SIMULATE.value)
    spectrum = config.spectrum()
    sample = sample_field(spectrum, config.seed)
    out = config.out_dir
    result.outputs.append(write_coefficients(out / "coefficients.csv", sample.coeffs))
    shells = list(range(abs(spectrum.spin), spectrum.band_limit + 1))
    energies = shell_energy_ensemble(spectrum, shells, config.n_reps, config.seed)
    rows = []
    for column, l in enumerate(shells):
        per_rep = energies[:, column] / (2 * l + 1)
        se = float(np.std(per_rep, ddof=1)) / math.sqrt(config.n_reps) if config.n_reps > 1 else float("nan")
        rows.append((l, spectrum[l], float(np.mean(per_rep)), se))
    result.outputs.append(write_csv(out / "spectrum.csv", ["l", "C_l", "C_hat", "se"], rows))
    result.outputs.append(write_spectrum(out / "sample_spectrum.csv", empirical_spectrum(sample.coeffs)))
    frame = read_frame(frame_path) if frame_path else build_frame(config.a, config.b, spectrum.spin, spectrum.band_limit)
    coeffs = sample.coeffs.resized(frame.band_limit)
    wavelets = wavelet_coefficients(coeffs, frame, threads=config.threads)
    result.outputs.append(write_wavelets(out / "wavelets.csv", wavelets))
    energies_by_scale = {j: wavelets.energy(j) for j in wavelets.scales}
    statistics = scale_statistics(coeffs, frame, spectrum, energies=energies_by_scale)
    header = ["j", "gamma_hat", "gamma_tilde", "gamma_j", "mean", "var", "S_j"]
    stat_rows = [(r.j, r.gamma_hat, r.gamma_tilde, r.gamma_j, r.mean, r.variance, r.s_value) for r in statistics]
    result.outputs.append(write_csv(out / "statistics.csv", header, stat_rows))
    show_table("Scale statistics (replication 0)", header, stat_rows)
    result.summary = {"variance": spectrum.variance(), "n_reps": config.n_reps, "frame_elements": frame.n_elements}
    return result


# --- localization -----------------------------------------------------------

def run_localization(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.LOCALIZATION.value)
    t_list = config.t_list or [0.05, 0.025, 0.0125, 0.00625]
    filt = build_filter(config.a)
    x = SpherePoint.from_angles(1.0, 0.3)
    profiles = localization_study(t_list, config.spin, x, config.n_samples, filt)
    rows, table = [], []
    for p in profiles:
        rows.extend((p.t, d, d / p.t, amp) for d, amp in zip(p.distances, p.amplitudes))
        table.append((p.t, p.center, p.scaled_center, p.slope, p.fit_points))
        result.require("localization_slope", p.slope, LOCALIZATION_MAX_SLOPE,
                       bool(np.isfinite(p.slope) and p.slope <= LOCALIZATION_MAX_SLOPE), f"t={p.t}")
    scaled = np.array([p.scaled_center for p in profiles])
    spread = float(scaled.max() / scaled.min() - 1.0)
    result.require("localization_center_scaling", spread, LOCALIZATION_CENTER_TOL, spread <= LOCALIZATION_CENTER_TOL)
    result.outputs.append(write_csv(config.out_dir / "localization.csv", ["t", "distance", "d_over_t", "amplitude"], rows))
    header = ["t", "center", "center_t2", "slope", "fit_points"]
    result.outputs.append(write_csv(config.out_dir / "localization_summary.csv", header, table))
    show_table("Needlet localization", header, table)
    result.summary = {"center_spread": spread, "slopes": [p.slope for p in profiles]}
    return result


# --- statistics -------------------------------------------------------------

def _pair(distance: float) -> Tuple[SpherePoint, SpherePoint]:
    x = SpherePoint.from_angles(1.0, 0.3)
    y = SpherePoint.from_vector(great_circle_points(x, [distance], 0.7)[0])
    return x, y


def run_uncorrelation(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.UNCORRELATION.value)
    spectrum = config.spectrum()
    filt = build_filter(config.a)
    x, y = _pair(config.pair_distance)
    j_list = config.j_list or select_decorrelating_scales(spectrum, filt, x, y)
    rows = uncorrelation_experiment(spectrum, filt, sorted(j_list, reverse=True), [(x, y)], config.n_reps, config.seed)
    for prev, cur in zip(rows, rows[1:]):
        slack = 2.0 * max(prev.se, cur.se, 1.0 / math.sqrt(config.n_reps))
        result.require("uncorrelation_monotone", cur.corr, prev.corr + slack, cur.corr <= prev.corr + slack, f"j={cur.j}")
    result.require("uncorrelation_final", rows[-1].corr, UNCORRELATION_FINAL, rows[-1].corr < UNCORRELATION_FINAL)
    header = ["j", "pair_id", "d_over_t", "corr", "se", "theory"]
    table = [(r.j, r.pair_id, r.d_over_t, r.corr, r.se, r.theory) for r in rows]
    result.outputs.append(write_csv(config.out_dir / "uncorrelation.csv", header, table))
    show_table(f"Correlation at distance {config.pair_distance}", header, table)
    result.summary = {"j_list": [r.j for r in rows], "final_corr": rows[-1].corr}
    return result


def run_clt(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.CLT.value)
    spectrum = config.spectrum()
    filt = build_filter(config.a)
    if config.j_list:
        j_list = sorted(config.j_list, reverse=True)
    else:
        j0 = interior_scale(config.a, config.spin, config.L)
        j_list = [j0 + 3, j0 + 2, j0 + 1, j0]
    results = clt_experiment(spectrum, filt, j_list, config.n_reps, config.seed)
    limit = max(CLT_KS_LIMIT, CLT_KS_SCALE / math.sqrt(config.n_reps))
    for prev, cur in zip(results, results[1:]):
        result.require("clt_monotone", cur.ks, prev.ks + CLT_MONOTONE_TOL, cur.ks <= prev.ks + CLT_MONOTONE_TOL,
                       f"j={cur.j}")
    result.require("clt_ks", results[-1].ks, limit, results[-1].ks < limit, f"j={results[-1].j}")
    header = ["j", "KS", "n_reps", "p_value", "active_shells"]
    rows = [(r.j, r.ks, r.n_reps, r.p_value, r.active_shells) for r in results]
    result.outputs.append(write_csv(config.out_dir / "clt.csv", header, rows))
    show_table("Standardized Gamma-hat against N(0, 1)", header, rows)
    result.summary = {"j_list": j_list, "final_ks": results[-1].ks, "ks_limit": limit}
    return result


def run_sj_test(config: ExperimentConfig, frame_path: Optional[Path] = None) -> RunResult:
    result = RunResult(Subcommand.SJ_TEST.value)
    spectrum = config.spectrum()
    model = spectrum.scaled(config.model_scale)
    filt = build_filter(config.a)
    j_list = sorted(config.j_list, reverse=True) if config.j_list else [interior_scale(config.a, config.spin, config.L)]
    alpha = config.alpha_level
    rows = []
    for j in j_list:
        r = rejection_rate(spectrum, model, filt, j, config.n_reps, alpha, config.seed)
        rows.append((j, r.rate, r.standard_error, r.n_reps, r.alpha_level, config.model_scale))
        if config.model_scale == 1.0:
            band = max(REJECTION_BAND, 3.0 * math.sqrt(alpha * (1.0 - alpha) / config.n_reps))
            result.require("sj_calibration", r.rate, alpha + band, abs(r.rate - alpha) <= band, f"j={j}")
    header = ["j", "rate", "se", "n_reps", "alpha_level", "model_scale"]
    result.outputs.append(write_csv(config.out_dir / "sj_test.csv", header, rows))
    show_table("S_j rejection rates", header, rows)
    result.summary = {"j_list": j_list, "rates": [row[1] for row in rows]}
    return result


RUNNERS: Dict[str, Callable[[ExperimentConfig, Optional[Path]], RunResult]] = {
    Subcommand.HARMONICS_CHECK.value: run_harmonics_check,
    Subcommand.FRAME_BUILD.value: run_frame_build,
    Subcommand.FRAME_CHECK.value: run_frame_check,
    Subcommand.SIMULATE.value: run_simulate,
    Subcommand.LOCALIZATION.value: run_localization,
    Subcommand.UNCORRELATION.value: run_uncorrelation,
    Subcommand.CLT.value: run_clt,
    Subcommand.SJ_TEST.value: run_sj_test,
}


def run(subcommand: str, config: ExperimentConfig, check: bool = True,
        frame_path: Optional[Path] = None, timestamp: bool = False) -> RunResult:
    """
    Run one subcommand and write its manifest.

    Args:
        subcommand: One of the Subcommand values
        config: Validated experiment configuration
        check: Raise ThresholdViolation on the first failed acceptance check
        frame_path: frame.json to read (frame-check, simulate) or write (frame-build)
        timestamp: Record the creation time in the manifest, which then differs between reruns

    Returns:
        RunResult with the artifacts written and any failed checks
    """
    if subcommand not in RUNNERS:
        raise ConfigError(f"unknown subcommand '{subcommand}'")
    show_run_header(subcommand, [f"{k} = {v}" for k, v in config.to_dict().items() if v is not None])
    logger.info(f"running {subcommand} with seed {config.seed}")
    result = RUNNERS[subcommand](config, frame_path)
    summary = dict(result.summary, failures=[str(f) for f in result.failures])
    result.outputs.append(write_manifest(config.out_dir, subcommand, config.to_dict(), result.outputs, summary,
                                         created=datetime.now().isoformat() if timestamp else None))
    show_outputs(result.outputs)
    show_failures([str(f) for f in result.failures])
    if check and result.failures:
        raise result.failures[0]
    return result
