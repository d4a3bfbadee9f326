"""
Quadratic needlet statistics, their moments, the S_j test and Monte Carlo experiments
"""

import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import kstest, norm

from .console import logger
from .constants import DEFAULT_ALPHA_LEVEL
from .errors import DegenerateModel, ScaleMissing
from .fields import PowerSpectrum, iter_shells, sample_ensemble, shell_energy_ensemble
from .filters import FilterSpec
from .frame import FrameBounds, NeedletFrame, WaveletCoefficients, frame_bound_estimate, frame_energy, scale_operator_norm
from .geometry import Rotation, SpherePoint, geodesic_distance
from .harmonics import SpinCoefficients, eigenvalues
from .wigner import sylm_chart_values


def scale_for_degree(a: float, s: int, l: int) -> int:
    """The scale j whose band is centred at shell l, i.e. a^{2j} lambda_ls closest to 1"""
    lam = (l - abs(s)) * (l + abs(s) + 1)
    if lam <= 0:
        raise ValueError(f"shell l={l} is the null shell for spin {s}")
    return int(round(-math.log(lam) / (2.0 * math.log(a))))


def covered_shells(s: int, a: float, j: int, L: int) -> np.ndarray:
    """Shells l <= L with a^-2 <= a^{2j} lambda_ls <= a^2"""
    ls = np.arange(L + 1)
    u = a ** (2 * j) * eigenvalues(s, L)
    return ls[(ls >= abs(s)) & (u >= a ** -2) & (u <= a ** 2)]


def interior_scale(a: float, s: int, L: int, fraction: float = 0.75) -> int:
    """
    Scale centred near l = fraction * L whose whole band lies below L.

    Steps coarser from the centred scale until a^{2j} lambda_{L+1,s} >= a^2:
    no shell above the band limit carries filter weight.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    j = scale_for_degree(a, s, max(abs(s) + 1, int(fraction * L)))
    next_lam = (L + 1 - abs(s)) * (L + abs(s) + 2)
    while a ** (2 * j) * next_lam < a ** 2:
        j += 1
    return j


def gamma_hat(coeffs: SpinCoefficients, filt: FilterSpec, j: int) -> np.ndarray:
    """sum_{l,m} f^2(a^{2j} lambda_ls) |A_lm|^2, per field of the batch"""
    weights = filt.multipliers(coeffs.spin, coeffs.band_limit, j) ** 2
    return np.sum(np.abs(coeffs.data) ** 2 * weights[:, None], axis=(-2, -1))


def gamma_tilde(source: Union[WaveletCoefficients, Mapping[int, np.ndarray]], j: int) -> np.ndarray:
    """sum_k |beta_jk|^2 from wavelet coefficients or precomputed frame energies"""
    if isinstance(source, WaveletCoefficients):
        return source.energy(j)
    if j not in source:
        raise ScaleMissing(f"scale j={j} is outside the frame range")
    return np.asarray(source[j])


def gamma_j(spectrum: PowerSpectrum, a: float, j: int) -> float:
    """sum of C_l (2l+1) over the shells covered by scale j"""
    ls = covered_shells(spectrum.spin, a, j, spectrum.band_limit)
    return float(np.sum(spectrum.values[ls] * (2 * ls + 1)))


def gamma_hat_moments(spectrum: PowerSpectrum, filt: FilterSpec, j: int) -> Tuple[float, float]:
    """Mean sum f^2 C_l (2l+1) and variance sum 2 f^4 C_l^2 (2l+1) under the Gaussian model"""
    f2 = filt.multipliers(spectrum.spin, spectrum.band_limit, j) ** 2
    ls = np.arange(spectrum.band_limit + 1)
    c = spectrum.values
    mean = float(np.sum(f2 * c * (2 * ls + 1)))
    variance = float(np.sum(2.0 * f2 ** 2 * c ** 2 * (2 * ls + 1)))
    return mean, variance


@dataclass(frozen=True)
class TestResult:
    """Two-sided S_j test outcome"""
    statistic: float
    threshold: float
    reject: bool
    alpha_level: float
    p_value: float


def s_statistic(gamma_hat_value: float, moments: Tuple[float, float],
                alpha_level: float = DEFAULT_ALPHA_LEVEL) -> TestResult:
    """S_j = (Gamma-hat - mean) / sqrt(variance), rejected when |S_j| >= z_{alpha/2}"""
    mean, variance = moments
    if variance <= 0.0:
        raise DegenerateModel("model variance of Gamma-hat is zero at this scale")
    statistic = (float(gamma_hat_value) - mean) / math.sqrt(variance)
    threshold = float(norm.ppf(1.0 - alpha_level / 2.0))
    p_value = float(2.0 * norm.sf(abs(statistic)))
    return TestResult(statistic, threshold, abs(statistic) >= threshold, alpha_level, p_value)


@dataclass(frozen=True, eq=False)
class ScaleStatistics:
    """Per-scale statistics of one field"""
    j: int
    gamma_hat: float
    gamma_tilde: float
    gamma_j: float
    mean: float
    variance: float
    s_value: float


def scale_statistics(coeffs: SpinCoefficients, frame: NeedletFrame, spectrum: PowerSpectrum,
                     energies: Optional[Mapping[int, np.ndarray]] = None, threads: int = 1) -> List[ScaleStatistics]:
    """Gamma-hat, Gamma-tilde, gamma_j, model moments and S_j for every frame scale"""
    if coeffs.batch_shape:
        raise ValueError("scale statistics take a single field")
    energies = energies if energies is not None else frame_energy(coeffs, frame, threads=threads)
    model = spectrum.truncated(frame.band_limit)
    rows = []
    for j in frame.j_range:
        mean, variance = gamma_hat_moments(model, frame.filter, j)
        value = float(gamma_hat(coeffs, frame.filter, j))
        s_value = (value - mean) / math.sqrt(variance) if variance > 0 else float("nan")
        rows.append(ScaleStatistics(j, value, float(gamma_tilde(energies, j)),
                                    gamma_j(model, frame.a, j), mean, variance, s_value))
    return rows


# --- Monte Carlo experiments ----------------------------------------------

def _scale_gamma_hat(spectrum: PowerSpectrum, filt: FilterSpec, j: int, n_reps: int, seed: int) -> np.ndarray:
    """Gamma-hat at scale j for n_reps fields, drawing only the shells the filter touches"""
    f2 = filt.multipliers(spectrum.spin, spectrum.band_limit, j) ** 2
    shells = [int(l) for l in np.nonzero(f2 > 0.0)[0]]
    if not shells:
        return np.zeros(n_reps)
    energies = shell_energy_ensemble(spectrum, shells, n_reps, seed)
    return energies @ f2[shells]


@dataclass(frozen=True, eq=False)
class CltResult:
    """Standardized Gamma-hat samples at one scale and their KS distance to N(0, 1)"""
    j: int
    ks: float
    p_value: float
    n_reps: int
    active_shells: int
    standardized: np.ndarray


def clt_experiment(spectrum: PowerSpectrum, filt: FilterSpec, j_list: Sequence[int], n_reps: int,
                   seed: int) -> List[CltResult]:
    """Simulate Gamma-hat per scale, standardize with the closed-form moments and measure KS distance"""
    results = []
    for j in j_list:
        samples = _scale_gamma_hat(spectrum, filt, j, n_reps, seed)
        mean, variance = gamma_hat_moments(spectrum, filt, j)
        if variance <= 0.0:
            raise DegenerateModel(f"model variance of Gamma-hat is zero at j={j}")
        z = (samples - mean) / math.sqrt(variance)
        test = kstest(z, "norm")
        active = int(np.count_nonzero(filt.multipliers(spectrum.spin, spectrum.band_limit, j) > 0.0))
        logger.info(f"clt j={j}: KS={test.statistic:.4f} over {n_reps} reps, {active} shells")
        results.append(CltResult(j, float(test.statistic), float(test.pvalue), n_reps, active, z))
    return results


@dataclass(frozen=True)
class RejectionResult:
    """Monte Carlo rejection rate of the S_j test"""
    j: int
    rate: float
    standard_error: float
    n_reps: int
    alpha_level: float


def rejection_rate(spectrum: PowerSpectrum, model: PowerSpectrum, filt: FilterSpec, j: int, n_reps: int,
                   alpha_level: float = DEFAULT_ALPHA_LEVEL, seed: int = 0) -> RejectionResult:
    """Fraction of fields drawn from spectrum whose S_j against model is rejected"""
    samples = _scale_gamma_hat(spectrum, filt, j, n_reps, seed)
    mean, variance = gamma_hat_moments(model, filt, j)
    if variance <= 0.0:
        raise DegenerateModel(f"model variance of Gamma-hat is zero at j={j}")
    threshold = norm.ppf(1.0 - alpha_level / 2.0)
    rate = float(np.mean(np.abs(samples - mean) / math.sqrt(variance) >= threshold))
    se = math.sqrt(max(rate * (1.0 - rate), 1e-12) / n_reps)
    logger.info(f"sj-test j={j}: rejection rate {rate:.4f} (+/- {se:.4f}) at alpha={alpha_level}")
    return RejectionResult(j, rate, se, n_reps, alpha_level)


@dataclass(frozen=True)
class EgamRow:
    """Frame-approximation check at one scale"""
    j: int
    mean_abs_difference: float
    bound: float
    epsilon: float
    gamma_j: float
    max_realization_excess: float

    @property
    def holds(self) -> bool:
        return self.mean_abs_difference <= self.bound and self.max_realization_excess <= 0.0


def egam_check(frame: NeedletFrame, spectrum: PowerSpectrum, n_reps: int, seed: int,
               bounds: Optional[FrameBounds] = None, threads: int = 1) -> List[EgamRow]:
    """
    E|Gamma-hat_j - Gamma-tilde_j| against epsilon * gamma_j with epsilon = C0 * b.

    Each realization is also checked against ||Q_j - S_j|| ||G_j||^2, where
    G_j keeps the shells scale j acts on.
    """
    bounds = bounds or frame_bound_estimate(frame, 4, seed, per_scale=True, threads=threads)
    epsilon = bounds.c0_est * frame.b
    model = spectrum.truncated(frame.band_limit)
    fields = sample_ensemble(model, n_reps, seed)
    energies = frame_energy(fields, frame, threads=threads)
    rows = []
    for j in frame.j_range:
        hat = gamma_hat(fields, frame.filter, j)
        difference = np.abs(hat - energies[j])
        lo, hi = frame.shell_range(j)
        local_energy = np.sum(np.abs(fields.data[:, lo:hi + 1]) ** 2, axis=(-2, -1))
        local_norm = bounds.scale_norms.get(j)
        if local_norm is None:
            local_norm = scale_operator_norm(frame, j, seed, threads)
        excess = float(np.max(difference - local_norm * local_energy * (1.0 + 1e-6) - 1e-12))
        g = gamma_j(model, frame.a, j)
        rows.append(EgamRow(j, float(np.mean(difference)), epsilon * g, epsilon, g, excess))
        logger.debug(f"egam j={j}: E|diff|={rows[-1].mean_abs_difference:.4g} bound={rows[-1].bound:.4g}")
    return rows


# --- uncorrelation ----------------------------------------------------------

def _filtered_values(spectrum: PowerSpectrum, filt: FilterSpec, j: int, points: np.ndarray,
                     charts: Sequence[Rotation]) -> Tuple[np.ndarray, np.ndarray]:
    """f(a^{2j} lambda) sY_lmR(x) per point, and the band limit used"""
    weights = filt.multipliers(spectrum.spin, spectrum.band_limit, j)
    L = int(np.nonzero(weights)[0][-1]) if np.any(weights) else abs(spectrum.spin)
    values = np.stack([sylm_chart_values(spectrum.spin, L, p[None, :], R)[:, :, 0] for p, R in zip(points, charts)])
    return values * weights[:L + 1][None, :, None], L


def theoretical_correlation(spectrum: PowerSpectrum, filt: FilterSpec, j: int, x: SpherePoint, y: SpherePoint,
                            R1: Optional[Rotation] = None, R2: Optional[Rotation] = None) -> complex:
    """Exact Cor(beta_x, beta_y) = K(x, y) / sqrt(K(x, x) K(y, y)) with K weighted by f^2 C_l"""
    identity = Rotation.identity()
    charts = (R1 or identity, R2 or identity)
    values, L = _filtered_values(spectrum, filt, j, np.stack([x.v, y.v]), charts)
    c = spectrum.values[:L + 1][:, None]
    kxy = np.sum(c * values[0] * np.conj(values[1]))
    kxx = np.sum(c * np.abs(values[0]) ** 2)
    kyy = np.sum(c * np.abs(values[1]) ** 2)
    if kxx <= 0 or kyy <= 0:
        return complex("nan")
    return complex(kxy / math.sqrt(kxx * kyy))


@dataclass(frozen=True)
class CorrelationRow:
    """Empirical and exact correlation of filtered values at a pair of points"""
    j: int
    pair_id: int
    distance: float
    d_over_t: float
    corr: float
    se: float
    theory: float


def uncorrelation_experiment(spectrum: PowerSpectrum, filt: FilterSpec, j_list: Sequence[int],
                             point_pairs: Sequence[Tuple[SpherePoint, SpherePoint]], n_reps: int, seed: int,
                             charts: Optional[Sequence[Tuple[Rotation, Rotation]]] = None) -> List[CorrelationRow]:
    """
    |Cor(beta_{t,x}, beta_{t,y})| from n_reps fields at t = a^j.

    beta values are accumulated shell by shell from the keyed streams, so only
    the shells each scale touches are drawn.
    """
    identity = Rotation.identity()
    charts = charts or [(identity, identity)] * len(point_pairs)
    rows = []
    for j in j_list:
        t = filt.a ** j
        for pair_id, ((x, y), (R1, R2)) in enumerate(zip(point_pairs, charts)):
            values, L = _filtered_values(spectrum, filt, j, np.stack([x.v, y.v]), (R1, R2))
            beta = np.zeros((2, n_reps), dtype=complex)
            shells = [l for l in range(abs(spectrum.spin), L + 1) if np.any(values[:, l] != 0)]
            for l, shell in iter_shells(spectrum, n_reps, seed, shells):
                beta += (shell @ values[:, l, L - l:L + l + 1].T).T
            norm_x = np.sum(np.abs(beta[0]) ** 2)
            norm_y = np.sum(np.abs(beta[1]) ** 2)
            rho = np.sum(beta[0] * np.conj(beta[1])) / math.sqrt(norm_x * norm_y)
            corr = float(abs(rho))
            se = (1.0 - corr ** 2) / math.sqrt(n_reps)
            theory = abs(theoretical_correlation(spectrum, filt, j, x, y, R1, R2))
            d = geodesic_distance(x, y)
            rows.append(CorrelationRow(j, pair_id, d, d / t, corr, se, theory))
            logger.debug(f"uncorrelation j={j} pair={pair_id}: |cor|={corr:.4f} (theory {theory:.4f})")
    return rows


def select_decorrelating_scales(spectrum: PowerSpectrum, filt: FilterSpec, x: SpherePoint, y: SpherePoint,
                                n_scales: int = 4, threshold: float = 0.05, margin: float = 1.5) -> List[int]:
    """
    Descending scales along which the exact |Cor| decreases and ends below threshold.

    The exact correlation oscillates with sidelobes as t shrinks, so the
    finest scale is the coarsest one below threshold and earlier scales are
    picked going coarser whenever |Cor| grows by at least the margin factor.
    """
    s, L = spectrum.spin, spectrum.band_limit
    next_lam = (L + 1 - abs(s)) * (L + abs(s) + 2)
    # only scales whose whole band fits below the spectrum band limit
    candidates = [j for j in filt.scales_for(s, L) if filt.a ** (2 * j) * next_lam >= filt.support[1]][::-1]
    if not candidates:
        raise ValueError("spectrum band limit is too low for any complete scale")
    exact = {j: abs(theoretical_correlation(spectrum, filt, j, x, y)) for j in candidates}
    finest = next((j for j in candidates if exact[j] < threshold), None)
    if finest is None:
        raise ValueError("no scale within the spectrum band limit reaches the correlation threshold")
    for j in candidates:
        if j < finest:
            logger.debug(f"decorrelating scales: j={j} |cor|={exact[j]:.4f} rejected, finer than j={finest}")
    logger.debug(f"decorrelating scales: j={finest} |cor|={exact[finest]:.4f} chosen as finest (< {threshold})")
    chosen = [finest]
    for j in range(finest + 1, candidates[0] + 1):
        if exact[j] >= 1.0 - 1e-9:
            logger.debug(f"decorrelating scales: j={j} |cor|={exact[j]:.4f} rejected, fully correlated")
        elif exact[j] >= margin * exact[chosen[0]]:
            chosen.insert(0, j)
            logger.debug(f"decorrelating scales: j={j} |cor|={exact[j]:.4f} chosen")
        else:
            logger.debug(f"decorrelating scales: j={j} |cor|={exact[j]:.4f} rejected, "
                         f"below {margin} x {exact[chosen[0]]:.4f}")
        if len(chosen) == n_scales:
            break
    if len(chosen) < n_scales:
        raise ValueError(f"only {len(chosen)} decorrelating scales available below the band limit")
    return chosen
