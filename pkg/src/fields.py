"""
Gaussian isotropic involutive spin random fields
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import ks_2samp

from .console import logger
from .constants import ISOTROPY_Z_LIMIT
from .errors import InvalidExponent
from .geometry import Rotation, SpherePoint, random_points
from .harmonics import SpinCoefficients
from .wigner import rotate_coefficients, sylm_chart_values


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """Angular power spectrum C_l of a spin-s field, l = 0..L, zero below |s|"""
    spin: int
    values: np.ndarray
    model: str = "tabulated"
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if len(values) <= abs(self.spin):
            raise ValueError(f"spectrum must extend to l >= |s| = {abs(self.spin)}")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValueError("spectrum values must be finite and nonnegative")
        values[: abs(self.spin)] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def band_limit(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, l: int) -> float:
        return float(self.values[l])

    def variance(self) -> float:
        """Var G = sum_l C_l (2l+1)"""
        ls = np.arange(len(self.values))
        return float(np.sum(self.values * (2 * ls + 1)))

    def scaled(self, factor: float) -> "PowerSpectrum":
        params = dict(self.params, scale=factor * self.params.get("scale", 1.0))
        return PowerSpectrum(self.spin, self.values * factor, self.model, params)

    def truncated(self, L: int) -> "PowerSpectrum":
        values = np.zeros(L + 1)
        keep = min(L, self.band_limit)
        values[:keep + 1] = self.values[:keep + 1]
        return PowerSpectrum(self.spin, values, self.model, dict(self.params))


def power_law_spectrum(s: int, L: int, alpha: float, c: float = 1.0) -> PowerSpectrum:
    """C_l = c l^-alpha for l >= max(|s|, 1)"""
    if alpha <= 2.0:
        warnings.warn(
            f"alpha = {alpha} <= 2: sampling works, the scale statistics results do not apply",
            InvalidExponent,
            stacklevel=2,
        )
    if c < 0:
        raise ValueError(f"power-law amplitude c must be nonnegative, got {c}")
    ls = np.arange(L + 1, dtype=float)
    start = max(abs(s), 1)
    values = np.zeros(L + 1)
    values[start:] = c * ls[start:] ** (-float(alpha))
    return PowerSpectrum(s, values, "power_law", {"alpha": float(alpha), "c": float(c)})


def tabulated_spectrum(s: int, values) -> PowerSpectrum:
    """
    Spectrum from explicit values.

    Args:
        s: spin weight
        values: sequence indexed by l, or a mapping {l: C_l}
    """
    if isinstance(values, dict):
        L = max(int(l) for l in values)
        table = np.zeros(L + 1)
        for l, value in values.items():
            table[int(l)] = value
        values = table
    return PowerSpectrum(s, values, "tabulated", {})


@dataclass(frozen=True, eq=False)
class FieldSample:
    """One realization with the stream it came from"""
    coeffs: SpinCoefficients
    seed: int
    replication: int


def _shell_stream(seed: int, l: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(l)])))


def shell_draws(spec: PowerSpectrum, l: int, n_reps: int, seed: int) -> np.ndarray:
    """
    Coefficients A_{l,-l..l} for replications 0..n_reps-1, shape (n_reps, 2l+1).

    Each replication consumes 2l+1 standard normals laid out as
    [m=0, Re m=1..l, Im m=1..l]; the stream is keyed by (seed, l) only.
    """
    z = _shell_stream(seed, l).standard_normal((n_reps, 2 * l + 1))
    c = spec.values[l]
    shell = np.zeros((n_reps, 2 * l + 1), dtype=complex)
    shell[:, l] = math.sqrt(c) * z[:, 0]
    if l > 0:
        positive = math.sqrt(c / 2.0) * (z[:, 1:l + 1] + 1j * z[:, l + 1:])
        shell[:, l + 1:] = positive
        shell[:, :l] = np.conj(positive[:, ::-1])
    return shell


def iter_shells(spec: PowerSpectrum, n_reps: int, seed: int,
                shells: Optional[Iterable[int]] = None) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (l, shell draws) for the requested shells, each drawn from its own stream"""
    shells = range(abs(spec.spin), spec.band_limit + 1) if shells is None else shells
    for l in shells:
        if l < abs(spec.spin) or l > spec.band_limit:
            raise ValueError(f"shell l={l} outside {abs(spec.spin)}..{spec.band_limit}")
        yield l, shell_draws(spec, l, n_reps, seed)


def sample_ensemble(spec: PowerSpectrum, n_reps: int, seed: int) -> SpinCoefficients:
    """n_reps independent fields as a batch of coefficients (n_reps, L+1, 2L+1)"""
    L = spec.band_limit
    data = np.zeros((n_reps, L + 1, 2 * L + 1), dtype=complex)
    for l, shell in iter_shells(spec, n_reps, seed):
        data[:, l, L - l:L + l + 1] = shell
    logger.debug(f"sampled {n_reps} spin-{spec.spin} fields up to L={L} (seed {seed})")
    return SpinCoefficients(spec.spin, L, data)


def sample_field(spec: PowerSpectrum, seed: int, replication: int = 0) -> FieldSample:
    """Replication r of the ensemble drawn with this seed"""
    ensemble = sample_ensemble(spec, replication + 1, seed)
    return FieldSample(ensemble.select(replication), int(seed), int(replication))


def shell_energy_ensemble(spec: PowerSpectrum, shells: Sequence[int], n_reps: int, seed: int) -> np.ndarray:
    """sum_m |A_lm|^2 per replication and shell, shape (n_reps, len(shells)), without storing coefficients"""
    out = np.zeros((n_reps, len(shells)))
    for column, (_, shell) in enumerate(iter_shells(spec, n_reps, seed, shells)):
        out[:, column] = np.sum(shell.real ** 2 + shell.imag ** 2, axis=1)
    return out


def empirical_spectrum(coeffs: SpinCoefficients) -> PowerSpectrum:
    """C-hat_l = sum_m |A_lm|^2 / (2l+1), averaged over any batch axes"""
    L = coeffs.band_limit
    ls = np.arange(L + 1)
    power = np.sum(np.abs(coeffs.data) ** 2, axis=-1) / (2 * ls + 1)
    if power.ndim > 1:
        power = power.reshape(-1, L + 1).mean(axis=0)
    return PowerSpectrum(coeffs.spin, power, "empirical", {})


# --- isotropy ---------------------------------------------------------------

Sampler = Callable[[PowerSpectrum, int, int], SpinCoefficients]


@dataclass(frozen=True, eq=False)
class IsotropyReport:
    """Largest standardized second-moment discrepancy across rotations and point pairs"""
    max_z: float
    z_limit: float
    per_rotation: List[float]
    ks_statistic: float
    ks_pvalue: float
    n_reps: int

    @property
    def flagged(self) -> bool:
        return self.max_z > self.z_limit


def _max_z(samples: np.ndarray, expected: complex) -> float:
    n = len(samples)
    worst = 0.0
    for part, target in ((samples.real, expected.real), (samples.imag, expected.imag)):
        se = float(np.std(part, ddof=1)) / math.sqrt(n)
        if se > 0:
            worst = max(worst, abs(float(np.mean(part)) - target) / se)
    return worst


def isotropy_diagnostic(spec: PowerSpectrum, n_reps: int, rotations: Sequence[Rotation], seed: int,
                        points: Optional[Sequence[SpherePoint]] = None, sampler: Optional[Sampler] = None,
                        z_limit: float = ISOTROPY_Z_LIMIT) -> IsotropyReport:
    """
    Compare second moments of rotated fields with the isotropic model.

    For each rotation R the sampled coefficients are rotated by R^-1 and the
    chart-I values at fixed points give products G(x) conj G(y) and G(x) G(y);
    their Monte Carlo means are standardized against the covariance
    sum C_l sum_m Y_lm(x) conj Y_lm(y) and the pseudo-covariance
    sum C_l sum_m Y_lm(x) Y_l,-m(y).
    """
    sampler = sampler or sample_ensemble
    if points is None:
        points = random_points(np.random.default_rng([int(seed), 1]), 4)
    s, L = spec.spin, spec.band_limit
    vectors = np.stack([p.v for p in points])
    harmonics = sylm_chart_values(s, L, vectors, Rotation.identity())
    weighted = harmonics * spec.values[:, None, None]
    covariance = np.einsum("lmx,lmy->xy", weighted, np.conj(harmonics))
    # E[A_lm A_l,-m] = C_l follows from A_l,-m = conj A_lm, with no conjugation identity of sY_lm
    pseudo = np.einsum("lmx,lmy->xy", weighted, harmonics[:, ::-1, :])
    ensemble = sampler(spec, n_reps, seed)
    per_rotation = []
    first_values = None
    for R in rotations:
        rotated = rotate_coefficients(ensemble, R.inverse())
        values = np.einsum("nlm,lmx->nx", rotated.data, harmonics)
        if first_values is None:
            first_values = values
        worst = 0.0
        for i in range(len(points)):
            for k in range(i, len(points)):
                worst = max(worst, _max_z(values[:, i] * np.conj(values[:, k]), covariance[i, k]))
                worst = max(worst, _max_z(values[:, i] * values[:, k], pseudo[i, k]))
        per_rotation.append(worst)
    ks = ks_2samp(first_values[:, 0].real, -first_values[:, 0].real)
    report = IsotropyReport(max(per_rotation), z_limit, per_rotation, float(ks.statistic), float(ks.pvalue), n_reps)
    logger.debug(f"isotropy diagnostic: max z = {report.max_z:.3f} over {len(rotations)} rotations")
    return report
