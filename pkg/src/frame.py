"""
Spin needlet frames: wavelet coefficients, frame operators, bounds, kernels and localization
"""

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .console import logger
from .constants import (
    DENSE_OPERATOR_LIMIT,
    EIGSH_MAXITER,
    EIGSH_TOL,
    LOCALIZATION_FAR_ZONE,
    LOCALIZATION_FLOOR,
    RING_CHUNK_BYTES,
)
from .errors import BandLimitExceeded, ScaleMissing
from .filters import FilterSpec, build_filter
from .geometry import (
    POLAR_CHART,
    Partition,
    Rotation,
    SpherePoint,
    build_partition,
    great_circle_points,
    partition_constants,
    partition_from_dict,
    partition_to_dict,
    reference_angles,
)
from .harmonics import SpinCoefficients, _profile_rows, eigenvalues, valid_mask
from .wigner import sylm_chart_values


@dataclass(frozen=True, eq=False)
class NeedletFrame:
    """
    Frame elements phi_{j,k} = sqrt(mu_{j,k}) w_{a^j, x_{j,k}, R_{j,k}} for every
    scale j touching the shells |s| < l <= L.
    """
    filter: FilterSpec
    spin: int
    band_limit: int
    b: float
    j_range: Tuple[int, ...]
    partitions: Dict[int, Partition]
    c0: float
    delta0: float
    bound_constant: Optional[float] = None

    @property
    def a(self) -> float:
        return self.filter.a

    @property
    def n_elements(self) -> int:
        return sum(p.n_cells for p in self.partitions.values())

    def partition(self, j: int) -> Partition:
        if j not in self.partitions:
            raise ScaleMissing(f"scale j={j} is not part of this frame (range {self.j_range})")
        return self.partitions[j]

    def multipliers(self, j: int) -> np.ndarray:
        self.partition(j)
        return self.filter.multipliers(self.spin, self.band_limit, j)

    def shell_range(self, j: int) -> Tuple[int, int]:
        return self.filter.shell_range(self.spin, self.band_limit, j)

    def coverage(self) -> np.ndarray:
        """Number of scales with a nonzero multiplier, per shell l = 0..L"""
        counts = np.zeros(self.band_limit + 1, dtype=int)
        for j in self.j_range:
            counts += self.multipliers(j) > 0.0
        return counts

    def with_bound_constant(self, value: float) -> "NeedletFrame":
        return replace(self, bound_constant=float(value))


def build_frame(a: float, b: float, s: int, L: int, filt: Optional[FilterSpec] = None) -> NeedletFrame:
    """Scales, partitions and metadata of the needlet frame for spin s up to band limit L"""
    if L < abs(s) + 1:
        raise ValueError(f"band limit {L} must be at least |s| + 1 = {abs(s) + 1}")
    filt = filt or build_filter(a)
    if abs(filt.a - a) > 1e-15 * a:
        raise ValueError(f"filter dilation base {filt.a} differs from a = {a}")
    j_range = filt.scales_for(s, L)
    partitions = {j: build_partition(j, a, b) for j in j_range}
    c0, delta0 = partition_constants()
    frame = NeedletFrame(filt, int(s), int(L), float(b), tuple(j_range), partitions, c0, delta0)
    logger.info(f"frame s={s} L={L} b={b}: scales {j_range[0]}..{j_range[-1]}, {frame.n_elements} elements")
    return frame


# --- ring passes ----------------------------------------------------------

@dataclass(frozen=True)
class _ScalePlan:
    lo: int
    hi: int
    ms: np.ndarray
    weights: np.ndarray


def _plan(frame: NeedletFrame, j: int) -> Optional[_ScalePlan]:
    lo, hi = frame.shell_range(j)
    if hi < lo:
        return None
    w = frame.multipliers(j)[lo:hi + 1]
    return _ScalePlan(lo, hi, np.arange(-hi, hi + 1), w)


def _ring_blocks(data: np.ndarray, frame: NeedletFrame, j: int, plan: _ScalePlan) -> Iterator[Tuple[slice, np.ndarray, np.ndarray]]:
    """
    Per-ring Fourier sums of the filtered field at scale j.

    Yields (ring slice, B, y) with B[m, i, r] = sum_l f_j(l) a_lm sy_lm(theta_r)
    for batch row i and y[m, l, r] the profiles used.
    """
    L = frame.band_limit
    hi = plan.hi
    M = len(plan.ms)
    batch = data.shape[0]
    filtered = data[:, plan.lo:hi + 1, L - hi:L + hi + 1] * plan.weights[:, None]
    by_m = np.ascontiguousarray(filtered.transpose(2, 0, 1))
    part = frame.partition(j)
    per_ring = (hi + 1) * M * 8 + 4 * M * batch * 16
    chunk = max(1, RING_CHUNK_BYTES // per_ring)
    for start in range(0, part.n_bands, chunk):
        rings = slice(start, min(start + chunk, part.n_bands))
        y = _profile_rows(frame.spin, plan.ms, hi, part.band_theta[rings])[plan.lo:]
        ym = np.ascontiguousarray(y.transpose(1, 0, 2))
        sums = by_m.real @ ym + 1j * (by_m.imag @ ym)
        yield rings, sums, ym


def _fold(sums: np.ndarray, ms: np.ndarray, n: int, phi0: float) -> np.ndarray:
    """Alias the m-sums of one ring onto the n cell longitudes: (n, batch)"""
    folded = np.zeros((n, sums.shape[1]), dtype=complex)
    np.add.at(folded, ms % n, sums * np.exp(1j * ms * phi0)[:, None])
    return folded


def _scale_pass(data: np.ndarray, frame: NeedletFrame, j: int, apply_operator: bool) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Energy sum_k |beta_jk|^2 per batch row and, optionally, S_j applied to the batch"""
    batch = data.shape[0]
    energy = np.zeros(batch)
    out = np.zeros_like(data) if apply_operator else None
    plan = _plan(frame, j)
    if plan is None:
        return energy, out
    part = frame.partition(j)
    L, hi, ms = frame.band_limit, plan.hi, plan.ms
    M = len(ms)
    acc = np.zeros((M, batch, hi - plan.lo + 1), dtype=complex) if apply_operator else None
    for rings, sums, ym in _ring_blocks(data, frame, j, plan):
        n = part.cells_per_band[rings]
        phi0 = part.band_phi_offset[rings]
        scale = part.band_areas[rings] * n
        ring_energy = np.sum(sums.real ** 2 + sums.imag ** 2, axis=0)
        weighted = sums * scale if apply_operator else None
        for r in np.nonzero(n < M)[0]:
            folded = _fold(sums[:, :, r], ms, int(n[r]), float(phi0[r]))
            ring_energy[:, r] = np.sum(np.abs(folded) ** 2, axis=0)
            if apply_operator:
                weighted[:, :, r] = scale[r] * np.exp(-1j * ms * phi0[r])[:, None] * folded[ms % n[r]]
        energy += ring_energy @ scale
        if apply_operator:
            ymt = ym.transpose(0, 2, 1)
            acc += weighted.real @ ymt + 1j * (weighted.imag @ ymt)
    if apply_operator:
        out[:, plan.lo:hi + 1, L - hi:L + hi + 1] = acc.transpose(1, 2, 0) * plan.weights[:, None]
    return energy, out


def _flat(coeffs: SpinCoefficients, frame: NeedletFrame) -> np.ndarray:
    if coeffs.spin != frame.spin or coeffs.band_limit != frame.band_limit:
        raise ValueError("coefficients and frame differ in spin or band limit")
    return coeffs.data.reshape((-1,) + coeffs.data.shape[-2:])


def _run_scales(data: np.ndarray, frame: NeedletFrame, scales: Sequence[int], apply_operator: bool, threads: int):
    for j in scales:
        frame.partition(j)
    return Parallel(n_jobs=threads, prefer="threads")(
        delayed(_scale_pass)(data, frame, j, apply_operator) for j in scales
    )


def frame_energy(coeffs: SpinCoefficients, frame: NeedletFrame, scales: Optional[Sequence[int]] = None,
                 threads: int = 1) -> Dict[int, np.ndarray]:
    """Gamma-tilde per scale: sum_k |beta_jk|^2, shaped like the coefficient batch"""
    scales = tuple(frame.j_range if scales is None else scales)
    data = _flat(coeffs, frame)
    results = _run_scales(data, frame, scales, False, threads)
    return {j: energy.reshape(coeffs.batch_shape) for j, (energy, _) in zip(scales, results)}


def apply_S(coeffs: SpinCoefficients, frame: NeedletFrame, scales: Optional[Sequence[int]] = None,
            threads: int = 1) -> SpinCoefficients:
    """S F = sum_{j,k} <F, phi_jk> phi_jk accumulated in coefficient space"""
    scales = tuple(frame.j_range if scales is None else scales)
    data = _flat(coeffs, frame)
    total = np.zeros_like(data)
    # summed in scale order so the result does not depend on the thread count
    for _, part in _run_scales(data, frame, scales, True, threads):
        total += part
    return SpinCoefficients(coeffs.spin, coeffs.band_limit, total.reshape(coeffs.data.shape))


def q_multipliers(filt: FilterSpec, s: int, L: int, j_set: Sequence[int]) -> np.ndarray:
    """sum over j in j_set of f^2(a^{2j} lambda_ls), per l"""
    total = np.zeros(L + 1)
    for j in j_set:
        total += filt.multipliers(s, L, j) ** 2
    return total


def apply_Q(coeffs: SpinCoefficients, filt: FilterSpec, j_set: Sequence[int]) -> SpinCoefficients:
    """Q^J F: shell multiplier sum_{j in J} f^2(a^{2j} lambda_ls)"""
    weights = q_multipliers(filt, coeffs.spin, coeffs.band_limit, j_set)
    return coeffs.with_data(coeffs.data * weights[:, None])


# --- wavelet coefficients -------------------------------------------------

@dataclass(frozen=True, eq=False)
class WaveletCoefficients:
    """
    beta_{jk} per scale, aligned with the cell order of each partition.

    polar[j] marks cells whose values are given in the polar chart.
    """
    spin: int
    beta: Dict[int, np.ndarray]
    polar: Dict[int, np.ndarray]

    @property
    def scales(self) -> Tuple[int, ...]:
        return tuple(sorted(self.beta))

    def energy(self, j: int) -> np.ndarray:
        if j not in self.beta:
            raise ScaleMissing(f"scale j={j} has no wavelet coefficients")
        return np.sum(np.abs(self.beta[j]) ** 2, axis=-1)

    def total_energy(self) -> np.ndarray:
        return sum(self.energy(j) for j in self.scales)


def _scale_coefficients(data: np.ndarray, frame: NeedletFrame, j: int, charts: str) -> np.ndarray:
    part = frame.partition(j)
    out = np.zeros((data.shape[0], part.n_cells), dtype=complex)
    plan = _plan(frame, j)
    if plan is None:
        return out
    starts = np.concatenate([[0], np.cumsum(part.cells_per_band)])
    for rings, sums, _ in _ring_blocks(data, frame, j, plan):
        for r, band in enumerate(range(rings.start, rings.stop)):
            n = int(part.cells_per_band[band])
            folded = _fold(sums[:, :, r], plan.ms, n, float(part.band_phi_offset[band]))
            values = math.sqrt(part.band_areas[band]) * n * np.fft.ifft(folded, axis=0)
            out[:, starts[band]:starts[band + 1]] = values.T
    if charts == "tagged":
        polar = part.polar_mask()
        if frame.spin != 0 and np.any(polar):
            centers = part.centers()[polar]
            psi = reference_angles(centers, Rotation.identity(), POLAR_CHART)
            out[:, polar] *= np.exp(1j * frame.spin * psi)
    return out


def wavelet_coefficients(coeffs: SpinCoefficients, frame: NeedletFrame, scales: Optional[Sequence[int]] = None,
                         charts: str = "tagged", threads: int = 1) -> WaveletCoefficients:
    """
    beta_jk = sqrt(mu_jk) (f(a^{2j} Delta_s) F)_{R_jk}(x_jk).

    charts "tagged" reports polar cells in the polar chart, "identity" keeps
    every cell in chart I; the moduli agree.
    """
    if charts not in ("tagged", "identity"):
        raise ValueError(f"unknown chart policy {charts!r}")
    scales = tuple(frame.j_range if scales is None else scales)
    data = _flat(coeffs, frame)
    for j in scales:
        frame.partition(j)
    results = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_scale_coefficients)(data, frame, j, charts) for j in scales
    )
    beta = {j: values.reshape(coeffs.batch_shape + (values.shape[-1],)) for j, values in zip(scales, results)}
    polar = {j: (frame.partition(j).polar_mask() if charts == "tagged" else np.zeros(frame.partition(j).n_cells, bool))
             for j in scales}
    return WaveletCoefficients(coeffs.spin, beta, polar)


def frame_element(frame: NeedletFrame, j: int, k: int) -> SpinCoefficients:
    """Coefficients of phi_{j,k} in its tagged chart"""
    part = frame.partition(j)
    center = SpherePoint(part.centers()[k])
    chart = part.chart(k)
    element = needlet_coefficients(frame.a ** j, frame.spin, center, chart, frame.band_limit, frame.filter,
                                   check_band_limit=False)
    return element * math.sqrt(part.areas()[k])


# --- bounds ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FrameBounds:
    """Empirical frame bounds and the implied constant C0 = max deviation / b"""
    a_est: float
    b_est: float
    c0_est: float
    ratios: np.ndarray
    scale_norms: Dict[int, float]

    def __iter__(self):
        return iter((self.a_est, self.b_est, self.c0_est))

    @property
    def gap(self) -> float:
        return self.b_est - self.a_est


def _coefficient_space(s: int, L: int, lo: int, hi: int) -> Tuple[np.ndarray, np.ndarray]:
    mask = valid_mask(s, L).copy()
    mask[:lo] = False
    mask[hi + 1:] = False
    return np.nonzero(mask)


def _operator_extremes(apply, s: int, L: int, lo: int, hi: int, rng: np.random.Generator,
                       modes: Sequence[str]) -> Dict[str, float]:
    """Extreme eigenvalues of a Hermitian operator on the shells lo..hi"""
    ls, ms = _coefficient_space(s, L, lo, hi)
    dim = len(ls)

    def matvec_batch(x: np.ndarray) -> np.ndarray:
        data = np.zeros((x.shape[1], L + 1, 2 * L + 1), dtype=complex)
        data[:, ls, ms] = x.T
        return apply(SpinCoefficients(s, L, data)).data[:, ls, ms].T

    if dim <= DENSE_OPERATOR_LIMIT:
        matrix = matvec_batch(np.eye(dim, dtype=complex))
        values = np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))
        return {"SA": float(values[0]), "LA": float(values[-1]), "LM": float(np.max(np.abs(values)))}
    op = LinearOperator((dim, dim), matvec=lambda x: matvec_batch(x.reshape(dim, 1)).ravel(), dtype=complex)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    found = {}
    for which in modes:
        try:
            values = eigsh(op, k=1, which=which, tol=EIGSH_TOL, maxiter=EIGSH_MAXITER, v0=v0,
                           return_eigenvectors=False)
            found[which] = float(np.real(values[0]))
        except ArpackNoConvergence as err:
            if len(err.eigenvalues):
                found[which] = float(np.real(err.eigenvalues[0]))
            logger.warning(f"eigsh ({which}) did not converge on a {dim}-dimensional operator")
    if "LM" in found:
        found["LM"] = abs(found["LM"])
    return found


def scale_operator_norm(frame: NeedletFrame, j: int, seed: int = 0, threads: int = 1) -> float:
    """||Q_j - S_j|| on the shells where scale j acts"""
    lo, hi = frame.shell_range(j)
    if hi < lo:
        return 0.0
    s, L = frame.spin, frame.band_limit
    weights = frame.multipliers(j) ** 2

    def difference(coeffs: SpinCoefficients) -> SpinCoefficients:
        return coeffs.with_data(coeffs.data * weights[:, None]) - apply_S(coeffs, frame, scales=(j,), threads=threads)

    extremes = _operator_extremes(difference, s, L, lo, hi, np.random.default_rng([seed, abs(j), int(j < 0)]), ("LM",))
    return extremes.get("LM", float("nan"))


def random_unit_fields(s: int, L: int, n: int, rng: np.random.Generator) -> SpinCoefficients:
    """Unit-norm band-limited fields orthogonal to the shell l = |s|"""
    trial = SpinCoefficients.random(s, L, rng, batch=(n,))
    data = np.array(trial.data)
    data[:, abs(s)] = 0.0
    data /= np.sqrt(np.sum(np.abs(data) ** 2, axis=(-2, -1)))[:, None, None]
    return SpinCoefficients(s, L, data)


def frame_bound_estimate(frame: NeedletFrame, n_trials: int, seed: int, use_eigensolver: bool = True,
                         per_scale: bool = True, threads: int = 1) -> FrameBounds:
    """
    Empirical (A, B, C0) for the frame on band-limited fields orthogonal to the null shell.

    Random unit fields give ratios sum_jk |beta_jk|^2 / ||F||^2; the eigensolver
    adds the extreme eigenvalues of S, and per-scale norms ||Q_j - S_j|| enter C0.
    Without the eigensolver A and B are the smallest and largest trial ratio.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    s, L = frame.spin, frame.band_limit
    rng = np.random.default_rng(seed)
    trials = random_unit_fields(s, L, n_trials, rng)
    energies = frame_energy(trials, frame, threads=threads)
    ratios = np.sum(np.stack(list(energies.values())), axis=0)
    lower, upper = float(np.min(ratios)), float(np.max(ratios))
    if use_eigensolver:
        extremes = _operator_extremes(lambda c: apply_S(c, frame, threads=threads), s, L, abs(s) + 1, L, rng,
                                      ("SA", "LA"))
        lower = min(lower, extremes.get("SA", lower))
        upper = max(upper, extremes.get("LA", upper))
        if "SA" in extremes and "LA" in extremes:
            # trace(S) equals the dimension, so the true extremes straddle 1
            lower, upper = min(lower, 1.0), max(upper, 1.0)
    scale_norms = {j: scale_operator_norm(frame, j, seed, threads) for j in frame.j_range} if per_scale else {}
    deviation = max([1.0 - lower, upper - 1.0] + [v for v in scale_norms.values() if np.isfinite(v)])
    c0_est = deviation / frame.b
    logger.info(f"frame bounds b={frame.b}: A={lower:.8f} B={upper:.8f} C0={c0_est:.4g}")
    return FrameBounds(lower, upper, c0_est, ratios, scale_norms)


@dataclass(frozen=True, eq=False)
class GapSweep:
    """
    Frame gaps B - A over a decreasing sequence of partition parameters b.

    c0 is gap/b at the coarsest b, so the linear bound gap <= C0 b is pinned
    by one constant across the whole sweep. orders holds the local log-log
    slope between consecutive b (nan for the first).
    """
    b_values: np.ndarray
    gaps: np.ndarray
    c0: float
    orders: np.ndarray
    fitted_order: float

    @property
    def gap_over_b(self) -> np.ndarray:
        return self.gaps / self.b_values

    def within_linear_bound(self, rtol: float = 1e-9) -> np.ndarray:
        """gap(b) <= C0 b for each b of the sweep"""
        return self.gaps <= self.c0 * self.b_values * (1.0 + rtol)


def gap_sweep(b_values: Sequence[float], gaps: Sequence[float]) -> GapSweep:
    """Order the sweep by decreasing b and measure how fast the gap falls"""
    b = np.asarray(b_values, dtype=float)
    g = np.asarray(gaps, dtype=float)
    if b.shape != g.shape or b.ndim != 1:
        raise ValueError(f"b values and gaps must be matching 1-d sequences, got {b.shape} and {g.shape}")
    if len(b) == 0:
        raise ValueError("gap sweep needs at least one b")
    if len(np.unique(b)) != len(b):
        raise ValueError("b values of a gap sweep must be distinct")
    order = np.argsort(-b)
    b, g = b[order], g[order]
    orders = np.full(len(b), np.nan)
    positive = g > 0.0
    for k in range(1, len(b)):
        if positive[k] and positive[k - 1]:
            orders[k] = math.log(g[k - 1] / g[k]) / math.log(b[k - 1] / b[k])
    fitted = float("nan")
    if np.count_nonzero(positive) >= 2:
        fitted = float(np.polyfit(np.log(b[positive]), np.log(g[positive]), 1)[0])
    return GapSweep(b, g, float(g[0] / b[0]), orders, fitted)


# --- kernels and localization ---------------------------------------------

def _shell_filter(t: float, s: int, L: int, filt: FilterSpec) -> np.ndarray:
    values = filt(t * t * eigenvalues(s, L))
    values[: abs(s)] = 0.0
    return values


def kernel_band_limit(t: float, s: int, filt: FilterSpec) -> int:
    """Smallest L for which f(t^2 lambda_ls) vanishes for every l > L"""
    if not filt.is_compact:
        raise ValueError("kernels need a compactly supported filter")
    hi = filt.support[1]
    k = abs(s)
    # (l - k)(l + k + 1) >= hi / t^2 solved for l, then L = l - 1
    target = hi / (t * t)
    root = (-1.0 + math.sqrt(1.0 + 4.0 * (target + k * (k + 1)))) / 2.0
    L = max(k, math.ceil(root) - 1)
    while (L + 1 - k) * (L + k + 2) * t * t < hi:
        L += 1
    while L > k and (L - k) * (L + k + 1) * t * t >= hi:
        L -= 1
    return L


def _check_kernel_band(t: float, s: int, L: int, filt: FilterSpec) -> None:
    if not filt.is_compact:
        raise ValueError("kernels need a compactly supported filter")
    k = abs(s)
    if (L + 1 - k) * (L + k + 2) * t * t < filt.support[1]:
        raise BandLimitExceeded(f"filter support at t={t:.4g} reaches past band limit {L}")


def needlet_coefficients(t: float, s: int, x: SpherePoint, R: Rotation, L: int, filt: FilterSpec,
                         check_band_limit: bool = True) -> SpinCoefficients:
    """Coefficients f(t^2 lambda_ls) conj(sY_lmR(x)) of the spin wavelet w_{t,x,R}"""
    if check_band_limit:
        _check_kernel_band(t, s, L, filt)
    values = sylm_chart_values(s, L, x, R)[:, :, 0]
    data = _shell_filter(t, s, L, filt)[:, None] * np.conj(values)
    return SpinCoefficients(s, L, np.where(valid_mask(s, L), data, 0.0))


def needlet_kernel_values(t: float, s: int, x: SpherePoint, points, R1: Rotation, R2: Rotation, L: int,
                          filt: FilterSpec, chunk: int = 64) -> np.ndarray:
    """K_{t,R1,R2}(x, y) for many y given as unit vectors (n, 3)"""
    _check_kernel_band(t, s, L, filt)
    weights = _shell_filter(t, s, L, filt)
    at_x = sylm_chart_values(s, L, x, R1)[:, :, 0] * weights[:, None]
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(len(points), dtype=complex)
    for start in range(0, len(points), chunk):
        at_y = sylm_chart_values(s, L, points[start:start + chunk], R2)
        out[start:start + chunk] = np.einsum("lm,lmn->n", at_x, np.conj(at_y))
    return out


def needlet_kernel(t: float, s: int, x: SpherePoint, y: SpherePoint, R1: Rotation, R2: Rotation, L: int,
                   filt: FilterSpec) -> complex:
    """K_{t,R1,R2}(x, y) = sum_l f(t^2 lambda_ls) K^{ls}_{R1,R2}(x, y)"""
    return complex(needlet_kernel_values(t, s, x, y.v[None, :], R1, R2, L, filt)[0])


@dataclass(frozen=True, eq=False)
class LocalizationProfile:
    """|K_t(x, y)| along a geodesic from x and the fitted far-zone decay"""
    t: float
    distances: np.ndarray
    amplitudes: np.ndarray
    center: float
    slope: float
    fit_points: int

    @property
    def scaled_center(self) -> float:
        return self.center * self.t ** 2


def _kernel_moduli(t: float, s: int, x: SpherePoint, points: np.ndarray, L: int, filt: FilterSpec) -> np.ndarray:
    # moduli do not depend on the chart, so points near the chart-I poles use the polar chart
    identity = Rotation.identity()
    chart_x = POLAR_CHART if x.is_pole else identity
    near_pole = np.hypot(points[:, 0], points[:, 1]) < 1e-6
    out = np.zeros(len(points))
    if np.any(~near_pole):
        out[~near_pole] = np.abs(needlet_kernel_values(t, s, x, points[~near_pole], chart_x, identity, L, filt))
    if np.any(near_pole):
        out[near_pole] = np.abs(needlet_kernel_values(t, s, x, points[near_pole], chart_x, POLAR_CHART, L, filt))
    return out


def localization_probe(t: float, s: int, x: SpherePoint, n_samples: int, filt: FilterSpec,
                       L: Optional[int] = None, direction: float = 0.0) -> LocalizationProfile:
    """
    Sample |K_t(x, y)| for y along a geodesic and fit log|K| against log(d/t)
    over the far zone d/t >= 2, using the running tail maximum as envelope and
    stopping where it falls below LOCALIZATION_FLOOR times the center value.
    """
    L = kernel_band_limit(t, s, filt) if L is None else L
    distances = np.linspace(0.0, math.pi, n_samples)
    points = great_circle_points(x, distances, direction)
    amplitudes = _kernel_moduli(t, s, x, points, L, filt)
    center = float(amplitudes[0])
    envelope = np.maximum.accumulate(amplitudes[::-1])[::-1]
    ratio = distances / t
    far = (ratio >= LOCALIZATION_FAR_ZONE) & (envelope >= LOCALIZATION_FLOOR * center)
    slope = float("nan")
    if np.count_nonzero(far) >= 3:
        slope = float(np.polyfit(np.log(ratio[far]), np.log(envelope[far]), 1)[0])
    logger.debug(f"localization t={t:.4g}: center={center:.4g}, slope={slope:.3f} over {np.count_nonzero(far)} points")
    return LocalizationProfile(t, distances, amplitudes, center, slope, int(np.count_nonzero(far)))


def localization_study(t_list: Sequence[float], s: int, x: SpherePoint, n_samples: int,
                       filt: FilterSpec) -> List[LocalizationProfile]:
    """Profiles at several scales; center * t^2 should stay roughly constant"""
    return [localization_probe(t, s, x, n_samples, filt) for t in t_list]


# --- serialization --------------------------------------------------------

def frame_to_dict(frame: NeedletFrame, expand_cells: bool = False) -> Dict[str, Any]:
    return {
        "a": frame.a,
        "b": frame.b,
        "spin": frame.spin,
        "L": frame.band_limit,
        "filter": frame.filter.to_dict(),
        "j_range": list(frame.j_range),
        "c0": frame.c0,
        "delta0": frame.delta0,
        "C0_estimate": frame.bound_constant,
        "n_elements": frame.n_elements,
        "partitions": [partition_to_dict(frame.partitions[j], expand_cells=expand_cells) for j in frame.j_range],
    }


def frame_from_dict(data: Dict[str, Any]) -> NeedletFrame:
    """Rebuild a needlet frame from its JSON form, checking the stored partitions"""
    name = (data.get("filter") or {}).get("name", "needlet")
    if name != "needlet":
        raise ValueError(f"only needlet-filter frames can be rebuilt, got {name!r}")
    frame = build_frame(float(data["a"]), float(data["b"]), int(data["spin"]), int(data["L"]))
    if list(frame.j_range) != [int(j) for j in data["j_range"]]:
        raise ValueError("stored scale range does not match the construction")
    for record in data.get("partitions", []):
        partition_from_dict(record)
    if data.get("C0_estimate") is not None:
        frame = frame.with_bound_constant(data["C0_estimate"])
    return frame
