"""
Spin-weighted spherical harmonics, grid transforms and spectral spin operators
"""

import cmath
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import mpmath
import numpy as np
from scipy.special import gammaln

from .console import logger
from .constants import DIRECT_SUM_DPS, DIRECT_SUM_MAX_L, FOUR_PI, TOP_SHELL_FRACTION
from .errors import BandLimitHeuristicWarning, PoleEvaluation, UndefinedHarmonic
from .geometry import QuadratureGrid, build_quadrature


def _check_degree(s: int, l: int) -> None:
    if l < abs(s):
        raise UndefinedHarmonic(f"spin-{s} harmonics are not defined for l = {l} < |s|")


def _check_order(l: int, m: int) -> None:
    if abs(m) > l:
        raise ValueError(f"order m = {m} out of range for l = {l}")


@lru_cache(maxsize=64)
def valid_mask(s: int, L: int) -> np.ndarray:
    """Boolean (L+1, 2L+1) mask of the entries |s| <= l, |m| <= l"""
    ls = np.arange(L + 1)[:, None]
    ms = np.arange(-L, L + 1)[None, :]
    mask = (ls >= abs(s)) & (np.abs(ms) <= ls)
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True)
class EigenData:
    """Eigenvalue of the spin Laplacian and the factorial ratio root for one shell"""
    lam: float
    b: float


def eigen(s: int, l: int) -> EigenData:
    """Shell constants lambda_ls and b_ls, both symmetric under s -> -s"""
    _check_degree(s, l)
    k = abs(s)
    lam = (l - k) * (l + k + 1)
    b = math.exp(0.5 * (math.lgamma(l + k + 1) - math.lgamma(l - k + 1)))
    return EigenData(lam=float(lam), b=b)


def eigenvalues(s: int, L: int) -> np.ndarray:
    """lambda_ls for l = 0..L, zero below |s|"""
    k = abs(s)
    ls = np.arange(L + 1, dtype=float)
    return np.where(ls >= k, (ls - k) * (ls + k + 1), 0.0)


@dataclass(frozen=True, eq=False)
class SpinCoefficients:
    """
    Coefficients a_lm of a spin-s field, stored densely.

    data[..., l, m + L] holds a_lm; leading axes index independent fields.
    Entries with l < |s| or |m| > l are always zero.
    """
    spin: int
    band_limit: int
    data: np.ndarray

    def __post_init__(self):
        s, L = int(self.spin), int(self.band_limit)
        if L < abs(s):
            raise ValueError(f"band limit {L} is below |s| = {abs(s)}")
        data = np.array(self.data, dtype=complex)
        if data.shape[-2:] != (L + 1, 2 * L + 1):
            raise ValueError(f"coefficient array must end in shape {(L + 1, 2 * L + 1)}, got {data.shape}")
        if np.any(data[..., ~valid_mask(s, L)] != 0):
            raise ValueError("coefficients present outside |s| <= l <= L, |m| <= l")
        data.setflags(write=False)
        object.__setattr__(self, "spin", s)
        object.__setattr__(self, "band_limit", L)
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, s: int, L: int, batch: Tuple[int, ...] = ()) -> "SpinCoefficients":
        return cls(s, L, np.zeros(tuple(batch) + (L + 1, 2 * L + 1), dtype=complex))

    @classmethod
    def from_entries(cls, s: int, L: int, entries) -> "SpinCoefficients":
        """Build from a mapping {(l, m): value}"""
        data = np.zeros((L + 1, 2 * L + 1), dtype=complex)
        for (l, m), value in dict(entries).items():
            _check_degree(s, l)
            _check_order(l, m)
            data[l, m + L] = value
        return cls(s, L, data)

    @classmethod
    def random(cls, s: int, L: int, rng: np.random.Generator,
               batch: Tuple[int, ...] = ()) -> "SpinCoefficients":
        """Independent standard complex Gaussian entries on every valid (l, m)"""
        shape = tuple(batch) + (L + 1, 2 * L + 1)
        data = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
        return cls(s, L, np.where(valid_mask(s, L), data, 0.0))

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.data.shape[:-2]

    def coefficient(self, l: int, m: int):
        _check_degree(self.spin, l)
        _check_order(l, m)
        return self.data[..., l, m + self.band_limit]

    def shell(self, l: int) -> np.ndarray:
        """a_lm for m = -l..l"""
        _check_degree(self.spin, l)
        L = self.band_limit
        return self.data[..., l, L - l:L + l + 1]

    def norm_squared(self) -> np.ndarray:
        return np.sum(np.abs(self.data) ** 2, axis=(-2, -1))

    def norm(self) -> np.ndarray:
        return np.sqrt(self.norm_squared())

    def with_data(self, data) -> "SpinCoefficients":
        return SpinCoefficients(self.spin, self.band_limit, np.where(valid_mask(self.spin, self.band_limit), data, 0.0))

    def select(self, index) -> "SpinCoefficients":
        """One field (or sub-batch) out of a batch"""
        return SpinCoefficients(self.spin, self.band_limit, self.data[index])

    def resized(self, L: int) -> "SpinCoefficients":
        """Truncate or zero-pad to band limit L"""
        old = self.band_limit
        data = np.zeros(self.batch_shape + (L + 1, 2 * L + 1), dtype=complex)
        keep = min(L, old)
        data[..., :keep + 1, L - keep:L + keep + 1] = self.data[..., :keep + 1, old - keep:old + keep + 1]
        return SpinCoefficients(self.spin, L, data)

    def _compatible(self, other: "SpinCoefficients") -> None:
        if self.spin != other.spin or self.band_limit != other.band_limit:
            raise ValueError("coefficient sets differ in spin or band limit")

    def __add__(self, other: "SpinCoefficients") -> "SpinCoefficients":
        self._compatible(other)
        return SpinCoefficients(self.spin, self.band_limit, self.data + other.data)

    def __sub__(self, other: "SpinCoefficients") -> "SpinCoefficients":
        self._compatible(other)
        return SpinCoefficients(self.spin, self.band_limit, self.data - other.data)

    def __mul__(self, scalar) -> "SpinCoefficients":
        return SpinCoefficients(self.spin, self.band_limit, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpinCoefficients":
        return self * -1.0


def inner_product(f: SpinCoefficients, g: SpinCoefficients) -> np.ndarray:
    """<f, g> = sum a_lm conj(b_lm)"""
    f._compatible(g)
    return np.sum(f.data * np.conj(g.data), axis=(-2, -1))


# --- evaluation -----------------------------------------------------------

def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _start_rows(s: int, l: int, ms: np.ndarray, log_sin: np.ndarray, log_cos: np.ndarray) -> np.ndarray:
    # at l = max(|m|, |s|) the closed-form sum has the single term r = max(0, m - s)
    r = np.maximum(0, ms - s)
    k = 2 * r + s - ms
    log_mag = (0.5 * (gammaln(l + ms + 1) + gammaln(l - ms + 1))
               - 0.5 * (gammaln(l + s + 1) + gammaln(l - s + 1))
               + _log_binom(l - s, r) + _log_binom(l + s, r + s - ms))
    exponent = log_mag[:, None] + (2 * l - k)[:, None] * log_sin[None, :] + k[:, None] * log_cos[None, :]
    sign = np.where((np.maximum(-ms, 0) + l - r - s) % 2 == 0, 1.0, -1.0)
    return sign[:, None] * np.exp(exponent)


def _profile_rows(s: int, ms: np.ndarray, L: int, theta: np.ndarray) -> np.ndarray:
    """
    Stable three-term recursion in l for the theta profiles.

    With u_l = sqrt(4 pi / (2l+1)) sy_lm and x = cos(theta):
        l sqrt(((l+1)^2 - m^2)((l+1)^2 - s^2)) u_{l+1}
            = (2l+1)(l(l+1) x + m s) u_l - (l+1) sqrt((l^2 - m^2)(l^2 - s^2)) u_{l-1}

    Returns:
        Array (L+1, len(ms), len(theta)) of sy_lm(theta)
    """
    ms = np.asarray(ms, dtype=np.int64)
    theta = np.asarray(theta, dtype=float)
    out = np.zeros((L + 1, len(ms), len(theta)))
    k = abs(s)
    if L < k:
        return out
    x = np.cos(theta)
    log_sin = np.log(np.sin(0.5 * theta))
    log_cos = np.log(np.cos(0.5 * theta))
    l0 = np.maximum(np.abs(ms), k)
    prev = np.zeros((len(ms), len(theta)))
    cur = np.zeros_like(prev)
    m2 = ms.astype(float) ** 2
    s2 = float(s * s)
    for l in range(k, L + 1):
        start = l0 == l
        if np.any(start):
            cur[start] = _start_rows(s, l, ms[start], log_sin, log_cos)
            prev[start] = 0.0
        out[l] = cur * math.sqrt((2 * l + 1) / FOUR_PI)
        if l == L:
            break
        active = l0 <= l
        if l == 0:
            nxt = x[None, :] * cur
        else:
            c1 = (2 * l + 1) * (l * (l + 1) * x[None, :] + (ms * s)[:, None])
            c2 = (l + 1) * np.sqrt(np.clip((l * l - m2) * (l * l - s2), 0.0, None))
            den = l * np.sqrt(np.clip(((l + 1) ** 2 - m2) * ((l + 1) ** 2 - s2), 0.0, None))
            den = np.where(active, den, 1.0)
            nxt = (c1 * cur - c2[:, None] * prev) / den[:, None]
        nxt = np.where(active[:, None], nxt, 0.0)
        prev, cur = cur, nxt
    return out


def _interior(theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any((theta <= 0.0) | (theta >= math.pi)):
        raise PoleEvaluation("chart-I harmonics are evaluated at colatitudes strictly inside (0, pi)")
    return theta


def sylm_profiles(s: int, L: int, theta) -> np.ndarray:
    """Real profiles y[l, m + L, i] with sY_lm(theta_i, phi) = y exp(i m phi)"""
    theta = _interior(theta)
    return _profile_rows(s, np.arange(-L, L + 1), L, theta)


def sylm_values(s: int, L: int, theta, phi) -> np.ndarray:
    """Complex values sY_lm at points, shaped (L+1, 2L+1, n)"""
    theta = _interior(theta)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), theta.shape)
    ms = np.arange(-L, L + 1)
    return sylm_profiles(s, L, theta) * np.exp(1j * np.outer(ms, phi))[None, :, :]


def eval_sylm(s: int, l: int, m: int, theta, phi):
    """sY_lm in chart I via the stable recursion"""
    _check_degree(s, l)
    _check_order(l, m)
    scalar = np.ndim(theta) == 0 and np.ndim(phi) == 0
    th = _interior(theta)
    ph = np.broadcast_to(np.asarray(phi, dtype=float), th.shape)
    values = _profile_rows(s, np.array([m]), l, th)[l, 0] * np.exp(1j * m * ph)
    return complex(values[0]) if scalar else values


def eval_sylm_direct(s: int, l: int, m: int, theta: float, phi: float) -> complex:
    """
    sY_lm from the closed-form finite sum, evaluated in extended precision.

    Intended as a reference for moderate l, where double-precision summation
    already loses several digits to cancellation.
    """
    _check_degree(s, l)
    _check_order(l, m)
    if theta <= 0.0 or theta >= math.pi:
        raise PoleEvaluation("chart-I harmonics are evaluated at colatitudes strictly inside (0, pi)")
    if l > DIRECT_SUM_MAX_L:
        logger.warning(f"direct sum at l={l} is beyond the validated range l <= {DIRECT_SUM_MAX_L}")
    with mpmath.workdps(DIRECT_SUM_DPS):
        half = mpmath.mpf(theta) / 2
        sh, ch = mpmath.sin(half), mpmath.cos(half)
        total = mpmath.mpf(0)
        for r in range(max(0, m - s), min(l - s, l + m) + 1):
            k = 2 * r + s - m
            term = mpmath.binomial(l - s, r) * mpmath.binomial(l + s, r + s - m)
            term *= sh ** (2 * l - k) * ch ** k
            total += -term if (l - r - s) % 2 else term
        norm = mpmath.sqrt(mpmath.factorial(l + m) * mpmath.factorial(l - m) * (2 * l + 1) / (4 * mpmath.pi))
        norm /= mpmath.sqrt(mpmath.factorial(l + s) * mpmath.factorial(l - s))
        value = norm * total
        if max(-m, 0) % 2:
            value = -value
        profile = float(value)
    return profile * cmath.exp(1j * m * phi)


def evaluate(coeffs: SpinCoefficients, theta, phi, chunk: int = 4096) -> np.ndarray:
    """Chart-I values of a field at arbitrary interior points, shaped (..., n)"""
    theta = _interior(theta)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), theta.shape)
    L = coeffs.band_limit
    ms = np.arange(-L, L + 1)
    out = np.zeros(coeffs.batch_shape + theta.shape, dtype=complex)
    for start in range(0, len(theta), chunk):
        sl = slice(start, start + chunk)
        y = _profile_rows(coeffs.spin, ms, L, theta[sl])
        per_m = np.einsum("...lm,lmi->...mi", coeffs.data, y)
        out[..., sl] = np.einsum("...mi,mi->...i", per_m, np.exp(1j * np.outer(ms, phi[sl])))
    return out


# --- transforms -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridField:
    """Chart-I samples of a spin-s field on a quadrature grid"""
    spin: int
    grid: QuadratureGrid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.shape[-2:] != (self.grid.n_theta, self.grid.n_phi):
            raise ValueError(f"samples must end in shape {(self.grid.n_theta, self.grid.n_phi)}, got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("grid samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


def grid_inner_product(f: GridField, g: GridField) -> np.ndarray:
    """Quadrature inner product of two fields on the same grid"""
    return f.grid.integrate(f.samples * np.conj(g.samples))


def synthesis(coeffs: SpinCoefficients, grid: QuadratureGrid) -> GridField:
    """Samples f_I on the grid: per-ring Legendre contraction, then an inverse FFT in longitude"""
    L = coeffs.band_limit
    if grid.band_limit < L:
        raise ValueError(f"grid band limit {grid.band_limit} is below coefficient band limit {L}")
    y = sylm_profiles(coeffs.spin, L, grid.theta_nodes)
    per_ring = np.einsum("...lm,lmi->...im", coeffs.data, y)
    spectrum = np.zeros(coeffs.batch_shape + (grid.n_theta, grid.n_phi), dtype=complex)
    spectrum[..., np.arange(-L, L + 1) % grid.n_phi] = per_ring
    samples = np.fft.ifft(spectrum, axis=-1) * grid.n_phi
    return GridField(coeffs.spin, grid, samples)


def analysis(field: GridField, lmax: Optional[int] = None, check_band_limit: bool = True) -> SpinCoefficients:
    """a_lm = <f, sY_lm> by quadrature: forward FFT per ring, then Legendre contraction"""
    grid = field.grid
    L = grid.band_limit if lmax is None else int(lmax)
    if L > grid.band_limit:
        raise ValueError(f"requested band limit {L} exceeds grid band limit {grid.band_limit}")
    per_ring = np.fft.fft(field.samples, axis=-1) * (2.0 * math.pi / grid.n_phi)
    per_ring = per_ring[..., np.arange(-L, L + 1) % grid.n_phi]
    y = sylm_profiles(field.spin, L, grid.theta_nodes)
    data = np.einsum("...im,i,lmi->...lm", per_ring, grid.theta_weights, y)
    coeffs = SpinCoefficients(field.spin, L, np.where(valid_mask(field.spin, L), data, 0.0))
    if check_band_limit:
        energy = np.sum(np.abs(coeffs.data) ** 2)
        top = np.sum(np.abs(coeffs.data[..., L, :]) ** 2)
        if energy > 0 and top / energy > TOP_SHELL_FRACTION:
            warnings.warn(
                f"top shell l={L} holds {top / energy:.2e} of the energy; the field may exceed the grid band limit",
                BandLimitHeuristicWarning,
                stacklevel=2,
            )
    return coeffs


def gram_residual(s: int, L: int, grid: Optional[QuadratureGrid] = None, chunk: int = 256) -> float:
    """Max-norm deviation from the identity of the quadrature Gram matrix of {sY_lm : l <= L}"""
    grid = grid or build_quadrature(L)
    mask = valid_mask(s, L)
    ls, ms = np.nonzero(mask)
    residual = 0.0
    for start in range(0, len(ls), chunk):
        rows = np.arange(start, min(start + chunk, len(ls)))
        basis = np.zeros((len(rows), L + 1, 2 * L + 1), dtype=complex)
        basis[np.arange(len(rows)), ls[rows], ms[rows]] = 1.0
        images = analysis(synthesis(SpinCoefficients(s, L, basis), grid), lmax=L, check_band_limit=False)
        gram = images.data[:, ls, ms]
        gram[np.arange(len(rows)), rows] -= 1.0
        residual = max(residual, float(np.max(np.abs(gram))))
    logger.debug(f"gram residual s={s} L={L}: {residual:.3e}")
    return residual


# --- spectral operators ---------------------------------------------------

def eth_multipliers(s: int, L: int) -> np.ndarray:
    """sqrt((l-s)(l+s+1)) per l, zero below |s|"""
    ls = np.arange(L + 1, dtype=float)
    return np.where(ls >= abs(s), np.sqrt(np.clip((ls - s) * (ls + s + 1), 0.0, None)), 0.0)


def eth_bar_multipliers(s: int, L: int) -> np.ndarray:
    """-sqrt((l+s)(l-s+1)) per l, zero below |s|"""
    ls = np.arange(L + 1, dtype=float)
    return np.where(ls >= abs(s), -np.sqrt(np.clip((ls + s) * (ls - s + 1), 0.0, None)), 0.0)


def _shift_spin(coeffs: SpinCoefficients, new_spin: int, multipliers: np.ndarray) -> SpinCoefficients:
    L = coeffs.band_limit
    if L < abs(new_spin):
        raise UndefinedHarmonic(f"band limit {L} leaves no shells at spin {new_spin}")
    data = coeffs.data * multipliers[:, None]
    return SpinCoefficients(new_spin, L, np.where(valid_mask(new_spin, L), data, 0.0))


def spin_raise(coeffs: SpinCoefficients) -> SpinCoefficients:
    """Spectral edth: spin s -> s+1"""
    return _shift_spin(coeffs, coeffs.spin + 1, eth_multipliers(coeffs.spin, coeffs.band_limit))


def spin_lower(coeffs: SpinCoefficients) -> SpinCoefficients:
    """Spectral edth-bar: spin s -> s-1"""
    return _shift_spin(coeffs, coeffs.spin - 1, eth_bar_multipliers(coeffs.spin, coeffs.band_limit))


def laplacian_s(coeffs: SpinCoefficients) -> SpinCoefficients:
    """Shell-wise multiplication by lambda_ls"""
    lam = eigenvalues(coeffs.spin, coeffs.band_limit)
    return coeffs.with_data(coeffs.data * lam[:, None])


def em_decompose(coeffs: SpinCoefficients) -> Tuple[SpinCoefficients, SpinCoefficients]:
    """Electric and magnetic parts; both involutive and coeffs = E + i M"""
    a = coeffs.data
    mirrored = np.conj(a[..., ::-1])
    electric = (a + mirrored) / 2.0
    magnetic = -1j * (a - mirrored) / 2.0
    return coeffs.with_data(electric), coeffs.with_data(magnetic)


def em_compose(electric: SpinCoefficients, magnetic: SpinCoefficients) -> SpinCoefficients:
    return electric + magnetic * 1j


def is_involutive(coeffs: SpinCoefficients, tol: float = 1e-12) -> bool:
    a = coeffs.data
    return bool(np.max(np.abs(np.conj(a) - a[..., ::-1]), initial=0.0) <= tol)


def zonal_coefficients(s: int, l: int, L: Optional[int] = None) -> SpinCoefficients:
    """The s-zonal harmonic of degree l: one coefficient at m = -s"""
    _check_degree(s, l)
    L = l if L is None else max(int(L), l)
    value = (-1) ** max(s, 0) * math.sqrt((2 * l + 1) / FOUR_PI)
    return SpinCoefficients.from_entries(s, L, {(l, -s): value})


def pole_functional(coeffs: SpinCoefficients) -> np.ndarray:
    """lim_{theta -> 0+} exp(i s phi) f_I(theta, phi), computed spectrally"""
    s, L = coeffs.spin, coeffs.band_limit
    ls = np.arange(abs(s), L + 1)
    weights = (-1) ** max(s, 0) * np.sqrt((2 * ls + 1) / FOUR_PI)
    return np.sum(coeffs.data[..., ls, -s + L] * weights, axis=-1)


def pole_limit_numeric(coeffs: SpinCoefficients, theta: float = 1e-3) -> np.ndarray:
    """Ring averages of exp(i s phi) f_I near the north pole, Richardson-extrapolated to theta = 0"""
    n_phi = 2 * coeffs.band_limit + 1
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi

    def ring(t):
        values = evaluate(coeffs, np.full(n_phi, t), phi)
        return np.mean(values * np.exp(1j * coeffs.spin * phi), axis=-1)

    return (4.0 * ring(theta / 2.0) - ring(theta)) / 3.0


def edth_finite_difference(coeffs: SpinCoefficients, theta, phi, h: float = 1e-5) -> np.ndarray:
    """-(sin t)^s (d_t + i/sin t d_p) (sin t)^-s f by centred differences"""
    s = coeffs.spin
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)

    def g(t, p):
        return np.sin(t) ** (-s) * evaluate(coeffs, t, p)

    d_theta = (g(theta + h, phi) - g(theta - h, phi)) / (2.0 * h)
    d_phi = (g(theta, phi + h) - g(theta, phi - h)) / (2.0 * h)
    return -np.sin(theta) ** s * (d_theta + 1j * d_phi / np.sin(theta))


def bedth_finite_difference(coeffs: SpinCoefficients, theta, phi, h: float = 1e-5) -> np.ndarray:
    """-(sin t)^-s (d_t - i/sin t d_p) (sin t)^s f by centred differences"""
    s = coeffs.spin
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)

    def g(t, p):
        return np.sin(t) ** s * evaluate(coeffs, t, p)

    d_theta = (g(theta + h, phi) - g(theta - h, phi)) / (2.0 * h)
    d_phi = (g(theta, phi + h) - g(theta, phi - h)) / (2.0 * h)
    return -np.sin(theta) ** (-s) * (d_theta - 1j * d_phi / np.sin(theta))


def laplace_beltrami_finite_difference(coeffs: SpinCoefficients, theta, phi, h: float = 1e-3) -> np.ndarray:
    """Centred-difference Laplace-Beltrami operator of a spin-0 field; equals -Delta_0 f"""
    if coeffs.spin != 0:
        raise ValueError(f"the Laplace-Beltrami form holds for spin 0, got spin {coeffs.spin}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    centre = evaluate(coeffs, theta, phi)
    up, down = evaluate(coeffs, theta + h, phi), evaluate(coeffs, theta - h, phi)
    d_tt = (up - 2.0 * centre + down) / h ** 2
    d_t = (up - down) / (2.0 * h)
    d_pp = (evaluate(coeffs, theta, phi + h) - 2.0 * centre + evaluate(coeffs, theta, phi - h)) / h ** 2
    return d_tt + d_t / np.tan(theta) + d_pp / np.sin(theta) ** 2


# --- consistency checks ---------------------------------------------------

def zonal_pole_errors(s: int, L: int) -> Tuple[float, float]:
    """
    Worst relative errors of L(sZ_l) = (2l+1)/4pi over |s| <= l <= L.

    Returns (spectral, numeric): the closed-form pole functional and the
    Richardson-extrapolated ring average.
    """
    spectral, numeric = 0.0, 0.0
    for l in range(abs(s), L + 1):
        expected = (2 * l + 1) / FOUR_PI
        z = zonal_coefficients(s, l)
        spectral = max(spectral, abs(complex(pole_functional(z)) - expected) / expected)
        numeric = max(numeric, abs(complex(pole_limit_numeric(z)) - expected) / expected)
    return spectral, numeric


def ladder_errors(s: int, L: int, rng: np.random.Generator, n_points: int = 12) -> Tuple[float, float]:
    """
    Spin ladder against finite differences, and the adjoint defect.

    Returns (fd_error, adjoint): the worst relative gap between the spectral
    edth / bar-edth and their differential forms at random interior points,
    and |<edth f, g> + <f, bar-edth g>| / (||f|| ||g||).
    """
    f = SpinCoefficients.random(s, L, rng)
    theta = rng.uniform(0.3, math.pi - 0.3, n_points)
    phi = rng.uniform(0.0, 2.0 * math.pi, n_points)
    fd_error = 0.0
    for spectral, numeric in ((spin_raise(f), edth_finite_difference(f, theta, phi)),
                              (spin_lower(f), bedth_finite_difference(f, theta, phi))):
        exact = evaluate(spectral, theta, phi)
        fd_error = max(fd_error, float(np.max(np.abs(exact - numeric)) / np.max(np.abs(exact))))
    g = SpinCoefficients.random(s + 1, L, rng)
    lhs = complex(inner_product(spin_raise(f), g))
    rhs = -complex(inner_product(f, spin_lower(g)))
    adjoint = abs(lhs - rhs) / max(float(f.norm() * g.norm()), 1.0)
    return fd_error, adjoint
