"""
Wigner d and D matrices, coefficient rotation and harmonics in rotated charts
"""

import math
from typing import List, Optional

import numpy as np
from scipy.special import gammaln

from .constants import FOUR_PI, POLE_TOL
from .errors import PoleInChart
from .geometry import Rotation, SpherePoint, angles_from_vectors, random_points, reference_angles
from .harmonics import GridField, SpinCoefficients, _check_degree, _check_order, analysis, evaluate, sylm_values


def _start_rows(l: int, mp: np.ndarray, m: np.ndarray, cos_half: float, sin_half: float) -> np.ndarray:
    # single term of the finite sum at l = max(|m|, |m'|)
    k = np.maximum(0, m - mp)
    log_coeff = 0.5 * (gammaln(l + m + 1) + gammaln(l - m + 1) + gammaln(l + mp + 1) + gammaln(l - mp + 1))
    log_coeff -= gammaln(l + m - k + 1) + gammaln(k + 1) + gammaln(l - k - mp + 1) + gammaln(k - m + mp + 1)
    sign = np.where((k - m + mp) % 2 == 0, 1.0, -1.0)
    cos_power = np.power(cos_half, (2 * l - 2 * k + m - mp).astype(float))
    sin_power = np.power(sin_half, (2 * k - m + mp).astype(float))
    return sign * np.exp(log_coeff) * cos_power * sin_power


def wigner_d_table(L: int, beta: float) -> List[np.ndarray]:
    """
    Little-d matrices d^l(beta) for l = 0..L.

    Entry [m' + l, m + l] of the l-th matrix is d^l_{m'm}(beta), built by the
    three-term recursion in l started from the closed form at l = max(|m|, |m'|).
    """
    size = 2 * L + 1
    mp, m = np.meshgrid(np.arange(-L, L + 1), np.arange(-L, L + 1), indexing="ij")
    mp = mp.ravel()
    m = m.ravel()
    x = math.cos(beta)
    cos_half = abs(math.cos(0.5 * beta))
    sin_half = abs(math.sin(0.5 * beta))
    # beta is taken in [0, pi], where both half-angle functions are nonnegative
    l0 = np.maximum(np.abs(m), np.abs(mp))
    mf = m.astype(float) ** 2
    mpf = mp.astype(float) ** 2
    prev = np.zeros(size * size)
    cur = np.zeros(size * size)
    table = []
    for l in range(L + 1):
        start = l0 == l
        if np.any(start):
            cur[start] = _start_rows(l, mp[start], m[start], cos_half, sin_half)
            prev[start] = 0.0
        block = cur.reshape(size, size)[L - l:L + l + 1, L - l:L + l + 1]
        table.append(block.copy())
        if l == L:
            break
        active = l0 <= l
        if l == 0:
            nxt = x * cur
        else:
            c1 = (2 * l + 1) * (l * (l + 1) * x - m * mp)
            c2 = (l + 1) * np.sqrt(np.clip((l * l - mf) * (l * l - mpf), 0.0, None))
            den = l * np.sqrt(np.clip(((l + 1) ** 2 - mf) * ((l + 1) ** 2 - mpf), 0.0, None))
            den = np.where(active, den, 1.0)
            nxt = (c1 * cur - c2 * prev) / den
        nxt = np.where(active, nxt, 0.0)
        prev, cur = cur, nxt
    return table


def wigner_D(L: int, R: Rotation) -> List[np.ndarray]:
    """
    D^l(R) for l = 0..L in the (-1)^{m-} harmonic convention.

    The matrices represent f -> f o R^-1 on coefficients: rotating a field by R
    maps a_lm to sum_m D^l_{m'm}(R) a_lm.
    """
    alpha, beta, gamma = R.euler()
    d = wigner_d_table(L, beta)
    out = []
    for l, dl in enumerate(d):
        ms = np.arange(-l, l + 1)
        sign = np.where(np.maximum(ms, 0) % 2 == 0, 1.0, -1.0)
        left = sign * np.exp(-1j * ms * alpha)
        right = sign * np.exp(-1j * ms * gamma)
        out.append(left[:, None] * dl * right[None, :])
    return out


def rotate_coefficients(coeffs: SpinCoefficients, R: Rotation) -> SpinCoefficients:
    """Coefficients of the field rotated by R; the same matrices serve every spin"""
    L = coeffs.band_limit
    D = wigner_D(L, R)
    data = np.zeros_like(coeffs.data)
    for l in range(abs(coeffs.spin), L + 1):
        block = coeffs.data[..., l, L - l:L + l + 1]
        data[..., l, L - l:L + l + 1] = np.einsum("ij,...j->...i", D[l], block)
    return SpinCoefficients(coeffs.spin, L, data)


def _as_vectors(points) -> np.ndarray:
    if isinstance(points, SpherePoint):
        return points.v[None, :]
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], SpherePoint):
        return np.stack([p.v for p in points])
    return np.atleast_2d(np.asarray(points, dtype=float))


def sylm_chart_values(s: int, L: int, points, R: Rotation, method: str = "auto") -> np.ndarray:
    """
    Values sY_lmR at points in chart R, shaped (L+1, 2L+1, n).

    method "phase" multiplies chart-I values by exp(i s psi) and needs every
    point inside U_I; "wigner" expands R^-1 p in chart-I harmonics and works
    anywhere in U_R; "auto" picks phase when it applies.
    """
    v = _as_vectors(points)
    if method not in ("auto", "phase", "wigner"):
        raise ValueError(f"unknown chart evaluation method {method!r}")
    identity = Rotation.identity()
    if method == "auto":
        theta, _ = angles_from_vectors(v)
        interior = np.all((theta > 0.0) & (theta < math.pi) & (np.hypot(v[:, 0], v[:, 1]) > POLE_TOL))
        method = "phase" if interior else "wigner"
    if method == "phase":
        theta, phi = angles_from_vectors(v)
        if np.any(np.hypot(v[:, 0], v[:, 1]) <= POLE_TOL):
            raise PoleInChart("phase evaluation needs points away from the chart-I poles")
        values = sylm_values(s, L, theta, phi)
        psi = reference_angles(v, identity, R)
        return values * np.exp(1j * s * psi)[None, None, :]
    q = R.inverse().apply(v)
    if np.any(np.hypot(q[:, 0], q[:, 1]) <= POLE_TOL):
        raise PoleInChart("point lies on a pole of the requested chart")
    theta, phi = angles_from_vectors(q)
    base = sylm_values(s, L, theta, phi)
    D = wigner_D(L, R.inverse())
    out = np.zeros_like(base)
    for l in range(abs(s), L + 1):
        out[l, L - l:L + l + 1] = np.einsum("ij,ik->jk", D[l], base[l, L - l:L + l + 1])
    return out


def eval_sylm_chart(s: int, l: int, m: int, p: SpherePoint, R: Rotation, method: str = "auto") -> complex:
    """sY_lmR(p) for p in U_R"""
    _check_degree(s, l)
    _check_order(l, m)
    values = sylm_chart_values(s, l, p, R, method=method)
    return complex(values[l, m + l, 0])


def projection_kernel(s: int, l: int, x: SpherePoint, y: SpherePoint, R1: Rotation, R2: Rotation) -> complex:
    """K^{ls}_{R1,R2}(x, y) = sum_m sY_lmR1(x) conj(sY_lmR2(y))"""
    _check_degree(s, l)
    yx = sylm_chart_values(s, l, x, R1)[l, :, 0]
    yy = sylm_chart_values(s, l, y, R2)[l, :, 0]
    return complex(np.sum(yx * np.conj(yy)))


def rotate_grid_field(field: GridField, R: Rotation, lmax: Optional[int] = None) -> GridField:
    """
    Rotate a band-limited field by R directly on the grid.

    Each node q takes the value exp(i s psi) f_I(R^-1 q), with psi the
    reference angle at R^-1 q between chart I and chart R^-1.
    """
    grid = field.grid
    coeffs = analysis(field, lmax=lmax, check_band_limit=False)
    theta = np.repeat(grid.theta_nodes, grid.n_phi)
    phi = np.tile(grid.phi_nodes, grid.n_theta)
    st = np.sin(theta)
    nodes = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
    p = R.inverse().apply(nodes)
    p_theta, p_phi = angles_from_vectors(p)
    values = evaluate(coeffs, p_theta, p_phi)
    psi = reference_angles(p, Rotation.identity(), R.inverse())
    samples = values * np.exp(1j * field.spin * psi)
    shape = coeffs.batch_shape + (grid.n_theta, grid.n_phi)
    return GridField(field.spin, grid, samples.reshape(shape))


# --- consistency checks ---------------------------------------------------

def kernel_diagonal_error(s: int, L: int, rng: np.random.Generator, n_points: int = 20) -> float:
    """
    Worst relative deviation of sum_m |sY_lmR(p)|^2 from (2l+1)/4pi over
    random points and random charts, all shells |s| <= l <= L.
    """
    expected = (2 * np.arange(abs(s), L + 1) + 1) / FOUR_PI
    worst = 0.0
    for p in random_points(rng, n_points):
        values = sylm_chart_values(s, L, p, Rotation.random(rng))[:, :, 0]
        diagonal = np.sum(np.abs(values) ** 2, axis=1)[abs(s):]
        worst = max(worst, float(np.max(np.abs(diagonal - expected) / expected)))
    return worst


def rotation_homomorphism_error(s: int, L: int, rng: np.random.Generator) -> float:
    """max of |D(R1 R2) f - D(R1) D(R2) f| and the norm change under D(R1), for random f, R1, R2"""
    f = SpinCoefficients.random(s, L, rng)
    R1, R2 = Rotation.random(rng), Rotation.random(rng)
    composed = rotate_coefficients(f, R1 @ R2)
    stepwise = rotate_coefficients(rotate_coefficients(f, R2), R1)
    norm_error = abs(float(rotate_coefficients(f, R1).norm()) - float(f.norm()))
    return max(float(np.max(np.abs(composed.data - stepwise.data))), norm_error)
