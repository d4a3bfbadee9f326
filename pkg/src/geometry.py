"""
Points, rotations, rotated charts, quadrature grids and equal-latitude partitions
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation as _ScipyRotation

from .console import logger
from .constants import (
    ChartTag,
    ORTHO_TOL,
    PARTITION_DELTA0,
    PARTITION_SAFETY,
    PARTITION_SWEEP,
    POLE_TOL,
    UNIT_TOL,
)
from .errors import PoleInChart, ScaleTooCoarse


def vectors_from_angles(theta, phi) -> np.ndarray:
    """Unit vectors (..., 3) for colatitude theta and longitude phi"""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack(np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1)


def angles_from_vectors(v) -> Tuple[np.ndarray, np.ndarray]:
    """Colatitude in [0, pi] and longitude in [-pi, pi) of unit vectors (..., 3)"""
    v = np.asarray(v, dtype=float)
    theta = np.arctan2(np.hypot(v[..., 0], v[..., 1]), v[..., 2])
    phi = np.arctan2(v[..., 1], v[..., 0])
    phi = np.where(phi >= math.pi, phi - 2.0 * math.pi, phi)
    return theta, phi


def _distance(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    # atan2 form stays accurate near 0 and pi where arccos loses digits
    return np.arctan2(np.linalg.norm(np.cross(u, w), axis=-1), np.sum(u * w, axis=-1))


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """A point on the unit sphere stored as a unit 3-vector"""
    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(3)
        if not np.all(np.isfinite(v)):
            raise ValueError("SpherePoint.v must be finite")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"SpherePoint.v must have unit length, got |v| = {norm!r}")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "SpherePoint":
        return cls(vectors_from_angles(theta, phi))

    @classmethod
    def from_vector(cls, v) -> "SpherePoint":
        """Normalize an arbitrary nonzero vector onto the sphere"""
        v = np.asarray(v, dtype=float).reshape(3)
        norm = float(np.linalg.norm(v))
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(v / norm)

    @classmethod
    def north(cls) -> "SpherePoint":
        return cls(np.array([0.0, 0.0, 1.0]))

    @classmethod
    def south(cls) -> "SpherePoint":
        return cls(np.array([0.0, 0.0, -1.0]))

    @property
    def theta(self) -> float:
        return float(angles_from_vectors(self.v)[0])

    @property
    def phi(self) -> float:
        return float(angles_from_vectors(self.v)[1])

    @property
    def is_pole(self) -> bool:
        return math.hypot(self.v[0], self.v[1]) <= POLE_TOL

    def coordinates_in(self, R: "Rotation") -> Tuple[float, float]:
        """(theta, phi) of this point in chart R, i.e. the coordinates of R^-1 p"""
        q = R.inverse().apply(self.v)
        if math.hypot(q[0], q[1]) <= POLE_TOL:
            raise PoleInChart(f"point {self.v.tolist()} is a pole of the chart")
        theta, phi = angles_from_vectors(q)
        return float(theta), float(phi)

    def in_chart(self, R: "Rotation") -> bool:
        q = R.inverse().apply(self.v)
        return math.hypot(q[0], q[1]) > POLE_TOL

    def __repr__(self) -> str:
        return f"SpherePoint(theta={self.theta:.6g}, phi={self.phi:.6g})"


@dataclass(frozen=True, eq=False)
class Rotation:
    """A proper rotation of R^3 acting on column vectors"""
    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"Rotation.m must be 3x3, got shape {m.shape}")
        if np.max(np.abs(m.T @ m - np.eye(3))) > ORTHO_TOL:
            raise ValueError("Rotation.m must be orthogonal")
        if abs(np.linalg.det(m) - 1.0) > ORTHO_TOL:
            raise ValueError("Rotation.m must have determinant 1")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def about_axis(cls, axis, angle: float) -> "Rotation":
        """Right-handed rotation by angle about axis"""
        axis = np.asarray(axis, dtype=float).reshape(3)
        axis = axis / np.linalg.norm(axis)
        return cls(_ScipyRotation.from_rotvec(axis * angle).as_matrix())

    @classmethod
    def from_euler(cls, alpha: float, beta: float, gamma: float) -> "Rotation":
        """Active ZYZ rotation Rz(alpha) Ry(beta) Rz(gamma)"""
        return cls(_ScipyRotation.from_euler("ZYZ", [alpha, beta, gamma]).as_matrix())

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Rotation":
        """Haar-uniform random rotation"""
        return cls(_ScipyRotation.random(random_state=rng).as_matrix())

    def euler(self) -> Tuple[float, float, float]:
        """ZYZ angles (alpha, beta, gamma) with beta in [0, pi]"""
        m = self.m
        sin_beta = math.hypot(m[0, 2], m[1, 2])
        beta = math.atan2(sin_beta, m[2, 2])
        if sin_beta > 1e-12:
            alpha = math.atan2(m[1, 2], m[0, 2])
            gamma = math.atan2(m[2, 1], -m[2, 0])
        elif m[2, 2] > 0:
            alpha, gamma = math.atan2(m[1, 0], m[0, 0]), 0.0
        else:
            alpha, gamma = math.atan2(-m[1, 0], -m[0, 0]), 0.0
        return alpha, beta, gamma

    def inverse(self) -> "Rotation":
        return Rotation(self.m.T)

    def apply(self, v) -> np.ndarray:
        """Rotate vectors of shape (..., 3)"""
        return np.asarray(v, dtype=float) @ self.m.T

    def __matmul__(self, other):
        if isinstance(other, Rotation):
            return Rotation(self.m @ other.m)
        if isinstance(other, SpherePoint):
            return SpherePoint.from_vector(self.m @ other.v)
        return NotImplemented

    def __repr__(self) -> str:
        return f"Rotation(euler={tuple(round(x, 6) for x in self.euler())})"


POLAR_CHART = Rotation.about_axis([1.0, 0.0, 0.0], math.pi / 2)


def geodesic_distance(x: SpherePoint, y: SpherePoint) -> float:
    """Great-circle distance in [0, pi]"""
    return float(_distance(x.v, y.v))


def rho_vectors(v, R: Rotation) -> np.ndarray:
    """Chart-R reference directions at unit vectors v (..., 3)"""
    q = R.inverse().apply(v)
    r = np.hypot(q[..., 0], q[..., 1])
    if np.any(r <= POLE_TOL):
        raise PoleInChart("reference direction requested at a pole of the chart")
    ref = np.stack([-q[..., 1] / r, q[..., 0] / r, np.zeros_like(r)], axis=-1)
    return R.apply(ref)


def rho(p: SpherePoint, R: Rotation) -> np.ndarray:
    """Unit tangent rho_R(p) = R rho_I(R^-1 p), along increasing chart longitude"""
    return rho_vectors(p.v, R)


def reference_angles(v, R1: Rotation, R2: Rotation) -> np.ndarray:
    """Vectorized reference_angle over unit vectors (..., 3)"""
    v = np.asarray(v, dtype=float)
    a = rho_vectors(v, R1)
    b = rho_vectors(v, R2)
    # J a = a x p is the quarter turn matching the orientation at N
    psi = np.arctan2(np.sum(np.cross(a, v) * b, axis=-1), np.sum(a * b, axis=-1))
    return np.where(psi <= -math.pi, psi + 2.0 * math.pi, psi)


def reference_angle(p: SpherePoint, R1: Rotation, R2: Rotation) -> float:
    """
    Angle from rho_R1(p) to rho_R2(p) in (-pi, pi].

    A spin-s section satisfies f_R2(p) = exp(i s psi) f_R1(p).
    """
    return float(reference_angles(p.v, R1, R2))


def great_circle_points(x: SpherePoint, distances, direction: float = 0.0) -> np.ndarray:
    """Points at the given distances from x along a geodesic leaving x at angle direction from rho_I(x)"""
    chart = POLAR_CHART if x.is_pole else Rotation.identity()
    e1 = rho(x, chart)
    e2 = np.cross(e1, x.v)
    tangent = math.cos(direction) * e1 + math.sin(direction) * e2
    d = np.asarray(distances, dtype=float)[..., None]
    return np.cos(d) * x.v + np.sin(d) * tangent


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Gauss-Legendre nodes in cos(theta) crossed with equispaced longitudes"""
    theta_nodes: np.ndarray
    theta_weights: np.ndarray
    n_phi: int
    band_limit: int

    @property
    def n_theta(self) -> int:
        return len(self.theta_nodes)

    @property
    def phi_nodes(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def cell_weights(self) -> np.ndarray:
        return np.outer(self.theta_weights, np.full(self.n_phi, 2.0 * math.pi / self.n_phi))

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.theta_weights) * 2.0 * math.pi)

    def integrate(self, samples) -> complex:
        """Quadrature of samples shaped (..., n_theta, n_phi) over the sphere"""
        return np.sum(np.asarray(samples) * self.cell_weights, axis=(-2, -1))


def build_quadrature(L: int) -> QuadratureGrid:
    """Grid integrating products of harmonics up to degree L exactly"""
    L = max(int(L), 1)
    x, w = np.polynomial.legendre.leggauss(L + 1)
    order = np.argsort(-x)
    return QuadratureGrid(
        theta_nodes=np.arccos(x[order]),
        theta_weights=w[order],
        n_phi=2 * L + 1,
        band_limit=L,
    )


@dataclass(frozen=True)
class Cell:
    """One measurable piece E_{j,k} of a partition"""
    center: SpherePoint
    area: float
    diameter: float
    chart: Rotation


@dataclass(frozen=True, eq=False)
class Partition:
    """
    Iso-latitude partition at scale j stored band by band.

    Band k spans colatitudes [edges[k], edges[k+1]] and is split into
    cells_per_band[k] cells of equal longitude extent starting at -pi.
    """
    j: int
    a: float
    b: float
    band_edges: np.ndarray
    cells_per_band: np.ndarray
    band_areas: np.ndarray
    band_diameters: np.ndarray

    @property
    def delta(self) -> float:
        return self.b * self.a ** self.j

    @property
    def n_bands(self) -> int:
        return len(self.cells_per_band)

    @property
    def n_cells(self) -> int:
        return int(np.sum(self.cells_per_band))

    @property
    def band_theta(self) -> np.ndarray:
        return 0.5 * (self.band_edges[:-1] + self.band_edges[1:])

    @property
    def band_phi_offset(self) -> np.ndarray:
        return -math.pi + math.pi / self.cells_per_band

    @property
    def polar_bands(self) -> np.ndarray:
        mask = np.zeros(self.n_bands, dtype=bool)
        mask[0] = mask[-1] = True
        return mask

    def _per_cell(self, values) -> np.ndarray:
        return np.repeat(np.asarray(values), self.cells_per_band)

    def center_angles(self) -> Tuple[np.ndarray, np.ndarray]:
        theta = self._per_cell(self.band_theta)
        starts = np.concatenate([[0], np.cumsum(self.cells_per_band)[:-1]])
        index = np.arange(self.n_cells) - self._per_cell(starts)
        n = self._per_cell(self.cells_per_band)
        phi = -math.pi + (index + 0.5) * 2.0 * math.pi / n
        return theta, phi

    def centers(self) -> np.ndarray:
        return vectors_from_angles(*self.center_angles())

    def areas(self) -> np.ndarray:
        return self._per_cell(self.band_areas)

    def diameters(self) -> np.ndarray:
        return self._per_cell(self.band_diameters)

    def polar_mask(self) -> np.ndarray:
        return self._per_cell(self.polar_bands)

    def chart(self, k: int) -> Rotation:
        return POLAR_CHART if self.polar_mask()[k] else Rotation.identity()

    def cells(self) -> Iterator[Cell]:
        identity = Rotation.identity()
        centers, areas, diams, polar = self.centers(), self.areas(), self.diameters(), self.polar_mask()
        for k in range(self.n_cells):
            yield Cell(SpherePoint(centers[k]), float(areas[k]), float(diams[k]),
                       POLAR_CHART if polar[k] else identity)


def _longitude_gap(ta, tb, delta: float) -> np.ndarray:
    # largest longitude separation keeping points at colatitudes ta, tb within delta
    denom = np.sin(ta) * np.sin(tb)
    safe = np.where(denom > POLE_TOL, denom, 1.0)
    ratio = (math.cos(delta) - np.cos(ta) * np.cos(tb)) / safe
    gap = np.arccos(np.clip(ratio, -1.0, 1.0))
    return np.where(denom > POLE_TOL, gap, math.pi)


def _band_diameter(t1, t2, dphi) -> np.ndarray:
    # exact for dphi <= pi/2: the farthest pair of a cell sits on its corners
    def corner(ta, tb):
        u = np.stack([np.sin(ta), np.zeros_like(ta), np.cos(ta)], axis=-1)
        w = np.stack([np.sin(tb) * np.cos(dphi), np.sin(tb) * np.sin(dphi), np.cos(tb)], axis=-1)
        return _distance(u, w)
    return np.max(np.stack([corner(t1, t2), corner(t1, t1), corner(t2, t2), t2 - t1]), axis=0)


def _bands(delta: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n_bands = math.ceil(2.0 * math.pi / delta)
    edges = np.linspace(0.0, math.pi, n_bands + 1)
    t1, t2 = edges[:-1], edges[1:]
    gap = np.minimum.reduce([
        _longitude_gap(t1, t2, delta),
        _longitude_gap(t1, t1, delta),
        _longitude_gap(t2, t2, delta),
    ])
    with np.errstate(divide="ignore"):
        n = np.maximum(4, np.ceil(2.0 * math.pi / gap)).astype(np.int64)
    while True:
        diam = _band_diameter(t1, t2, 2.0 * math.pi / n)
        bad = diam > delta
        if not np.any(bad):
            break
        n = np.where(bad, n + 1, n)
    areas = 2.0 * math.pi / n * (np.cos(t1) - np.cos(t2))
    return edges, n, areas, diam


def build_partition(j: int, a: float, b: float) -> Partition:
    """Split the sphere into cells of diameter at most b * a**j"""
    if a <= 1.0:
        raise ValueError(f"dilation base a must exceed 1, got {a}")
    if not 0.0 < b < 1.0:
        raise ValueError(f"discretization parameter b must lie in (0, 1), got {b}")
    delta = b * a ** j
    if delta > math.pi:
        raise ScaleTooCoarse(f"b * a**j = {delta:.6g} exceeds pi at j = {j}")
    edges, n, areas, diam = _bands(delta)
    logger.debug(f"partition j={j}: {len(n)} bands, {int(n.sum())} cells, delta={delta:.4g}")
    return Partition(j=int(j), a=float(a), b=float(b), band_edges=edges,
                     cells_per_band=n, band_areas=areas, band_diameters=diam)


@lru_cache(maxsize=1)
def partition_constants() -> Tuple[float, float]:
    """(c0, delta0) such that every cell area is at least c0 * delta**2 when delta < delta0"""
    lo, hi, count = PARTITION_SWEEP
    ratios = []
    for delta in np.geomspace(lo, hi, count):
        _, _, areas, _ = _bands(float(delta))
        ratios.append(float(np.min(areas)) / delta ** 2)
    c0 = PARTITION_SAFETY * min(ratios)
    logger.debug(f"partition constants: c0={c0:.4g}, delta0={PARTITION_DELTA0:.4g}")
    return c0, PARTITION_DELTA0


def partition_to_dict(partition: Partition, expand_cells: bool = True) -> Dict[str, Any]:
    """
    JSON-ready form of a partition.

    Args:
        partition: Partition to serialize
        expand_cells: list every cell; otherwise write one record per band

    Returns:
        Dictionary with j, a, b and either "cells" or "bands"
    """
    data: Dict[str, Any] = {"j": partition.j, "a": partition.a, "b": partition.b}
    if expand_cells:
        theta, phi = partition.center_angles()
        areas, diams, polar = partition.areas(), partition.diameters(), partition.polar_mask()
        polar_matrix = POLAR_CHART.m.tolist()
        data["cells"] = [
            {
                "center": [float(theta[k]), float(phi[k])],
                "area": float(areas[k]),
                "diam": float(diams[k]),
                "chart": polar_matrix if polar[k] else ChartTag.IDENTITY.value,
            }
            for k in range(partition.n_cells)
        ]
    else:
        data["bands"] = [
            {
                "theta": [float(partition.band_edges[k]), float(partition.band_edges[k + 1])],
                "n": int(partition.cells_per_band[k]),
                "area": float(partition.band_areas[k]),
                "diam": float(partition.band_diameters[k]),
                "chart": ChartTag.POLAR.value if partition.polar_bands[k] else ChartTag.IDENTITY.value,
            }
            for k in range(partition.n_bands)
        ]
    return data


def partition_from_dict(data: Dict[str, Any]) -> Partition:
    """Rebuild a partition from its JSON form; the construction is deterministic"""
    partition = build_partition(int(data["j"]), float(data["a"]), float(data["b"]))
    expected: Optional[int] = None
    if "cells" in data:
        expected = len(data["cells"])
    elif "bands" in data:
        expected = sum(int(band["n"]) for band in data["bands"])
    if expected is not None and expected != partition.n_cells:
        raise ValueError(f"partition file lists {expected} cells, construction gives {partition.n_cells}")
    return partition


def random_points(rng: np.random.Generator, n: int) -> List[SpherePoint]:
    """Uniform random points on the sphere"""
    v = rng.standard_normal((n, 3))
    return [SpherePoint.from_vector(row) for row in v]
