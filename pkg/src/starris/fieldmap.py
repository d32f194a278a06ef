"""Deterministic power-density map around a STAR surface.

Elements are isotropic point scatterers on a planar grid whose normal is the
x axis; space A is ``x > 0`` and space B is ``x < 0``. A source's contribution
reaching a point on its own side is scaled by the element's reflection
coefficient, on the other side by its transmission coefficient. Propagation
uses free-space spherical spreading on both hops; the direct source-to-point
path is assumed blocked.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import TOL
from .em import StarCoefficients
from .errors import DomainError


@dataclass(frozen=True)
class ArrayGeometry:
    rows: int = 8
    cols: int = 8
    wavelength: float = 0.1
    spacing: Optional[float] = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("array needs at least one row and column")
        if self.wavelength <= 0:
            raise DomainError("wavelength must be positive")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.wavelength / 2.0)
        if self.spacing <= 0:
            raise DomainError("element spacing must be positive")

    @property
    def m_elements(self):
        return self.rows * self.cols

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def positions(self):
        """``(M, 3)`` element coordinates in the x = 0 plane, row-major."""
        y = (np.arange(self.cols) - (self.cols - 1) / 2.0) * self.spacing
        z = (np.arange(self.rows) - (self.rows - 1) / 2.0) * self.spacing
        zz, yy = np.meshgrid(z, y, indexing="ij")
        return np.column_stack([np.zeros(zz.size), yy.ravel(), zz.ravel()])


@dataclass(frozen=True)
class GridPlane:
    """Horizontal sampling plane ``z = height``; cells are sampled at their centres."""

    extent: tuple = (40.0, 40.0)
    resolution: tuple = (200, 200)
    center: tuple = (0.0, 0.0)
    height: float = 0.0

    def __post_init__(self):
        if min(self.resolution) < 2:
            raise DomainError("need at least two cells per axis")

    @property
    def axes(self):
        (wx, wy), (nx, ny), (cx, cy) = self.extent, self.resolution, self.center
        xs = cx - wx / 2 + (np.arange(nx) + 0.5) * wx / nx
        ys = cy - wy / 2 + (np.arange(ny) + 0.5) * wy / ny
        return xs, ys

    @property
    def cell(self):
        return self.extent[0] / self.resolution[0], self.extent[1] / self.resolution[1]


@dataclass(frozen=True)
class FieldGrid:
    x: np.ndarray
    y: np.ndarray
    power: np.ndarray  # (len(y), len(x)) W/m^2-proportional power density
    excluded: np.ndarray
    plane: GridPlane

    def index_of(self, point):
        return int(np.argmin(np.abs(self.y - point[1]))), int(np.argmin(np.abs(self.x - point[0])))


def side_of(points):
    """+1 for space A (x > 0), -1 for space B, 0 on the surface plane."""
    return np.sign(np.asarray(points, dtype=float)[..., 0]).astype(int)


def cophase_toward(geom, source_pos, target_pos, side_pairing):
    """Phases that bring every element's path from source to target into phase.

    ``side_pairing`` is ``'reflect'`` (source and target on one side) or
    ``'transmit'`` (opposite sides); it is checked against the positions.
    """
    s_src, s_tgt = side_of(source_pos), side_of(target_pos)
    if s_src == 0 or s_tgt == 0:
        raise DomainError("source and target must lie off the surface plane")
    expected = "reflect" if s_src == s_tgt else "transmit"
    if side_pairing != expected:
        raise DomainError(f"positions imply a {expected} path, not {side_pairing!r}")
    pos = geom.positions
    d = np.linalg.norm(pos - np.asarray(source_pos), axis=1) + np.linalg.norm(pos - np.asarray(target_pos), axis=1)
    # propagation carries exp(-jkd), so the coefficient phase must be +kd to cancel it
    return np.mod(geom.wavenumber * d, 2.0 * math.pi)


def compute_power_map(geom, coeffs, sources, plane=None):
    """Power density ``|E|^2`` on a horizontal plane.

    ``coeffs`` holds per-element arrays ``t`` and ``r``; ``sources`` is a list
    of ``(position, power_watts)``. Points closer than ``lambda/100`` to an
    element or a source, or lying on the surface plane, are excluded (power 0,
    flagged in ``excluded``).
    """
    plane = plane or GridPlane()
    xs, ys = plane.axes
    gx, gy = np.meshgrid(xs, ys)
    q = np.stack([gx, gy, np.full_like(gx, plane.height)], axis=-1)  # (ny, nx, 3)
    pos = geom.positions
    k = geom.wavenumber
    t = np.broadcast_to(np.asarray(coeffs.t, dtype=complex), (geom.m_elements,))
    r = np.broadcast_to(np.asarray(coeffs.r, dtype=complex), (geom.m_elements,))
    min_d = TOL.min_distance_wavelengths * geom.wavelength

    d_mq = np.linalg.norm(q[:, :, None, :] - pos[None, None, :, :], axis=-1)  # (ny, nx, M)
    q_side = side_of(q)
    excluded = (q_side == 0) | (d_mq.min(axis=-1) < min_d)
    near = d_mq < min_d
    d_safe = np.where(near, 1.0, d_mq)
    hop2 = np.where(near, 0.0, np.exp(-1j * k * d_safe) / (4.0 * math.pi * d_safe))

    field = np.zeros(gx.shape, dtype=complex)
    for src, power in sources:
        src = np.asarray(src, dtype=float)
        s_side = side_of(src)
        if s_side == 0:
            raise DomainError(f"source {tuple(src)} lies on the surface plane")
        d_sm = np.linalg.norm(pos - src, axis=1)
        if d_sm.min() < min_d:
            raise DomainError(f"source {tuple(src)} coincides with an element")
        hop1 = math.sqrt(power) * np.exp(-1j * k * d_sm) / (4.0 * math.pi * d_sm)
        via_r = hop2 @ (r * hop1)
        via_t = hop2 @ (t * hop1)
        field += np.where(q_side == s_side, via_r, via_t)
        excluded |= np.linalg.norm(q - src, axis=-1) < min_d

    power_map = np.where(excluded, 0.0, np.abs(field) ** 2)
    return FieldGrid(xs, ys, power_map, excluded, plane)


@dataclass(frozen=True)
class UplinkLayout:
    """Two-user uplink geometry: BS and user r on side A, user t on side B.

    The defaults place the BS inside the focusing zone of a 1 m-wavelength
    8x8 array, where cophasing produces a genuine focal spot. Farther out the
    1/d spreading of the second hop pulls the map maximum toward the surface
    along the beam direction. The users are deliberately not mirror images of
    each other: a mirrored pair would focus an equally strong replica beam at
    the mirror image of the BS.
    """

    bs: tuple = (1.1, 1.1, 0.0)
    user_r: tuple = (6.0, -8.0, 0.0)
    user_t: tuple = (-10.0, -3.0, 0.0)
    power: float = 0.01  # 10 dBm per user
    beta: float = 1.0 / math.sqrt(2.0)


def cophased_uplink(geom, layout=UplinkLayout(), beta_t=None, beta_r=None):
    """Coefficients steering user r (reflection) and user t (transmission) onto the BS."""
    beta_t = layout.beta if beta_t is None else beta_t
    beta_r = layout.beta if beta_r is None else beta_r
    phi_r = cophase_toward(geom, layout.user_r, layout.bs, "reflect")
    phi_t = cophase_toward(geom, layout.user_t, layout.bs, "transmit")
    return StarCoefficients(beta_t * np.exp(1j * phi_t), beta_r * np.exp(1j * phi_r))


def off_beam_mask(grid, origin, target, half_angle_deg=15.0):
    """Valid cells whose bearing from ``origin`` is more than ``half_angle_deg`` off the target bearing."""
    bearing = np.arctan2(grid.y[:, None] - origin[1], grid.x[None, :] - origin[0])
    aim = math.atan2(target[1] - origin[1], target[0] - origin[0])
    off = np.abs(np.angle(np.exp(1j * (bearing - aim)))) > math.radians(half_angle_deg)
    return off & ~grid.excluded


def peak_summary(grid, target, origin=(0.0, 0.0)):
    """Peak cell, its Chebyshev cell distance from ``target``, and the peak-to-off-beam-median ratio in dB."""
    iy, ix = np.unravel_index(np.argmax(grid.power), grid.power.shape)
    ty, tx = grid.index_of(target)
    median = float(np.median(grid.power[off_beam_mask(grid, origin, target)]))
    return {
        "peak": (float(grid.x[ix]), float(grid.y[iy])),
        "cell_distance": int(max(abs(iy - ty), abs(ix - tx))),
        "peak_over_median_db": 10.0 * math.log10(grid.power[iy, ix] / median),
    }
