"""Electromagnetic element model of a dual-sided STAR surface.

A thin element is described by scalar electric and magnetic sheet impedances.
The induced electric and magnetic surface currents re-radiate fields that,
added to the incident fields, give the signals leaving each face. For scalar
impedances the response is symmetric: one transmission coefficient ``t`` and
one reflection coefficient ``r`` serve both faces.

Space A is the half-space on the side of incident field ``E1``; space B is on
the side of ``E2``. Functions accept scalars or numpy arrays.
"""
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .config import ETA0, TOL
from .errors import ConfigError, DomainError, UndefinedPhaseError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ElementImpedance:
    z_e: complex
    z_m: complex
    eta: float = ETA0

    def __post_init__(self):
        if not np.all(np.asarray(self.eta) > 0):
            raise DomainError(f"wave impedance must be positive, got {self.eta}")

    @property
    def is_passive(self):
        return bool(np.all(np.real(self.z_e) >= 0) and np.all(np.real(self.z_m) >= 0))

    @property
    def is_lossless(self):
        return bool(np.all(np.real(self.z_e) == 0) and np.all(np.real(self.z_m) == 0))


@dataclass(frozen=True)
class StarCoefficients:
    """Transmission/reflection pair of one element (or an array of elements)."""

    t: complex
    r: complex

    @classmethod
    def from_polar(cls, beta_t, phi_t, beta_r, phi_r):
        return cls(beta_t * np.exp(1j * np.asarray(phi_t)), beta_r * np.exp(1j * np.asarray(phi_r)))

    @property
    def beta_t(self):
        return np.abs(self.t)

    @property
    def beta_r(self):
        return np.abs(self.r)

    @property
    def phi_t(self):
        return np.mod(np.angle(self.t), TWO_PI)

    @property
    def phi_r(self):
        return np.mod(np.angle(self.r), TWO_PI)

    def is_passive(self, eps=TOL.passivity):
        return bool(np.all(passivity_excess(self) <= eps))


@dataclass(frozen=True)
class IncidentSet:
    """Plane waves hitting one face: ``(angle, signal)`` pairs, angle in radians."""

    waves: tuple = field(default_factory=tuple)

    def __post_init__(self):
        waves = tuple((float(a), complex(s)) for a, s in self.waves)
        for angle, _ in waves:
            if not -np.pi / 2 < angle < np.pi / 2:
                raise DomainError(f"incidence angle {angle} outside (-pi/2, pi/2)")
        object.__setattr__(self, "waves", waves)

    def __iter__(self):
        return iter(self.waves)

    def __len__(self):
        return len(self.waves)


@dataclass(frozen=True)
class FieldState:
    e_inc_1: complex
    e_inc_2: complex
    e_j: complex
    e_k1: complex
    e_k2: complex
    e_rec_a: complex
    e_rec_b: complex


def _denominators(imp):
    electric = 2.0 * np.asarray(imp.z_e) + imp.eta
    magnetic = np.asarray(imp.z_m) + 2.0 * imp.eta
    if np.any(electric == 0):
        raise DomainError("pole: 2*z_e + eta == 0")
    if np.any(magnetic == 0):
        raise DomainError("pole: z_m + 2*eta == 0")
    return electric, magnetic


def coefficients_from_impedance(imp):
    electric, magnetic = _denominators(imp)
    z_e, z_m, eta = imp.z_e, imp.z_m, imp.eta
    t = 2.0 * z_e / electric - z_m / magnetic
    r = z_m / magnetic - eta / electric
    return StarCoefficients(t, r)


def induced_fields(imp, e_inc_1, e_inc_2):
    """Fields radiated by the induced surface currents and the total fields per face.

    The electric current radiates ``e_j`` symmetrically into both half-spaces;
    the magnetic current radiates ``e_k1`` into space A and ``-e_k1`` into B.
    """
    electric, magnetic = _denominators(imp)
    e_j = -imp.eta * (e_inc_1 + e_inc_2) / electric
    e_k1 = imp.z_m * (e_inc_1 - e_inc_2) / magnetic
    e_k2 = -e_k1
    return FieldState(
        e_inc_1=e_inc_1,
        e_inc_2=e_inc_2,
        e_j=e_j,
        e_k1=e_k1,
        e_k2=e_k2,
        e_rec_a=e_j + e_k1 + e_inc_2,
        e_rec_b=e_j + e_k2 + e_inc_1,
    )


def scatter(s_a, s_b, c):
    """Signals leaving faces A and B for incident signals ``s_a``, ``s_b``."""
    return c.r * s_a + c.t * s_b, c.t * s_a + c.r * s_b


def superpose(side_a, side_b, coeffs):
    """Angle-resolved superposition of all waves incident on both faces.

    ``coeffs`` maps incidence angle to :class:`StarCoefficients`; a single
    :class:`StarCoefficients` applies to every angle.
    """

    def lookup(angle):
        if isinstance(coeffs, StarCoefficients):
            return coeffs
        if not isinstance(coeffs, Mapping) or angle not in coeffs:
            raise ConfigError(f"no coefficients for incidence angle {angle!r}", key=angle)
        return coeffs[angle]

    out_a = 0j
    out_b = 0j
    for angle, s in side_a:
        c = lookup(angle)
        out_a += c.r * s
        out_b += c.t * s
    for angle, s in side_b:
        c = lookup(angle)
        out_a += c.t * s
        out_b += c.r * s
    return out_a, out_b


def effective_dual_coefficients(t0, r0, beta):
    """Effective coefficients under asymmetric dual incidence.

    ``beta`` is the amplitude ratio E2/E1 of the incident fields. Returns
    ``(t_ab, t_ba, r_a, r_b)``.
    """
    if not np.all(np.asarray(beta) > 0):
        raise DomainError(f"amplitude ratio must be positive, got {beta}")
    return t0 + beta * r0, t0 + r0 / beta, r0 + beta * t0, r0 + t0 / beta


def passivity_excess(c):
    """``|t|^2 + |r|^2 - 1``: negative for lossy, zero for lossless elements."""
    return np.abs(c.t) ** 2 + np.abs(c.r) ** 2 - 1.0


def lossless_phase_gap(c):
    """Wrapped phase difference ``phi_t - phi_r`` in (-pi, pi]."""
    if np.any(np.abs(c.t) == 0) or np.any(np.abs(c.r) == 0):
        raise UndefinedPhaseError("phase of a zero-amplitude coefficient is undefined")
    gap = np.angle(c.t * np.conj(c.r))
    return np.where(gap == -np.pi, np.pi, gap) if np.ndim(gap) else (np.pi if gap == -np.pi else float(gap))
