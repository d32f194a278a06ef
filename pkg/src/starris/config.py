"""Physical constants, tolerance settings and unit conversions.

All internal computations use linear SI quantities. dB conversions live here
and are only called from the command-line layer and the experiment scripts.
"""
from dataclasses import dataclass

import numpy as np

ETA0 = 376.730313668  # free-space wave impedance, ohms
SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class Tolerances:
    passivity: float = 1e-12
    roundtrip: float = 1e-12
    series: float = 1e-12
    series_cap: int = 200
    pdf_floor: float = 1e-300
    normalization: float = 1e-4
    normalization_drift: float = 1e-3
    ratio_regime: float = 3.0
    min_distance_wavelengths: float = 1e-2


TOL = Tolerances()

# Defaults of the numerical study: K = 1.3 dB, path-loss exponent 2.2,
# noise -50 dBm, target rates 1.5 bit/s/Hz.
DEFAULT_K_DB = 1.3
DEFAULT_PATHLOSS_EXPONENT = 2.2
DEFAULT_NOISE_DBM = -50.0
DEFAULT_RATE = 1.5
DEFAULT_USER_DISTANCE = 10.0
DEFAULT_BS_DISTANCE = 50.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm):
    return db_to_linear(np.asarray(dbm) - 30.0) if np.ndim(dbm) else db_to_linear(dbm - 30.0)


def watts_to_dbm(w):
    return 10.0 * np.log10(w) + 30.0


def rate_threshold(rate):
    """SINR threshold ``2**rate - 1`` for a target rate in bit/s/Hz."""
    return 2.0 ** rate - 1.0
