"""Deterministic Monte Carlo estimation of outage probabilities.

Trials are split into fixed-size blocks. Every block draws from its own
random stream derived from ``(seed, block index)``, and blocks only return
integer event counts, so the totals do not depend on how blocks are spread
over worker processes.
"""
import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .access import (
    Scheme,
    User,
    cophase_coefficients,
    noma_outage_events,
    noma_sinrs,
    oma_snr_and_outage,
)
from .channels import draw_realization

MASK64 = (1 << 64) - 1
BLOCK_SIZE = 8192
Z95 = 1.959963984540054


def splitmix64(x):
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed, *indices):
    """Fold indices into a 64-bit seed with the splitmix64 finaliser."""
    z = splitmix64(int(seed) & MASK64)
    for i in indices:
        z = splitmix64(z ^ (int(i) & MASK64))
    return z


def block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(mix_seed(seed, block)))


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    trials: int
    ci_half_width: float
    count: int = 0

    @classmethod
    def from_count(cls, count, trials, z=Z95):
        """95% interval: normal approximation, Wilson score when either tail has < 10 hits."""
        count, trials = int(count), int(trials)
        p = count / trials
        if min(count, trials - count) < 10:
            denom = 1.0 + z * z / trials
            half = z / denom * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
        else:
            half = z * math.sqrt(p * (1.0 - p) / trials)
        return cls(p, trials, half, count)

    @property
    def interval(self):
        return max(0.0, self.p_hat - self.ci_half_width), min(1.0, self.p_hat + self.ci_half_width)


def _run_block(block_fn, seed, trials, block_size, block):
    n = min(block_size, trials - block * block_size)
    return np.asarray(block_fn(block_rng(seed, block), n), dtype=np.int64)


def count_events(block_fn, trials, seed, workers=1, block_size=BLOCK_SIZE):
    """Sum integer event counts ``block_fn(rng, n)`` over all blocks of ``trials``.

    ``block_fn`` must be picklable when ``workers > 1``.
    """
    n_blocks = -(-trials // block_size)
    job = partial(_run_block, block_fn, seed, trials, block_size)
    if workers <= 1:
        parts = [job(b) for b in range(n_blocks)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(n_blocks)))
    return np.sum(parts, axis=0)


def outage_block(scenario, rng, n):
    """Outage counts ``[user r, user t]`` for ``n`` independent channel draws."""
    real = draw_realization(scenario.links, scenario.m_elements, rng, n)
    if scenario.scheme is Scheme.NOMA:
        sinrs = noma_sinrs(real, scenario, cophase_coefficients(real, scenario))
        out_r, out_t = noma_outage_events(sinrs, scenario)
    else:
        _, out_r = oma_snr_and_outage(real, scenario, User.R)
        _, out_t = oma_snr_and_outage(real, scenario, User.T)
    return [int(np.count_nonzero(out_r)), int(np.count_nonzero(out_t))]


def run_point(scenario, trials, seed, workers=1):
    """Full-SNR outage estimates ``(user r, user t)`` for one scenario."""
    counts = count_events(partial(outage_block, scenario), trials, seed, workers)
    return OutageEstimate.from_count(counts[0], trials), OutageEstimate.from_count(counts[1], trials)


class SweepVariable(str, enum.Enum):
    TRANSMIT_SNR_DB = "transmit_snr_db"
    BETA_T = "beta_t"
    M = "m"


VARIANTS = ("noma_perfect_sic", "noma_imperfect_sic", "oma")


@dataclass(frozen=True)
class SweepSpec:
    scenario: object
    sweep_variable: SweepVariable
    grid: tuple
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        from .errors import DomainError

        object.__setattr__(self, "sweep_variable", SweepVariable(self.sweep_variable))
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        if not self.grid:
            raise DomainError("sweep grid is empty")
        if list(self.grid) != sorted(self.grid):
            raise DomainError("sweep grid must be sorted")
        if self.trials < 1000:
            raise DomainError("need at least 1000 trials per point")
        if not 0 <= self.seed <= MASK64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    variant: str
    user: str
    p_hat: float
    ci: float
    trials: int
    seed: int


def apply_sweep_value(scenario, variable, value):
    variable = SweepVariable(variable)
    if variable is SweepVariable.TRANSMIT_SNR_DB:
        return scenario.with_snr_db(value)
    if variable is SweepVariable.BETA_T:
        return scenario.with_beta_t(value)
    return replace(scenario, m_elements=int(round(value)))


def variant_scenario(scenario, variant):
    if variant == "noma_perfect_sic":
        return replace(scenario, scheme=Scheme.NOMA, alpha0=0.0)
    if variant == "noma_imperfect_sic":
        return replace(scenario, scheme=Scheme.NOMA)
    if variant == "oma":
        return replace(scenario, scheme=Scheme.OMA)
    raise ValueError(f"unknown variant {variant!r}")


def run_sweep(spec, workers=1, variants=VARIANTS):
    rows = []
    for i, value in enumerate(spec.grid):
        point = apply_sweep_value(spec.scenario, spec.sweep_variable, value)
        for v in variants:
            seed = mix_seed(spec.seed, i, VARIANTS.index(v))
            est_r, est_t = run_point(variant_scenario(point, v), spec.trials, seed, workers)
            for user, est in (("r", est_r), ("t", est_t)):
                rows.append(SweepRow(value, v, user, est.p_hat, est.ci_half_width, est.trials, seed))
    return rows


SWEEP_COLUMNS = ("sweep_value", "variant", "user", "p_hat", "ci", "trials", "seed")


def sweep_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([repr(r.sweep_value), r.variant, r.user, repr(r.p_hat), repr(r.ci), r.trials, r.seed])
    return buf.getvalue()
