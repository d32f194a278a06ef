"""Link-level toolkit for STAR surface aided two-user uplinks.

Submodules: ``em`` (element coefficients), ``channels`` (Rician cascades and
their densities), ``access`` (NOMA/OMA metrics), ``analysis`` (high-SNR
floors), ``sim`` (seeded Monte Carlo), ``fieldmap`` (power maps), ``cli``.
"""
__version__ = "0.1.0"
