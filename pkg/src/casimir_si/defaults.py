"""Reconstructed model parameters behind the shipped default data files.

The optical tables in ``data/`` are sampled from these oscillator models and
the roughness profiles reproduce the quoted zero levels (15.35 nm on the
sphere, 0.545 nm on the plate) within the quoted height ranges. None of this
is measured data; replace the files to use real tables or AFM histograms.
"""
from scipy.constants import e, hbar

_EV = e / hbar
_WP_LD = 9.03 * _EV

# (strength, omega_0 [rad/s], damping [rad/s]) -- Lorentz-Drude interband terms for gold
GOLD_OSCILLATORS = tuple(
    (f * _WP_LD**2 / (w * _EV) ** 2, w * _EV, g * _EV)
    for f, w, g in [
        (0.024, 0.415, 0.241),
        (0.010, 0.830, 0.345),
        (0.071, 2.969, 0.870),
        (0.601, 4.304, 2.494),
        (4.384, 13.32, 2.214),
    ]
)

# one strong interband oscillator (static eps 11.87) and a weak far-UV term
SILICON_EPS_INF = 1.0
SILICON_OSCILLATORS = (
    (10.835, 6.6e15, 6.6e14),
    (0.035, 3.0e16, 1.0e16),
)

# (fraction, height in nm)
SPHERE_ROUGHNESS = (
    (0.08, 11.0),
    (0.22, 13.0),
    (0.32, 15.0),
    (0.245, 17.0),
    (0.105, 19.0),
    (0.02, 20.0),
    (0.01, 25.0),
)
PLATE_ROUGHNESS = (
    (0.05, 0.3),
    (0.05, 0.4),
    (0.30, 0.5),
    (0.60, 0.6),
)
