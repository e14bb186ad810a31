"""Regenerate the default optical tables shipped in src/casimir_si/data.

The handbook tables are not redistributed here. These files are sampled from
Drude-Lorentz oscillator models tuned to handbook-like behaviour and written
in the same (omega, n, k) layout, so a real table can be dropped in instead.
"""
from pathlib import Path

import numpy as np

from casimir_si.defaults import GOLD_OSCILLATORS, SILICON_OSCILLATORS, SILICON_EPS_INF
from casimir_si.materials import (
    GOLD_DRUDE, SI_RHO_TABLE, SI_TAU, DrudeParams, lorentz_drude_eps, plasma_frequency_from_resistivity,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "casimir_si" / "data"
OMEGA = np.logspace(13, 18, 5 * 200 + 1)


def write_nk(path, eps, comments):
    nk = np.sqrt(eps)
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write("omega_rad_s,n,k\n")
        for w, v in zip(OMEGA, nk):
            fh.write(f"{w:.8e},{v.real:.10e},{v.imag:.10e}\n")


def main():
    au = lorentz_drude_eps(OMEGA, GOLD_DRUDE, GOLD_OSCILLATORS)
    write_nk(OUT / "gold_nk.csv", au, [
        "Au optical constants, reconstructed (Drude-Lorentz model sampled on a log grid)",
        "Drude omega_p=1.37e16 rad/s gamma=5.3e13 rad/s plus five interband oscillators",
        "regenerate with tools/generate_default_tables.py",
    ])
    si_drude = DrudeParams(plasma_frequency_from_resistivity(SI_RHO_TABLE, SI_TAU), 1 / SI_TAU)
    si = lorentz_drude_eps(OMEGA, si_drude, SILICON_OSCILLATORS, SILICON_EPS_INF)
    write_nk(OUT / "silicon_nk.csv", si, [
        "Si (high resistivity, 1000 Ohm cm) optical constants, reconstructed",
        "interband Lorentz oscillators (static eps ~ 11.87) plus free carriers for 1000 Ohm cm",
        "regenerate with tools/generate_default_tables.py",
    ])


if __name__ == "__main__":
    main()
