"""Corneal exposure limits for the 850 nm and 1550 nm bands and the largest
transmit power that keeps a Gaussian beam below them."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .channel import BeamParams, beam_width

Z_MPH = 0.1  # most hazardous position for a point-like source (<1.5 mrad), m
DEFAULT_T_EXP = 100.0


class MpeValue(NamedTuple):
    e_mpe: float  # W/m^2
    d_a: float    # m


def c4(wavelength_nm: float) -> float:
    return 10 ** (0.002 * (wavelength_nm - 700.0))


def _band(wavelength: float) -> int:
    nm = wavelength * 1e9
    for band in (1550, 850):
        if abs(nm - band) < 0.5:
            return band
    raise ValueError(f"no exposure table for {nm:.1f} nm (only 850 and 1550 nm)")


def mpe_lookup(wavelength: float, t_exp: float) -> MpeValue:
    """Maximum permissible exposure and limiting aperture for exposure ``t_exp``.

    Raises ``ValueError`` outside the tabulated duration ranges.
    """
    band = _band(wavelength)
    if band == 1550:
        if 10.0 <= t_exp <= 1e3:
            return MpeValue(1000.0, 3.5e-3)
        if 0.35 <= t_exp < 10.0:
            return MpeValue(1e4 / t_exp, 1.5e-3 * t_exp ** 0.375)
        raise ValueError(f"t_exp={t_exp} s outside [0.35, 1000] s for 1550 nm")
    k4, k7 = c4(850.0), 1.0
    if 10.0 <= t_exp <= 1e3:
        return MpeValue(10.0 * k4 * k7, 7e-3)
    if 1e-3 <= t_exp < 10.0:
        return MpeValue(18.0 * t_exp ** 0.75 * k4 / t_exp, 7e-3)
    raise ValueError(f"t_exp={t_exp} s outside [1e-3, 1000] s for 850 nm")


def exposure_level(beam: BeamParams, p_tx: float, z, d_a: float):
    """Mean irradiance over a pupil of diameter ``d_a`` centred on the axis."""
    w = beam_width(beam, z)
    return p_tx / (math.pi * (d_a / 2) ** 2) * -np.expm1(-d_a**2 / (2.0 * w**2))


def max_transmit_power(wavelength: float, theta_fwhm_deg: float,
                       t_exp: float = DEFAULT_T_EXP) -> float:
    """Largest optical power whose exposure at ``Z_MPH`` equals the MPE."""
    mpe = mpe_lookup(wavelength, t_exp)
    beam = BeamParams.from_fwhm(wavelength, theta_fwhm_deg, 1.0)
    w = float(beam_width(beam, Z_MPH))
    return math.pi * mpe.d_a**2 * mpe.e_mpe / (4.0 * -math.expm1(-mpe.d_a**2 / (2.0 * w * w)))


def is_eye_safe(beam: BeamParams, t_exp: float = DEFAULT_T_EXP) -> bool:
    return beam.p_tx_opt <= max_transmit_power(
        beam.wavelength, math.degrees(beam.theta_fwhm), t_exp) * (1 + 1e-12)
