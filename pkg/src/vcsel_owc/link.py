"""APD receiver noise, per-subcarrier SNR/SINR and DCO-OFDM data rate.

Power convention: every function here takes the optical power *before* the
APD gain (``p_opt``).  The photocurrent is ``R * G * p_opt`` and the shot and
RIN terms carry their own gain factors, so the gain is applied exactly once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

BOLTZMANN = 1.380649e-23
ELECTRON_CHARGE = 1.602176634e-19


@dataclass(frozen=True)
class ApdNoiseLedger:
    """Receiver constants.  SI units throughout; ``rin`` is linear (1/Hz).

    ``noise_floor_psd`` (A^2/Hz), when set, replaces the signal-dependent
    thermal + shot + RIN sum by a fixed value.  Use :func:`freeze_noise` or
    :func:`calibrate_noise_floor` to build one.
    """

    b_l: float = 1.5e9
    a_eff: float = math.pi * 0.25 * 0.25 * 1e-4
    psi_c: float = math.radians(60.0)
    g_apd: float = 30.0
    r_apd: float = 0.9
    rin: float = 10 ** (-15.5)
    r_f: float = 50.0
    temperature: float = 300.0
    k_a: float = 0.7
    p_n: float = 1e-6
    k_b: float = BOLTZMANN
    q: float = ELECTRON_CHARGE
    noise_floor_psd: float | None = None

    def __post_init__(self):
        for name in ("b_l", "a_eff", "psi_c", "g_apd", "r_apd", "r_f", "k_b", "q"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("rin", "temperature", "p_n"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 < self.k_a < 1:
            raise ValueError("k_a must lie in (0, 1)")
        if self.noise_floor_psd is not None and self.noise_floor_psd <= 0:
            raise ValueError("noise_floor_psd must be positive when given")


@dataclass(frozen=True)
class OfdmParams:
    m_sub: int = 512
    kappa: float = 3.0

    def __post_init__(self):
        if self.m_sub < 4 or self.m_sub % 2:
            raise ValueError("m_sub must be an even integer >= 4")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


class NoisePsd(NamedTuple):
    thermal: np.ndarray
    shot: np.ndarray
    rin: np.ndarray


def excess_noise_factor(ledger: ApdNoiseLedger) -> float:
    g, k = ledger.g_apd, ledger.k_a
    return k * g + (1.0 - k) * (2.0 - 1.0 / g)


def noise_psd_components(ledger: ApdNoiseLedger, p_opt) -> NoisePsd:
    """Thermal, shot and RIN current PSDs (A^2/Hz) at pre-gain power ``p_opt``."""
    p = np.asarray(p_opt, dtype=float)
    g, r = ledger.g_apd, ledger.r_apd
    thermal = np.full_like(p, 4.0 * ledger.k_b * ledger.temperature / ledger.r_f)
    shot = 2.0 * ledger.q * g * g * excess_noise_factor(ledger) * r * (p + ledger.p_n)
    rin = ledger.rin * (r * g * p) ** 2
    return NoisePsd(thermal, shot, rin)


def total_noise_per_subcarrier(ledger: ApdNoiseLedger, ofdm: OfdmParams, p_opt):
    """Noise power per subcarrier, ``sigma_n^2`` in A^2."""
    p = np.asarray(p_opt, dtype=float)
    if ledger.noise_floor_psd is not None:
        psd = np.full_like(p, ledger.noise_floor_psd)
    else:
        psd = sum(noise_psd_components(ledger, p))
    return psd * ledger.b_l / ofdm.m_sub


def _signal_sq(ledger: ApdNoiseLedger, p):
    return (ledger.r_apd * ledger.g_apd * np.asarray(p, dtype=float)) ** 2


def snr_per_subcarrier(ledger: ApdNoiseLedger, ofdm: OfdmParams, p_opt):
    """Electrical SNR on each information-bearing subcarrier (linear)."""
    sig = _signal_sq(ledger, p_opt)
    den = (ofdm.m_sub - 2) * ofdm.kappa**2 * total_noise_per_subcarrier(ledger, ofdm, p_opt)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(sig > 0, sig / den, 0.0)


def sinr_with_ici(ledger: ApdNoiseLedger, ofdm: OfdmParams, p_signal, p_interferers):
    """SINR with co-channel beams treated as Gaussian noise.

    ``p_interferers`` holds pre-gain powers; for array input the interferers
    run along the last axis (shape ``p_signal.shape + (J,)``).
    """
    p_signal = np.asarray(p_signal, dtype=float)
    p_int = np.asarray(p_interferers, dtype=float)
    if p_int.size == 0:
        interference = np.zeros_like(p_signal)
    else:
        interference = np.sum(_signal_sq(ledger, p_int), axis=-1)
    sig = _signal_sq(ledger, p_signal)
    den = interference + (ofdm.m_sub - 2) * ofdm.kappa**2 * \
        total_noise_per_subcarrier(ledger, ofdm, p_signal)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(sig > 0, sig / den, 0.0)


def rate_prefactor(ofdm: OfdmParams, b_l: float) -> float:
    """Bandwidth actually carrying data: (M/2 - 1)/M * B_L."""
    return (ofdm.m_sub / 2 - 1) / ofdm.m_sub * b_l


def data_rate(ofdm: OfdmParams, b_l: float, gamma):
    """Shannon rate (bit/s) summed over the M/2 - 1 data subcarriers."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SNR must be non-negative")
    return rate_prefactor(ofdm, b_l) * np.log2(1.0 + gamma)


def freeze_noise(ledger: ApdNoiseLedger, p_ref: float) -> ApdNoiseLedger:
    """Fix the noise PSD at its value for received power ``p_ref``.

    The closed-form central-beam statistics assume a position-independent
    noise level; this produces a ledger with exactly that property.
    """
    psd = float(sum(noise_psd_components(replace(ledger, noise_floor_psd=None), p_ref)))
    return replace(ledger, noise_floor_psd=psd)


def calibrate_noise_floor(ledger: ApdNoiseLedger, ofdm: OfdmParams, p_peak: float,
                          target_snr_db: float) -> ApdNoiseLedger:
    """Fixed noise PSD giving ``target_snr_db`` at pre-gain power ``p_peak``."""
    target = 10 ** (target_snr_db / 10)
    sigma2 = _signal_sq(ledger, p_peak) / ((ofdm.m_sub - 2) * ofdm.kappa**2 * target)
    return replace(ledger, noise_floor_psd=float(sigma2 * ofdm.m_sub / ledger.b_l))


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)
