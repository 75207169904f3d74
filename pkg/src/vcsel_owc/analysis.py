"""Closed-form statistics of the central beam.

A user dropped uniformly in the equal-area disk of radius
``R = d_cell / sqrt(pi)`` under the straight-down beam sees

    snr(r) = gamma0 / (h^2 + r^2) * exp(-4 r^2 / W(h)^2)

when the receiver noise does not depend on position.  Everything here
follows from that expression: the SNR density in dB (exact, through the
Lambert W function, and its uniform approximation), the mean rate, and the
single- and multi-user rate bounds.  The simulator is checked against these.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .channel import BeamParams, beam_width
from .link import (ApdNoiseLedger, OfdmParams, rate_prefactor,
                   total_noise_per_subcarrier)

_INV_E = math.exp(-1.0)
LN10_OVER_10 = math.log(10.0) / 10.0
HIGH_SNR_DB = 15.0


# --------------------------------------------------------------------------
# Lambert W, principal branch
# --------------------------------------------------------------------------

def lambert_w0(x, tol: float = 1e-15, max_iter: int = 50):
    """Principal branch ``W0(x)`` for real ``x >= -1/e``, via Halley's method.

    Starts from the branch-point series near ``-1/e``, ``log1p(x)`` for
    moderate ``x`` and ``log x - log log x`` for large ``x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < -_INV_E * (1 + 1e-15)) or np.any(np.isnan(x)):
        raise ValueError("lambert_w0 is real only for x >= -1/e")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)

    p = np.sqrt(np.clip(2.0 * (math.e * np.minimum(x, 0.0) + 1.0), 0.0, None))
    w = np.where(x < -0.3, -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3, np.log1p(np.maximum(x, -0.3)))
    big = x > 3.0
    lx = np.log(np.where(big, x, 3.0))
    w = np.where(big, lx - np.log(lx), w)

    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        wa, xa = w[active], x[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        wp1 = wa + 1.0
        safe = np.abs(wp1) > 1e-300
        denom = ew * wp1 - (wa + 2.0) * f / (2.0 * np.where(safe, wp1, 1.0))
        step = np.where(safe & (denom != 0), f / np.where(denom != 0, denom, 1.0), 0.0)
        w[active] = wa - step
        done = np.abs(step) <= tol * (1.0 + np.abs(w[active]))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    w = np.maximum(w, -1.0)
    return float(w[0]) if scalar else w


def lambert_w0_shifted(c, delta, max_iter: int = 50):
    """``W0(c * exp(c + delta)) - c`` for ``c > 0``, ``delta >= 0``.

    The argument overflows double precision whenever ``c`` exceeds ~700, and
    subtracting ``c`` afterwards would cancel most digits; instead solve
    ``u + log1p(u / c) = delta`` (the defining identity rewritten in ``u``)
    by Newton's method, which is well conditioned for all ``c``.
    """
    c = np.asarray(c, dtype=float)
    delta = np.asarray(delta, dtype=float)
    u = delta * c / (c + 1.0)
    for _ in range(max_iter):
        g = u + np.log1p(u / c) - delta
        step = g / (1.0 + 1.0 / (c + u))
        u = u - step
        if np.all(np.abs(step) <= 1e-16 * (1.0 + np.abs(u))):
            break
    return u


# --------------------------------------------------------------------------
# central beam
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CentralBeamParams:
    h: float
    r_max: float
    w_h: float
    gamma0: float

    def __post_init__(self):
        if self.h <= 0 or self.r_max <= 0 or self.w_h <= 0 or self.gamma0 <= 0:
            raise ValueError("central-beam parameters must be positive")

    @property
    def c(self) -> float:
        """``4 h^2 / W(h)^2``, the Lambert-W offset."""
        return 4.0 * self.h**2 / self.w_h**2


def equal_area_radius(d_cell: float) -> float:
    return math.sqrt(d_cell**2 / math.pi)


def central_beam_params(beam: BeamParams, ledger: ApdNoiseLedger, ofdm: OfdmParams,
                        h: float, d_cell: float,
                        sigma_n2: float | None = None) -> CentralBeamParams:
    """Collect the constants of the central-beam SNR law.

    ``sigma_n2`` defaults to the per-subcarrier noise at the cell centre (or
    the ledger's fixed noise floor, when it has one).
    """
    w_h = float(beam_width(beam, h))
    if sigma_n2 is None:
        p_center = 2.0 * beam.p_tx_opt * ledger.a_eff / (math.pi * w_h**2)
        sigma_n2 = float(total_noise_per_subcarrier(ledger, ofdm, p_center))
    amp = (2.0 * ledger.r_apd * beam.p_tx_opt * ledger.a_eff * ledger.g_apd * h
           / (math.pi * w_h**2 * math.sqrt(ofdm.m_sub - 2) * ofdm.kappa * math.sqrt(sigma_n2)))
    return CentralBeamParams(h, equal_area_radius(d_cell), w_h, amp * amp)


def snr_central(cb: CentralBeamParams, r):
    r = np.asarray(r, dtype=float)
    return cb.gamma0 / (cb.h**2 + r**2) * np.exp(-4.0 * r**2 / cb.w_h**2)


def snr_db_central(cb: CentralBeamParams, r):
    r = np.asarray(r, dtype=float)
    return (10.0 * np.log10(cb.gamma0 / (cb.h**2 + r**2))
            - 40.0 * r**2 / (cb.w_h**2 * math.log(10.0)))


def snr_db_support(cb: CentralBeamParams) -> tuple[float, float]:
    return float(snr_db_central(cb, cb.r_max)), float(snr_db_central(cb, 0.0))


def radius_from_snr_db(cb: CentralBeamParams, gamma_db):
    """Invert :func:`snr_db_central`: the radius ``r0`` giving SNR ``gamma_db``.

    Equivalent to ``r0 = sqrt(W^2 * W0(4 gamma0 / W^2 * exp(c - ln10/10 * y)) - 4 h^2) / 2``
    with ``c = 4 h^2 / W^2``, evaluated through :func:`lambert_w0_shifted`.
    """
    top = 10.0 * math.log10(cb.gamma0 / cb.h**2)
    delta = np.maximum(top - np.asarray(gamma_db, dtype=float), 0.0) * LN10_OVER_10
    u = lambert_w0_shifted(cb.c, delta)
    return 0.5 * cb.w_h * np.sqrt(np.maximum(u, 0.0))


def _in_support(cb, g):
    lo, hi = snr_db_support(cb)
    span = hi - lo
    return (g >= lo - 1e-12 * span) & (g <= hi + 1e-12 * span)


def snr_pdf_exact(cb: CentralBeamParams, gamma_db):
    """Density of the central-beam SNR in dB (per dB); zero off the support."""
    g = np.asarray(gamma_db, dtype=float)
    r0 = radius_from_snr_db(cb, g)
    h2, w2 = cb.h**2, cb.w_h**2
    f = (math.log(10.0) * (h2 + r0**2) * w2
         / (10.0 * cb.r_max**2 * (4.0 * h2 + 4.0 * r0**2 + w2)))
    return np.where(_in_support(cb, g), f, 0.0)


def snr_pdf_uniform(cb: CentralBeamParams, gamma_db):
    """Uniform approximation to :func:`snr_pdf_exact` (drops ``r0^2`` next to ``h^2``)."""
    g = np.asarray(gamma_db, dtype=float)
    h2, w2 = cb.h**2, cb.w_h**2
    f = math.log(10.0) * h2 * w2 / (10.0 * cb.r_max**2 * (4.0 * h2 + w2))
    return np.where(_in_support(cb, g), f, 0.0)


def snr_cdf_exact(cb: CentralBeamParams, gamma_db):
    """``P(SNR_dB <= gamma_db)`` for ``r`` with density ``2r/R^2``."""
    g = np.asarray(gamma_db, dtype=float)
    lo, hi = snr_db_support(cb)
    r0 = radius_from_snr_db(cb, np.clip(g, lo, hi))
    cdf = 1.0 - np.minimum(r0 / cb.r_max, 1.0) ** 2
    return np.where(g < lo, 0.0, np.where(g >= hi, 1.0, cdf))


def snr_cdf_uniform(cb: CentralBeamParams, gamma_db):
    lo, hi = snr_db_support(cb)
    return np.clip((np.asarray(gamma_db, dtype=float) - lo) / (hi - lo), 0.0, 1.0)


# --------------------------------------------------------------------------
# rates and bounds
# --------------------------------------------------------------------------

class CentralRate(NamedTuple):
    rate: float
    min_snr_db: float
    high_snr: bool  # False: the log(1+x) ~ log(x) step is not trustworthy


def avg_rate_central(cb: CentralBeamParams, ofdm: OfdmParams, b_l: float) -> CentralRate:
    """Mean rate of the central beam, high-SNR closed form."""
    h2, R2, w2 = cb.h**2, cb.r_max**2, cb.w_h**2
    # (h2 + R2) ln(g0 / (h2 + R2)) + R2 - h2 ln(g0 / h2) - 2 R2^2 / w2, regrouped
    # so that small cells do not cancel two nearly equal logarithms
    bracket = (R2 * math.log(cb.gamma0 / (h2 + R2)) - h2 * math.log1p(R2 / h2) + R2
               - 2.0 * R2 * R2 / w2)
    rate = (ofdm.m_sub - 2) / (2.0 * math.log(2.0) * ofdm.m_sub * R2) * b_l * bracket
    min_db = float(snr_db_central(cb, cb.r_max))
    return CentralRate(rate, min_db, min_db >= HIGH_SNR_DB)


def avg_rate_central_quad(cb: CentralBeamParams, ofdm: OfdmParams, b_l: float) -> float:
    """Mean of the exact Shannon rate over ``r ~ 2r/R^2``, by adaptive quadrature."""
    def integrand(r):
        return math.log2(1.0 + float(snr_central(cb, r))) * 2.0 * r / cb.r_max**2
    val, _ = integrate.quad(integrand, 0.0, cb.r_max, epsabs=0.0, epsrel=1e-12, limit=200)
    return rate_prefactor(ofdm, b_l) * val


def single_user_upper_bound(per_beam_rates, central_rate: float) -> float:
    """System average rate bound for one user: the central-beam rate.

    ``per_beam_rates`` is only checked for non-emptiness; the central beam
    has the shortest path, so every beam's mean rate is at most ``central_rate``.
    """
    if len(per_beam_rates) == 0:
        raise ValueError("need at least one beam")
    return float(central_rate)


def avg_active_beams(n_beam: int, n_ue: float) -> float:
    """Mean number of occupied beams when ``n_ue`` users pick beams uniformly."""
    if n_beam < 1 or n_ue < 0:
        raise ValueError("n_beam >= 1 and n_ue >= 0 required")
    if math.isinf(n_ue):
        return float(n_beam)
    if n_beam == 1:
        return 1.0 if n_ue >= 1 else 0.0
    return -n_beam * math.expm1(n_ue * math.log1p(-1.0 / n_beam))


def multi_user_upper_bound(cb: CentralBeamParams, ofdm: OfdmParams, b_l: float,
                           n_beam: int, n_ue: float, exact: bool = False) -> float:
    """``avg_active_beams * central rate``; with ``exact`` the central rate comes
    from quadrature instead of the high-SNR closed form."""
    rate = avg_rate_central_quad(cb, ofdm, b_l) if exact else avg_rate_central(cb, ofdm, b_l).rate
    return avg_active_beams(n_beam, n_ue) * rate
