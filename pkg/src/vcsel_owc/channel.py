"""Optical channel models.

* Downlink: Gaussian VCSEL beam received by an APD with a hard FOV.
* Uplink: omnidirectional transmitter (one Lambertian LED per face of the
  handset) received by ceiling photodiodes; the received power does not
  depend on how the handset is rotated.
* Retroreflection: a corner-cube retroreflector (CCR) on the handset
  returns each beam to a small photodiode (RxAP) next to its source.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import BeamArrayLayout, UeState, angles, UP


@dataclass(frozen=True)
class BeamParams:
    """Gaussian beam of one VCSEL.  Angles in radians, lengths in metres."""

    wavelength: float
    theta_fwhm: float
    theta_beam: float
    w0: float
    p_tx_opt: float

    @classmethod
    def from_fwhm(cls, wavelength: float, theta_fwhm_deg: float,
                  p_tx_opt: float) -> "BeamParams":
        if wavelength <= 0 or theta_fwhm_deg <= 0 or p_tx_opt < 0:
            raise ValueError("wavelength and FWHM must be positive, power non-negative")
        theta_fwhm = math.radians(theta_fwhm_deg)
        theta_beam = theta_fwhm / math.sqrt(2.0 * math.log(2.0))
        w0 = wavelength / (math.pi * theta_beam)
        return cls(wavelength, theta_fwhm, theta_beam, w0, p_tx_opt)

    def with_power(self, p_tx_opt: float) -> "BeamParams":
        return BeamParams(self.wavelength, self.theta_fwhm, self.theta_beam,
                          self.w0, p_tx_opt)


def beam_width(beam: BeamParams, z):
    """1/e^2 radius ``W(z)`` at distance ``z`` from the waist."""
    z = np.asarray(z, dtype=float)
    zr = math.pi * beam.w0**2 / beam.wavelength
    return beam.w0 * np.sqrt(1.0 + (z / zr) ** 2)


def gaussian_intensity(beam: BeamParams, d, phi):
    """Irradiance (W/m^2) at distance ``d`` and off-axis angle ``phi``.

    Points at or behind the transmitter plane (``phi >= pi/2``) get zero.
    """
    d = np.asarray(d, dtype=float)
    phi = np.asarray(phi, dtype=float)
    d0 = d * np.cos(phi)
    r0 = d * np.sin(phi)
    front = phi < 0.5 * np.pi
    w = beam_width(beam, np.where(front, d0, 0.0))
    val = 2.0 * beam.p_tx_opt / (np.pi * w**2) * np.exp(-2.0 * r0**2 / w**2)
    return np.where(front, val, 0.0)


def in_footprint(beam: BeamParams, d, phi, factor: float = 1.0):
    """True where the point lies within ``factor * W(d0)`` of the beam axis."""
    d = np.asarray(d, dtype=float)
    phi = np.asarray(phi, dtype=float)
    d0 = d * np.cos(phi)
    front = phi < 0.5 * np.pi
    return front & (d * np.sin(phi) <= factor * beam_width(beam, np.where(front, d0, 0.0)))


class DownlinkPower(NamedTuple):
    p_opt_pre_gain: np.ndarray
    p_rx_ue: np.ndarray


def received_power_downlink(beam: BeamParams, p_tx, n_tx, p_ue, n_ue,
                            a_eff: float, g_apd: float, fov: float) -> DownlinkPower:
    """Received optical power before and after APD gain.

    The rectangular FOV window zeroes anything arriving with ``psi > fov``.
    Broadcasts over leading axes like :func:`angles`.
    """
    d, phi, psi = angles(p_tx, n_tx, p_ue, n_ue)
    pre = gaussian_intensity(beam, d, phi) * a_eff * np.cos(psi)
    pre = np.where(psi <= fov, pre, 0.0)
    return DownlinkPower(pre, pre * g_apd)


def downlink_power_matrix(layout: BeamArrayLayout, beam: BeamParams, p_ue,
                          n_ue, a_eff: float, fov: float) -> np.ndarray:
    """Pre-gain received power from every beam at every UE position.

    ``p_ue`` is ``(K, 3)`` (or ``(3,)``); ``n_ue`` is ``(3,)`` or ``(K, 3)``.
    Returns ``(K, n_beam)``.
    """
    p_ue = np.atleast_2d(np.asarray(p_ue, dtype=float))
    n_ue = np.asarray(n_ue, dtype=float)
    if n_ue.ndim == 2:
        n_ue = n_ue[:, None, :]
    return received_power_downlink(beam, layout.p_tx[None], layout.n_tx[None],
                                   p_ue[:, None, :], n_ue, a_eff, 1.0, fov).p_opt_pre_gain


# --------------------------------------------------------------------------
# uplink
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OdtxParams:
    """Uplink LED and ceiling-PD constants (watts, m^2, radians)."""

    lambertian_order: float = 2.0
    p_tx_od: float = 0.01
    a_od: float = 1e-4
    n_ref: float = 1.5
    psi_fov: float = math.radians(60.0)

    def __post_init__(self):
        if self.lambertian_order < 1:
            raise ValueError("Lambertian order must be >= 1")
        if not 0 < self.psi_fov <= 0.5 * math.pi:
            raise ValueError("PD FOV must lie in (0, pi/2]")


@dataclass(frozen=True)
class CeilingPd:
    position: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        if self.normal[2] >= 0:
            raise ValueError("ceiling PD must face downwards")


def ceiling_pd_constellation(center, tilt_deg: float = 30.0,
                             spacing: float = 0.0) -> list[CeilingPd]:
    """Five ceiling PDs: one facing down at ``center``, four tilted by
    ``tilt_deg`` towards +x, -x, +y, -y and displaced ``spacing`` metres in
    that same direction (``spacing=0`` puts all five at one point)."""
    center = np.asarray(center, dtype=float)
    t = math.radians(tilt_deg)
    s, c = math.sin(t), math.cos(t)
    dirs = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
    pds = []
    for dx, dy in dirs:
        pos = center + spacing * np.array([dx, dy, 0.0])
        pds.append(CeilingPd(pos, np.array([s * dx, s * dy, -c if (dx or dy) else -1.0])))
    return pds


def _odtx_gain(odtx: OdtxParams, ue_pos, pd: CeilingPd):
    ue_pos = np.asarray(ue_pos, dtype=float)
    dvec = ue_pos - pd.position
    d = np.linalg.norm(dvec, axis=-1)
    if np.any(d == 0.0):
        raise ValueError("UE coincides with the photodiode")
    cos_psi = np.sum(pd.normal * dvec, axis=-1) / d
    m = odtx.lambertian_order
    g = ((m + 1) * odtx.a_od * odtx.n_ref**2 * cos_psi
         / (2.0 * math.pi * d**2 * math.sin(odtx.psi_fov) ** 2))
    return np.where(cos_psi >= math.cos(odtx.psi_fov), g, 0.0), dvec / d[..., None]


def received_power_uplink(odtx: OdtxParams, ue_pos, pd: CeilingPd):
    """Power at a ceiling PD from the omnidirectional transmitter.

    Only the incidence angle at the PD enters, so handset rotation has no
    effect.  Vectorised over leading axes of ``ue_pos``.
    """
    g, _ = _odtx_gain(odtx, ue_pos, pd)
    return odtx.p_tx_od * g


def received_power_uplink_single(odtx: OdtxParams, ue_pos, ue_normal, pd: CeilingPd):
    """Power at a ceiling PD from a single LED facing along ``ue_normal``.

    Unlike the omnidirectional transmitter this carries the ``cos^m`` radiation
    pattern of the LED, so it changes when the handset tilts.
    """
    g, dhat = _odtx_gain(odtx, ue_pos, pd)
    cos_irr = np.sum(np.asarray(ue_normal, dtype=float) * -dhat, axis=-1)
    pattern = np.where(cos_irr > 0, np.abs(cos_irr) ** odtx.lambertian_order, 0.0)
    return odtx.p_tx_od * g * pattern


# --------------------------------------------------------------------------
# corner-cube retroreflector
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CcrParams:
    """Corner-cube and RxAP geometry (metres / radians).

    ``depth`` sets the aperture displacement ``2 * depth * tan(refracted)``;
    ``l_ccr`` is the diameter of the returned spot at the AP; ``d_rxap`` the
    RxAP diameter.  The RxAP of beam ``n`` sits beside its VCSEL, its centre
    ``d_rxap / 2`` away along +x.
    """

    depth: float = 5e-3
    n_re: float = 1.5
    l_ccr: float = 5e-3
    aperture_radius: float = 2.5e-3
    acceptance: float = math.radians(45.0)
    d_rxap: float = 5e-3
    footprint_factor: float = 1.0

    def __post_init__(self):
        if self.n_re <= 1:
            raise ValueError("retroreflector index must exceed 1")
        if self.l_ccr > 2 * self.aperture_radius + 1e-15:
            raise ValueError("l_ccr cannot exceed the aperture diameter")


def ccr_refraction(psi, n_re: float):
    return np.arcsin(np.sin(psi) / n_re)


def circle_overlap_area(r1: float, r2: float, dist):
    """Area of intersection of two circles with centres ``dist`` apart."""
    dist = np.asarray(dist, dtype=float)
    small, big = min(r1, r2), max(r1, r2)
    out = np.zeros_like(dist)
    contained = dist <= big - small
    out = np.where(contained, math.pi * small**2, out)
    lens = (dist > big - small) & (dist < r1 + r2)
    dd = np.where(lens, dist, r1 + r2 - 1e-300)
    with np.errstate(invalid="ignore", divide="ignore"):
        a1 = r1**2 * np.arccos(np.clip((dd**2 + r1**2 - r2**2) / (2 * dd * r1), -1, 1))
        a2 = r2**2 * np.arccos(np.clip((dd**2 + r2**2 - r1**2) / (2 * dd * r2), -1, 1))
        k = 0.5 * np.sqrt(np.clip((-dd + r1 + r2) * (dd + r1 - r2)
                                  * (dd - r1 + r2) * (dd + r1 + r2), 0, None))
    return np.where(lens, a1 + a2 - k, out)


def ccr_active_area_fraction(ccr: CcrParams, psi):
    """Share of the (circular) entrance aperture that is retroreflected."""
    psi = np.asarray(psi, dtype=float)
    shift = 2.0 * ccr.depth * np.tan(ccr_refraction(psi, ccr.n_re))
    a = ccr.aperture_radius
    return circle_overlap_area(a, a, shift) / (math.pi * a * a)


def _rxap_centres(layout: BeamArrayLayout, ccr: CcrParams) -> np.ndarray:
    return layout.p_tx[:, :2] + np.array([0.5 * ccr.d_rxap, 0.0])


def rxap_capture_matrix(layout: BeamArrayLayout, ccr: CcrParams) -> np.ndarray:
    """``C[k, n]``: fraction of the spot returned by beam ``n`` that lands on
    RxAP ``k``.  The spot is a uniform disk of diameter ``l_ccr`` centred on
    the source VCSEL (retroreflection reverses the ray)."""
    rx = _rxap_centres(layout, ccr)
    src = layout.p_tx[:, :2]
    dist = np.linalg.norm(rx[:, None, :] - src[None, :, :], axis=-1)
    rs = 0.5 * ccr.l_ccr
    return circle_overlap_area(rs, 0.5 * ccr.d_rxap, dist) / (math.pi * rs * rs)


def rxap_power_matrix(layout: BeamArrayLayout, beam: BeamParams, ue: UeState,
                      ccr: CcrParams) -> np.ndarray:
    """Retroreflected power on each RxAP, shape ``(n_beam,)``.

    The CCR face points straight up.  Beams whose footprint misses the CCR
    or whose incidence exceeds the CCR acceptance contribute nothing.
    """
    pos = np.asarray(ue.position, dtype=float)
    d, phi, psi = angles(layout.p_tx, layout.n_tx, pos[None], UP)
    a = ccr.aperture_radius
    incident = gaussian_intensity(beam, d, phi) * math.pi * a * a * np.cos(psi)
    ok = in_footprint(beam, d, phi, ccr.footprint_factor) & (psi <= ccr.acceptance)
    returned = np.where(ok, incident * ccr_active_area_fraction(ccr, psi), 0.0)
    return rxap_capture_matrix(layout, ccr) @ returned


def rxap_returns(layout: BeamArrayLayout, beam: BeamParams, ues, ccr: CcrParams
                 ) -> dict[int, np.ndarray]:
    """Per-user RxAP power vectors, keyed by each user's modulation tag.

    Users modulate their retroreflected light with distinct LCD codes, so the
    AP can separate overlapping returns by tag.
    """
    out: dict[int, np.ndarray] = {}
    for ue in ues:
        if ue.tag in out:
            raise ValueError(f"duplicate UE tag {ue.tag}")
        out[ue.tag] = rxap_power_matrix(layout, beam, ue, ccr)
    return out


__all__ = [
    "BeamParams", "beam_width", "gaussian_intensity", "in_footprint",
    "DownlinkPower", "received_power_downlink", "downlink_power_matrix",
    "OdtxParams", "CeilingPd", "ceiling_pd_constellation",
    "received_power_uplink", "received_power_uplink_single",
    "CcrParams", "ccr_refraction", "circle_overlap_area",
    "ccr_active_area_fraction", "rxap_capture_matrix", "rxap_power_matrix",
    "rxap_returns",
]
