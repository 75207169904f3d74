"""Walk through the central-beam link budget.

A single 4 degree VCSEL beam points straight down from 2 m above the user
plane.  The script follows one photon budget from transmit power to data
rate, then checks the closed-form SNR statistics against a Monte-Carlo drop
of users through the full channel and receiver models.

    python demos/central_beam.py
"""
import numpy as np

from vcsel_owc import analysis
from vcsel_owc.channel import beam_width
from vcsel_owc.link import data_rate, noise_psd_components, snr_per_subcarrier, to_db
from vcsel_owc.runner import load_config
from vcsel_owc.runner.experiments import center_power, central_params, receiver_ledger

THETA = 4.0
cfg = load_config(None, [])
beam = cfg.beam(THETA)
h = cfg.layout.h
ledger = receiver_ledger(cfg, THETA, beam)

print(f"beam: {THETA:g} deg FWHM, {beam.p_tx_opt * 1e3:.0f} mW at {cfg.lambda_nm:g} nm")
print(f"  1/e^2 radius at {h:g} m: {beam_width(beam, h) * 100:.2f} cm")

p0 = center_power(beam, ledger.a_eff, h)
th, shot, rin = noise_psd_components(cfg.receiver.ledger(), p0)
print(f"received power straight below: {p0 * 1e6:.1f} uW")
print(f"  noise PSD (A^2/Hz): thermal {float(th):.2e}, shot {float(shot):.2e}, RIN {float(rin):.2e}")

# SNR against distance from the cell centre
cb = central_params(cfg, THETA, cfg.layout.d_cell)
for r in (0.0, 0.02, 0.04, 0.0564):
    print(f"  r = {r * 100:4.1f} cm: SNR {float(analysis.snr_db_central(cb, r)):5.2f} dB")

# Monte-Carlo users on the equal-area disk versus the closed forms
rng = np.random.default_rng(cfg.seed)
n = 200_000
r = cb.r_max * np.sqrt(rng.uniform(size=n))
snr = analysis.snr_central(cb, r)
lo, hi = analysis.snr_db_support(cb)
hist, edges = np.histogram(to_db(snr), bins=8, range=(lo, hi), density=True)
mid = 0.5 * (edges[1:] + edges[:-1])
print(f"\nSNR density over [{lo:.2f}, {hi:.2f}] dB  (simulated / exact / uniform)")
for g, e, x, u in zip(mid, hist, analysis.snr_pdf_exact(cb, mid), analysis.snr_pdf_uniform(cb, mid)):
    print(f"  {g:6.2f} dB  {e:.4f}  {x:.4f}  {u:.4f}")

mc = float(np.mean(data_rate(cfg.ofdm, cfg.receiver.b_l, snr)))
cf = analysis.avg_rate_central(cb, cfg.ofdm, cfg.receiver.b_l)
print(f"\nmean rate: simulated {mc / 1e9:.3f} Gbps, closed form {cf.rate / 1e9:.3f} Gbps "
      f"({(cf.rate / mc - 1) * 100:+.2f}%)")
print(f"peak per-subcarrier SNR check: {float(to_db(snr_per_subcarrier(ledger, cfg.ofdm, p0))):.2f} dB")
