"""How retroreflected light picks the serving beam.

Every beam of a 3x3 array lights the handset's corner-cube retroreflector
(CCR); the CCR sends part of it straight back to the photodiode next to that
beam.  The photodiode that hears the strongest echo names the beam to use.

    python demos/ccr_activation.py
"""
import numpy as np

from vcsel_owc.activation import TimingParams, effective_throughput, select_beam_ccr
from vcsel_owc.channel import BeamParams, CcrParams, rxap_power_matrix
from vcsel_owc.geometry import UeState, build_grid_array
from vcsel_owc.link import to_db

layout = build_grid_array(3, 0.1, 3.5, 1.5, 0.012)
beam = BeamParams.from_fwhm(1550e-9, 4.0, 0.060)
ccr = CcrParams()


def show(label, x, y):
    v = rxap_power_matrix(layout, beam, UeState(np.array([x, y, 1.5])), ccr)
    print(f"{label}  (x={x:+.3f}, y={y:+.3f})")
    with np.errstate(divide="ignore"):
        db = to_db(v / v.max()) if v.any() else np.full(9, -np.inf)
    for row in db.reshape(3, 3):
        print("   " + "  ".join("    --" if not np.isfinite(d) else f"{d:6.1f}" for d in row))
    k = select_beam_ccr(v)
    print(f"   -> beam {k + 1} (cells numbered 1-9 row by row)\n")


print("echo power at each RxAP, dB relative to the strongest\n")
show("centre of cell 5", 0.0, 0.0)
show("boundary of cells 4 and 5", -0.05, 0.0)
show("far corner of cell 7", -0.149, -0.149)

t = effective_throughput(TimingParams(), 3.4e9)
print(f"signalling round trip {t.t_delay * 1e6:.2f} us against {t.t_data * 1e6:.1f} us of data:")
print(f"  throughput factor {t.factor:.4f} at 3.4 Gbit/s")
