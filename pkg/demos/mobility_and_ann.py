"""Beam selection for moving users, and the uplink classifier behind ODTx.

First a small classifier learns which beam serves a user from the uplink
power seen at five ceiling photodiodes.  Then users walk about the room and
each selection scheme is scored on the throughput it actually delivers.

    python demos/mobility_and_ann.py
"""
import numpy as np

from vcsel_owc.activation import activation_accuracy, generate_training_set, train_mlp
from vcsel_owc.channel import ceiling_pd_constellation
from vcsel_owc.geometry import OrientationModel
from vcsel_owc.runner import load_config
from vcsel_owc.runner.experiments import run_mobility_throughput

cfg = load_config(None, [])
layout = cfg.layout.build(n_side=3)
beam = cfg.beam(4.0)
pds = ceiling_pd_constellation((0.0, 0.0, cfg.layout.ap_height), cfg.odtx.pd_tilt_deg,
                               cfg.odtx.pd_spacing)
rng = np.random.default_rng(cfg.seed)
for uplink in ("odtx", "single"):
    ds = generate_training_set(layout, beam, cfg.receiver.ledger(), cfg.odtx.params(), pds,
                               OrientationModel("m2"), 20_000, rng, uplink=uplink)
    model = train_mlp(ds, 5, 20, 0.01, rng, n_out=layout.n_beam)
    print(f"{uplink:>6} uplink, tilted handsets: beam accuracy "
          f"{activation_accuracy(model, ds.subset(ds.test)):.3f}")

print("\nthroughput per scheme while walking (Gbps, 5 users, 10x10 array)")
mob = run_mobility_throughput(load_config(None, ["mobility.replicates=200",
                                                 "sweep.speeds=[0.5, 2.0]"]))
for r in mob.where():
    print(f"  {r['speed']:3.1f} m/s  {r['scheme']:<22} {r['throughput'] / 1e9:6.2f}  "
          f"outage {r['outage']:.3f}")
