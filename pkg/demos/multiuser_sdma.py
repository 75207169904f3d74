"""Many users on a 10x10 beam array.

Users pick their strongest beam; users that land on the same beam split it
equally.  With interference switched on, every other lit beam adds noise.
Narrow beams waste less light on neighbours, so they suffer less.

    python demos/multiuser_sdma.py
"""
from vcsel_owc.runner import load_config
from vcsel_owc.runner.experiments import run_multiuser

cfg = load_config(None, ["sweep.n_ue=[1, 5, 20, 50]", "samples.trials=500",
                         "theta_fwhm_deg=[4.0, 6.0]", "p_tx_mw=[60.0, 129.0]"])
table = run_multiuser(cfg)
print(f"{'theta':>5} {'users':>5} {'no ICI':>9} {'with ICI':>9} {'bound':>9} {'lit beams':>9}")
for r in table.where():
    print(f"{r['theta_fwhm_deg']:5g} {r['n_ue']:5d} {r['total_no_ici'] / 1e9:8.1f}G "
          f"{r['total_ici'] / 1e9:8.1f}G {r['bound_quad'] / 1e9:8.1f}G {r['n_active']:9.2f}")
print(f"\n({table.wall_time:.1f} s, {cfg.samples.trials} drops per point)")
