"""A nonunifilar source has no finite unifilar presentation.

The Simple Nonunifilar Source needs infinitely many causal states, so the
inferred structure keeps growing with more data: C_mu climbs while h_mu
settles.  The density of the C_mu samples is written to sns_cmu_density.csv.
"""
import numpy as np

import bsi

library = bsi.shipped_library()
sns = bsi.builtin("sns")
print("unifilar?", sns.is_unifilar)
data = bsi.generate_series(sns, 2**16, seed=3)

for L in (2**6, 2**10, 2**13, 2**16):
    table = bsi.topology_posterior(library, data[:L])
    samples = bsi.sample_posterior(table, bsi.SamplerConfig(n_samples=5000, seed=0))
    sizes = np.bincount([library[s.topology_id].n_states for s in samples], minlength=6)[1:]
    h = bsi.summarize([s.h_mu for s in samples])
    c = bsi.summarize([s.c_mu for s in samples])
    print(f"L={L:>6}  h_mu {h.mean:.4f}  C_mu {c.mean:.4f}  state-count histogram {sizes.tolist()}")

est = bsi.gaussian_kde([s.c_mu for s in samples])
if est.degenerate:
    print("all C_mu samples equal", est.value)
else:
    np.savetxt("sns_cmu_density.csv", np.column_stack([est.grid, est.density]),
               delimiter=",", header="x,density", comments="")
    print("peak density at C_mu =", round(float(est.grid[np.argmax(est.density)]), 3))
