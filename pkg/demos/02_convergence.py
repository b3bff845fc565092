"""Golden Mean data, growing prefixes of one series, full five-state library.

Shows the MAP topology locking in and the credible intervals for h_mu and
C_mu shrinking around 2/3 and log2(3) - 2/3.  Takes roughly a minute.
"""
import math

import bsi

library = bsi.shipped_library()
data = bsi.generate_series(bsi.builtin("golden-mean"), 2**14, seed=1)
truth = library.find(bsi.builtin("golden-mean").topology()).id
print(f"{len(library)} candidates; the true topology is {truth}")

print(f"{'L':>6} {'accepting':>9} {'MAP':>12} {'Pr(MAP)':>8}   h_mu [95% CI]            C_mu [95% CI]")
for i in range(0, 15, 2):
    L = 2**i
    table = bsi.topology_posterior(library, data[:L])
    samples = bsi.sample_posterior(table, bsi.SamplerConfig(n_samples=4000, seed=7))
    h = bsi.summarize([s.h_mu for s in samples])
    c = bsi.summarize([s.c_mu for s in samples])
    best = bsi.map_topology(table)
    print(f"{L:>6} {table.accepting_count:>9} {best:>12} {table.row(best)['posterior']:>8.4f}"
          f"   {h.mean:.3f} [{h.ci_low:.3f}, {h.ci_high:.3f}]   {c.mean:.3f} [{c.ci_low:.3f}, {c.ci_high:.3f}]")

print("true values: h_mu = 0.667, C_mu =", round(math.log2(3) - 2 / 3, 4))
