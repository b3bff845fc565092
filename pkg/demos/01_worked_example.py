"""Walk a short binary series through the two-state candidates by hand.

Run with ``python3 demos/01_worked_example.py``.
"""
import numpy as np

import bsi
from bsi.bayes import log_evidence_given_start

# %% The Even process: from A emit 0 (stay) or 1 (go to B); B must emit 1.
even = bsi.Topology.from_edges(2, 2, [(0, 0, 0), (0, 1, 1), (1, 1, 0)], id="even")
data = "11101100111101111001"

# Unifilarity means a start state pins down the whole hidden path, so the
# likelihood only needs edge counts.
for start in (0, 1):
    counts = bsi.trace_path(even, start, data)
    if counts is None:
        print(f"start {'AB'[start]}: rejected")
        continue
    print(f"start {'AB'[start]}: counts\n{counts.counts}")
    print("  log evidence", log_evidence_given_start(even, counts))

# %% Among all eight one- and two-state candidates, who can produce this?
small = bsi.shipped_library(2)
table = bsi.topology_posterior(small, data, spec=bsi.ModelPriorSpec(beta=4.0))
for i in table.order():
    row = table.row(i)
    if row["accepted"]:
        print(f"{row['id']:>12}  n={row['n_states']}  posterior {row['posterior']:.4f}")
print("rejecting:", len(small) - table.accepting_count)

# %% Posterior draws of the two information measures.
samples = bsi.sample_posterior(table, bsi.SamplerConfig(n_samples=5000, seed=0))
h = np.array([s.h_mu for s in samples])
c = np.array([s.c_mu for s in samples])
print("h_mu", bsi.summarize(h))
print("C_mu", bsi.summarize(c))
