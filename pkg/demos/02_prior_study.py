"""The implicit prior: law of G_N(0) under the c.i.d. model, against the DP Beta law.

A reduced run by default (50 replicas). Pass ``--full`` for the 200-replica study.
"""

# %%
import sys

import numpy as np

from quasibayes.experiments import ExperimentConfig, run_fig1

replicas = 200 if "--full" in sys.argv else 50
res = run_fig1(ExperimentConfig("fig1", replicas=replicas, seed=1))

print(f"Beta reference: a={res.summary['beta_a']:.4f}, b={res.summary['beta_b']:.4f}")
summary = res.tables["fig1_summary"]
for i, s2 in enumerate(summary.column("sigma2")):
    print(f"sigma2={s2:<5}  KS={summary.column('ks_distance')[i]:.3f}  "
          f"median modes={summary.column('median_modes')[i]:.0f}")

# %% Small kernel variance: G_N looks like a random discrete partition, close to the DP
samples = res.tables["gN0_samples"]
for s2 in (0.01, 1.0):
    g = samples.column("G_N0")[samples.column("sigma2") == s2]
    print(f"sigma2={s2}: G_N(0) mean {g.mean():.3f}, sd {g.std(ddof=1):.3f}")

# res.write("out/fig1") writes gN0_samples.csv, beta_reference.csv, gn_density.csv and a manifest
