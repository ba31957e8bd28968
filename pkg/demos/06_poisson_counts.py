"""Poisson counts with a Gamma prior guess on the mean, plus the c.i.d. simulator."""

# %%
import numpy as np

from quasibayes import EstimatorState, Poisson, Polynomial, fit, halfline, v_hat
from quasibayes.asymptotics import marginal_posterior_approx
from quasibayes.mixing import DiscreteMixing, gamma_grid
from quasibayes.simulate import simulate_cid, simulate_iid_mixture

truth = DiscreteMixing([2.0, 9.0], [0.6, 0.4])
counts = simulate_iid_mixture(truth, Poisson(), 2000, np.random.default_rng(1))

g0 = gamma_grid(shape=2, rate=0.4, m=801)
state = fit(EstimatorState(Poisson(), Polynomial(1, 0.8), g0), counts)
A = halfline(5.0)
mean, var = marginal_posterior_approx(state, A)
print(f"G(theta <= 5): estimate {mean:.3f} (truth 0.6), approx sd {np.sqrt(var):.3f}, v_hat {v_hat(state, A):.4f}")

# %% One c.i.d. path: draw theta from the current estimate, emit a count, update
path = simulate_cid(g0, Poisson(), Polynomial(1, 1), 300, np.random.default_rng(2), snapshot_steps=(10, 300))
print("first counts:", path.xs[:10].astype(int))
for step, snap in path.snapshots:
    print(f"step {step}: G(theta <= 5) = {snap.measure_of(A):.3f}")
