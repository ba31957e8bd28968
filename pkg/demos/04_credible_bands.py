"""Asymptotic credible intervals and a joint credible ellipsoid for the mixing CDF."""

# %%
import numpy as np

from quasibayes import EstimatorState, GaussianLocation, Piecewise, Polynomial, fit, halfline, normal_grid
from quasibayes import credible_interval, credible_region, summarize
from quasibayes.mixing import normal_mixture_grid
from quasibayes.simulate import simulate_iid_mixture

g0 = normal_grid(1, 9, m=1001)
truth = normal_mixture_grid((0.3, 0.7), (-1, 3), (2, 1.5), g0.lower, g0.upper, g0.size)
kernel = GaussianLocation(1.0)
xs = simulate_iid_mixture(truth, kernel, 1000, np.random.default_rng(5))

for schedule in (Polynomial(100, 1), Piecewise(100, 500, 1, 0.75)):
    state = fit(EstimatorState(kernel, schedule, g0), xs)
    print(schedule.spec)
    for t in (-2.0, 0.0, 2.0, 4.0):
        lo, hi = credible_interval(state, halfline(t))
        print(f"  G({t:+.0f}) in [{lo:.3f}, {hi:.3f}]   true {truth.measure_of(halfline(t)):.3f}")

# %% Joint region for (G(0), G(2)); the piecewise schedule has the slower rate 0.5 sqrt(n)
sets = [halfline(0.0), halfline(2.0)]
region = credible_region(state, sets, level=0.95)
print("centre", np.round(region.center, 3), "semi-axes", np.round(region.semi_axes(), 4))
print("truth inside:", region.contains([truth.measure_of(A) for A in sets]))
print(summarize(state, sets).to_dict()["rate"])
