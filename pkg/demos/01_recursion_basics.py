"""Newton's recursion on a two-atom mixing distribution and on a grid density."""

# %% A two-point mixing distribution and one observation
import numpy as np

from quasibayes import DiscreteMixing, EstimatorState, GaussianLocation, Polynomial, normal_grid
from quasibayes import fit, halfline, posterior_given_x, predictive_density, update

g0 = DiscreteMixing([0.0, 1.0], [0.5, 0.5])
state = EstimatorState(GaussianLocation(1.0), Polynomial(alpha=1, beta=1), g0)

# Bayes update alone: x = 1 favours the atom at 1 by a factor e^(1/2)
print("posterior given x=1:", posterior_given_x(state, 1.0).weights)

# Newton step: alpha_1 = 1/2 mixes prior and posterior half and half
state = update(state, 1.0)
print("G_1 weights:", state.current.weights, " n =", state.n)

# %% A grid prior guess and a stream
g0 = normal_grid(mean=1, var=3, m=1001)
rng = np.random.default_rng(0)
xs = rng.normal(-1.0, 1.5, size=500)

state = fit(EstimatorState(GaussianLocation(1.0), Polynomial(1, 1), g0), xs)
print("G_0(theta <= 0) =", round(g0.measure_of(halfline(0.0)), 4))
print("G_500(theta <= 0) =", round(state.current.measure_of(halfline(0.0)), 4))
print("mean of G_500:", round(state.current.mean(), 3))   # data centred at -1

# predictive density of the next observation
print("f_G500 at -1, 0, 1:", np.round(predictive_density(state, [-1.0, 0.0, 1.0]), 4))
print(state.report()["limit"])
