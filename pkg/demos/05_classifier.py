"""Sequential unsupervised classification with known components (the finite-mixture case)."""

# %%
import numpy as np

from quasibayes import DiscreteMixing, EstimatorState, GaussianLocation, Polynomial
from quasibayes.recursion import classify_stream

rng = np.random.default_rng(3)
atoms = np.array([-2.0, 0.0, 3.0])
labels = rng.choice(3, size=800, p=[0.2, 0.5, 0.3])
xs = rng.normal(atoms[labels], 1.0)

start = EstimatorState(GaussianLocation(1.0), Polynomial(1, 1), DiscreteMixing(atoms, np.ones(3) / 3))
probs, predicted, final = classify_stream(start, xs)

print("learned weights:", np.round(final.current.weights, 3), "(true 0.2, 0.5, 0.3)")
print("accuracy:", np.mean(predicted == labels))
# overlapping components cap the accuracy; the Bayes classifier with true weights:
bayes = np.argmax(np.array([0.2, 0.5, 0.3]) * np.exp(-0.5 * (xs[:, None] - atoms) ** 2), axis=1)
print("oracle accuracy:", np.mean(bayes == labels))

# %% The experiment harness runs the well-separated case and logs the running accuracy
from quasibayes.experiments import ExperimentConfig, run_classifier_demo

res = run_classifier_demo(ExperimentConfig("classifier", seed=0))
print("atoms +/-5:", res.summary["terminal_accuracy"])
