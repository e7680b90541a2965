# -*- coding: utf-8 -*-
# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
#   kernelspec:
#     display_name: Python 3
#     name: python3
# ---

# # Decay curves and fitting
#
# Exact and sampled survival probabilities for Clifford RB with depolarizing noise.

# +
import numpy as np
np.set_printoptions(precision=4, suppress=True)

from urb.fitting import avg_fidelity, exponent_to_fidelity, fit_exponential
from urb.noise import depolarizing_noise
from urb.schemes import build_clifford_rb, exact_decay, monte_carlo_decay
from urb.superops import depolarizing
# -

s = build_clifford_rb(2, depolarizing_noise(0.9))
m = np.array([1, 2, 4, 8, 16, 32])
print(exact_decay(s, m))

# Finite sampling with a fixed seed; the same seed gives the same numbers.

ds = monte_carlo_decay(s, m, K=300, shots=100, seed=1)
print(np.array(ds.estimates))
print(np.array(ds.std_errors))

fit = fit_exponential(ds)
print(fit.as_text())

# Exponent and average fidelity agree for this noise model.

print(exponent_to_fidelity(fit.p, 2), avg_fidelity(depolarizing(0.9)))
