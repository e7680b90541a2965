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

# # Certifying a single exponential
#
# Measure epsilon, delta and gamma for a scheme, then compare the exact decay with the fitted model.

# +
import numpy as np
np.set_printoptions(precision=4, suppress=True)

from urb.fitting import fit_exponential
from urb.gates import T, clifford_group
from urb.noise import depolarizing_noise
from urb.perturbation import spectral_split, verify_corollary
from urb.schemes import (
    build_pauli_ensemble,
    build_scheme,
    certify_single_exponential,
    exact_decay,
    scheme_quality,
    theorem_bound_check,
)
from urb.twirling import physical_twirl
# -

C = clifford_group(2)
s = build_scheme(list(C) + [T], np.r_[np.full(24, 0.8 / 24), 0.2], depolarizing_noise(0.99))
q = scheme_quality(s)
print(q.epsilon, q.delta, q.gamma, q.gamma_bounds.smallest_label)
print(certify_single_exponential(q).reason)

m = np.arange(1, 51)
fit = fit_exponential(exact_decay(s, m), m)
chk = theorem_bound_check(s, q, fit, m)
print(fit.p, chk.all_ok)
print(np.c_[m[:8], np.array(chk.residuals[:8]), np.array(chk.bounds[:8])])

# Spectral view of the same ensemble.

split = spectral_split(physical_twirl(s.ensemble), delta=q.delta)
print(split.dominant_eigenvalues, split.remainder_norm, split.kappa_estimate)
print(verify_corollary(split, q.gamma, q.delta).all_ok)

# Negative control: the Pauli ensemble is refused.

qp = scheme_quality(build_pauli_ensemble(2, depolarizing_noise(0.99)))
print(certify_single_exponential(qp).reason)
