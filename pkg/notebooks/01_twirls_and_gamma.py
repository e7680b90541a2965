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

# # Twirling maps and gamma
#
# Build ideal twirls for a few gate ensembles and compare them with the Haar twirl.

# +
import numpy as np
np.set_printoptions(precision=4, suppress=True)

from urb.gates import T, clifford_group, pauli_group
from urb.twirling import gamma_bounds, haar_twirl, ideal_twirl, make_ensemble
# -

# The single-qubit Clifford group reproduces the Haar twirl exactly.

C = clifford_group(2)
clifford = make_ensemble(C)
print(len(C), np.abs(ideal_twirl(clifford).mat - haar_twirl(2).mat).max())

# Mixing in a T gate moves the twirl away from Haar. Several bounds are available.

mix = make_ensemble(list(C) + [T], np.r_[np.full(24, 0.8 / 24), 0.2])
gb = gamma_bounds(mix)
for k, v in gb.as_dict().items():
    print(k, v)

# The Pauli group is only a 1-design, so every diamond-norm bound is above 1.

gb = gamma_bounds(make_ensemble(pauli_group(2)))
print(gb.l2, gb.induced_l1, gb.smallest_label)
