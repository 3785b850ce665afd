"""
Wishart moments against Monte Carlo.

gamma_{p, sigma} has mean p sigma.  Its second moments and those of its
inverse are again of the form a P + b (x), so a simulation only has to
confirm two numbers per identity.
"""

import numpy as np

from wishfisher import symspace, wishart
from wishfisher.mcverify import McConfig, mc_operator_expectation
from wishfisher.suite import zscore
from wishfisher.wishart import WishartParams

params = WishartParams(5.0, np.array([[1.0, 0.3], [0.3, 0.5]]))
config = McConfig(samples=200_000)


def draws(rng, size):
    return wishart.sample(params, rng, size)


mean, se = mc_operator_expectation(draws, lambda u: u, config, tag=1)
print("E[U]   max z:", round(zscore(mean, se, wishart.mean(params)), 2))

tensor, congr = wishart.second_moments(params)
mean, se = mc_operator_expectation(draws, symspace.congruence_dense, config, tag=2)
print("E[P(U)] max z:", round(zscore(mean, se, congr.to_dense()), 2))

_, inv_tensor, _ = wishart.inverse_moments(params)
mean, se = mc_operator_expectation(draws, lambda u: symspace.tensor_dense(np.linalg.inv(u)), config, tag=3)
print("E[U^-1 (x) U^-1] max z:", round(zscore(mean, se, inv_tensor.to_dense()), 2))

# Inverse moments only exist above a shape threshold.
try:
    wishart.inverse_moments(WishartParams(2.0, np.eye(2)))
except wishart.ShapeDomainError as exc:
    print("threshold:", exc)
