"""
Fisher information of the Wishart-randomized Gaussian model.

The score covariance and the negative expected Hessian agree with the closed
form, whose coefficients depend on p alone.  Its inverse is the Cramer-Rao
bound for unbiased estimators of sigma.
"""

import numpy as np

from wishfisher import model
from wishfisher.mcverify import McConfig, batch_means, summarize
from wishfisher.model import ModelParams
from wishfisher.suite import zscore

params = ModelParams(2.0, np.array([[1.0, 0.4], [0.4, 2.0]]))
info = model.fisher_information(params)
print("I_p(sigma) = a P(sigma^-1) + b sigma^-1 (x) sigma^-1 with a, b =", info.a, info.b)


def fn(rng, size):
    grad, hess = model.score_coords(params, model.sample(params, rng, size))
    return np.stack([grad[:, :, None] * grad[:, None, :], -hess], axis=1)


mean, se = summarize(batch_means(fn, McConfig(samples=200_000), tag=4))
print("E[l' (x) l'] max z:", round(zscore(mean[0], se[0], info.to_dense()), 2))
print("-E[l'']      max z:", round(zscore(mean[1], se[1], info.to_dense()), 2))

inv = model.fisher_inverse(params)
print("|I I^-1 - id|:", np.linalg.norm(info.to_dense() @ inv.to_dense() - np.eye(3)))
print("log det I_p(sigma):", model.jeffreys_log_det(params))
