"""Fitting the GP surrogate and querying its posterior.

Covers the surrogate layer on its own: fit from a small dataset,
posterior mean and covariance queries, cheap rank-1 what-if updates,
and marginal-likelihood hyperparameter selection.
"""

import numpy as np

from gpexpect import Dataset, NoiseModel, RbfKernel
from gpexpect.gp import (
    fit,
    log_marginal_likelihood,
    posterior_cov,
    posterior_mean,
    rank1_update_cov,
    rank1_update_mean,
    select_hyperparameters,
)

rng = np.random.default_rng(0)

# 1. a noisy dataset from a smooth function
X = np.linspace(-2.0, 2.0, 8).reshape(-1, 1)
y = np.sin(2.0 * X[:, 0]) + 0.05 * rng.normal(size=8)
data = Dataset(X=X, y=y)

ker = RbfKernel(amplitude_sq=1.0, lengthscales=np.array([0.5]))
noise = NoiseModel(variance=0.05**2)
gp = fit(data, ker, noise)

print("posterior at a few probe points")
for xv in (-1.0, 0.0, 0.7, 3.0):
    x = np.array([xv])
    m = posterior_mean(gp, x)
    s = np.sqrt(posterior_cov(gp, x, x))
    print(f"  x = {xv:5.1f}   mean {m:8.4f}   std {s:.4f}   true {np.sin(2 * xv):8.4f}")
print("far from the data the mean falls back to 0 and the std back to the amplitude")

# 2. rank-1 updates: condition on one hypothetical observation without refitting
xt = np.array([0.35])
yt = np.sin(2.0 * 0.35)
probe = np.array([0.5])

m_updated = rank1_update_mean(gp, xt, yt, probe)
v_updated = rank1_update_cov(gp, xt, probe, probe)

refit = fit(Dataset(X=np.vstack([X, xt]), y=np.append(y, yt)), ker, noise)
m_refit = posterior_mean(refit, probe)
v_refit = posterior_cov(refit, probe, probe)

print(f"\nrank-1 update vs full refit at x = {probe[0]}")
print(f"  mean {m_updated:.12f} vs {m_refit:.12f}   (diff {abs(m_updated - m_refit):.2e})")
print(f"  var  {v_updated:.12f} vs {v_refit:.12f}   (diff {abs(v_updated - v_refit):.2e})")

# 3. the marginal likelihood prefers sensible hyperparameters
for ell in (0.01, 0.5, 25.0):
    k2 = RbfKernel(amplitude_sq=1.0, lengthscales=np.array([ell]))
    lml = log_marginal_likelihood(data, k2, noise)
    print(f"\nlengthscale variance {ell:5.2f}: log marginal likelihood {lml:9.3f}", end="")
print()

# 4. automatic selection from multi-start optimization of the same quantity
Xl = np.linspace(-3.0, 3.0, 50).reshape(-1, 1)
yl = np.sin(2.0 * Xl[:, 0]) + 0.1 * rng.normal(size=50)
theta = select_hyperparameters(Dataset(X=Xl, y=yl))
print("\nselected hyperparameters on 50 noisy points (true noise var 0.01):")
print(f"  lengthscale variance {theta.kernel.lengthscales[0]:.4f}")
print(f"  amplitude squared    {theta.kernel.amplitude_sq:.4f}")
print(f"  noise variance       {theta.noise.variance:.4f}")
