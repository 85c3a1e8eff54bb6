"""Estimate of q = E[f] and the variance-reduction acquisition.

Everything here rests on two closed-form integrals of the RBF kernel
against a Gaussian mixture: the kernel mean K(x) = int k(x, x') p(x') dx'
and the double integral of k against p twice.  From those, the posterior
of q is Gaussian with

    mu1    = K(X_n)^T (K + noise I)^-1 y
    sigma1^2 = double integral - K(X_n)^T (K + noise I)^-1 K(X_n)

and a hypothetical extra observation at xt shrinks the variance by
S(xt)^2, where S = int k_n(xt, x) p(x) dx / sqrt(k_n(xt, xt) + noise).
The expected KL information gain of that observation reduces exactly to
log(sigma1 / sigma2); the four-term form is kept alongside the reduced
one so the cancellation is checkable rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from gpexpect.errors import DegenerateEstimateError
from gpexpect.gp import GpPosterior, posterior_cov, posterior_mean
from gpexpect.kernels import (
    RbfKernel,
    eval_kernel_scaled,
    kernel_cross,
    kernel_vector,
    kernel_vector_jacobian,
)
from gpexpect.mixtures import GaussianMixture

# log-gain sentinel standing in for +inf when sigma2^2 underflows to 0;
# comfortably above any finite log-variance ratio that matters while
# staying exp-able in double precision
GAIN_SENTINEL = 700.0

# predictive variances below this fraction of the amplitude mean the
# candidate is already fully observed (duplicated noiseless point)
_PRED_VAR_FLOOR = 1e-14


@dataclass(frozen=True)
class QEstimate:
    """Gaussian posterior of the integral: mean mu1 and variance sigma1^2."""

    mean: float
    variance: float

    def __post_init__(self):
        v = float(self.variance)
        if v < 0.0:
            if v < -1e-12:
                raise ValueError(f"estimate variance {v} is negative beyond tolerance")
            v = 0.0
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", v)


def _log_det_scale_ratio(ker: RbfKernel, cov: np.ndarray):
    """log |I + inv(L) C| for L = diag(lengthscales), plus chol(L + C).

    Computed as log|L + C| - log|L| through the Cholesky factor, which
    stays finite and accurate for strongly anisotropic scales.
    """
    total = cov + np.diag(ker.lengthscales)
    try:
        chol = np.linalg.cholesky(0.5 * (total + total.T))
    except np.linalg.LinAlgError as exc:
        raise ValueError("component covariance must be SPD") from exc
    log_det = 2.0 * np.sum(np.log(np.diag(chol))) - np.sum(np.log(ker.lengthscales))
    return float(log_det), chol


def kernel_mean_component(x, ker: RbfKernel, mean, cov, det_power: float = -0.5) -> float:
    """Integral of k(x, .) against one Gaussian component N(mean, cov).

    Closed form: |I + inv(Lambda) cov|^(-1/2) * k(x, mean; cov + Lambda).
    ``det_power`` exists as a validation hook (the determinant exponent is
    exactly the part a typo would get wrong); leave it at the default.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    log_det, _ = _log_det_scale_ratio(ker, cov)
    factor = np.exp(det_power * log_det)
    return float(
        factor
        * eval_kernel_scaled(x, mean, ker.amplitude_sq, cov + np.diag(ker.lengthscales))
    )


def kernel_mean(x, ker: RbfKernel, mix: GaussianMixture, det_power: float = -0.5) -> float:
    """Kernel mean K(x) = int k(x, x') p(x') dx' under the mixture."""
    return float(
        sum(
            w * kernel_mean_component(x, ker, m, c, det_power=det_power)
            for w, m, c in zip(mix.weights, mix.means, mix.covs)
        )
    )


def kernel_mean_gradient(x, ker: RbfKernel, mix: GaussianMixture) -> np.ndarray:
    """Gradient of the kernel mean in x.

    Per component: -(cov + Lambda)^-1 (x - mean) * K_i(x).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grad = np.zeros(ker.dim)
    for w, m, c in zip(mix.weights, mix.means, mix.covs):
        log_det, chol = _log_det_scale_ratio(ker, c)
        ki = np.exp(-0.5 * log_det) * eval_kernel_scaled(
            x, m, ker.amplitude_sq, c + np.diag(ker.lengthscales)
        )
        direction = cho_solve((chol, True), x - m, check_finite=False)
        grad -= w * ki * direction
    return grad


def double_kernel_mean(ker: RbfKernel, mix: GaussianMixture) -> float:
    """Double integral of the kernel against the mixture in both slots.

    Sum over component pairs of
    |Lambda|^(1/2) |Lambda + C_i + C_j|^(-1/2) k(m_i, m_j; Lambda + C_i + C_j),
    the prior variance of the integral estimate.
    """
    lam = np.diag(ker.lengthscales)
    log_lam = np.sum(np.log(ker.lengthscales))
    total = 0.0
    k = mix.n_components
    for i in range(k):
        for j in range(i, k):
            scale = lam + mix.covs[i] + mix.covs[j]
            chol = np.linalg.cholesky(0.5 * (scale + scale.T))
            log_factor = 0.5 * log_lam - np.sum(np.log(np.diag(chol)))
            term = (
                mix.weights[i]
                * mix.weights[j]
                * np.exp(log_factor)
                * eval_kernel_scaled(mix.means[i], mix.means[j], ker.amplitude_sq, scale)
            )
            total += term if i == j else 2.0 * term
    return float(total)


@dataclass(frozen=True, eq=False)
class AcquisitionContext:
    """Precomputed state making each acquisition probe O(n).

    ``kmean_train`` holds K(x_i) at the training inputs, ``solved_kmean``
    the Gram-system solve of that vector.  The private component caches
    (Cholesky of cov_i + Lambda, determinant prefactors) let kernel-mean
    evaluations at probes skip refactorizations.
    """

    gp: GpPosterior
    mix: GaussianMixture
    kmean_train: np.ndarray
    solved_kmean: np.ndarray
    mu1: float
    sigma1_sq: float
    _comp_chols: np.ndarray = field(repr=False)
    _comp_factors: np.ndarray = field(repr=False)

    @property
    def estimate(self) -> QEstimate:
        return QEstimate(mean=self.mu1, variance=self.sigma1_sq)


def _kernel_mean_many(ctx: AcquisitionContext, X: np.ndarray) -> np.ndarray:
    """K(x) for each row of X, using the context's component caches."""
    ker = ctx.gp.kernel
    out = np.zeros(X.shape[0])
    for i in range(ctx.mix.n_components):
        u = solve_triangular(
            ctx._comp_chols[i], (X - ctx.mix.means[i]).T, lower=True, check_finite=False
        )
        quad = np.sum(u * u, axis=0)
        out += ctx.mix.weights[i] * ctx._comp_factors[i] * ker.amplitude_sq * np.exp(-0.5 * quad)
    return out


def build_context(gp: GpPosterior, mix: GaussianMixture) -> AcquisitionContext:
    """Assemble the estimate (mu1, sigma1^2) and the probe caches."""
    if gp.dim != mix.dim:
        raise ValueError(f"gp dimension {gp.dim} != mixture dimension {mix.dim}")
    ker = gp.kernel

    comp_chols = np.empty((mix.n_components, ker.dim, ker.dim))
    comp_factors = np.empty(mix.n_components)
    for i in range(mix.n_components):
        log_det, chol = _log_det_scale_ratio(ker, mix.covs[i])
        comp_chols[i] = chol
        comp_factors[i] = np.exp(-0.5 * log_det)

    if gp.n == 0:
        kmean_train = np.zeros(0)
        solved = np.zeros(0)
        mu1 = 0.0
        sigma1_sq = double_kernel_mean(ker, mix)
    else:
        u = np.stack(
            [
                solve_triangular(
                    comp_chols[i], (gp.data.X - mix.means[i]).T, lower=True, check_finite=False
                )
                for i in range(mix.n_components)
            ]
        )
        quad = np.sum(u * u, axis=1)
        kmean_train = (
            (mix.weights * comp_factors) @ (ker.amplitude_sq * np.exp(-0.5 * quad))
        )
        solved = cho_solve((gp.gram_factor, True), kmean_train, check_finite=False)
        mu1 = float(kmean_train @ gp.weights)
        sigma1_sq = float(double_kernel_mean(ker, mix) - kmean_train @ solved)
    sigma1_sq = max(sigma1_sq, 0.0)
    return AcquisitionContext(
        gp=gp,
        mix=mix,
        kmean_train=kmean_train,
        solved_kmean=solved,
        mu1=mu1,
        sigma1_sq=sigma1_sq,
        _comp_chols=comp_chols,
        _comp_factors=comp_factors,
    )


def posterior_kernel_mean(ctx: AcquisitionContext, xt) -> float:
    """v(xt) = int k_n(xt, x) p(x) dx, the posterior-covariance kernel mean."""
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    v = _kernel_mean_many(ctx, xt[None, :])[0]
    if ctx.gp.n:
        v -= kernel_vector(xt, ctx.gp.data.X, ctx.gp.kernel) @ ctx.solved_kmean
    return float(v)


def _predictive_variance(ctx: AcquisitionContext, xt) -> float:
    return posterior_cov(ctx.gp, xt, xt) + ctx.gp.noise.variance


def variance_reduction_s(ctx: AcquisitionContext, xt) -> float:
    """S(xt) = v(xt) / sqrt(k_n(xt, xt) + noise); S^2 is the variance drop.

    Returns 0 when the predictive variance vanishes (noiseless duplicate):
    the observation would carry no new information.
    """
    denom = _predictive_variance(ctx, xt)
    if denom < _PRED_VAR_FLOOR * ctx.gp.kernel.amplitude_sq:
        return 0.0
    return posterior_kernel_mean(ctx, xt) / np.sqrt(denom)


def acquisition_value(ctx: AcquisitionContext, xt) -> float:
    """The acquisition S(xt)^2, the reduction in estimate variance."""
    s = variance_reduction_s(ctx, xt)
    return s * s


def acquisition_gradient(ctx: AcquisitionContext, xt) -> np.ndarray:
    """Gradient of S^2 = v^2 / D by the quotient rule.

    grad v comes from the kernel-mean gradient minus the Jacobian of the
    cross-kernel vector against the solved kernel-mean system; grad D is
    the gradient of the posterior variance, -2 J^T (Gram^-1 k(xt, X_n)).
    """
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    gp = ctx.gp
    D = _predictive_variance(ctx, xt)
    if D < _PRED_VAR_FLOOR * gp.kernel.amplitude_sq:
        return np.zeros(gp.dim)
    v = posterior_kernel_mean(ctx, xt)
    grad_v = kernel_mean_gradient(xt, gp.kernel, ctx.mix)
    if gp.n:
        J = kernel_vector_jacobian(xt, gp.data.X, gp.kernel)
        grad_v = grad_v - J.T @ ctx.solved_kmean
        kv = kernel_vector(xt, gp.data.X, gp.kernel)
        solved_kv = cho_solve((gp.gram_factor, True), kv, check_finite=False)
        grad_D = -2.0 * (J.T @ solved_kv)
    else:
        grad_D = np.zeros(gp.dim)
    return (2.0 * v / D) * grad_v - (v * v / D**2) * grad_D


@dataclass(frozen=True)
class HypotheticalUpdate:
    """Effect of one hypothetical observation on the integral estimate.

    The updated mean is affine in the observed value,
    mu2(y) = mu1 + innovation_coeff * (y - pred_mean), while the updated
    variance sigma2_sq does not depend on it at all.
    """

    innovation_coeff: float
    pred_mean: float
    sigma2_sq: float


def hypothetical_update(ctx: AcquisitionContext, xt) -> HypotheticalUpdate:
    """Innovation coefficient, predicted value, and sigma2^2 at ``xt``."""
    denom = _predictive_variance(ctx, xt)
    pred = posterior_mean(ctx.gp, xt)
    if denom < _PRED_VAR_FLOOR * ctx.gp.kernel.amplitude_sq:
        return HypotheticalUpdate(
            innovation_coeff=0.0, pred_mean=pred, sigma2_sq=ctx.sigma1_sq
        )
    v = posterior_kernel_mean(ctx, xt)
    sigma2_sq = max(ctx.sigma1_sq - v * v / denom, 0.0)
    return HypotheticalUpdate(
        innovation_coeff=v / denom, pred_mean=pred, sigma2_sq=sigma2_sq
    )


def kl_gaussian(mu_a: float, var_a: float, mu_b: float, var_b: float) -> float:
    """KL divergence between two univariate Gaussians, N_a against N_b."""
    if var_a <= 0 or var_b <= 0:
        raise ValueError("variances must be positive")
    val = (
        0.5 * np.log(var_b / var_a)
        + (var_a + (mu_a - mu_b) ** 2) / (2.0 * var_b)
        - 0.5
    )
    return max(float(val), 0.0)


def info_gain_four_term(ctx: AcquisitionContext, xt):
    """Expected KL information gain in its un-simplified four-term form.

    Returns ``(g, (t1, t2, t3, t4))`` with
    t1 = log(sigma1/sigma2), t2 = sigma2^2 / (2 sigma1^2), t3 = -1/2,
    t4 = v^2 / (2 sigma1^2 (k_n(xt, xt) + noise)).
    The last three terms cancel exactly in theory; they are returned so
    the cancellation is observable.

    Raises
    ------
    DegenerateEstimateError
        If sigma1^2 is zero: the integral is already known exactly.
    """
    if ctx.sigma1_sq <= 0.0:
        raise DegenerateEstimateError("estimate variance is zero; nothing to gain")
    denom = _predictive_variance(ctx, xt)
    if denom < _PRED_VAR_FLOOR * ctx.gp.kernel.amplitude_sq:
        v = 0.0
        sigma2_sq = ctx.sigma1_sq
        t4 = 0.0
    else:
        v = posterior_kernel_mean(ctx, xt)
        sigma2_sq = max(ctx.sigma1_sq - v * v / denom, 0.0)
        t4 = v * v / (2.0 * ctx.sigma1_sq * denom)
    if sigma2_sq == 0.0:
        t1 = GAIN_SENTINEL
    else:
        t1 = 0.5 * np.log(ctx.sigma1_sq / sigma2_sq)
    t2 = sigma2_sq / (2.0 * ctx.sigma1_sq)
    t3 = -0.5
    g = t1 + t2 + t3 + t4
    return float(g), (float(t1), float(t2), float(t3), float(t4))


def info_gain_simplified(ctx: AcquisitionContext, xt) -> float:
    """The reduced information gain log(sigma1 / sigma2(xt)).

    Equal to the four-term form; a zero sigma2^2 (complete variance
    collapse) maps to the finite sentinel so argmax semantics survive.
    """
    if ctx.sigma1_sq <= 0.0:
        raise DegenerateEstimateError("estimate variance is zero; nothing to gain")
    sigma2_sq = hypothetical_update(ctx, xt).sigma2_sq
    if sigma2_sq == 0.0:
        return GAIN_SENTINEL
    return float(0.5 * np.log(ctx.sigma1_sq / sigma2_sq))


def _check_shared_instance(contexts) -> None:
    first = contexts[0]
    for ctx in contexts[1:]:
        if not (
            np.array_equal(ctx.gp.data.X, first.gp.data.X)
            and np.array_equal(ctx.gp.data.y, first.gp.data.y)
            and np.array_equal(ctx.mix.weights, first.mix.weights)
            and np.array_equal(ctx.mix.means, first.mix.means)
            and np.array_equal(ctx.mix.covs, first.mix.covs)
        ):
            raise ValueError("contexts must share the same data and mixture")


def multi_theta_acquisition(contexts, xt) -> float:
    """Mean simplified gain across hyperparameter samples.

    With one context this is exactly :func:`info_gain_simplified`; its
    argmax over candidates equals the argmin of the product of the
    per-sample sigma2^2 values.
    """
    contexts = list(contexts)
    if not contexts:
        raise ValueError("need at least one acquisition context")
    _check_shared_instance(contexts)
    return float(np.mean([info_gain_simplified(ctx, xt) for ctx in contexts]))


def multi_theta_gradient(contexts, xt) -> np.ndarray:
    """Gradient of the mean simplified gain.

    Per sample, d/dx log(sigma1/sigma2) = (d/dx S^2) / (2 sigma2^2);
    samples sitting at the variance-collapse sentinel contribute zero
    (the sentinel is a plateau).
    """
    contexts = list(contexts)
    if not contexts:
        raise ValueError("need at least one acquisition context")
    _check_shared_instance(contexts)
    grad = np.zeros(contexts[0].gp.dim)
    for ctx in contexts:
        sigma2_sq = hypothetical_update(ctx, xt).sigma2_sq
        if sigma2_sq > 0.0:
            grad += acquisition_gradient(ctx, xt) / (2.0 * sigma2_sq)
    return grad / len(contexts)


def acquisition_profile(ctx: AcquisitionContext, X):
    """Vectorized acquisition quantities over candidate rows of ``X``.

    Returns a dict of arrays: ``s_sq`` (the acquisition), ``sigma2_sq``,
    ``gain_simplified``, and ``gain_four_term``.  Used for dense grids
    where per-point calls would dominate runtime.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if ctx.gp.dim == 1 else X.reshape(1, -1)
    gp = ctx.gp
    kmean = _kernel_mean_many(ctx, X)
    if gp.n:
        C = kernel_cross(X, gp.data.X, gp.kernel)
        v = kmean - C @ ctx.solved_kmean
        U = solve_triangular(gp.gram_factor, C.T, lower=True, check_finite=False)
        pred_var = gp.kernel.amplitude_sq - np.sum(U * U, axis=0) + gp.noise.variance
    else:
        v = kmean
        pred_var = np.full(X.shape[0], gp.kernel.amplitude_sq + gp.noise.variance)

    live = pred_var >= _PRED_VAR_FLOOR * gp.kernel.amplitude_sq
    s_sq = np.zeros(X.shape[0])
    np.divide(v * v, pred_var, out=s_sq, where=live)
    sigma2_sq = np.maximum(ctx.sigma1_sq - s_sq, 0.0)

    gain = np.full(X.shape[0], GAIN_SENTINEL)
    positive = sigma2_sq > 0.0
    gain[positive] = 0.5 * np.log(ctx.sigma1_sq / sigma2_sq[positive])

    t1 = gain
    t2 = sigma2_sq / (2.0 * ctx.sigma1_sq)
    t4 = np.zeros(X.shape[0])
    np.divide(v * v, 2.0 * ctx.sigma1_sq * pred_var, out=t4, where=live)
    four = t1 + t2 - 0.5 + t4
    return {
        "s_sq": s_sq,
        "sigma2_sq": sigma2_sq,
        "gain_simplified": gain,
        "gain_four_term": four,
    }
