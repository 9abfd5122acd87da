"""Univariate Gaussian mixtures fit by EM, with BIC order selection.

The detector models an epoch's per-sample losses as a 1-D mixture.  Fits
are deterministic: initialization places component means on the
(j - 0.5)/K quantiles with equal weights and the overall variance, and the
EM loop itself has no randomness.  An optional seeded multi-start adds a
few jittered restarts and keeps the best final log-likelihood.

Model order is chosen by the Bayesian information criterion
-2 ln L + k ln n with k = 3K - 1 free parameters in one dimension
(K weights minus the simplex constraint, K means, K variances); the lowest
BIC wins and ties break toward fewer components.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import FitError, UsageError

VAR_FLOOR = 1e-6
_TAG_RESTART = 51


@dataclass
class GmmModel:
    weights: np.ndarray        # (K,), sums to 1
    means: np.ndarray          # (K,), ascending
    variances: np.ndarray      # (K,), each >= VAR_FLOOR
    log_likelihood: float      # of the data the model was fit on
    n_iter: int
    converged: bool
    degenerate: bool = False   # all observations identical while K > 1
    ll_trace: list = None      # log-likelihood after each EM evaluation

    @property
    def k(self):
        return self.weights.shape[0]


def _log_pdf_matrix(obs, weights, means, variances):
    """log(weight_j * N(x_i; mu_j, var_j)) as an (n, K) matrix."""
    diff = obs[:, None] - means[None, :]
    return (np.log(np.maximum(weights, 1e-300))[None, :]
            - 0.5 * np.log(2.0 * np.pi * variances)[None, :]
            - 0.5 * diff * diff / variances[None, :])


def _log_likelihood_rows(obs, weights, means, variances):
    lp = _log_pdf_matrix(obs, weights, means, variances)
    mx = lp.max(axis=1)
    return mx + np.log(np.exp(lp - mx[:, None]).sum(axis=1)), lp


def _em(obs, weights, means, variances, max_iter, tol):
    history = []
    converged = False
    for _ in range(max_iter):
        rows, lp = _log_likelihood_rows(obs, weights, means, variances)
        history.append(float(rows.sum()))
        if len(history) >= 2 and abs(history[-1] - history[-2]) < tol:
            converged = True
            break
        resp = np.exp(lp - rows[:, None])
        totals = resp.sum(axis=0)
        # A starved component keeps its parameters; its weight decays to ~0.
        safe = totals > 1e-12
        weights = totals / obs.shape[0]
        means = means.copy()
        means[safe] = (resp[:, safe] * obs[:, None]).sum(axis=0) / totals[safe]
        diff = obs[:, None] - means[None, :]
        variances = variances.copy()
        variances[safe] = (resp[:, safe] * diff[:, safe] ** 2).sum(axis=0) / totals[safe]
        variances = np.maximum(variances, VAR_FLOOR)
    else:
        # Ran out of iterations right after an M-step; score the final state.
        rows, _ = _log_likelihood_rows(obs, weights, means, variances)
        history.append(float(rows.sum()))
    n_iter = len(history) - 1
    return weights, means, variances, history[-1], n_iter, converged, history


def fit_em(obs, k, max_iter=200, tol=1e-6, restarts=0, seed=0):
    """Fit a K-component univariate mixture; components come back sorted by mean.

    Raises FitError when there are fewer observations than components.
    restarts > 0 adds that many seeded jittered initializations on top of the
    deterministic quantile start and keeps the best final log-likelihood.
    """
    obs = np.asarray(obs, dtype=np.float64).ravel()
    if k < 1:
        raise UsageError(f"component count must be >= 1, got {k}")
    if obs.shape[0] < k:
        raise FitError(f"cannot fit {k} components to {obs.shape[0]} observations")
    if not np.all(np.isfinite(obs)):
        raise FitError("observations must be finite")

    spread = float(obs.var())
    degenerate = bool(spread == 0.0 and k > 1)
    base_means = np.quantile(obs, (np.arange(k) + 0.5) / k)
    base_var = max(spread, VAR_FLOOR)

    starts = [base_means]
    if restarts > 0:
        jitter_rng = np.random.default_rng([seed, _TAG_RESTART])
        scale = math.sqrt(base_var) / 10.0
        for _ in range(restarts):
            starts.append(base_means + scale * jitter_rng.standard_normal(k))

    best = None
    for means0 in starts:
        fit = _em(obs, np.full(k, 1.0 / k), means0.astype(np.float64),
                  np.full(k, base_var), max_iter, tol)
        if best is None or fit[3] > best[3]:
            best = fit
    weights, means, variances, ll, n_iter, converged, history = best

    order = np.argsort(means, kind="stable")
    return GmmModel(weights=weights[order], means=means[order],
                    variances=variances[order], log_likelihood=ll,
                    n_iter=n_iter, converged=converged, degenerate=degenerate,
                    ll_trace=history)


def bic_value(log_likelihood, k, n):
    """-2 ln L + (3K - 1) ln n for a K-component 1-D mixture on n points."""
    if n < 1:
        raise UsageError("BIC needs at least one observation")
    return -2.0 * log_likelihood + (3 * k - 1) * math.log(n)


def bic(model, n):
    return bic_value(model.log_likelihood, model.k, n)


def select_model(obs, k_max=3, max_iter=200, tol=1e-6, restarts=0, seed=0):
    """Fit K = 1..k_max and keep the lowest-BIC model (ties favor fewer).

    Returns (model, trace) where trace lists one dict per candidate K with
    its log-likelihood, BIC, and convergence flags.  Candidate orders that
    exceed the number of observations are not fit.
    """
    obs = np.asarray(obs, dtype=np.float64).ravel()
    if k_max < 1:
        raise UsageError(f"k_max must be >= 1, got {k_max}")
    if obs.shape[0] < 1:
        raise FitError("cannot select a mixture on an empty sample")
    best_model = None
    best_bic = math.inf
    trace = []
    for k in range(1, k_max + 1):
        if obs.shape[0] < k:
            break
        model = fit_em(obs, k, max_iter=max_iter, tol=tol, restarts=restarts, seed=seed)
        score = bic(model, obs.shape[0])
        trace.append({
            "k": k,
            "log_likelihood": model.log_likelihood,
            "bic": score,
            "converged": model.converged,
            "degenerate": model.degenerate,
            "weights": model.weights.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
        })
        if score < best_bic:
            best_bic = score
            best_model = model
    for row in trace:
        row["selected"] = row["k"] == best_model.k
    return best_model, trace


def posteriors(model, x):
    """Responsibility of each component for each point, shape (n, K)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    rows, lp = _log_likelihood_rows(x, model.weights, model.means, model.variances)
    return np.exp(lp - rows[:, None])
