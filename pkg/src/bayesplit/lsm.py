"""Latent space model with a Gaussian-mixture prior on node positions.

``logit P(Y_ij = 1) = beta0 * x_ij - beta * |z_i - z_j|`` over unordered
dyads, ``z_i ~ sum_k lambda_k MVN_d(mu_k, sigma_k^2 I)``.

The likelihood stored per Gibbs draw (and used for Bayes factors and DIC) is
the complete-data term ``log P(Y | z, beta) + sum_i log sum_k lambda_k
phi_d(z_i; mu_k, sigma_k^2 I)``: community parameters only reach the data
through the position density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.cluster.vq import kmeans2
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.special import expit, ndtr

from .distributions import sample_dirichlet, scaled_inv_chi2, truncated_normal
from .graph import UndirectedGraph
from .spaces import ParamSpace, Region, make_space

_LOG2PI = math.log(2.0 * math.pi)
# per-coordinate proposal scale bounds during burn-in adaptation
_SCALE_MIN, _SCALE_MAX = 1e-3, 5.0


@dataclass
class LsmParams:
    z: np.ndarray
    beta: float = 1.0
    lam: np.ndarray = None
    mu: np.ndarray = None
    sigma2: np.ndarray = None
    beta0: float = 0.0

    def __post_init__(self):
        self.z = np.atleast_2d(np.asarray(self.z, dtype=float))
        n, d = self.z.shape
        if self.lam is None:
            self.lam = np.ones(1)
        self.lam = np.asarray(self.lam, dtype=float)
        K = len(self.lam)
        if self.mu is None:
            self.mu = np.zeros((K, d))
        self.mu = np.asarray(self.mu, dtype=float).reshape(K, d)
        if self.sigma2 is None:
            self.sigma2 = np.ones(K)
        self.sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=float), (K,)).copy()
        if not np.isclose(self.lam.sum(), 1.0):
            raise ValueError("lambda must sum to 1")
        if np.any(self.sigma2 <= 0):
            raise ValueError("component variances must be > 0")

    @property
    def d(self) -> int:
        return self.z.shape[1]

    @property
    def K(self) -> int:
        return len(self.lam)


@dataclass
class LsmPriors:
    """``beta ~ N(xi, psi)``, ``lambda ~ Dir(nu)``, ``mu_k ~ N(0, omega2 I)``,
    ``sigma_k^2 ~ sigma02 / chi^2_df``; proposal scales ``step_z``, ``step_beta``."""

    xi: float = 1.0
    psi: float = 1.0
    nu: float = 1.0
    omega2: float = 100.0
    sigma02: float = 0.1
    df: float = 2.0
    step_z: float = 0.1
    step_beta: float = 0.05


@dataclass
class LsmSufficientStats:
    sizes: np.ndarray
    means: np.ndarray
    spread: np.ndarray  # s_k^2 = (1/d) sum ||z_i - mu_k||^2 over members


def lsm_stats(z, labels, mu, K=None) -> LsmSufficientStats:
    z = np.atleast_2d(z)
    labels = np.asarray(labels, dtype=np.int64)
    K = mu.shape[0] if K is None else K
    sizes = np.bincount(labels, minlength=K)
    sums = np.zeros((K, z.shape[1]))
    np.add.at(sums, labels, z)
    means = np.divide(sums, sizes[:, None], out=np.zeros_like(sums), where=sizes[:, None] > 0)
    sq = np.sum((z - mu[labels]) ** 2, axis=1)
    spread = np.bincount(labels, weights=sq, minlength=K) / z.shape[1]
    return LsmSufficientStats(sizes, means, spread)


@njit(cache=True)
def _dyad_kernel(adj, z, beta, offset, has_offset):
    n, d = z.shape
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for c in range(d):
                s += (z[i, c] - z[j, c]) ** 2
            eta = -beta * math.sqrt(s)
            if has_offset:
                eta += offset[i, j]
            total += adj[i, j] * eta - (max(eta, 0.0) + math.log1p(math.exp(-abs(eta))))
    return total


def _dyad_loglik(adj, z, beta, beta0=0.0, x=None) -> float:
    z = np.ascontiguousarray(np.atleast_2d(z), dtype=np.float64)
    adj = np.asarray(adj, dtype=np.float64)
    if x is None:
        return float(_dyad_kernel(adj, z, float(beta), np.zeros((1, 1)), False))
    off = beta0 * np.asarray(x, dtype=np.float64)
    return float(_dyad_kernel(adj, z, float(beta), off, True))


def lsm_log_likelihood(g: UndirectedGraph, p: LsmParams, x=None) -> float:
    """``sum_{i<j} log Bernoulli(Y_ij; expit(beta0 x_ij - beta |z_i - z_j|))``."""
    if p.z.shape[0] != g.n:
        raise ValueError("need one latent position per node")
    return _dyad_loglik(g.adjacency, p.z, p.beta, p.beta0, x)


def edge_probability(dist, beta: float, offset: float = 0.0):
    return expit(offset - beta * np.asarray(dist, dtype=float))


def mixture_logpdf(z, lam, mu, sigma2) -> np.ndarray:
    """Per-node ``log sum_k lambda_k phi_d(z_i; mu_k, sigma_k^2 I)``."""
    with np.errstate(divide="ignore"):
        lp = _component_logpdf(z, mu, sigma2) + np.log(lam)[None, :]
    top = lp.max(axis=1)
    return top + np.log(np.sum(np.exp(lp - top[:, None]), axis=1))


def _component_logpdf(z, mu, sigma2):
    z = np.atleast_2d(z)
    d = z.shape[1]
    sq = np.sum((z[:, None, :] - mu[None, :, :]) ** 2, axis=2)
    return -0.5 * (d * (_LOG2PI + np.log(sigma2))[None, :] + sq / sigma2[None, :])


def responsibilities(z, lam, mu, sigma2) -> np.ndarray:
    """``lambda_k phi_d(z_i; mu_k, sigma_k^2 I)`` normalised over ``k``."""
    with np.errstate(divide="ignore"):
        lp = _component_logpdf(z, mu, sigma2) + np.log(lam)[None, :]
    lp -= lp.max(axis=1, keepdims=True)
    w = np.exp(lp)
    return w / w.sum(axis=1, keepdims=True)


def mu_posterior(stats: LsmSufficientStats, sigma2, omega2):
    """Conditional mean and variance of every ``mu_k``."""
    denom = stats.sizes + sigma2 / omega2
    return stats.sizes[:, None] * stats.means / denom[:, None], sigma2 / denom


def mh_log_ratio(logpost_new: float, logpost_old: float) -> float:
    return min(0.0, logpost_new - logpost_old)


@njit(cache=True, inline="always")
def _logistic_term(y, eta):
    # y * eta - log(1 + exp(eta))
    return y * eta - (max(eta, 0.0) + math.log1p(math.exp(-abs(eta))))


@njit(cache=True)
def _z_sweep(adj, z, labels, mu, sigma2, beta, offset, has_offset, step, order, eps, logu):
    """Random-scan Metropolis over positions; returns the acceptance count and
    the dyad log-likelihood of the final positions."""
    n, d = z.shape
    cache = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dd = 0.0
            for c in range(d):
                dd += (z[i, c] - z[j, c]) ** 2
            eta = -beta * math.sqrt(dd)
            if has_offset:
                eta += offset[i, j]
            v = _logistic_term(adj[i, j], eta)
            cache[i, j] = v
            cache[j, i] = v
    fresh = np.empty(n)
    accepted = 0
    prop = np.empty(d)
    for idx in range(n):
        i = order[idx]
        k = labels[i]
        so = 0.0
        sn = 0.0
        for c in range(d):
            prop[c] = z[i, c] + step * eps[idx, c]
            so += (z[i, c] - mu[k, c]) ** 2
            sn += (prop[c] - mu[k, c]) ** 2
        delta = -0.5 * (sn - so) / sigma2[k]
        for j in range(n):
            if j == i:
                continue
            dd = 0.0
            for c in range(d):
                dd += (prop[c] - z[j, c]) ** 2
            eta = -beta * math.sqrt(dd)
            if has_offset:
                eta += offset[i, j]
            fresh[j] = _logistic_term(adj[i, j], eta)
            delta += fresh[j] - cache[i, j]
        if logu[idx] < delta:
            for c in range(d):
                z[i, c] = prop[c]
            for j in range(n):
                if j != i:
                    cache[i, j] = fresh[j]
                    cache[j, i] = fresh[j]
            accepted += 1
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += cache[i, j]
    return accepted, total


@dataclass
class LsmState:
    z: np.ndarray
    labels: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    beta: float
    beta0: float = 0.0
    step_z: float = 0.1
    acc: dict = field(default_factory=lambda: {"z": 0, "z_tries": 0, "beta": 0, "beta_tries": 0})
    window: list = field(default_factory=lambda: [0, 0])


class LsmModel:
    """Metropolis-within-Gibbs sampler for the latent space mixture model.

    ``sample_beta=False`` keeps ``beta`` (and ``beta0``) fixed, which is how
    Bayes factors are evaluated.  During burn-in the position proposal scale
    is adapted toward an acceptance rate near 0.3.
    """

    component_axes = {"lam": (0,), "mu": (0,), "sigma2": (0,)}

    def __init__(self, g: UndirectedGraph, K: int = 2, d: int = 2, beta: float = 1.0,
                 priors: LsmPriors | None = None, covariate=None, beta0: float = 0.0,
                 sample_beta: bool = False, adapt: bool = True):
        self.g = g
        self.K = int(K)
        self.d = int(d)
        self.n_nodes = g.n
        self.priors = priors or LsmPriors()
        self.beta = float(beta)
        self.beta0 = float(beta0)
        self.sample_beta = sample_beta
        self.adapt = adapt
        self.x = None if covariate is None else np.asarray(covariate, dtype=float)
        self._adj = g.adjacency.astype(np.float64)
        self._offset = np.zeros((1, 1)) if self.x is None else self.x
        self._mds = None

    def geodesic_embedding(self) -> np.ndarray:
        """Classical MDS of shortest-path distances (hops), cached.  Pairs in
        different components are placed one hop beyond the largest finite
        distance."""
        if self._mds is None:
            D = shortest_path(csr_matrix(self._adj), unweighted=True, directed=False)
            finite = np.isfinite(D)
            D[~finite] = (D[finite].max() if finite.any() else 0.0) + 1.0
            n = len(D)
            J = np.eye(n) - 1.0 / n
            Bm = -0.5 * J @ (D ** 2) @ J
            vals, vecs = np.linalg.eigh(Bm)
            top = np.argsort(vals)[::-1][: self.d]
            self._mds = vecs[:, top] * np.sqrt(np.maximum(vals[top], 0.0))
        return self._mds

    def initial_state(self, rng, z=None, region: Region | None = None) -> LsmState:
        # positions from the geodesic embedding plus jitter (so chains differ),
        # then labels and means from k-means++ on those positions
        K, d = self.K, self.d
        if z is None:
            z = self.geodesic_embedding() + 0.1 * rng.standard_normal((self.n_nodes, d))
        z = np.asarray(z, dtype=float).reshape(self.n_nodes, d).copy()
        if K > 1 and self.n_nodes >= K:
            mu, labels = kmeans2(z, K, minit="++", seed=rng)
            labels = labels.astype(np.int64)
        else:
            mu = np.repeat(z.mean(axis=0, keepdims=True), K, axis=0)
            labels = rng.integers(K, size=self.n_nodes)
        lam = np.full(K, 1.0 / K)
        if region is not None and region.side == 0:
            mu[:] = mu.mean(axis=0)
        elif region is not None and not region.contains((mu[0], mu[1])):
            mu[1] = mu[0] + region.t
        return LsmState(z, labels, lam, mu, np.ones(K), self.beta, self.beta0,
                        self.priors.step_z)

    def tune(self, state: LsmState, it: int, burn_in: int):
        if not self.adapt or it >= burn_in or it == 0 or it % 20:
            return
        acc, tries = state.window
        if tries:
            rate = acc / tries
            state.step_z *= math.exp(rate - 0.3) if rate != 0.3 else 1.0
            state.step_z = min(max(state.step_z, _SCALE_MIN), _SCALE_MAX)
        state.window = [0, 0]

    # -- conditional updates -------------------------------------------------

    def _update_mu(self, state: LsmState, rng, region: Region | None):
        pr = self.priors
        stats = lsm_stats(state.z, state.labels, state.mu, self.K)
        mean, var = mu_posterior(stats, state.sigma2, pr.omega2)
        if region is None or (region.side == 1 and region.t == 0.0):
            state.mu = mean + np.sqrt(var)[:, None] * rng.standard_normal(mean.shape)
            return
        if self.K != 2:
            raise ValueError("restricted updates need K == 2")
        if region.is_point:
            prec = stats.sizes / state.sigma2
            total = prec.sum() + 1.0 / pr.omega2
            m = (prec[:, None] * stats.means).sum(axis=0) / total
            common = m + rng.standard_normal(self.d) / math.sqrt(total)
            state.mu = np.vstack([common, common])
            return
        state.mu = _restricted_mean_pair(rng, mean, var, region, current=state.mu[0] - state.mu[1])

    def _update_sigma(self, state: LsmState, rng):
        pr = self.priors
        stats = lsm_stats(state.z, state.labels, state.mu, self.K)
        state.sigma2 = np.array([
            scaled_inv_chi2(rng, pr.sigma02 + self.d * stats.spread[k], pr.df + stats.sizes[k] * self.d)
            for k in range(self.K)])

    def _update_labels(self, state: LsmState, rng):
        w = responsibilities(state.z, state.lam, state.mu, state.sigma2)
        cum = np.cumsum(w, axis=1)
        u = rng.random(self.n_nodes)[:, None]
        state.labels = np.minimum((u > cum).sum(axis=1), self.K - 1)

    def _update_beta(self, state: LsmState, rng):
        pr = self.priors
        cur = np.array([state.beta, state.beta0]) if self.x is not None else np.array([state.beta])
        new = cur + pr.step_beta * rng.standard_normal(cur.shape)

        def logpost(b):
            b0 = b[1] if self.x is not None else 0.0
            lp = _dyad_loglik(self._adj, state.z, b[0], b0, self.x)
            return lp - 0.5 * np.sum((b - pr.xi) ** 2) / pr.psi

        state.acc["beta_tries"] += 1
        if math.log(rng.random()) < logpost(new) - logpost(cur):
            state.beta = float(new[0])
            if self.x is not None:
                state.beta0 = float(new[1])
            state.acc["beta"] += 1

    def sweep(self, state: LsmState, rng, region: Region | None = None, fix_labels=False) -> float:
        pr = self.priors
        counts = np.bincount(state.labels, minlength=self.K)
        state.lam = sample_dirichlet(rng, counts + pr.nu)
        self._update_mu(state, rng, region)
        self._update_sigma(state, rng)
        if not fix_labels:
            self._update_labels(state, rng)
        n = self.n_nodes
        acc, dyads = _z_sweep(self._adj, state.z, state.labels, state.mu, state.sigma2,
                              state.beta, self._offset * state.beta0, self.x is not None,
                              state.step_z, rng.permutation(n), rng.standard_normal((n, self.d)),
                              np.log(rng.random(n)))
        state.acc["z"] += acc
        state.acc["z_tries"] += n
        state.window[0] += acc
        state.window[1] += n
        if self.sample_beta:
            self._update_beta(state, rng)
            dyads = _dyad_loglik(self._adj, state.z, state.beta, state.beta0, self.x)
        return dyads + float(np.sum(mixture_logpdf(state.z, state.lam, state.mu, state.sigma2)))

    def complete_loglik(self, z, beta, lam, mu, sigma2, beta0=0.0) -> float:
        ll = _dyad_loglik(self._adj, z, beta, beta0, self.x)
        return ll + float(np.sum(mixture_logpdf(z, lam, mu, sigma2)))

    def snapshot(self, state: LsmState) -> dict:
        return {"z": state.z.copy(), "lam": state.lam.copy(), "mu": state.mu.copy(),
                "sigma2": state.sigma2.copy(), "beta": np.array([state.beta, state.beta0])}

    def labels(self, state: LsmState) -> np.ndarray:
        return state.labels

    def diagnostics(self, state: LsmState) -> dict:
        a = state.acc
        return {"z_acceptance": a["z"] / max(a["z_tries"], 1),
                "beta_acceptance": a["beta"] / max(a["beta_tries"], 1) if self.sample_beta else None,
                "step_z": state.step_z}

    def log_likelihood_at(self, params: dict, labels=None) -> float:
        lam = params["lam"] / params["lam"].sum()
        return self.complete_loglik(params["z"], params["beta"][0], lam, params["mu"],
                                    params["sigma2"], params["beta"][1])

    def classification_loglik(self, params: dict, labels) -> float:
        """``log P(Y | z, beta) + sum_i log lambda_{g_i} phi_d(z_i; mu_{g_i}, sigma_{g_i}^2 I)``
        with component memberships ``g`` held fixed (used for DIC)."""
        g = np.asarray(labels, dtype=np.int64)
        lam = params["lam"] / params["lam"].sum()
        with np.errstate(divide="ignore"):
            lp = _component_logpdf(params["z"], params["mu"], params["sigma2"]) + np.log(lam)[None, :]
        ll = _dyad_loglik(self._adj, params["z"], params["beta"][0], params["beta"][1], self.x)
        return float(ll + lp[np.arange(len(g)), g].sum())

    def restricted_value(self, params: dict):
        return params["mu"][0], params["mu"][1]


def _restricted_mean_pair(rng, mean, var, region: Region, current=None, tries: int = 64):
    """Draw independent ``mu_k ~ N(mean_k, var_k I)``, ``k = 1, 2``, subject to
    the region on ``|mu_1 - mu_2|``.

    The difference ``delta = mu_1 - mu_2`` and the precision-weighted centre
    are independent Gaussians and only ``delta`` is constrained.  ``delta`` is
    drawn by rejection; when that fails it takes one coordinate-wise
    truncated-normal Gibbs step from ``current`` (exact for the same target).
    """
    v1, v2 = var
    vd = v1 + v2
    m_delta = mean[0] - mean[1]
    w1, w2 = 1.0 / v1, 1.0 / v2
    m_centre = (w1 * mean[0] + w2 * mean[1]) / (w1 + w2)
    centre = m_centre + rng.standard_normal(mean.shape[1]) / math.sqrt(w1 + w2)
    sd = math.sqrt(vd)
    prop = m_delta + sd * rng.standard_normal((tries, mean.shape[1]))
    norms = np.linalg.norm(prop, axis=1)
    ok = norms < region.t if region.side == 0 else norms >= region.t
    hit = np.flatnonzero(ok)
    if hit.size:
        delta = prop[hit[0]]
    else:
        delta = _delta_gibbs(rng, m_delta, sd, region, current)
    return np.vstack([centre + delta * v1 / vd, centre - delta * v2 / vd])


def _trunc_normal(rng, loc, sd, lo, hi):
    return truncated_normal(rng, loc, sd, lo, hi)


def _delta_gibbs(rng, m, sd, region: Region, current):
    t = region.t
    d = len(m)
    if current is None or (np.linalg.norm(current) < t) != (region.side == 0):
        current = np.zeros(d)
        current[0] = 0.5 * t if region.side == 0 else t
    delta = np.array(current, dtype=float)
    for c in range(d):
        rest = float(np.sum(delta ** 2) - delta[c] ** 2)
        if region.side == 0:
            r = math.sqrt(max(t * t - rest, 0.0))
            delta[c] = _trunc_normal(rng, m[c], sd, -r, r)
        elif rest >= t * t:
            delta[c] = m[c] + sd * rng.standard_normal()
        else:
            r = math.sqrt(t * t - rest)
            # two tails: pick one by its mass, then draw inside it
            lower = ndtr((-r - m[c]) / sd)
            upper = ndtr((m[c] - r) / sd)
            if rng.random() * (lower + upper) < upper:
                delta[c] = _trunc_normal(rng, m[c], sd, r, np.inf)
            else:
                delta[c] = _trunc_normal(rng, m[c], sd, -np.inf, -r)
    return delta


def lsm_param_space(t: float) -> ParamSpace:
    """Null ``|mu_1 - mu_2| < t`` (``mu_1 = mu_2`` at ``t = 0``) versus ``>= t``."""
    return make_space("lsm", t)


def procrustes_align(z, ref):
    """Rigidly rotate/reflect and translate ``z`` onto ``ref``; returns the
    transformed copy and the ``(rotation, z_centre, ref_centre)`` used."""
    zc, rc = z.mean(axis=0), ref.mean(axis=0)
    u, _, vt = np.linalg.svd((z - zc).T @ (ref - rc))
    R = u @ vt
    return (z - zc) @ R + rc, (R, zc, rc)
