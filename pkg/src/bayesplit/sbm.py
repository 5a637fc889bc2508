"""Stochastic block model: likelihood, conjugate marginal and Gibbs sampler.

Counts use unordered dyads: ``n_kk = n_k (n_k - 1) / 2`` within a block and
``n_kk' = n_k n_k'`` across blocks, with one Bernoulli draw per dyad.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import betaln, xlog1py, xlogy

from .distributions import sample_dirichlet, truncated_beta_pair
from .graph import LabelVector, UndirectedGraph
from .spaces import ParamSpace, Region, make_space

logger = logging.getLogger(__name__)

_EPS = 1e-12


@dataclass
class SbmParams:
    B: np.ndarray
    pi: np.ndarray
    gamma: np.ndarray | None = None

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.pi = np.asarray(self.pi, dtype=float)
        K = self.B.shape[0]
        if self.B.shape != (K, K) or self.pi.shape != (K,):
            raise ValueError("B must be KxK and pi length K")
        if np.any(self.B < 0) or np.any(self.B > 1):
            raise ValueError("B entries must lie in [0, 1]")
        if not np.isclose(self.pi.sum(), 1.0):
            raise ValueError("pi must sum to 1")
        if self.gamma is None:
            self.gamma = np.ones(K)

    @property
    def K(self) -> int:
        return self.B.shape[0]


@dataclass
class SbmCounts:
    sizes: np.ndarray   # n_k
    dyads: np.ndarray   # n_kk' (symmetric)
    edges: np.ndarray   # A[kk'] (symmetric)


def _zero_based(z, n):
    if isinstance(z, LabelVector):
        return z.zero_based, z.K
    z = np.asarray(z, dtype=np.int64)
    if len(z) != n:
        raise ValueError("label vector length must equal n")
    return z, int(z.max()) + 1 if n else 1


def sbm_counts(g: UndirectedGraph, z, K: int | None = None) -> SbmCounts:
    """Block sizes, unordered dyad counts and edge counts per block pair."""
    z0, k_lab = _zero_based(z, g.n)
    K = k_lab if K is None else K
    sizes = np.bincount(z0, minlength=K).astype(np.int64)
    dyads = np.outer(sizes, sizes)
    dyads[np.diag_indices(K)] = sizes * (sizes - 1) // 2
    edges = np.zeros((K, K), dtype=np.int64)
    if g.n_edges:
        a, b = z0[g.edges[:, 0]], z0[g.edges[:, 1]]
        np.add.at(edges, (np.minimum(a, b), np.maximum(a, b)), 1)
        edges = edges + np.triu(edges, 1).T
    return SbmCounts(sizes, dyads, edges)


def _loglik_counts(c: SbmCounts, B: np.ndarray, iu=None) -> float:
    iu = np.triu_indices(B.shape[0]) if iu is None else iu
    A, N, P = c.edges[iu], c.dyads[iu], B[iu]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(A, P) + xlog1py(N - A, -P)
    return float(np.sum(terms))


def sbm_log_likelihood(g: UndirectedGraph, z, p: SbmParams | np.ndarray) -> float:
    """``sum_{i<j} A_ij log B(z_i,z_j) + (1 - A_ij) log(1 - B(z_i,z_j))``.

    Returns ``-inf`` (and logs a warning) when a probability of exactly 0 or
    1 contradicts an observed dyad.
    """
    B = p.B if isinstance(p, SbmParams) else np.asarray(p, dtype=float)
    z0, _ = _zero_based(z, g.n)
    if z0.size and z0.max() >= B.shape[0]:
        raise ValueError("labels exceed the dimension of B")
    ll = _loglik_counts(sbm_counts(g, z0, B.shape[0]), B)
    if ll == -np.inf:
        logger.warning("sbm_log_likelihood: degenerate block probability contradicts the data")
    return ll


def sbm_exact_log_marginal(g: UndirectedGraph, z) -> float:
    """Exact ``log int P(Y | B, z) dP(B)`` under independent Uniform(0,1) priors."""
    c = sbm_counts(g, z)
    iu = np.triu_indices(len(c.sizes))
    A, N = c.edges[iu], c.dyads[iu]
    return float(np.sum(betaln(1 + A, 1 + N - A) - betaln(1, 1)))


def sbm_param_space(t: float) -> ParamSpace:
    """Null ``{a >= b, a - b < t}`` (the diagonal ``a = b`` at ``t = 0``) versus ``{a - b >= t}``."""
    return make_space("sbm", t)


def sbm_label_conditional(g: UndirectedGraph, z, i: int, p: SbmParams) -> np.ndarray:
    """Full conditional ``P(z_i = k | z_-i, A, pi, B)`` (reference implementation)."""
    z0 = np.array(_zero_based(z, g.n)[0])
    A = g.adjacency
    others = np.arange(g.n) != i
    logp = np.log(p.pi).astype(float)
    for k in range(p.K):
        probs = p.B[k, z0[others]]
        with np.errstate(divide="ignore"):
            logp[k] += np.sum(xlogy(A[i, others], probs) + xlog1py(1 - A[i, others], -probs))
    logp -= logp.max()
    w = np.exp(logp)
    return w / w.sum()


@njit(cache=True)
def _label_sweep(indptr, indices, z, sizes, logB, log1mB, logpi, order, u):
    K = logB.shape[0]
    cnt = np.zeros(K)
    lp = np.zeros(K)
    for idx in range(order.shape[0]):
        i = order[idx]
        sizes[z[i]] -= 1
        for k in range(K):
            cnt[k] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            cnt[z[indices[p]]] += 1.0
        m = -np.inf
        for k in range(K):
            s = logpi[k]
            for l in range(K):
                s += cnt[l] * logB[k, l] + (sizes[l] - cnt[l]) * log1mB[k, l]
            lp[k] = s
            if s > m:
                m = s
        tot = 0.0
        for k in range(K):
            lp[k] = np.exp(lp[k] - m)
            tot += lp[k]
        r = u[idx] * tot
        knew = K - 1
        acc = 0.0
        for k in range(K):
            acc += lp[k]
            if r < acc:
                knew = k
                break
        z[i] = knew
        sizes[knew] += 1


@dataclass
class SbmState:
    z: np.ndarray
    B: np.ndarray
    pi: np.ndarray
    counts: SbmCounts | None = None  # cached while labels are held fixed


class SbmModel:
    """Gibbs sampler for the K-block SBM with Uniform(0,1) block probabilities.

    With a :class:`~bayesplit.spaces.Region` restriction (``K == 2`` only) the
    block matrix takes the symmetric form ``[[a, b], [b, a]]`` with ``(a, b)``
    confined to the region.
    """

    component_axes = {"pi": (0,), "B": (0, 1)}

    def __init__(self, g: UndirectedGraph, K: int = 2, gamma=1.0):
        self.g = g
        self.K = int(K)
        self.n_nodes = g.n
        self.gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (self.K,)).copy()
        deg = np.bincount(g.edges.ravel(), minlength=g.n) if g.n_edges else np.zeros(g.n, np.int64)
        self._indptr = np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)
        nbr = np.concatenate([g.edges, g.edges[:, ::-1]]) if g.n_edges else np.zeros((0, 2), np.int64)
        nbr = nbr[np.lexsort((nbr[:, 1], nbr[:, 0]))]
        self._indices = nbr[:, 1].astype(np.int64).copy()
        self._iu = np.triu_indices(self.K)

    def initial_state(self, rng, z=None, region: Region | None = None) -> SbmState:
        if z is None:
            z = rng.integers(self.K, size=self.n_nodes)
        B = np.full((self.K, self.K), 0.5)
        return SbmState(np.asarray(z, dtype=np.int64).copy(), B, np.full(self.K, 1.0 / self.K))

    def _update_B(self, c: SbmCounts, state: SbmState, rng, region: Region | None):
        K = self.K
        if region is None:
            B = np.empty((K, K))
            for k in range(K):
                for l in range(k, K):
                    A, N = c.edges[k, l], c.dyads[k, l]
                    B[k, l] = B[l, k] = rng.beta(1 + A, 1 + N - A)
            state.B = B
            return
        if K != 2:
            raise ValueError("restricted updates need K == 2")
        Aw = c.edges[0, 0] + c.edges[1, 1]
        Nw = c.dyads[0, 0] + c.dyads[1, 1]
        Ab, Nb = c.edges[0, 1], c.dyads[0, 1]
        if region.is_point:
            a = b = rng.beta(1 + Aw + Ab, 1 + Nw + Nb - Aw - Ab)
        else:
            a, b = truncated_beta_pair(rng, (1 + Aw, 1 + Nw - Aw), (1 + Ab, 1 + Nb - Ab),
                                       region.t, region.side,
                                       current=(state.B[0, 0], state.B[0, 1]))
        state.B = np.array([[a, b], [b, a]])

    def sweep(self, state: SbmState, rng, region: Region | None = None, fix_labels=False) -> float:
        c = state.counts if fix_labels and state.counts is not None else sbm_counts(self.g, state.z, self.K)
        state.counts = c if fix_labels else None
        state.pi = sample_dirichlet(rng, self.gamma + c.sizes)
        self._update_B(c, state, rng, region)
        if not fix_labels:
            Bc = np.clip(state.B, _EPS, 1 - _EPS)
            order = rng.permutation(self.n_nodes)
            u = rng.random(self.n_nodes)
            sizes = c.sizes.copy()
            with np.errstate(divide="ignore"):
                logpi = np.log(state.pi)
            _label_sweep(self._indptr, self._indices, state.z, sizes, np.log(Bc),
                         np.log1p(-Bc), logpi, order, u)
            c = sbm_counts(self.g, state.z, self.K)
        return _loglik_counts(c, state.B, self._iu)

    def snapshot(self, state: SbmState) -> dict:
        return {"pi": state.pi.copy(), "B": state.B.copy()}

    def labels(self, state: SbmState) -> np.ndarray:
        return state.z

    def log_likelihood_at(self, params: dict, z) -> float:
        return _loglik_counts(sbm_counts(self.g, z, self.K), params["B"])

    def restricted_value(self, params: dict):
        """The ``(a, b)`` pair a region constrains."""
        return params["B"][0, 0], params["B"][0, 1]
