"""Edge-exchangeable block model with Pitman-Yor node frequencies.

Each block ``k`` owns a disjoint node pool with a Pitman-Yor urn
``(alpha_k, theta_k)``.  Every endpoint of every interaction (sender and
receiver alike) is one draw from the urn of its block, so ``D(i)`` is the
node's total number of appearances and ``m_k`` the block's total degree.

Integrating the frequencies out gives the sequential predictive rule

    P(next draw = s) = (D(s) - alpha) / (m + theta)                 seen s
    P(next draw new) = (theta + alpha |P_k|) / (m + theta)

whose product over a sequence equals the Pitman-Yor exchangeable partition
probability of the block's degree sequence.  The samplers use the latter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import gammaln

from .distributions import sample_dirichlet, truncated_beta
from .graph import InteractionSequence, LabelVector
from .spaces import ParamSpace, Region, make_space

_EPS = 1e-12


@dataclass
class EeParams:
    """Block propensities ``B`` (rows sum to one), initiation probabilities
    ``pi``, Pitman-Yor discounts ``alpha`` and strengths ``theta``.

    ``hyper = (a, b, c, d)``: ``theta_k ~ Gamma(a, rate=b)``,
    ``alpha_k ~ Beta(c, d)``.
    """

    B: np.ndarray
    pi: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray
    hyper: tuple = (1.0, 1.0, 1.0, 1.0)
    gamma: np.ndarray | None = None

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        K = self.B.shape[0]
        self.pi = np.asarray(self.pi, dtype=float)
        self.alpha = np.broadcast_to(np.asarray(self.alpha, dtype=float), (K,)).copy()
        self.theta = np.broadcast_to(np.asarray(self.theta, dtype=float), (K,)).copy()
        if self.B.shape != (K, K) or self.pi.shape != (K,):
            raise ValueError("B must be KxK and pi length K")
        if np.any(np.abs(self.B.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("rows of B must sum to 1")
        if np.any(self.alpha < 0) or np.any(self.alpha >= 1):
            raise ValueError("alpha must lie in [0, 1)")
        if np.any(self.theta <= 0):
            raise ValueError("theta must be > 0")
        if self.gamma is None:
            self.gamma = np.ones(K)

    @property
    def K(self) -> int:
        return self.B.shape[0]


@dataclass
class EeCounts:
    mass: np.ndarray       # m_k: total degree per block
    tables: np.ndarray     # n_k: distinct observed nodes per block
    degree: np.ndarray     # D(i): total appearances of each node
    flows: np.ndarray      # interactions from block k to block l
    sends: np.ndarray      # interactions initiated from each block
    members: np.ndarray    # nodes (including unobserved) per block


@njit(cache=True)
def _count_kernel(z, deg, senders, receivers, K):
    mass = np.zeros(K, dtype=np.int64)
    tables = np.zeros(K, dtype=np.int64)
    members = np.zeros(K, dtype=np.int64)
    for i in range(z.shape[0]):
        members[z[i]] += 1
        if deg[i] > 0:
            tables[z[i]] += 1
            mass[z[i]] += deg[i]
    flows = np.zeros((K, K), dtype=np.int64)
    sends = np.zeros(K, dtype=np.int64)
    for m in range(senders.shape[0]):
        a = z[senders[m]]
        flows[a, z[receivers[m]]] += 1
        sends[a] += 1
    return mass, tables, flows, sends, members


def ee_counts(seq: InteractionSequence, z, K: int, deg=None) -> EeCounts:
    z = np.asarray(z, dtype=np.int64)
    if deg is None:
        deg = np.bincount(seq.senders, minlength=seq.n) + np.bincount(seq.receivers, minlength=seq.n)
    mass, tables, flows, sends, members = _count_kernel(z, deg, seq.senders, seq.receivers, K)
    return EeCounts(mass, tables, deg, flows, sends, members)


@njit(cache=True)
def _loglik_kernel(z, deg, sends, flows, logpi, logB, alpha, theta, tables, mass):
    K = logpi.shape[0]
    ll = 0.0
    for k in range(K):
        if sends[k] > 0:
            ll += sends[k] * logpi[k]
        for l in range(K):
            if flows[k, l] > 0:
                ll += flows[k, l] * logB[k, l]
        ll += _block_term(tables[k], mass[k], alpha[k], theta[k])
    for i in range(z.shape[0]):
        if deg[i] > 0:
            al = alpha[z[i]]
            ll += math.lgamma(deg[i] - al) - math.lgamma(1.0 - al)
    return ll


def _labels(z, n):
    if isinstance(z, LabelVector):
        return z.zero_based
    z = np.asarray(z, dtype=np.int64)
    if len(z) != n:
        raise ValueError("label vector length must equal the number of nodes")
    return z


def ee_log_likelihood(seq: InteractionSequence, z, p: EeParams, f) -> float:
    """``sum_m log pi_{z(S_m)} + log f_{S_m} + log B(z(S_m), z(R_m)) + log f_{R_m}``."""
    z = _labels(z, seq.n)
    f = np.asarray(f, dtype=float)
    s, r = seq.senders, seq.receivers
    with np.errstate(divide="ignore"):
        terms = (np.log(p.pi[z[s]]) + np.log(f[s]) + np.log(p.B[z[s], z[r]]) + np.log(f[r]))
    return float(np.sum(terms))


def py_predictive(degree: int, alpha: float, theta: float, mass: int, tables: int) -> float:
    """Probability that the next draw from an urn is a given seen node
    (``degree > 0``) or a new node (``degree == 0``)."""
    if alpha < 0 or alpha >= 1 or theta <= -alpha:
        raise ValueError("invalid Pitman-Yor parameters")
    if mass == 0:
        return 1.0 if degree == 0 else 0.0
    w = (degree - alpha) if degree > 0 else (theta + alpha * tables)
    return w / (mass + theta)


def ee_collapsed_log_likelihood(seq: InteractionSequence, z, p: EeParams) -> float:
    """Likelihood with node frequencies integrated out, accumulated
    interaction by interaction through the Pitman-Yor predictive rule."""
    z = _labels(z, seq.n)
    deg = np.zeros(seq.n, dtype=np.int64)
    mass = np.zeros(p.K, dtype=np.int64)
    tables = np.zeros(p.K, dtype=np.int64)
    total = 0.0
    with np.errstate(divide="ignore"):
        logpi, logB = np.log(p.pi), np.log(p.B)
    for s, r in zip(seq.senders, seq.receivers):
        ks, kr = z[s], z[r]
        total += logpi[ks] + logB[ks, kr]
        for node, k in ((s, ks), (r, kr)):
            prob = py_predictive(int(deg[node]), p.alpha[k], p.theta[k], int(mass[k]), int(tables[k]))
            total += math.log(prob) if prob > 0 else -math.inf
            if deg[node] == 0:
                tables[k] += 1
            deg[node] += 1
            mass[k] += 1
    return float(total)


@njit(cache=True)
def _rising_log(T, alpha, theta):
    # sum_{i=1}^{T-1} log(theta + i alpha)
    if T <= 1:
        return 0.0
    if T <= 64:
        acc = 0.0
        for i in range(1, T):
            acc += math.log(theta + i * alpha)
        return acc
    if alpha < 1e-8:
        return (T - 1) * math.log(theta) + alpha * T * (T - 1) / (2.0 * theta)
    r = theta / alpha
    return (T - 1) * math.log(alpha) + math.lgamma(r + T) - math.lgamma(r + 1.0)


@njit(cache=True)
def _block_term(T, m, alpha, theta):
    if m == 0:
        return 0.0
    return _rising_log(T, alpha, theta) - math.lgamma(theta + m) + math.lgamma(theta + 1.0)


def log_eppf(degrees, alpha: float, theta: float) -> float:
    """Pitman-Yor exchangeable partition probability of a degree sequence."""
    d = np.asarray(degrees, dtype=np.int64)
    d = d[d > 0]
    if d.size == 0:
        return 0.0
    return float(_block_term(len(d), int(d.sum()), alpha, theta)
                 + np.sum(gammaln(d - alpha) - gammaln(1 - alpha)))


@njit(cache=True)
def _label_sweep(out_ptr, out_idx, in_ptr, in_idx, self_cnt, sends, deg, z,
                 tables, mass, logB, logpi, alpha, theta, order, u):
    K = logB.shape[0]
    lp = np.zeros(K)
    lg1 = np.zeros(K)
    for k in range(K):
        lg1[k] = math.lgamma(1.0 - alpha[k])
    for idx in range(order.shape[0]):
        i = order[idx]
        di = deg[i]
        k0 = z[i]
        if di > 0:
            tables[k0] -= 1
            mass[k0] -= di
        m = -np.inf
        for k in range(K):
            s = (1.0 + sends[i]) * logpi[k] + self_cnt[i] * logB[k, k]
            for p in range(out_ptr[i], out_ptr[i + 1]):
                s += logB[k, z[out_idx[p]]]
            for p in range(in_ptr[i], in_ptr[i + 1]):
                s += logB[z[in_idx[p]], k]
            if di > 0:
                s += (_block_term(tables[k] + 1, mass[k] + di, alpha[k], theta[k])
                      - _block_term(tables[k], mass[k], alpha[k], theta[k])
                      + math.lgamma(di - alpha[k]) - lg1[k])
            lp[k] = s
            if s > m:
                m = s
        tot = 0.0
        for k in range(K):
            lp[k] = math.exp(lp[k] - m)
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
        if di > 0:
            tables[knew] += 1
            mass[knew] += di


@njit(cache=True)
def _py_update(rng, z, deg, alpha, theta, a, b, c, d):
    # auxiliary-variable draws for (theta_k, alpha_k), one block at a time
    K = alpha.shape[0]
    T = np.zeros(K, dtype=np.int64)
    m = np.zeros(K, dtype=np.int64)
    zsum = np.zeros(K)  # sum over nodes and j of (1 - z_ij)
    for i in range(z.shape[0]):
        di = deg[i]
        if di > 0:
            k = z[i]
            T[k] += 1
            m[k] += di
            al = alpha[k]
            for j in range(1, di):
                if rng.random() >= (j - 1.0) / (j - al):
                    zsum[k] += 1.0
    for k in range(K):
        if T[k] == 0:
            theta[k] = rng.gamma(a, 1.0 / b)
            alpha[k] = rng.beta(c, d)
            continue
        th, al = theta[k], alpha[k]
        ysum = 0.0
        for i in range(1, T[k]):
            if rng.random() < th / (th + al * i):
                ysum += 1.0
        if m[k] >= 2:
            x = rng.beta(th + 1.0, m[k] - 1.0)
            th = rng.gamma(a + ysum, 1.0 / (b - math.log(x)))
        else:
            th = rng.gamma(a, 1.0 / b)
        theta[k] = max(th, 1e-10)
        alpha[k] = min(rng.beta(c + (T[k] - 1.0 - ysum), d + zsum[k]), 1.0 - 1e-12)


def _csr(keys, vals, n):
    order = np.argsort(keys, kind="stable")
    ptr = np.concatenate([[0], np.cumsum(np.bincount(keys, minlength=n))]).astype(np.int64)
    return ptr, vals[order].astype(np.int64)


@dataclass
class EeState:
    z: np.ndarray
    pi: np.ndarray
    B: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray
    aux: dict = field(default_factory=dict)


class EeModel:
    """Gibbs sampler for the edge-exchangeable block model.

    ``B`` rows get Dirichlet(1, ..., 1) priors; under a region restriction
    (``K == 2``) ``B = [[a, 1-a], [1-a, a]]`` with ``a`` uniform on the region.
    """

    component_axes = {"pi": (0,), "B": (0, 1), "alpha": (0,), "theta": (0,)}

    def __init__(self, seq: InteractionSequence, K: int = 2, gamma=1.0,
                 hyper=(1.0, 1.0, 1.0, 1.0)):
        self.seq = seq
        self.K = int(K)
        self.n_nodes = seq.n
        self.gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (self.K,)).copy()
        self.hyper = tuple(float(h) for h in hyper)
        s, r = seq.senders, seq.receivers
        loop = s == r
        self._self = np.bincount(s[loop], minlength=seq.n).astype(np.int64)
        self._sends = np.bincount(s, minlength=seq.n).astype(np.int64)
        self._deg = (np.bincount(s, minlength=seq.n) + np.bincount(r, minlength=seq.n)).astype(np.int64)
        self._out_ptr, self._out_idx = _csr(s[~loop], r[~loop], seq.n)
        self._in_ptr, self._in_idx = _csr(r[~loop], s[~loop], seq.n)

    def initial_state(self, rng, z=None, region: Region | None = None) -> EeState:
        if z is None:
            z = rng.integers(self.K, size=self.n_nodes)
        if region is not None:
            lo, hi = region.bounds()
            a = lo if region.is_point else 0.5 * (lo + hi)
            B = np.array([[a, 1 - a], [1 - a, a]])
        else:
            B = np.full((self.K, self.K), 1.0 / self.K)
        return EeState(np.asarray(z, dtype=np.int64).copy(), np.full(self.K, 1.0 / self.K), B,
                       np.full(self.K, 0.5), np.ones(self.K))

    # -- conditional updates -------------------------------------------------

    def _update_py(self, state: EeState, rng):
        a, b, c, d = self.hyper
        _py_update(rng, state.z, self._deg, state.alpha, state.theta, a, b, c, d)

    def _update_B(self, cnt: EeCounts, state: EeState, rng, region: Region | None):
        if region is None:
            state.B = np.array([sample_dirichlet(rng, 1.0 + row) for row in cnt.flows])
            return
        if self.K != 2:
            raise ValueError("restricted updates need K == 2")
        if region.is_point:
            a = 0.5
        else:
            W = int(np.trace(cnt.flows))
            lo, hi = region.bounds()
            a = truncated_beta(rng, 1.0 + W, 1.0 + self.seq.M - W, lo, hi)
        state.B = np.array([[a, 1 - a], [1 - a, a]])

    def sweep(self, state: EeState, rng, region: Region | None = None, fix_labels=False) -> float:
        if not fix_labels:
            cnt = ee_counts(self.seq, state.z, self.K, self._deg)
            Bc = np.clip(state.B, _EPS, 1.0)
            with np.errstate(divide="ignore"):
                logpi = np.log(state.pi)
            _label_sweep(self._out_ptr, self._out_idx, self._in_ptr, self._in_idx,
                         self._self, self._sends, self._deg, state.z,
                         cnt.tables, cnt.mass, np.log(Bc), logpi,
                         state.alpha, state.theta, rng.permutation(self.n_nodes),
                         rng.random(self.n_nodes))
        self._update_py(state, rng)
        cnt = ee_counts(self.seq, state.z, self.K, self._deg)
        state.pi = sample_dirichlet(rng, self.gamma + cnt.members + cnt.sends)
        self._update_B(cnt, state, rng, region)
        return self._loglik(state.z, state.pi, state.B, state.alpha, state.theta, cnt)

    def _loglik(self, z, pi, B, alpha, theta, cnt=None) -> float:
        """Collapsed log-likelihood in closed form (block-wise partition probabilities)."""
        if cnt is None:
            cnt = ee_counts(self.seq, z, self.K, self._deg)
        with np.errstate(divide="ignore"):
            logpi, logB = np.log(np.asarray(pi, float)), np.log(np.asarray(B, float))
        return float(_loglik_kernel(np.asarray(z, np.int64), self._deg, cnt.sends, cnt.flows,
                                    logpi, logB, np.asarray(alpha, float),
                                    np.asarray(theta, float), cnt.tables, cnt.mass))

    def snapshot(self, state: EeState) -> dict:
        return {"pi": state.pi.copy(), "B": state.B.copy(),
                "alpha": state.alpha.copy(), "theta": state.theta.copy()}

    def labels(self, state: EeState) -> np.ndarray:
        return state.z

    def log_likelihood_at(self, params: dict, z) -> float:
        B = params["B"] / params["B"].sum(axis=1, keepdims=True)
        pi = params["pi"] / params["pi"].sum()
        return self._loglik(np.asarray(z), pi, B, params["alpha"], params["theta"])

    def restricted_value(self, params: dict):
        return params["B"][0, 0]


def ee_param_space(t: float) -> ParamSpace:
    """Null ``[0.5, t]`` (the point ``{0.5}`` at ``t = 0.5``) versus ``(t, 1]``."""
    return make_space("ee", t)
