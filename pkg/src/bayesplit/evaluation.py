"""Baselines and metrics: ERM modularity, spectral eigengap, DIC, NMI and
split-half consistency."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.linalg import eigh

from .graph import InteractionSequence, LabelVector, UndirectedGraph
from .lsm import LsmModel, procrustes_align
from .mcmc import PosteriorTrace, map_labels, run_chains

logger = logging.getLogger(__name__)

MAX_BRUTEFORCE_N = 12


@dataclass
class MetricReport:
    name: str
    value: float
    auxiliary: dict = field(default_factory=dict)


def _zero_based(z, n=None):
    if isinstance(z, LabelVector):
        z = z.zero_based
    z = np.asarray(z, dtype=np.int64)
    if n is not None and len(z) != n:
        raise ValueError("labels must cover every node")
    # compress to 0..K-1 so arbitrary label values are accepted
    return np.unique(z, return_inverse=True)[1].astype(np.int64)


def erm_modularity(g: UndirectedGraph, z) -> float:
    """``sum_k O_kk - (n_k / n)^2 L`` with ordered sums (every undirected edge
    is counted twice in both ``O_kk`` and ``L``)."""
    z = _zero_based(z, g.n)
    if g.n == 0 or g.n_edges == 0:
        return 0.0
    K = int(z.max()) + 1
    same = z[g.edges[:, 0]] == z[g.edges[:, 1]]
    O = 2.0 * np.bincount(z[g.edges[same, 0]], minlength=K)
    L = 2.0 * g.n_edges
    n_k = np.bincount(z, minlength=K).astype(float)
    return float(np.sum(O - (n_k / g.n) ** 2 * L))


@njit(cache=True)
def _erm_search(n, eu, ev, kmax):
    # all set partitions as restricted growth strings, at most ``kmax`` blocks
    L = 2.0 * eu.shape[0]
    a = np.zeros(n, dtype=np.int64)
    b = np.ones(n, dtype=np.int64)  # b[i] = 1 + max(a[:i])
    best = -np.inf
    best_a = a.copy()
    internal = np.zeros(n)
    size = np.zeros(n)
    while True:
        for k in range(n):
            internal[k] = 0.0
            size[k] = 0.0
        for e in range(eu.shape[0]):
            if a[eu[e]] == a[ev[e]]:
                internal[a[eu[e]]] += 2.0
        for i in range(n):
            size[a[i]] += 1.0
        q = 0.0
        for k in range(n):
            if size[k] > 0:
                q += internal[k] - (size[k] / n) ** 2 * L
        if q > best + 1e-12:
            best = q
            best_a[:] = a
        j = n - 1
        while j > 0 and (a[j] >= b[j] or a[j] >= kmax - 1):
            j -= 1
        if j == 0:
            break
        a[j] += 1
        for i in range(j + 1, n):
            a[i] = 0
            b[i] = max(b[i - 1], a[i - 1] + 1)
    return best_a, best


def erm_bruteforce_max(g: UndirectedGraph, bipartition: bool = False):
    """Exhaustive maximiser of :func:`erm_modularity` over every set partition
    (at most two blocks when ``bipartition``).  Ties keep the partition met
    first in restricted-growth order, so the one-community labelling wins
    any tie it takes part in."""
    if g.n > MAX_BRUTEFORCE_N:
        raise ValueError(f"exhaustive search is limited to n <= {MAX_BRUTEFORCE_N}")
    if g.n == 0:
        return LabelVector([], 1), 0.0
    e = g.edges.reshape(-1, 2)
    z, q = _erm_search(g.n, e[:, 0].copy(), e[:, 1].copy(), 2 if bipartition else g.n)
    return LabelVector.from_zero_based(z), float(q)


def _weights(g) -> np.ndarray:
    if isinstance(g, InteractionSequence):
        W = np.zeros((g.n, g.n))
        np.add.at(W, (g.senders, g.receivers), 1.0)
        W = W + W.T
        np.fill_diagonal(W, 0.0)
        return W
    return g.adjacency.astype(float)


def normalized_laplacian(g) -> np.ndarray:
    """``I - D^{-1/2} A D^{-1/2}`` on the non-isolated nodes (interaction
    sequences use symmetrised interaction counts as weights)."""
    W = _weights(g)
    deg = W.sum(axis=1)
    keep = deg > 0
    if not keep.all():
        logger.warning("removing %d isolated node(s) before the spectral decomposition",
                       int((~keep).sum()))
        W, deg = W[np.ix_(keep, keep)], deg[keep]
    s = 1.0 / np.sqrt(deg)
    return np.eye(len(deg)) - s[:, None] * W * s[None, :]


def spectral_suggest_k(g, k_max: int = 20):
    """Suggested number of communities from the largest gap among the
    ``k_max`` smallest normalised-Laplacian eigenvalues.

    Returns ``(K, eigenvalues)`` with the eigenvalues ascending.
    """
    if g.n < 2:
        raise ValueError("need at least 2 nodes")
    lap = normalized_laplacian(g)
    if lap.shape[0] < 2:
        raise ValueError("need at least 2 non-isolated nodes")
    k = min(int(k_max), lap.shape[0])
    vals = eigh(lap, eigvals_only=True, subset_by_index=[0, k - 1])
    vals = np.clip(vals, 0.0, 2.0)
    if k < 2:
        return 1, vals
    gaps = np.diff(vals)
    return int(np.argmax(gaps)) + 1, vals


def dic(trace: PosteriorTrace, evaluate, per_draw: bool = False) -> float:
    """``D(theta_bar) + 2 p_D`` with ``D = -2 loglik`` and
    ``p_D = mean_l D(theta_l) - D(theta_bar)``.

    ``evaluate(theta, labels)`` returns the log-likelihood; at ``theta_bar``
    (posterior mean of the continuous parameters) labels are fixed at their
    MAP.  With ``per_draw`` every draw's deviance is recomputed with
    ``evaluate`` at that draw's own labels instead of taken from the trace.
    """
    if len(trace) < 2:
        raise ValueError("need at least 2 retained draws")
    if not trace.params:
        raise ValueError("posterior mean undefined: trace holds no continuous parameters")
    mean = {k: np.mean(v, axis=0) for k, v in trace.params.items()}
    K = int(trace.labels.max()) + 1 if trace.labels.size else 1
    d_bar = -2.0 * evaluate(mean, map_labels(trace.labels, K))
    if per_draw:
        ll = np.array([evaluate(p, z) for p, z, _ in trace.draws])
    else:
        ll = trace.loglik
    p_d = float(np.mean(-2.0 * ll)) - d_bar
    return float(d_bar + 2.0 * p_d)


def align_positions(trace: PosteriorTrace) -> PosteriorTrace:
    """Rigidly align latent positions (and component means) of every draw to
    the first draw, removing rotation, reflection and translation."""
    z = trace.params["z"]
    ref = z[0]
    zs, mus = z.copy(), trace.params["mu"].copy()
    for l in range(len(z)):
        zs[l], (R, zc, rc) = procrustes_align(z[l], ref)
        mus[l] = (mus[l] - zc) @ R + rc
    params = dict(trace.params, z=zs, mu=mus)
    return PosteriorTrace(trace.loglik, trace.labels, params, trace.burn_in, trace.thinning,
                          trace.total, trace.chain, trace.info)


def dic_for_k(network, model: str, config, K: int, seed=None) -> float:
    """DIC of an unrestricted K-block fit of ``network``."""
    from .recursion import build_model  # local import: recursion depends on this module's peers

    sampler = build_model(network, model, config, K=K)
    ss = np.random.SeedSequence(entropy=config.seed if seed is None else seed, spawn_key=(K,))
    trace = run_chains(sampler, ss.spawn(config.chains), config.sweeps, config.burn_in,
                       config.thinning)
    if isinstance(sampler, LsmModel):
        # positions are identified only up to a rigid motion; memberships enter
        # the deviance so extra components are not free
        trace = align_positions(trace)
        return dic(trace, sampler.classification_loglik, per_draw=True)
    return dic(trace, sampler.log_likelihood_at)


def dic_select_k(network, model, config, ks=(1, 2, 3, 4), seed=None):
    """``(argmin K, {K: DIC})``."""
    values = {K: dic_for_k(network, model, config, K, seed) for K in ks}
    return min(values, key=values.get), values


def _entropy(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(w, c) -> float:
    """``2 I(W, C) / (H(W) + H(C))`` (natural log).  Both labelings constant
    gives 1, exactly one constant gives 0."""
    w, c = _zero_based(w), _zero_based(c)
    if len(w) != len(c):
        raise ValueError("label vectors must have equal length")
    if len(w) == 0:
        raise ValueError("empty label vectors")
    table = np.zeros((w.max() + 1, c.max() + 1))
    np.add.at(table, (w, c), 1.0)
    hw, hc = _entropy(table.sum(axis=1)), _entropy(table.sum(axis=0))
    if hw == 0.0 and hc == 0.0:
        return 1.0
    if hw == 0.0 or hc == 0.0:
        return 0.0
    nz_rows, nz_cols = (table > 0).sum(axis=1), (table > 0).sum(axis=0)
    if np.all(nz_rows == 1) and np.all(nz_cols == 1):
        return 1.0  # identical up to relabelling; skip the rounding of the ratio
    pij = table / table.sum()
    outer = np.outer(pij.sum(axis=1), pij.sum(axis=0))
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / outer[nz])))
    return float(min(max(2.0 * mi / (hw + hc), 0.0), 1.0))


def split_half_consistency(seq: InteractionSequence, model: str, config, rng) -> MetricReport:
    """Split interactions uniformly at random into halves, detect communities
    in each, and compare the two labelings on the nodes seen in both."""
    from .recursion import flatten, recursive_bipartition

    if seq.M < 2 * config.min_size:
        raise ValueError("too few interactions to split in half")
    order = rng.permutation(seq.M)
    halves = (np.sort(order[: seq.M // 2]), np.sort(order[seq.M // 2:]))
    labels, trees = [], []
    for h, idx in enumerate(halves):
        ids = seq.node_ids
        half = InteractionSequence.from_pairs((ids[seq.senders[m]], ids[seq.receivers[m]]) for m in idx)
        cfg = config.replace(seed=int(rng.integers(2**31)))
        tree = recursive_bipartition(half, model, cfg)
        trees.append(tree)
        labels.append(dict(zip(half.node_ids, flatten(tree, half.node_ids).labels)))
    common = [v for v in seq.node_ids if v in labels[0] and v in labels[1]]
    excluded = len(set(labels[0]) ^ set(labels[1]))
    if not common:
        value = float("nan")
    else:
        value = nmi([labels[0][v] for v in common], [labels[1][v] for v in common])
    ks = [len(t.leaves()) for t in trees]
    return MetricReport("split_half_nmi", value,
                        {"excluded_nodes": excluded, "common_nodes": len(common), "K_halves": ks,
                         "single_leaf": [k == 1 for k in ks]})
