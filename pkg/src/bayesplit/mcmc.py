"""Chain running, posterior traces, relabeling and the sample-based marginal.

A *model* here is any object exposing

``K``, ``n_nodes``, ``component_axes``
    number of blocks, number of labelled nodes, and for every stored
    parameter the axes indexed by block (used to undo label switching);
``initial_state(rng)``
    a fresh mutable state;
``sweep(state, rng, region=None, fix_labels=False) -> float``
    one full Gibbs sweep, returning the log-likelihood of the new state;
``snapshot(state) -> dict``
    copies of the continuous parameters;
``labels(state) -> ndarray``
    zero-based block labels.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .distributions import logsumexp_mean

logger = logging.getLogger(__name__)


@dataclass
class PosteriorTrace:
    """Retained Gibbs draws, possibly pooled over several chains.

    ``loglik[l]``, ``labels[l]`` and ``params[name][l]`` describe draw ``l``;
    labels are zero-based.  ``chain`` records which chain produced each draw.
    """

    loglik: np.ndarray
    labels: np.ndarray
    params: dict
    burn_in: int
    thinning: int
    total: int
    chain: np.ndarray = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.loglik = np.asarray(self.loglik, dtype=float)
        if self.chain is None:
            self.chain = np.zeros(len(self.loglik), dtype=np.int64)

    def __len__(self):
        return len(self.loglik)

    @property
    def n_chains(self) -> int:
        return int(len(np.unique(self.chain))) if len(self.chain) else 0

    @property
    def draws(self):
        """Per-draw ``(params, labels, loglik)`` tuples."""
        for l in range(len(self)):
            yield ({k: v[l] for k, v in self.params.items()}, self.labels[l], self.loglik[l])

    def subset(self, mask) -> "PosteriorTrace":
        return PosteriorTrace(self.loglik[mask], self.labels[mask],
                              {k: v[mask] for k, v in self.params.items()},
                              self.burn_in, self.thinning, self.total,
                              self.chain[mask], dict(self.info))


def retained_count(total: int, burn_in: int, thinning: int) -> int:
    return (total - burn_in) // thinning


def run_chain(model, rng: np.random.Generator, sweeps: int, burn_in: int = 0,
              thinning: int = 1, region=None, state=None, fix_labels: bool = False,
              chain_id: int = 0) -> PosteriorTrace:
    """Run one chain and keep every ``thinning``-th sweep after ``burn_in``."""
    if not sweeps > burn_in >= 0:
        raise ValueError("need sweeps > burn_in >= 0")
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    if state is None:
        state = model.initial_state(rng, region=region)
    n_keep = retained_count(sweeps, burn_in, thinning)
    loglik = np.empty(n_keep)
    labels = np.empty((n_keep, model.n_nodes), dtype=np.int64)
    params = None
    j = 0
    for it in range(sweeps):
        if hasattr(model, "tune"):
            model.tune(state, it, burn_in)
        ll = model.sweep(state, rng, region=region, fix_labels=fix_labels)
        if it >= burn_in and (it - burn_in) % thinning == thinning - 1 and j < n_keep:
            snap = model.snapshot(state)
            if params is None:
                params = {k: np.empty((n_keep,) + np.shape(v)) for k, v in snap.items()}
            for k, v in snap.items():
                params[k][j] = v
            labels[j] = model.labels(state)
            loglik[j] = ll
            j += 1
    info = {}
    if hasattr(model, "diagnostics"):
        info.update(model.diagnostics(state))
    return PosteriorTrace(loglik, labels, params or {}, burn_in, thinning, sweeps,
                          np.full(n_keep, chain_id, dtype=np.int64), info)


def permute_params(params: dict, perms: np.ndarray, component_axes: dict) -> dict:
    """Relabel stacked draws: block ``k`` of draw ``l`` becomes ``perms[l, k]``."""
    inv = np.argsort(perms, axis=1)
    out = {}
    for name, arr in params.items():
        axes = component_axes.get(name, ())
        res = arr.copy()
        for l in range(arr.shape[0]):
            x = arr[l]
            for ax in axes:
                x = np.take(x, inv[l], axis=ax)
            res[l] = x
        out[name] = res
    return out


def align_labels(labels: np.ndarray, K: int):
    """Undo label switching against the running MAP.

    Draws are visited in order; each is permuted to maximise its agreement
    with the per-node mode of the draws already aligned.  Returns the aligned
    labels and the permutation applied to every draw.
    """
    L, n = labels.shape
    perms = np.tile(np.arange(K), (L, 1))
    if L == 0 or K == 1:
        return labels.copy(), perms
    counts = np.zeros((n, K))
    out = np.empty_like(labels)
    rows = np.arange(n)
    for l in range(L):
        z = labels[l]
        if l == 0:
            perm = np.arange(K)
        else:
            ref = np.argmax(counts, axis=1)
            agree = np.zeros((K, K))
            np.add.at(agree, (z, ref), 1.0)
            r, c = linear_sum_assignment(-agree)
            perm = np.empty(K, dtype=np.int64)
            perm[r] = c
        zz = perm[z]
        out[l] = zz
        perms[l] = perm
        counts[rows, zz] += 1
    return out, perms


def map_labels(labels: np.ndarray, K: int) -> np.ndarray:
    """Per-node posterior mode of aligned labels; ties go to the lower block."""
    n = labels.shape[1]
    counts = np.zeros((n, K), dtype=np.int64)
    for k in range(K):
        counts[:, k] = np.sum(labels == k, axis=0)
    return np.argmax(counts, axis=1)


def pool_traces(traces, K: int, component_axes: dict) -> PosteriorTrace:
    """Concatenate chains and relabel every draw consistently."""
    traces = list(traces)
    loglik = np.concatenate([t.loglik for t in traces])
    labels = np.concatenate([t.labels for t in traces])
    chain = np.concatenate([np.full(len(t), c) for c, t in enumerate(traces)])
    keys = traces[0].params.keys()
    params = {k: np.concatenate([t.params[k] for t in traces]) for k in keys}
    labels, perms = align_labels(labels, K)
    params = permute_params(params, perms, component_axes)
    info = {"chains": [t.info for t in traces]}
    return PosteriorTrace(loglik, labels, params, traces[0].burn_in,
                          traces[0].thinning, traces[0].total, chain, info)


def run_chains(model, seeds, sweeps, burn_in, thinning=1, region=None,
               fix_labels=False, state_factory=None) -> PosteriorTrace:
    """Independent chains from ``seeds`` (SeedSequence-compatible), pooled."""
    traces = []
    for c, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        state = state_factory(rng) if state_factory is not None else None
        traces.append(run_chain(model, rng, sweeps, burn_in, thinning, region,
                                state=state, fix_labels=fix_labels, chain_id=c))
    return pool_traces(traces, model.K, model.component_axes)


def _batch_means(x: np.ndarray, chain: np.ndarray, n_batches: int = 10) -> np.ndarray:
    means = []
    for c in np.unique(chain):
        xc = x[chain == c]
        b = max(1, min(n_batches, len(xc)))
        means.extend(np.mean(part) for part in np.array_split(xc, b))
    return np.asarray(means)


def estimate_log_marginal(trace: PosteriorTrace) -> tuple[float, float]:
    """``log((1/L) sum_l exp(loglik_l))`` and its Monte-Carlo standard error.

    The standard error is the delta-method transform of the batch-means
    standard error of the averaged likelihood ratios.
    """
    ll = np.asarray(trace.loglik, dtype=float)
    if ll.size == 0:
        raise ValueError("trace has no retained draws")
    top = np.max(ll)
    if not np.isfinite(top):
        warnings.warn("all draws have zero likelihood", RuntimeWarning, stacklevel=2)
        return float("-inf"), float("nan")
    est = logsumexp_mean(ll)
    w = np.exp(ll - top)
    bm = _batch_means(w, trace.chain)
    if len(bm) < 2:
        return est, float("nan")
    se = np.std(bm, ddof=1) / np.sqrt(len(bm)) / np.mean(w)
    return est, float(se)


def batch_se(x, chain=None, n_batches: int = 20) -> float:
    """Batch-means standard error of the mean of a (possibly multi-chain) series."""
    x = np.asarray(x, dtype=float)
    if chain is None:
        chain = np.zeros(len(x), dtype=np.int64)
    bm = _batch_means(x, np.asarray(chain), n_batches)
    return float(np.std(bm, ddof=1) / np.sqrt(len(bm)))
