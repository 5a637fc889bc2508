"""Synthetic networks from the three generative models.

Every generator is a pure function of its :class:`GenSpec`; the seed is
mandatory so repeated calls are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graph import InteractionSequence, LabelVector, UndirectedGraph

MODELS = ("sbm", "ee", "lsm")


def _simplex(name, x, size=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (size is not None and len(x) != size):
        raise ValueError(f"{name}: expected a vector of length {size}")
    if np.any(x < 0) or not np.isclose(x.sum(), 1.0, atol=1e-9):
        raise ValueError(f"{name}: entries must be >= 0 and sum to 1")
    return x


@dataclass
class GenSpec:
    """Parameters of one synthetic network.

    ``n`` counts nodes (sbm, lsm) and ``M`` interactions (ee).  ``pi`` holds
    the block proportions for every model (the mixture weights for lsm).
    Missing ``pi`` means uniform.
    """

    model: str
    seed: int
    K: int = 2
    n: int | None = None
    M: int | None = None
    pi: np.ndarray | None = None
    B: np.ndarray | None = None
    mu: np.ndarray | None = None
    sigma: float | np.ndarray = 1.0
    beta: float = 1.0
    d: int | None = None
    alpha: float | np.ndarray = 0.5
    theta: float | np.ndarray = 1.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model: unknown model {self.model!r}")
        if self.seed is None:
            raise ValueError("seed: required")
        self.seed = int(self.seed)
        K = self.K = int(self.K)
        if K < 1:
            raise ValueError("K: must be >= 1")
        self.pi = np.full(K, 1.0 / K) if self.pi is None else _simplex("pi", self.pi, K)
        if self.model == "sbm":
            if self.n is None or self.n < 1:
                raise ValueError("n: required and >= 1")
            self.B = np.asarray(self.B, dtype=float)
            if self.B.shape != (K, K) or np.any(self.B < 0) or np.any(self.B > 1):
                raise ValueError("B: expected a KxK matrix with entries in [0, 1]")
            if not np.allclose(self.B, self.B.T):
                raise ValueError("B: must be symmetric for an undirected graph")
        elif self.model == "ee":
            if self.M is None or self.M < 1:
                raise ValueError("M: required and >= 1")
            self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
            if self.B.shape != (K, K):
                raise ValueError("B: expected a KxK matrix")
            for k, row in enumerate(self.B):
                _simplex(f"B[{k}]", row)
            self.alpha = np.broadcast_to(np.asarray(self.alpha, float), (K,)).copy()
            self.theta = np.broadcast_to(np.asarray(self.theta, float), (K,)).copy()
            if np.any(self.alpha < 0) or np.any(self.alpha >= 1):
                raise ValueError("alpha: must lie in [0, 1)")
            if np.any(self.theta <= -self.alpha):
                raise ValueError("theta: must exceed -alpha")
        else:
            if self.n is None or self.n < 1:
                raise ValueError("n: required and >= 1")
            mu = np.asarray(self.mu, dtype=float)
            if mu.ndim == 1:
                mu = mu[:, None]
            if mu.shape[0] != K:
                raise ValueError("mu: need one mean per component")
            self.mu = mu
            self.d = mu.shape[1] if self.d is None else int(self.d)
            if self.d != mu.shape[1]:
                raise ValueError("d: does not match the dimension of mu")
            self.sigma = np.broadcast_to(np.asarray(self.sigma, float), (K,)).copy()
            if np.any(self.sigma <= 0):
                raise ValueError("sigma: must be > 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "GenSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"{sorted(unknown)[0]}: unknown field")
        for key in ("model", "seed"):
            if key not in doc:
                raise ValueError(f"{key}: required")
        return cls(**doc)


def planted_block_matrix(K: int, within: float, between: float | None = None) -> np.ndarray:
    """``within`` on the diagonal; off-diagonal ``between``, or ``(1 - within)/(K - 1)``
    (rows summing to one) when omitted."""
    if K == 1:
        return np.array([[1.0 if between is None else within]])
    off = (1.0 - within) / (K - 1) if between is None else between
    B = np.full((K, K), off)
    np.fill_diagonal(B, within)
    return B


def _draw_blocks(rng, n, pi):
    return rng.choice(len(pi), size=n, p=pi)


def gen_sbm(spec: GenSpec):
    """Graph plus true labels: ``z_i ~ pi``, each dyad ``~ Bernoulli(B[z_i, z_j])``."""
    rng = np.random.default_rng(spec.seed)
    z = _draw_blocks(rng, spec.n, spec.pi)
    iu = np.triu_indices(spec.n, 1)
    hit = rng.random(len(iu[0])) < spec.B[z[iu[0]], z[iu[1]]]
    edges = np.column_stack([iu[0][hit], iu[1][hit]])
    g = UndirectedGraph(spec.n, edges, tuple(str(i) for i in range(spec.n)))
    return g, LabelVector.from_zero_based(z, spec.K)


def gen_lsm(spec: GenSpec):
    """Graph, true labels and positions: ``z_i ~ sum_k pi_k N(mu_k, sigma_k^2 I)``,
    ``logit P(Y_ij = 1) = -beta |z_i - z_j|``."""
    rng = np.random.default_rng(spec.seed)
    lab = _draw_blocks(rng, spec.n, spec.pi)
    pos = spec.mu[lab] + spec.sigma[lab, None] * rng.standard_normal((spec.n, spec.d))
    iu = np.triu_indices(spec.n, 1)
    dist = np.linalg.norm(pos[iu[0]] - pos[iu[1]], axis=1)
    hit = rng.random(len(dist)) < expit(-spec.beta * dist)
    edges = np.column_stack([iu[0][hit], iu[1][hit]])
    g = UndirectedGraph(spec.n, edges, tuple(str(i) for i in range(spec.n)))
    return g, LabelVector.from_zero_based(lab, spec.K), pos


class _Urn:
    """Pitman-Yor urn over one block's node pool, weighted by total degree."""

    def __init__(self, alpha, theta):
        self.alpha, self.theta = float(alpha), float(theta)
        self.degree: list[int] = []
        self.draws: list[int] = []  # one entry per past appearance

    def draw(self, rng) -> int:
        T, m = len(self.degree), len(self.draws)
        if m == 0 or rng.random() * (m + self.theta) < self.theta + self.alpha * T:
            self.degree.append(0)
            node = T
        else:
            # propose proportional to D(s), accept with (D(s) - alpha) / D(s)
            while True:
                node = self.draws[int(rng.integers(m))]
                D = self.degree[node]
                if rng.random() * D < D - self.alpha:
                    break
        self.degree[node] += 1
        self.draws.append(node)
        return node


def gen_ee(spec: GenSpec):
    """Interaction sequence plus true labels of the observed nodes.

    Per interaction: sender block ``~ pi``, receiver block ``~ B[sender block]``,
    then each endpoint is drawn from its block's urn.  Node ids are
    ``"<block>_<j>"`` (block 1-based), keeping the pools disjoint.
    """
    rng = np.random.default_rng(spec.seed)
    urns = [_Urn(spec.alpha[k], spec.theta[k]) for k in range(spec.K)]
    ks = _draw_blocks(rng, spec.M, spec.pi)
    cum = np.cumsum(spec.B, axis=1)
    u = rng.random(spec.M)
    kr = np.minimum((u[:, None] > cum[ks]).sum(axis=1), spec.K - 1)
    pairs = []
    for a, b in zip(ks, kr):
        s = urns[a].draw(rng)
        r = urns[b].draw(rng)
        pairs.append((f"{a + 1}_{s}", f"{b + 1}_{r}"))
    seq = InteractionSequence.from_pairs(pairs)
    z = np.array([int(nid.split("_", 1)[0]) - 1 for nid in seq.node_ids], dtype=np.int64)
    return seq, LabelVector.from_zero_based(z, spec.K)


def generate(spec: GenSpec):
    return {"sbm": gen_sbm, "ee": gen_ee, "lsm": gen_lsm}[spec.model](spec)
