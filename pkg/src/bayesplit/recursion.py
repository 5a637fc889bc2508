"""Recursive bipartitioning with a Bayes-factor stopping rule.

At every (sub)network two K=2 samplers are run, one with the community
parameter confined to the no-structure region and one confined to the
structure region.  The log Bayes factor is the difference of the two
sample-based log-marginal estimates; the network is split along the MAP
labels of the structure-region chains when it exceeds ``log(bf_cutoff)``.
Interactions or edges crossing the split are dropped before recursing.

Random streams are derived from ``(config.seed, path)``, where ``path`` is
the sequence of left/right turns from the root, so sibling subtrees can be
fit in any order (or concurrently) with identical results.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .ee import EeModel
from .graph import InteractionSequence, LabelVector, induced_subgraph, n_units
from .lsm import LsmModel, LsmPriors
from .mcmc import estimate_log_marginal, map_labels, run_chains
from .sbm import SbmModel
from .spaces import ParamSpace, make_space

logger = logging.getLogger(__name__)


@dataclass
class BayesFactorDecision:
    """Outcome of one stopping-rule evaluation.

    ``cutoff`` is on the Bayes-factor scale; ``verdict == "split"`` exactly
    when ``log_bf > log(cutoff)``.  ``labels`` are the zero-based MAP labels
    of the structure-region chains (None when no sampler was run).
    """

    log_bf: float
    cutoff: float
    n_draws: tuple
    verdict: str
    diagnostics: dict = field(default_factory=dict)
    labels: np.ndarray | None = None

    def __post_init__(self):
        expected = "split" if self.log_bf > math.log(self.cutoff) else "stop"
        if self.verdict != expected:
            raise ValueError(f"verdict {self.verdict!r} inconsistent with log_bf and cutoff")

    @classmethod
    def decide(cls, log_bf, cutoff, n_draws=(0, 0), diagnostics=None, labels=None):
        verdict = "split" if log_bf > math.log(cutoff) else "stop"
        return cls(float(log_bf), float(cutoff), tuple(n_draws), verdict, diagnostics or {}, labels)

    def to_dict(self) -> dict:
        return {"log_bf": _num(self.log_bf), "cutoff": self.cutoff, "verdict": self.verdict,
                "n_draws": list(self.n_draws), "diagnostics": _jsonable(self.diagnostics)}


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


@dataclass
class CommunityTree:
    """Binary dendrogram node.

    ``members`` lists the external node ids covered.  A split carries the
    decision that caused it and two children whose member sets partition
    ``members``; a leaf carries the decision that stopped it (if a sampler
    ran) and a ``reason``.
    """

    kind: str
    members: tuple
    log_bf: float | None = None
    decision: BayesFactorDecision | None = None
    children: tuple = ()
    reason: str | None = None

    def __post_init__(self):
        self.members = tuple(self.members)
        if self.kind not in ("leaf", "split"):
            raise ValueError("kind must be 'leaf' or 'split'")
        if self.kind == "split":
            if len(self.children) != 2:
                raise ValueError("a split needs exactly two children")
            a, b = (set(c.members) for c in self.children)
            if a & b or (a | b) != set(self.members):
                raise ValueError("children must partition the parent's members")

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"

    def leaves(self) -> list:
        if self.is_leaf:
            return [self]
        return self.children[0].leaves() + self.children[1].leaves()

    @property
    def n_splits(self) -> int:
        return 0 if self.is_leaf else 1 + sum(c.n_splits for c in self.children)

    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "log_bf": _num(self.log_bf)}
        if self.decision is not None:
            doc["diagnostics"] = self.decision.to_dict()
        if self.is_leaf:
            doc["members"] = list(self.members)
            doc["reason"] = self.reason
        else:
            doc["children"] = [c.to_dict() for c in self.children]
        return doc

    @classmethod
    def from_dict(cls, doc) -> "CommunityTree":
        log_bf = doc.get("log_bf")
        if isinstance(log_bf, str):
            log_bf = float(log_bf)
        if doc["kind"] == "leaf":
            return cls("leaf", tuple(doc["members"]), log_bf, reason=doc.get("reason"))
        kids = tuple(cls.from_dict(c) for c in doc["children"])
        return cls("split", kids[0].members + kids[1].members, log_bf, children=kids)


def build_model(network, model: str, config: RunConfig, K: int = 2):
    """Sampler object for ``network`` under ``model`` with the configured priors."""
    pr = dict(config.priors)
    if model == "sbm":
        return SbmModel(network, K=K, gamma=pr.get("gamma", 1.0))
    if model == "ee":
        if not isinstance(network, InteractionSequence):
            raise TypeError("the edge-exchangeable model needs an InteractionSequence")
        return EeModel(network, K=K, gamma=pr.get("gamma", 1.0),
                       hyper=tuple(pr.get("hyper", (1.0, 1.0, 1.0, 1.0))))
    if model == "lsm":
        names = set(LsmPriors.__dataclass_fields__)
        priors = LsmPriors(**{k: v for k, v in pr.items() if k in names})
        return LsmModel(network, K=K, d=config.latent_d, beta=pr.get("beta", 1.0),
                        priors=priors)
    raise ValueError(f"unknown model {model!r}")


def _degenerate(network, model: str) -> str | None:
    if isinstance(network, InteractionSequence):
        return "fewer than 2 interactions" if network.M < 2 else None
    if network.n < 2:
        return "fewer than 2 nodes"
    if network.n_edges == 0:
        return "no edges"
    return None


def _seed(config: RunConfig, path) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=config.seed, spawn_key=tuple(int(p) for p in path))


def bayes_factor(network, model: str, space: ParamSpace | None = None,
                 config: RunConfig | None = None, seed=None) -> BayesFactorDecision:
    """Stopping-rule evaluation on one (sub)network."""
    if config is None:
        raise ValueError("config is required")
    space = space if space is not None else make_space(model, config.threshold_t)
    why = _degenerate(network, model)
    if why is not None:
        return BayesFactorDecision.decide(-math.inf, config.bf_cutoff,
                                          diagnostics={"degenerate": why})
    ss = seed if isinstance(seed, np.random.SeedSequence) else _seed(config, () if seed is None else seed)
    side_seeds = ss.spawn(2)
    sampler = build_model(network, model, config, K=2)
    est, se, traces = [], [], []
    for side in (0, 1):
        tr = run_chains(sampler, side_seeds[side].spawn(config.chains), config.sweeps,
                        config.burn_in, config.thinning, region=space[side])
        e, s = estimate_log_marginal(tr)
        est.append(e)
        se.append(s)
        traces.append(tr)
    if not np.isfinite(est[1]) and not np.isfinite(est[0]):
        log_bf = -math.inf
    else:
        log_bf = est[1] - est[0]
    labels = map_labels(traces[1].labels, 2)
    stat = []
    for side, tr in enumerate(traces):
        vals = [space[side].statistic(sampler.restricted_value(p)) for p, _, _ in tr.draws]
        stat.append(float(np.mean(vals)))
    diag = {
        "log_marginal": est, "mc_se": se, "threshold_t": space.t,
        "mean_statistic": stat, "map_sizes": np.bincount(labels, minlength=2).tolist(),
        "chains": [tr.info.get("chains") for tr in traces],
    }
    return BayesFactorDecision.decide(log_bf, config.bf_cutoff,
                                      (len(traces[0]), len(traces[1])), diag, labels)


def recursive_bipartition(network, model: str, config: RunConfig, _path=()) -> CommunityTree:
    """Depth-first recursive bipartitioning until every leaf fails the stopping rule."""
    members = tuple(network.node_ids)
    if n_units(network) < config.min_size:
        return CommunityTree("leaf", members, reason="min_size")
    if len(_path) >= config.max_depth:
        return CommunityTree("leaf", members, reason="max_depth")
    space = make_space(model, config.threshold_t)
    dec = bayes_factor(network, model, space, config, seed=_seed(config, _path))
    if dec.verdict == "stop":
        reason = "degenerate" if "degenerate" in dec.diagnostics else "bayes_factor"
        return CommunityTree("leaf", members, dec.log_bf, dec, reason=reason)
    parts = [[members[i] for i in np.flatnonzero(dec.labels == k)] for k in (0, 1)]
    subs = [induced_subgraph(network, p) if p else None for p in parts]
    units = [n_units(s) if s is not None else 0 for s in subs]
    if min(units) < config.min_size or min(len(p) for p in parts) < config.min_size:
        # a side too small to stand as a community: no usable bipartition
        dec.diagnostics["rejected_split_units"] = units
        logger.info("path %s: split rejected, side sizes %s", _path, units)
        return CommunityTree("leaf", members, dec.log_bf, dec, reason="small_side")
    kids = tuple(recursive_bipartition(s, model, config, _path + (k,)) for k, s in enumerate(subs))
    return CommunityTree("split", members, dec.log_bf, dec, kids)


def flatten(tree: CommunityTree, node_ids=None) -> LabelVector:
    """Leaf index (1-based, depth-first, left first) of every node."""
    node_ids = tree.members if node_ids is None else tuple(node_ids)
    leaf_of = {}
    for k, leaf in enumerate(tree.leaves(), start=1):
        for v in leaf.members:
            leaf_of[v] = k
    try:
        labels = [leaf_of[v] for v in node_ids]
    except KeyError as exc:
        raise KeyError(f"node {exc.args[0]!r} is not in the tree") from None
    return LabelVector(labels, len(tree.leaves()))


def replay(tree: CommunityTree, cutoff: float) -> CommunityTree:
    """Re-apply the stopping rule with a new cutoff to the stored log Bayes
    factors.  Splits that no longer pass become leaves; stopped nodes stay
    leaves since their would-be children were never fitted."""
    if tree.is_leaf:
        return tree
    if not (tree.log_bf is not None and tree.log_bf > math.log(cutoff)):
        return CommunityTree("leaf", tree.members, tree.log_bf, tree.decision, reason="replay")
    kids = tuple(replay(c, cutoff) for c in tree.children)
    return CommunityTree("split", tree.members, tree.log_bf, tree.decision, kids)
