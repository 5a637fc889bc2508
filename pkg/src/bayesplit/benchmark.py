"""Model-selection and threshold-scan benchmarks on synthetic networks.

``table1`` compares the recovered number of communities from recursive
bipartitioning, the Laplacian eigengap and DIC across planted settings.
``figure1`` scans the edge-exchangeable threshold ``t`` and reports the mean
root log Bayes factor with a normal-theory confidence half-width.

Repeat ``r`` is seeded with ``base_seed + r`` and is internally
deterministic, so results do not depend on how repeats are scheduled.
"""

from __future__ import annotations

import csv
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .evaluation import dic_select_k, nmi, spectral_suggest_k
from .generators import GenSpec, generate, planted_block_matrix
from .recursion import bayes_factor, flatten, recursive_bipartition
from .spaces import make_space

TABLE1_REPEATS = 10
FIGURE1_REPEATS = 20
FIGURE1_A = (0.9, 0.7, 0.5)
FIGURE1_T = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
FIGURE1_M = 1000
# reduced per-BF budget: 10 thresholds x 3 settings x 20 repeats must fit a desk run
FIGURE1_MCMC = {"sweeps": 1500, "burn_in": 500, "chains": 2}


@dataclass(frozen=True)
class Setting:
    name: str
    model: str
    K: int
    size: int
    gen: dict
    latent_d: int = 2
    dic_ks: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def size_unit(self) -> str:
        return "interactions" if self.model == "ee" else "nodes"

    def spec(self, seed: int) -> GenSpec:
        key = "M" if self.model == "ee" else "n"
        return GenSpec(model=self.model, seed=seed, K=self.K, **{key: self.size}, **self.gen)


_LSM4 = [[0.0, 0.0], [0.0, 6.0], [6.0, 0.0], [6.0, 6.0]]

TABLE1 = (
    Setting("ee_simu1", "ee", 4, 1000, {"B": planted_block_matrix(4, 0.9)}, dic_ks=(1, 2, 3, 4, 5)),
    Setting("ee_simu2", "ee", 4, 1000, {"B": planted_block_matrix(4, 0.7)}, dic_ks=(1, 2, 3, 4, 5)),
    Setting("ee_simu3", "ee", 4, 2000, {"B": planted_block_matrix(4, 0.9)}, dic_ks=(1, 2, 3, 4, 5)),
    Setting("ee_simu4", "ee", 8, 2000, {"B": planted_block_matrix(8, 0.9)},
            dic_ks=tuple(range(1, 10))),
    Setting("sbm_simu1", "sbm", 2, 100, {"B": planted_block_matrix(2, 0.9, 0.1)}, dic_ks=(1, 2, 3, 4)),
    Setting("sbm_simu2", "sbm", 4, 200, {"B": planted_block_matrix(4, 0.9, 0.1)},
            dic_ks=(1, 2, 3, 4, 5)),
    Setting("lsm_simu1", "lsm", 2, 100, {"mu": [0.0, 6.0], "sigma": 0.25, "beta": 1.0},
            latent_d=1, dic_ks=(1, 2, 3, 4)),
    Setting("lsm_simu2", "lsm", 4, 200, {"mu": _LSM4, "sigma": 0.25, "beta": 1.0},
            latent_d=2, dic_ks=(1, 2, 3, 4, 5)),
)
SETTINGS = {s.name: s for s in TABLE1}


def scaled_repeats(base: int, scale: float) -> int:
    if not scale > 0:
        raise ValueError("scale must be > 0")
    return max(1, int(round(base * scale)))


def _config(setting: Setting, seed: int, overrides: dict | None) -> RunConfig:
    doc = {"model": setting.model, "seed": seed, "latent_d": setting.latent_d}
    doc.update(overrides or {})
    doc["seed"] = seed
    return RunConfig(**doc)


def table1_repeat(setting: Setting, seed: int, overrides=None, criteria=("bf", "eigengap", "dic")):
    """One repeat of one setting: recovered K per criterion plus the tree NMI."""
    t0 = time.perf_counter()
    out = generate(setting.spec(seed))
    net, truth = out[0], out[1]
    cfg = _config(setting, seed, overrides)
    row = {"setting": setting.name, "seed": seed}
    if "bf" in criteria:
        tree = recursive_bipartition(net, setting.model, cfg)
        lab = flatten(tree, net.node_ids)
        row["K_bf"] = lab.K
        row["nmi_bf"] = nmi(truth.labels, lab.labels)
    if "eigengap" in criteria:
        row["K_eigengap"] = spectral_suggest_k(net)[0]
    if "dic" in criteria:
        k, vals = dic_select_k(net, setting.model, cfg, setting.dic_ks)
        row["K_dic"] = k
        row["dic"] = {int(kk): float(v) for kk, v in vals.items()}
    row["seconds"] = time.perf_counter() - t0
    return row


def _call(args):
    fn, a, kw = args
    return fn(*a, **kw)


def fan_out(fn, arg_list, workers=None):
    """Apply ``fn`` to every argument tuple, concurrently when ``workers > 1``.
    Results come back in submission order."""
    workers = (os.cpu_count() or 1) if workers is None else int(workers)
    jobs = [(fn, a, {}) if not isinstance(a, dict) else (fn, (), a) for a in arg_list]
    if workers <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


def summarize_table1(rows, settings) -> list:
    summary = []
    for s in settings:
        mine = [r for r in rows if r["setting"] == s.name]
        for crit in ("bf", "eigengap", "dic"):
            key = f"K_{crit}"
            ks = [r[key] for r in mine if key in r]
            if not ks:
                continue
            modal = Counter(ks).most_common(1)[0][0]
            summary.append({"setting": s.name, "model": s.model, "size": s.size,
                            "size_unit": s.size_unit, "true_K": s.K, "criterion": crit,
                            "modal_K": modal, "n_correct": sum(k == s.K for k in ks),
                            "n_repeats": len(ks)})
    return summary


def run_table1(base_seed=0, scale=1.0, settings=None, overrides=None, workers=None,
               criteria=("bf", "eigengap", "dic")):
    settings = TABLE1 if settings is None else tuple(
        SETTINGS[s] if isinstance(s, str) else s for s in settings)
    R = scaled_repeats(TABLE1_REPEATS, scale)
    args = [(s, base_seed + r, overrides, criteria) for s in settings for r in range(R)]
    rows = fan_out(table1_repeat, args, workers)
    return rows, summarize_table1(rows, settings)


def figure1_repeat(a: float, seed: int, ts=FIGURE1_T, M=FIGURE1_M, overrides=None):
    """Root log Bayes factors at every threshold for one EE K=2 network whose
    within-block probability is ``a``."""
    spec = GenSpec(model="ee", seed=seed, K=2, M=M, B=planted_block_matrix(2, a))
    seq, _ = generate(spec)
    doc = {"model": "ee", "seed": seed, **FIGURE1_MCMC}
    doc.update(overrides or {})
    doc["seed"] = seed
    out = []
    for t in ts:
        cfg = RunConfig(**dict(doc, threshold_t=t))
        dec = bayes_factor(seq, "ee", make_space("ee", t), cfg, seed=())
        out.append(dec.log_bf)
    return {"a": a, "seed": seed, "t": list(ts), "log_bf": out}


def summarize_figure1(rows) -> list:
    summary = []
    for a in sorted({r["a"] for r in rows}, reverse=True):
        mine = [r for r in rows if r["a"] == a]
        lb = np.array([r["log_bf"] for r in mine], dtype=float)
        for j, t in enumerate(mine[0]["t"]):
            col = lb[:, j]
            half = 1.96 * col.std(ddof=1) / math.sqrt(len(col)) if len(col) > 1 else float("nan")
            summary.append({"a": a, "t": t, "mean_log_bf": float(col.mean()),
                            "ci_half_width": float(half), "n_repeats": len(col)})
    return summary


def run_figure1(base_seed=0, scale=1.0, a_values=FIGURE1_A, ts=FIGURE1_T, overrides=None,
                workers=None, M=FIGURE1_M):
    R = scaled_repeats(FIGURE1_REPEATS, scale)
    args = [(a, base_seed + r, tuple(ts), M, overrides) for a in a_values for r in range(R)]
    rows = fan_out(figure1_repeat, args, workers)
    return rows, summarize_figure1(rows)


def write_csv(path, rows, columns):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v
