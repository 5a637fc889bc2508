"""Command-line entry point: ``bayesplit {detect,simulate,benchmark,evaluate}``.

Exit codes: 0 success, 1 unreadable or invalid input, 2 configuration error
(including usage errors).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .benchmark import (FIGURE1_MCMC, SETTINGS, run_figure1, run_table1, write_csv)
from .config import ConfigError, RunConfig, load_config
from .evaluation import erm_modularity, nmi
from .generators import GenSpec, generate
from .graph import EdgeListError, LabelVector, load_edge_list, write_edge_list
from .recursion import flatten, recursive_bipartition

logger = logging.getLogger("bayesplit")

EXIT_INPUT = 1
EXIT_CONFIG = 2


def write_labels_csv(path, node_ids, labels) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "community"])
        for v, k in zip(node_ids, labels):
            w.writerow([v, int(k)])


def read_labels_csv(path):
    """``(node_ids, labels)`` from a ``node_id,community`` file."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["node_id", "community"]:
        raise EdgeListError(f"{path}: expected header 'node_id,community'")
    ids, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise EdgeListError(f"{path}:{lineno}: expected two columns")
        try:
            labels.append(int(row[1]))
        except ValueError:
            raise EdgeListError(f"{path}:{lineno}: community must be an integer") from None
        ids.append(row[0])
    return tuple(ids), np.array(labels, dtype=np.int64)


def _dump_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _read_mapping(path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    doc = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return doc


def _config_with_seed(path, seed_override) -> RunConfig:
    cfg = load_config(path)
    if seed_override is not None:
        cfg = cfg.replace(seed=seed_override)
    return cfg


def cmd_detect(args) -> int:
    cfg = _config_with_seed(args.config, args.seed_override)
    mode = "directed" if cfg.model == "ee" else "undirected"
    net = load_edge_list(args.input, mode=mode)
    tree = recursive_bipartition(net, cfg.model, cfg)
    labels = flatten(tree, net.node_ids)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "tree.json", tree.to_dict())
    write_labels_csv(out / "labels.csv", net.node_ids, labels.labels)
    _dump_json(out / "manifest.json", {
        "command": "detect", "version": __version__, "seed": cfg.seed,
        "input": str(args.input), "config": cfg.to_dict(),
        "n_nodes": net.n, "n_communities": labels.K,
        "outputs": ["tree.json", "labels.csv"],
    })
    print(f"{labels.K} communities, {tree.n_splits} split(s); wrote {out}")
    return 0


def cmd_simulate(args) -> int:
    doc = _read_mapping(args.input)
    if args.seed_override is not None:
        doc["seed"] = args.seed_override
    try:
        spec = GenSpec.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"generator spec: {exc}") from None
    result = generate(spec)
    net, truth = result[0], result[1]
    prefix = str(args.output)
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(net, prefix + ".edges.csv")
    write_labels_csv(prefix + ".truth.csv", net.node_ids, truth.labels)
    outputs = [prefix + ".edges.csv", prefix + ".truth.csv"]
    if spec.model == "lsm":
        pos = result[2]
        with open(prefix + ".positions.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_id"] + [f"z{j + 1}" for j in range(pos.shape[1])])
            for v, row in zip(net.node_ids, pos):
                w.writerow([v] + [repr(float(x)) for x in row])
        outputs.append(prefix + ".positions.csv")
    _dump_json(prefix + ".manifest.json", {
        "command": "simulate", "version": __version__, "seed": spec.seed,
        "spec": _plain(doc), "outputs": [Path(p).name for p in outputs],
    })
    print(f"wrote {', '.join(outputs)}")
    return 0


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _overrides(path) -> dict:
    if path is None:
        return {}
    doc = _read_mapping(path)
    doc.pop("model", None)
    doc.pop("seed", None)
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config key '{unknown[0]}'", unknown[0])
    return doc


def cmd_benchmark(args) -> int:
    seed = 0 if args.seed_override is None else args.seed_override
    over = _overrides(args.config)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    if args.suite == "table1":
        names = args.settings.split(",") if args.settings else None
        if names:
            bad = [s for s in names if s not in SETTINGS]
            if bad:
                raise ConfigError(f"unknown setting '{bad[0]}'", "settings")
        criteria = tuple(args.criteria.split(","))
        rows, summary = run_table1(seed, args.scale, names, over, args.workers, criteria)
        write_csv(out / "table1.csv", summary,
                  ["setting", "model", "size", "size_unit", "true_K", "criterion", "modal_K",
                   "n_correct", "n_repeats"])
        write_csv(out / "table1_repeats.csv", rows,
                  ["setting", "seed", "K_bf", "nmi_bf", "K_eigengap", "K_dic", "seconds"])
        units = {r["setting"]: r["size_unit"] for r in summary}
    else:
        rows, summary = run_figure1(seed, args.scale, overrides=over, workers=args.workers)
        write_csv(out / "figure1.csv", summary, ["a", "t", "mean_log_bf", "ci_half_width", "n_repeats"])
        long = [{"a": r["a"], "seed": r["seed"], "t": t, "log_bf": b}
                for r in rows for t, b in zip(r["t"], r["log_bf"])]
        write_csv(out / "figure1_repeats.csv", long, ["a", "seed", "t", "log_bf"])
        units = {"figure1": "interactions"}
        over = dict(FIGURE1_MCMC, **over)
    _dump_json(out / "manifest.json", {
        "command": "benchmark", "version": __version__, "suite": args.suite, "seed": seed,
        "scale": args.scale, "repeat_seeds": "base seed + repeat index",
        "config_overrides": over, "size_units": units,
    })
    print(f"wrote {args.suite} results to {out}")
    return 0


def cmd_evaluate(args) -> int:
    (ids_a, lab_a), (ids_b, lab_b) = read_labels_csv(args.input[0]), read_labels_csv(args.input[1])
    pos_b = {v: i for i, v in enumerate(ids_b)}
    common = [i for i, v in enumerate(ids_a) if v in pos_b]
    if not common:
        raise EdgeListError("the two label files share no node ids")
    a = lab_a[common]
    b = lab_b[[pos_b[ids_a[i]] for i in common]]
    report = {"nmi": nmi(a, b), "n_common": len(common),
              "n_only_first": len(ids_a) - len(common), "n_only_second": len(ids_b) - len(common),
              "K_first": int(len(np.unique(lab_a))), "K_second": int(len(np.unique(lab_b)))}
    if args.graph is not None:
        g = load_edge_list(args.graph, mode="undirected")
        ix = {v: i for i, v in enumerate(ids_a)}
        missing = [v for v in g.node_ids if v not in ix]
        if missing:
            raise EdgeListError(f"node {missing[0]!r} of the graph has no label in {args.input[0]}")
        report["erm_modularity"] = erm_modularity(g, LabelVector(lab_a[[ix[v] for v in g.node_ids]]))
    text = json.dumps(report, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bayesplit", description=__doc__.splitlines()[0])
    p.add_argument("--verbose", "-v", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="recursive bipartitioning of an edge list")
    d.add_argument("--input", required=True, help="edge list (src,dst per line)")
    d.add_argument("--config", required=True, help="RunConfig as JSON or YAML")
    d.add_argument("--output", required=True, help="output directory")
    d.add_argument("--seed-override", type=int)
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("simulate", help="generate a synthetic network")
    s.add_argument("--input", required=True, help="generator spec as JSON or YAML")
    s.add_argument("--output", required=True, help="output prefix")
    s.add_argument("--seed-override", type=int)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("benchmark", help="model-selection table or threshold scan")
    b.add_argument("--suite", required=True, choices=("table1", "figure1"))
    b.add_argument("--scale", type=float, default=1.0, help="multiplier on the number of repeats")
    b.add_argument("--output", required=True, help="output directory")
    b.add_argument("--config", help="overrides for the MCMC budget or priors")
    b.add_argument("--seed-override", type=int, help="base seed (default 0)")
    b.add_argument("--settings", help="comma-separated subset of table1 settings")
    b.add_argument("--criteria", default="bf,eigengap,dic")
    b.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    b.set_defaults(func=cmd_benchmark)

    e = sub.add_parser("evaluate", help="compare two label files")
    e.add_argument("--input", required=True, nargs=2, metavar=("LABELS", "REFERENCE"))
    e.add_argument("--graph", help="edge list; adds the ERM modularity of LABELS")
    e.add_argument("--output", help="write the JSON report here as well")
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EdgeListError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
