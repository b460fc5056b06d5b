"""Command-line entry point: train, estimate, oracle, embed, eval,
synth-task. Every command writes a manifest referencing its inputs,
seeds and artifact hashes so runs are reproducible."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, GraphParseError, MotifEnergyError
from .evaluate import (
    embed_ksets,
    parse_task_file,
    read_embeddings_csv,
    run_eval,
    write_embeddings_csv,
    write_task_file,
)
from .graph import load_graph
from .model import init_model, load_model, save_model, serialize_model
from .motifs import DEFAULT_ORACLE_CAP, count_cises, exact_energy_sum
from .synth import make_planted_task
from .tours import TourEngine, build_supernode, estimate_energy, validate_supernode
from .training import TrainConfig, build_positives, train

EXIT_USAGE = 2
EXIT_RUNTIME = 3

logger = logging.getLogger(__name__)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command, config, seeds, inputs, outputs, t0):
    import os

    def rel(p):
        # paths relative to the manifest keep re-runs byte-comparable
        # across working directories
        return os.path.relpath(os.path.abspath(p), os.path.abspath(out_dir))

    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "input_hashes": {rel(p): _sha256(p) for p in inputs},
        "artifact_hashes": {rel(p): _sha256(p) for p in outputs},
        "tool_version": __version__,
        "wall_seconds": time.perf_counter() - t0,
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _load_checkpoint(path, task_k=None):
    """Load a model checkpoint; validate its k against the task when stored."""
    with open(path) as fh:
        doc = json.load(fh)
    if task_k is not None and "k" in doc and doc["k"] != task_k:
        raise ConfigError(
            f"checkpoint was trained for k={doc['k']} but the task has k={task_k}"
        )
    from .model import deserialize_model

    return deserialize_model(doc)


def _load_config(args) -> TrainConfig:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values = json.load(fh)
    for name in ("k", "q", "supernode_budget", "minibatch", "lr", "epochs", "M",
                 "num_positives", "sample_size", "forward_prob", "noise_mode",
                 "log_mpn_mode", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return TrainConfig.from_dict(values)


def cmd_train(args):
    t0 = time.perf_counter()
    cfg = _load_config(args)
    g = load_graph(args.graph, args.features)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    positives = build_positives(g, cfg, rng)
    result = train(positives, cfg)
    ckpt = out_dir / "checkpoint.json"
    doc = serialize_model(result.best_model)
    doc["k"] = cfg.k
    with open(ckpt, "w") as fh:
        json.dump(doc, fh)
    log_path = out_dir / "log.csv"
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "mean_yhat_pos", "mean_yhat_neg",
                         "mean_tour_len", "wall_ms"])
        for row in result.log:
            d = asdict(row)
            writer.writerow([d["epoch"], repr(d["loss"]), repr(d["mean_yhat_pos"]),
                             repr(d["mean_yhat_neg"]), repr(d["mean_tour_len"]), ""])
    inputs = [args.graph] + ([args.features] if args.features else [])
    _write_manifest(out_dir, "train", cfg.to_dict(), [cfg.seed], inputs,
                    [ckpt, log_path], t0)
    print(f"checkpoint written to {ckpt}")
    return 0


def cmd_estimate(args):
    t0 = time.perf_counter()
    g = load_graph(args.graph, args.features)
    if args.checkpoint:
        model = load_model(args.checkpoint)
        if model.dims["p"] != g.p:
            raise ConfigError(
                f"checkpoint expects p={model.dims['p']}, graph has p={g.p}"
            )
        from .model import motif_energy

        phi = lambda m: motif_energy(m, model)
    else:
        phi = lambda m: 1.0  # counting mode
    if args.k > g.n:
        raise ConfigError(f"k={args.k} exceeds n={g.n}")
    s = build_supernode(g, args.k, args.budget, seed=args.seed)
    report = validate_supernode(g, s, k=args.k)
    engine = TourEngine(g, s)
    est = estimate_energy(g, args.k, s, args.q, phi, seed=args.seed, engine=engine,
                          threads=max(1, args.threads))
    doc = {
        "value": est.value,
        "supernode_term": est.supernode_term,
        "tour_term": est.tour_term,
        "q": est.q,
        "mean_tour_length": est.mean_tour_length,
        "std_error": est.std_error,
        "covers_space": est.covers_space,
        "supernode_valid": report.ok,
        "supernode_verified": report.verified,
        "supernode_reasons": report.reasons,
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        out_dir = Path(args.out).parent
        Path(args.out).write_text(text + "\n")
        inputs = [args.graph] + ([args.features] if args.features else []) + (
            [args.checkpoint] if args.checkpoint else []
        )
        _write_manifest(out_dir, "estimate",
                        {"k": args.k, "q": args.q, "budget": args.budget},
                        [args.seed], inputs, [args.out], t0)
    else:
        print(text)
    return 0


def cmd_oracle(args):
    t0 = time.perf_counter()
    g = load_graph(args.graph, args.features)
    if args.checkpoint:
        model = load_model(args.checkpoint)
        from .model import motif_energy

        phi = lambda m: motif_energy(m, model)
    else:
        phi = lambda m: 1.0
    count = count_cises(g, args.k, cap=args.cap)
    total = exact_energy_sum(g, args.k, phi, cap=args.cap)
    lines = ["k,count,sum", f"{args.k},{count},{total!r}"]
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _write_manifest(Path(args.out).parent, "oracle",
                        {"k": args.k, "cap": args.cap}, [],
                        [args.graph], [args.out], t0)
    else:
        print(text)
    return 0


def cmd_embed(args):
    t0 = time.perf_counter()
    g = load_graph(args.graph, args.features)
    task = parse_task_file(args.task)
    model = _load_checkpoint(args.checkpoint, task_k=task.k)
    table = embed_ksets(model, g, task)
    write_embeddings_csv(table, args.out)
    inputs = [args.graph, args.checkpoint, args.task] + (
        [args.features] if args.features else []
    )
    _write_manifest(Path(args.out).parent, "embed", {"task": str(args.task)},
                    [], inputs, [args.out], t0)
    print(f"embeddings written to {args.out}")
    return 0


def cmd_eval(args):
    t0 = time.perf_counter()
    task = parse_task_file(args.task)
    if args.embeddings:
        table = read_embeddings_csv(args.embeddings)
        inputs = [args.task, args.embeddings]
    else:
        if not (args.graph and args.checkpoint):
            raise ConfigError("eval needs either --embeddings or --graph + --checkpoint")
        g = load_graph(args.graph, args.features)
        model = _load_checkpoint(args.checkpoint, task_k=task.k)
        table = embed_ksets(model, g, task)
        inputs = [args.task, args.graph, args.checkpoint]
    seeds = [int(s) for s in args.seeds.split(",")]
    report = run_eval(table, task, seeds=seeds, reg_lambda=args.reg_lambda)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _write_manifest(Path(args.out).parent, "eval",
                        {"reg_lambda": args.reg_lambda}, seeds, inputs,
                        [args.out], t0)
    else:
        print(text)
    return 0


def cmd_synth_task(args):
    t0 = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g, task = make_planted_task(
        n=args.n, k=args.k, num_pos=args.cliques, num_neg=args.cliques,
        feat_dim=args.feat_dim, seed=args.seed,
    )
    edge_path = out_dir / "graph.edges"
    with open(edge_path, "w") as fh:
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")
    feat_path = out_dir / "graph.features.csv"
    with open(feat_path, "w") as fh:
        for v in range(g.n):
            fh.write(",".join([str(v)] + [repr(float(x)) for x in g.features[v]]) + "\n")
    task_path = out_dir / "task.txt"
    write_task_file(task, task_path)
    _write_manifest(out_dir, "synth-task",
                    {"n": args.n, "k": args.k, "cliques": args.cliques},
                    [args.seed], [], [edge_path, feat_path, task_path], t0)
    print(f"synthetic task written to {out_dir}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="motifenergy",
        description="Unsupervised joint k-node motif representations via "
        "tour-estimated energy models",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="worker count; 1 is the reproducibility reference")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model with NCE")
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--config", help="JSON file mirroring TrainConfig")
    p.add_argument("--out-dir", required=True)
    for name, typ in (("k", int), ("q", int), ("supernode_budget", int),
                      ("minibatch", int), ("lr", float), ("epochs", int),
                      ("M", int), ("num_positives", int), ("sample_size", int),
                      ("forward_prob", float), ("seed", int)):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ)
    p.add_argument("--noise-mode", dest="noise_mode",
                   choices=["shuffle-features", "add-edges"])
    p.add_argument("--log-mpn-mode", dest="log_mpn_mode",
                   choices=["zero", "learned-offset"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("estimate", help="tour-estimate the total energy")
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--checkpoint", help="model checkpoint; omit for phi == 1 counting")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, default=10)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("oracle", help="exact CIS count and energy sum")
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--checkpoint")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_ORACLE_CAP)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("embed", help="export frozen k-set embeddings")
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="downstream logistic-regression evaluation")
    p.add_argument("--task", required=True)
    p.add_argument("--embeddings", help="external embedding CSV (baselines)")
    p.add_argument("--graph")
    p.add_argument("--features")
    p.add_argument("--checkpoint")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--reg-lambda", dest="reg_lambda", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth-task", help="generate the planted-clique task")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--cliques", type=int, default=150)
    p.add_argument("--feat-dim", dest="feat_dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_task)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, GraphParseError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MotifEnergyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
