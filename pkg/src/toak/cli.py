"""Command line entry point.

Commands: synth (generate a correlated graph pair), attack (write removal
sets and score dumps), evaluate (clean-vs-poisoned report), bench (exact vs
accelerated scoring), embed (write embedding caches). Exit codes: 0 success,
1 configuration error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from .attack import PriorKnowledge
from .config import build_config
from .errors import ConfigError, DataError, NumericError
from .experiment import (
    attack_config_for,
    load_target,
    run_attack_cell,
    run_bench,
    run_evaluation,
    write_removal,
    write_score_dump,
)
from .graph import load_graph
from .matching import GroundTruth
from .synth import synthetic_pair, write_pair
from .vgae import load_embeddings, save_embeddings, train_vgae


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_config_options(p):
    p.add_argument("--config", help="flat key = value manifest")
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--anchors")
    p.add_argument("--attacks")
    p.add_argument("--budget-fraction", dest="budget_fraction")
    p.add_argument("--k")
    p.add_argument("--lam")
    p.add_argument("--walks-per-node", dest="walks_per_node")
    p.add_argument("--walk-length", dest="walk_length")
    p.add_argument("--alpha")
    p.add_argument("--mode")
    p.add_argument("--seeds")
    p.add_argument("--prior")
    p.add_argument("--matchers")
    p.add_argument("--vgae-epochs", dest="vgae_epochs")
    p.add_argument("--outdir")


def _config_from(args):
    keys = [
        "source", "target", "anchors", "attacks", "budget_fraction", "k", "lam",
        "walks_per_node", "walk_length", "alpha", "mode", "seeds", "prior",
        "matchers", "vgae_epochs", "outdir",
    ]
    overrides = {k: getattr(args, k, None) for k in keys}
    return build_config(args.config, overrides)


def cmd_synth(args):
    gs, gt, anchors = synthetic_pair(
        n_nodes=args.nodes, mean_degree=args.degree,
        rewire=args.rewire, seed=args.seed,
    )
    paths = write_pair(args.outdir, gs, gt, anchors)
    print(f"synth: {gs.n_nodes} nodes, {gs.n_edges} source edges, "
          f"{gt.n_edges} target edges -> {args.outdir}")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return 0


def _attack_prior(cfg, gt, seed):
    """Prior used when poisoning; the anchors mode splits per seed so only
    training anchors leak into the attack."""
    if cfg.prior == "none":
        return PriorKnowledge.none(0, gt.n_nodes)
    if cfg.prior == "degree":
        cfg.validate(require_paths=["source"])
        gs = load_graph(cfg.source, attr_path=cfg.source_attrs or None)
        return PriorKnowledge.degree_similarity(gs, gt)
    cfg.validate(require_paths=["anchors"])
    anchors = GroundTruth.load(cfg.anchors)
    train, _ = anchors.split(cfg.train_ratio, seed)
    n_source = max((s for s, _ in anchors.pairs), default=-1) + 1
    if cfg.source:
        n_source = load_graph(cfg.source, attr_path=cfg.source_attrs or None).n_nodes
    return PriorKnowledge.from_anchors(train, n_source, gt.n_nodes)


def cmd_attack(args):
    cfg = _config_from(args).validate(require_paths=["target"])
    gt = load_target(cfg)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    config_hash = cfg.config_hash()
    for seed in cfg.seeds:
        prior = _attack_prior(cfg, gt, seed)
        embeddings = _maybe_cached_embeddings(cfg, outdir, seed)
        for attack in cfg.attacks:
            removal, scores = run_attack_cell(gt, prior, cfg, attack, seed,
                                              embeddings=embeddings)
            removal_path = outdir / f"removal_{attack}_seed{seed}.json"
            write_removal(removal_path, removal, config_hash)
            if scores is not None:
                write_score_dump(outdir / f"scores_{attack}_seed{seed}.csv", gt, scores)
            print(f"attack {attack} seed {seed}: removed {len(removal.edges)} "
                  f"of {gt.n_edges} edges -> {removal_path}")
    return 0


def _embedding_cache_path(outdir, seed):
    return Path(outdir) / f"embeddings_seed{seed}.bin"


def _maybe_cached_embeddings(cfg, outdir, seed):
    path = _embedding_cache_path(outdir, seed)
    if not path.exists():
        return None
    emb, header = load_embeddings(path, expect_hash=cfg.config_hash())
    print(f"using cached embeddings {path}")
    return emb


def cmd_embed(args):
    cfg = _config_from(args).validate(require_paths=["target"])
    gt = load_target(cfg)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for seed in cfg.seeds:
        acfg = attack_config_for(cfg, seed)
        emb = train_vgae(gt, acfg.resolved_vgae())
        path = _embedding_cache_path(outdir, seed)
        save_embeddings(path, emb, seed, cfg.config_hash())
        print(f"embed seed {seed}: {emb.shape[0]}x{emb.shape[1]} -> {path}")
    return 0


def cmd_evaluate(args):
    cfg = _config_from(args)
    result = run_evaluation(cfg)
    print(f"evaluate: {len(result.rows)} report rows -> {Path(cfg.outdir) / 'report.csv'}")
    for matcher, attacks in sorted(result.aggregates.items()):
        for attack, agg in sorted(attacks.items()):
            print(f"  {matcher:12s} {attack:8s} MR {agg['mr_mean']:.4f}"
                  f" ± {agg['mr_std']:.4f}  NIS {agg['nis_mean']:.4f}")
    if result.failures:
        print(f"  {len(result.failures)} flagged cell(s); see summary.json")
    return 0


def cmd_bench(args):
    cfg = _config_from(args)
    report = run_bench(cfg)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    report["config_hash"] = cfg.config_hash()
    report["timestamp"] = time.time()
    with open(outdir / "bench.json", "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"bench: {report['n_edges']} edges, mean ego size "
          f"{report['mean_ego_edges']:.1f} edges")
    print(f"  accelerated {report['accelerated_s']:.3f}s  exact {report['exact_s']:.3f}s"
          f"  speedup {report['speedup']:.1f}x  spearman {report['spearman']:.4f}")
    return 0


def build_parser():
    parser = _Parser(prog="toak", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a correlated synthetic graph pair")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--degree", type=float, default=6.0)
    p.add_argument("--rewire", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth)

    for name, func, desc in [
        ("attack", cmd_attack, "select removal edges and write removal sets"),
        ("evaluate", cmd_evaluate, "clean vs poisoned report over matchers and seeds"),
        ("bench", cmd_bench, "exact vs accelerated scoring benchmark"),
        ("embed", cmd_embed, "train and cache node embeddings"),
    ]:
        p = sub.add_parser(name, help=desc)
        _add_config_options(p)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
