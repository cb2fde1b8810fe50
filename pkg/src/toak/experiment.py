"""Experiment orchestration shared by the CLI and the evaluation tests:
attack cells, matcher evaluation, report writing, and the exact-vs-accelerated
scoring benchmark.
"""

import csv
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .attack import (
    AttackConfig,
    AttackState,
    PriorKnowledge,
    RemovalSet,
    baseline_attack_scored,
    score_all_edges,
    select_from_scores,
)
from .config import ExperimentConfig
from .errors import ConfigError, DataError
from .graph import load_graph, remove_edges
from .matching import (
    GroundTruth,
    closed_form_match,
    kernel_matrix,
    mean_nis,
    mismatching_rate,
    propagation_match,
)
from .seeds import derive_seed
from .vgae import VgaeConfig

log = logging.getLogger(__name__)

REPORT_COLUMNS = ["matcher", "attack", "budget_fraction", "seed", "MR", "mean_NIS", "runtime_ms"]


def load_target(cfg):
    return load_graph(cfg.target, attr_path=cfg.target_attrs or None)


def load_pair(cfg):
    gs = load_graph(cfg.source, attr_path=cfg.source_attrs or None)
    gt = load_graph(cfg.target, attr_path=cfg.target_attrs or None)
    return gs, gt


def build_prior(cfg, gs, gt, train_pairs):
    if cfg.prior == "anchors":
        return PriorKnowledge.from_anchors(train_pairs, gs.n_nodes, gt.n_nodes)
    if cfg.prior == "degree":
        return PriorKnowledge.degree_similarity(gs, gt)
    return PriorKnowledge.none(gs.n_nodes, gt.n_nodes)


def attack_config_for(cfg, seed):
    return AttackConfig(
        k=cfg.k,
        lam=cfg.lam,
        walks_per_node=cfg.walks_per_node,
        walk_length=cfg.walk_length,
        mode=cfg.mode,
        seed=seed,
        vgae=VgaeConfig(
            hidden1=cfg.vgae_hidden1,
            hidden2=cfg.vgae_hidden2,
            learning_rate=cfg.vgae_lr,
            epochs=cfg.vgae_epochs,
            seed=derive_seed(seed, "vgae"),
        ),
    )


def run_attack_cell(gt, prior, cfg, attack, seed, embeddings=None):
    """One (attack, seed) cell; returns (RemovalSet, full score vector or None)."""
    budget = int(round(cfg.budget_fraction * gt.n_edges))
    snapshot = {"attack": attack, "seed": int(seed), "budget": budget,
                "budget_fraction": cfg.budget_fraction}
    if attack == "none":
        return RemovalSet([], [], budget=0, config=snapshot), None
    if attack == "toak":
        acfg = attack_config_for(cfg, seed)
        t0 = time.perf_counter()
        state = AttackState.build(gt, prior, acfg, embeddings=embeddings)
        t1 = time.perf_counter()
        scores = score_all_edges(state)
        t2 = time.perf_counter()
        removal = select_from_scores(
            gt, scores, budget, dict(acfg.snapshot(), **snapshot),
            timings={"build_s": t1 - t0, "score_s": t2 - t1},
        )
        return removal, scores
    removal, scores = baseline_attack_scored(gt, attack, budget, prior, seed)
    removal.config.update(snapshot)
    return removal, scores


def write_removal(path, removal, config_hash):
    data = removal.to_json_dict(config_hash=config_hash, timestamp=time.time())
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_removal(path, expect_hash=None):
    with open(path) as fh:
        data = json.load(fh)
    if expect_hash is not None and data.get("config_hash") != expect_hash:
        raise DataError(
            f"{path}: artifact config hash {data.get('config_hash')!r} does not "
            f"match this experiment ({expect_hash!r}); refusing to mix artifacts"
        )
    return RemovalSet.from_json_dict(data)


def write_score_dump(path, g, scores):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "w", "score"])
        for (u, w), s in zip(g.edges, scores):
            writer.writerow([int(u), int(w), repr(float(s))])


def run_matcher(matcher, cfg, gs, gt_current, prior, seed):
    if matcher == "kernel":
        phi = kernel_matrix(
            gs, gt_current, k=cfg.k, mode=cfg.mode,
            vgae_config=VgaeConfig(
                hidden1=cfg.vgae_hidden1, hidden2=cfg.vgae_hidden2,
                learning_rate=cfg.vgae_lr, epochs=cfg.vgae_epochs,
                seed=derive_seed(seed, "uil-vgae"),
            ),
            walks_per_node=cfg.walks_per_node, walk_length=cfg.walk_length,
            seed=seed, prior=prior, lam=cfg.lam,
        )
        return closed_form_match(phi, prior.h, cfg.alpha)
    if matcher == "propagation":
        return propagation_match(gs, gt_current, prior.h, cfg.damping, cfg.prop_iters)
    raise ConfigError(f"unknown matcher {matcher!r}")


@dataclass
class EvalResult:
    rows: list
    aggregates: dict
    failures: list
    config_hash: str


def _aggregate(values):
    arr = np.asarray(values, dtype=np.float64)
    ok = arr[np.isfinite(arr)]
    if len(ok) == 0:
        return float("nan"), float("nan")
    return float(ok.mean()), float(ok.std())


def run_evaluation(cfg, outdir=None, reuse_removals=True):
    """Clean-vs-poisoned mismatching rates for every (matcher, attack, seed).

    Per-seed rows carry plain floats; each (matcher, attack) additionally
    gets one aggregate row, and one clean aggregate row per matcher is always
    included. Matcher failures on a single cell are flagged as nan rows and
    the run continues.
    """
    cfg.validate(require_paths=["source", "target", "anchors"])
    gs, gt = load_pair(cfg)
    anchors = GroundTruth.load(cfg.anchors)
    config_hash = cfg.config_hash()
    outdir = Path(outdir or cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    rows = []
    failures = []
    clean_cache = {}  # (matcher, seed) -> (mr, runtime_ms)
    per_cell = {}  # (matcher, attack) -> list of (mr, nis, ms)

    for seed in cfg.seeds:
        train, test = anchors.split(cfg.train_ratio, seed)
        if not test:
            raise ConfigError("train_ratio leaves no test anchors")
        prior = build_prior(cfg, gs, gt, train)

        for matcher in cfg.matchers:
            t0 = time.perf_counter()
            try:
                m_clean = run_matcher(matcher, cfg, gs, gt, prior, seed)
                mr = mismatching_rate(m_clean, test)
            except DataError:
                raise
            except Exception as exc:  # noqa: BLE001 - flagged, run continues
                log.warning("clean %s failed on seed %d: %s", matcher, seed, exc)
                failures.append({"matcher": matcher, "attack": "clean",
                                 "seed": int(seed), "error": str(exc)})
                mr = float("nan")
            clean_cache[(matcher, seed)] = (mr, (time.perf_counter() - t0) * 1000.0)

        for attack in cfg.attacks:
            removal_path = outdir / f"removal_{attack}_seed{seed}.json"
            if reuse_removals and removal_path.exists():
                removal = read_removal(removal_path, expect_hash=config_hash)
            else:
                removal, _ = run_attack_cell(gt, prior, cfg, attack, seed)
                write_removal(removal_path, removal, config_hash)
            gt_poisoned = remove_edges(gt, removal.edges)
            nis_value = mean_nis(gt, removal.edges)
            for matcher in cfg.matchers:
                t0 = time.perf_counter()
                try:
                    m_poisoned = run_matcher(matcher, cfg, gs, gt_poisoned, prior, seed)
                    mr = mismatching_rate(m_poisoned, test)
                except DataError:
                    raise
                except Exception as exc:  # noqa: BLE001 - flagged, run continues
                    log.warning("%s/%s failed on seed %d: %s", matcher, attack, seed, exc)
                    failures.append({"matcher": matcher, "attack": attack,
                                     "seed": int(seed), "error": str(exc)})
                    mr = float("nan")
                ms = (time.perf_counter() - t0) * 1000.0
                rows.append([matcher, attack, cfg.budget_fraction, int(seed),
                             mr, nis_value, ms])
                per_cell.setdefault((matcher, attack), []).append((mr, nis_value, ms))

    aggregates = {}
    final_rows = []
    for matcher in cfg.matchers:
        for attack in cfg.attacks:
            cell = per_cell.get((matcher, attack), [])
            for row in rows:
                if row[0] == matcher and row[1] == attack:
                    final_rows.append(row)
            mr_mean, mr_std = _aggregate([c[0] for c in cell])
            nis_mean, _ = _aggregate([c[1] for c in cell])
            ms_mean, _ = _aggregate([c[2] for c in cell])
            final_rows.append([matcher, attack, cfg.budget_fraction, "all",
                               f"{mr_mean:.6f}±{mr_std:.6f}", f"{nis_mean:.6f}", f"{ms_mean:.1f}"])
            aggregates.setdefault(matcher, {})[attack] = {
                "mr_mean": mr_mean, "mr_std": mr_std,
                "nis_mean": nis_mean, "runtime_ms_mean": ms_mean,
            }
        clean_vals = [clean_cache[(matcher, s)][0] for s in cfg.seeds]
        clean_ms = [clean_cache[(matcher, s)][1] for s in cfg.seeds]
        mr_mean, mr_std = _aggregate(clean_vals)
        final_rows.append([matcher, "clean", 0.0, "all",
                           f"{mr_mean:.6f}±{mr_std:.6f}", "1.000000",
                           f"{np.mean(clean_ms):.1f}"])
        aggregates.setdefault(matcher, {})["clean"] = {
            "mr_mean": mr_mean, "mr_std": mr_std, "nis_mean": 1.0,
            "runtime_ms_mean": float(np.mean(clean_ms)),
            "per_seed": {int(s): clean_cache[(matcher, s)][0] for s in cfg.seeds},
        }

    report_path = outdir / "report.csv"
    with open(report_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(final_rows)
    summary = {
        "config": cfg.to_dict(),
        "config_hash": config_hash,
        "aggregates": aggregates,
        "failures": failures,
    }
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return EvalResult(final_rows, aggregates, failures, config_hash)


def run_bench(cfg, g=None, best_of=1):
    """Wall-time comparison of exact vs accelerated scoring on one graph,
    plus the Spearman rank correlation between the two score vectors."""
    if g is None:
        cfg.validate(require_paths=["target"])
        g = load_target(cfg)
    seed = cfg.seeds[0]
    prior = PriorKnowledge.none(0, g.n_nodes)
    state = AttackState.build(g, prior, attack_config_for(cfg, seed))

    def timed(mode):
        best = float("inf")
        scores = None
        for _ in range(best_of):
            t0 = time.perf_counter()
            scores = score_all_edges(state, mode=mode)
            best = min(best, time.perf_counter() - t0)
        return scores, best

    scores_fast, t_fast = timed("accelerated")
    scores_exact, t_exact = timed("exact")
    rho = float(spearmanr(scores_fast, scores_exact).statistic)
    ego_sizes = [len(ids) for ids in state.ego_edge_ids]
    return {
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "mean_ego_edges": float(np.mean(ego_sizes)),
        "accelerated_s": t_fast,
        "exact_s": t_exact,
        "speedup": t_exact / t_fast if t_fast > 0 else float("inf"),
        "spearman": rho,
    }
