#!/usr/bin/env python3
"""Bearing-rig experiment on a converted dataset directory.

Expects a directory holding manifest.json plus TSG1 recordings (the output
of the mat2tsg converter). Scans for the best window, slices every
recording into 1024-sample windows with stride 512, caps the sample count
per class, then trains with stratified 5-fold cross-validation and prints
the pooled report.
"""

import argparse
import json
import os
import sys
import time

from tsgraph.config import RunConfig
from tsgraph.entropy import optimal_window_dataset
from tsgraph.graph import ThresholdPolicy, sample_to_graph
from tsgraph.signal import load_dataset, load_manifest, make_samples
from tsgraph.training import TrainSettings, kfold_plan, train


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True, help="directory with manifest.json")
    ap.add_argument("--out", default="runs/cwru", help="output directory")
    ap.add_argument("--per-class", type=int, default=200, help="sample cap per class")
    ap.add_argument("--epochs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    manifest_path = os.path.join(args.data, "manifest.json")
    if not os.path.exists(manifest_path):
        print(f"error: {manifest_path} not found", file=sys.stderr)
        return 2

    t0 = time.perf_counter()
    cfg = RunConfig(seed=args.seed).validate()
    if args.epochs is not None:
        cfg = RunConfig(seed=args.seed, epochs=args.epochs).validate()

    recs = load_dataset(load_manifest(manifest_path), base_dir=args.data)
    print(f"loaded {len(recs)} recordings")
    w_star, scan = optimal_window_dataset(
        recs, candidates=range(cfg.scan_min, cfg.scan_max + 1), bins=cfg.bins
    )
    print(f"window scan: w* = {w_star}")

    taken: dict = {}
    samples = []
    for rec in recs:
        for s in make_samples(rec, cfg.sample_len, cfg.stride):
            if taken.get(s.label, 0) < args.per_class:
                taken[s.label] = taken.get(s.label, 0) + 1
                samples.append(s)
    print(f"kept {len(samples)} samples over {len(taken)} classes")

    policy = ThresholdPolicy(cfg.tau_policy, cfg.tau_value)
    graphs = [sample_to_graph(s, cfg.window, cfg.seg_step, policy) for s in samples]
    classes = max(g.label for g in graphs) + 1
    plan = kfold_plan([g.label for g in graphs], cfg.folds, seed=cfg.seed)
    result = train(
        graphs,
        cfg.model_config(feature_dim=graphs[0].feature_dim, classes=classes),
        plan,
        TrainSettings(
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            seed=cfg.seed,
        ),
        normal_label=cfg.normal_label,
    )
    runtime = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "loss_log.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.loss_csv())
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(result.report_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(os.path.join(args.out, "run_meta.json"), "w", encoding="utf-8") as fh:
        json.dump({"runtime_s": runtime, "w_star": w_star, "samples": len(samples)}, fh)
        fh.write("\n")

    print(result.aggregate.table())
    print(f"runtime {runtime:.0f}s; outputs in {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(run())
