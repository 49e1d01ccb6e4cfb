"""Command-line entry point for the whole pipeline.

Subcommands: scan, build-graph, train, eval, cross-eval, stats,
grad-check, make-synth. Every run-configuration key is exposed as a
``--key value`` flag that overrides the ``--config`` JSON file.

Exit codes: 0 success, 2 configuration or usage problem, 3 I/O failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import FIELD_NAMES, RunConfig, load_config
from .entropy import optimal_window_dataset
from .errors import ConfigError, DataError, FormatError, InfeasibleBandError
from .graph import SimilarityGraph, ThresholdPolicy, load_graph, sample_to_graph, save_graph
from .model import Model, ModelConfig, finite_difference_check, load_checkpoint, save_checkpoint
from .signal import (
    LabeledSample,
    generate_synthetic_dataset,
    load_dataset,
    load_manifest,
    make_samples,
    write_synthetic_dataset,
)
from .stats import ks_two_sample, welch_t_test
from .training import TrainSettings, cross_eval, evaluate, kfold_plan, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _add_config_flags(parser: argparse.ArgumentParser):
    grp = parser.add_argument_group("configuration overrides")
    for name in FIELD_NAMES:
        grp.add_argument(f"--{name.replace('_', '-')}", dest=f"cfg_{name}", metavar="V")


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for name in FIELD_NAMES:
        value = getattr(args, f"cfg_{name}", None)
        if value is not None:
            overrides[name] = value
    return load_config(getattr(args, "config", None), overrides)


def _resolve_manifest(data: str):
    if os.path.isdir(data):
        candidate = os.path.join(data, "manifest.json")
        if not os.path.exists(candidate):
            raise ConfigError(f"directory {data!r} has no manifest.json")
        return candidate
    if not os.path.exists(data):
        raise ConfigError(f"data path {data!r} does not exist")
    return data


def _load_recordings(cfg: RunConfig, data: str):
    if data == "synthetic":
        return generate_synthetic_dataset(
            cfg.synth_classes,
            cfg.synth_per_class,
            cfg.synth_length,
            seed=cfg.seed,
            n_channels=cfg.synth_channels,
            noise_std=cfg.synth_noise,
        ), cfg.synth_classes
    manifest_path = _resolve_manifest(data)
    manifest = load_manifest(manifest_path)
    recs = load_dataset(manifest, base_dir=os.path.dirname(os.path.abspath(manifest_path)))
    return recs, manifest.class_count


def _recordings_to_samples(cfg: RunConfig, recordings) -> list[LabeledSample]:
    samples: list[LabeledSample] = []
    for rec in recordings:
        samples.extend(make_samples(rec, cfg.sample_len, cfg.stride))
    if not samples:
        raise DataError("dataset produced no samples")
    return samples


def _build_graphs(cfg: RunConfig, samples: list[LabeledSample]) -> list[SimilarityGraph]:
    policy = ThresholdPolicy(cfg.tau_policy, cfg.tau_value)
    band = None if cfg.band_radius < 0 else cfg.band_radius
    return [
        sample_to_graph(s, cfg.window, cfg.seg_step, policy, band_radius=band, threads=cfg.threads)
        for s in samples
    ]


def _graphs_from_data(cfg: RunConfig, data: str) -> list[SimilarityGraph]:
    """Either a directory of serialized graphs or raw data run through the pipeline."""
    if os.path.isdir(data):
        names = sorted(n for n in os.listdir(data) if n.endswith(".atg"))
        if names:
            return [load_graph(os.path.join(data, n)) for n in names]
    recordings, _ = _load_recordings(cfg, data)
    return _build_graphs(cfg, _recordings_to_samples(cfg, recordings))


def _write(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _json_dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# -- subcommands -----------------------------------------------------------


def cmd_scan(args) -> int:
    cfg = _config_from_args(args)
    recordings, _ = _load_recordings(cfg, args.data)
    w_star, scan = optimal_window_dataset(
        recordings,
        candidates=range(cfg.scan_min, cfg.scan_max + 1),
        bins=cfg.bins,
        max_recordings=cfg.scan_recordings,
    )
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "window_scan.csv"), scan.to_csv())
    _write(
        os.path.join(args.out, "scan_summary.json"),
        _json_dump({"w_star": w_star, "candidates": scan.candidate_sizes, "bins": cfg.bins}),
    )
    print(f"scanned {len(scan.candidate_sizes)} window sizes; w* = {w_star}")
    return EXIT_OK


def cmd_build_graph(args) -> int:
    cfg = _config_from_args(args)
    recordings, _ = _load_recordings(cfg, args.data)
    samples = _recordings_to_samples(cfg, recordings)
    graphs = _build_graphs(cfg, samples)
    graph_dir = os.path.join(args.out, "graphs")
    os.makedirs(graph_dir, exist_ok=True)
    for idx, g in enumerate(graphs):
        save_graph(g, os.path.join(graph_dir, f"{idx:05d}_label{g.label}.atg"))
    edge_counts = [len(g.edges) for g in graphs]
    summary = {
        "graphs": len(graphs),
        "nodes_per_graph": graphs[0].n_nodes,
        "feature_dim": graphs[0].feature_dim,
        "edges_min": int(min(edge_counts)),
        "edges_mean": float(np.mean(edge_counts)),
        "edges_max": int(max(edge_counts)),
        "edgeless_graphs": int(sum(c == 0 for c in edge_counts)),
    }
    if summary["edgeless_graphs"]:
        summary["warning"] = "some graphs have no edges; check the threshold policy"
    _write(os.path.join(args.out, "build_summary.json"), _json_dump(summary))
    print(
        f"wrote {len(graphs)} graphs ({summary['nodes_per_graph']} nodes, "
        f"mean {summary['edges_mean']:.1f} edges)"
    )
    if "warning" in summary:
        print(f"warning: {summary['edgeless_graphs']} graphs have no edges")
    return EXIT_OK


def _write_report(out_dir: str, report, runtime_s: float, meta: dict):
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "report.json"), report.to_json())
    _write(os.path.join(out_dir, "per_class.csv"), report.per_class_csv())
    _write(os.path.join(out_dir, "report.txt"), report.table())
    # runtime lives in the sidecar so report files stay byte-reproducible
    _write(
        os.path.join(out_dir, "run_meta.json"),
        _json_dump({"runtime_s": runtime_s, **meta}),
    )


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    t0 = time.perf_counter()
    recordings, class_count = _load_recordings(cfg, args.data)
    samples = _recordings_to_samples(cfg, recordings)
    graphs = _build_graphs(cfg, samples)
    model_cfg = cfg.model_config(feature_dim=graphs[0].feature_dim, classes=class_count)
    model_cfg.validate()
    labels = [g.label for g in graphs]
    plan = kfold_plan(labels, cfg.folds, stratified=cfg.stratified, seed=cfg.seed)
    settings = TrainSettings(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        eps=cfg.eps_adam,
        weight_decay=cfg.weight_decay,
        seed=cfg.seed,
    )
    result = train(
        graphs, model_cfg, plan, settings, normal_label=cfg.normal_label, fit_final=True
    )
    runtime = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "loss_log.csv"), result.loss_csv())
    _write(os.path.join(args.out, "report.json"), _json_dump(result.report_dict()))
    _write(os.path.join(args.out, "per_class.csv"), result.aggregate.per_class_csv())
    _write(os.path.join(args.out, "report.txt"), result.aggregate.table())
    extra = {"run_config": cfg.to_dict(), "classes": model_cfg.classes}
    for k, m in enumerate(result.fold_models):
        save_checkpoint(m, os.path.join(args.out, f"model_fold{k}.atm"), extra=extra)
    if result.final_model is not None:
        save_checkpoint(result.final_model, os.path.join(args.out, "model_final.atm"), extra=extra)
    _write(
        os.path.join(args.out, "run_meta.json"),
        _json_dump({"runtime_s": runtime, "samples": len(graphs), "folds": cfg.folds}),
    )
    mean = result.fold_mean
    print(result.aggregate.table())
    print(
        f"fold-mean accuracy {mean['accuracy']:.4f}; pooled accuracy "
        f"{result.aggregate.summary()['accuracy']:.4f}; runtime {runtime:.1f}s"
    )
    return EXIT_OK


def _load_model_for_eval(args) -> tuple[Model, RunConfig]:
    if not os.path.exists(args.model):
        raise ConfigError(f"checkpoint {args.model!r} does not exist")
    model, extra = load_checkpoint(args.model)
    stored = extra.get("run_config")
    if stored is None:
        raise FormatError("checkpoint lacks the run configuration needed to rebuild graphs")
    cfg = load_config(None, stored)
    # command-line overrides still win (e.g. --threads)
    for name in FIELD_NAMES:
        value = getattr(args, f"cfg_{name}", None)
        if value is not None:
            cfg = load_config(None, {**cfg.to_dict(), name: value})
    return model, cfg


def _eval_command(args, transfer: bool) -> int:
    model, cfg = _load_model_for_eval(args)
    t0 = time.perf_counter()
    graphs = _graphs_from_data(cfg, args.data)
    report = (
        cross_eval(model, graphs, normal_label=cfg.normal_label)
        if transfer
        else evaluate(model, graphs, normal_label=cfg.normal_label)
    )
    runtime = time.perf_counter() - t0
    _write_report(
        args.out,
        report,
        runtime,
        {"mode": "cross-eval" if transfer else "eval", "samples": len(graphs)},
    )
    print(report.table())
    return EXIT_OK


def cmd_eval(args) -> int:
    return _eval_command(args, transfer=False)


def cmd_cross_eval(args) -> int:
    return _eval_command(args, transfer=True)


def _read_sample_file(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise ConfigError(f"sample file {path!r} does not exist")
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            for tok in line.replace(",", " ").split():
                values.append(float(tok))
    if not values:
        raise DataError(f"sample file {path!r} holds no numbers")
    return np.asarray(values)


def cmd_stats(args) -> int:
    x = _read_sample_file(args.sample_a)
    y = _read_sample_file(args.sample_b)
    welch = welch_t_test(x, y)
    ks = ks_two_sample(x, y)
    doc = {
        "welch_t": {"statistic": welch.statistic, "p_value": welch.p_value, **welch.detail},
        "ks": {"statistic": ks.statistic, "p_value": ks.p_value, **ks.detail},
    }
    print(f"Welch t = {welch.statistic:.6g}  (df = {welch.detail['df']:.2f})  p = {welch.p_value:.6g}")
    print(f"KS    D = {ks.statistic:.6g}  p = {ks.p_value:.6g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "stats.json"), _json_dump(doc))
    return EXIT_OK


def _seeded_check_graph(cfg: RunConfig, seed: int) -> SimilarityGraph:
    """Small fixed graph for gradient verification: 5 nodes from one sample."""
    length = cfg.window + 4 * cfg.seg_step  # yields exactly 5 segments
    rec = generate_synthetic_dataset(
        2, 1, length, seed=seed, n_channels=cfg.synth_channels, noise_std=cfg.synth_noise
    )[0]
    sample = make_samples(rec, length, length)[0]
    policy = ThresholdPolicy(cfg.tau_policy, cfg.tau_value)
    return sample_to_graph(sample, cfg.window, cfg.seg_step, policy)


def cmd_grad_check(args) -> int:
    cfg = _config_from_args(args)
    graph = _seeded_check_graph(cfg, cfg.seed)
    model_cfg = cfg.model_config(feature_dim=graph.feature_dim, classes=3)
    model = Model(model_cfg, seed=cfg.seed)
    t0 = time.perf_counter()
    worst, report = finite_difference_check(model, graph, label=1, eps=args.eps)
    runtime = time.perf_counter() - t0
    n_params = sum(p.data.size for p in model.parameters())
    for name in sorted(report):
        print(f"  {name:<12} rel err {report[name]:.3e}")
    print(
        f"max rel err {worst:.3e} over {n_params} parameters "
        f"(threshold {args.threshold:g}, {runtime:.1f}s)"
    )
    if not worst < args.threshold:
        print("gradient check FAILED", file=sys.stderr)
        return EXIT_NUMERIC
    print("gradient check passed")
    return EXIT_OK


def cmd_make_synth(args) -> int:
    cfg = _config_from_args(args)
    recordings = generate_synthetic_dataset(
        cfg.synth_classes,
        cfg.synth_per_class,
        cfg.synth_length,
        seed=cfg.seed,
        n_channels=cfg.synth_channels,
        noise_std=cfg.synth_noise,
    )
    path = write_synthetic_dataset(args.out, recordings, cfg.synth_classes)
    print(f"wrote {len(recordings)} recordings and {path}")
    return EXIT_OK


# -- argument plumbing -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsgraph",
        description="Entropy-windowed similarity graphs and an attention classifier "
        "for vibration time series.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, out=True):
        p.add_argument("--config", help="flat JSON configuration file")
        if data:
            p.add_argument(
                "--data",
                required=True,
                help="manifest path, directory with manifest.json or .atg graphs, "
                "or the literal 'synthetic'",
            )
        if out:
            p.add_argument("--out", required=True, help="output directory")
        _add_config_flags(p)

    p = sub.add_parser("scan", help="entropy scan over window sizes; writes window_scan.csv")
    common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("build-graph", help="serialize one graph per sample under OUT/graphs")
    common(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="K-fold training; writes loss_log.csv, report.json, checkpoints")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    common(p)
    p.add_argument("--model", required=True, help="checkpoint file (.atm)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cross-eval", help="transfer evaluation on a different dataset")
    common(p)
    p.add_argument("--model", required=True, help="checkpoint file (.atm)")
    p.set_defaults(func=cmd_cross_eval)

    p = sub.add_parser("stats", help="Welch t and KS two-sample tests on two value files")
    p.add_argument("--sample-a", required=True, help="text file of numbers")
    p.add_argument("--sample-b", required=True, help="text file of numbers")
    p.add_argument("--out", help="optional output directory for stats.json")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("grad-check", help="finite-difference verification of all gradients")
    p.add_argument("--config", help="flat JSON configuration file")
    p.add_argument("--eps", type=float, default=1e-4, help="finite-difference step")
    p.add_argument("--threshold", type=float, default=1e-4, help="max relative error allowed")
    _add_config_flags(p)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("make-synth", help="write a synthetic dataset with manifest.json")
    common(p, data=False)
    p.set_defaults(func=cmd_make_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InfeasibleBandError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DataError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
