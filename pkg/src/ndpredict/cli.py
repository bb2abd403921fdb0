"""Command-line front end.

Subcommands: ingest, synth, train, predict, evaluate, select-k. Every
command takes ``--config FILE`` (``key = value`` lines) and flags that
override individual keys. Outputs go to ``--out DIR`` together with a
``manifest.json`` echoing the resolved configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__, efm
from .config import ConfigError, RunConfig, load_config, write_config_file
from .evaluation import EvalSettings, run_evaluation
from .graph import IngestError, RunWindows, TemporalStarGraph, ingest
from .seeding import derive_seed
from .synth import SynthSpec, generate, write_dataset

logger = logging.getLogger("ndpredict")

FORMATS = {
    "events": "csv:target_id,attribute_id,timestamp/1",
    "labels": "csv:attribute_id,labels/1",
    "model": efm.MODEL_FORMAT,
    "predictions": "csv:target_id,components/1",
    "report": "ndpredict.report/1",
}


class CommandError(Exception):
    pass


# --- helpers ------------------------------------------------------------------


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise CommandError("an output directory is required (--out)")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(cfg: RunConfig) -> TemporalStarGraph:
    for key in ("events", "labels"):
        path = getattr(cfg, key)
        if not path:
            raise CommandError(f"missing --{key} file")
        if not Path(path).is_file():
            raise CommandError(f"{key} file not found: {path}")
    return ingest(cfg.events, cfg.labels, cfg.attribute_type)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def _write_manifest(out: Path, command: str, cfg: RunConfig, outputs: dict) -> None:
    _write_json(
        out / "manifest.json",
        {
            "command": command,
            "version": __version__,
            "seed": cfg.seed,
            "sub_seeds": {name: derive_seed(cfg.seed, name) for name in ("clustering", "mf.init", "biasedmf.init", "evaluate.sample", "select_k.sample")},
            "config": cfg.as_dict(),
            "formats": FORMATS,
            "outputs": {k: str(v) for k, v in sorted(outputs.items())},
        },
    )


def _settings(cfg: RunConfig) -> EvalSettings:
    return EvalSettings(
        k=cfg.k,
        seed=cfg.seed,
        ridge_fallback=cfg.ridge_fallback,
        lr=cfg.lr,
        lam=cfg.lam,
        epochs=cfg.epochs,
        factors=cfg.factors,
        methods=tuple(cfg.methods),
        leave_one_out=cfg.leave_one_out,
        unique=cfg.set_semantics,
        num_targets=cfg.num_targets,
    )


# --- commands -----------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    s = g.summary()
    print(f"labels (n): {s.labels}")
    print(f"targets: {s.targets}")
    print(f"attributes: {s.attributes}")
    print(f"events: {s.events}")
    try:
        windows = cfg.windows
    except ConfigError:
        return 0
    for name in ("history", "current", "future"):
        w = getattr(windows, name)
        active = len(g.targets_active_in_all([w]))
        print(f"{name} {w}: {active} active targets")
    print(f"active in all windows: {len(g.targets_active_in_all([windows.history, windows.current, windows.future]))}")
    return 0


def cmd_synth(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg)
    if cfg.t_h_start is None:
        cfg.update({"t_h_start": 0, "t_h_end": 100, "t_c_end": 200, "t_f_end": 300})
    windows = cfg.windows
    spec = SynthSpec(
        n=args.labels_count,
        num_targets=args.targets,
        windows=windows,
        num_clusters=args.clusters,
        events_per_window=args.events_per_window,
        base_concentration=args.base_concentration,
        jitter=args.jitter,
        stay=args.stay,
        step_length=args.step_length,
        seed=derive_seed(cfg.seed, "synth"),
    )
    graph, truth = generate(spec)
    paths = write_dataset(out, graph, truth)
    dataset_cfg = out / "dataset.cfg"
    write_config_file(
        dataset_cfg,
        {"events": paths["events"], "labels": paths["labels"], "unit": cfg.unit, **windows.as_dict()},
    )
    paths["config"] = dataset_cfg
    _write_manifest(out, "synth", cfg, paths)
    print(f"wrote {graph.summary()} to {out}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    out = _out_dir(cfg)
    model = efm.train(
        g,
        cfg.windows,
        cfg.k,
        seed=derive_seed(cfg.seed, "clustering"),
        ridge_fallback=cfg.ridge_fallback,
        unique=cfg.set_semantics,
    )
    path = out / "model.json"
    efm.save_model(model, path)
    _write_manifest(out, "train", cfg, {"model": path})
    sizes = {c: len(m.source_cluster) for c, m in sorted(model.matrices.items())}
    print(f"trained k={model.k} on {len(model.cluster_model.targets)} targets; cluster sizes {sizes}")
    print(f"wrote {path}")
    return 0


def cmd_predict(cfg: RunConfig, args) -> int:
    if not cfg.model:
        raise CommandError("predict needs a trained model (--model)")
    if not Path(cfg.model).is_file():
        raise CommandError(f"model file not found: {cfg.model}")
    g = _load_graph(cfg)
    out = _out_dir(cfg)
    model = efm.load_model(cfg.model)
    if model.catalog.labels != g.catalog.labels:
        raise CommandError("model labels do not match the labels file")
    if args.targets:
        targets = sorted(set(args.targets))
    else:
        w = model.windows
        targets = sorted(g.targets_active_in_all([w.history, w.current]))
    path = out / "predictions.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["target_id", *g.catalog.labels])
        for t in targets:
            writer.writerow([t, *(repr(float(x)) for x in efm.predict(model, g, t))])
    _write_manifest(out, "predict", cfg, {"predictions": path})
    print(f"wrote {len(targets)} predictions to {path}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    out = _out_dir(cfg)
    result = run_evaluation(g, cfg.windows, _settings(cfg))
    report = result.report
    json_path, txt_path = out / "report.json", out / "report.txt"
    doc = report.to_dict()
    doc["format"] = FORMATS["report"]
    doc["windows"] = cfg.windows.as_dict()
    _write_json(json_path, doc)
    txt_path.write_text(report.to_table())
    _write_manifest(out, "evaluate", cfg, {"report_json": json_path, "report_text": txt_path})
    print(report.to_table(), end="")
    return 0


def cmd_select_k(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    out = _out_dir(cfg)
    sel = efm.select_k(
        g,
        cfg.windows,
        cfg.k_candidates,
        sample_size=min(cfg.sample_size, _eligible_for_selection(g, cfg.windows)),
        seed=cfg.seed,
        ridge_fallback=cfg.ridge_fallback,
        unique=cfg.set_semantics,
    )
    json_path, txt_path = out / "select_k.json", out / "select_k.txt"
    _write_json(json_path, sel.as_dict())
    lines = [f"{'k':>5}{'mean eta':>12}"]
    lines += [f"{k:>5}{s:>12.4f}" + ("  *" if k == sel.best_k else "") for k, s in sorted(sel.scores.items())]
    txt_path.write_text("\n".join(lines) + "\n")
    _write_manifest(out, "select-k", cfg, {"select_k_json": json_path, "select_k_text": txt_path})
    print(txt_path.read_text(), end="")
    print(f"chosen k = {sel.best_k}")
    return 0


def _eligible_for_selection(g: TemporalStarGraph, windows: RunWindows) -> int:
    split = efm.backshifted_windows(windows)
    return len(g.targets_active_in_all([split.history, split.current, split.future]))


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration file")
    common.add_argument("--events", help="events file (target_id,attribute_id,timestamp)")
    common.add_argument("--labels", help="labels file (attribute_id,label1;label2;...)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--unit", help="timestamp unit name; 'days' also accepts ISO dates in window bounds")
    for key in ("t-h-start", "t-h-end", "t-c-end", "t-f-end"):
        common.add_argument(f"--{key}", help="window bound")
    common.add_argument("--set-semantics", action="store_const", const=True, default=None,
                        help="count each neighbor once per window instead of once per link event")
    common.add_argument("-v", "--verbose", action="store_true")

    model_opts = argparse.ArgumentParser(add_help=False)
    model_opts.add_argument("--k", type=int, help="number of clusters")
    model_opts.add_argument("--ridge-fallback", type=float)

    parser = argparse.ArgumentParser(prog="ndpredict", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="validate inputs and print counts")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset with ground truth")
    p.add_argument("--n", dest="labels_count", type=int, default=6, help="label count")
    p.add_argument("--targets", type=int, default=200)
    p.add_argument("--clusters", type=int, default=1)
    p.add_argument("--events-per-window", type=int, default=200)
    p.add_argument("--base-concentration", type=float, default=2.0)
    p.add_argument("--jitter", type=float, default=None)
    p.add_argument("--stay", type=float, default=0.5)
    p.add_argument("--step-length", type=int, default=None,
                   help="evolve every this many time units instead of once per window")

    sub.add_parser("train", parents=[common, model_opts], help="learn evolution matrices")

    p = sub.add_parser("predict", parents=[common], help="predict future neighbor distributions")
    p.add_argument("--model", help="model.json from train")
    p.add_argument("--target", dest="targets", action="append", help="restrict to these targets (repeatable)")

    p = sub.add_parser("evaluate", parents=[common, model_opts], help="score EFM and baselines")
    p.add_argument("--methods", help="comma list from efm,mvm,mf,biasedmf")
    p.add_argument("--lr", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--factors", type=int)
    p.add_argument("--num-targets", type=int)
    p.add_argument("--leave-one-out", action="store_const", const=True, default=None)

    p = sub.add_parser("select-k", parents=[common], help="sweep cluster counts")
    p.add_argument("--k-candidates", help="comma list of cluster counts")
    p.add_argument("--sample-size", type=int)
    p.add_argument("--ridge-fallback", type=float)
    return parser


_NOT_CONFIG = {"command", "config", "verbose", "labels_count", "targets", "clusters", "events_per_window",
               "base_concentration", "jitter", "stay", "step_length"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG and v is not None}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "synth":
            return cmd_synth(cfg, args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "predict":
            return cmd_predict(cfg, args)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "select-k":
            return cmd_select_k(cfg)
    except (IngestError, ConfigError, CommandError, efm.TrainingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
