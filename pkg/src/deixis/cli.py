"""Command-line entry point: forge, qa, adapter {check,train,ablate}, eval, report."""
from __future__ import annotations

import argparse
import collections
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io as dio
from .config import PipelineConfig, load_config
from .errors import (
    ConfigInvalid,
    DeixisError,
    IoFailure,
    ParseError,
    RephraserUnavailable,
    SuiteFailure,
    UnknownQaId,
    ValidationFailed,
)
from .evaluation.probes import BUILTIN, GeometricOracle, bias_probe, run_answerer
from .evaluation.reports import report_csv, report_from_dict, svg_chart, text_table
from .evaluation.scoring import Prediction, random_baseline, score
from .qa.item import QAItem
from .qa.templates import TaskCategory
from .synth import ClipRecord

log = logging.getLogger("deixis")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3

CLIPS_FILE = "clips.jsonl"
REJECTS_FILE = "rejects.jsonl"
DATASET_FILE = "dataset.jsonl"


class MixedInputs(DeixisError):
    """Inputs were produced under different configurations."""


def _config(args) -> PipelineConfig:
    overrides = {
        "run.seed": args.seed,
        "run.n_clips": args.n_clips,
        "run.tau": args.tau,
    }
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigInvalid(f"--set expects section.key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    return load_config(args.config, overrides=overrides)


def _check_hash(path, expected: str, force: bool) -> Optional[dict]:
    manifest = dio.read_manifest(path)
    if manifest is None:
        log.warning("%s has no manifest; config consistency not checked", path)
        return None
    if manifest.get("config_hash") != expected and not force:
        raise MixedInputs(
            f"{path} was produced with config {manifest.get('config_hash')}, current config is {expected}; "
            "pass --force to combine them"
        )
    return manifest


def load_clips(path) -> dict:
    return {c.clip_id: c for c in dio.iter_jsonl(path, ClipRecord.from_dict)}


def load_dataset(path) -> list:
    return dio.read_jsonl(path, QAItem.from_dict)


def load_predictions(path) -> list:
    def decode(rec):
        if not isinstance(rec.get("qa_id"), str) or not isinstance(rec.get("raw_output"), str):
            raise ValueError("prediction needs string qa_id and raw_output")
        return Prediction(rec["qa_id"], rec["raw_output"])

    return dio.read_jsonl(path, decode)


# ---------------------------------------------------------------- forge


def cmd_forge(cfg: PipelineConfig, out: Path, jobs: int = 1) -> dict:
    from .synth import forge_clips

    result = forge_clips(cfg.seed, cfg.n_clips, cfg.gen_config(), jobs=jobs)
    dio.write_jsonl(out / CLIPS_FILE, (c.to_dict() for c in result.clips))
    dio.write_jsonl(out / REJECTS_FILE, ({"clip_id": cid, "reason": r} for cid, r in result.rejects))
    reasons = collections.Counter(r.split(":")[0] for _, r in result.rejects)
    return dio.write_manifest(out / CLIPS_FILE, "forge", cfg.hash("gen"), {
        "seed": cfg.seed,
        "n_clips": len(result.clips),
        "attempts": result.attempts,
        "acceptance_rate": round(result.acceptance_rate, 6),
        "reject_reasons": dict(sorted(reasons.items())),
        "config": {k: v for k, v in cfg.to_dict().items() if k == "run"},
    })


# ---------------------------------------------------------------- qa


def cmd_qa(cfg: PipelineConfig, clips_path: Path, out: Path, categories=None, force: bool = False) -> dict:
    from .qa.pipeline import clip_questions
    from .qa.rephrase import HttpRephraser

    _check_hash(clips_path, cfg.hash("gen"), force)
    qa_cfg = cfg.qa_config(categories)
    client = None
    if qa_cfg.rephrase_mode == "external":
        if not cfg["rephraser.endpoint"]:
            raise RephraserUnavailable("external rephrasing needs rephraser.endpoint")
        client = HttpRephraser(cfg["rephraser.endpoint"], cfg["rephraser.timeout_s"], max_inflight=cfg["rephraser.max_inflight"])
    items, drops = [], collections.Counter()
    n_clips = 0
    for clip in dio.iter_jsonl(clips_path, ClipRecord.from_dict):
        n_clips += 1
        res = clip_questions(clip, qa_cfg, client)
        items.extend(res.items)
        for cat, reason in res.drops:
            drops[f"{cat.value}: {reason.split(':')[0]}"] += 1
    dio.write_jsonl(out / DATASET_FILE, (it.to_dict() for it in items))
    per_cat = collections.Counter(it.category.value for it in items)
    validation = sum(n for k, n in drops.items() if "validation" in k)
    summary = {
        "clips": n_clips,
        "items": len(items),
        "per_category": {c.value: per_cat.get(c.value, 0) for c in TaskCategory},
        "drops": dict(sorted(drops.items())),
        "validation_failures": validation,
    }
    dio.write_json(out / "qa_summary.json", summary)
    dio.write_manifest(out / DATASET_FILE, "qa", cfg.hash("qa"), {"source": clips_path.name, "clips_hash": cfg.hash("gen"), **summary})
    return summary


# ---------------------------------------------------------------- adapter


def _reference_data(clips_path: Path, dataset_path: Path) -> tuple:
    clips = load_clips(clips_path)
    items = [it for it in load_dataset(dataset_path) if it.category is TaskCategory.REFERENCE]
    if not items:
        raise ValidationFailed(f"{dataset_path} holds no Reference items to train on", [])
    return clips, items


def cmd_adapter(cfg: PipelineConfig, sub: str, out: Path, clips_path=None, dataset_path=None, force=False) -> dict:
    if sub == "check":
        from .evaluation.sweep import is_monotone_nonincreasing, tau_sweep
        from .hint.checks import run_suite

        summary = run_suite()
        if clips_path is not None and Path(clips_path).exists():
            counts = tau_sweep(load_clips(clips_path).values())
            summary["tau_sweep"] = {str(k): v for k, v in counts.items()}
            if not is_monotone_nonincreasing(counts):
                raise SuiteFailure("KeyToken counts rise with tau", [summary["tau_sweep"]])
        dio.write_json(out / "adapter_check.json", summary)
        return summary

    from .hint.ablation import run_ablation, train_toy
    from .hint.features import split_by_clip

    _check_hash(dataset_path, cfg.hash(), force)
    clips, items = _reference_data(clips_path, dataset_path)
    acfg = cfg.ablation_config()
    if sub == "train":
        train, test = split_by_clip(items, acfg.test_fraction, acfg.seed)
        trained = train_toy(clips, train, test, acfg, with_hand=True)
        m = trained.model
        dio.write_json(out / "toy_model.json", {
            "adapter": m.adapter.to_dict(), "q0": m.q0.tolist(), "B": m.B.ravel().tolist(),
        })
        dio.write_json(out / "train_report.json", trained.report.to_dict())
        dio.write_json(out / "train_losses.json", {"losses": trained.losses})
        return {"report": trained.report.to_dict(), "final_loss": trained.losses[-1], "n_train": len(train), "n_test": len(test)}
    if sub == "ablate":
        result = run_ablation(acfg, data=(clips, items))
        summary = result.to_dict()
        dio.write_json(out / "ablation.json", summary)
        for r in (result.hint_on.report, result.hint_off.report, result.chance):
            dio.write_json(out / "reports" / f"{r.label}.json", r.to_dict())
        return summary
    raise ConfigInvalid(f"unknown adapter subcommand {sub!r}")


# ---------------------------------------------------------------- eval


def _write_reports(reports, out: Path) -> None:
    rdir = out / "reports"
    for r in reports:
        dio.write_json(rdir / f"{r.label}.json", r.to_dict())
        try:
            rdir.mkdir(parents=True, exist_ok=True)
            (rdir / f"{r.label}.csv").write_text(report_csv(r), encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {rdir}: {exc}") from exc
    try:
        (out / "summary.txt").write_text(text_table(reports), encoding="utf-8")
        (out / "summary.svg").write_text(svg_chart(reports), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc}") from exc


def self_check(dataset, clips, seed: int) -> list:
    """Evaluation invariants; returns the names of failed checks."""
    failed = []
    oracle = bias_probe(dataset, GeometricOracle(), seed, clips)
    if any(v["accuracy"] != 100.0 for v in oracle.per_category.values()):
        failed.append("oracle-100")
    if random_baseline(dataset) != random_baseline(list(reversed(dataset))):
        failed.append("random-baseline-order")
    preds = run_answerer(dataset, BUILTIN["random"](), seed)
    if score(dataset, preds) != score(dataset, list(reversed(preds))):
        failed.append("score-permutation")
    return failed


def cmd_eval(
    cfg: PipelineConfig,
    dataset_path: Path,
    out: Path,
    predictions_path=None,
    probes: Sequence[str] = (),
    clips_path=None,
    check: bool = False,
    force: bool = False,
) -> dict:
    m_data = _check_hash(dataset_path, cfg.hash(), force)
    dataset = load_dataset(dataset_path)
    reports = []
    if predictions_path is not None:
        m_pred = dio.read_manifest(predictions_path)
        if m_pred and m_data and m_pred.get("config_hash") != m_data.get("config_hash") and not force:
            raise MixedInputs(f"{predictions_path} and {dataset_path} come from different configs; pass --force")
        reports.append(score(dataset, load_predictions(predictions_path), "main"))
    reports.append(random_baseline(dataset))
    clips = load_clips(clips_path) if clips_path is not None else None
    for name in probes:
        if name == "oracle":
            if clips is None:
                raise ConfigInvalid("the oracle probe needs --clips")
            reports.append(bias_probe(dataset, GeometricOracle(), cfg.seed, clips))
        elif name in BUILTIN:
            reports.append(bias_probe(dataset, BUILTIN[name](), cfg.seed, clips))
        else:
            raise ConfigInvalid(f"unknown probe {name!r}; choose from oracle, {', '.join(sorted(BUILTIN))}")
    _write_reports(reports, out)
    summary = {"reports": [r.to_dict() for r in reports]}
    if check:
        if clips is None:
            raise ConfigInvalid("--self-check needs --clips")
        failed = self_check(dataset, clips, cfg.seed)
        summary["self_check"] = failed or "ok"
        if failed:
            raise ValidationFailed("self-check failed: " + ", ".join(failed), failed)
    return summary


# ---------------------------------------------------------------- report


def cmd_report(reports_dir: Path, out: Path) -> str:
    files = sorted(Path(reports_dir).glob("*.json"))
    if not files:
        raise IoFailure(f"no report JSON files in {reports_dir}")
    reports = [report_from_dict(dio.read_json(p)) for p in files]
    table = text_table(reports)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(table, encoding="utf-8")
        (out / "report.svg").write_text(svg_chart(reports), encoding="utf-8")
        (out / "report.csv").write_text("".join(f"# {r.label}\n{report_csv(r)}" for r in reports), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc}") from exc
    return table


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")
    common.add_argument("--seed", type=int)
    common.add_argument("--n-clips", type=int)
    common.add_argument("--tau", type=float, help="hand-token confidence gate")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--force", action="store_true", help="accept inputs produced under another config")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="deixis", description="Gesture-grounded desk-scale VQA toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("forge", parents=[common], help="synthesize and filter clips")
    qa = sub.add_parser("qa", parents=[common], help="generate questions for forged clips")
    qa.add_argument("--clips", type=Path)
    qa.add_argument("--categories", help="comma-separated subset of task categories")
    ad = sub.add_parser("adapter", parents=[common], help="hand-token adapter checks and toy training")
    ad.add_argument("action", choices=["check", "train", "ablate"])
    ad.add_argument("--clips", type=Path)
    ad.add_argument("--dataset", type=Path)
    ev = sub.add_parser("eval", parents=[common], help="score predictions and run bias probes")
    ev.add_argument("--dataset", type=Path)
    ev.add_argument("--predictions", type=Path)
    ev.add_argument("--clips", type=Path)
    ev.add_argument("--probe", default="", help="comma-separated: blind, choices-only, random, oracle")
    ev.add_argument("--self-check", action="store_true")
    rp = sub.add_parser("report", parents=[common], help="render stored reports as one table and chart")
    rp.add_argument("--reports", type=Path)
    return p


def _run(args) -> object:
    cfg = _config(args)
    out: Path = args.out
    if args.command == "forge":
        return cmd_forge(cfg, out, args.jobs)
    if args.command == "qa":
        cats = [c for c in (args.categories or "").split(",") if c.strip()]
        return cmd_qa(cfg, args.clips or out / CLIPS_FILE, out, cats or None, args.force)
    if args.command == "adapter":
        return cmd_adapter(cfg, args.action, out, args.clips or out / CLIPS_FILE, args.dataset or out / DATASET_FILE, args.force)
    if args.command == "eval":
        probes = [p.strip() for p in args.probe.split(",") if p.strip()]
        return cmd_eval(
            cfg, args.dataset or out / DATASET_FILE, out, args.predictions, probes,
            args.clips or (out / CLIPS_FILE if (out / CLIPS_FILE).exists() else None), args.self_check, args.force,
        )
    if args.command == "report":
        return cmd_report(args.reports or out / "reports", out)
    raise ConfigInvalid(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        result = _run(args)
    except (ConfigInvalid, MixedInputs) as exc:
        print(f"deixis: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, UnknownQaId, ValidationFailed, SuiteFailure) as exc:
        print(f"deixis: {exc}", file=sys.stderr)
        cases = getattr(exc, "cases", None)
        if cases:
            print(json.dumps(cases[:20], indent=1), file=sys.stderr)
        return EXIT_VALIDATION
    except (IoFailure, RephraserUnavailable, OSError) as exc:
        print(f"deixis: {exc}", file=sys.stderr)
        return EXIT_IO
    if isinstance(result, str):
        sys.stdout.write(result)
    else:
        print(json.dumps(result, indent=1, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
