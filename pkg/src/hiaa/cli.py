"""Command-line surface for the full pipeline.

Commands: synth, ingest, genqa, split, train, train-voter, score, eval,
report. Every command is deterministic given its config and inputs and
never mutates its input files. Failures print one machine-parseable line
to stderr ("error: <category>: <message>") and exit with a category code:
2 config error, 3 missing input, 4 format/version error, 5 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import datapipe, synth
from .config import RunConfig, derive_seed, load_config
from .datapipe import OVERALL
from .exceptions import (
    BadFlag,
    BadFraction,
    BatchTooSmall,
    ConfigError,
    CorruptFile,
    DegenerateRange,
    EmptyInput,
    EmptyRaterList,
    EmptyTrainingSet,
    IndexOutOfRange,
    LengthMismatch,
    MissingInput,
    MissingPrediction,
    NonFiniteInput,
    NumericFailure,
    OutOfRange,
    ShapeMismatch,
    TooFewValues,
    VersionMismatch,
    WrongPromptKind,
)
from .metavoter import train_metavoter
from .metrics import HEAD_NAMES, evaluate, render_reports_text, report_from_json, write_reports_json
from .model import score_samples
from .trainer import Checkpoint, load_checkpoint, save_checkpoint, train_stage1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_INPUT = 3
EXIT_FORMAT = 4
EXIT_NUMERIC = 5

_ERROR_TABLE = (
    (
        (
            ConfigError,
            BadFraction,
            IndexOutOfRange,
            OutOfRange,
            BadFlag,
            TooFewValues,
            EmptyRaterList,
            LengthMismatch,
            EmptyInput,
            EmptyTrainingSet,
            BatchTooSmall,
            ShapeMismatch,
            WrongPromptKind,
        ),
        EXIT_CONFIG,
        "config-error",
    ),
    ((MissingInput, MissingPrediction, FileNotFoundError), EXIT_MISSING_INPUT, "missing-input"),
    ((CorruptFile, VersionMismatch), EXIT_FORMAT, "format-error"),
    ((DegenerateRange, NonFiniteInput, NumericFailure), EXIT_NUMERIC, "numeric-error"),
)


def _require(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingInput(f"{what} not found: {path}")
    return p


def _read_samples(path: str) -> list[datapipe.ScoredSample]:
    return datapipe.read_samples_jsonl(_require(path, "samples file"))


def _split_subset(samples, split_path: str, part: str):
    doc = datapipe.read_split_json(_require(split_path, "split file"))
    wanted = set(doc[part])
    subset = [s for s in samples if s.sample_id in wanted]
    missing = wanted - {s.sample_id for s in subset}
    if missing:
        raise MissingInput(
            f"split references {len(missing)} sample id(s) absent from the samples file"
        )
    return subset


def cmd_synth(cfg: RunConfig, args) -> None:
    records = synth.generate_records(
        n=args.n if args.n is not None else cfg.synth_n,
        seed=derive_seed(cfg.seed, "synth"),
        noise_sigma=cfg.noise_sigma,
        f0_fraction=cfg.f0_fraction,
        n_features=cfg.n_features,
        gain=cfg.generator_gain,
    )
    datapipe.write_records_jsonl(args.out, records)
    print(f"wrote {args.out} ({len(records)} records)")


def cmd_ingest(cfg: RunConfig, args) -> None:
    records = datapipe.read_records_jsonl(_require(args.records, "records file"))
    samples = datapipe.build_samples(records)
    datapipe.write_samples_jsonl(args.out, samples)
    print(f"wrote {args.out} ({len(samples)} samples)")


def cmd_genqa(cfg: RunConfig, args) -> None:
    samples = _read_samples(args.samples)
    # paraphrase indices are drawn from the split seed
    rng = np.random.default_rng(derive_seed(cfg.seed, "split"))
    pairs = [
        datapipe.make_qa(s, int(rng.integers(0, len(datapipe.OVERALL_QUESTIONS))))
        for s in samples
    ]
    datapipe.write_qa_jsonl(args.out, pairs)
    print(f"wrote {args.out} ({len(pairs)} question-answer pairs)")


def cmd_split(cfg: RunConfig, args) -> None:
    samples = _read_samples(args.samples)
    fractions = args.test_fraction if args.test_fraction is not None else cfg.split_fractions()
    seed = derive_seed(cfg.seed, "split")
    train, test = datapipe.split_dataset(samples, fractions, seed)
    datapipe.write_split_json(args.out, train, test, fractions, seed)
    print(f"wrote {args.out} ({len(train)} train / {len(test)} test)")


def cmd_train(cfg: RunConfig, args) -> None:
    samples = _read_samples(args.samples)
    train = _split_subset(samples, args.split, "train")
    ckpt = train_stage1(train, cfg.stage1(), cfg.sizes(), config_echo=cfg.resolved())
    save_checkpoint(ckpt, args.out)
    print(f"wrote {args.out} (stage-1 checkpoint, {len(train)} training samples)")


def cmd_train_voter(cfg: RunConfig, args) -> None:
    ckpt = load_checkpoint(_require(args.ckpt, "checkpoint"))
    samples = _read_samples(args.samples)
    train = _split_subset(samples, args.split, "train")
    if not train:
        raise EmptyTrainingSet("split has no training samples")
    preds = score_samples(ckpt.model, train)
    triples = np.array(
        [[preds[s.sample_id].s_lm_norm, preds[s.sample_id].s_reg, preds[s.sample_id].s_exp]
         for s in train]
    )
    targets = np.array([s.scores[OVERALL] for s in train])
    ckpt.model.metavoter = train_metavoter(
        triples, targets, cfg.voter(), hidden=cfg.voter_hidden
    )
    out = Checkpoint(config=cfg.resolved(), model=ckpt.model)
    save_checkpoint(out, args.out)
    print(f"wrote {args.out} (fusion stage trained on {len(train)} samples)")


def cmd_score(cfg: RunConfig, args) -> None:
    ckpt = load_checkpoint(_require(args.ckpt, "checkpoint"))
    if args.fused and ckpt.model.metavoter is None:
        raise MissingInput("checkpoint has no fusion section; run train-voter first")
    samples = _read_samples(args.samples)
    preds = score_samples(ckpt.model, samples, fused=args.fused)
    with open(args.out, "w", encoding="utf-8") as fh:
        for s in samples:
            hs = preds[s.sample_id]
            doc = {
                "sample_id": hs.sample_id,
                "f": hs.f,
                "lm_slot_scores": [float(v) for v in hs.lm_slot_scores],
                "s_lm": hs.s_lm,
                "s_lm_norm": hs.s_lm_norm,
                "s_reg": hs.s_reg,
                "expert": [float(v) for v in hs.expert],
            }
            if hs.fused is not None:
                doc["fused"] = hs.fused
            fh.write(json.dumps(doc) + "\n")
    print(f"wrote {args.out} ({len(samples)} scored samples)")


def cmd_eval(cfg: RunConfig, args) -> None:
    heads = tuple(h.strip() for h in args.heads.split(","))
    for h in heads:
        if h not in HEAD_NAMES:
            raise ConfigError(f"unknown head {h!r} (expected one of {', '.join(HEAD_NAMES)})")
    ckpt = load_checkpoint(_require(args.ckpt, "checkpoint"))
    need_fused = "metavoter" in heads
    if need_fused and ckpt.model.metavoter is None:
        raise MissingInput("checkpoint has no fusion section; run train-voter first")
    samples = _read_samples(args.samples)
    subset = _split_subset(samples, args.split, "test") if args.split else samples
    if not subset:
        raise EmptyInput("no samples to evaluate")
    preds = score_samples(ckpt.model, subset, fused=need_fused)
    reports = [evaluate(subset, preds, head, config=cfg.resolved()) for head in heads]
    write_reports_json(args.out, reports, cfg.resolved())
    print(f"wrote {args.out} ({len(subset)} samples, heads: {', '.join(heads)})")


def cmd_report(cfg: RunConfig, args) -> None:
    path = _require(args.report, "report file")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        reports = [report_from_json(d) for d in doc["heads"].values()]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CorruptFile(f"{path}: malformed report ({exc})") from None
    text = render_reports_text(reports)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiaa",
        description="Hierarchical multi-head aesthetic scoring pipeline.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file", default=None)
    common.add_argument("--seed", type=int, help="master seed (overrides config)", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    p = add_command("synth", "generate synthetic annotation records")
    p.add_argument("--n", type=int, default=None, help="number of records")
    p.add_argument("--noise-sigma", type=float, default=None, dest="noise_sigma")
    p.add_argument("--f0-fraction", type=float, default=None, dest="f0_fraction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = add_command("ingest", "normalize records into scored samples")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = add_command("genqa", "render rating-level question-answer pairs")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_genqa)

    p = add_command("split", "seeded per-source train/test split")
    p.add_argument("--samples", required=True)
    p.add_argument("--test-fraction", type=float, default=None, dest="test_fraction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = add_command("train", "stage-1 training of encoder and heads")
    p.add_argument("--samples", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = add_command("train-voter", "stage-2 fusion training (everything else frozen)")
    p.add_argument("--samples", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_voter)

    p = add_command("score", "run the heads over samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--fused", action="store_true", help="also emit the fused score")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = add_command("eval", "metric reports per head")
    p.add_argument("--samples", required=True)
    p.add_argument("--split", default=None, help="evaluate the test part of this split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--heads", default=",".join(HEAD_NAMES))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = add_command("report", "render a report JSON as an aligned text table")
    p.add_argument("--report", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def _overrides(args) -> dict:
    keys = ("seed", "noise_sigma", "f0_fraction")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        args.func(cfg, args)
    except Exception as exc:  # noqa: BLE001 - one mapping point for exit codes
        for types, code, category in _ERROR_TABLE:
            if isinstance(exc, types):
                print(f"error: {category}: {exc}", file=sys.stderr)
                return code
        raise
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
