"""
Command-line surface: `python -m src <command> ...`

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from .errors import VALIDATION_ERRORS

logger = logging.getLogger("src.cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _data_dir() -> Path:
    return Path(os.getenv("LOCALSV_DATA_DIR", "data"))


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------
def cmd_synth(args) -> int:
    from .collectors.synth_generator import SyntheticCorpusGenerator

    out = Path(args.out) if args.out else _data_dir() / "synth"
    generator = SyntheticCorpusGenerator(data_dir=out, audio_format=args.format, seed=args.seed)
    manifest = generator.generate(args.speakers, args.utts)
    print(f"Wrote {len(manifest)} utterances of {args.speakers} speakers to {out}")
    return EXIT_OK


def cmd_trials(args) -> int:
    from .collectors.corpus_importer import CorpusImporter

    importer = CorpusImporter()
    manifest_path = Path(args.manifest)
    manifest = importer.read_manifest(manifest_path)
    out = Path(args.out)
    if args.holdout:
        train, heldout = importer.split_manifest(manifest, args.holdout)
        for name, part in (("train_manifest.txt", train), ("heldout_manifest.txt", heldout)):
            importer.write_manifest(part, out / name)
        manifest = heldout
    trials = importer.make_trials(manifest, args.n, seed=args.seed)
    importer.write_trials(trials, out / "trials.txt")
    print(f"Wrote {len(trials)} trials to {out / 'trials.txt'}")
    return EXIT_OK


def cmd_features(args) -> int:
    import pandas as pd

    from .collectors.corpus_importer import MANIFEST_COLUMNS, CorpusImporter
    from .frontend import load_waveform, log_mel_features, write_sekf

    importer = CorpusImporter()
    manifest = importer.read_manifest(args.manifest)
    out = Path(args.out)
    rows = []
    for row in manifest.itertuples(index=False):
        relative = Path("features") / f"{row.utt_id}.sekf"
        write_sekf(out / relative, log_mel_features(load_waveform(row.path)))
        rows.append({"utt_id": row.utt_id, "speaker_id": row.speaker_id, "path": relative.as_posix()})
    importer.write_manifest(pd.DataFrame(rows, columns=MANIFEST_COLUMNS), out / "manifest.txt")
    print(f"Wrote {len(rows)} feature files to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .collectors.corpus_importer import CorpusImporter
    from .training import format_config, load_config, train, with_overrides

    config = load_config(args.config)
    overrides = {k: v for k, v in (("steps", args.steps), ("seed", args.seed)) if v is not None}
    if overrides:
        config = with_overrides(config, **overrides)
    manifest = CorpusImporter().read_manifest(args.manifest)
    result = train(config, manifest, args.out)
    print(f"Trained {result.steps} steps, final loss {result.final_loss:.4f}; checkpoint {result.checkpoint}")
    if args.record:
        from .database import ResultsDatabase

        ResultsDatabase(args.db_url).add_training_run(
            model=config.model,
            config_text=format_config(config),
            steps=result.steps,
            final_loss=result.final_loss,
            checkpoint_path=str(result.checkpoint),
            manifest_path=str(args.manifest),
            num_speakers=manifest["speaker_id"].nunique(),
        )
    return EXIT_OK


def cmd_extract(args) -> int:
    from .collectors.corpus_importer import CorpusImporter
    from .training import extract_from_checkpoint

    manifest = CorpusImporter().read_manifest(args.manifest)
    store = extract_from_checkpoint(args.checkpoint, manifest)
    if args.seke_dir:
        store.save_seke_dir(args.out)
    else:
        store.save_text(args.out)
    print(f"Wrote {len(store)} embeddings to {args.out}")
    return EXIT_OK


def cmd_score(args) -> int:
    from .collectors.corpus_importer import CorpusImporter
    from .evaluation import evaluate_trials
    from .head import EmbeddingStore

    importer = CorpusImporter()
    trials = importer.read_trials(args.trials)
    scores = evaluate_trials(trials, EmbeddingStore.load(args.embeddings))
    importer.write_scores(scores.to_frame(), args.out)
    print(f"Wrote {len(scores)} scores to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .collectors.corpus_importer import CorpusImporter
    from .evaluation import EvaluationReport, ScoreSet, det_points

    importer = CorpusImporter()
    scores = ScoreSet.from_frames(importer.read_trials(args.trials), importer.read_scores(args.scores))

    db = None
    baseline_eer = None
    if args.record or args.baseline:
        from .database import ResultsDatabase

        db = ResultsDatabase(args.db_url)
    if args.baseline:
        baseline = db.latest_evaluation(args.baseline)
        if baseline is None:
            logger.warning("No evaluation named '%s' in the registry; skipping comparison", args.baseline)
        else:
            baseline_eer = baseline["eer"]

    report = EvaluationReport(
        scores,
        model_name=args.name,
        p_target=args.p_target,
        baseline_eer=baseline_eer,
        baseline_name=args.baseline,
        n_bootstrap=args.bootstrap,
    )
    metrics = report.calculate_metrics()
    print(report.generate_report())
    if args.det_csv:
        Path(args.det_csv).parent.mkdir(parents=True, exist_ok=True)
        det_points(scores).to_csv(args.det_csv, index=False)
    if args.record:
        db.add_evaluation_run(args.name, metrics, trials_path=str(args.trials), p_target=args.p_target)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .analysis import run_gradcheck

    report = run_gradcheck(args.scope)
    print(report.to_string(index=False))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        report.to_csv(args.out, index=False)
    failed = int((~report["passed"]).sum())
    print(f"\n{len(report) - failed}/{len(report)} checks passed")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_bench(args) -> int:
    from .analysis import bench_attention, scaling_exponents

    report = bench_attention(sizes=args.sizes, modes=args.modes, output=args.out, repeats=args.repeats)
    print(report.to_string(index=False))
    for mode, slope in scaling_exponents(report).items():
        print(f"{mode}: wall-time exponent {slope:.2f}")
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localsv", description="Speaker-embedding toolkit")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ... (default $LOCALSV_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic speaker corpus")
    p.add_argument("--out", default=None, help="output directory (default $LOCALSV_DATA_DIR/synth)")
    p.add_argument("--speakers", type=int, default=20)
    p.add_argument("--utts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("wav", "sekw"), default="wav")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("trials", help="build a balanced trial list, optionally from a held-out split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--holdout", type=int, default=0, help="utterances per speaker held out for trials")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("features", help="convert manifest audio to SEKF feature files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a model from a config and a manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--record", action="store_true", help="store the run in the results registry")
    p.add_argument("--db-url", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="extract embeddings with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seke-dir", action="store_true", help="write one SEKE file per utterance into --out")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("score", help="cosine-score a trial list")
    p.add_argument("--trials", required=True)
    p.add_argument("--embeddings", required=True, help="text store or SEKE directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="EER and minDCF of a score file")
    p.add_argument("--trials", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--name", default="eval")
    p.add_argument("--p-target", type=float, default=0.05)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--det-csv", default=None)
    p.add_argument("--baseline", default=None, help="registry name of a run to compare against")
    p.add_argument("--record", action="store_true")
    p.add_argument("--db-url", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--scope", choices=("kernels", "blocks", "le_conformer", "sst", "head", "all"), default="all")
    p.add_argument("--out", default=None, help="CSV report path")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="attention scaling benchmark")
    p.add_argument("--sizes", type=int, nargs="+", default=[400, 800, 1600, 3200])
    p.add_argument("--modes", nargs="+", choices=("global", "windowed"), default=["global", "windowed"])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", default=None, help="CSV report path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION

    level = (args.log_level or os.getenv("LOCALSV_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except Exception as exc:  # pylint: disable=broad-except
        logger.exception("%s failed: %s", args.command, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
