"""``radiomix`` command line entry point.

Every subcommand reads defaults from the matching table of an optional TOML
config file (``--config``); command line flags win over file values.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .corpus import CorpusIndex, decode_and_standardize, index_corpus
from .evaluation import SEGMENT_S, evaluate_run, report_json
from .exceptions import RadiomixError
from .features import mel_spectrogram, read_melf, write_melf
from .labels import write_annotations
from .loudness import integrated_loudness
from .postproc import SegmentPostProcessor, stitch_windows
from .synth import RadioMixSynthesizer, generate_dataset

log = logging.getLogger("radiomix")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    """Bad invocation or missing input path (exit status 2)."""


def _existing(path, what):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p


def _load_corpus(spec):
    p = _existing(spec, "corpus")
    return CorpusIndex.load_file(p) if p.is_file() else index_corpus(p)


def cmd_index(args):
    index = index_corpus(_existing(args.corpus, "corpus"))
    index.save(args.out)
    sizes = index.sizes()
    print(" ".join(f"{c}={n}" for c, n in sizes.items()))


def cmd_synth(args):
    corpus = _load_corpus(args.corpus)
    est = RadioMixSynthesizer(
        variant=args.variant,
        ld_min=args.ld_min,
        ld_max=args.ld_max,
        p_transition=args.p_transition,
        max_gap_s=args.max_gap,
        seed=args.seed,
    ).fit(corpus)
    workers = args.workers or os.cpu_count() or 1
    # output location and worker count never affect content
    echo = {k: v for k, v in _resolved(args).items() if k not in ("out", "workers")}
    generate_dataset(est.config_, args.count, args.seed, args.out, corpus, workers, echo)
    print(f"wrote {args.count} examples to {args.out}")


def cmd_featurize(args):
    src = _existing(args.input, "input")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if src.is_dir():
        files = sorted(p for p in src.rglob("*") if p.suffix.lower() == ".wav")
        pairs = [(p, out / p.relative_to(src).with_suffix(".melf")) for p in files]
    else:
        pairs = [(src, out / (src.stem + ".melf"))]
    for wav, dest in pairs:
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_melf(dest, mel_spectrogram(decode_and_standardize(wav)))
        log.info("featurized %s -> %s", wav, dest)
    print(f"wrote {len(pairs)} feature files to {out}")


def cmd_loudness(args):
    clip = decode_and_standardize(_existing(args.file, "audio file"))
    print(f"{integrated_loudness(clip):.2f}")


def cmd_postprocess(args):
    src = _existing(args.probs, "probability directory")
    files = sorted(src.glob("*.melf")) if src.is_dir() else [src]
    if not files:
        raise UsageError(f"no .melf files in {src}")
    windows = [read_melf(p) for p in files]
    proc = SegmentPostProcessor(
        threshold=args.threshold,
        min_speech_s=args.min_speech_s,
        min_music_s=args.min_music_s,
        max_gap_speech_s=args.max_gap_speech_s,
        max_gap_music_s=args.max_gap_music_s,
    )
    probs = stitch_windows(windows, n_frames=args.n_frames)
    events = proc.transform(probs)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_annotations(args.out, events)
    print(f"wrote {len(events)} events to {args.out}")


def cmd_evaluate(args):
    for d in (args.ref, args.pred):
        _existing(d, "annotation directory")
    total, per_file = evaluate_run(args.ref, args.pred, args.segment_ms / 1000.0, args.average)
    print(total.table())
    if args.json:
        Path(args.json).write_text(report_json(total, per_file) + "\n")


def build_parser():
    parser = argparse.ArgumentParser(prog="radiomix", description="Synthesize and score radio-style music/speech segmentation data.")
    parser.add_argument("--version", action="version", version=f"radiomix {__version__}")
    parser.add_argument("--config", help="TOML file with one table per subcommand")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="scan a corpus and save its index")
    p.add_argument("--corpus", help="root with music/ speech/ noise/ subdirectories")
    p.add_argument("--out", default="corpus_index.json")
    p.set_defaults(func=cmd_index, required=("corpus",))

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--corpus", help="corpus root or saved index")
    p.add_argument("--out", help="output directory")
    p.add_argument("--variant", default="d-DS", choices=("d-OF", "d-OFB", "d-NN", "d-DS"))
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ld-min", type=float, default=7.0)
    p.add_argument("--ld-max", type=float, default=18.0)
    p.add_argument("--p-transition", type=float, default=0.5)
    p.add_argument("--max-gap", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=0, help="0 = all cores")
    p.set_defaults(func=cmd_synth, required=("corpus", "out"))

    p = sub.add_parser("featurize", help="log-Mel features as .melf files")
    p.add_argument("--in", dest="input", help="WAV file or directory")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_featurize, required=("input", "out"))

    p = sub.add_parser("loudness", help="print integrated loudness (LUFS)")
    p.add_argument("file")
    p.set_defaults(func=cmd_loudness, required=())

    p = sub.add_parser("postprocess", help="turn window probabilities into events")
    p.add_argument("--probs", help="directory of n x 2 .melf probability windows")
    p.add_argument("--out", help="output TSV")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--n-frames", type=int, default=None, help="recording length in frames")
    p.add_argument("--min-speech-s", type=float, default=1.3)
    p.add_argument("--min-music-s", type=float, default=3.4)
    p.add_argument("--max-gap-speech-s", type=float, default=0.4)
    p.add_argument("--max-gap-music-s", type=float, default=0.6)
    p.set_defaults(func=cmd_postprocess, required=("probs", "out"))

    p = sub.add_parser("evaluate", help="segment-based P/R/F of predictions")
    p.add_argument("--ref", help="reference TSV directory")
    p.add_argument("--pred", help="prediction TSV directory")
    p.add_argument("--segment-ms", type=float, default=SEGMENT_S * 1000)
    p.add_argument("--average", choices=("micro", "macro"), default="micro")
    p.add_argument("--json", help="also write a JSON report here")
    p.set_defaults(func=cmd_evaluate, required=("ref", "pred"))
    return parser, sub


def _flag(dest):
    return "--in" if dest == "input" else "--" + dest.replace("_", "-")


def _resolved(args):
    return {k: v for k, v in vars(args).items() if k not in ("func", "required", "config")}


def _apply_config(parser, subparsers, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = _existing(known.config, "config file")
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    for name, table in cfg.items():
        sp = subparsers.choices.get(name)
        if sp is None or not isinstance(table, dict):
            raise UsageError(f"{path}: unknown config table [{name}]")
        dests = {a.dest for a in sp._actions}
        values = {k.replace("-", "_"): v for k, v in table.items()}
        unknown = sorted(set(values) - dests)
        if unknown:
            raise UsageError(f"{path}: unknown keys in [{name}]: {', '.join(unknown)}")
        sp.set_defaults(**values)


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("RADIOMIX_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    _setup_logging()
    parser, sub = build_parser()
    try:
        _apply_config(parser, sub, argv)
        args = parser.parse_args(argv)
        missing = [_flag(r) for r in args.required if getattr(args, r) is None]
        if missing:
            raise UsageError(f"{args.command}: missing required option(s) {', '.join(missing)}")
        args.func(args)
    except UsageError as exc:
        print(f"radiomix: error: {exc}", file=sys.stderr)
        return 2
    except (RadiomixError, ValueError, OSError) as exc:
        print(f"radiomix: error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
