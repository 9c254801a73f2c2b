"""Command-line entry point wiring the modules into reproducible runs.

Exit codes: 0 ok, 1 usage error, 2 input/data error, 3 internal invariant
violation. Every subcommand accepts --config; explicit flags override config
values.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, runner
from .config import RunConfig, config_from_dict, load_config
from .corpus import (
    LabelMap,
    SplitSpec,
    adapt_bbt,
    adapt_friends,
    apply_labels,
    assemble_samples,
    corpus_stats,
    filter_seasons,
    parse_canonical,
    read_samples,
    split,
    write_canonical,
    write_samples,
)
from .errors import ConfigError, SpeakerFpError, StageError
from .features import Vocabulary, build_vocab, read_activations
from .fingerprint import (
    ClassificationResult,
    build_library,
    detect_generic,
    load_library,
    save_library,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise _UsageError(f"expected comma-separated integers, got {text!r}") from None


def _float_triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise _UsageError(f"expected three comma-separated ratios, got {text!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _tau_grid(text: str) -> list[float]:
    """Parse 'start:stop:step' into an inclusive grid."""
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise _UsageError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise _UsageError("tau grid needs step > 0 and stop >= start")
    grid, value, i = [], start, 0
    while value <= stop + 1e-12:
        grid.append(round(value, 12))
        i += 1
        value = start + i * step
    return grid


def _load_base_config(args) -> RunConfig | None:
    if getattr(args, "config", None):
        return load_config(args.config)
    return None


def _label_map(args, cfg: RunConfig | None) -> LabelMap:
    if getattr(args, "preset", None):
        return LabelMap.preset(args.preset)
    if getattr(args, "speakers", None):
        return LabelMap(main_speakers=tuple(s.strip() for s in args.speakers.split(",") if s.strip()))
    if cfg is not None:
        return cfg.label_map.to_map()
    raise ConfigError("no label map: give --preset, --speakers, or a config file")


def _labeled_corpus(path, args, cfg) -> tuple:
    label_map = _label_map(args, cfg)
    corpus = apply_labels(parse_canonical(path), label_map)
    return corpus, label_map


def _read_classifications(path) -> list[ClassificationResult]:
    results = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                results.append(
                    ClassificationResult(
                        sample_id=row["id"],
                        scores=row["scores"],
                        predicted=row["pred"],
                        margin_top2=row["margin_top2"],
                        gold=row.get("gold"),
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise ConfigError(f"{path}: line {line_no}: bad classification record: {exc}") from None
    return results


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_ingest(args) -> int:
    adapters = {"friends": adapt_friends, "bbt": adapt_bbt, "canonical": parse_canonical}
    corpus = adapters[args.format](args.infile)
    write_canonical(corpus, args.outfile)
    print(f"wrote {corpus.n_scenes} scenes / {corpus.n_turns} turns to {args.outfile}")
    return 0


def _cmd_assemble(args) -> int:
    cfg = _load_base_config(args)
    corpus, _ = _labeled_corpus(args.infile, args, cfg)
    context = args.context if args.context is not None else (cfg.max_previous_context if cfg else 5)
    include = not args.no_speaker_tokens
    if args.no_speaker_tokens is False and cfg is not None:
        include = cfg.include_speaker_tokens
    samples = assemble_samples(corpus, context, include)
    write_samples(samples, args.outfile)
    print(f"wrote {len(samples)} samples (context {context}) to {args.outfile}")
    return 0


def _split_spec_from_args(args, cfg: RunConfig | None) -> SplitSpec:
    mode = args.mode or (cfg.split.mode if cfg else None)
    if mode is None:
        raise ConfigError("no split mode: give --mode or a config file")
    mode = mode.replace("-", "_")
    if mode == "by_season":
        valid = args.valid_seasons or (cfg.split.valid_seasons if cfg else ())
        test = args.test_seasons or (cfg.split.test_seasons if cfg else ())
        return SplitSpec.by_season(valid, test)
    ratios = args.ratios or (cfg.split.ratios if cfg else (0.8, 0.1, 0.1))
    seed = args.seed if args.seed is not None else (cfg.split.seed if cfg else 0)
    return SplitSpec.random_split(ratios, seed)


def _cmd_split(args) -> int:
    cfg = _load_base_config(args)
    corpus = parse_canonical(args.infile)
    seasons = args.seasons or (cfg.split.seasons if cfg else None)
    if seasons:
        corpus = filter_seasons(corpus, seasons)
    splits = split(corpus, _split_spec_from_args(args, cfg))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", splits.train), ("valid", splits.valid), ("test", splits.test)):
        write_canonical(part, out / f"{name}.jsonl")
        print(f"{name}: {part.n_scenes} scenes / {part.n_turns} turns")
    return 0


def _cmd_stats(args) -> int:
    cfg = _load_base_config(args)
    corpus = parse_canonical(args.infile)
    label_map = None
    if args.preset or args.speakers or cfg is not None:
        label_map = _label_map(args, cfg)
    report = corpus_stats(corpus, label_map)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False))
    return 0


def _feature_vectors(samples, args, cfg, vocab=None):
    mode = args.mode or (cfg.feature_mode if cfg else "word")
    if mode == "activations":
        path = args.activations or (cfg.activation_file if cfg else None)
        if not path:
            raise ConfigError("activation mode needs --activations")
        activations = read_activations(path)
        return mode, None, evaluation.featurize(samples, mode, activations=activations)
    if vocab is None:
        raise ConfigError("word mode here needs a prebuilt vocabulary")
    return mode, vocab, evaluation.featurize(samples, mode, vocab=vocab)


def _cmd_build(args) -> int:
    cfg = _load_base_config(args)
    samples = read_samples(args.infile)
    mode = args.mode or (cfg.feature_mode if cfg else "word")
    vocab = None
    if mode == "word":
        vocab = build_vocab(
            (s.input_text for s in samples),
            min_freq=args.min_freq if args.min_freq is not None else (cfg.vocab_min_freq if cfg else 1),
            max_size=args.max_size if args.max_size is not None else (cfg.vocab_max_size if cfg else None),
        )
    _, _, vectors = _feature_vectors(samples, args, cfg, vocab)
    labels = {s.sample_id: s.label for s in samples}
    size = args.k if args.k is not None else (cfg.k if cfg else 409)
    membership = args.membership or (cfg.membership if cfg else "pareto80_20")
    norm = args.norm if args.norm is not None else (cfg.N if cfg else None)
    library = build_library(vectors, labels, size, membership, norm)
    save_library(library, args.outfile)
    if vocab is not None:
        vocab.save(args.vocab_out or str(Path(args.outfile).with_name("vocab.json")))
    print(f"library over {len(library.fingerprints)} classes, k={library.size}, M={library.dim}")
    return 0


def _cmd_classify(args) -> int:
    cfg = _load_base_config(args)
    samples = read_samples(args.infile)
    library = load_library(args.library)
    vocab = Vocabulary.load(args.vocab) if args.vocab else None
    mode = args.mode or (cfg.feature_mode if cfg else ("word" if vocab else "activations"))
    if mode == "word" and vocab is None:
        raise ConfigError("word mode classification needs --vocab")
    _, _, vectors = _feature_vectors(samples, args, cfg, vocab)
    golds = {s.sample_id: s.label for s in samples}
    results, featureless = evaluation.classify_samples(vectors, golds, library)
    top_n = args.top_n if args.top_n is not None else (cfg.top_n if cfg else 2)
    tau = args.tau if args.tau is not None else (cfg.tau if cfg else 0.01)
    verdicts = {r.sample_id: detect_generic(r, top_n, tau) for r in results}
    runner.write_classifications(results, verdicts, args.outfile)
    print(f"classified {len(results)} samples ({len(featureless)} featureless) -> {args.outfile}")
    return 0


def _cmd_eval(args) -> int:
    results = _read_classifications(args.infile)
    report = evaluation.score(results)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        evaluation.write_confusion_csv(report, out / "confusion.csv")
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False))
    return 0


def _cmd_sweep_k(args) -> int:
    cfg = _load_base_config(args)
    train = read_samples(args.train)
    test = read_samples(args.test)
    mode = args.mode or (cfg.feature_mode if cfg else "word")
    vocab = None
    if mode == "word":
        vocab = build_vocab(
            (s.input_text for s in train),
            min_freq=args.min_freq if args.min_freq is not None else (cfg.vocab_min_freq if cfg else 1),
            max_size=args.max_size if args.max_size is not None else (cfg.vocab_max_size if cfg else None),
        )
    _, _, train_vectors = _feature_vectors(train, args, cfg, vocab)
    _, _, test_vectors = _feature_vectors(test, args, cfg, vocab)
    points = evaluation.sweep_k(
        train_vectors,
        {s.sample_id: s.label for s in train},
        test_vectors,
        {s.sample_id: s.label for s in test},
        args.ks,
        membership=args.membership or (cfg.membership if cfg else "pareto80_20"),
        norm=args.norm if args.norm is not None else (cfg.N if cfg else None),
    )
    evaluation.write_k_sweep_csv(points, args.outfile)
    for p in points:
        print(f"k={p.value}: accuracy {p.report.accuracy:.2f}")
    return 0


def _cmd_sweep_context(args) -> int:
    cfg = _load_base_config(args)
    if cfg is None or not cfg.corpus:
        raise ConfigError("sweep-context needs --config with corpus, label_map, and split")
    corpus = parse_canonical(cfg.corpus)
    if cfg.split.seasons is not None:
        corpus = filter_seasons(corpus, cfg.split.seasons)
    corpus = apply_labels(corpus, cfg.label_map.to_map())
    splits = split(corpus, cfg.split.to_spec())
    sizes = args.sizes if args.sizes else tuple(range(args.max + 1))
    activation_files = None
    if args.activations_per_context:
        activation_files = {}
        for pair in args.activations_per_context.split(","):
            ctx, _, path = pair.partition("=")
            activation_files[int(ctx)] = path
    points = evaluation.sweep_context(
        splits.train,
        splits.test,
        sizes,
        size=args.k if args.k is not None else cfg.k,
        include_speaker_tokens=cfg.include_speaker_tokens,
        membership=cfg.membership,
        norm=cfg.N,
        mode=args.mode or cfg.feature_mode,
        vocab_min_freq=cfg.vocab_min_freq,
        vocab_max_size=cfg.vocab_max_size,
        activation_files=activation_files,
    )
    evaluation.write_context_sweep_csv(points, args.outfile)
    for p in points:
        print(
            f"context={p.value}: accuracy {p.report.accuracy:.2f} "
            f"macro-F1 {p.report.macro_f1:.2f} weighted-F1 {p.report.weighted_f1:.2f}"
        )
    return 0


def _cmd_hist(args) -> int:
    results = _read_classifications(args.infile)
    lengths = {s.sample_id: s.target_length_words for s in read_samples(args.samples)}
    rows = evaluation.length_histogram(results, lengths, bin_width=args.bin_width, cap=args.cap)
    evaluation.write_histogram_csv(rows, args.outfile)
    print(f"wrote {len(rows)} histogram bins to {args.outfile}")
    return 0


def _cmd_generic(args) -> int:
    results = _read_classifications(args.infile)
    points = []
    for top_n in args.top_n:
        points.extend(evaluation.generic_curve(results, top_n, args.tau_grid))
    evaluation.write_generic_csv(points, args.outfile)
    print(f"wrote {len(points)} curve points to {args.outfile}")
    return 0


def _cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config")
    cfg = load_config(args.config)
    if args.out_dir:
        cfg = config_from_dict({**cfg.to_dict(), "output_dir": args.out_dir})
    out = runner.run(cfg)
    print(f"run complete: {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="speakerfp", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add(name, handler, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=handler)
        p.add_argument("--config", help="config file; flags override its values")
        return p

    p = add("ingest", _cmd_ingest, help="convert upstream transcripts to canonical JSONL")
    p.add_argument("--format", required=True, choices=("friends", "bbt", "canonical"))
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)

    p = add("assemble", _cmd_assemble, help="serialize context-windowed samples")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--context", type=int)
    p.add_argument("--no-speaker-tokens", action="store_true")
    p.add_argument("--preset", choices=("friends", "bbt"))
    p.add_argument("--speakers", help="comma-separated main speaker names")

    p = add("split", _cmd_split, help="partition a corpus into train/valid/test")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mode", choices=("by-season", "random"))
    p.add_argument("--valid-seasons", type=_int_list)
    p.add_argument("--test-seasons", type=_int_list)
    p.add_argument("--ratios", type=_float_triple)
    p.add_argument("--seed", type=int)
    p.add_argument("--seasons", type=_int_list, help="restrict to these seasons before splitting")

    p = add("stats", _cmd_stats, help="corpus statistics")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--preset", choices=("friends", "bbt"))
    p.add_argument("--speakers")

    p = add("build", _cmd_build, help="build a fingerprint library from training samples")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--mode", choices=("word", "activations"))
    p.add_argument("--activations")
    p.add_argument("--k", type=int)
    p.add_argument("--membership")
    p.add_argument("--N", dest="norm", type=float)
    p.add_argument("--min-freq", type=int)
    p.add_argument("--max-size", type=int)
    p.add_argument("--vocab-out")

    p = add("classify", _cmd_classify, help="classify samples against a library")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--library", required=True)
    p.add_argument("--vocab")
    p.add_argument("--mode", choices=("word", "activations"))
    p.add_argument("--activations")
    p.add_argument("--top-n", type=int)
    p.add_argument("--tau", type=float)

    p = add("eval", _cmd_eval, help="score a classification file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-dir")

    p = add("sweep-k", _cmd_sweep_k, help="accuracy across fingerprint sizes")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ks", type=_int_list, required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--mode", choices=("word", "activations"))
    p.add_argument("--activations")
    p.add_argument("--membership")
    p.add_argument("--N", dest="norm", type=float)
    p.add_argument("--min-freq", type=int)
    p.add_argument("--max-size", type=int)

    p = add("sweep-context", _cmd_sweep_context, help="metrics across context sizes")
    p.add_argument("--max", type=int, default=6)
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--mode", choices=("word", "activations"))
    p.add_argument("--activations-per-context", help="e.g. 0=ctx0.ffpa,1=ctx1.ffpa")

    p = add("hist", _cmd_hist, help="utterance-length histogram split by correctness")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--bin-width", type=int, default=1)
    p.add_argument("--cap", type=int, default=25)

    p = add("generic", _cmd_generic, help="accuracy curve as generic utterances are removed")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--top-n", type=_int_list, default=(2, 3, 4))
    p.add_argument("--tau-grid", type=_tau_grid, default=_tau_grid("0:0.05:0.001"))

    p = add("run", _cmd_run, help="end-to-end configured run")
    p.add_argument("--out-dir", help="override the config's output directory")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 2
    except SpeakerFpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - invariant violations exit 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
