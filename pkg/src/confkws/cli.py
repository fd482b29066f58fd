"""Command-line pipeline: lexicon | groups | synth | features | train | eval
| bench | report.

Every command is deterministic given --seed. Exit codes: 0 success, 2 usage,
3 data/validation, 4 external-service failure. Commands that own an output
directory take a lock file there for the duration of the run.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import confusable, corpus, dsp, lexicon, metrics, sampler, synth, training
from .embedder import embed_fn, init_params, load_model, quantize_dynamic, save_model
from .errors import DataError, TransportError

logger = logging.getLogger(__name__)

LOCK_NAME = ".confkws.lock"


@contextlib.contextmanager
def output_dir_lock(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise DataError(
            f"output directory {out_dir} is locked by another run "
            f"(remove {lock} if that run is dead)"
        ) from None
    try:
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            lock.unlink()


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` config; '#' starts a comment."""
    out: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path} line {line_no}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _frontend_config(args) -> dsp.FrontendConfig:
    return dsp.FrontendConfig(
        sample_rate=args.sample_rate,
        frame_ms=args.frame_ms,
        hop_ms=args.hop_ms,
        n_mels=args.n_mels,
        f_lo=args.f_lo,
        f_hi=args.f_hi,
    )


def _add_frontend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--frame-ms", type=float, default=25.0)
    p.add_argument("--hop-ms", type=float, default=10.0)
    p.add_argument("--n-mels", type=int, default=40)
    p.add_argument("--f-lo", type=float, default=125.0)
    p.add_argument("--f-hi", type=float, default=7500.0)


def _provider(manifest_path: Path, cache_dir: Path, cfg: dsp.FrontendConfig):
    m = corpus.load_manifest(manifest_path)
    cache = dsp.FeatureCache(cache_dir, cfg)
    return m, dsp.ManifestFeatureProvider(m, manifest_path.parent, cache)


# --- subcommands -----------------------------------------------------------


def cmd_lexicon(args) -> int:
    lex = lexicon.parse_lexicon(args.dict)
    inv = (
        lexicon.VowelInventory.with_overrides(args.mapping)
        if args.mapping
        else lexicon.VowelInventory()
    )
    vowel_words = sum(1 for w in lex.entries if lex.phones_of(w).vowel_phones())
    print(f"entries: {len(lex)}")
    print(f"words with at least one vowel: {vowel_words}")
    for word in args.word or []:
        if word not in lex:
            print(f"{word}: NOT IN LEXICON")
            continue
        sounds = lexicon.vowels_of(lex, inv, word)
        rendered = " ".join(f"{s.label}({s.stress.name.lower()})" for s in sounds) or "-"
        print(f"{word}: {rendered}")
    return 0


def cmd_groups(args) -> int:
    chosen = [bool(args.speech_commands), bool(args.offline), bool(args.llm_url or args.llm_stub_dir)]
    if sum(chosen) != 1:
        raise UsageError("pick exactly one of --speech-commands, --offline, --llm-url/--llm-stub-dir")

    if args.speech_commands:
        groups = confusable.speech_commands_groups()
    elif args.offline:
        if not args.lexicon:
            raise UsageError("--offline needs --lexicon")
        lex = lexicon.parse_lexicon(args.lexicon)
        inv = lexicon.VowelInventory()
        cfg = confusable.GroupingConfig(
            merges=() if args.no_merges else confusable.DEFAULT_MERGES,
            min_group_size=args.min_size,
            assignment=args.assignment,
        )
        groups = confusable.generate_groups_offline(
            lex, inv, cfg, max_words=args.max_words, seed=args.seed
        )
        report = confusable.validate_groups(groups, lex, inv)
        for label, issues in sorted(report.items()):
            logger.warning("group %s flagged members: %s", label, issues)
    else:
        template = confusable.PromptTemplate(words_per_group=args.words_per_group)
        if args.llm_stub_dir:
            client = confusable.FileLlmClient(args.llm_stub_dir)
        else:
            client = confusable.LlmClient(args.llm_url, timeout_s=args.timeout, retries=args.retries)
        groups = confusable.generate_groups_llm(client, template)
        if args.lexicon:
            lex = lexicon.parse_lexicon(args.lexicon)
            report = confusable.validate_groups(groups, lex, lexicon.VowelInventory())
            for label, issues in sorted(report.items()):
                logger.warning("group %s flagged members: %s", label, issues)

    groups = confusable.prune_groups(groups, args.min_size)
    confusable.save_groups(groups, args.out)
    print(f"wrote {len(groups)} group(s) to {args.out}")
    return 0


def cmd_synth(args) -> int:
    groups = confusable.load_groups(args.groups)
    grid = synth.StyleGrid(
        n_speakers=args.speakers,
        utterances_per_keyword=args.per_keyword,
    )
    jobs = synth.build_synth_manifest(groups, grid, seed=args.seed)
    lex = lexicon.parse_lexicon(args.lexicon) if args.lexicon else None
    client = synth.TtsClient(args.tts_url) if args.tts_url else None
    if args.tts_stub_dir:
        client = synth.FileTtsClient(args.tts_stub_dir)
    out_dir = Path(args.out_dir)
    with output_dir_lock(out_dir):
        records = synth.run_synthesis(jobs, out_dir, lex=lex, client=client, sample_rate=args.sample_rate)
        manifest = corpus.Manifest(records, source_name="synth")
        corpus.save_manifest(manifest, out_dir / "manifest.jsonl")
    print(f"synthesized {len(records)} utterance(s) into {out_dir}")
    return 0


def cmd_features(args) -> int:
    cfg = _frontend_config(args)
    manifest_path = Path(args.manifest)
    m, provider = _provider(manifest_path, Path(args.cache_dir), cfg)
    n = 0
    for rec in m.records:
        provider(rec.id)
        n += 1
    print(f"cached features for {n} utterance(s) under {provider.cache.root}")
    return 0


def _apply_train_config(args) -> None:
    if not args.config:
        return
    cfg = read_config_file(args.config)
    mapping = {
        "batch.x": ("batch_x", int),
        "batch.y": ("batch_y", int),
        "mix.p_tts": ("p_tts", float),
        "sampler.kind": ("sampler", str),
        "sampler.max_dist": ("max_dist", int),
        "seed": ("seed", int),
        "steps": ("steps", int),
        "lr": ("lr", float),
    }
    for key, raw in cfg.items():
        if key not in mapping:
            raise DataError(f"unknown config key {key!r}")
        dest, cast = mapping[key]
        if getattr(args, dest) is None:
            try:
                setattr(args, dest, cast(raw))
            except ValueError as exc:
                raise DataError(f"config key {key}: {exc}") from exc


_TRAIN_DEFAULTS = {
    "batch_x": 8,
    "batch_y": 10,
    "p_tts": 0.5,
    "sampler": "mixed",
    "max_dist": 2,
    "seed": 0,
    "steps": 200,
    "lr": 0.1,
}


def cmd_train(args) -> int:
    _apply_train_config(args)
    for dest, default in _TRAIN_DEFAULTS.items():
        if getattr(args, dest) is None:
            setattr(args, dest, default)

    cfg = _frontend_config(args)
    out_dir = Path(args.out_dir)
    cache_dir = Path(args.cache_dir) if args.cache_dir else out_dir / "feature_cache"

    real = tts = None
    provider_by_id = {}
    if args.real:
        real, real_provider = _provider(Path(args.real), cache_dir, cfg)
        provider_by_id[id(real)] = real_provider
    if args.tts:
        tts, tts_provider = _provider(Path(args.tts), cache_dir, cfg)
        provider_by_id[id(tts)] = tts_provider
    groups = confusable.load_groups(args.groups) if args.groups else None

    providers = list(provider_by_id.values())

    def features(utt_id: str):
        for p in providers:
            if utt_id in p.manifest.by_id:
                return p(utt_id)
        raise DataError(f"utterance {utt_id} not found in any manifest")

    spec = sampler.BatchSpec(x=args.batch_x, y=args.batch_y)
    smp = sampler.make_sampler(
        args.sampler,
        real=real,
        tts=tts,
        groups=groups,
        spec=spec,
        mix=sampler.MixConfig(p_tts=args.p_tts),
        max_dist=args.max_dist,
        seed=args.seed,
    )
    tcfg = training.TrainConfig(
        steps=args.steps,
        learning_rate=args.lr,
        seed=args.seed,
        dim_d=cfg.n_mels,
        dim_h=args.dim_h,
        dim_e=args.dim_e,
    )
    with output_dir_lock(out_dir):
        result = training.run_training(smp, features, tcfg, log_path=out_dir / "train_log.csv")
        model_path = out_dir / "model.bin"
        save_model(result.params, model_path)
        if args.quantize:
            save_model(quantize_dynamic(result.params), out_dir / "model.int8.bin")
    last = result.losses[-1] if result.losses else float("nan")
    print(f"trained {args.steps} step(s); final loss {last:.4f}; model at {model_path}")
    return 0


def cmd_eval(args) -> int:
    cfg = _frontend_config(args)
    out_dir = Path(args.out_dir)
    cache_dir = Path(args.cache_dir) if args.cache_dir else out_dir / "feature_cache"
    model = load_model(args.model)
    embed = embed_fn(model)
    manifest_path = Path(args.manifest)

    with output_dir_lock(out_dir):
        if args.mode == "sc":
            m, features = _provider(manifest_path, cache_dir, cfg)
            split = corpus.make_eval_split(m, enroll_k=args.enroll, seed=args.seed)
            groups = confusable.load_groups(args.groups) if args.groups else None
            report, scorer = metrics.evaluate_split(
                embed, features, split, groups=groups,
                aggregate="pooled" if args.pooled else "macro",
            )
            pooled = metrics.det_curve(scorer.pooled_scores())
            metrics.export_det(pooled, out_dir / "det_overall.csv")
            metrics.write_report(report, out_dir / "report.json")
            if not args.no_figures:
                from . import plots

                plots.plot_det({"overall": pooled}, out_dir / "det_overall.png")
                if report.groups:
                    plots.plot_group_aucs({"eval": report}, out_dir / "group_auc.png")
            overall = report.overall
            print(
                f"eer={overall['eer']:.4f} auc={overall['auc']:.4f}"
                + (f" c_auc={report.c_auc:.4f}" if report.c_auc is not None else "")
            )
        else:  # pairs
            if not args.pairs:
                raise UsageError("eval pairs needs --pairs")
            m = corpus.load_manifest(manifest_path)
            if args.duration:
                lo, hi = (float(v) for v in args.duration.split(":"))
                m = corpus.filter_by_duration(m, lo, hi)
            cache = dsp.FeatureCache(cache_dir, cfg)
            features = dsp.ManifestFeatureProvider(m, manifest_path.parent, cache)
            pairs = corpus.load_pairs(args.pairs)
            known = set(m.by_id)
            pairs = [p for p in pairs if p.a in known and p.b in known]
            if not pairs:
                raise DataError("no pairs left after the duration filter")
            easy, hard = metrics.pair_auc(embed, features, pairs)
            report = metrics.MetricsReport(easy_auc=easy, hard_auc=hard)
            metrics.write_report(report, out_dir / "report.json")
            print(f"easy_auc={easy} hard_auc={hard}")
    return 0


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes:
        raise UsageError("--sizes needs at least one integer")
    rows = sampler.bench_samplers(
        sizes,
        spec=sampler.BatchSpec(x=args.batch_x, y=args.batch_y),
        max_dist=args.max_dist,
        seed=args.seed,
        group_batches=args.group_batches,
        levenshtein_batches=args.levenshtein_batches,
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vocab_size", "sampler", "mean_batch_s"])
        for row in rows:
            writer.writerow([row.vocab_size, row.sampler, repr(row.mean_batch_s)])
    for row in rows:
        print(f"|V|={row.vocab_size:>8} {row.sampler:<12} {row.mean_batch_s * 1e3:10.4f} ms/batch")
    return 0


def cmd_report(args) -> int:
    from . import plots

    eval_dirs = [Path(d) for d in args.eval_dir]
    labels = args.labels.split(",") if args.labels else [d.name for d in eval_dirs]
    if len(labels) != len(eval_dirs):
        raise UsageError("--labels must match the number of eval dirs")
    out_dir = Path(args.out_dir) if args.out_dir else eval_dirs[0]
    out_dir.mkdir(parents=True, exist_ok=True)

    curves: dict[str, metrics.DetCurve] = {}
    reports: dict[str, metrics.MetricsReport] = {}
    for label, d in zip(labels, eval_dirs):
        det_path = d / "det_overall.csv"
        rep_path = d / "report.json"
        if det_path.exists():
            curves[label] = metrics.load_det(det_path)
        if rep_path.exists():
            reports[label] = metrics.load_report(rep_path)
    if not curves and not reports:
        raise DataError(f"no det_overall.csv or report.json found under {args.eval_dir}")

    written = []
    if curves:
        written.append(plots.plot_det(curves, out_dir / "det_compare.png"))
        written.append(plots.plot_det_zoom(curves, out_dir / "det_compare_zoom.png"))
    if any(r.groups for r in reports.values()):
        written.append(plots.plot_group_aucs(reports, out_dir / "group_auc_compare.png"))
    log = args.train_log
    if log:
        with open(log, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        written.append(plots.plot_training_log(rows, out_dir / "train_loss.png"))
    for p in written:
        print(f"wrote {p}")
    return 0


# --- argument parsing -------------------------------------------------------


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confkws", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lexicon", help="parse a pronunciation dictionary and show vowel content")
    p.add_argument("--dict", required=True)
    p.add_argument("--mapping", help="JSON file overriding the ARPAbet->IPA table")
    p.add_argument("--word", action="append", help="word(s) to look up")
    p.set_defaults(func=cmd_lexicon)

    p = sub.add_parser("groups", help="build vowel-based confusable keyword groups")
    p.add_argument("--speech-commands", action="store_true")
    p.add_argument("--offline", action="store_true")
    p.add_argument("--llm-url")
    p.add_argument("--llm-stub-dir")
    p.add_argument("--lexicon")
    p.add_argument("--out", required=True)
    p.add_argument("--min-size", type=int, default=3)
    p.add_argument("--max-words", type=int, default=100)
    p.add_argument("--words-per-group", type=int, default=100)
    p.add_argument("--assignment", choices=("stressed_vowel", "any_vowel"), default="stressed_vowel")
    p.add_argument("--no-merges", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--retries", type=int, default=2)
    p.set_defaults(func=cmd_groups)

    p = sub.add_parser("synth", help="synthesize utterances for every group keyword")
    p.add_argument("--groups", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--per-keyword", type=int, default=100)
    p.add_argument("--speakers", type=int, default=726)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--lexicon")
    p.add_argument("--tts-url")
    p.add_argument("--tts-stub-dir")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract and cache log-mel features for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--cache-dir", required=True)
    _add_frontend_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the embedder with a batch sampler")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--real")
    p.add_argument("--tts")
    p.add_argument("--groups")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--sampler", choices=("random", "group", "mixed", "levenshtein"), default=None)
    p.add_argument("--p-tts", dest="p_tts", type=float, default=None)
    p.add_argument("--mix.p_tts", dest="p_tts", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--batch.x", dest="batch_x", type=int, default=None)
    p.add_argument("--batch.y", dest="batch_y", type=int, default=None)
    p.add_argument("--sampler.max_dist", dest="max_dist", type=int, default=None)
    p.add_argument("--max-dist", dest="max_dist", type=int, default=None)
    p.add_argument("--dim-h", type=int, default=64)
    p.add_argument("--dim-e", type=int, default=64)
    p.add_argument("--quantize", action="store_true", help="also write an int8 model")
    p.add_argument("--cache-dir")
    _add_frontend_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model: enrollment splits or pair files")
    p.add_argument("mode", choices=("sc", "pairs"))
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--groups")
    p.add_argument("--enroll", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pooled", action="store_true", help="pool scores instead of macro-averaging")
    p.add_argument("--pairs")
    p.add_argument("--duration", help="LO:HI duration filter in seconds, e.g. 0.9:1.1")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--cache-dir")
    _add_frontend_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time the group sampler against the Levenshtein baseline")
    p.add_argument("--sizes", default="1000,100000")
    p.add_argument("--out", required=True)
    p.add_argument("--batch.x", dest="batch_x", type=int, default=8)
    p.add_argument("--batch.y", dest="batch_y", type=int, default=2)
    p.add_argument("--max-dist", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--group-batches", type=int, default=2000)
    p.add_argument("--levenshtein-batches", type=int, default=5)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render figures from evaluation outputs")
    p.add_argument("eval_dir", nargs="+")
    p.add_argument("--labels")
    p.add_argument("--out-dir")
    p.add_argument("--train-log")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"external service error: {exc}", file=sys.stderr)
        return 4
    except (DataError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
