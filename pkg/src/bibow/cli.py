"""Command-line interface wiring corpus -> trainer -> classifier.

Subcommands: vocab, synth, train, classify, nn, export, project. Option
precedence is command-line flags over a `key=value` config file over built-in
defaults; commands that produce an output directory echo the options they ran
with into `effective_config.txt` there. `--seed` derives the init, shuffle,
and tree seeds unless those are set individually.
"""

from __future__ import annotations

import argparse
import os
import sys

from bibow import classifier, corpus, kernels, model as model_mod, synth, trainer

# defaults per subcommand; argparse options start as None so a config file can
# fill anything the user did not type
DEFAULTS = {
    "vocab": {
        "min_count": 1,
        "max_size": 0,          # 0 means unlimited
        "lowercase": True,
    },
    "synth": {
        "vocab_size": 60,
        "topics": 4,
        "pairs": 2000,
        "docs": 800,
        "sent_len_min": 5,
        "sent_len_max": 15,
        "doc_len_min": 30,
        "doc_len_max": 80,
        "seed": 2024,
        "perm_seed": 99,
    },
    "train": {
        "min_count": 1,
        "max_size": 0,
        "lowercase": True,
        "dim": 16,
        "learning_rate": 0.02,
        "epochs_max": 50,
        "patience": 5,
        "validation_fraction": 0.05,
        "eval_every": 1000,
        "task_weights": "1,1,1,1",
        "h": "tanh",
        "init_scale": 0.05,
        "seed": 1234,
        "init_seed": -1,        # -1 means derive from --seed
        "shuffle_seed": -1,
        "tree_seed_x": -1,
        "tree_seed_y": -1,
    },
    "classify": {
        "train_lang": "x",
        "mode": "auto",
        "c_grid": "0.01,0.1,1,10",
        "train_fraction": 0.7,
        "valid_fraction": 0.15,
        "split_seed": 7,
        "svm_epochs": 50,
        "svm_seed": 11,
        "lowercase": True,
    },
    "nn": {"k": 5},
    "project": {"top_n": 50},
}


class CommandError(Exception):
    pass


def _read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CommandError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _coerce(raw: str, like):
    if isinstance(like, bool):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise CommandError(f"cannot parse boolean from {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def resolve_options(args, command: str) -> dict:
    """defaults < config file < explicitly passed flags"""
    merged = dict(DEFAULTS.get(command, {}))
    config_path = getattr(args, "config", None)
    if config_path:
        for key, raw in _read_config_file(config_path).items():
            if key not in merged:
                raise CommandError(f"unknown config key {key!r} for command {command!r}")
            merged[key] = _coerce(raw, merged[key])
    for key in merged:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            merged[key] = cli_value
    return merged


def _write_effective_config(out_dir, command, opts):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective_config.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"command={command}\n")
        for key in sorted(opts):
            fh.write(f"{key}={opts[key]}\n")


def _parse_floats(raw, expected=None, flag=""):
    try:
        values = tuple(float(v) for v in str(raw).split(","))
    except ValueError:
        raise CommandError(f"{flag}: cannot parse {raw!r} as comma-separated reals")
    if expected is not None and len(values) != expected:
        raise CommandError(f"{flag}: expected {expected} comma-separated reals")
    return values


def _require_files(*paths):
    for path in paths:
        if path is not None and not os.path.exists(path):
            raise CommandError(f"no such file: {path}")


# --- subcommands -----------------------------------------------------------


def cmd_vocab(args):
    opts = resolve_options(args, "vocab")
    _require_files(args.input)
    lines = corpus.read_token_lines(args.input, lowercase=opts["lowercase"])
    vocab = corpus.build_vocab(
        lines, min_count=opts["min_count"],
        max_size=opts["max_size"] or None,
    )
    vocab.save(args.out)
    print(f"wrote {vocab.size} words to {args.out}")
    return 0


def cmd_synth(args):
    opts = resolve_options(args, "synth")
    cfg = synth.SynthConfig(
        vocab_size=opts["vocab_size"],
        topics=opts["topics"],
        n_pairs=opts["pairs"],
        n_docs=opts["docs"],
        sent_len=(opts["sent_len_min"], opts["sent_len_max"]),
        doc_len=(opts["doc_len_min"], opts["doc_len_max"]),
        seed=opts["seed"],
        perm_seed=opts["perm_seed"],
    )
    paths = synth.write(synth.generate(cfg), args.out_dir)
    _write_effective_config(args.out_dir, "synth", opts)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def _derived_seeds(opts):
    base = opts["seed"]
    derive = lambda key, offset: opts[key] if opts[key] >= 0 else base + offset
    return (derive("init_seed", 0), derive("shuffle_seed", 1),
            derive("tree_seed_x", 2), derive("tree_seed_y", 3))


def cmd_train(args):
    opts = resolve_options(args, "train")
    _require_files(args.source, args.target, args.vocab_x, args.vocab_y)
    os.makedirs(args.out_dir, exist_ok=True)

    if args.vocab_x:
        vocab_x = corpus.Vocabulary.load(args.vocab_x)
    else:
        vocab_x = corpus.build_vocab(
            corpus.read_token_lines(args.source, lowercase=opts["lowercase"]),
            min_count=opts["min_count"], max_size=opts["max_size"] or None,
        )
    if args.vocab_y:
        vocab_y = corpus.Vocabulary.load(args.vocab_y)
    else:
        vocab_y = corpus.build_vocab(
            corpus.read_token_lines(args.target, lowercase=opts["lowercase"]),
            min_count=opts["min_count"], max_size=opts["max_size"] or None,
        )
    pairs = corpus.load_parallel(args.source, args.target, vocab_x, vocab_y,
                                 lowercase=opts["lowercase"])

    init_seed, shuffle_seed, tree_seed_x, tree_seed_y = _derived_seeds(opts)
    config = trainer.TrainConfig(
        dim=opts["dim"],
        learning_rate=opts["learning_rate"],
        epochs_max=opts["epochs_max"],
        patience=opts["patience"],
        validation_fraction=opts["validation_fraction"],
        shuffle_seed=shuffle_seed,
        init_seed=init_seed,
        tree_seed_x=tree_seed_x,
        tree_seed_y=tree_seed_y,
        task_weights=_parse_floats(opts["task_weights"], 4, "--task-weights"),
        eval_every=opts["eval_every"],
        h=opts["h"],
        init_scale=opts["init_scale"],
    )

    ckpt_dir = os.path.join(args.out_dir, "checkpoints")
    log_path = os.path.join(args.out_dir, "train_log.tsv")
    model, report = trainer.train(pairs, vocab_x, vocab_y, config,
                                  checkpoint_dir=ckpt_dir, log_path=log_path)

    model.save(os.path.join(args.out_dir, "model.npz"))
    vocab_x.save(os.path.join(args.out_dir, "vocab_x.txt"))
    vocab_y.save(os.path.join(args.out_dir, "vocab_y.txt"))
    with open(os.path.join(args.out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"kernel_backend={kernels.BACKEND}\n")
        fh.write(f"pairs={len(pairs)}\n")
        fh.write(f"stopped_reason={report.stopped_reason}\n")
        fh.write(f"evaluations={len(report.evaluations)}\n")
        if report.best_validation_loss is not None:
            fh.write(f"initial_validation_loss={report.initial_validation_loss:.10g}\n")
            fh.write(f"best_validation_loss={report.best_validation_loss:.10g}\n")
            fh.write(f"best_pairs_seen={report.best_pairs_seen}\n")
            fh.write(f"final_validation_loss={report.final_validation_loss:.10g}\n")
    _write_effective_config(args.out_dir, "train", opts)
    best = report.best_validation_loss
    print(f"model written to {os.path.join(args.out_dir, 'model.npz')}"
          + (f" (best validation loss {best:.6g})" if best is not None else ""))
    return 0


def cmd_classify(args):
    opts = resolve_options(args, "classify")
    _require_files(args.model, args.docs_x, args.docs_y)
    os.makedirs(args.out_dir, exist_ok=True)
    model = model_mod.BilingualModel.load(args.model)

    raw_x = corpus.read_labeled_docs(args.docs_x, lowercase=opts["lowercase"])
    raw_y = corpus.read_labeled_docs(args.docs_y, lowercase=opts["lowercase"])
    train_lang = opts["train_lang"]
    train_raw, test_raw = (raw_x, raw_y) if train_lang == "x" else (raw_y, raw_x)

    result = classifier.crosslingual_pipeline(
        model, train_raw, test_raw,
        train_language=train_lang,
        C_grid=_parse_floats(opts["c_grid"], flag="--c-grid"),
        mode=opts["mode"],
        train_fraction=opts["train_fraction"],
        valid_fraction=opts["valid_fraction"],
        split_seed=opts["split_seed"],
        svm_epochs=opts["svm_epochs"],
        svm_seed=opts["svm_seed"],
    )

    extra = {
        "train_language": train_lang,
        "mode": result.mode,
        "C": result.C,
        "valid_error": f"{result.valid_error:.6f}",
    }
    report_path = os.path.join(args.out_dir, "report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(f"train language: {train_lang}, mode: {result.mode}, C: {result.C}\n")
        fh.write(f"validation error ({train_lang}): {result.valid_error:.4f}\n\n")
        fh.write(classifier.format_report(result.evaluation, result.label_names))
    with open(os.path.join(args.out_dir, "report.kv"), "w", encoding="utf-8") as fh:
        fh.write(classifier.report_keyvalues(result.evaluation, result.label_names, extra))
    _write_effective_config(args.out_dir, "classify", opts)
    print(f"test error ({'y' if train_lang == 'x' else 'x'}): {result.test_error:.4f} "
          f"(mode {result.mode}, C {result.C}); report in {report_path}")
    return 0


def cmd_nn(args):
    opts = resolve_options(args, "nn")
    _require_files(args.model)
    model = model_mod.BilingualModel.load(args.model)
    neighbors = classifier.nearest_neighbors(
        args.word, args.source_lang, args.target_lang, opts["k"], model,
    )
    print(f"{args.word} ({args.source_lang} -> {args.target_lang}):")
    for rank, (token, sim) in enumerate(neighbors, 1):
        print(f"{rank:3d}  {token}  {sim:.6f}")
    return 0


def cmd_export(args):
    _require_files(args.model)
    if not args.out_x and not args.out_y:
        raise CommandError("give at least one of --out-x / --out-y")
    model = model_mod.BilingualModel.load(args.model)
    if args.out_x:
        model_mod.export_embeddings(args.out_x, model.vocab_x, model.W_x)
        print(f"wrote {model.vocab_x.size} x-embeddings to {args.out_x}")
    if args.out_y:
        model_mod.export_embeddings(args.out_y, model.vocab_y, model.W_y)
        print(f"wrote {model.vocab_y.size} y-embeddings to {args.out_y}")
    return 0


def cmd_project(args):
    opts = resolve_options(args, "project")
    _require_files(args.model)
    model = model_mod.BilingualModel.load(args.model)
    points = classifier.project_2d(model, opts["top_n"])
    with open(args.out, "w", encoding="utf-8") as fh:
        for token, lang, px, py in points:
            fh.write(f"{token}\t{lang}\t{px:.10g}\t{py:.10g}\n")
    print(f"wrote {len(points)} projected points to {args.out}")
    return 0


# --- parser ------------------------------------------------------------------


def _annotate_defaults(parser, command):
    """Append `(default ...)` to any option backed by the DEFAULTS table."""
    defaults = DEFAULTS.get(command, {})
    for action in parser._actions:
        if action.dest in defaults and "default" not in (action.help or ""):
            suffix = f"(default {defaults[action.dest]})"
            action.help = f"{action.help} {suffix}" if action.help else suffix


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bibow",
        description="Bilingual bag-of-words embeddings and cross-lingual classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="key=value config file (flags override it)")

    p = sub.add_parser("vocab", help="build a vocabulary file from a token corpus")
    add_config(p)
    p.add_argument("--input", required=True, help="one whitespace-tokenized sentence per line")
    p.add_argument("--out", required=True, help="output vocabulary file")
    p.add_argument("--min-count", type=int, dest="min_count", help="frequency cutoff")
    p.add_argument("--max-size", type=int, dest="max_size",
                   help="keep at most this many words; default 0 means unlimited")
    p.add_argument("--no-lowercase", action="store_const", const=False, dest="lowercase",
                   help="keep original casing (lowercasing is on by default)")
    _annotate_defaults(p, "vocab")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("synth", help="generate a synthetic bilingual corpus with known truth")
    add_config(p)
    p.add_argument("--out-dir", required=True, dest="out_dir", help="output directory")
    p.add_argument("--vocab-size", type=int, dest="vocab_size", help="words per language")
    p.add_argument("--topics", type=int, help="topic/label count")
    p.add_argument("--pairs", type=int, help="parallel sentence pairs")
    p.add_argument("--docs", type=int, help="labeled documents per language")
    p.add_argument("--sent-len-min", type=int, dest="sent_len_min", help="shortest sentence")
    p.add_argument("--sent-len-max", type=int, dest="sent_len_max", help="longest sentence")
    p.add_argument("--doc-len-min", type=int, dest="doc_len_min", help="shortest document")
    p.add_argument("--doc-len-max", type=int, dest="doc_len_max", help="longest document")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--perm-seed", type=int, dest="perm_seed",
                   help="seed of the x->y word renaming")
    _annotate_defaults(p, "synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train bilingual embeddings on a parallel corpus")
    add_config(p)
    p.add_argument("--source", required=True, help="language X sentences, one per line")
    p.add_argument("--target", required=True, help="language Y sentences, line-aligned with --source")
    p.add_argument("--out-dir", required=True, dest="out_dir", help="output directory")
    p.add_argument("--vocab-x", dest="vocab_x", help="use this vocabulary file instead of building one")
    p.add_argument("--vocab-y", dest="vocab_y", help="use this vocabulary file instead of building one")
    p.add_argument("--min-count", type=int, dest="min_count", help="frequency cutoff")
    p.add_argument("--max-size", type=int, dest="max_size",
                   help="keep at most this many words; default 0 means unlimited")
    p.add_argument("--no-lowercase", action="store_const", const=False, dest="lowercase",
                   help="keep original casing (lowercasing is on by default)")
    p.add_argument("--dim", type=int, help="embedding dimension")
    p.add_argument("--learning-rate", type=float, dest="learning_rate", help="SGD step size")
    p.add_argument("--epochs-max", type=int, dest="epochs_max", help="maximum epochs")
    p.add_argument("--patience", type=int, help="evaluations without improvement before stopping")
    p.add_argument("--validation-fraction", type=float, dest="validation_fraction",
                   help="tail fraction of pairs held out")
    p.add_argument("--eval-every", type=int, dest="eval_every",
                   help="pairs between validation evaluations")
    p.add_argument("--task-weights", dest="task_weights",
                   help="four comma-separated weights for x>x,y>y,x>y,y>x")
    p.add_argument("--h", choices=["tanh", "identity"], help="hidden nonlinearity")
    p.add_argument("--init-scale", type=float, dest="init_scale",
                   help="uniform embedding init half-width")
    p.add_argument("--seed", type=int, help="base seed; derives the four seeds below")
    p.add_argument("--init-seed", type=int, dest="init_seed",
                   help="embedding init seed (default: derived from --seed)")
    p.add_argument("--shuffle-seed", type=int, dest="shuffle_seed",
                   help="epoch shuffling seed (default: derived from --seed)")
    p.add_argument("--tree-seed-x", type=int, dest="tree_seed_x",
                   help="language X tree seed (default: derived from --seed)")
    p.add_argument("--tree-seed-y", type=int, dest="tree_seed_y",
                   help="language Y tree seed (default: derived from --seed)")
    _annotate_defaults(p, "train")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="cross-lingual document classification")
    add_config(p)
    p.add_argument("--model", required=True, help="model checkpoint from `train`")
    p.add_argument("--docs-x", required=True, dest="docs_x", help="labeled documents, language X")
    p.add_argument("--docs-y", required=True, dest="docs_y", help="labeled documents, language Y")
    p.add_argument("--out-dir", required=True, dest="out_dir", help="output directory")
    p.add_argument("--train-lang", choices=["x", "y"], dest="train_lang",
                   help="language to train the SVM on; the other is tested (default x)")
    p.add_argument("--mode", choices=["auto", "tfidf", "binary"],
                   help="document weighting; auto picks by validation error (default auto)")
    p.add_argument("--c-grid", dest="c_grid", help="comma-separated C values")
    p.add_argument("--train-fraction", type=float, dest="train_fraction", help="training split")
    p.add_argument("--valid-fraction", type=float, dest="valid_fraction",
                   help="validation split; the remainder is the test split")
    p.add_argument("--split-seed", type=int, dest="split_seed", help="document split seed")
    p.add_argument("--svm-epochs", type=int, dest="svm_epochs", help="subgradient epochs")
    p.add_argument("--svm-seed", type=int, dest="svm_seed", help="SVM shuffling seed")
    p.add_argument("--no-lowercase", action="store_const", const=False, dest="lowercase",
                   help="keep original casing (lowercasing is on by default)")
    _annotate_defaults(p, "classify")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("nn", help="nearest neighbors of a word across or within languages")
    add_config(p)
    p.add_argument("--model", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--source-lang", choices=["x", "y"], required=True, dest="source_lang")
    p.add_argument("--target-lang", choices=["x", "y"], required=True, dest="target_lang")
    p.add_argument("-k", type=int, help="neighbors to print")
    _annotate_defaults(p, "nn")
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("export", help="write embedding matrices as text")
    p.add_argument("--model", required=True)
    p.add_argument("--out-x", dest="out_x", help="output file for language X embeddings")
    p.add_argument("--out-y", dest="out_y", help="output file for language Y embeddings")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("project", help="2-D PCA projection of frequent words of both languages")
    add_config(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output: token<TAB>lang<TAB>x<TAB>y")
    p.add_argument("--top-n", type=int, dest="top_n", help="words per language")
    _annotate_defaults(p, "project")
    p.set_defaults(func=cmd_project)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CommandError, OSError, ValueError, KeyError, trainer.TrainingDivergedError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
