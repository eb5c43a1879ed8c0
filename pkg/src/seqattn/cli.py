"""Command-line entry point: train, eval, predict, visualize, synth.

Training runs are described by an INI-style config file whose defaults
reproduce the reference training regimes (embedding 400, recurrent 128,
fully connected 500, MLP 3x512, 10 epochs for LSTM-family models, 20 for
the MLP, vocabulary min count 5, 1000 candidate terms).  Every command is
deterministic given its config and seed.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus, evaluation, heatmap, synth, training
from .corpus import DatasetError
from .model import BagOfWordsClassifier, ModelConfig, SequenceClassifier
from .synth import SynthSpecError
from .training import CheckpointError, TrainConfig, TrainingError

TASKS = ("dialogue_act", "key_term")
MODEL_KINDS = ("mlp", "lstm", "attention")


class ConfigError(ValueError):
    """A config file field is missing, unknown, or invalid; message names it."""


class InputError(ValueError):
    """Prediction input unusable (e.g. empty after tokenization)."""


@dataclass
class RunConfig:
    task: str
    model: str
    attention: str
    context_n: int
    seed: int
    min_count: int
    candidate_k: int
    train: str
    checkpoint: str
    vocab: str
    candidates: str | None
    embed_dim: int
    hidden_dim: int
    fc_dim: int
    mlp_hidden: int
    mlp_layers: int
    training: TrainConfig


_SCHEMA = {
    "run": ("task", "model", "attention", "context_n", "seed", "min_count", "candidate_k"),
    "paths": ("train", "test", "checkpoint", "vocab", "candidates", "output"),
    "model": ("embed_dim", "hidden_dim", "fc_dim", "mlp_hidden", "mlp_layers"),
    "training": ("epochs", "batch_size", "learning_rate", "rms_decay",
                 "rms_epsilon", "gradient_clip"),
}


def _get(parser, section, key, convert, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return convert(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {convert.__name__}") from None


def load_run_config(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config field [{section}] {key}")

    task = _get(parser, "run", "task", str, None)
    if task not in TASKS:
        raise ConfigError(f"[run] task: must be one of {TASKS}, got {task!r}")
    model = _get(parser, "run", "model", str, None)
    if model not in MODEL_KINDS:
        raise ConfigError(f"[run] model: must be one of {MODEL_KINDS}, got {model!r}")
    attention = _get(parser, "run", "attention", str,
                     "smoothing" if model == "attention" else "none")
    if model == "attention":
        if attention not in ("sharpening", "smoothing"):
            raise ConfigError(
                f"[run] attention: must be sharpening or smoothing, got {attention!r}")
    elif attention != "none":
        raise ConfigError("[run] attention: only valid for model = attention")

    context_n = _get(parser, "run", "context_n", int, 0)
    if context_n < 0:
        raise ConfigError("[run] context_n: must be non-negative")
    if context_n > 0 and task != "dialogue_act":
        raise ConfigError("[run] context_n: context only applies to the dialogue_act task")
    min_count = _get(parser, "run", "min_count", int, 5)
    if min_count < 1:
        raise ConfigError("[run] min_count: must be at least 1")
    candidate_k = _get(parser, "run", "candidate_k", int, 1000)
    if candidate_k < 1:
        raise ConfigError("[run] candidate_k: must be at least 1")
    seed = _get(parser, "run", "seed", int, 0)

    train_path = _get(parser, "paths", "train", str, None)
    checkpoint = _get(parser, "paths", "checkpoint", str, None)
    vocab = _get(parser, "paths", "vocab", str, None)
    candidates = _get(parser, "paths", "candidates", str, None)
    for name, value in (("train", train_path), ("checkpoint", checkpoint), ("vocab", vocab)):
        if value is None:
            raise ConfigError(f"[paths] {name}: required")
    if task == "key_term" and candidates is None:
        raise ConfigError("[paths] candidates: required for the key_term task")

    epochs = _get(parser, "training", "epochs", int, 20 if model == "mlp" else 10)
    try:
        train_cfg = TrainConfig(
            epochs=epochs,
            batch_size=_get(parser, "training", "batch_size", int, 32),
            learning_rate=_get(parser, "training", "learning_rate", float, 1e-3),
            rms_decay=_get(parser, "training", "rms_decay", float, 0.9),
            rms_epsilon=_get(parser, "training", "rms_epsilon", float, 1e-8),
            gradient_clip=_get(parser, "training", "gradient_clip", float, 5.0),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"[training] {exc}") from None

    return RunConfig(
        task=task, model=model, attention=attention, context_n=context_n, seed=seed,
        min_count=min_count, candidate_k=candidate_k,
        train=train_path, checkpoint=checkpoint, vocab=vocab, candidates=candidates,
        embed_dim=_get(parser, "model", "embed_dim", int, 400),
        hidden_dim=_get(parser, "model", "hidden_dim", int, 128),
        fc_dim=_get(parser, "model", "fc_dim", int, 500),
        mlp_hidden=_get(parser, "model", "mlp_hidden", int, 512),
        mlp_layers=_get(parser, "model", "mlp_layers", int, 3),
        training=train_cfg,
    )


def _require_file(path, what):
    if not Path(path).is_file():
        raise ConfigError(f"{what} {path} does not exist")


def _prepare_output(path):
    parent = Path(path).parent
    if parent and not parent.exists():
        parent.mkdir(parents=True, exist_ok=True)


def _build_model(cfg, vocab_size, num_classes):
    if cfg.model == "mlp":
        return BagOfWordsClassifier(vocab_size, num_classes, hidden_dim=cfg.mlp_hidden,
                                    num_layers=cfg.mlp_layers, seed=cfg.seed)
    mode = cfg.attention if cfg.model == "attention" else "none"
    return SequenceClassifier(ModelConfig(
        vocab_size=vocab_size, num_classes=num_classes, embed_dim=cfg.embed_dim,
        hidden_dim=cfg.hidden_dim, fc_dim=cfg.fc_dim, attention=mode, seed=cfg.seed))


def cmd_train(args):
    cfg = load_run_config(args.config)
    _require_file(cfg.train, "training dataset")
    for out in (cfg.checkpoint, cfg.vocab, cfg.candidates):
        if out:
            _prepare_output(out)

    records = corpus.load_dataset(cfg.train, cfg.task)
    token_seqs = [corpus.tokenize(r.text) for r in records]
    vocab = corpus.build_vocabulary(token_seqs, cfg.min_count)

    if cfg.task == "dialogue_act":
        labels = corpus.act_labels(records)
        examples = corpus.build_dialogue_examples(records, vocab, labels, cfg.context_n)
    else:
        all_labels = [t for r in records for t in r.terms]
        candidates = corpus.select_candidates(all_labels, cfg.candidate_k)
        labels = list(candidates.terms)
        examples = corpus.build_keyterm_examples(records, vocab, candidates)
    if not examples:
        raise ConfigError(f"training dataset {cfg.train} produced no usable examples")

    model = _build_model(cfg, len(vocab), len(labels))
    history = training.train(model, examples, cfg.training, log=print)

    vocab.save(cfg.vocab)
    if cfg.task == "key_term":
        stats = evaluation.document_frequencies(token_seqs, candidates)
        with open(cfg.candidates, "w", encoding="utf-8") as fh:
            json.dump({"terms": labels, "coverage": candidates.coverage,
                       "num_docs": stats.num_docs, "doc_freq": stats.doc_freq},
                      fh, sort_keys=True)
            fh.write("\n")
    training.save_checkpoint(
        cfg.checkpoint, model, cfg.task, labels, context_n=cfg.context_n,
        metadata={"epoch": cfg.training.epochs, "loss": history[-1].mean_loss,
                  "seed": cfg.seed})
    print(f"saved checkpoint {cfg.checkpoint} "
          f"(final mean loss {history[-1].mean_loss:.6f})")
    return 0


def _load_model(args):
    _require_file(args.checkpoint, "checkpoint")
    _require_file(args.vocab, "vocabulary")
    model, descriptor, metadata = training.load_checkpoint(args.checkpoint)
    vocab = corpus.Vocabulary.load(args.vocab)
    expected = (descriptor["spec"]["vocab_size"]
                if model.kind == "sequence" else model.vocab_size)
    if len(vocab) != expected:
        raise ConfigError(
            f"vocabulary {args.vocab} has {len(vocab)} entries, "
            f"checkpoint expects {expected}")
    return model, descriptor, metadata, vocab


def _dialogue_inputs(records, vocab, labels, context_n):
    return corpus.build_dialogue_examples(records, vocab, labels, context_n)


def cmd_eval(args):
    model, descriptor, _, vocab = _load_model(args)
    task = descriptor["task"]
    labels = descriptor["labels"]
    _require_file(args.test, "test dataset")
    try:
        records = corpus.load_dataset(args.test, task)
    except DatasetError as exc:
        raise ConfigError(
            f"test dataset does not match checkpoint task {task!r}: {exc}") from None
    if not records:
        raise ConfigError(f"test dataset {args.test} is empty")

    if task == "dialogue_act":
        examples = _dialogue_inputs(records, vocab, labels, descriptor["context_n"])
        doc_ids, predictions, gold = [], [], []
        for ex in examples:
            probs = model.forward_ids(ex.token_ids).value
            doc_ids.append(ex.doc_id)
            predictions.append(labels[int(np.argmax(probs))])
            gold.append(labels[int(np.argmax(ex.target))])
        report = evaluation.accuracy_report(doc_ids, predictions, gold)
    else:
        candidates = corpus.CandidateSet(labels, coverage=None)
        rankings, judgments, token_docs = [], [], []
        for rec in records:
            ids, tokens = corpus.keyterm_tokens(rec, vocab)
            token_docs.append(tokens)
            probs = model.forward_ids(ids).value
            rankings.append(evaluation.predict_ranking(probs, rec.doc_id))
            judgments.append(evaluation.build_judgment(rec.doc_id, rec.terms, candidates))
        report = evaluation.keyterm_report(rankings, judgments)
        if args.oracle:
            oracle = [evaluation.oracle_ranking(j, len(candidates)) for j in judgments]
            report["oracle"] = {
                "map": evaluation.mean_average_precision(oracle, judgments),
                "p_at_r": float(np.mean(
                    [evaluation.precision_at_r(r, j) for r, j in zip(oracle, judgments)])),
            }
        if args.tfidf:
            if not args.candidates:
                raise ConfigError("--tfidf needs --candidates (for document frequencies)")
            _require_file(args.candidates, "candidates file")
            with open(args.candidates, encoding="utf-8") as fh:
                cand_payload = json.load(fh)
            stats = evaluation.CorpusStatistics(
                cand_payload["num_docs"], cand_payload["doc_freq"])
            tfidf = [evaluation.tfidf_rank(tokens, candidates, stats, rec.doc_id)
                     for tokens, rec in zip(token_docs, records)]
            report["tfidf"] = {
                "map": evaluation.mean_average_precision(tfidf, judgments),
                "p_at_r": float(np.mean(
                    [evaluation.precision_at_r(r, j) for r, j in zip(tfidf, judgments)])),
            }

    text = json.dumps(report, indent=2)
    if args.output:
        _prepare_output(args.output)
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _predict_one(model, descriptor, vocab, line, top_k, want_trace):
    task = descriptor["task"]
    labels = descriptor["labels"]
    tokens = corpus.tokenize(line)
    if not tokens:
        raise InputError("input is empty after tokenization")
    if task == "dialogue_act":
        tokens = corpus.attach_context([tokens], 0, descriptor["context_n"])
    ids = corpus.truncate_front(vocab.encode(tokens))
    tokens = tokens[-len(ids):]

    trace = None
    if model.kind == "sequence":
        probs_node, trace = model.forward(ids)
    else:
        probs_node = model.forward_ids(ids)
    probs = probs_node.value

    if task == "dialogue_act":
        best = int(np.argmax(probs))
        result = {"input": line, "predicted_act": labels[best],
                  "probability": float(probs[best])}
    else:
        ranking = evaluation.predict_ranking(probs)
        k = min(top_k, len(labels))
        result = {"input": line,
                  "terms": [{"term": labels[i], "score": float(probs[i])}
                            for i in ranking.order[:k]]}
    if want_trace:
        if trace is None:
            raise InputError("checkpoint has no attention weights to trace")
        result["trace"] = {"tokens": tokens, "weights": trace.weights.tolist()}
    return result


def cmd_predict(args):
    model, descriptor, _, vocab = _load_model(args)
    if args.text is not None:
        lines = [args.text]
    elif args.input:
        _require_file(args.input, "input file")
        lines = [ln for ln in Path(args.input).read_text(encoding="utf-8").splitlines()
                 if ln.strip()]
    else:
        raise ConfigError("predict needs --text or --input")
    for line in lines:
        result = _predict_one(model, descriptor, vocab, line, args.top_k, args.trace)
        print(json.dumps(result))
    return 0


def cmd_visualize(args):
    model, descriptor, _, vocab = _load_model(args)
    if model.kind != "sequence" or model.config.attention == "none":
        raise ConfigError("checkpoint was trained without attention; nothing to render")
    task = descriptor["task"]
    labels = descriptor["labels"]
    _require_file(args.input, "input dataset")
    records = corpus.load_dataset(args.input, task)[:args.max_examples]

    reports = []
    if task == "dialogue_act":
        examples = _dialogue_inputs(records, vocab, labels, descriptor["context_n"])
        for ex in examples[:args.max_examples]:
            probs_node, trace = model.forward(ex.token_ids)
            predicted = [labels[int(np.argmax(probs_node.value))]]
            gold = [labels[int(np.argmax(ex.target))]]
            reports.append(heatmap.HeatmapReport(
                ex.tokens, trace.weights, predicted, gold, doc_id=ex.doc_id))
    else:
        for rec in records:
            ids, tokens = corpus.keyterm_tokens(rec, vocab)
            probs_node, trace = model.forward(ids)
            ranking = evaluation.predict_ranking(probs_node.value)
            k = max(1, min(len(rec.terms), len(labels)))
            predicted = [labels[i] for i in ranking.order[:k]]
            reports.append(heatmap.HeatmapReport(
                tokens, trace.weights, predicted, sorted(rec.terms), doc_id=rec.doc_id))

    _prepare_output(args.output)
    Path(args.output).write_text(heatmap.render_html(reports), encoding="utf-8")
    print(f"wrote {args.output} ({len(reports)} examples)")
    return 0


def cmd_synth(args):
    spec = synth.SynthSpec(
        num_classes=args.classes, cues_per_class=args.cues_per_class,
        noise_vocab=args.noise_vocab, length_min=args.length_min,
        length_max=args.length_max, examples_per_class=args.per_class,
        seed=args.seed, cue_min=args.cue_min, cue_max=args.cue_max,
        terms_min=args.terms_min, terms_max=args.terms_max,
        turns_per_conversation=args.turns_per_conv)
    if not args.out_dialogue and not args.out_terms:
        raise ConfigError("synth needs --out-dialogue and/or --out-terms")
    if args.out_dialogue:
        _prepare_output(args.out_dialogue)
        synth.write_jsonl(synth.generate_dialogue(spec), args.out_dialogue)
        print(f"wrote {args.out_dialogue}")
    if args.out_terms:
        _prepare_output(args.out_terms)
        synth.write_jsonl(synth.generate_keyterms(spec), args.out_terms)
        print(f"wrote {args.out_terms}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="seqattn",
        description="Train and evaluate attention-based sequence classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True, help="INI config path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--test", required=True, help="JSONL dataset to score")
    p.add_argument("--candidates", help="candidates file (needed for --tfidf)")
    p.add_argument("--oracle", action="store_true", help="also report the oracle ranking")
    p.add_argument("--tfidf", action="store_true", help="also report tf-idf sorting")
    p.add_argument("--output", help="write the metrics JSON here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify raw text with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--text", help="a single input to classify")
    p.add_argument("--input", help="file with one input per line")
    p.add_argument("--trace", action="store_true", help="emit attention weights")
    p.add_argument("--top-k", type=int, default=6, help="ranked terms to return")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("visualize", help="render attention heat-maps to HTML")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--input", required=True, help="JSONL dataset with gold labels")
    p.add_argument("--output", required=True, help="HTML file to write")
    p.add_argument("--max-examples", type=int, default=50)
    p.set_defaults(func=cmd_visualize)

    p = sub.add_parser("synth", help="generate synthetic cue-word corpora")
    p.add_argument("--out-dialogue", help="dialogue-act style JSONL output")
    p.add_argument("--out-terms", help="key-term style JSONL output")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--cues-per-class", type=int, default=3)
    p.add_argument("--noise-vocab", type=int, default=200)
    p.add_argument("--length-min", type=int, default=40)
    p.add_argument("--length-max", type=int, default=40)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--cue-min", type=int, default=1)
    p.add_argument("--cue-max", type=int, default=3)
    p.add_argument("--terms-min", type=int, default=2)
    p.add_argument("--terms-max", type=int, default=4)
    p.add_argument("--turns-per-conv", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError, DatasetError, CheckpointError,
            SynthSpecError, TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
