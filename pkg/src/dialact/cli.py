"""Command-line surface: train, evaluate, predict, track, keywords, generate.

Exit statuses: 0 success, 1 runtime failure, 2 usage or validation error.
Every subcommand is deterministic given its arguments (seeds included).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluator as eval_mod
from . import ngram as ngram_mod
from . import planner as plan_mod
from .evaluator import DEFAULT_SEED

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _require_files(*paths: str) -> None:
    for path in paths:
        if path is not None and not Path(path).is_file():
            raise FileNotFoundError(f"file not found: {path}")


def _load_recognizer(args) -> plan_mod.PlanRecognizer:
    model = ngram_mod.load_model(args.model)
    compatibility = None
    if args.compat:
        compatibility = plan_mod.load_compatibility(args.compat, model.inventory)
    grammar = plan_mod.load_grammar(args.grammar, model.inventory, compatibility)
    return plan_mod.PlanRecognizer(
        grammar,
        model.inventory,
        model,
        raw_frequency_bridging=getattr(args, "raw_frequency_bridging", False),
        trace=True,
    )


def _pick_dialogue(loaded: corpus_mod.Corpus, dialogue_id: str | None):
    if dialogue_id is None:
        return loaded.dialogues[0]
    for dialogue in loaded.dialogues:
        if dialogue.id == dialogue_id:
            return dialogue
    raise ValueError(f"no dialogue with id {dialogue_id!r}")


def cmd_train(args) -> int:
    _require_files(args.inventory, args.corpus)
    inventory = corpus_mod.load_inventory(args.inventory)
    full = corpus_mod.load_corpus(args.corpus, inventory)
    counting, held_out = corpus_mod.split_corpus(
        full, args.held_out_fraction, args.seed
    )
    model = ngram_mod.train_model(
        counting, held_out=held_out, speaker_conditioned=args.speaker_conditioned
    )
    ngram_mod.save_model(model, args.model)
    w = model.weights
    print(
        f"dialogues: {full.n_dialogues}  utterances: {full.n_utterances}  "
        f"acts: {full.n_acts}"
    )
    print(f"held-out dialogues: {held_out.n_dialogues}")
    print(f"weights: unigram={w.unigram:.6f} bigram={w.bigram:.6f} trigram={w.trigram:.6f}")
    print(f"model written to {args.model}")
    return 0


def cmd_evaluate(args) -> int:
    _require_files(args.inventory, args.train, args.test)
    ks = tuple(int(k) for k in args.ks.split(","))
    config = eval_mod.ExperimentConfig(
        inventory_path=args.inventory,
        train_path=args.train,
        test_path=args.test,
        ks=ks,
        held_out_fraction=args.held_out_fraction,
        seed=args.seed,
        variants=(
            eval_mod.VariantSpec(
                label=args.label,
                skip_deviation_acts=args.skip_deviation_acts,
                speaker_conditioned=args.speaker_conditioned,
            ),
        ),
    )
    reports = eval_mod.run_experiment(config)
    for report in reports:
        print(report.table(), end="")
    if args.report:
        eval_mod.write_reports(reports, args.report)
        print(f"records written to {args.report}")
    if args.per_dialogue_report:
        inventory = corpus_mod.load_inventory(args.inventory)
        train = corpus_mod.load_corpus(args.train, inventory)
        test = corpus_mod.load_corpus(args.test, inventory)
        counting, held_out = corpus_mod.split_corpus(
            train, args.held_out_fraction, args.seed
        )
        model = ngram_mod.train_model(
            counting, held_out=held_out, speaker_conditioned=args.speaker_conditioned
        )
        per = eval_mod.per_dialogue_hit_rates(
            model, test, max(ks), args.skip_deviation_acts, label=args.label
        )
        Path(args.per_dialogue_report).write_text(per.records(), encoding="utf-8")
        print(f"per-dialogue records written to {args.per_dialogue_report}")
    return 0


def cmd_predict(args) -> int:
    _require_files(args.model)
    model = ngram_mod.load_model(args.model)
    history = []
    if args.context:
        names = [n.strip() for n in args.context.split(",") if n.strip()]
        acts = [model.inventory.get(name) for name in names]
        if model.speaker_conditioned:
            speakers = None
            if args.speakers:
                speakers = [s.strip() for s in args.speakers.split(",")]
                if len(speakers) != len(acts):
                    raise ValueError("--speakers must list one speaker per context act")
            for i, act in enumerate(acts):
                changed = (
                    speakers is not None and i > 0 and speakers[i] != speakers[i - 1]
                )
                history.append((changed, act))
        else:
            history = acts
    for act, prob in model.predict_top_k(history, args.k):
        print(f"{act.name}\t{prob:.6f}")
    return 0


def cmd_track(args) -> int:
    _require_files(args.model, args.grammar, args.corpus, args.compat)
    recognizer = _load_recognizer(args)
    loaded = corpus_mod.load_corpus(args.corpus, recognizer.inventory)
    dialogue = _pick_dialogue(loaded, args.dialogue)
    recognizer.recognize(dialogue)
    for line in recognizer.trace_lines:
        print(line)
    if args.tree:
        print(recognizer.tree.render())
    return 0


def cmd_keywords(args) -> int:
    _require_files(args.model, args.grammar, args.lexicon, args.corpus, args.compat)
    recognizer = _load_recognizer(args)
    lexicon = plan_mod.load_lexicon(args.lexicon, recognizer.inventory)
    loaded = corpus_mod.load_corpus(args.corpus, recognizer.inventory)
    dialogue = _pick_dialogue(loaded, args.dialogue)
    recognizer.recognize(dialogue)
    for act, words in recognizer.keywords_for_next(lexicon, args.k, args.budget):
        print(f"{act.name}: {', '.join(words)}")
    return 0


def cmd_generate(args) -> int:
    _require_files(args.model)
    model = ngram_mod.load_model(args.model)
    generated = ngram_mod.sample_corpus(
        model,
        args.n_dialogues,
        deviation_rate=args.deviation_rate,
        seed=args.seed,
        id_prefix=args.id_prefix,
    )
    corpus_mod.save_corpus(generated, args.out)
    print(
        f"wrote {generated.n_dialogues} dialogues "
        f"({generated.n_acts} acts) to {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialact",
        description="Statistical dialogue-act prediction and plan recognition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write it to a file")
    p.add_argument("--inventory", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--held-out-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--speaker-conditioned", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="train per config and report hit rates")
    p.add_argument("--inventory", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ks", default="1,2,3", help="comma-separated prediction depths")
    p.add_argument("--label", default="eval")
    p.add_argument("--skip-deviation-acts", action="store_true")
    p.add_argument("--speaker-conditioned", action="store_true")
    p.add_argument("--held-out-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--report", help="write tab-separated records here")
    p.add_argument("--per-dialogue-report", help="write per-dialogue records here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="print the top-k follow-up acts")
    p.add_argument("--model", required=True)
    p.add_argument("--context", default="", help="comma-separated context acts")
    p.add_argument("--speakers", default="", help="comma-separated context speakers")
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("track", help="trace plan recognition over a dialogue")
    p.add_argument("--model", required=True)
    p.add_argument("--grammar", required=True)
    p.add_argument("--compat")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dialogue", help="dialogue id (default: first)")
    p.add_argument("--raw-frequency-bridging", action="store_true")
    p.add_argument("--tree", action="store_true", help="also print the dialogue tree")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("keywords", help="keywords for the predicted follow-up acts")
    p.add_argument("--model", required=True)
    p.add_argument("--grammar", required=True)
    p.add_argument("--compat")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--dialogue", help="dialogue id (default: first)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--budget", type=int, default=30)
    p.set_defaults(func=cmd_keywords)

    p = sub.add_parser("generate", help="sample a synthetic corpus from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-dialogues", type=int, required=True)
    p.add_argument("--deviation-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--id-prefix", default="gen")
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        FileNotFoundError,
        corpus_mod.FormatError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ngram_mod.EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
