"""Command line interface.

Exit codes: 0 success, 1 domain error (bad input data, unreachable scorer,
and similar), 2 usage error. A synthesis run that exhausts its budget is a
result, not an error.
"""
from __future__ import annotations

import argparse
import json
import random
import sys

from ..corpus import (
    canonical_dumps,
    load_corpus,
    load_specification,
)
from ..errors import RuleforgeError
from ..evalkit import (
    NO_RELATION,
    baseline_predict,
    fewshot_predict,
    format_intrinsic_table,
    intrinsic_eval,
    load_background,
    load_episodes,
    micro_f1,
)
from ..matcher import find_matches
from ..pattern import parse_pattern, print_pattern
from ..scoring import (
    AugmentedStaticScorer,
    ContextualScorer,
    ScorerModel,
    StaticScorer,
    TrainConfig,
    train_contextual,
)
from ..search import SearchConfig, synthesize
from ..selfsup import (
    GenConfig,
    export_training,
    gen_dataset,
    load_items,
    read_training_file,
    save_items,
)
from .config import cost_table, load_config
from .remote import RemoteScorer

SCORER_CHOICES = ("static", "augmented", "contextual", "remote")


def build_scorer(name: str, config: dict, model_path=None, endpoint=None):
    costs = cost_table(config)
    if name == "static":
        return StaticScorer(costs)
    if name == "augmented":
        return AugmentedStaticScorer(costs, reward_weight=config["lambda"])
    if name == "contextual":
        if model_path is None:
            raise RuleforgeError("the contextual scorer needs --model")
        return ContextualScorer(ScorerModel.load(model_path))
    if name == "remote":
        if endpoint is None:
            raise RuleforgeError("the remote scorer needs --endpoint")
        return RemoteScorer(endpoint)
    raise RuleforgeError(f"unknown scorer '{name}'")


def search_config(config: dict, args, **overrides) -> SearchConfig:
    budget = getattr(args, "max_states", None) or getattr(args, "budget", None) or config["budget"]
    return SearchConfig(max_states=budget, costs=cost_table(config), **overrides)


def _load_cli_config(args) -> dict:
    config = load_config(getattr(args, "config", None))
    costs_path = getattr(args, "costs", None)
    if costs_path:
        with open(costs_path, encoding="utf-8") as fh:
            payload = json.load(fh)
        config["costs"].update(payload.get("costs", payload))
    return config


def cmd_synth(args) -> int:
    config = _load_cli_config(args)
    corpus = load_corpus(args.corpus) if args.corpus else None
    spec = load_specification(args.spec, corpus)
    scorer = build_scorer(args.scorer, config, args.model, args.endpoint)

    trace_fh = open(args.trace, "w", encoding="utf-8") if args.trace else None
    hook = None
    if trace_fh is not None:
        def hook(step, state, score):
            trace_fh.write(canonical_dumps({"step": step, "state": state, "score": score}) + "\n")

    try:
        report = synthesize(spec, scorer, search_config(config, args, record_trace=bool(hook)), trace_hook=hook)
    finally:
        if trace_fh is not None:
            trace_fh.close()

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(report.to_json()) + "\n")
    if report.found:
        print(print_pattern(report.rule))
    else:
        print(f"no rule found within {report.states_explored} states", file=sys.stderr)
    return 0


def cmd_match(args) -> int:
    corpus = load_corpus(args.corpus)
    rule = parse_pattern(args.rule)
    if args.sentence:
        corpus = [s for s in corpus if s.id == args.sentence]
        if not corpus:
            raise RuleforgeError(f"no sentence with id '{args.sentence}'")
    for sentence in corpus:
        for span in find_matches(rule, sentence):
            text = " ".join(sentence.words[span.start:span.end])
            print(f"{sentence.id}\t{span.start}\t{span.end}\t{text}")
    return 0


def cmd_gen_data(args) -> int:
    config = _load_cli_config(args)
    corpus = load_corpus(args.corpus)
    gen = GenConfig(
        span_max_len=args.span_max_len or config["spanMaxLen"],
        spec_k=args.spec_k or config["specK"],
        alternation_p=config["altP"] if args.alt_p is None else args.alt_p,
        quantifier_p=config["quantP"] if args.quant_p is None else args.quant_p,
        costs=cost_table(config),
    )
    items = gen_dataset(corpus, args.n, args.seed, gen)
    save_items(items, args.out, seed=args.seed)
    print(f"wrote {len(items)} items to {args.out}", file=sys.stderr)
    if args.train_out:
        neg_cap = config["negCap"] if args.neg_cap is None else args.neg_cap
        count = export_training(items, args.train_out, neg_cap=neg_cap, seed=args.seed)
        print(f"wrote {count} training examples to {args.train_out}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    config = _load_cli_config(args)
    examples = read_training_file(args.data)
    if not examples:
        raise RuleforgeError(f"no training examples in {args.data}")
    train_config = TrainConfig(
        dim=args.dim or config["dim"],
        seed=args.seed if args.seed is not None else config["seed"],
        lr_low=args.lr_low or config["lrLow"],
        lr_high=args.lr_high or config["lrHigh"],
        lr_scale=args.lr_scale or config["lrScale"],
    )
    model = train_contextual(examples, train_config)
    model.save(args.out)
    print(f"trained on {len(examples)} examples -> {args.out}", file=sys.stderr)
    return 0


def cmd_eval_intrinsic(args) -> int:
    config = _load_cli_config(args)
    items = load_items(args.items, costs=cost_table(config))
    scorer = build_scorer(args.scorer, config, args.model, args.endpoint)
    report = intrinsic_eval(items, scorer, search_config(config, args))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(report.to_json()) + "\n")
    print(format_intrinsic_table({args.scorer: report}))
    return 0


def cmd_eval_fewshot(args) -> int:
    config = _load_cli_config(args)
    episodes = load_episodes(args.episodes)
    golds = [q.gold for episode in episodes for q in episode.queries]
    targets = sorted({g for g in golds if g != NO_RELATION})

    if args.baseline:
        background = load_background(args.background) if args.background else []
        rng = random.Random(args.seed)
        predictions = [
            label
            for episode in episodes
            for _, label in baseline_predict(episode, background, rng)
        ]
        mode = "baseline"
    else:
        scorer = build_scorer(args.scorer, config, args.model, args.endpoint)
        search = search_config(config, args)
        predictions = [
            label
            for episode in episodes
            for _, label in fewshot_predict(
                episode, args.mode, scorer, search, negative_supports=args.negative_supports
            )
        ]
        mode = f"{args.scorer}/{args.mode}"

    score = micro_f1(predictions, golds, targets)
    payload = {
        "mode": mode,
        "episodes": len(episodes),
        "queries": len(golds),
        "microF1": score,
    }
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(payload) + "\n")
    print(f"micro-F1 {score:.4f} over {len(golds)} queries in {len(episodes)} episodes")
    return 0


def cmd_serve(args) -> int:
    from .service import run_server

    config = _load_cli_config(args)
    corpus = load_corpus(args.corpus)
    model = ScorerModel.load(args.model) if args.model else None
    run_server(args.port, corpus, model, config, static_dir=args.static)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ruleforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scorer=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--costs", help="JSON cost-table override file")
        if scorer:
            p.add_argument("--scorer", choices=SCORER_CHOICES, default="augmented")
            p.add_argument("--model", help="scorer model file (contextual)")
            p.add_argument("--endpoint", help="remote scorer URL")

    p = sub.add_parser("synth", help="synthesize a rule for a specification")
    p.add_argument("--spec", required=True)
    p.add_argument("--corpus", help="corpus file for specs that use sentence refs")
    p.add_argument("--max-states", type=int, dest="max_states")
    p.add_argument("--trace", help="write line-delimited trace events here")
    p.add_argument("--out", help="write the search report here")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("match", help="run a rule over a corpus")
    p.add_argument("--rule", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--sentence", help="restrict to one sentence id")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("gen-data", help="generate rule/spec/derivation items")
    p.add_argument("--corpus", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="items file")
    p.add_argument("--train-out", help="also export flattened training examples")
    p.add_argument("--alt-p", type=float, default=None)
    p.add_argument("--quant-p", type=float, default=None)
    p.add_argument("--spec-k", type=int, default=None)
    p.add_argument("--span-max-len", type=int, default=None)
    p.add_argument("--neg-cap", type=int, default=None, help="negatives kept per derivation step")
    common(p, scorer=False)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the contextual scorer")
    p.add_argument("--data", required=True, help="training examples file")
    p.add_argument("--out", required=True, help="model output file")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lr-low", type=float, default=None)
    p.add_argument("--lr-high", type=float, default=None)
    p.add_argument("--lr-scale", type=float, default=None)
    common(p, scorer=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-intrinsic", help="re-synthesize held-out items")
    p.add_argument("--items", required=True)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--report", help="write the JSON report here")
    common(p)
    p.set_defaults(func=cmd_eval_intrinsic)

    p = sub.add_parser("eval-fewshot", help="episode-based relation extraction")
    p.add_argument("--episodes", required=True)
    p.add_argument("--mode", choices=("surface", "path"), default="surface")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--report")
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--background", help="background sentences for the baseline")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negative-supports", action="store_true")
    common(p)
    p.set_defaults(func=cmd_eval_fewshot)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model")
    p.add_argument("--static", help="directory of UI assets to serve at /")
    common(p, scorer=False)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RuleforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
