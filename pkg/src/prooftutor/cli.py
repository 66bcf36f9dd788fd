"""Batch entry points wiring the pipeline end to end.

Artifacts live under a data directory (--data-dir or PROOFTUTOR_DATA,
default ./data): seed_traces.jsonl, networks/, model.json, reports.
Every command accepts --seed where randomness is involved and fails with a
single-line `error: ...` on stderr and a nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus import load_traces, write_traces
from .evaluate import evaluate_holdout, evaluate_kfold
from .forest import TreeParams
from .hints import next_step_hint
from .model import load_model, save_model, train
from .network import load_network, save_network
from .pipeline import build_artifacts, build_training_dataset, label_corpus
from .policy import ADAPTIVE, CONTROL, RANDOM, NetworkBundle, PolicyConfig
from .problems import default_problems
from .proof import ORDERED, UNORDERED, Problem, ProofState, load_problems, write_problems
from .rules import get_rule
from .simulator import (
    ExperimentConfig,
    HINT_HEAVY,
    ProfileDistribution,
    SEED_CORPUS,
    generate_corpus,
    run_experiment,
    seed_corpus_config,
)


def _data_dir(args) -> Path:
    root = Path(args.data_dir or os.environ.get("PROOFTUTOR_DATA", "data"))
    root.mkdir(parents=True, exist_ok=True)
    return root


def _load_problems(args) -> list[Problem]:
    if args.problems:
        return load_problems(args.problems)
    return default_problems()


def _parse_policy(text: str) -> PolicyConfig:
    if text == "adaptive":
        return PolicyConfig(kind=ADAPTIVE)
    if text == "control":
        return PolicyConfig(kind=CONTROL)
    if text.startswith("random:"):
        return PolicyConfig(kind=RANDOM, random_p=float(text.split(":", 1)[1]))
    raise ValueError(f"unknown policy {text!r} (adaptive | control | random:p)")


def _networks_dir(args, root: Path) -> Path:
    return Path(args.networks_dir) if args.networks_dir else root / "networks"


def load_network_bundle(directory: Path, problems: list[Problem]) -> NetworkBundle:
    bundle = NetworkBundle()
    for problem in problems:
        for mode, table in ((ORDERED, bundle.ordered), (UNORDERED, bundle.unordered)):
            path = directory / f"{problem.id}.{mode}.json"
            if path.exists():
                table[problem.id] = load_network(str(path))
    return bundle


def save_network_bundle(bundle: NetworkBundle, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for mode, table in ((ORDERED, bundle.ordered), (UNORDERED, bundle.unordered)):
        for problem_id in sorted(table):
            save_network(table[problem_id], str(directory / f"{problem_id}.{mode}.json"))


def cmd_write_problems(args) -> None:
    root = _data_dir(args)
    out = Path(args.out) if args.out else root / "problems.jsonl"
    write_problems(default_problems(), str(out))
    print(f"wrote {out}")


def cmd_gen_corpus(args) -> None:
    root = _data_dir(args)
    problems = _load_problems(args)
    out = Path(args.out) if args.out else root / "seed_traces.jsonl"
    profiles = {"seed": SEED_CORPUS, "hint-heavy": HINT_HEAVY, "default": ProfileDistribution()}[
        args.preset
    ]
    if args.preset == "seed":
        config = seed_corpus_config(args.n_students, args.seed, problems=problems)
    else:
        config = ExperimentConfig(
            n_students=args.n_students,
            seed=args.seed,
            problems=problems,
            profiles=profiles,
            abandon_on_cap=True,
            max_steps_factor=4,
            quit_prob=0.5,
            stuck_prob=0.35 if args.preset == "hint-heavy" else 0.15,
        )
    events = generate_corpus(config, policy=_parse_policy(args.policy))
    write_traces(events, str(out))
    print(f"wrote {len(events)} events to {out}")


def cmd_build_network(args) -> None:
    root = _data_dir(args)
    problems = _load_problems(args)
    events = load_traces(args.traces)
    artifacts = build_artifacts(events, problems)
    out_dir = _networks_dir(args, root)
    save_network_bundle(artifacts.networks, out_dir)
    print(f"wrote {2 * len(artifacts.networks.unordered)} network snapshots to {out_dir}")


def cmd_label(args) -> None:
    problems = _load_problems(args)
    events = load_traces(args.traces)
    artifacts = build_artifacts(events, problems)
    t75 = None
    if args.model:
        t75 = load_model(args.model).t75_table
    labels = label_corpus(
        events,
        problems,
        artifacts,
        key_mode=args.key_mode,
        penalty_enabled=args.penalty == "on",
        t75_table=t75,
    )
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        for label in labels:
            fh.write(
                json.dumps(
                    {
                        "student": label.student,
                        "problem": label.problem,
                        "index": label.index,
                        "behavior": label.behavior,
                        "helpneed": label.helpneed,
                        "duration": label.duration,
                        "hint_used": label.hint_used,
                        "absolute_global": label.progress.absolute_global,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    print(f"wrote {len(labels)} labeled steps to {out}")


def cmd_train(args) -> None:
    root = _data_dir(args)
    problems = _load_problems(args)
    events = load_traces(args.traces)
    artifacts = build_artifacts(events, problems)
    penalty = args.penalty == "on"
    labels = label_corpus(
        events, problems, artifacts, key_mode=args.key_mode, penalty_enabled=penalty
    )
    dataset = build_training_dataset(
        events,
        problems,
        artifacts.networks,
        labels,
        artifacts.t75_table,
        key_mode=args.key_mode,
        penalty_enabled=penalty,
    )
    from .corpus import corpus_hash

    model = train(
        dataset,
        TreeParams(n_trees=args.n_trees, seed=args.seed),
        t75_table=artifacts.t75_table,
        threshold=args.threshold,
        metadata={"seed": args.seed, "corpus_hash": corpus_hash(events),
                  "penalty": penalty, "key_mode": args.key_mode},
    )
    model_out = Path(args.model_out) if args.model_out else root / "model.json"
    save_model(model, str(model_out))
    save_network_bundle(artifacts.networks, _networks_dir(args, root))
    print(f"trained on {len(dataset)} steps; wrote {model_out}")


def _build_eval_dataset(events, problems, reference, key_mode, penalty):
    artifacts = build_artifacts(events, problems)
    labels = label_corpus(
        events, problems, artifacts, key_mode=key_mode, penalty_enabled=penalty
    )
    return build_training_dataset(
        events, problems, reference, labels, artifacts.t75_table,
        key_mode=key_mode, penalty_enabled=penalty,
    )


def cmd_evaluate(args) -> None:
    root = _data_dir(args)
    problems = _load_problems(args)
    events = load_traces(args.traces)
    penalty = args.penalty == "on"
    if args.protocol == "cv3":
        artifacts = build_artifacts(events, problems)
        dataset = _build_eval_dataset(
            events, problems, artifacts.networks, args.key_mode, penalty
        )
        report = evaluate_kfold(
            dataset, TreeParams(n_trees=args.n_trees, seed=args.seed), k=3, seed=args.seed
        )
    else:
        if not args.model or not args.test_traces:
            raise ValueError("holdout protocol needs --model and --test-traces")
        model = load_model(args.model)
        reference = load_network_bundle(_networks_dir(args, root), problems)
        test_events = load_traces(args.test_traces)
        dataset = _build_eval_dataset(test_events, problems, reference, args.key_mode, penalty)
        report = evaluate_holdout(model, dataset)
    print(report.to_table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)


def cmd_simulate(args) -> None:
    root = _data_dir(args)
    problems = _load_problems(args)
    model = load_model(args.model) if args.model else None
    networks = load_network_bundle(_networks_dir(args, root), problems)
    baseline = load_traces(args.baseline_traces) if args.baseline_traces else None
    policy = _parse_policy(args.policy)
    policy.penalty_enabled = args.penalty == "on"
    policy.key_mode = args.key_mode
    config = ExperimentConfig(
        n_students=args.n_students,
        seed=args.seed,
        problems=problems,
        adaptive_policy=policy,
    )
    if policy.kind == ADAPTIVE and model is None:
        raise ValueError("adaptive policy needs --model")
    report, events, predictions = run_experiment(
        config, model, networks, baseline_events=baseline
    )
    report_out = Path(args.report_out) if args.report_out else root / "report.json"
    with open(report_out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    tables_out = report_out.with_suffix(".txt")
    with open(tables_out, "w", encoding="utf-8") as fh:
        fh.write(report.to_tables() + "\n")
    if args.events_out:
        write_traces(events, args.events_out)
    if args.predictions_out:
        with open(args.predictions_out, "w", encoding="utf-8") as fh:
            for record in predictions:
                fh.write(json.dumps(record.to_record(), sort_keys=True) + "\n")
    print(f"wrote {report_out} and {tables_out}")


def cmd_hint(args) -> None:
    root = _data_dir(args)
    problems = _load_problems(args)
    problem = next((p for p in problems if p.id == args.problem_id), None)
    if problem is None:
        raise ValueError(f"unknown problem {args.problem_id!r}")
    networks = load_network_bundle(_networks_dir(args, root), problems)
    state = ProofState.initial(problem)
    for chunk in args.derive or []:
        rule_name, indices, statement = chunk.split("/", 2)
        from .expr import parse_expression

        idx = tuple(int(x) for x in indices.split(",")) if indices else ()
        state = state.derive(get_rule(rule_name), idx, parse_expression(statement))
    hint = next_step_hint(networks.get(problem.id, UNORDERED), state, problem)
    print(json.dumps({"hinted": hint.statement_text, "source": hint.source}, sort_keys=True))


def cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    root = _data_dir(args)
    app = create_app(
        problems=_load_problems(args),
        model_path=args.model,
        networks_dir=str(_networks_dir(args, root)),
        log_dir=str(root / "sessions"),
        policy=_parse_policy(args.policy),
        frontend_dir=args.frontend,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prooftutor")
    parser.add_argument("--data-dir", default=None, help="artifact directory (env PROOFTUTOR_DATA)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("write-problems", help="emit the shipped problem file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_write_problems)

    p = sub.add_parser("gen-corpus", help="simulate a cohort into a trace corpus")
    p.add_argument("--out")
    p.add_argument("--problems")
    p.add_argument("--n-students", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", default="random:0.15")
    p.add_argument("--preset", choices=("seed", "hint-heavy", "default"), default="seed")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("build-network", help="build and persist interaction networks")
    p.add_argument("--traces", required=True)
    p.add_argument("--problems")
    p.add_argument("--networks-dir")
    p.set_defaults(func=cmd_build_network)

    p = sub.add_parser("label", help="observed step-behavior labels for a corpus")
    p.add_argument("--traces", required=True)
    p.add_argument("--problems")
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="freeze duration thresholds from this model")
    p.add_argument("--penalty", choices=("on", "off"), default="off")
    p.add_argument("--key-mode", choices=(ORDERED, UNORDERED), default=UNORDERED)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train the two-classifier predictor")
    p.add_argument("--traces", required=True)
    p.add_argument("--problems")
    p.add_argument("--model-out")
    p.add_argument("--networks-dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--penalty", choices=("on", "off"), default="on")
    p.add_argument("--key-mode", choices=(ORDERED, UNORDERED), default=UNORDERED)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cv3 or holdout evaluation protocol")
    p.add_argument("--traces", required=True)
    p.add_argument("--problems")
    p.add_argument("--protocol", choices=("cv3", "holdout"), default="cv3")
    p.add_argument("--model")
    p.add_argument("--networks-dir")
    p.add_argument("--test-traces")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--penalty", choices=("on", "off"), default="on")
    p.add_argument("--key-mode", choices=(ORDERED, UNORDERED), default=UNORDERED)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="run the A/B experiment")
    p.add_argument("--problems")
    p.add_argument("--model")
    p.add_argument("--networks-dir")
    p.add_argument("--baseline-traces")
    p.add_argument("--n-students", type=int, default=74)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", default="adaptive")
    p.add_argument("--penalty", choices=("on", "off"), default="on")
    p.add_argument("--key-mode", choices=(ORDERED, UNORDERED), default=UNORDERED)
    p.add_argument("--report-out")
    p.add_argument("--events-out")
    p.add_argument("--predictions-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("hint", help="one-shot next-step hint for a problem state")
    p.add_argument("--problem-id", required=True)
    p.add_argument("--problems")
    p.add_argument("--networks-dir")
    p.add_argument(
        "--derive",
        action="append",
        help="replay a derivation first: rule/premise,indices/statement",
    )
    p.set_defaults(func=cmd_hint)

    p = sub.add_parser("serve", help="run the tutor HTTP service")
    p.add_argument("--problems")
    p.add_argument("--model")
    p.add_argument("--networks-dir")
    p.add_argument("--policy", default="adaptive")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--frontend", help="directory of built UI assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # single-line machine-parsable failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
