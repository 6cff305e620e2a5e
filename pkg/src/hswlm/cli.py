"""Command-line front end: ``hswlm {estimate,inspect,divergence,classify,synth}``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__, _kernels
from .corpus import CorpusError, HierarchyError, filter_short_leaves
from .estimation import EstimationConfig, EstimationError, InitializationError, estimate_hswlm, initialize
from .evalkit.experiments import (SCHEMES, ClassifierSettings, class_distributions, diversity_report,
                                  kfold_eval, transfer_table, transfer_table_tsv)
from .evalkit.features import EvaluationError, features_to_tsv
from .evalkit.synth import SynthSpec, synth_corpus
from .io import dumps_models, fmt, loads_models, read_corpus, write_corpus
from .langmodel import EmptyModelError, SparseLM, top_k
from .parsimony import AllPrunedError, DegenerateBackgroundError, ParsimonyConfig

logger = logging.getLogger("hswlm")

EXIT_INPUT, EXIT_ESTIMATION, EXIT_EVALUATION = 2, 3, 4


class InputError(Exception):
    pass


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_manifest(out: Path, args, inputs, started: float) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": args.command,
        "config": config,
        "inputs": {str(p): _digest(p) for p in inputs},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "backend": _kernels.BACKEND,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2, default=str) + "\n")


def _estimation_config(args) -> EstimationConfig:
    try:
        return EstimationConfig(
            parsimony=ParsimonyConfig(lam=args.lam, em_tolerance=args.em_tol,
                                      max_em_iters=args.em_iters, prune_epsilon=args.prune),
            outer_tolerance=args.outer_tol, max_outer_iters=args.outer_iters,
            floor=args.floor, threads=args.threads)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load(hierarchy, docs, args):
    for p in (hierarchy, docs):
        if not Path(p).is_file():
            raise InputError(f"no such file: {p}")
    corpus = read_corpus(hierarchy, docs)
    corpus = filter_short_leaves(corpus, args.min_tokens)
    if args.doc_leaves:
        corpus = corpus.as_document_leaves()
    return corpus


def _periods(args) -> dict:
    """``--period NAME=HIER,DOCS`` flags, or the single --hierarchy/--docs pair."""
    specs = []
    for raw in args.period or ():
        name, sep, rest = raw.partition("=")
        paths = rest.split(",")
        if not sep or len(paths) != 2:
            raise InputError(f"--period expects NAME=HIERARCHY,DOCS, got {raw!r}")
        specs.append((name, paths[0], paths[1]))
    if args.hierarchy or args.docs:
        if not (args.hierarchy and args.docs):
            raise InputError("--hierarchy and --docs go together")
        specs.insert(0, ("train", args.hierarchy, args.docs))
    if not specs:
        raise InputError("no input corpus: pass --hierarchy/--docs or --period")
    return {name: (h, d) for name, h, d in specs}


# -- commands ------------------------------------------------------------------

def cmd_estimate(args) -> list:
    if not (args.hierarchy and args.docs):
        raise InputError("estimate needs --hierarchy and --docs")
    corpus = _load(args.hierarchy, args.docs, args)
    config = _estimation_config(args)
    models, trace = estimate_hswlm(corpus, config)
    order = corpus.hierarchy.bfs_order()
    out = Path(args.out)
    _write(out / "models.jsonl", dumps_models(models, order))
    _write(out / "mle.jsonl", dumps_models(initialize(corpus), order))
    _write(out / "trace.tsv", trace.to_tsv())
    logger.info("%d entities, %d outer iterations, converged=%s", len(order), trace.iterations, trace.converged)
    return [args.hierarchy, args.docs]


def _read_models(path) -> dict[str, SparseLM]:
    if not Path(path).is_file():
        raise InputError(f"no such file: {path}")
    try:
        return loads_models(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def inspect_table(models: dict[str, SparseLM], entities: list[str], k: int | None, curve: bool) -> str:
    for e in entities:
        if e not in models:
            raise InputError(f"unknown entity {e!r}")
    anchor = models[entities[0]]
    ranked = [t for t, _ in top_k(anchor, len(anchor) if k is None else k)]
    if curve:
        seen = set(ranked)
        rest: dict[str, float] = {}
        for e in entities[1:]:
            for t, p in models[e].items():
                if t not in seen:
                    rest[t] = max(rest.get(t, 0.0), p)
        ranked += [t for t, _ in top_k(rest, len(rest))]
    lines = ["rank\tterm\t" + "\t".join(entities)]
    for r, t in enumerate(ranked, 1):
        lines.append(f"{r}\t{t}\t" + "\t".join(fmt(models[e].prob(t)) for e in entities))
    return "\n".join(lines) + "\n"


def cmd_inspect(args) -> list:
    models = _read_models(args.models)
    entities = args.entity or list(models)[:1]
    text = inspect_table(models, entities, args.top_k, args.curve)
    if args.out:
        _write(Path(args.out) / "inspect.tsv", text)
    else:
        sys.stdout.write(text)
    return [args.models]


def cmd_divergence(args) -> list:
    out = Path(args.out)
    settings = _classifier_settings(args)
    inputs = []
    if args.models:
        stems = [Path(p).stem for p in args.models]
        unique = len(set(stems)) == len(stems)
        distributions = {}
        for i, path in enumerate(args.models):
            models = _read_models(path)
            keep = [e for e in (args.entity or models) if e in models]
            distributions[stems[i] if unique else f"{i}:{stems[i]}"] = {"model": {e: models[e] for e in keep}}
            inputs.append(path)
    else:
        distributions = {}
        for name, (h, d) in _periods(args).items():
            corpus = _load(h, d, args)
            distributions[name] = class_distributions(corpus, settings)
            inputs += [h, d]
    report = diversity_report(distributions, args.top_k or 500)
    _write(out / "divergence.tsv", report.to_tsv())
    _write(out / "pairs.tsv", report.pairs_tsv())
    return inputs


def _classifier_settings(args) -> ClassifierSettings:
    return ClassifierSettings(epochs=args.epochs, learning_rate=args.learning_rate, seed=args.seed,
                              top_n=args.top_n, label_depth=args.label_depth,
                              estimation=_estimation_config(args))


def cmd_classify(args) -> list:
    out = Path(args.out)
    settings = _classifier_settings(args)
    schemes = args.scheme or list(SCHEMES)
    paths = _periods(args)
    periods = {name: _load(h, d, args) for name, (h, d) in paths.items()}
    names = list(periods)
    if len(names) == 1:
        corpus = periods[names[0]]
        lines = ["scheme\tmacro_accuracy\t" + "\t".join(f"fold{i}" for i in range(args.folds))]
        for s in schemes:
            rep = kfold_eval(corpus, s, settings, args.folds)
            lines.append(f"{s}\t{fmt(rep.macro_accuracy * 100)}\t"
                         + "\t".join(fmt(a * 100) for a in rep.fold_accuracies))
        report = "\n".join(lines) + "\n"
    else:
        table = transfer_table(periods, schemes, settings, args.folds)
        report = transfer_table_tsv(table, names, schemes)
    _write(out / "report.tsv", report)
    for name, corpus in periods.items():
        leaves = corpus.hierarchy.leaves()
        for s in schemes:
            scheme = settings.scheme(s).fit(corpus, leaves, settings.label_depth)
            _write(out / "features" / f"{name}.{s}.tsv",
                   features_to_tsv(scheme.transform(corpus, leaves, settings.label_depth)))
    return [p for hd in paths.values() for p in hd]


def cmd_synth(args) -> list:
    try:
        spec = SynthSpec(fanouts=tuple(args.fanouts), planted_terms=args.planted,
                         general_terms=args.general, docs_per_leaf=args.docs_per_leaf,
                         doc_length=args.doc_length, proportions=tuple(args.proportions),
                         periods=args.periods, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    result = synth_corpus(spec)
    out = Path(args.out)
    for name, corpus in result.periods.items():
        write_corpus(corpus, out / name)
    planted = {e: sorted(s) for e, s in result.planted.items()}
    _write(out / "planted.json", json.dumps(planted, indent=1, sort_keys=True) + "\n")
    return []


# -- parser ----------------------------------------------------------------------

def _add_estimation_flags(p):
    g = p.add_argument_group("estimation")
    g.add_argument("--lambda", dest="lam", type=float, default=0.1,
                   help="weight of the entity-specific model in each EM mixture (default 0.1)")
    g.add_argument("--prune", type=float, default=1e-5, help="drop terms below this probability")
    g.add_argument("--em-tol", type=float, default=1e-6)
    g.add_argument("--em-iters", type=int, default=50)
    g.add_argument("--outer-tol", type=float, default=1e-4)
    g.add_argument("--outer-iters", type=int, default=10)
    g.add_argument("--floor", action="store_true",
                   help="keep the single most probable term instead of failing on fully pruned models")
    g.add_argument("--threads", type=int, default=1)


def _add_corpus_flags(p, periods=False):
    p.add_argument("--hierarchy", help="hierarchy file (nested JSON or child<TAB>parent TSV)")
    p.add_argument("--docs", help="documents, one JSON object per line")
    if periods:
        p.add_argument("--period", action="append", metavar="NAME=HIER,DOCS",
                       help="a named corpus; repeat for several periods")
    p.add_argument("--min-tokens", type=int, default=100, help="drop leaves with fewer pooled tokens")
    p.add_argument("--doc-leaves", action="store_true", help="treat every document as its own leaf")


def _add_eval_flags(p):
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--top-n", type=int, default=1000, help="IG-selected vocabulary size")
    p.add_argument("--label-depth", type=int, default=None, help="depth of the class layer (default: leaf parents)")
    p.add_argument("--folds", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hswlm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate HSWLMs for every entity")
    _add_corpus_flags(p)
    _add_estimation_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("inspect", help="sorted term tables and curve data")
    p.add_argument("--models", required=True)
    p.add_argument("--entity", action="append", help="entity to show; the first one anchors the order")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--curve", action="store_true", help="also list terms that only the other entities carry")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("divergence", help="JS divergence between models or class weightings")
    p.add_argument("--models", action="append", help="model file; repeat to compare several")
    p.add_argument("--entity", action="append")
    p.add_argument("--top-k", type=int, default=500)
    _add_corpus_flags(p, periods=True)
    _add_estimation_flags(p)
    _add_eval_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("classify", help="k-fold and cross-period classification")
    _add_corpus_flags(p, periods=True)
    _add_estimation_flags(p)
    _add_eval_flags(p)
    p.add_argument("--scheme", action="append", choices=SCHEMES)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synth", help="generate planted-vocabulary corpora")
    p.add_argument("--fanouts", type=int, nargs="+", default=[2, 3, 5])
    p.add_argument("--planted", type=int, default=20)
    p.add_argument("--general", type=int, default=100)
    p.add_argument("--docs-per-leaf", type=int, default=20)
    p.add_argument("--doc-length", type=int, default=50)
    p.add_argument("--proportions", type=float, nargs="+", default=list(SynthSpec().proportions))
    p.add_argument("--periods", type=int, default=2)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        inputs = args.func(args)
    except (InputError, HierarchyError, CorpusError, OSError, UnicodeDecodeError) as exc:
        print(f"hswlm {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EstimationError, InitializationError, AllPrunedError, DegenerateBackgroundError,
            EmptyModelError) as exc:
        print(f"hswlm {args.command}: estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except EvaluationError as exc:
        print(f"hswlm {args.command}: evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION
    if getattr(args, "out", None):
        _write_manifest(Path(args.out), args, inputs, started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
