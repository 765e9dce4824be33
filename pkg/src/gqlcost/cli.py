"""Command-line entry point.

Every artifact written through ``--out`` is produced atomically and gets a
sibling ``<out>.manifest.json`` recording the subcommand, flags, seed, input
hashes and tool version.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cost import CostConfig, static_bound
from .dataset import GeneratorConfig, dump_jsonl, generate_synthetic, label_records, load_jsonl
from .errors import DatasetError, GqlCostError
from .evaluation import compare
from .features import Featurizer, GraphFeatureParams
from .pipeline import DEFAULT_BUDGET, StackedModel, estimate, train_stacked
from .query import TypedField, load_typed_query
from .schema import Schema, parse_schema
from .simulator import (DEFAULT_MULTIPLIERS, SimConfig, SimCorpus, default_thresholds,
                        rank_correlation, robustness_csv, robustness_sweep, sweep_csv,
                        threshold_sweep)

log = logging.getLogger("gqlcost")

EPILOG = """environment:
  GQLCOST_LOG          log level (debug, info, warning, error); default warning
  GQLCOST_DISABLE_JIT  set to 1 to run the numpy kernels instead of numba

exit status: 0 ok, 1 domain error, 2 I/O error, 3 usage error"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class _Run:
    """Collects inputs and outputs so a manifest can be written next to them."""

    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.extra: dict = {}

    def read_text(self, path: str) -> str:
        if path == "-":
            text = sys.stdin.read()
        else:
            text = Path(path).read_text(encoding="utf-8")
        self.inputs[path] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return text

    def track(self, path: str) -> str:
        self.inputs[path] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        return path

    def manifest(self) -> dict:
        flags = {k: v for k, v in sorted(vars(self.args).items())
                 if k not in ("handler", "command")}
        return {
            "subcommand": self.args.command,
            "flags": flags,
            "seed": self.args.seed,
            "inputs": dict(sorted(self.inputs.items())),
            "tool_version": __version__,
            **self.extra,
        }


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(run: _Run, outputs: dict[str, str]) -> None:
    """Write ``{suffix: text}`` artifacts under ``--out`` or print the main one."""
    out = run.args.out
    if out is None:
        sys.stdout.write(outputs[""])
        return
    base = Path(out)
    written = []
    try:
        for suffix, text in outputs.items():
            target = base if not suffix else base.with_name(base.name + suffix)
            _atomic_write(target, text)
            written.append(target)
        manifest = json.dumps(run.manifest(), sort_keys=True, indent=2) + "\n"
        _atomic_write(base.with_name(base.name + ".manifest.json"), manifest)
    except BaseException:
        for target in written:
            target.unlink(missing_ok=True)
        raise


def _number(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def _schema(run: _Run) -> Schema:
    if run.args.schema is None:
        raise UsageError("--schema is required")
    return parse_schema(run.read_text(run.args.schema))


def _config(run: _Run) -> CostConfig:
    if run.args.config is None:
        return CostConfig.uniform()
    run.track(run.args.config)
    return CostConfig.load(run.args.config)


def _model(run: _Run, schema: Schema, config: CostConfig) -> StackedModel:
    path = run.args.model
    if not Path(path).is_file():
        raise FileNotFoundError(f"model file {path!r} does not exist")
    run.track(path)
    model = StackedModel.load(path)
    if run.args.force:
        try:
            model.check_compatible(schema, config)
        except GqlCostError as exc:
            log.warning("%s (continuing because of --force)", exc)
    else:
        model.check_compatible(schema, config)
    return model


def _labeled(run: _Run, path: str, schema, config):
    run.track(path)
    records, errors = label_records(load_jsonl(path), schema, config)
    for err in errors:
        log.warning("record %d skipped: %s: %s", err.index, err.code, err.message)
    if not records:
        raise DatasetError(f"{path}: no record could be labelled")
    return records


def _ast_json(tf: TypedField) -> dict:
    node = {"field": tf.key, "returns": str(tf.returns)}
    if tf.node.args:
        node["args"] = {k: v if isinstance(v, (int, str, bool)) else str(v)
                        for k, v in tf.node.args}
    if tf.children:
        node["selection"] = [_ast_json(c) for c in tf.children]
    return node


def cmd_parse(run: _Run) -> int:
    schema = _schema(run)
    tq = load_typed_query(run.read_text(run.args.query), schema)
    doc = {"operation": "query", "root": tq.root_type,
           "selection": [_ast_json(f) for f in tq.fields]}
    _emit(run, {"": json.dumps(doc, indent=2) + "\n"})
    return 0


def cmd_static(run: _Run) -> int:
    schema, config = _schema(run), _config(run)
    config.check(schema)
    tq = load_typed_query(run.read_text(run.args.query), schema)
    _emit(run, {"": _number(static_bound(tq, schema, config)) + "\n"})
    return 0


def cmd_label(run: _Run) -> int:
    schema, config = _schema(run), _config(run)
    config.check(schema)
    run.track(run.args.corpus)
    records, errors = label_records(load_jsonl(run.args.corpus), schema, config)
    for err in errors:
        print(f"record {err.index}: {err.code}: {err.message}", file=sys.stderr)
    run.extra["label_errors"] = [{"index": e.index, "code": e.code} for e in errors]
    _emit(run, {"": dump_jsonl(records)})
    return 0


def cmd_generate(run: _Run) -> int:
    a = run.args
    schema, config = _schema(run), _config(run)
    config.check(schema)
    gen = GeneratorConfig(a.max_depth, a.max_fields, tuple(a.limit_range), a.fill, a.seed)
    _emit(run, {"": dump_jsonl(generate_synthetic(schema, config, gen, a.n))})
    return 0


def _graph_params(a) -> GraphFeatureParams:
    return GraphFeatureParams(a.graph_dim, a.wl_iterations, a.hash_seed)


def cmd_featurize(run: _Run) -> int:
    if run.args.out is None:
        raise UsageError("featurize needs --out (three CSV files are written)")
    schema, config = _schema(run), _config(run)
    run.track(run.args.corpus)
    tqs = [load_typed_query(r.query_text, schema) for r in load_jsonl(run.args.corpus)]
    mats = Featurizer.build(schema, config, _graph_params(run.args)).transform(tqs)
    _emit(run, {"": mats["summary"].to_csv(), ".field.csv": mats["field"].to_csv(),
                ".graph.csv": mats["graph"].to_csv()})
    return 0


def cmd_train(run: _Run) -> int:
    a = run.args
    if a.out is None:
        raise UsageError("train needs --out for the model file")
    schema, config = _schema(run), _config(run)
    config.check(schema)
    records = _labeled(run, a.corpus, schema, config)
    tqs = [load_typed_query(r.query_text, schema) for r in records]
    feat = Featurizer.build(schema, config, _graph_params(a))
    mats = feat.transform(tqs)
    y = np.array([float(r.label) for r in records])
    provenance = {"schema_hash": schema.fingerprint(), "config_hash": config.fingerprint(),
                  "corpus_hash": run.inputs[a.corpus], "n_records": len(records),
                  "tool_version": __version__}
    model = train_stacked({k: m.values for k, m in mats.items()}, y, a.budget, a.seed,
                          field_space=feat.space, graph_params=feat.graph_params,
                          provenance=provenance, k=a.folds)
    _emit(run, {"": model.dumps()})
    return 0


def cmd_predict(run: _Run) -> int:
    schema, config = _schema(run), _config(run)
    model = _model(run, schema, config)
    value = estimate(model, run.read_text(run.args.query), schema, config)
    _emit(run, {"": _number(value) + "\n"})
    return 0


def cmd_evaluate(run: _Run) -> int:
    schema, config = _schema(run), _config(run)
    model = _model(run, schema, config)
    cmp_ = compare(_labeled(run, run.args.corpus, schema, config), model, schema, config)
    report = json.dumps(cmp_.to_dict(), sort_keys=True, indent=2) + "\n"
    _emit(run, {"": report, ".csv": cmp_.to_csv()} if run.args.out else {"": report})
    return 0


def _floats(text: str) -> list[float]:
    try:
        return [float(Fraction(t)) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_simulate(run: _Run) -> int:
    a = run.args
    schema, config = _schema(run), _config(run)
    model = _model(run, schema, config)
    corpus = SimCorpus.from_comparison(
        compare(_labeled(run, a.corpus, schema, config), model, schema, config))
    thresholds = _floats(a.thresholds) if a.thresholds else default_thresholds(corpus.labels)
    base = SimConfig(thresholds[0], a.n_sims, a.sample_size, a.seed)
    rows = threshold_sweep(corpus, thresholds, base)
    run.extra["thresholds"] = thresholds
    _emit(run, {"": sweep_csv(rows)})
    return 0


def cmd_robustness(run: _Run) -> int:
    a = run.args
    schema, config = _schema(run), _config(run)
    model = _model(run, schema, config)
    if a.record.endswith(".jsonl"):
        run.track(a.record)
        records = load_jsonl(a.record)
        if not 0 <= a.index < len(records):
            raise DatasetError(f"{a.record}: no record at index {a.index}")
        text = records[a.index].query_text
    else:
        text = run.read_text(a.record)
    multipliers = _floats(a.multipliers) if a.multipliers else list(DEFAULT_MULTIPLIERS)
    points = robustness_sweep(model, text, schema, config, multipliers)
    run.extra["spearman"] = rank_correlation(points)
    _emit(run, {"": robustness_csv(points)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gqlcost", description="GraphQL query cost analysis and estimation.",
                     epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"gqlcost {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--schema", help="schema SDL file")
    common.add_argument("--config", help="cost config JSON (default: scalars 0, objects 1)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", help="output path; stdout when omitted")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_,
                           epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(handler=handler)
        return p

    def model_args(p):
        p.add_argument("--model", required=True, help="trained model JSON")
        p.add_argument("--force", action="store_true",
                       help="use the model even if it was trained for another schema/config")

    def graph_args(p):
        p.add_argument("--graph-dim", type=int, default=64, help="graph feature buckets")
        p.add_argument("--wl-iterations", type=int, default=3, help="WL refinement rounds")
        p.add_argument("--hash-seed", type=int, default=0, help="bucket hash key")

    add("parse", cmd_parse, "print the validated query tree as JSON").add_argument(
        "query", help="query file ('-' for stdin)")
    add("static", cmd_static, "print the static upper bound of a query").add_argument(
        "query", help="query file ('-' for stdin)")
    add("label", cmd_label, "attach labels and static bounds to a JSONL corpus").add_argument(
        "corpus")

    p = add("generate", cmd_generate, "write a synthetic labelled corpus")
    p.add_argument("--n", type=int, default=1000, help="number of records")
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--max-fields", type=int, default=3, help="max fields per selection set")
    p.add_argument("--limit-range", type=int, nargs=2, default=(1, 10), metavar=("LO", "HI"))
    p.add_argument("--fill", choices=("uniform", "full"), default="uniform",
                   help="list lengths: uniform in [0, limit] or exactly the limit")

    p = add("featurize", cmd_featurize,
            "write summary (<out>), field (<out>.field.csv) and graph (<out>.graph.csv) features")
    p.add_argument("corpus")
    graph_args(p)

    p = add("train", cmd_train, "train the stacked estimator on a corpus")
    p.add_argument("corpus")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                   help=f"pipelines tried per search (default {DEFAULT_BUDGET})")
    p.add_argument("--folds", type=int, default=5)
    graph_args(p)

    p = add("predict", cmd_predict, "estimate the cost of one query")
    p.add_argument("query", help="query file ('-' for stdin)")
    model_args(p)

    p = add("evaluate", cmd_evaluate,
            "compare model and static bound on a corpus (JSON report, per-record <out>.csv)")
    p.add_argument("corpus")
    model_args(p)

    p = add("simulate", cmd_simulate, "threshold sweep of the gateway simulator (CSV)")
    p.add_argument("corpus")
    model_args(p)
    p.add_argument("--thresholds", help="comma-separated ascending thresholds "
                   "(default: 10 points from the 25th label percentile)")
    p.add_argument("--n-sims", type=int, default=1000)
    p.add_argument("--sample-size", type=int, default=1000)

    p = add("robustness", cmd_robustness, "inflate the static bound feature and re-estimate (CSV)")
    p.add_argument("record", help="query file, or a JSONL corpus together with --index")
    p.add_argument("--index", type=int, default=0, help="record index in a JSONL corpus")
    model_args(p)
    p.add_argument("--multipliers", help="comma-separated ascending multipliers >= 1 "
                   "(default 1,2,5,10,50,100,1000)")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("GQLCOST_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(code: str, detail: str, status: int) -> int:
    print(f"{code}: {detail}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(_Run(args))
    except UsageError as exc:
        return _fail("usage.invalid", str(exc), 3)
    except GqlCostError as exc:
        return _fail(exc.code, str(exc), exc.exit_status)
    except FileNotFoundError as exc:
        return _fail("io.not_found", str(exc) if exc.filename is None
                     else f"{exc.filename}: no such file", 2)
    except (OSError, UnicodeDecodeError) as exc:
        return _fail("io.error", str(exc), 2)
    except ValueError as exc:
        return _fail("usage.invalid", str(exc), 3)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
