"""Command line interface: eval, search, train, predict.

Exit codes: 0 on success, 2 for input problems (unreadable or malformed
data), 3 for configuration problems (bad flags or classifier specs).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .classifiers import (
    DiagnosticClassifier,
    MixtureClassifier,
    build_anb,
    build_nb,
    build_omi,
    build_pm_mixture,
)
from .data import DatasetEncoder, fit_discretization, load_csv
from .errors import ConfigError, DataError
from .harness import run_trials, spec_from_token
from .model_io import load_model, model_to_json_dict
from .scoring import PriorSpec
from .search import SearchConfig, pm_search

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    # surface usage problems as ConfigError so main() can map them to exit 3
    def error(self, message):
        raise ConfigError(message)


def parse_prior(text: str) -> PriorSpec:
    """uniform[:alpha] puts alpha on every cell; bdeu[:s] spreads s over the table."""
    kind, _, value = text.partition(":")
    try:
        strength = float(value) if value else 1.0
    except ValueError:
        raise ConfigError(f"bad prior strength in {text!r}") from None
    if strength <= 0:
        raise ConfigError("prior strength must be > 0")
    if kind == "uniform":
        return PriorSpec.uniform_cell(strength)
    if kind == "bdeu":
        return PriorSpec.equivalent_sample_size(strength)
    raise ConfigError(f"unknown prior {text!r}; expected uniform:A or bdeu:S")


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected true or false, got {text!r}")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--class-col", required=True, help="name of the class column")
    p.add_argument("--bins", type=int, default=3, help="equal-frequency bins for numeric columns")


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--patience", type=int, default=200)
    p.add_argument("--max-block-size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smlbayes", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_eval = sub.add_parser("eval", help="repeated-split evaluation of classifiers")
    _add_data_flags(p_eval)
    p_eval.add_argument("--trials", type=int, default=50)
    p_eval.add_argument("--train-frac", type=float, default=0.75)
    p_eval.add_argument(
        "--classifiers", required=True, help="comma list: nb, om<i>, pm, anb"
    )
    p_eval.add_argument("--prior", default="uniform:1.0")
    _add_search_flags(p_eval)
    p_eval.add_argument(
        "--global-discretize",
        default="true",
        help="false refits discretization on each trial's training half",
    )
    p_eval.add_argument("--out", required=True)

    p_search = sub.add_parser("search", help="search for a predictor partition")
    _add_data_flags(p_search)
    p_search.add_argument("--prior", default="uniform:1.0")
    _add_search_flags(p_search)
    p_search.add_argument("--out", required=True)

    p_train = sub.add_parser("train", help="train one classifier on the full dataset")
    _add_data_flags(p_train)
    p_train.add_argument("--classifier", required=True, help="nb, om<i>, pm, or anb")
    p_train.add_argument("--prior", default="uniform:1.0")
    _add_search_flags(p_train)
    p_train.add_argument("--out", required=True)

    p_pred = sub.add_parser("predict", help="predict class distributions for new rows")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--input", required=True, help="CSV with the predictor columns")
    p_pred.add_argument("--out", required=True)

    return parser


def _load_encoded(args):
    raw = load_csv(args.data, args.class_col)
    if raw.n_rows == 0:
        raise DataError("CSV has no data rows")
    spec = fit_discretization(raw, args.bins)
    encoder = DatasetEncoder.fit(raw, spec)
    return raw, encoder, encoder.encode_table(raw)


def _write_json(path: str, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _search_config(args) -> SearchConfig:
    try:
        return SearchConfig(
            restarts=args.restarts,
            patience=args.patience,
            max_block_size=args.max_block_size,
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_eval(args) -> int:
    prior = parse_prior(args.prior)
    search = _search_config(args)
    tokens = [t for t in args.classifiers.split(",") if t.strip()]
    if not tokens:
        raise ConfigError("--classifiers must name at least one classifier")
    specs = [spec_from_token(t, prior, search) for t in tokens]
    global_disc = _parse_bool(args.global_discretize)
    raw, _, data = _load_encoded(args)
    report = run_trials(
        data,
        specs,
        trials=args.trials,
        train_fraction=args.train_frac,
        master_seed=args.seed,
        raw=None if global_disc else raw,
        bins=args.bins,
    )
    payload = report.to_json_dict()
    payload["config"].update(
        data=args.data,
        class_col=args.class_col,
        prior=args.prior,
        global_discretize=global_disc,
    )
    _write_json(args.out, payload)
    return EXIT_OK


def _cmd_search(args) -> int:
    prior = parse_prior(args.prior)
    config = _search_config(args)
    _, _, data = _load_encoded(args)
    result = pm_search(data, prior, config)
    payload = result.to_json_dict()
    payload["format_version"] = 1
    payload["config"] = {
        "data": args.data,
        "class_col": args.class_col,
        "bins": args.bins,
        "prior": args.prior,
        "search": config.to_json_dict(),
    }
    _write_json(args.out, payload)
    return EXIT_OK


def _cmd_train(args) -> int:
    prior = parse_prior(args.prior)
    search = _search_config(args)
    spec = spec_from_token(args.classifier, prior, search)
    _, encoder, data = _load_encoded(args)
    if spec.kind == "nb":
        model = build_nb(data, prior)
    elif spec.kind == "omi":
        model = build_omi(data, spec.subset_size, prior)
    else:
        partition = pm_search(data, prior, search).best_partition
        if spec.kind == "pm":
            model = build_pm_mixture(partition, data, prior)
        else:
            model = build_anb(partition, data, prior)
    _write_json(args.out, model_to_json_dict(model, encoder))
    return EXIT_OK


def _cmd_predict(args) -> int:
    model, encoder = load_model(args.model)
    try:
        with open(args.input, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError("empty input CSV") from None
            rows = []
            for row in reader:
                if len(row) != len(header):
                    raise DataError(
                        f"line {reader.line_num}: row has {len(row)} fields, "
                        f"expected {len(header)}"
                    )
                rows.append([c.strip() for c in row])
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from exc

    positions = {}
    for name in encoder.predictor_names:
        if name not in header:
            raise DataError(f"missing predictor column {name!r}")
        positions[name] = header.index(name)

    if isinstance(model, MixtureClassifier):
        r = model.components[0].table.class_arity
    elif isinstance(model, DiagnosticClassifier):
        r = model.table.class_arity
    else:
        r = model.schema.class_arity
    # class columns can outnumber the observed class values when the schema
    # was floored to binary; pad names by index in that case
    value_names = list(encoder.class_values)
    while len(value_names) < r:
        value_names.append(f"class{len(value_names)}")

    out_rows = []
    for line_no, row in enumerate(rows, start=2):
        x = []
        for name, kind in zip(encoder.predictor_names, encoder.kinds):
            cell = row[positions[name]]
            if kind == "numeric":
                try:
                    float(cell)
                except ValueError:
                    raise DataError(
                        f"line {line_no}: column {name!r} expected a number, got {cell!r}"
                    ) from None
            x.append(encoder.encode_value(name, kind, cell))
        dist = model.predict(x)
        label = value_names[int(dist.argmax())]
        out_rows.append([repr(float(p)) for p in dist] + [label])

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"p_{v}" for v in value_names] + ["predicted"])
        writer.writerows(out_rows)
    return EXIT_OK


_COMMANDS = {
    "eval": _cmd_eval,
    "search": _cmd_search,
    "train": _cmd_train,
    "predict": _cmd_predict,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
