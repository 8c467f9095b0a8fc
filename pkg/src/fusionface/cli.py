"""Command-line entry point.

Subcommands::

    fusionface reproduce --data ./orl --out ./reports
    fusionface eval --data ./orl --weights 0.5,1,0,0 --subjects 10,20
    fusionface grid --data ./orl --weights-file grid.txt --out ranked.csv
    fusionface extract --data ./orl --feature dct --out dct.csv
    fusionface synth --classes 5 --per-class 10 --seed 1 --out ./toy

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

from .dataset import DatasetError, PgmParseError, load_orl_dataset, synthesize_dataset, write_dataset
from .eigen import fit_eigen_model
from .fusion import WeightSet
from .harness import (
    TABLE_ROWS,
    ExperimentConfig,
    evaluate_config,
    grid_search_weights,
    render_csv,
    render_prediction_log,
    reproduce_tables,
)
from .pipeline import extract_blocks
from .statfeat import HistogramConfig
from .transform import DctFeatureConfig

log = logging.getLogger("fusionface")

DATA_ENV = "FUSIONFACE_DATA"
EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# option name -> (parser for config-file values, default)
_EXPERIMENT_OPTIONS = {
    "train_per_subject": (int, 9),
    "eigen_k": (int, 40),
    "dct_block": (int, 8),
    "dct_coeffs": (int, 6),
    "hist_bins": (int, 32),
    "kernel": (str, "linear"),
    "gamma": (float, None),
    "degree": (int, 3),
    "offset": (float, 1.0),
    "C": (float, 10.0),
    "tol": (float, 1e-3),
    "max_passes": (int, None),
    "normalize": (None, True),
    "subjects": (None, None),
    "data": (str, None),
    "weights": (None, None),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _parse_subjects(text) -> tuple[int, ...]:
    if isinstance(text, tuple):
        return text
    try:
        rows = tuple(int(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise UsageError(f"--subjects expects comma-separated integers, got {text!r}") from None
    if not rows or any(r < 2 for r in rows):
        raise UsageError("--subjects values must be integers >= 2")
    return rows


def _parse_weights(text) -> WeightSet:
    if isinstance(text, WeightSet):
        return text
    try:
        return WeightSet.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    g = p.add_argument_group("experiment")
    g.add_argument("--data", default=S, help=f"ORL-style dataset root (default: ${DATA_ENV})")
    g.add_argument("--config", default=S, help="file of 'key = value' lines; flags override it")
    g.add_argument("--subjects", default=S, help="comma-separated subject counts, one report row each")
    g.add_argument("--train-per-subject", dest="train_per_subject", type=int, default=S)
    g.add_argument("--eigen-k", dest="eigen_k", type=int, default=S, help="eigenfaces kept (default 40)")
    g.add_argument("--dct-block", dest="dct_block", type=int, default=S, help="DCT block size (default 8)")
    g.add_argument("--dct-coeffs", dest="dct_coeffs", type=int, default=S, help="zigzag coefficients per block (default 6)")
    g.add_argument("--hist-bins", dest="hist_bins", type=int, default=S, help="histogram bins (default 32)")
    g.add_argument("--kernel", choices=("linear", "rbf", "polynomial", "poly"), default=S)
    g.add_argument("--gamma", type=float, default=S, help="rbf width (default 1/dimension)")
    g.add_argument("--degree", type=int, default=S)
    g.add_argument("--offset", type=float, default=S, help="polynomial kernel offset")
    g.add_argument("--C", dest="C", type=float, default=S, help="SVM penalty (default 10)")
    g.add_argument("--tol", type=float, default=S, help="KKT tolerance (default 1e-3)")
    g.add_argument("--max-passes", dest="max_passes", type=int, default=S)
    g.add_argument("--normalize", dest="normalize", action="store_true", default=S)
    g.add_argument("--no-normalize", dest="normalize", action="store_false", default=S)
    g.add_argument("-v", "--verbose", action="store_true", default=False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fusionface", description="Weighted attribute fusion face recognition.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("reproduce", help="single- and multi-attribute weight tables as two CSVs")
    _experiment_flags(p)
    p.add_argument("--out", required=True, help="output directory for table1.csv and table2.csv")

    p = sub.add_parser("eval", help="evaluate one weight set and print its accuracy rows")
    _experiment_flags(p)
    p.add_argument("--weights", default=argparse.SUPPRESS, help="w1,w2,w3,w4")
    p.add_argument("--out", help="also write the report CSV here")
    p.add_argument("--log", help="write the per-image prediction log CSV here")

    p = sub.add_parser("grid", help="rank a list of weight sets by average accuracy")
    _experiment_flags(p)
    p.add_argument("--weights-file", required=True, help="one 'w1,w2,w3,w4' per line")
    p.add_argument("--out", help="ranked CSV path (default: stdout)")

    p = sub.add_parser("extract", help="dump one attribute block per image as CSV")
    _experiment_flags(p)
    p.add_argument("--feature", required=True, choices=("eigen", "dct", "hist", "intensity"))
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("synth", help="write a synthetic dataset as an ORL-style PGM tree")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", dest="per_class", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("-v", "--verbose", action="store_true", default=False)
    return parser


def _read_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _EXPERIMENT_OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown or malformed setting {line!r}")
        value = value.strip()
        conv = _EXPERIMENT_OPTIONS[key][0]
        try:
            if key == "normalize":
                values[key] = _parse_bool(value)
            elif conv is not None:
                values[key] = conv(value)
            else:
                values[key] = value
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < command-line flags."""
    merged = {k: default for k, (_, default) in _EXPERIMENT_OPTIONS.items()}
    merged["data"] = os.environ.get(DATA_ENV)
    cli = vars(args)
    if "config" in cli:
        merged.update(_read_config_file(cli["config"]))
    for key in _EXPERIMENT_OPTIONS:
        if key in cli:
            merged[key] = cli[key]
    if merged["subjects"] is not None:
        merged["subjects"] = _parse_subjects(merged["subjects"])
    if merged["weights"] is not None:
        merged["weights"] = _parse_weights(merged["weights"])
    return merged


def _experiment_config(opts: dict, n_subjects: int = 40, weights: WeightSet | None = None) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            n_subjects=n_subjects,
            train_per_subject=opts["train_per_subject"],
            eigen_k=opts["eigen_k"],
            dct=DctFeatureConfig(opts["dct_block"], opts["dct_coeffs"]),
            hist=HistogramConfig(opts["hist_bins"]),
            kernel=opts["kernel"],
            gamma=opts["gamma"],
            degree=opts["degree"],
            offset=opts["offset"],
            C=opts["C"],
            tol=opts["tol"],
            max_passes=opts["max_passes"],
            normalize=opts["normalize"],
            weights=weights or WeightSet(),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(opts: dict):
    if not opts["data"]:
        raise UsageError(f"no dataset given: pass --data or set ${DATA_ENV}")
    return load_orl_dataset(opts["data"])


def _write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(text: str, out) -> None:
    if out:
        _write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _rows_echo(rows) -> list[tuple[str, str]]:
    return [("subjects", ",".join(str(r) for r in rows))]


def _cmd_reproduce(args, opts) -> int:
    cfg = _experiment_config(opts)
    rows = opts["subjects"] or TABLE_ROWS
    out = Path(args.out)
    ds = _load(opts)
    table1, table2 = reproduce_tables(ds, cfg, rows)
    texts = {
        "table1.csv": render_csv([("table1", table1.columns)], cfg, row_averages=True, extra=_rows_echo(rows)),
        "table2.csv": render_csv([("table2", table2.columns)], cfg, row_averages=True, extra=_rows_echo(rows)),
    }
    for name, text in texts.items():
        _write_atomic(out / name, text)
    for table in (table1, table2):
        averages = ", ".join(f"({c.weights}) {c.average}" for c in table.columns)
        print(f"{table.name} averages: {averages}")
    return EXIT_OK


def _cmd_eval(args, opts) -> int:
    weights = opts["weights"]
    if weights is None:
        raise UsageError("eval requires --weights w1,w2,w3,w4")
    ds = _load(opts)
    rows = opts["subjects"] or (ds.class_count,)
    cfg = _experiment_config(opts, n_subjects=rows[0], weights=weights)
    report = evaluate_config(ds, cfg, rows)
    text = render_csv([("eval", [report])], cfg, extra=_rows_echo(rows))
    sys.stdout.write(text)
    if args.out:
        _write_atomic(args.out, text)
    if args.log:
        _write_atomic(args.log, render_prediction_log(report.rows))
    return EXIT_OK


def _read_weights_file(path) -> list[WeightSet]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read weights file {path}: {exc}") from None
    grid = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if line:
            try:
                grid.append(WeightSet.parse(line))
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    if not grid:
        raise UsageError(f"{path}: no weight sets found")
    return grid


def _cmd_grid(args, opts) -> int:
    grid = _read_weights_file(args.weights_file)
    ds = _load(opts)
    rows = opts["subjects"] or (ds.class_count,)
    cfg = _experiment_config(opts, n_subjects=rows[0])
    ranked = grid_search_weights(ds, cfg, grid, rows)
    _emit(render_csv([("grid", ranked)], cfg, extra=_rows_echo(rows)), args.out)
    return EXIT_OK


def _cmd_extract(args, opts) -> int:
    cfg = _experiment_config(opts)
    ds = _load(opts)
    images = ds.images()
    X = images.reshape(len(ds), -1)
    eigen = fit_eigen_model(X, min(cfg.eigen_k, len(ds) - 1))
    blocks = extract_blocks(images, eigen, cfg.dct, cfg.hist)
    block = {"eigen": blocks.eigen, "dct": blocks.dct, "hist": blocks.histogram, "intensity": blocks.intensity}[
        args.feature
    ]
    lines = ["subject,image_index," + ",".join(f"f{j}" for j in range(block.shape[1]))]
    for it, row in zip(ds, block):
        lines.append(f"{it.label},{it.index}," + ",".join(repr(float(v)) for v in row))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_synth(args) -> int:
    try:
        ds = synthesize_dataset(args.classes, args.per_class, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} images ({ds.class_count} subjects) to {args.out}")
    return EXIT_OK


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        opts = _resolve(args)
        handler = {
            "reproduce": _cmd_reproduce,
            "eval": _cmd_eval,
            "grid": _cmd_grid,
            "extract": _cmd_extract,
        }[args.command]
        return handler(args, opts)
    except UsageError as exc:
        print(f"fusionface: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, PgmParseError) as exc:
        print(f"fusionface: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
