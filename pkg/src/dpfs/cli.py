"""Command line entry point: ``dpfs <subcommand> [options]``.

Exit codes: 0 success, 2 usage or configuration error, 3 data / parse / I/O
error, 4 numeric-domain error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from dpfs.data_io import SplitSpec, load_dataset, write_dense_csv, write_results_csv
from dpfs.errors import DomainError, ParseError
from dpfs.feature_selection import dfs_pipeline, release_columns, select_top_m, t_statistic_scores
from dpfs.gaussian_model import CALIBRATIONS, GmParams, LabeledDataset, PrivacyBudget, gaussian_mechanism
from dpfs.harness import (
    FixedSource,
    SplitSource,
    SweepConfig,
    SynthConfig,
    evaluate_bound,
    generate_synthetic,
    run_dimension_sweep,
    run_epsilon_sweep,
    summarize,
)
from dpfs.lda import empirical_error, fit_lda

EXIT_USAGE, EXIT_DATA, EXIT_DOMAIN = 2, 3, 4


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_common(p: argparse.ArgumentParser, *, privacy: bool = True) -> None:
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--output", "-o")
    if privacy:
        p.add_argument("--epsilon", type=float)
        p.add_argument("--delta", type=float, default=1e-4)
        p.add_argument("--calibration", choices=CALIBRATIONS, default="std",
                       help="read the noise scale as a standard deviation (default) or a variance")


def _add_input(p: argparse.ArgumentParser, *names: str, required: bool = True) -> None:
    for name in names:
        p.add_argument(f"--{name}", required=required and name == "input")
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--label-column", default="label")
    p.add_argument("--dimension", type=int, help="feature count, required for libsvm")


def _add_synth(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=int, default=3000)
    p.add_argument("--variance-rate", type=float, default=0.1)
    p.add_argument("--nonzero-fraction", type=float, default=0.12)
    p.add_argument("--laplace-scale", type=float, default=0.5)
    p.add_argument("--signal-count", type=int)
    p.add_argument("--train-per-class", type=int, default=30)
    p.add_argument("--test-per-class", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpfs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic train/test CSVs and truth.json")
    _add_synth(p)
    _add_common(p, privacy=False)

    p = sub.add_parser("privatize", help="apply the Gaussian mechanism to a dataset")
    _add_input(p, "input")
    _add_common(p)
    p.add_argument("--sensitivity", type=float, help="override the realized l1 sensitivity")

    p = sub.add_parser("select", help="rank features, keep the top m and privatize them")
    _add_input(p, "input")
    _add_common(p)
    p.add_argument("--method", choices=("dfs", "tstat"), default="dfs")
    p.add_argument("--m", type=int, required=True)

    p = sub.add_parser("train-eval", help="fit LDA on a training file and report test error")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--label-column", default="label")
    p.add_argument("--dimension", type=int)

    for name, grid_help in (("sweep-dim", "fixed epsilon, varying m"), ("sweep-eps", "fixed m, varying epsilon")):
        p = sub.add_parser(name, help=f"Monte Carlo sweep ({grid_help}); writes a results CSV")
        _add_synth(p)
        _add_input(p, "input", "train", "test", required=False)
        _add_common(p)
        p.add_argument("--methods", default="dfs,tstat,none")
        p.add_argument("--replicates", type=int, default=10)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--class-a", type=int)
        p.add_argument("--class-b", type=int)
        if name == "sweep-dim":
            p.add_argument("--m-grid", type=_ints, required=True)
        else:
            p.add_argument("--epsilon-grid", type=_floats, required=True)
            p.add_argument("--m", type=int, required=True)

    p = sub.add_parser("bound", help="evaluate the closed-form error bound")
    p.add_argument("--p", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--gamma", type=_floats, help="one value, or K-1 comma-separated values")
    p.add_argument("--truth", help="truth.json written by `synth`")
    p.add_argument("--sensitivity", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--calibration", choices=CALIBRATIONS, default="std")
    return parser


def _budget(args) -> PrivacyBudget:
    if args.epsilon is None:
        raise UsageError("--epsilon is required")
    return PrivacyBudget(args.epsilon, args.delta)


def _load(args, path) -> LabeledDataset:
    return load_dataset(path, args.format, args.label_column, args.dimension)


def _require_output(args) -> Path:
    if not args.output:
        raise UsageError("--output is required")
    return Path(args.output)


def cmd_synth(args) -> int:
    out = _require_output(args)
    cfg = SynthConfig(
        p=args.p,
        variance_rate=args.variance_rate,
        sparsity_nonzero_fraction=args.nonzero_fraction,
        laplace_scale=args.laplace_scale,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        seed=args.seed,
        signal_count=args.signal_count,
    )
    truth, train, test = generate_synthetic(cfg)
    out.mkdir(parents=True, exist_ok=True)
    write_dense_csv(train, out / "train.csv")
    write_dense_csv(test, out / "test.csv")
    (out / "truth.json").write_text(json.dumps(truth.to_dict()) + "\n", encoding="utf-8")
    print(f"wrote {out / 'train.csv'}, {out / 'test.csv'}, {out / 'truth.json'}")
    return 0


def cmd_privatize(args) -> int:
    out = _require_output(args)
    data = _load(args, args.input)
    private = gaussian_mechanism(data, _budget(args), args.sensitivity, args.seed, args.calibration)
    write_dense_csv(private, out, args.label_column)
    return 0


def cmd_select(args) -> int:
    data = _load(args, args.input)
    budget = _budget(args)
    if args.method == "dfs":
        result = dfs_pipeline(data, args.m, budget, args.seed, args.calibration)
    else:
        idx = select_top_m(t_statistic_scores(data), args.m)
        result = release_columns(data, idx, budget, args.seed, args.calibration)
    if args.output:
        write_dense_csv(result.privatized, args.output, args.label_column)
    names = data.names()
    print(json.dumps({
        "selected": [names[j] for j in result.selected_indices],
        "indices": [int(j) for j in result.selected_indices],
        "n_max": result.n_max,
        "noise_std": result.noise_std,
    }))
    return 0


def _align(test: LabeledDataset, columns: tuple[str, ...]) -> LabeledDataset:
    if test.p == len(columns) and test.names() == columns:
        return test
    lookup = {name: j for j, name in enumerate(test.names())}
    missing = [c for c in columns if c not in lookup]
    if missing:
        raise ParseError(f"test data lacks training columns {missing[:5]}")
    return test.select_columns([lookup[c] for c in columns])


def cmd_train_eval(args) -> int:
    train = _load(args, args.train)
    test = _align(_load(args, args.test), train.names())
    err = empirical_error(fit_lda(train), test)
    print(f"{err:.6g}")
    return 0


def _sweep_source(args):
    if args.input:
        if args.train or args.test:
            raise UsageError("use either --input or --train/--test")
        spec = SplitSpec(args.train_per_class, args.test_per_class, 0, args.class_a, args.class_b)
        return SplitSource(_load(args, args.input), spec)
    if args.train or args.test:
        if not (args.train and args.test):
            raise UsageError("--train and --test go together")
        train = _load(args, args.train)
        return FixedSource(train, _align(_load(args, args.test), train.names()))
    return SynthConfig(
        p=args.p,
        variance_rate=args.variance_rate,
        sparsity_nonzero_fraction=args.nonzero_fraction,
        laplace_scale=args.laplace_scale,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        signal_count=args.signal_count,
    )


def cmd_sweep(args) -> int:
    out = _require_output(args)
    common = dict(
        data=_sweep_source(args),
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        delta=args.delta,
        replicates=args.replicates,
        seed=args.seed,
        calibration=args.calibration,
        workers=args.workers,
    )
    if args.command == "sweep-dim":
        if args.epsilon is None:
            raise UsageError("--epsilon is required")
        records = run_dimension_sweep(SweepConfig(m_grid=args.m_grid, epsilon=args.epsilon, **common))
    else:
        records = run_epsilon_sweep(SweepConfig(epsilon_grid=args.epsilon_grid, m=args.m, **common))
    write_results_csv(records, out)
    for (method, m, eps), mean in summarize(records).items():
        print(f"{method:>5}  m={m:<6d} eps={eps:<8g} mean_test_error={mean:.4f}")
    return 0


def cmd_bound(args) -> int:
    if args.gamma is not None:
        value = evaluate_bound(args.p, args.n, args.k, gammas=args.gamma)
    elif args.truth:
        try:
            truth = GmParams.from_dict(json.loads(Path(args.truth).read_text(encoding="utf-8")))
        except (KeyError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad truth file: {exc}", None, args.truth) from None
        if args.sensitivity is None:
            raise UsageError("--sensitivity is required with --truth")
        value = evaluate_bound(args.p, args.n, gammas=None, truth=truth, budget=_budget(args),
                               sensitivity=args.sensitivity, calibration=args.calibration)
    else:
        raise UsageError("give --gamma, or --truth with --epsilon and --sensitivity")
    print(f"{value:.12g}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "privatize": cmd_privatize,
    "select": cmd_select,
    "train-eval": cmd_train_eval,
    "sweep-dim": cmd_sweep,
    "sweep-eps": cmd_sweep,
    "bound": cmd_bound,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dpfs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"dpfs: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DomainError as exc:
        print(f"dpfs: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
