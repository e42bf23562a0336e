"""Command-line runner: verify / train / dynamics / converge / plot.

Exit codes: 0 success, 1 failed checks or bound violations, 2 unusable
configuration or input schema, 3 divergent step size in a convergence run.
All artifacts land inside the output directory passed with --out (or the
config's [output] directory).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as cfg
from .csvio import format_float, numeric_column, read_csv, write_dynamics_csv
from .errors import InvalidInputError, LcoLabError, StepSizeError
from .svgplot import write_chart
from .training import converge_experiment, converge_violations, run_training
from .verify import SUITES, run_suites


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lco-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES), help="run only this suite")

    for name in ("train", "dynamics", "converge"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("plot", help="render CSV columns as an SVG line chart")
    p.add_argument("--csv", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--columns", default=None, help="comma-separated y columns")
    return parser


def cmd_verify(suites: list[str] | None) -> int:
    try:
        results = run_suites(suites)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for result in results:
        if result.passed:
            print(f"suite {result.name}: PASS ({result.cases} cases)")
        else:
            print(f"suite {result.name}: FAIL ({result.failures}/{result.cases} cases failed)")
    return 0 if all(r.passed for r in results) else 1


def _prepare(config_path: str, out: str | None):
    raw = cfg.parse_config(config_path)
    out_dir = cfg.output_directory(raw, out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return raw, out_dir


def _dump_model(path: Path, model) -> None:
    lines = [f"# {model.family.value} n_states={model.n_states} vocab={model.vocab_size}"]
    lines.extend(format_float(x) for x in model.theta)
    path.write_text("\n".join(lines) + "\n")


def cmd_train(config_path: str, out: str | None) -> int:
    raw, out_dir = _prepare(config_path, out)
    env = cfg.build_environment(raw)
    model = cfg.build_model(raw, env)
    trainer = cfg.build_trainer(raw)
    final_model, records = run_training(model, env, trainer)
    write_dynamics_csv(out_dir / "dynamics.csv", records)
    _dump_model(out_dir / "model.txt", final_model)
    columns = cfg.plot_columns(raw)
    if columns:
        _plot_csvs([out_dir / "dynamics.csv"], out_dir / "dynamics.svg", list(columns))
    print(f"wrote {out_dir / 'dynamics.csv'} ({len(records)} steps)")
    return 0


def cmd_dynamics(config_path: str, out: str | None) -> int:
    raw, out_dir = _prepare(config_path, out)
    env = cfg.build_environment(raw)
    kinds = cfg.dynamics_objectives(raw)
    summary_lines = []
    for kind in kinds:
        model = cfg.build_model(raw, env)
        trainer = cfg.build_trainer(raw, objective=kind)
        _, records = run_training(model, env, trainer)
        write_dynamics_csv(out_dir / f"dynamics_{kind.value}.csv", records)
        violations = sum(
            1
            for r in records
            if r.bound_value is not None and r.grad_norm_param > r.bound_value + 1e-9
        )
        summary_lines.append(
            f"{kind.value}: max_grad_norm={format_float(max(r.grad_norm_param for r in records))} "
            f"final_entropy={format_float(records[-1].entropy)} "
            f"final_sampled_prob={format_float(records[-1].sampled_prob)} "
            f"envelope_violations={violations}"
        )
    (out_dir / "summary.txt").write_text("\n".join(summary_lines) + "\n")
    print("\n".join(summary_lines))
    return 0


def cmd_converge(config_path: str, out: str | None) -> int:
    raw, out_dir = _prepare(config_path, out)
    family, objective, converge_config = cfg.build_converge(raw)
    try:
        result = converge_experiment(family, objective, converge_config)
    except StepSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    lines = ["step,loss,bound,rho"]
    for row in result.rows:
        lines.append(
            f"{row.step},{format_float(row.loss)},{format_float(row.bound)},{format_float(result.rho)}"
        )
    (out_dir / "converge.csv").write_text("\n".join(lines) + "\n")
    violations = converge_violations(result)
    print(
        f"{family.value}/{objective.value}: rho={result.rho:.6g} "
        f"steps={len(result.rows) - 1} violations={violations}"
    )
    return 0 if violations == 0 else 1


def _plot_csvs(paths: list[Path], out_path: Path, columns: list[str] | None) -> None:
    series: dict[str, tuple[list[float], list[float]]] = {}
    x_label = "x"
    for path in paths:
        header, rows = read_csv(path)
        if not header or not header[0]:
            raise InvalidInputError(f"{path}: missing header row")
        x_label = header[0]
        xs = numeric_column(header, rows, header[0]) if rows else []
        wanted = columns or [
            name for name in header[1:] if name not in ("adv_bucket",) and name
        ]
        for name in wanted:
            if name not in header:
                raise InvalidInputError(f"{path}: missing column {name!r}")
            ys = numeric_column(header, rows, name) if rows else []
            label = name if len(paths) == 1 else f"{path.stem}:{name}"
            series[label] = (xs, ys)
    write_chart(out_path, series, x_label=x_label)


def cmd_plot(csv_paths: list[str], out: str, columns: str | None) -> int:
    wanted = [c.strip() for c in columns.split(",") if c.strip()] if columns else None
    _plot_csvs([Path(p) for p in csv_paths], Path(out), wanted)
    print(f"wrote {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.suite)
        if args.command == "train":
            return cmd_train(args.config, args.out)
        if args.command == "dynamics":
            return cmd_dynamics(args.config, args.out)
        if args.command == "converge":
            return cmd_converge(args.config, args.out)
        if args.command == "plot":
            return cmd_plot(args.csv, args.out, args.columns)
    except (cfg.ConfigError, InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LcoLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
