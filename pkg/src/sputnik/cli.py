"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (LARGE_INSTANCE, RunConfig, compare_strategies, emit_plot_data, expand_configs, load_traces,
                    read_config_file, run_experiment, stagnation_run)
from .cloud import random_instance, save_instance
from .errors import ConfigError, UsageError
from .selector import STRATEGIES

EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# compare-only keys accepted next to the RunConfig fields
COMPARE_KEYS = ("strategies", "algorithms", "threshold_fraction", "hv_generation",
                "stagnation_window", "cap", "reference_generations")


def _read(args) -> dict:
    data = read_config_file(args.config)
    if args.large_instance:
        data["instance"] = dict(LARGE_INSTANCE)
    return data


def _cmd_run(args) -> int:
    data = _read(args)
    config = RunConfig.from_dict(data, Path(args.config).parent)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    trace = (stagnation_run(config, args.stagnation) if args.stagnation
             else run_experiment(config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / trace.file_name()
    trace.to_csv(path)
    hv = trace.hypervolumes
    print(f"{config.algorithm}/{config.strategy} seed={config.seed}: "
          f"{len(hv)} generations, final hypervolume {hv[-1]:.4f} -> {path}")
    return 0


def _cmd_compare(args) -> int:
    data = _read(args)
    extra = {k: data.pop(k) for k in COMPARE_KEYS if k in data}
    strategies = extra.get("strategies")
    algorithms = extra.get("algorithms")
    if isinstance(data.get("strategy"), list):
        strategies = data.pop("strategy")
    if isinstance(data.get("algorithm"), list):
        algorithms = data.pop("algorithm")
    if strategies is None:
        # a scalar "strategy" is the run default; compare always sweeps
        strategies = list(STRATEGIES)
    base = RunConfig.from_dict(data, Path(args.config).parent)
    configs = expand_configs(base, strategies, algorithms)
    result = compare_strategies(
        configs, args.repeats,
        threshold_fraction=float(extra.get("threshold_fraction", 0.9)),
        hv_generation=int(extra.get("hv_generation", 200)),
        stagnation_window=extra.get("stagnation_window"),
        cap=extra.get("cap"),
        reference_generations=extra.get("reference_generations"),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for trace in result.traces:
        trace.to_csv(out / trace.file_name())
    result.to_csv(out / "summary.csv")
    text = result.to_text()
    (out / "summary.txt").write_text(text, encoding="utf-8")
    emit_plot_data(result.traces, out)
    print(text, end="")
    return 0


def _cmd_plot(args) -> int:
    traces = load_traces(args.input)
    if not traces:
        raise ConfigError(f"{args.input}: no trace_*.csv files found")
    out = Path(args.out)
    csv_path, svg_path = emit_plot_data(traces, out.parent, svg_name=out.name,
                                        csv_name=out.stem + ".csv")
    print(f"wrote {svg_path} and {csv_path}")
    return 0


def _cmd_gen_instance(args) -> int:
    inst = random_instance(args.vms, args.components, args.public_fraction, args.seed)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out)
    print(f"wrote {out}: {inst.n_vms} VMs, {inst.n_components} components")
    return 0


def _large_flag(p) -> None:
    p.add_argument("--large-instance", action="store_true",
                   help="use the generated 100-VM / 200-component instance instead of the config's")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sputnik", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one seeded experiment and write its trace CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".")
    p.add_argument("--stagnation", type=int, metavar="WINDOW",
                   help="stop once hypervolume is unchanged for WINDOW generations")
    _large_flag(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="compare strategies over repeated seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--out", required=True)
    _large_flag(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("plot", help="plot median hypervolume from a directory of traces")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("gen-instance", help="generate a placement instance file")
    p.add_argument("--vms", type=int, required=True)
    p.add_argument("--components", type=int, required=True)
    p.add_argument("--public-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_instance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # any other failure is a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
