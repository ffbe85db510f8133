"""Experiment runner: seeded runs, per-generation traces, strategy
comparisons and plot output."""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cloud import CloudProblem, load_instance, random_instance
from .core import (EvolutionConfig, epsilon_moea_generation, initial_epsilon_state,
                   initial_population, nsga2_generation)
from .errors import ConfigError, UsageError
from .indicators import generations_to_threshold, normalized_hypervolume
from .selector import STRATEGIES, SputnikSelector

log = logging.getLogger(__name__)

ALGORITHMS = ("nsga2", "eps-moea")
DEFAULT_INSTANCE = {"vms": 30, "components": 60, "public_fraction": 0.5, "seed": 1}
LARGE_INSTANCE = {"vms": 100, "components": 200, "public_fraction": 0.5, "seed": 1}
STAGNATION_TOLERANCE = 1e-9


@dataclass
class RunConfig:
    algorithm: str = "nsga2"
    strategy: str = "caste"
    population_size: int = 100
    generations: int = 300
    mutation_probability: float = 1.0
    crossover_probability: float = 0.9
    exploration_floor: float = 0.10
    epsilon: tuple[float, ...] = (0.2, 0.5)
    instance: str | dict = field(default_factory=lambda: dict(DEFAULT_INSTANCE))
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        for name in ("population_size", "generations"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        for name in ("mutation_probability", "crossover_probability", "exploration_floor"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value!r}")
        self.epsilon = tuple(float(e) for e in self.epsilon)
        if len(self.epsilon) != 2 or not all(e > 0 for e in self.epsilon):
            raise ConfigError(f"epsilon must be two positive reals, got {self.epsilon}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")
        if not isinstance(self.instance, (str, dict)):
            raise ConfigError("instance must be a file path or generator parameters")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        inst = data.get("instance")
        if isinstance(inst, str) and base_dir is not None and not Path(inst).is_absolute():
            data["instance"] = str(base_dir / inst)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilon"] = list(self.epsilon)
        return d

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(self.population_size, self.crossover_probability,
                               self.mutation_probability, self.epsilon)


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def load_config(path) -> RunConfig:
    return RunConfig.from_dict(read_config_file(path), Path(path).parent)


def build_problem(config: RunConfig) -> CloudProblem:
    if isinstance(config.instance, str):
        return CloudProblem(load_instance(config.instance))
    params = dict(config.instance)
    try:
        n_vms = params.pop("vms")
        n_components = params.pop("components")
    except KeyError as exc:
        raise ConfigError(f"instance generator parameters need {exc}") from exc
    try:
        return CloudProblem(random_instance(n_vms, n_components, **params))
    except TypeError as exc:
        raise ConfigError(f"bad instance generator parameters: {exc}") from exc


# --- traces ----------------------------------------------------------------------


@dataclass
class RunTrace:
    """Per-generation record of one run. Row ``g`` describes generation ``g``;
    generation 0 is the initial population."""

    algorithm: str
    strategy: str
    seed: int
    operator_ids: tuple[str, ...]
    objective_names: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    capped: bool = False

    @property
    def hypervolumes(self) -> list[float]:
        return [r["hypervolume"] for r in self.rows]

    def columns(self) -> list[str]:
        cols = ["generation", "hypervolume"]
        for name in self.objective_names:
            cols += [f"best_{name}", f"mean_{name}"]
        cols.append("mutations")
        cols += [f"selected_{op}" for op in self.operator_ids]
        cols += [f"impact_{op}" for op in self.operator_ids]
        return cols

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = self.columns()
        writer.writerow(cols)
        for row in self.rows:
            writer.writerow(["" if row[c] is None else repr(row[c]) for c in cols])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, path, algorithm: str = "", strategy: str = "", seed: int = 0) -> "RunTrace":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            cols = reader.fieldnames or []
            rows = []
            for raw in reader:
                row = {}
                for k, v in raw.items():
                    if v == "":
                        row[k] = None
                    elif k == "generation" or k == "mutations" or k.startswith("selected_"):
                        row[k] = int(v)
                    else:
                        row[k] = float(v)
                rows.append(row)
        ops = tuple(c[len("selected_"):] for c in cols if c.startswith("selected_"))
        names = tuple(c[len("best_"):] for c in cols if c.startswith("best_"))
        return cls(algorithm, strategy, seed, ops, names, rows)

    def file_name(self) -> str:
        return f"trace_{self.algorithm}_{self.strategy}_seed{self.seed}.csv"


def _row(generation, F_front, F_pop, hv, names, selector, mutations, counts) -> dict:
    row = {"generation": generation, "hypervolume": hv}
    for k, name in enumerate(names):
        row[f"best_{name}"] = float(F_pop[:, k].min())
        row[f"mean_{name}"] = float(F_pop[:, k].mean())
    row["mutations"] = int(mutations)
    for op, n in zip(selector.pool, counts):
        row[f"selected_{op.id}"] = int(n)
    for op in selector.pool:
        d = selector.credits[op.id].delta_impact
        row[f"impact_{op.id}"] = None if d is None else float(d)
    return row


def _execute(config: RunConfig, stagnation_window: int | None = None,
             cap: int | None = None, problem=None, selector=None) -> RunTrace:
    problem = problem if problem is not None else build_problem(config)
    evo = config.evolution_config()
    init_ss, algo_ss, sel_ss = np.random.SeedSequence(config.seed).spawn(3)
    init_rng = np.random.default_rng(init_ss)
    rng = np.random.default_rng(algo_ss)
    if selector is None:
        selector = SputnikSelector(problem.operators, config.strategy, config.exploration_floor,
                                   np.random.default_rng(sel_ss))
    hv_bounds = problem.objective_bounds()
    names = tuple(getattr(problem, "objective_names", [f"f{k}" for k in range(problem.n_objectives)]))
    trace = RunTrace(config.algorithm, config.strategy, config.seed,
                     tuple(op.id for op in selector.pool), names)

    if config.algorithm == "nsga2":
        state = initial_population(problem, config.population_size, init_rng)

        def front_and_pop(s):
            F = s.objectives()
            return F[s.rank == 0], F

        def step(s):
            return nsga2_generation(s, selector, problem, evo, rng)
    else:
        state = initial_epsilon_state(problem, config.population_size, config.epsilon, init_rng)

        def front_and_pop(s):
            return (np.vstack([a.objectives for a in s.archive]),
                    np.vstack([p.objectives for p in s.population]))

        def step(s):
            return epsilon_moea_generation(s, selector, problem, evo, rng)

    front, F = front_and_pop(state)
    selector.observe(F)
    hv = normalized_hypervolume(front, hv_bounds)
    trace.rows.append(_row(0, front, F, hv, names, selector, 0, np.zeros(len(selector.pool), int)))

    limit = config.generations if stagnation_window is None else (cap or config.generations)
    unchanged = 0
    for g in range(1, limit):
        if stagnation_window is not None and unchanged >= stagnation_window:
            break
        state = step(state)
        counts = selector.last_selections
        front, F = front_and_pop(state)
        new_hv = normalized_hypervolume(front, hv_bounds)
        unchanged = unchanged + 1 if abs(new_hv - hv) <= STAGNATION_TOLERANCE else 0
        hv = new_hv
        trace.rows.append(_row(g, front, F, hv, names, selector, counts.sum(), counts))
    if stagnation_window is not None and unchanged < stagnation_window:
        trace.capped = True
    return trace


def run_experiment(config: RunConfig, problem=None, selector=None) -> RunTrace:
    """Run ``config.generations`` generations (rows 0..generations-1).

    ``selector`` overrides the one built from ``config.strategy``; it should
    draw from its own generator so the other streams are unaffected.
    """
    return _execute(config, problem=problem, selector=selector)


def stagnation_run(config: RunConfig, window: int = 50, cap: int | None = None,
                   problem=None) -> RunTrace:
    """Run until hypervolume is unchanged for ``window`` consecutive
    generations, or until ``cap`` generations (default ``config.generations``)
    exist; ``trace.capped`` is set in the latter case."""
    if window < 1:
        raise UsageError("stagnation window must be >= 1")
    return _execute(config, stagnation_window=window, cap=cap, problem=problem)


# --- comparisons ---------------------------------------------------------------


def _median_iqr(values: Sequence[float]) -> tuple[float | None, float | None]:
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if arr.size == 0:
        return None, None
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return float(med), float(q3 - q1)


@dataclass
class Comparison:
    traces: list[RunTrace]
    rows: list[dict]
    thresholds: dict[str, float]
    per_run: list[dict]

    COLUMNS = ("algorithm", "strategy", "runs", "final_hv_median", "final_hv_iqr",
               "hv_at_gen_median", "hv_at_gen_iqr", "gens_to_threshold_median",
               "gens_to_threshold_iqr", "never_reached", "capped")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow(["" if r[c] is None else r[c] for c in self.COLUMNS])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def to_text(self) -> str:
        def fmt(v):
            if v is None:
                return "-"
            return f"{v:.4f}" if isinstance(v, float) else str(v)
        table = [list(self.COLUMNS)] + [[fmt(r[c]) for c in self.COLUMNS] for r in self.rows]
        widths = [max(len(row[i]) for row in table) for i in range(len(self.COLUMNS))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in table]
        thr = ", ".join(f"{a}: {t:.4f}" for a, t in self.thresholds.items())
        return "\n".join(lines) + f"\nthresholds: {thr}\n"


def expand_configs(base: RunConfig, strategies: Iterable[str] | None = None,
                   algorithms: Iterable[str] | None = None) -> list[RunConfig]:
    algorithms = list(algorithms or [base.algorithm])
    strategies = list(strategies or [base.strategy])
    return [replace(base, algorithm=a, strategy=s) for a in algorithms for s in strategies]


def summarize(traces: Sequence[RunTrace], threshold_fraction: float = 0.9,
              hv_generation: int = 200, reference_hv: dict[str, float] | None = None) -> Comparison:
    """Group traces by (algorithm, strategy) and compute median/IQR
    statistics. The convergence threshold per algorithm is
    ``threshold_fraction`` times the best hypervolume seen in any of its
    traces (or in ``reference_hv``)."""
    best: dict[str, float] = {}
    for t in traces:
        best[t.algorithm] = max(best.get(t.algorithm, -np.inf), max(t.hypervolumes))
    for alg, hv in (reference_hv or {}).items():
        best[alg] = max(best.get(alg, -np.inf), hv)
    thresholds = {a: threshold_fraction * b for a, b in best.items()}

    per_run = []
    for t in traces:
        hvs = t.hypervolumes
        per_run.append({
            "algorithm": t.algorithm, "strategy": t.strategy, "seed": t.seed,
            "final_hv": hvs[-1],
            "hv_at_gen": hvs[hv_generation] if len(hvs) > hv_generation else None,
            "gens_to_threshold": generations_to_threshold(hvs, thresholds[t.algorithm]),
            "capped": t.capped,
        })
    groups: dict[tuple[str, str], list[dict]] = {}
    for r in per_run:
        groups.setdefault((r["algorithm"], r["strategy"]), []).append(r)
    rows = []
    for (alg, strat), runs in groups.items():
        fh = _median_iqr([r["final_hv"] for r in runs])
        hg = _median_iqr([r["hv_at_gen"] for r in runs])
        # runs that never reach the threshold count as +inf
        gtt = [np.inf if r["gens_to_threshold"] is None else r["gens_to_threshold"] for r in runs]
        gm = float(np.median(gtt))
        q1, q3 = np.percentile(gtt, [25, 75]) if np.all(np.isfinite(gtt)) else (np.nan, np.nan)
        rows.append({
            "algorithm": alg, "strategy": strat, "runs": len(runs),
            "final_hv_median": fh[0], "final_hv_iqr": fh[1],
            "hv_at_gen_median": hg[0], "hv_at_gen_iqr": hg[1],
            "gens_to_threshold_median": gm if np.isfinite(gm) else None,
            "gens_to_threshold_iqr": float(q3 - q1) if np.isfinite(q1) else None,
            "never_reached": sum(r["gens_to_threshold"] is None for r in runs),
            "capped": sum(r["capped"] for r in runs),
        })
    return Comparison(list(traces), rows, thresholds, per_run)


def compare_strategies(configs: Sequence[RunConfig], repeats: int = 20, *,
                       threshold_fraction: float = 0.9, hv_generation: int = 200,
                       stagnation_window: int | None = None, cap: int | None = None,
                       reference_generations: int | None = None) -> Comparison:
    """Run every config ``repeats`` times with seeds ``seed, seed+1, ...``.

    ``reference_generations`` adds one long caste run per algorithm whose
    best hypervolume also feeds the convergence threshold.
    """
    if repeats < 1:
        raise UsageError("repeats must be >= 1")
    traces = []
    for cfg in configs:
        for r in range(repeats):
            run_cfg = replace(cfg, seed=cfg.seed + r)
            log.info("run %s/%s seed %d", cfg.algorithm, cfg.strategy, run_cfg.seed)
            if stagnation_window is None:
                traces.append(run_experiment(run_cfg))
            else:
                traces.append(stagnation_run(run_cfg, stagnation_window, cap))
    reference = None
    if reference_generations:
        reference = {}
        for cfg in configs:
            if cfg.algorithm not in reference:
                long_run = run_experiment(replace(cfg, strategy="caste",
                                                  generations=reference_generations))
                reference[cfg.algorithm] = max(long_run.hypervolumes)
    return summarize(traces, threshold_fraction, hv_generation, reference)


# --- plotting --------------------------------------------------------------------


def plot_rows(traces: Sequence[RunTrace]) -> list[tuple]:
    rows = []
    for t in traces:
        for r in t.rows:
            rows.append((t.algorithm, t.strategy, t.seed, r["generation"], r["hypervolume"]))
    return rows


def emit_plot_data(traces: Sequence[RunTrace], out_dir, svg_name: str = "hypervolume.svg",
                   csv_name: str = "plot_data.csv") -> tuple[Path, Path]:
    """Write long-format hypervolume data and a median-per-generation chart."""
    if not traces or not any(t.rows for t in traces):
        raise UsageError("no generations to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = plot_rows(traces)
    csv_path = out_dir / csv_name
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "strategy", "seed", "generation", "hypervolume"])
        for r in rows:
            w.writerow([r[0], r[1], r[2], r[3], repr(r[4])])
    svg_path = out_dir / svg_name
    write_svg(median_series(traces), svg_path)
    return csv_path, svg_path


def median_series(traces: Sequence[RunTrace]) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Median hypervolume per generation for each algorithm/strategy label."""
    by_label: dict[str, dict[int, list[float]]] = {}
    multi_alg = len({t.algorithm for t in traces}) > 1
    for t in traces:
        label = f"{t.algorithm}/{t.strategy}" if multi_alg else t.strategy
        per_gen = by_label.setdefault(label, {})
        for r in t.rows:
            per_gen.setdefault(r["generation"], []).append(r["hypervolume"])
    out = {}
    for label, per_gen in by_label.items():
        gens = np.array(sorted(per_gen))
        out[label] = (gens, np.array([np.median(per_gen[g]) for g in gens]))
    return out


def write_svg(series: dict[str, tuple[np.ndarray, np.ndarray]], path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (gens, med) in series.items():
        ax.plot(gens, med, label=label.upper(), linewidth=1.2)
    ax.set_xlabel("Generation Number")
    ax.set_ylabel("Hypervolume")
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def load_traces(directory) -> list[RunTrace]:
    traces = []
    for path in sorted(Path(directory).glob("trace_*.csv")):
        stem = path.stem[len("trace_"):]
        try:
            rest, seed = stem.rsplit("_seed", 1)
            algorithm, strategy = rest.rsplit("_", 1)
            seed_val = int(seed)
        except ValueError:
            algorithm, strategy, seed_val = "", stem, 0
        traces.append(RunTrace.from_csv(path, algorithm, strategy, seed_val))
    return traces
