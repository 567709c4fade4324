"""Configuration-driven experiment runner with JSON records and CSV outputs.

Every run writes into ``config.output``:

* ``record.json``  self-describing record (config echo, summary, seeds, timing)
* ``traces.csv``   ``run_id,iteration,energy,fidelity`` for optimization runs
* ``table.csv``    per-cell result rows (experiment specific columns)
* ``summary.txt``  human-readable table
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .adiabatic import min_layers_adiabatic, min_tmax, resource_count
from .ansatz import AnsatzSpec
from .hamiltonians import ITERATIVE_LIMIT, HamiltonianSpec, ground_state
from .noise import MIXED_STATE_LIMIT, avg_noisy_fidelity, noisy_mixed_fidelity
from .parallel import map_ordered, sample_seeds, seed_lineage
from .sim import cnot_count
from .strategies import STRATEGIES, run_ensemble, run_strategy
from .vqe import min_layers_vqe

__all__ = [
    "KINDS",
    "SCHEMA_VERSION",
    "ConfigError",
    "ResourceRefusal",
    "ExperimentConfig",
    "load_config",
    "run",
    "emit_plot_data",
    "FIGURES",
]

log = logging.getLogger(__name__)

KINDS = ("adiabatic-sweep", "vqe-run", "strategy-compare", "noise-eval", "resource-table")
SCHEMA_VERSION = 1
TRACE_COLUMNS = ("run_id", "iteration", "energy", "fidelity")
PURE_STATE_LIMIT = ITERATIVE_LIMIT
# exact-evolution searches keep dense S_z = 0 blocks
ADIABATIC_LIMIT = 14


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ResourceRefusal(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    output: str = "results"
    model: dict = field(default_factory=lambda: {"model": "heisenberg"})
    n: list = field(default_factory=lambda: [4])
    thresholds: list = field(default_factory=lambda: [0.99])
    orders: list = field(default_factory=lambda: ["ST1", "ST2"])
    layers: list = field(default_factory=lambda: [2])
    budget: int | None = None
    iters_per_param: int = 50
    samples: int = 20
    strategies: list = field(default_factory=lambda: list(STRATEGIES))
    report_iters: list = field(default_factory=list)
    tmax_quantum: str | float | None = "auto"
    methods: list = field(default_factory=lambda: ["ST1", "ST2", "VQE"])
    h_values: list = field(default_factory=lambda: [0.0, 0.05, 0.1])
    gamma_values: list = field(default_factory=lambda: [0.0, 0.0125])
    realizations: int = 100
    restarts: int = 4

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        if "seed" not in raw or raw["seed"] is None:
            raise ConfigError("seed", "master seed is mandatory")
        if "kind" not in raw:
            raise ConfigError("kind", "experiment kind is mandatory")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def model_spec(self, n: int) -> HamiltonianSpec:
        params = dict(self.model)
        params.setdefault("model", "heisenberg")
        try:
            return HamiltonianSpec(n_qubits=n, **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError("model", str(exc)) from None

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        if isinstance(self.n, int):
            self.n = [self.n]
        if isinstance(self.layers, int):
            self.layers = [self.layers]
        if not self.n or any(not isinstance(v, int) or v < 2 or v % 2 for v in self.n):
            raise ConfigError("n", f"must be a list of even integers >= 2, got {self.n!r}")
        for t in self.thresholds:
            if not isinstance(t, (int, float)) or not 0 < t < 1:
                raise ConfigError("thresholds", f"each threshold must lie in (0, 1), got {t!r}")
        for o in self.orders:
            if o not in ("ST1", "ST2"):
                raise ConfigError("orders", f"unknown Trotter order {o!r}")
        if not self.layers or any(not isinstance(m, int) or m < 1 for m in self.layers):
            raise ConfigError("layers", f"must be positive integers, got {self.layers!r}")
        if self.budget is not None and (not isinstance(self.budget, int) or self.budget < 1):
            raise ConfigError("budget", f"must be a positive integer, got {self.budget!r}")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ConfigError("samples", f"must be a positive integer, got {self.samples!r}")
        if not isinstance(self.iters_per_param, int) or self.iters_per_param < 1:
            raise ConfigError("iters_per_param", "must be a positive integer")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError("strategies", f"unknown strategy {s!r}")
        for m in self.methods:
            if m not in ("ST1", "ST2", "VQE"):
                raise ConfigError("methods", f"unknown method {m!r}")
        if any(h < 0 for h in self.h_values):
            raise ConfigError("h_values", "noise strengths must be >= 0")
        if any(g < 0 for g in self.gamma_values):
            raise ConfigError("gamma_values", "dephasing rates must be >= 0")
        if not isinstance(self.realizations, int) or self.realizations < 1:
            raise ConfigError("realizations", "must be a positive integer")
        if not isinstance(self.restarts, int) or self.restarts < 1:
            raise ConfigError("restarts", "must be a positive integer")
        if self.tmax_quantum not in ("auto", None) and not (
                isinstance(self.tmax_quantum, (int, float)) and self.tmax_quantum > 0):
            raise ConfigError("tmax_quantum", "must be 'auto', null or a positive number")
        for n in self.n:
            self.model_spec(n)

    def check_resources(self):
        limit = PURE_STATE_LIMIT
        if self.kind == "adiabatic-sweep" or (
                self.kind == "resource-table" and {"ST1", "ST2"} & set(self.methods)):
            limit = ADIABATIC_LIMIT
        if self.kind == "noise-eval" and self.gamma_values:
            limit = MIXED_STATE_LIMIT
        big = [n for n in self.n if n > limit]
        if big:
            raise ResourceRefusal(f"n={big} exceeds the simulator limit {limit} for {self.kind}")


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML (or JSON) config file, apply ``overrides`` and validate."""
    text = Path(path).read_text(encoding="utf-8")
    raw = yaml.safe_load(text) or {}
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def _trace_rows(run_id: str, trace) -> list:
    fid = dict(zip(trace.fidelity_iters.tolist(), trace.fidelities.tolist()))
    return [(run_id, i, float(e), fid.get(i, "")) for i, e in enumerate(trace.energies)]


def _summary_text(title: str, header, rows) -> str:
    cells = [list(map(str, header))] + [[_short(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = [title, ""]
    for j, r in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


class _Checkpoint:
    """Completed-cell cache so interrupted searches resume where they stopped."""

    def __init__(self, path: Path, echo: dict):
        self.path = path
        self.echo = echo
        self.cells = {}
        if path.exists():
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("config") == echo:
                self.cells = data.get("cells", {})

    def get(self, key):
        return self.cells.get(key)

    def put(self, key, value):
        self.cells[key] = value
        self.path.write_text(json.dumps({"config": self.echo, "cells": self.cells}, indent=1),
                             encoding="utf-8")


# ---------------------------------------------------------------------------
# experiment kinds
# ---------------------------------------------------------------------------


def _adiabatic_cell(args):
    n, thr, order, quantum = args
    T = min_tmax(n, thr, quantum=quantum)
    M = min_layers_adiabatic(n, thr, order, T_max=T)
    return {"n": n, "threshold": thr, "order": order, "T_max": T, "M_star": M,
            "cnots": resource_count(n, M, order)["cnots"]}


def _run_adiabatic_sweep(cfg: ExperimentConfig, ckpt: _Checkpoint):
    cells = [(n, t, o, cfg.tmax_quantum) for n in cfg.n for t in cfg.thresholds for o in cfg.orders]
    todo = [c for c in cells if ckpt.get(_key(c[:3])) is None]
    for res in map_ordered(_adiabatic_cell, todo):
        ckpt.put(_key((res["n"], res["threshold"], res["order"])), res)
    rows = [ckpt.get(_key(c[:3])) for c in cells]
    header = ("n", "threshold", "order", "T_max", "M_star", "cnots")
    return {"rows": rows, "table_header": header, "traces": []}


def _key(parts) -> str:
    return "|".join(map(str, parts))


def _budget(cfg, spec):
    return cfg.budget if cfg.budget is not None else cfg.iters_per_param * spec.n_params


def _run_vqe(cfg: ExperimentConfig, ckpt: _Checkpoint):
    rows, traces, params = [], [], {}
    strategy = cfg.strategies[0]
    for n in cfg.n:
        model = cfg.model_spec(n)
        ground = ground_state(model)
        for M in cfg.layers:
            spec = AnsatzSpec(model, M)
            budget = _budget(cfg, spec)
            seeds = sample_seeds(cfg.seed, cfg.samples)
            for i, s in enumerate(seeds):
                run_id = f"n{n}-M{M}-{strategy}-s{i}"
                tr = run_strategy(strategy, spec, budget, np.random.default_rng(s), ground)
                traces.extend(_trace_rows(run_id, tr))
                params[run_id] = tr.theta.tolist()
                rows.append({"run_id": run_id, "n": n, "layers": M, "strategy": strategy,
                             "n_params": spec.n_params, "iterations": tr.n_iter,
                             "final_energy": tr.final_energy,
                             "final_fidelity": tr.final_fidelity,
                             "ground_energy": ground.energy})
    header = ("run_id", "n", "layers", "strategy", "n_params", "iterations", "final_energy",
              "final_fidelity", "ground_energy")
    return {"rows": rows, "table_header": header, "traces": traces, "params": params}


def _run_strategy_compare(cfg: ExperimentConfig, ckpt: _Checkpoint):
    rows, traces, series = [], [], []
    for n in cfg.n:
        model = cfg.model_spec(n)
        for M in cfg.layers:
            spec = AnsatzSpec(model, M)
            budget = _budget(cfg, spec)
            report = cfg.report_iters or [budget]
            for kind in cfg.strategies:
                stats = run_ensemble(kind, spec, cfg.samples, budget, seed=cfg.seed,
                                     keep_traces=True)
                for i, tr in enumerate(stats.traces):
                    traces.extend(_trace_rows(f"n{n}-M{M}-{kind}-s{i}", tr))
                for it in report:
                    mean, std = stats.at(it)
                    rows.append({"n": n, "layers": M, "strategy": kind, "iteration": it,
                                 "mean_fidelity": mean, "std_fidelity": std,
                                 "samples": cfg.samples})
                for it, mf, sf, me, se in zip(stats.iterations, stats.mean_fidelity,
                                              stats.std_fidelity, stats.mean_energy,
                                              stats.std_energy):
                    series.append({"series": f"n{n}-M{M}-{kind}", "iteration": int(it),
                                   "mean_fidelity": float(mf), "std_fidelity": float(sf),
                                   "mean_energy": float(me), "std_energy": float(se)})
    header = ("n", "layers", "strategy", "iteration", "mean_fidelity", "std_fidelity", "samples")
    return {"rows": rows, "table_header": header, "traces": traces, "series": series}


def _run_noise(cfg: ExperimentConfig, ckpt: _Checkpoint):
    rows = []
    n, M = cfg.n[0], cfg.layers[0]
    model = cfg.model_spec(n)
    ground = ground_state(model)
    spec = AnsatzSpec(model, M)
    budget = _budget(cfg, spec)
    # best of several noiseless optimizations supplies theta*
    best = None
    traces = []
    for i, s in enumerate(sample_seeds(cfg.seed, cfg.restarts)):
        tr = run_strategy("layer", spec, budget, np.random.default_rng(s), ground)
        traces.extend(_trace_rows(f"train-s{i}", tr))
        if best is None or tr.final_fidelity > best.final_fidelity:
            best = tr
    theta = best.theta
    noise_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(10**6,)))
    for h in cfg.h_values:
        res = avg_noisy_fidelity(spec, theta, h, cfg.realizations, noise_rng, ground)
        rows.append({"noise": "cnot_phase", "strength": h, "mean_fidelity": res["mean"],
                     "std_fidelity": res["std"], "realizations": cfg.realizations})
    for g in cfg.gamma_values:
        f = noisy_mixed_fidelity(spec, theta, g, ground)
        rows.append({"noise": "dephasing", "strength": g, "mean_fidelity": f,
                     "std_fidelity": 0.0, "realizations": 1})
    header = ("noise", "strength", "mean_fidelity", "std_fidelity", "realizations")
    return {"rows": rows, "table_header": header, "traces": traces,
            "params": {"theta_star": theta.tolist()},
            "extra": {"noiseless_fidelity": best.final_fidelity,
                      "cnots": cnot_count(_bind(spec, theta))}}


def _bind(spec, theta):
    from .ansatz import Ansatz
    return Ansatz(spec).bind(theta)


def _run_resource_table(cfg: ExperimentConfig, ckpt: _Checkpoint):
    rows = []
    thr = cfg.thresholds[0]
    for n in cfg.n:
        for method in cfg.methods:
            key = _key((n, thr, method))
            cell = ckpt.get(key)
            if cell is None:
                if method == "VQE":
                    M = min_layers_vqe(cfg.model_spec(n), thr, samples=cfg.samples,
                                       seed=cfg.seed, iters_per_param=cfg.iters_per_param)
                    cnots = 3 * (n - 1) * M
                else:
                    T = min_tmax(n, thr, quantum=cfg.tmax_quantum)
                    M = min_layers_adiabatic(n, thr, method, T_max=T)
                    cnots = resource_count(n, M, method)["cnots"]
                cell = {"n": n, "method": method, "M_star": M, "cnots": cnots}
                ckpt.put(key, cell)
            rows.append(cell)
    return {"rows": rows, "table_header": ("n", "method", "M_star", "cnots"), "traces": []}


_RUNNERS = {
    "adiabatic-sweep": _run_adiabatic_sweep,
    "vqe-run": _run_vqe,
    "strategy-compare": _run_strategy_compare,
    "noise-eval": _run_noise,
    "resource-table": _run_resource_table,
}


def run(cfg: ExperimentConfig | dict) -> dict:
    """Validate, dispatch and write outputs; returns the record dictionary."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    cfg.validate()
    cfg.check_resources()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    echo = cfg.to_dict()
    ckpt = _Checkpoint(out / "checkpoint.json", echo)
    start = time.perf_counter()
    result = _RUNNERS[cfg.kind](cfg, ckpt)
    elapsed = time.perf_counter() - start

    header = result["table_header"]
    rows = result["rows"]
    _write_csv(out / "table.csv", header, [[r[h] for h in header] for r in rows])
    _write_csv(out / "traces.csv", TRACE_COLUMNS, result["traces"])
    (out / "summary.txt").write_text(
        _summary_text(f"{cfg.kind} (seed {cfg.seed})", header,
                      [[r[h] for h in header] for r in rows]),
        encoding="utf-8", newline="\n")
    record = {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "kind": cfg.kind,
        "config": echo,
        "rows": rows,
        "series": result.get("series", []),
        "params": result.get("params", {}),
        "extra": result.get("extra", {}),
        "trace_file": "traces.csv",
        "n_trace_rows": len(result["traces"]),
        "seed_lineage": seed_lineage(
            cfg.seed, cfg.restarts if cfg.kind == "noise-eval" else cfg.samples),
        "wall_clock_s": elapsed,
    }
    (out / "record.json").write_text(json.dumps(record, indent=1), encoding="utf-8",
                                     newline="\n")
    return record


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

FIGURES = {
    # figure kind: (record kind, columns)
    "fig2": ("adiabatic-sweep", ("series", "n", "threshold", "cnots", "M_star")),
    "fig4": ("strategy-compare", ("series", "iteration", "mean_fidelity", "std")),
    "fig4-energy": ("strategy-compare", ("series", "iteration", "mean_energy", "std")),
    "fig6a": ("noise-eval", ("series", "h", "mean_fidelity", "std")),
    "fig6b": ("noise-eval", ("series", "gamma_dt", "fidelity", "std")),
}


def emit_plot_data(record: dict | str | Path, figure: str, path: str | Path) -> Path:
    """Write the long-form series behind a figure; first column is the series label."""
    if not isinstance(record, dict):
        record = json.loads(Path(record).read_text(encoding="utf-8"))
    if figure not in FIGURES:
        raise ValueError(f"unknown figure kind {figure!r}; choose from {sorted(FIGURES)}")
    want_kind, header = FIGURES[figure]
    if not record or not record.get("rows"):
        raise ValueError("record has no results to plot")
    if record.get("kind") != want_kind:
        raise ValueError(f"{figure} needs a {want_kind} record, got {record.get('kind')!r}")
    rows = []
    if figure == "fig2":
        for r in record["rows"]:
            rows.append((r["order"], r["n"], r["threshold"], r["cnots"], r["M_star"]))
    elif figure.startswith("fig4"):
        if not record.get("series"):
            raise ValueError("record has no per-iteration series")
        for s in record["series"]:
            if figure == "fig4":
                rows.append((s["series"], s["iteration"], s["mean_fidelity"], s["std_fidelity"]))
            else:
                rows.append((s["series"], s["iteration"], s["mean_energy"], s["std_energy"]))
    else:
        noise = "cnot_phase" if figure == "fig6a" else "dephasing"
        for r in record["rows"]:
            if r["noise"] == noise:
                rows.append((noise, r["strength"], r["mean_fidelity"], r["std_fidelity"]))
        if not rows:
            raise ValueError(f"record has no {noise} rows")
    path = Path(path)
    _write_csv(path, header, rows)
    return path
