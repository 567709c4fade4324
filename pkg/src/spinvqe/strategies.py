"""Initialization strategies for the variational loop and seeded ensembles.

* random: every parameter drawn from a standard normal.
* qubit recursive: an optimized half-size circuit is copied onto both halves
  of the chain, with a fresh random entangler joining them in every layer.
* layer recursive: the circuit grows one layer at a time, the new layer
  starting from a copy of the previously optimized last layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import Ansatz, AnsatzSpec
from .hamiltonians import GroundStateResult, HamiltonianSpec, ground_state
from .parallel import map_ordered, sample_seeds, seed_lineage
from .vqe import OptimizationTrace, optimize

__all__ = [
    "STRATEGIES",
    "StrategyConfig",
    "EnsembleStats",
    "init_random",
    "init_qubit_recursive",
    "run_random",
    "run_qubit_recursive",
    "run_layer_recursive",
    "run_strategy",
    "split_budget",
    "run_ensemble",
]

STRATEGIES = ("random", "qubit", "layer")


@dataclass(frozen=True)
class StrategyConfig:
    kind: str
    seed: int
    samples: int = 20
    budget: int = 1000
    # qubit recursive: iterations spent on the half-size system (None: 50 L_half)
    half_iters: int | None = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"kind must be one of {STRATEGIES}, got {self.kind!r}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")


@dataclass
class EnsembleStats:
    iterations: np.ndarray
    mean_fidelity: np.ndarray
    std_fidelity: np.ndarray
    mean_energy: np.ndarray
    std_energy: np.ndarray
    final_fidelities: np.ndarray
    final_energies: np.ndarray
    traces: list = field(default_factory=list, repr=False)
    seeds: list = field(default_factory=list)

    @property
    def samples(self) -> int:
        return len(self.final_fidelities)

    def at(self, iteration: int) -> tuple:
        """Mean and standard deviation of the fidelity at ``iteration``."""
        i = int(np.searchsorted(self.iterations, iteration))
        if i >= len(self.iterations) or self.iterations[i] != iteration:
            raise KeyError(f"iteration {iteration} not recorded")
        return float(self.mean_fidelity[i]), float(self.std_fidelity[i])


def init_random(L: int, rng: np.random.Generator) -> np.ndarray:
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    return rng.standard_normal(L)


def init_qubit_recursive(theta_half, half_spec: AnsatzSpec, full_spec: AnsatzSpec,
                         rng: np.random.Generator) -> np.ndarray:
    """Seed a chain of ``2 n`` sites from optimized parameters of ``n`` sites.

    Each full layer copies the half-system layer onto both halves; the bond
    joining the halves gets a standard-normal angle. Phases are copied site by
    site onto the left half, and the mirror tying of the full circuit then
    reproduces the same pattern on the right half. Full-system layers beyond
    the half-system depth repeat the previous full layer.
    """
    n_half, n = half_spec.n_qubits, full_spec.n_qubits
    if n != 2 * n_half:
        raise ValueError(f"full system ({n}) must be twice the half system ({n_half})")
    if full_spec.layers < half_spec.layers:
        raise ValueError("full system cannot have fewer layers than the half system")
    half = Ansatz(half_spec)
    theta_half = np.asarray(theta_half, dtype=float)
    if theta_half.shape != (half.n_params,):
        raise ValueError(f"expected {half.n_params} half-system parameters")
    full = Ansatz(full_spec)
    theta = np.empty(full.n_params)
    junction = n_half - 1
    for layer in range(full_spec.layers):
        block = theta[full.layer_slice(layer)]
        if layer >= half_spec.layers:
            block[:] = theta[full.layer_slice(layer - 1)]
            continue
        site_half = half.site_phases(theta_half, layer)
        sites = np.concatenate([site_half, site_half])
        # invert the full tying: one representative site per parameter
        phases = np.empty(full.n_phase)
        phases[full.phase_index] = full.phase_sign * sites
        block[: full.n_phase] = phases
        bonds_half = half.bond_angles(theta_half, layer)
        bonds = np.empty(n - 1)
        bonds[:junction] = bonds_half
        bonds[junction] = rng.standard_normal()
        bonds[junction + 1:] = bonds_half
        block[full.n_phase:] = bonds
    return theta


def _ground(model: HamiltonianSpec, ground):
    return ground if ground is not None else ground_state(model)


def run_random(spec: AnsatzSpec, budget: int, rng: np.random.Generator,
               ground: GroundStateResult | None = None, **adam_hyper) -> OptimizationTrace:
    theta0 = init_random(spec.n_params, rng)
    return optimize(spec, theta0, budget, ground=_ground(spec.model, ground), **adam_hyper)


def run_qubit_recursive(spec: AnsatzSpec, budget: int, rng: np.random.Generator,
                        ground: GroundStateResult | None = None, half_layers: int | None = None,
                        half_iters: int | None = None, **adam_hyper) -> OptimizationTrace:
    """Optimize the half chain from a random start, then the full chain from its copy.

    The returned trace covers only the full-chain iterations; the half-chain
    cost is stored in ``meta["half_iters"]``.
    """
    model = spec.model
    if model.n_qubits % 4:
        raise ValueError(f"qubit recursion needs n divisible by 4, got {model.n_qubits}")
    half_model = HamiltonianSpec(**{**model.to_dict(), "n_qubits": model.n_qubits // 2})
    half_spec = AnsatzSpec(half_model, half_layers or spec.layers, spec.mirror_tied)
    if half_iters is None:
        half_iters = 50 * half_spec.n_params
    half_trace = optimize(half_spec, init_random(half_spec.n_params, rng), half_iters,
                          fidelity_every=half_iters, **adam_hyper)
    theta0 = init_qubit_recursive(half_trace.theta, half_spec, spec, rng)
    trace = optimize(spec, theta0, budget, ground=_ground(model, ground), **adam_hyper)
    trace.meta.update(half_iters=half_iters, half_final_fidelity=half_trace.final_fidelity)
    return trace


def run_layer_recursive(spec: AnsatzSpec, iters_per_stage, rng: np.random.Generator,
                        ground: GroundStateResult | None = None, **adam_hyper) -> OptimizationTrace:
    """Grow the circuit to ``spec.layers`` layers, optimizing after each addition.

    ``iters_per_stage`` is an int or one count per stage. Fidelities and
    energies of every stage are concatenated against the cumulative iteration
    count.
    """
    M = spec.layers
    if np.ndim(iters_per_stage) == 0:
        iters_per_stage = [int(iters_per_stage)] * M
    if len(iters_per_stage) != M:
        raise ValueError(f"need {M} stage budgets, got {len(iters_per_stage)}")
    ground = _ground(spec.model, ground)
    trace = None
    theta = None
    for m in range(1, M + 1):
        stage = spec.with_layers(m)
        if theta is None:
            theta0 = init_random(stage.n_params, rng)
        else:
            ppl = stage.params_per_layer
            theta0 = np.concatenate([theta, theta[-ppl:]])
        tr = optimize(stage, theta0, iters_per_stage[m - 1], ground=ground, **adam_hyper)
        tr.meta[f"stage_{m}_energy"] = tr.final_energy
        trace = tr if trace is None else trace.concat(tr)
        theta = tr.theta
    trace.meta["stage_iters"] = list(iters_per_stage)
    return trace


def split_budget(total: int, parts: int) -> list:
    """Split ``total`` iterations into ``parts`` near-equal stages (remainder last)."""
    base, rem = divmod(total, parts)
    return [base + (1 if i >= parts - rem else 0) for i in range(parts)]


def run_strategy(kind: str, spec: AnsatzSpec, budget: int, rng: np.random.Generator,
                 ground: GroundStateResult | None = None, half_iters: int | None = None,
                 **adam_hyper) -> OptimizationTrace:
    """Run one strategy with ``budget`` full-system iterations."""
    if kind == "random":
        return run_random(spec, budget, rng, ground, **adam_hyper)
    if kind == "qubit":
        return run_qubit_recursive(spec, budget, rng, ground, half_iters=half_iters, **adam_hyper)
    if kind == "layer":
        return run_layer_recursive(spec, split_budget(budget, spec.layers), rng, ground,
                                   **adam_hyper)
    raise ValueError(f"unknown strategy {kind!r}")


def _ensemble_member(args):
    kind, spec, budget, seed, ground, half_iters = args
    return run_strategy(kind, spec, budget, np.random.default_rng(seed), ground, half_iters)


def run_ensemble(kind: str, spec: AnsatzSpec, samples: int, budget: int, seed: int = 0,
                 half_iters: int | None = None, workers: int | None = None,
                 keep_traces: bool = False) -> EnsembleStats:
    """Independent seeded runs of one strategy with per-iteration statistics."""
    cfg = StrategyConfig(kind, seed, samples, budget, half_iters)
    ground = ground_state(spec.model)
    jobs = [(cfg.kind, spec, budget, s, ground, half_iters) for s in sample_seeds(seed, samples)]
    traces = map_ordered(_ensemble_member, jobs, workers=workers)
    iters = traces[0].fidelity_iters
    fid = np.stack([t.fidelities for t in traces])
    en = np.stack([t.energies[iters] for t in traces])
    return EnsembleStats(
        iterations=iters,
        mean_fidelity=fid.mean(axis=0),
        std_fidelity=fid.std(axis=0),
        mean_energy=en.mean(axis=0),
        std_energy=en.std(axis=0),
        final_fidelities=fid[:, -1],
        final_energies=en[:, -1],
        traces=traces if keep_traces else [],
        seeds=seed_lineage(seed, samples),
    )
