"""Adam (amsgrad) optimization of the ansatz and the minimal-depth search."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ansatz import Ansatz, AnsatzSpec
from .hamiltonians import GroundStateResult, HamiltonianSpec, ground_state
from .parallel import map_ordered, sample_seeds

__all__ = [
    "AdamState",
    "adam_step",
    "OptimizationTrace",
    "optimize",
    "min_layers_vqe",
    "LayerCapExceeded",
]

log = logging.getLogger(__name__)


class LayerCapExceeded(RuntimeError):
    pass


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    v_max: np.ndarray
    t: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, size: int, **hyper) -> "AdamState":
        z = np.zeros(size)
        return cls(z.copy(), z.copy(), z.copy(), **hyper)


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray):
    """One bias-corrected Adam update with the amsgrad running maximum.

    Returns the new parameters and the updated state (``state`` is modified in place).
    """
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.m.shape or np.shape(theta) != state.m.shape:
        raise ValueError("theta, grad and optimizer state have inconsistent lengths")
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    state.v_max = np.maximum(state.v_max, state.v)
    m_hat = state.m / (1 - state.beta1 ** state.t)
    v_hat = state.v_max / (1 - state.beta2 ** state.t)
    return theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps), state


@dataclass
class OptimizationTrace:
    """Per-iteration record; index ``i`` is the state after ``i`` updates."""

    theta: np.ndarray
    energies: np.ndarray
    fidelities: np.ndarray
    fidelity_iters: np.ndarray
    checkpoints: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def final_energy(self) -> float:
        return float(self.energies[-1])

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelities[-1])

    @property
    def best_energy(self) -> float:
        return float(np.min(self.energies))

    @property
    def n_iter(self) -> int:
        return len(self.energies) - 1

    def concat(self, other: "OptimizationTrace") -> "OptimizationTrace":
        """Append ``other`` (whose iteration 0 repeats our last entry)."""
        offset = self.n_iter
        cps = dict(self.checkpoints)
        cps.update({k + offset: v for k, v in other.checkpoints.items()})
        return OptimizationTrace(
            theta=other.theta,
            energies=np.concatenate([self.energies, other.energies[1:]]),
            fidelities=np.concatenate([self.fidelities, other.fidelities[1:]]),
            fidelity_iters=np.concatenate([self.fidelity_iters, other.fidelity_iters[1:] + offset]),
            checkpoints=cps,
            meta={**self.meta, **other.meta},
        )


def _ground_basis(gs: GroundStateResult) -> np.ndarray:
    if gs.space is not None:
        return gs.space
    return gs.state.amplitudes[:, None]


def optimize(spec: AnsatzSpec | Ansatz, theta0, max_iter: int,
             ground: GroundStateResult | None = None, fidelity_every: int = 1,
             checkpoint_every: int | None = None, recorder=None,
             **adam_hyper) -> OptimizationTrace:
    """Run exactly ``max_iter`` Adam iterations on the ansatz energy.

    Energies are recorded at every iteration and fidelities (against
    ``ground``, computed if not given) every ``fidelity_every`` iterations and
    at the end. ``recorder(iteration, energy, fidelity_or_None)`` is called as
    the trace grows.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    ansatz = spec if isinstance(spec, Ansatz) else Ansatz(spec)
    if ground is None:
        ground = ground_state(ansatz.spec.model)
    basis = _ground_basis(ground)
    theta = np.array(theta0, dtype=float)
    if theta.shape != (ansatz.n_params,):
        raise ValueError(f"expected {ansatz.n_params} parameters, got shape {theta.shape}")
    adam = AdamState.fresh(ansatz.n_params, **adam_hyper)
    energies = np.empty(max_iter + 1)
    fids, fid_iters = [], []
    checkpoints = {}
    for it in range(max_iter + 1):
        want_fid = it % fidelity_every == 0 or it == max_iter
        if it < max_iter:
            e, grad, fid = ansatz.energy_and_grad(theta, basis if want_fid else None)
        else:
            psi = ansatz.state_array(theta)
            e = float(np.vdot(psi, ansatz._apply_h(psi)).real)
            ov = basis.conj().T @ psi
            fid = float(np.vdot(ov, ov).real)
        energies[it] = e
        if want_fid:
            fids.append(min(fid, 1.0))
            fid_iters.append(it)
        if checkpoint_every and it % checkpoint_every == 0:
            checkpoints[it] = theta.copy()
        if recorder is not None:
            recorder(it, e, fid if want_fid else None)
        if it < max_iter:
            theta, adam = adam_step(adam, theta, grad)
    if not np.all(np.isfinite(energies)):
        raise FloatingPointError("non-finite energy encountered during optimization")
    return OptimizationTrace(
        theta=theta,
        energies=energies,
        fidelities=np.array(fids),
        fidelity_iters=np.array(fid_iters, dtype=int),
        checkpoints=checkpoints,
        meta={"ground_energy": ground.energy},
    )


def _vqe_sample(args):
    spec, seed, max_iter, ground = args
    from .strategies import init_random
    rng = np.random.default_rng(seed)
    trace = optimize(spec, init_random(spec.n_params, rng), max_iter, ground=ground,
                     fidelity_every=max_iter)
    return trace.final_fidelity, trace.final_energy


def min_layers_vqe(model: HamiltonianSpec | int, threshold: float, samples: int = 20,
                   seed: int = 0, strategy: str = "random", iters_per_param: int = 50,
                   m_start: int = 1, m_cap: int = 12, criterion: str = "fidelity",
                   mirror_tied: bool | None = None, workers: int | None = None) -> int:
    """Smallest depth for which every sample succeeds within ``iters_per_param * L`` iterations.

    ``criterion="fidelity"`` compares the final fidelity with ``threshold``;
    ``criterion="energy"`` instead requires the relative energy error to be
    at most ``1 - threshold``. A depth is abandoned at its first failing sample.
    """
    from .strategies import run_layer_recursive, split_budget

    if isinstance(model, int):
        model = HamiltonianSpec.heisenberg(model)
    if criterion not in ("fidelity", "energy"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if strategy not in ("random", "layer"):
        raise ValueError(f"unsupported strategy {strategy!r} for the depth search")
    ground = ground_state(model)
    seeds = sample_seeds(seed, samples)

    def success(fid, e):
        if criterion == "fidelity":
            return fid >= threshold
        return (e - ground.energy) / abs(ground.energy) <= 1 - threshold

    for M in range(m_start, m_cap + 1):
        spec = AnsatzSpec(model, M, mirror_tied)
        budget = iters_per_param * spec.n_params
        if strategy == "random":
            results = map_ordered(_vqe_sample, [(spec, s, budget, ground) for s in seeds],
                                  workers=workers, stop=lambda r: not success(*r))
        else:
            results = []
            for s in seeds:
                per_stage = split_budget(budget, M)
                tr = run_layer_recursive(spec, per_stage, np.random.default_rng(s), ground=ground)
                results.append((tr.final_fidelity, tr.final_energy))
                if not success(*results[-1]):
                    break
        ok = len(results) == samples and all(success(*r) for r in results)
        log.info("n=%d M=%d: %s (%d samples run)", model.n_qubits, M,
                 "success" if ok else "fail", len(results))
        if ok:
            return M
    raise LayerCapExceeded(f"no depth <= {m_cap} succeeded for all {samples} samples")

