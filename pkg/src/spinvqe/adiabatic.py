"""Digitized adiabatic preparation of the Heisenberg ground state.

The chain starts in the singlet product (ground state of the odd bonds) and the
even bonds are ramped linearly, ``H(t) = H_odd + (t / T_max) H_even``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh, expm

from .hamiltonians import HamiltonianSpec, hamiltonian_matrix
from .sim import (
    Circuit,
    GateDescriptor,
    PureState,
    apply_circuit,
    fidelity,
    prepare_singlet_product,
    sz_values,
)

__all__ = [
    "AdiabaticRun",
    "exact_evolve",
    "discrete_evolve",
    "min_tmax",
    "tmax_unit",
    "build_trotter_step",
    "build_adiabatic_circuit",
    "trotter_output",
    "min_layers_adiabatic",
    "resource_count",
    "target_ground_state",
    "StepSizeError",
    "SearchCapExceeded",
]

log = logging.getLogger(__name__)

ORDERS = ("ST1", "ST2")


class StepSizeError(RuntimeError):
    """Integrator could not meet its own step-halving accuracy check."""


class SearchCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class AdiabaticRun:
    n_qubits: int
    T_max: float
    M_steps: int
    order: str = "ST2"
    threshold: float = 0.99

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.M_steps < 1:
            raise ValueError(f"M_steps must be positive, got {self.M_steps}")
        if self.T_max <= 0:
            raise ValueError(f"T_max must be positive, got {self.T_max}")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")

    @property
    def dt(self) -> float:
        return self.T_max / self.M_steps


# ---------------------------------------------------------------------------
# S_z = 0 sector helpers
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _sector(n: int, J: float = 1.0):
    """Sector indices and the dense odd/even bond Hamiltonians restricted to them."""
    idx = np.flatnonzero(sz_values(n) == 0)
    h_odd = hamiltonian_matrix(HamiltonianSpec.adiabatic_instant(n, 0.0, J))
    h_full = hamiltonian_matrix(HamiltonianSpec.adiabatic_instant(n, 1.0, J))
    h_even = h_full - h_odd
    a = h_odd[idx][:, idx].toarray().real
    b = h_even[idx][:, idx].toarray().real
    return idx, a, b


def _embed(n: int, idx: np.ndarray, v: np.ndarray) -> PureState:
    amps = np.zeros(1 << n, dtype=complex)
    amps[idx] = v
    return PureState(n, amps)


@lru_cache(maxsize=16)
def _target_cached(n: int, J: float):
    idx, a, b = _sector(n, J)
    h = a + b
    if len(idx) <= 3000:
        evals, evecs = eigh(h, subset_by_index=[0, 1])
    else:
        from scipy.sparse.linalg import eigsh
        evals, evecs = eigsh(h, k=2, which="SA", tol=1e-12)
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
    if evals[1] - evals[0] < 1e-9:
        raise RuntimeError(f"Heisenberg ground state of n={n} is degenerate in the S_z=0 sector")
    return float(evals[0]), evecs[:, 0].astype(complex)


def target_ground_state(n: int, J: float = 1.0) -> PureState:
    """Heisenberg ground state of an even chain (unique global singlet)."""
    idx, _, _ = _sector(n, J)
    _, v = _target_cached(n, J)
    return _embed(n, idx, v)


def _sector_fidelity(n: int, v: np.ndarray, J: float = 1.0) -> float:
    _, gs = _target_cached(n, J)
    return float(abs(np.vdot(gs, v)) ** 2)


# ---------------------------------------------------------------------------
# continuous-time evolution
# ---------------------------------------------------------------------------


def _rk4(a: np.ndarray, b: np.ndarray, v: np.ndarray, T: float, n_steps: int) -> np.ndarray:
    # psi' = -i (A + t/T B) psi
    h = T / n_steps
    v = v.astype(complex).copy()
    ma, mb = -1j * a, -1j * b
    for j in range(n_steps):
        t = j * h
        s0, sm, s1 = t / T, (t + h / 2) / T, (t + h) / T
        k1 = ma @ v + s0 * (mb @ v)
        w = v + (h / 2) * k1
        k2 = ma @ w + sm * (mb @ w)
        w = v + (h / 2) * k2
        k3 = ma @ w + sm * (mb @ w)
        w = v + h * k3
        k4 = ma @ w + s1 * (mb @ w)
        v += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def exact_evolve(n: int, T_max: float, integrator_step: float | None = None,
                 J: float = 1.0, tol: float = 1e-6, max_halvings: int = 8) -> PureState:
    """Integrate the Schrodinger equation under the linear ramp from the singlet product.

    Fixed-step RK4 restricted to the ``S_z = 0`` sector. The step is halved
    until halving it changes the final ground-state fidelity by less than
    ``tol``; ``StepSizeError`` is raised if that needs more than
    ``max_halvings`` halvings.
    """
    if n % 2:
        raise ValueError(f"n must be even, got {n}")
    if T_max < 0:
        raise ValueError(f"T_max must be non-negative, got {T_max}")
    idx, a, b = _sector(n, J)
    v0 = prepare_singlet_product(n).amplitudes[idx]
    if T_max == 0:
        return _embed(n, idx, v0)
    if integrator_step is None:
        norm_est = np.abs(a).sum(axis=1).max() + np.abs(b).sum(axis=1).max()
        integrator_step = 0.15 / norm_est
    n_steps = max(1, int(np.ceil(T_max / integrator_step)))
    coarse = _rk4(a, b, v0, T_max, n_steps)
    f_coarse = _sector_fidelity(n, coarse, J)
    for _ in range(max_halvings):
        n_steps *= 2
        fine = _rk4(a, b, v0, T_max, n_steps)
        f_fine = _sector_fidelity(n, fine, J)
        if abs(f_fine - f_coarse) < tol:
            return _embed(n, idx, fine / np.linalg.norm(fine))
        coarse, f_coarse = fine, f_fine
    raise StepSizeError(
        f"fidelity still changes by {abs(f_fine - f_coarse):.2e} after {max_halvings} halvings"
    )


def discrete_evolve(n: int, T_max: float, M: int, J: float = 1.0) -> PureState:
    """Product of exact step propagators ``exp(-i H(k dt) dt)``, k = 1..M."""
    idx, a, b = _sector(n, J)
    v = prepare_singlet_product(n).amplitudes[idx]
    dt = T_max / M
    for k in range(1, M + 1):
        v = expm(-1j * dt * (a + (k * dt / T_max) * b)) @ v
    return _embed(n, idx, v)


def tmax_unit(n: int, J: float = 1.0) -> float:
    """Natural ramp-time quantum ``(N/4)^2 / J``, following ``T_max ~ N^2``."""
    return (n / 4) ** 2 / J


def min_tmax(n: int, threshold: float, J: float = 1.0, quantum: float | None = "auto",
             rel_tol: float = 0.01, t_start: float | None = None, cap: float = 1e5) -> float:
    """Smallest ramp time whose exact evolution reaches ``threshold`` fidelity.

    Doubling from ``t_start`` until the threshold is met, then bisection of
    the last bracket. With ``quantum`` set (default ``tmax_unit(n)``) the
    search runs over integer multiples of it; with ``quantum=None`` it is
    continuous and stops at ``rel_tol`` relative width. The upper end of the
    final bracket is returned.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    if quantum == "auto":
        quantum = tmax_unit(n, J)
    gs = target_ground_state(n, J)

    def ok(T):
        return fidelity(exact_evolve(n, T, J=J), gs) >= threshold

    if quantum is not None:
        if quantum <= 0:
            raise ValueError(f"quantum must be positive, got {quantum}")
        lo, hi = 0, 1
        while not ok(hi * quantum):
            lo, hi = hi, 2 * hi
            if hi * quantum > cap:
                raise SearchCapExceeded(f"no T_max <= {cap} reaches fidelity {threshold} at n={n}")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid * quantum):
                hi = mid
            else:
                lo = mid
        return hi * quantum

    if ok(0.0):
        return 0.0
    lo, hi = 0.0, t_start if t_start is not None else 0.5
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > cap:
            raise SearchCapExceeded(f"no T_max <= {cap} reaches fidelity {threshold} at n={n}")
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    log.debug("min_tmax n=%d F=%.4f -> %.4f", n, threshold, hi)
    return hi


# ---------------------------------------------------------------------------
# Trotter circuits
# ---------------------------------------------------------------------------


def _bond_layer(n: int, parity: int, tau: float, J: float) -> list:
    # exp(-i J sigma.sigma tau) on each bond of the given parity (0 = odd bonds 1-2, 3-4, ...)
    theta = -J * tau
    return [GateDescriptor.entangler(i, i + 1, theta, theta, theta)
            for i in range(parity, n - 1, 2)]


def build_trotter_step(k: int, dt: float, order: str, n: int, T_max: float | None = None,
                       M: int | None = None, J: float = 1.0) -> Circuit:
    """One Suzuki-Trotter layer for step ``k`` of the ramp.

    Pass either ``T_max`` or the total step count ``M`` (``T_max = M dt``).
    """
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")
    if T_max is None:
        if M is None:
            raise ValueError("need T_max or M")
        T_max = M * dt
    if k < 1 or (M is not None and k > M) or (T_max > 0 and k * dt > T_max * (1 + 1e-12)):
        raise ValueError(f"step index {k} out of range")
    even_tau = k * dt * dt / T_max if T_max > 0 else 0.0
    if order == "ST1":
        gates = _bond_layer(n, 0, dt, J) + _bond_layer(n, 1, even_tau, J)
    else:
        gates = (_bond_layer(n, 0, dt / 2, J) + _bond_layer(n, 1, even_tau, J)
                 + _bond_layer(n, 0, dt / 2, J))
    return Circuit(n, gates)


def build_adiabatic_circuit(run: AdiabaticRun, J: float = 1.0) -> Circuit:
    n, M = run.n_qubits, run.M_steps
    circ = Circuit(n)
    for k in range(1, M + 1):
        circ.extend(build_trotter_step(k, run.dt, run.order, n, T_max=run.T_max, J=J).gates)
        circ.mark_layer()
    return circ


def trotter_output(run: AdiabaticRun, J: float = 1.0) -> PureState:
    state = prepare_singlet_product(run.n_qubits)
    return apply_circuit(state, build_adiabatic_circuit(run, J))


def _trotter_fidelity(n, T_max, M, order, J):
    out = trotter_output(AdiabaticRun(n, T_max, M, order), J)
    return fidelity(out, target_ground_state(n, J))


def min_layers_adiabatic(n: int, threshold: float, order: str, T_max: float | None = None,
                         J: float = 1.0, m_cap: int = 100_000) -> int:
    """Smallest Trotter depth whose circuit output reaches ``threshold``.

    ``T_max`` defaults to ``min_tmax(n, threshold)``. The depth is found by
    doubling and then integer bisection.
    """
    if T_max is None:
        T_max = min_tmax(n, threshold, J=J)
    if T_max == 0:
        return 0

    def ok(M):
        return _trotter_fidelity(n, T_max, M, order, J) >= threshold

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > m_cap:
            raise SearchCapExceeded(f"no depth <= {m_cap} reaches fidelity {threshold}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def resource_count(n: int, M: int, order: str) -> dict:
    """Layers and CNOTs of an ``M``-step Trotter circuit (3 CNOTs per entangler)."""
    if order == "ST1":
        per_layer = n - 1
    elif order == "ST2":
        per_layer = 3 * n // 2 - 1
    else:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")
    return {"layers": M, "cnots": 3 * per_layer * M}
