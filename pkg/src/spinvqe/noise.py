"""Gate and decoherence noise on optimized variational circuits.

Two error models:

* imperfect CNOTs realized through an Ising interaction whose angle carries a
  random offset ``phi ~ U[-h, h]``;
* per-layer dephasing, where every qubit's coherences decay by
  ``exp(-2 gamma_dt)`` after each layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import Ansatz, AnsatzSpec
from .hamiltonians import GroundStateResult, ground_state
from .sim import (
    PAULI_X,
    PAULI_Z,
    Circuit,
    GateDescriptor,
    MixedState,
    apply_circuit,
    apply_gate,
    decompose_entangler,
    mixed_fidelity,
    prepare_singlet_product,
)

__all__ = [
    "NoiseConfig",
    "noisy_cnot",
    "expand_entanglers",
    "sample_noisy_circuit",
    "avg_noisy_fidelity",
    "dephasing_channel",
    "noisy_layered_output",
    "noisy_mixed_fidelity",
    "MIXED_STATE_LIMIT",
]

MIXED_STATE_LIMIT = 12

_HADAMARD = (PAULI_X + PAULI_Z) / np.sqrt(2)
_H2 = np.kron(np.eye(2), _HADAMARD)
_Z1 = np.kron(PAULI_Z, np.eye(2))
_Z2 = np.kron(np.eye(2), PAULI_Z)
_ZZ = np.kron(PAULI_Z, PAULI_Z)


@dataclass(frozen=True)
class NoiseConfig:
    h: float = 0.0
    gamma_dt: float = 0.0
    realizations: int = 100

    def __post_init__(self):
        if self.h < 0:
            raise ValueError(f"h must be >= 0, got {self.h}")
        if self.gamma_dt < 0:
            raise ValueError(f"gamma_dt must be >= 0, got {self.gamma_dt}")
        if self.realizations < 1:
            raise ValueError(f"realizations must be >= 1, got {self.realizations}")


def _diag_exp(diag_op: np.ndarray, angle: float) -> np.ndarray:
    # exp(i angle D) for a diagonal Pauli product D
    return np.diag(np.exp(1j * angle * np.diag(diag_op)))


def noisy_cnot(phi: float) -> np.ndarray:
    """CNOT (control = first qubit) built from an Ising pulse with angle error ``phi``.

    ``sqrt(i) H2 exp(i Z1 Z2 (pi/4 + phi)) exp(-i Z1 pi/4) exp(-i Z2 pi/4) H2``;
    exactly the CNOT matrix at ``phi = 0``.
    """
    q = np.pi / 4
    core = _diag_exp(_ZZ, q + phi) @ _diag_exp(_Z1, -q) @ _diag_exp(_Z2, -q)
    return np.sqrt(1j) * (_H2 @ core @ _H2)


def expand_entanglers(circuit: Circuit) -> Circuit:
    """Replace every Entangler by its 3-CNOT decomposition; layer marks follow."""
    out = Circuit(circuit.n_qubits)
    marks = set(circuit.layer_marks or [])
    for i, g in enumerate(circuit.gates):
        if i in marks and out.gates:
            out.mark_layer()
        if g.kind == "Entangler":
            out.extend(decompose_entangler(*g.angles, q0=g.qubits[0], q1=g.qubits[1],
                                           n_qubits=circuit.n_qubits).gates)
        else:
            out.append(g)
    if circuit.layer_marks and len(circuit.gates) in marks:
        out.mark_layer()
    return out


def sample_noisy_circuit(circuit: Circuit, h: float, rng: np.random.Generator) -> Circuit:
    """Expand entanglers and swap each CNOT for ``noisy_cnot(phi)``, ``phi ~ U[-h, h]``."""
    if h < 0:
        raise ValueError(f"h must be >= 0, got {h}")
    expanded = expand_entanglers(circuit)
    gates = []
    for g in expanded.gates:
        if g.kind == "CNOT":
            phi = rng.uniform(-h, h)
            gates.append(GateDescriptor.fixed(g.qubits[0], g.qubits[1], noisy_cnot(phi), cost=1))
        else:
            gates.append(g)
    return Circuit(circuit.n_qubits, gates, expanded.layer_marks)


def avg_noisy_fidelity(spec: AnsatzSpec, theta, h: float, realizations: int = 100,
                       rng: np.random.Generator | int | None = None,
                       ground: GroundStateResult | None = None) -> dict:
    """Mean and spread of the ground-state fidelity over random CNOT errors."""
    if realizations < 1:
        raise ValueError(f"realizations must be >= 1, got {realizations}")
    rng = np.random.default_rng(rng)
    ground = ground if ground is not None else ground_state(spec.model)
    circuit = Ansatz(spec).bind(theta)
    psi0 = prepare_singlet_product(spec.n_qubits)
    values = np.empty(realizations)
    for r in range(realizations):
        noisy = sample_noisy_circuit(circuit, h, rng)
        values[r] = ground.fidelity(apply_circuit(psi0.copy(), noisy))
    return {"mean": float(values.mean()), "std": float(values.std()), "values": values}


def dephasing_channel(rho: MixedState, gamma_dt: float) -> MixedState:
    """Independent phase flips ``(1-p) rho + p Z_k rho Z_k`` on every qubit.

    ``p = (1 - exp(-2 gamma_dt)) / 2`` is the solution of the dephasing
    master equation over one layer. Returns a new state.
    """
    if gamma_dt < 0:
        raise ValueError(f"gamma_dt must be >= 0, got {gamma_dt}")
    n = rho.n_qubits
    p = 0.5 * (1.0 - np.exp(-2.0 * gamma_dt))
    out = rho.matrix.copy()
    if p == 0:
        return MixedState(n, out)
    idx = np.arange(1 << n)
    for k in range(n):
        z = 1 - 2 * ((idx >> (n - 1 - k)) & 1)
        # Z_k rho Z_k flips the sign of entries whose row and column bits differ
        out = (1 - p) * out + p * (z[:, None] * out * z[None, :])
    return MixedState(n, out)


def noisy_layered_output(spec: AnsatzSpec, theta, gamma_dt: float) -> MixedState:
    """Density matrix after alternating each unitary layer with dephasing."""
    n = spec.n_qubits
    if n > MIXED_STATE_LIMIT:
        raise ValueError(f"density-matrix simulation limited to n <= {MIXED_STATE_LIMIT}, got {n}")
    rho = MixedState.from_pure(prepare_singlet_product(n))
    for layer in Ansatz(spec).bind(theta).layers():
        for g in layer:
            apply_gate(rho, g)
        rho = dephasing_channel(rho, gamma_dt)
    return rho


def noisy_mixed_fidelity(spec: AnsatzSpec, theta, gamma_dt: float,
                         ground: GroundStateResult | None = None) -> float:
    ground = ground if ground is not None else ground_state(spec.model)
    rho = noisy_layered_output(spec, theta, gamma_dt)
    if ground.space is not None and ground.space.shape[1] > 1:
        basis = ground.space
        return float(np.einsum("ik,ij,jk->", basis.conj(), rho.matrix, basis).real)
    return mixed_fidelity(rho, ground.state)
