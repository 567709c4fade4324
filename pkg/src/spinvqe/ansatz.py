"""Symmetry-tied layered ansatz: energy and adjoint gradient.

By default each layer applies a phase gate on every site, then entanglers on
the odd bonds (1-2, 3-4, ...), then on the even bonds. Per layer the parameter
vector holds the phase angles first and then one angle per bond, ordered by
bond position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import HamiltonianSpec, _bond_matrices
from .sim import (
    Circuit,
    GateDescriptor,
    PureState,
    basis_bits,
    entangler_generator,
    entangler_unitary,
    prepare_singlet_product,
)

__all__ = ["AnsatzSpec", "Ansatz", "build_ansatz", "energy", "gradient"]


@dataclass(frozen=True)
class AnsatzSpec:
    """Hamiltonian, depth and phase-tying choice of a variational circuit.

    ``mirror_tied`` defaults to True for mirror-symmetric models (Heisenberg,
    XYZ) and False for Kondo.
    """

    model: HamiltonianSpec
    layers: int
    mirror_tied: bool | None = None
    initial_state: str = "singlet_product"
    # within-layer order: P = phase gates, O = odd-bond and E = even-bond entanglers
    layer_order: str = "POE"

    def __post_init__(self):
        if sorted(self.layer_order) != ["E", "O", "P"]:
            raise ValueError(f"layer_order must be a permutation of 'POE', got {self.layer_order!r}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.model.n_qubits % 2:
            raise ValueError(f"ansatz needs an even qubit count, got {self.model.n_qubits}")
        if self.initial_state != "singlet_product":
            raise ValueError(f"unsupported initial state {self.initial_state!r}")
        if self.mirror_tied is None:
            object.__setattr__(self, "mirror_tied", self.model.model != "kondo")

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits

    @property
    def sz_conserving(self) -> bool:
        wx, wy, _ = self.model.entangler_weights
        return wx == wy

    @property
    def phases_per_layer(self) -> int:
        return self.n_qubits // 2 if self.mirror_tied else self.n_qubits

    @property
    def params_per_layer(self) -> int:
        return self.phases_per_layer + self.n_qubits - 1

    @property
    def n_params(self) -> int:
        return self.params_per_layer * self.layers

    def with_layers(self, layers: int) -> "AnsatzSpec":
        return AnsatzSpec(self.model, layers, self.mirror_tied, self.initial_state,
                          self.layer_order)


class Ansatz:
    """Compiled form of an ``AnsatzSpec`` with fast forward and adjoint passes."""

    def __init__(self, spec: AnsatzSpec):
        self.spec = spec
        n = self.n = spec.n_qubits
        self.n_params = spec.n_params
        self.ppl = spec.params_per_layer
        self.n_phase = spec.phases_per_layer
        # site -> (offset within the layer's phase block, sign)
        if spec.mirror_tied:
            half = n // 2
            self.phase_index = np.array([k if k < half else n - 1 - k for k in range(n)])
            self.phase_sign = np.array([1.0 if k < half else -1.0 for k in range(n)])
        else:
            self.phase_index = np.arange(n)
            self.phase_sign = np.ones(n)
        # d(site angles)/d(phase params) as an (n, n_phase) matrix
        self.phase_jac = np.zeros((n, self.n_phase))
        self.phase_jac[np.arange(n), self.phase_index] = self.phase_sign
        self.bits = basis_bits(n).astype(float)
        self.weights = spec.model.entangler_weights
        self.generator = entangler_generator(*self.weights)
        groups = {"O": list(range(0, n - 1, 2)), "E": list(range(1, n - 1, 2))}
        # per-layer sequence: "P" or a bond index
        self.ops = []
        for tok in spec.layer_order:
            self.ops.extend(["P"] if tok == "P" else groups[tok])
        self.h_bonds = _bond_matrices(spec.model)
        self.psi0 = prepare_singlet_product(n).amplitudes

    # -- parameter bookkeeping -------------------------------------------------

    def layer_slice(self, layer: int) -> slice:
        return slice(layer * self.ppl, (layer + 1) * self.ppl)

    def site_phases(self, theta: np.ndarray, layer: int) -> np.ndarray:
        block = theta[self.layer_slice(layer)]
        return self.phase_sign * block[: self.n_phase][self.phase_index]

    def bond_angles(self, theta: np.ndarray, layer: int) -> np.ndarray:
        return theta[self.layer_slice(layer)][self.n_phase:]

    def slot_map(self) -> list:
        """``(layer, 'phase'|'bond', site_or_bond, param_index, sign)`` for every gate slot."""
        out = []
        for layer in range(self.spec.layers):
            base = layer * self.ppl
            for k in range(self.n):
                out.append((layer, "phase", k, base + int(self.phase_index[k]),
                            int(self.phase_sign[k])))
            for b in range(self.n - 1):
                out.append((layer, "bond", b, base + self.n_phase + b, 1))
        return out

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        return theta

    # -- circuits --------------------------------------------------------------

    def bind(self, theta) -> Circuit:
        """Explicit gate list for ``theta`` with one layer mark per layer."""
        theta = self._check(theta)
        wx, wy, wz = self.weights
        circ = Circuit(self.n)
        for layer in range(self.spec.layers):
            phases = self.site_phases(theta, layer)
            bonds = self.bond_angles(theta, layer)
            for op in self.ops:
                if op == "P":
                    for k in range(self.n):
                        circ.append(GateDescriptor.phase(k, phases[k]))
                else:
                    t = bonds[op]
                    circ.append(GateDescriptor.entangler(op, op + 1, wx * t, wy * t, wz * t))
            circ.mark_layer()
        return circ

    def _unitary(self, t: float) -> np.ndarray:
        wx, wy, wz = self.weights
        return entangler_unitary(wx * t, wy * t, wz * t)

    def _apply_bond(self, psi: np.ndarray, u: np.ndarray, b: int) -> None:
        # psi may carry a leading batch axis
        lead = psi.shape[:-1]
        view = psi.reshape(lead + (1 << b, 4, 1 << (self.n - b - 2)))
        view[...] = u @ view

    def _phase_diag(self, phases: np.ndarray) -> np.ndarray:
        return np.exp(1j * (self.bits @ phases))

    def state_array(self, theta) -> np.ndarray:
        theta = self._check(theta)
        psi = self.psi0.copy()
        for layer in range(self.spec.layers):
            bonds = self.bond_angles(theta, layer)
            for op in self.ops:
                if op == "P":
                    psi *= self._phase_diag(self.site_phases(theta, layer))
                else:
                    self._apply_bond(psi, self._unitary(bonds[op]), op)
        return psi

    def state(self, theta) -> PureState:
        return PureState(self.n, self.state_array(theta))

    # -- energy and gradient ---------------------------------------------------

    def _apply_h(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        n = self.n
        for i, h in enumerate(self.h_bonds):
            shape = (1 << i, 4, 1 << (n - i - 2))
            out.reshape(shape)[...] += h @ psi.reshape(shape)
        return out

    def energy(self, theta) -> float:
        psi = self.state_array(theta)
        return float(np.vdot(psi, self._apply_h(psi)).real)

    def energy_and_grad(self, theta, overlap_with: np.ndarray | None = None):
        """Energy, its gradient and optionally the output-state overlaps.

        The gradient comes from one reverse sweep: the output state and the
        co-state ``H|psi>`` are walked back through the inverse gates while
        each gate's generator expectation is accumulated. ``overlap_with`` is
        a ``(dim, k)`` basis; its squared projection norm is returned as the
        third value (``None`` otherwise).
        """
        theta = self._check(theta)
        n, M = self.n, self.spec.layers
        psi = self.state_array(theta)
        lam = self._apply_h(psi)
        e = float(np.vdot(psi, lam).real)
        fid = None
        if overlap_with is not None:
            ov = overlap_with.conj().T @ psi
            fid = float(np.vdot(ov, ov).real)
        grad = np.zeros(self.n_params)
        pair = np.stack([psi, lam])
        g = self.generator
        for layer in range(M - 1, -1, -1):
            base = layer * self.ppl
            bonds = self.bond_angles(theta, layer)
            for op in reversed(self.ops):
                if op == "P":
                    site_grad = -2.0 * (self.bits.T @ (pair[1].conj() * pair[0])).imag
                    grad[base: base + self.n_phase] = site_grad @ self.phase_jac
                    pair *= self._phase_diag(self.site_phases(theta, layer)).conj()
                    continue
                shape = (1 << op, 4, 1 << (n - op - 2))
                p_view = pair[0].reshape(shape)
                l_view = pair[1].reshape(shape)
                grad[base + self.n_phase + op] = -2.0 * np.vdot(l_view, g @ p_view).imag
                self._apply_bond(pair, self._unitary(bonds[op]).conj().T, op)
        return e, grad, fid


def build_ansatz(spec: AnsatzSpec) -> Ansatz:
    if spec.n_qubits % 2:
        raise ValueError(f"ansatz needs an even qubit count, got {spec.n_qubits}")
    return Ansatz(spec)


def energy(spec: AnsatzSpec, theta) -> float:
    """``<psi(theta)|H|psi(theta)>`` for the ansatz output."""
    return build_ansatz(spec).energy(theta)


def gradient(spec: AnsatzSpec, theta) -> np.ndarray:
    """Exact gradient of ``energy`` by the adjoint method."""
    return build_ansatz(spec).energy_and_grad(theta)[1]
