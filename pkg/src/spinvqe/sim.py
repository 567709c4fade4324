"""Matrix-free state-vector and density-matrix simulation of spin-chain circuits.

Qubit 0 is the leftmost chain site and the most significant bit of the basis
index, so ``|q0 q1 ... q_{n-1}>`` has index ``sum(q_k << (n - 1 - k))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PureState",
    "MixedState",
    "GateDescriptor",
    "Circuit",
    "GATE_KINDS",
    "init_basis_state",
    "prepare_singlet_product",
    "entangler_unitary",
    "entangler_generator",
    "decompose_entangler",
    "gate_matrix",
    "apply_gate",
    "apply_circuit",
    "fidelity",
    "mixed_fidelity",
    "cnot_count",
    "equal_up_to_phase",
    "circuit_unitary",
    "basis_bits",
    "sz_values",
    "mirror_permutation",
    "CNOT_MATRIX",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

GATE_KINDS = ("Phase", "RotX", "RotY", "RotZ", "CNOT", "Entangler", "FixedUnitary2Q")
_N_ANGLES = {"Phase": 1, "RotX": 1, "RotY": 1, "RotZ": 1, "CNOT": 0, "Entangler": 3,
             "FixedUnitary2Q": 0}
_N_QUBITS = {"Phase": 1, "RotX": 1, "RotY": 1, "RotZ": 1, "CNOT": 2, "Entangler": 2,
             "FixedUnitary2Q": 2}


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass
class PureState:
    """Normalized amplitude vector over ``n_qubits`` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def copy(self) -> "PureState":
        return PureState(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __len__(self):
        return self.amplitudes.shape[0]


@dataclass
class MixedState:
    """Density matrix over ``n_qubits`` qubits."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        dim = 1 << self.n_qubits
        self.matrix = np.ascontiguousarray(self.matrix, dtype=complex)
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {self.matrix.shape}")

    @classmethod
    def from_pure(cls, state: PureState) -> "MixedState":
        psi = state.amplitudes
        return cls(state.n_qubits, np.outer(psi, psi.conj()))

    def copy(self) -> "MixedState":
        return MixedState(self.n_qubits, self.matrix.copy())

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        return float(np.vdot(self.matrix, self.matrix).real)


def init_basis_state(n: int, bits: str) -> PureState:
    """Computational basis state ``|bits>``; ``bits[0]`` is qubit 0."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(bits) != n or any(b not in "01" for b in bits):
        raise ValueError(f"bitstring {bits!r} is not a length-{n} binary string")
    amps = np.zeros(1 << n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(n, amps)


def prepare_singlet_product(n: int) -> PureState:
    """Product of singlets ``(|01> - |10>)/sqrt(2)`` on pairs (0,1), (2,3), ..."""
    if n < 2 or n % 2:
        raise ValueError(f"singlet product needs an even qubit count, got {n}")
    singlet = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    amps = np.ones(1, dtype=complex)
    for _ in range(n // 2):
        amps = np.kron(amps, singlet)
    return PureState(n, amps)


# ---------------------------------------------------------------------------
# gates and circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateDescriptor:
    """One gate: its kind, the qubits it acts on and its angles.

    ``FixedUnitary2Q`` carries an explicit 4x4 ``matrix`` (first listed qubit
    is the more significant one) and a declared CNOT ``cost``.
    """

    kind: str
    qubits: tuple
    angles: tuple = ()
    matrix: np.ndarray | None = field(default=None, compare=False)
    cost: int = 0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "angles", angles)
        if len(qubits) != _N_QUBITS[self.kind]:
            raise ValueError(f"{self.kind} acts on {_N_QUBITS[self.kind]} qubit(s), got {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        if len(qubits) == 2 and qubits[0] == qubits[1]:
            raise ValueError(f"two-qubit gate needs distinct qubits, got {qubits}")
        if len(angles) != _N_ANGLES[self.kind]:
            raise ValueError(f"{self.kind} takes {_N_ANGLES[self.kind]} angle(s), got {len(angles)}")
        if self.kind == "FixedUnitary2Q":
            if self.matrix is None:
                raise ValueError("FixedUnitary2Q requires an explicit 4x4 matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (4, 4):
                raise ValueError(f"FixedUnitary2Q matrix must be 4x4, got {m.shape}")
            if np.abs(m.conj().T @ m - np.eye(4)).max() > 1e-10:
                raise ValueError("FixedUnitary2Q matrix is not unitary")
            object.__setattr__(self, "matrix", m)

    # convenience constructors
    @classmethod
    def phase(cls, q, theta):
        return cls("Phase", (q,), (theta,))

    @classmethod
    def rot(cls, axis, q, theta):
        return cls("Rot" + axis.upper(), (q,), (theta,))

    @classmethod
    def cnot(cls, control, target):
        return cls("CNOT", (control, target))

    @classmethod
    def entangler(cls, q0, q1, tx, ty, tz):
        return cls("Entangler", (q0, q1), (tx, ty, tz))

    @classmethod
    def fixed(cls, q0, q1, matrix, cost=0):
        return cls("FixedUnitary2Q", (q0, q1), (), matrix, cost)


@dataclass
class Circuit:
    n_qubits: int
    gates: list = field(default_factory=list)
    layer_marks: list | None = None

    def __post_init__(self):
        self.gates = list(self.gates)
        for g in self.gates:
            self._check(g)
        if self.layer_marks is not None:
            marks = list(self.layer_marks)
            if any(b <= a for a, b in zip(marks, marks[1:])):
                raise ValueError(f"layer_marks must be strictly increasing, got {marks}")
            self.layer_marks = marks

    def _check(self, g: GateDescriptor):
        if max(g.qubits) >= self.n_qubits:
            raise ValueError(f"gate {g.kind} on {g.qubits} exceeds {self.n_qubits} qubits")

    def append(self, g: GateDescriptor):
        self._check(g)
        self.gates.append(g)

    def extend(self, gates: Iterable[GateDescriptor]):
        for g in gates:
            self.append(g)

    def mark_layer(self):
        """Record the current gate count as a layer boundary."""
        if self.layer_marks is None:
            self.layer_marks = []
        pos = len(self.gates)
        if self.layer_marks and pos <= self.layer_marks[-1]:
            raise ValueError("empty layer")
        self.layer_marks.append(pos)

    def layers(self) -> list:
        """Gates split at the layer marks (one layer if unmarked)."""
        if not self.layer_marks:
            return [list(self.gates)]
        out, start = [], 0
        for m in self.layer_marks:
            out.append(self.gates[start:m])
            start = m
        if start < len(self.gates):
            out.append(self.gates[start:])
        return out

    def __len__(self):
        return len(self.gates)


def entangler_unitary(tx: float, ty: float, tz: float) -> np.ndarray:
    """``exp(i(tx XX + ty YY + tz ZZ))`` in closed form.

    The three Pauli products commute; the exponential is block diagonal in the
    {|00>,|11>} and {|01>,|10>} subspaces.
    """
    a = tx - ty
    b = tx + ty
    u = np.zeros((4, 4), dtype=complex)
    ez, ezc = np.exp(1j * tz), np.exp(-1j * tz)
    u[0, 0] = u[3, 3] = ez * np.cos(a)
    u[0, 3] = u[3, 0] = 1j * ez * np.sin(a)
    u[1, 1] = u[2, 2] = ezc * np.cos(b)
    u[1, 2] = u[2, 1] = 1j * ezc * np.sin(b)
    return u


def entangler_generator(jx: float = 1.0, jy: float = 1.0, jz: float = 1.0) -> np.ndarray:
    """Real 4x4 matrix ``jx XX + jy YY + jz ZZ``."""
    g = np.zeros((4, 4))
    g[0, 0] = g[3, 3] = jz
    g[1, 1] = g[2, 2] = -jz
    g[0, 3] = g[3, 0] = jx - jy
    g[1, 2] = g[2, 1] = jx + jy
    return g


def _rot(pauli, theta):
    return np.cos(theta / 2) * np.eye(2) + 1j * np.sin(theta / 2) * pauli


def gate_matrix(g: GateDescriptor) -> np.ndarray:
    """Local 2x2 or 4x4 unitary of a gate (rotations are ``exp(+i theta sigma/2)``)."""
    k = g.kind
    if k == "Phase":
        return np.diag([1.0, np.exp(1j * g.angles[0])])
    if k == "RotX":
        return _rot(PAULI_X, g.angles[0])
    if k == "RotY":
        return _rot(PAULI_Y, g.angles[0])
    if k == "RotZ":
        return _rot(PAULI_Z, g.angles[0])
    if k == "CNOT":
        return CNOT_MATRIX
    if k == "Entangler":
        return entangler_unitary(*g.angles)
    return g.matrix


def decompose_entangler(tx: float, ty: float, tz: float, q0: int = 0, q1: int = 1,
                        n_qubits: int | None = None) -> Circuit:
    """Three-CNOT realization of ``entangler_unitary(tx, ty, tz)`` on (q0, q1).

    Five y/z rotations interleave the CNOTs; equality holds up to a global phase.
    """
    half = np.pi / 2
    gates = [
        GateDescriptor.rot("z", q1, -half),
        GateDescriptor.cnot(q1, q0),
        GateDescriptor.rot("z", q0, 2 * tz - half),
        GateDescriptor.rot("y", q1, 2 * tx - half),
        GateDescriptor.cnot(q0, q1),
        GateDescriptor.rot("y", q1, half - 2 * ty),
        GateDescriptor.cnot(q1, q0),
        GateDescriptor.rot("z", q0, half),
    ]
    n = n_qubits if n_qubits is not None else max(q0, q1) + 1
    return Circuit(n, gates)


# ---------------------------------------------------------------------------
# kernels on raw amplitude arrays
# ---------------------------------------------------------------------------


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int, n: int) -> None:
    view = psi.reshape(1 << q, 2, 1 << (n - q - 1))
    view[...] = u @ view


def _apply_diag_1q(psi: np.ndarray, d1: complex, q: int, n: int) -> None:
    view = psi.reshape(1 << q, 2, 1 << (n - q - 1))
    view[:, 1, :] *= d1


def _apply_2q(psi: np.ndarray, u: np.ndarray, q0: int, q1: int, n: int) -> None:
    if q1 == q0 + 1:
        view = psi.reshape(1 << q0, 4, 1 << (n - q0 - 2))
        view[...] = u @ view
        return
    tensor = psi.reshape((2,) * n)
    out = np.tensordot(u.reshape(2, 2, 2, 2), tensor, axes=([2, 3], [q0, q1]))
    psi[...] = np.moveaxis(out, (0, 1), (q0, q1)).reshape(-1)


def _apply_local(psi: np.ndarray, g: GateDescriptor, n: int) -> None:
    if g.kind == "Phase":
        _apply_diag_1q(psi, np.exp(1j * g.angles[0]), g.qubits[0], n)
    elif len(g.qubits) == 1:
        _apply_1q(psi, gate_matrix(g), g.qubits[0], n)
    else:
        _apply_2q(psi, gate_matrix(g), g.qubits[0], g.qubits[1], n)


def _apply_local_mixed(flat: np.ndarray, g: GateDescriptor, n: int) -> None:
    # rho flattened row-major is a 2n-qubit vector: row qubits 0..n-1, column qubits n..2n-1
    u = gate_matrix(g)
    shifted = tuple(q + n for q in g.qubits)
    if len(g.qubits) == 1:
        _apply_1q(flat, u, g.qubits[0], 2 * n)
        _apply_1q(flat, u.conj(), shifted[0], 2 * n)
    else:
        _apply_2q(flat, u, g.qubits[0], g.qubits[1], 2 * n)
        _apply_2q(flat, u.conj(), shifted[0], shifted[1], 2 * n)


def _check_gate(g: GateDescriptor, n: int):
    if max(g.qubits) >= n:
        raise ValueError(f"gate {g.kind} on qubits {g.qubits} invalid for {n} qubits")


def apply_gate(state, g: GateDescriptor):
    """Apply ``g`` in place to a PureState (or MixedState as ``U rho U^dag``); returns the state."""
    _check_gate(g, state.n_qubits)
    if isinstance(state, MixedState):
        _apply_local_mixed(state.matrix.reshape(-1), g, state.n_qubits)
    else:
        _apply_local(state.amplitudes, g, state.n_qubits)
    return state


def apply_circuit(state, circuit: Circuit):
    """Apply every gate of ``circuit`` in order, in place; returns the state."""
    if circuit.n_qubits != state.n_qubits:
        raise ValueError(
            f"circuit acts on {circuit.n_qubits} qubits, state has {state.n_qubits}"
        )
    for g in circuit.gates:
        apply_gate(state, g)
    return state


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------


def fidelity(a: PureState, b: PureState) -> float:
    """``|<a|b>|^2``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def mixed_fidelity(rho: MixedState, psi: PureState) -> float:
    """``<psi|rho|psi>``."""
    if rho.n_qubits != psi.n_qubits:
        raise ValueError(f"dimension mismatch: {rho.n_qubits} vs {psi.n_qubits} qubits")
    v = psi.amplitudes
    return float(np.vdot(v, rho.matrix @ v).real)


def cnot_count(circuit: Circuit) -> int:
    """CNOTs, plus 3 per Entangler and the declared cost of each FixedUnitary2Q."""
    total = 0
    for g in circuit.gates:
        if g.kind == "CNOT":
            total += 1
        elif g.kind == "Entangler":
            total += 3
        elif g.kind == "FixedUnitary2Q":
            total += g.cost
    return total


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    """Operator-norm equality of ``a`` and ``b`` modulo a global phase.

    The phase is fixed by the largest-magnitude element of ``a``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    if abs(b[idx]) == 0:
        return False
    phase = b[idx] / a[idx]
    phase /= abs(phase)
    diff = a * phase - b
    err = np.linalg.norm(diff, 2) if diff.ndim == 2 else np.linalg.norm(diff)
    return bool(err < atol)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of a small circuit, built column by column with the kernels."""
    n = circuit.n_qubits
    dim = 1 << n
    cols = np.eye(dim, dtype=complex)
    for j in range(dim):
        col = cols[:, j].copy()
        for g in circuit.gates:
            _apply_local(col, g, n)
        cols[:, j] = col
    return cols


def basis_bits(n: int) -> np.ndarray:
    """``(2**n, n)`` array of basis-state bits, qubit 0 in column 0."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(np.int8)


def sz_values(n: int) -> np.ndarray:
    """Total ``sum_k sigma^z_k`` eigenvalue of each basis state."""
    return n - 2 * basis_bits(n).sum(axis=1).astype(int)


def mirror_permutation(n: int) -> np.ndarray:
    """Index map of the site-reversal operator: ``perm[b]`` is the reversed basis index."""
    bits = basis_bits(n)
    weights = 1 << np.arange(n)  # reversed significance
    return (bits * weights[None, :]).sum(axis=1)
