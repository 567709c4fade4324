import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from spinvqe.sim import (
    CNOT_MATRIX,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    Circuit,
    GateDescriptor,
    MixedState,
    PureState,
    apply_circuit,
    apply_gate,
    circuit_unitary,
    cnot_count,
    decompose_entangler,
    entangler_generator,
    entangler_unitary,
    equal_up_to_phase,
    fidelity,
    gate_matrix,
    init_basis_state,
    mirror_permutation,
    mixed_fidelity,
    prepare_singlet_product,
    sz_values,
)

angle = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def dense_gate(n, g):
    """Embed a gate by explicit Kronecker products (independent of the kernels)."""
    u = gate_matrix(g)
    if len(g.qubits) == 1:
        ops = [np.eye(2)] * n
        ops[g.qubits[0]] = u
        out = ops[0]
        for o in ops[1:]:
            out = np.kron(out, o)
        return out
    # two-qubit: permute so the gate acts on qubits 0,1 of a reordered register
    q0, q1 = g.qubits
    order = [q0, q1] + [q for q in range(n) if q not in (q0, q1)]
    full = np.kron(u, np.eye(1 << (n - 2)))
    full = full.reshape([2] * (2 * n))
    inv = np.argsort(order)
    full = full.transpose(list(inv) + [n + i for i in inv])
    return full.reshape(1 << n, 1 << n)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return PureState(n, v / np.linalg.norm(v))


# -- states -----------------------------------------------------------------


def test_basis_states():
    assert np.allclose(init_basis_state(2, "00").amplitudes, [1, 0, 0, 0])
    assert np.allclose(init_basis_state(2, "01").amplitudes, [0, 1, 0, 0])
    assert np.allclose(init_basis_state(1, "1").amplitudes, [0, 1])
    with pytest.raises(ValueError):
        init_basis_state(2, "012")
    with pytest.raises(ValueError):
        init_basis_state(3, "01")


def test_singlet_product():
    s = prepare_singlet_product(2).amplitudes
    assert np.allclose(s, np.array([0, 1, -1, 0]) / np.sqrt(2))
    psi = prepare_singlet_product(4).amplitudes
    assert np.isclose(np.sum(np.abs(psi) ** 2 * sz_values(4)), 0)
    assert np.allclose(psi, np.kron(s, s))
    with pytest.raises(ValueError):
        prepare_singlet_product(3)


def test_state_validation():
    with pytest.raises(ValueError):
        PureState(2, np.ones(3))
    with pytest.raises(ValueError):
        MixedState(1, np.eye(3))


# -- entangler --------------------------------------------------------------


def test_entangler_identity_and_known_actions():
    assert np.allclose(entangler_unitary(0, 0, 0), np.eye(4))
    t = 0.37
    u = entangler_unitary(t, t, t)
    e01 = np.array([0, 1, 0, 0])
    expected = np.exp(-1j * t) * np.array([0, np.cos(2 * t), 1j * np.sin(2 * t), 0])
    assert np.allclose(u @ e01, expected)
    assert np.allclose(u @ np.array([1, 0, 0, 0]), np.exp(1j * t) * np.array([1, 0, 0, 0]))


def test_entangler_maximally_entangles_01():
    psi = entangler_unitary(np.pi / 8, np.pi / 8, np.pi / 8) @ np.array([0, 1, 0, 0])
    rho_a = np.einsum("ij,kj->ik", psi.reshape(2, 2), psi.reshape(2, 2).conj())
    assert np.allclose(rho_a, np.eye(2) / 2)


@given(angle, angle, angle)
@settings(max_examples=40, deadline=None)
def test_entangler_matches_expm(tx, ty, tz):
    gen = tx * np.kron(PAULI_X, PAULI_X) + ty * np.kron(PAULI_Y, PAULI_Y) + tz * np.kron(PAULI_Z, PAULI_Z)
    assert np.allclose(entangler_unitary(tx, ty, tz), expm(1j * gen), atol=1e-10)


def test_entangler_generator_is_heisenberg_bond():
    g = entangler_generator(1.0, 0.5, 0.8)
    ref = np.kron(PAULI_X, PAULI_X) + 0.5 * np.kron(PAULI_Y, PAULI_Y) + 0.8 * np.kron(PAULI_Z, PAULI_Z)
    assert np.allclose(g, ref)


@given(angle, angle, angle)
@settings(max_examples=40, deadline=None)
def test_decomposition_matches_entangler(tx, ty, tz):
    circ = decompose_entangler(tx, ty, tz)
    assert cnot_count(circ) == 3
    assert equal_up_to_phase(circuit_unitary(circ), entangler_unitary(tx, ty, tz), atol=1e-10)


def test_decomposition_special_cases():
    assert equal_up_to_phase(circuit_unitary(decompose_entangler(0, 0, 0)), np.eye(4))
    t = np.pi / 8
    assert equal_up_to_phase(circuit_unitary(decompose_entangler(t, t, t)),
                             entangler_unitary(t, t, t))


def test_decomposition_on_distant_qubits():
    rng = np.random.default_rng(3)
    angles = rng.uniform(-1, 1, 3)
    circ = decompose_entangler(*angles, q0=3, q1=1, n_qubits=4)
    ref = dense_gate(4, GateDescriptor.entangler(3, 1, *angles))
    assert equal_up_to_phase(circuit_unitary(circ), ref)


# -- gates ------------------------------------------------------------------


def test_cnot_truth_table_and_phase():
    s = apply_gate(init_basis_state(2, "10"), GateDescriptor.cnot(0, 1))
    assert np.allclose(s.amplitudes, init_basis_state(2, "11").amplitudes)
    s = apply_gate(init_basis_state(1, "0"), GateDescriptor.phase(0, 1.3))
    assert np.allclose(s.amplitudes, [1, 0])
    s = apply_gate(init_basis_state(1, "1"), GateDescriptor.phase(0, 1.3))
    assert np.allclose(s.amplitudes, [0, np.exp(1.3j)])
    assert np.allclose(gate_matrix(GateDescriptor.cnot(0, 1)), CNOT_MATRIX)


def test_gate_validation():
    with pytest.raises(ValueError):
        GateDescriptor("Toffoli", (0, 1, 2))
    with pytest.raises(ValueError):
        GateDescriptor.cnot(1, 1)
    with pytest.raises(ValueError):
        GateDescriptor("Phase", (0,), ())
    with pytest.raises(ValueError):
        GateDescriptor.fixed(0, 1, np.ones((4, 4)))
    with pytest.raises(ValueError):
        Circuit(2, [GateDescriptor.cnot(0, 2)])
    with pytest.raises(ValueError):
        apply_gate(init_basis_state(2, "00"), GateDescriptor.rot("x", 2, 0.1))


def _random_gate(rng, n):
    kind = rng.integers(6)
    q = int(rng.integers(n))
    others = [p for p in range(n) if p != q]
    p = int(rng.choice(others))
    a = rng.uniform(-3, 3, 3)
    if kind == 0:
        return GateDescriptor.phase(q, a[0])
    if kind in (1, 2, 3):
        return GateDescriptor.rot("XYZ"[kind - 1], q, a[0])
    if kind == 4:
        return GateDescriptor.cnot(q, p)
    return GateDescriptor.entangler(q, p, *a)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_kernels_match_kron_oracle(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    ref = psi.amplitudes.copy()
    for _ in range(6):
        g = _random_gate(rng, n)
        apply_gate(psi, g)
        ref = dense_gate(n, g) @ ref
    assert np.allclose(psi.amplitudes, ref, atol=1e-10)
    assert np.isclose(psi.norm(), 1.0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_mixed_state_evolution_matches_pure(seed):
    rng = np.random.default_rng(seed)
    n = 3
    psi = random_state(rng, n)
    rho = MixedState.from_pure(psi)
    circ = Circuit(n, [_random_gate(rng, n) for _ in range(5)])
    apply_circuit(psi, circ)
    apply_circuit(rho, circ)
    assert np.allclose(rho.matrix, np.outer(psi.amplitudes, psi.amplitudes.conj()), atol=1e-10)
    assert np.isclose(rho.trace(), 1.0)
    assert np.isclose(rho.purity(), 1.0)


def test_circuit_basics():
    s = init_basis_state(2, "00")
    assert np.allclose(apply_circuit(s.copy(), Circuit(2)).amplitudes, s.amplitudes)
    out = apply_circuit(s, Circuit(2, [GateDescriptor.rot("x", 0, np.pi)]))
    assert fidelity(out, init_basis_state(2, "10")) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        apply_circuit(init_basis_state(3, "000"), Circuit(2))


def test_layers_and_marks():
    c = Circuit(2)
    c.append(GateDescriptor.phase(0, 0.1))
    c.mark_layer()
    c.extend([GateDescriptor.cnot(0, 1), GateDescriptor.cnot(1, 0)])
    c.mark_layer()
    assert [len(layer) for layer in c.layers()] == [1, 2]
    with pytest.raises(ValueError):
        c.mark_layer()


# -- measures ---------------------------------------------------------------


def test_fidelity_values():
    a = init_basis_state(2, "01")
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity(a, init_basis_state(2, "10")) == 0.0
    rho = MixedState(2, np.eye(4) / 4)
    assert mixed_fidelity(rho, random_state(np.random.default_rng(0), 2)) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        fidelity(a, init_basis_state(3, "000"))


def test_cnot_count():
    assert cnot_count(Circuit(2)) == 0
    assert cnot_count(Circuit(2, [GateDescriptor.entangler(0, 1, 0.1, 0.2, 0.3)])) == 3
    c = Circuit(2, [GateDescriptor.cnot(0, 1), GateDescriptor.fixed(0, 1, CNOT_MATRIX, cost=1)])
    assert cnot_count(c) == 2


def test_mirror_and_sz_helpers():
    perm = mirror_permutation(3)
    # |001> <-> |100>
    assert perm[0b001] == 0b100 and perm[0b110] == 0b011
    assert list(sz_values(2)) == [2, 0, 0, -2]
