import numpy as np
import pytest
from scipy.linalg import expm

from spinvqe.adiabatic import (
    AdiabaticRun,
    SearchCapExceeded,
    build_adiabatic_circuit,
    build_trotter_step,
    discrete_evolve,
    exact_evolve,
    min_layers_adiabatic,
    min_tmax,
    resource_count,
    target_ground_state,
    tmax_unit,
    trotter_output,
)
from spinvqe.hamiltonians import HamiltonianSpec, ground_state, hamiltonian_matrix
from spinvqe.sim import circuit_unitary, cnot_count, fidelity, prepare_singlet_product


def midpoint_oracle(n, T, steps):
    """Dense piecewise-constant propagation, ramp sampled at step midpoints."""
    h_odd = hamiltonian_matrix(HamiltonianSpec.adiabatic_instant(n, 0.0)).toarray()
    h_full = hamiltonian_matrix(HamiltonianSpec.heisenberg(n)).toarray()
    h_even = h_full - h_odd
    v = prepare_singlet_product(n).amplitudes
    dt = T / steps
    for k in range(steps):
        v = expm(-1j * dt * (h_odd + ((k + 0.5) * dt / T) * h_even)) @ v
    return v


def test_exact_evolve_matches_dense_oracle():
    T = 1.5
    coarse, fine = midpoint_oracle(4, T, 200), midpoint_oracle(4, T, 400)
    ref = (4 * fine - coarse) / 3  # Richardson step removes the dt^2 term
    got = exact_evolve(4, T, tol=1e-12, max_halvings=12).amplitudes
    ph = np.vdot(ref, got)
    assert np.linalg.norm(got - ph / abs(ph) * ref) < 1e-8


def test_exact_evolve_limits():
    assert np.allclose(exact_evolve(4, 0.0).amplitudes, prepare_singlet_product(4).amplitudes)
    f_long = fidelity(exact_evolve(4, 40.0), target_ground_state(4))
    assert f_long > 0.999
    with pytest.raises(ValueError):
        exact_evolve(4, -1.0)


def test_target_is_heisenberg_ground_state():
    for n in (4, 6):
        assert fidelity(target_ground_state(n), ground_state(HamiltonianSpec.heisenberg(n)).state) \
            == pytest.approx(1.0)


def test_min_tmax_regression_and_scaling():
    t4 = min_tmax(4, 0.99)
    t8 = min_tmax(8, 0.99)
    assert t4 == pytest.approx(1.0)
    assert t8 == pytest.approx(4.0)
    assert 0.7 * 4 <= t8 / t4 <= 1.3 * 4
    assert tmax_unit(8) == 4.0


def test_min_tmax_continuous_mode():
    t = min_tmax(4, 0.99, quantum=None)
    assert t == pytest.approx(0.60546875, rel=1e-6)
    assert fidelity(exact_evolve(4, t), target_ground_state(4)) >= 0.99
    assert fidelity(exact_evolve(4, t / 1.01), target_ground_state(4)) < 0.99 + 1e-4


def test_min_tmax_monotone_in_threshold():
    ts = [min_tmax(4, f, quantum=None) for f in (0.9, 0.95, 0.99, 0.999)]
    assert all(a <= b for a, b in zip(ts, ts[1:]))


def test_trotter_layer_counts():
    step1 = build_trotter_step(1, 0.1, "ST1", 4, T_max=1.0)
    step2 = build_trotter_step(1, 0.1, "ST2", 4, T_max=1.0)
    assert len(step1) == 3 and cnot_count(step1) == 9
    assert len(step2) == 5 and cnot_count(step2) == 15
    assert cnot_count(build_adiabatic_circuit(AdiabaticRun(4, 1.0, 15, "ST1"))) == 135
    assert cnot_count(build_adiabatic_circuit(AdiabaticRun(4, 1.0, 3, "ST2"))) == 45


def test_trotter_step_zero_dt_is_identity():
    c = build_trotter_step(1, 0.0, "ST2", 4, T_max=1.0)
    assert np.allclose(circuit_unitary(c), np.eye(16))


def test_trotter_step_validation():
    with pytest.raises(ValueError):
        build_trotter_step(1, 0.1, "ST3", 4, T_max=1.0)
    with pytest.raises(ValueError):
        build_trotter_step(20, 0.1, "ST1", 4, T_max=1.0)
    with pytest.raises(ValueError):
        AdiabaticRun(4, 1.0, 0)


def test_trotter_converges_to_discrete_product():
    for order in ("ST1", "ST2"):
        a = trotter_output(AdiabaticRun(4, 2.0, 400, order))
        assert fidelity(a, discrete_evolve(4, 2.0, 400)) > 0.9999


@pytest.mark.parametrize("n", [4, 8])
def test_st2_not_worse_than_st1(n):
    T = min_tmax(n, 0.99)
    gs = target_ground_state(n)
    for M in (2, 4, 8, 16, 32):
        f1 = fidelity(trotter_output(AdiabaticRun(n, T, M, "ST1")), gs)
        f2 = fidelity(trotter_output(AdiabaticRun(n, T, M, "ST2")), gs)
        assert f2 >= f1 - 1e-12


def test_min_layers_table_values_n4():
    assert min_layers_adiabatic(4, 0.99, "ST2") == 3
    assert min_layers_adiabatic(4, 0.99, "ST1") == 15


def test_fine_trotter_circuit_matches_exact_evolution():
    T = min_tmax(4, 0.99)
    M = 10 * min_layers_adiabatic(4, 0.99, "ST2", T_max=T)
    out = trotter_output(AdiabaticRun(4, T, M, "ST2"))
    assert fidelity(out, exact_evolve(4, T)) >= 0.9999


def test_search_cap():
    with pytest.raises(SearchCapExceeded):
        min_layers_adiabatic(4, 0.99, "ST1", T_max=1.0, m_cap=4)


@pytest.mark.parametrize("order,n,M,cnots", [
    ("ST1", 8, 113, 2373), ("ST2", 8, 18, 594), ("ST2", 20, 132, 11484), ("ST1", 4, 15, 135),
])
def test_resource_count(order, n, M, cnots):
    assert resource_count(n, M, order)["cnots"] == cnots
