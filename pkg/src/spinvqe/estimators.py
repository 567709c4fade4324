"""scikit-learn style front end: estimators whose "data" is a Hamiltonian.

``fit(H)`` prepares an approximate ground state of ``H``. ``transform(H)``
returns the prepared state vector, ``predict(H)`` its energy under ``H``
and ``score(H)`` its fidelity with the exact ground state of ``H``. ``H`` is
a :class:`HamiltonianSpec`, a mapping of its fields, or an even integer
(shorthand for the Heisenberg chain of that length).
"""

from __future__ import annotations

from numbers import Integral, Real

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .adiabatic import (
    AdiabaticRun,
    build_adiabatic_circuit,
    min_layers_adiabatic,
    min_tmax,
    resource_count,
)
from .ansatz import Ansatz, AnsatzSpec
from .hamiltonians import HamiltonianSpec, expectation_energy, ground_state
from .sim import PureState, apply_circuit, prepare_singlet_product
from .strategies import STRATEGIES, run_strategy

__all__ = [
    "check_hamiltonian",
    "check_threshold",
    "check_seed",
    "VQEGroundState",
    "AdiabaticGroundState",
]


def check_hamiltonian(H) -> HamiltonianSpec:
    """Coerce ``H`` to a validated :class:`HamiltonianSpec`."""
    if isinstance(H, HamiltonianSpec):
        return H
    if isinstance(H, Integral) and not isinstance(H, bool):
        return HamiltonianSpec.heisenberg(int(H))
    if isinstance(H, dict):
        params = dict(H)
        params.setdefault("model", "heisenberg")
        return HamiltonianSpec(**params)
    raise TypeError(f"expected a HamiltonianSpec, dict or int, got {type(H).__name__}")


def check_threshold(value, name: str = "threshold") -> float:
    if not isinstance(value, Real) or not 0 < value < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)


def check_seed(random_state) -> np.random.Generator:
    """Accept None, an int, a SeedSequence or a Generator."""
    if isinstance(random_state, np.random.RandomState):
        raise TypeError("legacy RandomState is not supported; pass an int or a Generator")
    return np.random.default_rng(random_state)


def _check_positive_int(value, name: str):
    if not isinstance(value, Integral) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


class VQEGroundState(BaseEstimator):
    """Variational ground-state preparation with a symmetry-tied layered circuit.

    Parameters
    ----------
    n_layers : int
        Circuit depth M.
    strategy : {"random", "qubit", "layer"}
        Initialization strategy.
    max_iter : int or None
        Optimizer iterations; None means ``iters_per_param * L``.
    mirror_tied : bool or None
        Phase tying; None picks the model default.
    """

    def __init__(self, n_layers=2, strategy="random", max_iter=None, iters_per_param=50,
                 mirror_tied=None, layer_order="POE", learning_rate=0.01, beta1=0.9,
                 beta2=0.999, epsilon=1e-8, random_state=None):
        self.n_layers = n_layers
        self.strategy = strategy
        self.max_iter = max_iter
        self.iters_per_param = iters_per_param
        self.mirror_tied = mirror_tied
        self.layer_order = layer_order
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.random_state = random_state

    def _validate_params(self):
        _check_positive_int(self.n_layers, "n_layers")
        _check_positive_int(self.iters_per_param, "iters_per_param")
        if self.max_iter is not None:
            _check_positive_int(self.max_iter, "max_iter")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v!r}")

    def fit(self, H, y=None):
        self._validate_params()
        model = check_hamiltonian(H)
        rng = check_seed(self.random_state)
        spec = AnsatzSpec(model, self.n_layers, self.mirror_tied, layer_order=self.layer_order)
        budget = self.max_iter or self.iters_per_param * spec.n_params
        ground = ground_state(model)
        trace = run_strategy(self.strategy, spec, budget, rng, ground,
                             lr=self.learning_rate, beta1=self.beta1, beta2=self.beta2,
                             eps=self.epsilon)
        self.hamiltonian_ = model
        self.ansatz_spec_ = spec
        self.theta_ = trace.theta
        self.trace_ = trace
        self.n_iter_ = trace.n_iter
        self.energy_ = trace.final_energy
        self.fidelity_ = trace.final_fidelity
        self.ground_energy_ = ground.energy
        self.cnot_count_ = 3 * (model.n_qubits - 1) * self.n_layers
        return self

    def circuit(self):
        check_is_fitted(self, "theta_")
        return Ansatz(self.ansatz_spec_).bind(self.theta_)

    def _state(self, H) -> PureState:
        check_is_fitted(self, "theta_")
        model = check_hamiltonian(H) if H is not None else self.hamiltonian_
        if model.n_qubits != self.hamiltonian_.n_qubits:
            raise ValueError(f"fitted on {self.hamiltonian_.n_qubits} qubits, got {model.n_qubits}")
        return Ansatz(self.ansatz_spec_).state(self.theta_)

    def transform(self, H=None) -> np.ndarray:
        return self._state(H).amplitudes

    def predict(self, H=None) -> float:
        check_is_fitted(self, "theta_")
        model = check_hamiltonian(H) if H is not None else self.hamiltonian_
        return expectation_energy(model, self._state(model))

    def score(self, H=None, y=None) -> float:
        check_is_fitted(self, "theta_")
        model = check_hamiltonian(H) if H is not None else self.hamiltonian_
        return ground_state(model).fidelity(self._state(model))


class AdiabaticGroundState(BaseEstimator):
    """Trotterized adiabatic preparation of the Heisenberg ground state.

    ``fit`` searches the minimal total time and then the minimal number of
    Trotter layers reaching ``threshold``. ``n_layers`` fixes the depth and
    skips the second search; ``t_max`` fixes the time and skips the first.
    """

    def __init__(self, order="ST2", threshold=0.99, t_max=None, n_layers=None,
                 tmax_quantum="auto"):
        self.order = order
        self.threshold = threshold
        self.t_max = t_max
        self.n_layers = n_layers
        self.tmax_quantum = tmax_quantum

    def fit(self, H, y=None):
        model = check_hamiltonian(H)
        if model.model != "heisenberg":
            raise ValueError("adiabatic preparation targets the Heisenberg chain")
        if self.order not in ("ST1", "ST2"):
            raise ValueError(f"order must be 'ST1' or 'ST2', got {self.order!r}")
        thr = check_threshold(self.threshold)
        n = model.n_qubits
        T = self.t_max
        if T is None:
            T = min_tmax(n, thr, J=model.J, quantum=self.tmax_quantum)
        elif not T > 0:
            raise ValueError(f"t_max must be > 0, got {T!r}")
        M = self.n_layers
        if M is None:
            M = min_layers_adiabatic(n, thr, self.order, T_max=T, J=model.J)
        else:
            _check_positive_int(M, "n_layers")
        self.hamiltonian_ = model
        self.t_max_ = float(T)
        self.n_layers_ = int(M)
        run = AdiabaticRun(n, float(T), int(M), self.order, thr)
        self.circuit_ = build_adiabatic_circuit(run, J=model.J)
        self.cnot_count_ = resource_count(n, M, self.order)["cnots"]
        self.state_ = apply_circuit(prepare_singlet_product(n), self.circuit_)
        self.fidelity_ = ground_state(model).fidelity(self.state_)
        return self

    def transform(self, H=None) -> np.ndarray:
        check_is_fitted(self, "state_")
        return self.state_.amplitudes.copy()

    def predict(self, H=None) -> float:
        check_is_fitted(self, "state_")
        model = check_hamiltonian(H) if H is not None else self.hamiltonian_
        return expectation_energy(model, self.state_)

    def score(self, H=None, y=None) -> float:
        check_is_fitted(self, "state_")
        model = check_hamiltonian(H) if H is not None else self.hamiltonian_
        return ground_state(model).fidelity(self.state_)
