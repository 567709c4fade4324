"""Open-chain spin Hamiltonians, matrix-free energies and an exact ground-state oracle."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .sim import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    PureState,
    entangler_generator,
    mirror_permutation,
    sz_values,
)

__all__ = [
    "HamiltonianSpec",
    "GroundStateResult",
    "apply_hamiltonian",
    "expectation_energy",
    "ground_state",
    "check_symmetries",
    "hamiltonian_matrix",
    "DENSE_LIMIT",
    "ITERATIVE_LIMIT",
]

MODELS = ("heisenberg", "xyz", "kondo", "adiabatic")
DENSE_LIMIT = 12
ITERATIVE_LIMIT = 24
# dense diagonalization is used automatically up to this size
AUTO_DENSE_MAX = 10


@dataclass(frozen=True)
class HamiltonianSpec:
    """A nearest-neighbour open chain with per-bond ``(Jx, Jy, Jz)`` couplings.

    ``model`` selects how the couplings are built:

    * ``heisenberg``: ``J`` on every bond.
    * ``xyz``: ``(jx, jy, jz)`` on every bond.
    * ``kondo``: ``J * jprime`` on the first bond, ``J`` elsewhere.
    * ``adiabatic``: ``J`` on odd bonds (1-2, 3-4, ...), ``J * s`` on even bonds.
    """

    model: str
    n_qubits: int
    J: float = 1.0
    jx: float = 1.0
    jy: float = 1.0
    jz: float = 1.0
    jprime: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.n_qubits < 2 or self.n_qubits % 2:
            raise ValueError(f"n_qubits must be an even integer >= 2, got {self.n_qubits}")
        if self.model in ("heisenberg", "adiabatic") and self.J <= 0:
            raise ValueError(f"Heisenberg coupling J must be positive, got {self.J}")
        if self.model == "kondo" and not 0 < self.jprime < 1:
            warnings.warn(
                f"Kondo impurity coupling jprime={self.jprime} is outside (0, 1)",
                stacklevel=3,
            )
        if self.model == "adiabatic" and not 0 <= self.s <= 1:
            raise ValueError(f"schedule fraction s must lie in [0, 1], got {self.s}")

    @classmethod
    def heisenberg(cls, n, J=1.0):
        return cls("heisenberg", n, J=J)

    @classmethod
    def xyz(cls, n, jx=1.0, jy=0.5, jz=0.8):
        return cls("xyz", n, jx=jx, jy=jy, jz=jz)

    @classmethod
    def kondo(cls, n, jprime=0.6, J=1.0):
        return cls("kondo", n, J=J, jprime=jprime)

    @classmethod
    def adiabatic_instant(cls, n, s, J=1.0):
        return cls("adiabatic", n, J=J, s=s)

    @property
    def bond_couplings(self) -> list:
        """``(Jx, Jy, Jz)`` for bonds ``(i, i+1)``, ``i = 0 .. n-2``."""
        n = self.n_qubits
        if self.model == "heisenberg":
            return [(self.J,) * 3] * (n - 1)
        if self.model == "xyz":
            return [(self.jx, self.jy, self.jz)] * (n - 1)
        if self.model == "kondo":
            first = self.J * self.jprime
            return [(first,) * 3] + [(self.J,) * 3] * (n - 2)
        # bond i joins sites i+1, i+2 in 1-based labels; even i is an "odd" bond
        return [(self.J,) * 3 if i % 2 == 0 else (self.J * self.s,) * 3 for i in range(n - 1)]

    @property
    def conserves_sz(self) -> bool:
        return all(jx == jy for jx, jy, _ in self.bond_couplings)

    @property
    def entangler_weights(self) -> tuple:
        """Relative ``(Jx, Jy, Jz)`` weights used by ansatz entanglers."""
        if self.model == "xyz":
            return (self.jx, self.jy, self.jz)
        return (1.0, 1.0, 1.0)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("model", "n_qubits", "J", "jx", "jy", "jz",
                                              "jprime", "s")}


@dataclass
class GroundStateResult:
    energy: float
    state: PureState
    gap: float
    degenerate: bool
    # columns span the (possibly degenerate) ground space
    space: np.ndarray = field(repr=False, default=None)

    def fidelity(self, psi: PureState) -> float:
        """Squared norm of the projection of ``psi`` onto the ground space."""
        basis = self.space if self.space is not None else self.state.amplitudes[:, None]
        overlaps = basis.conj().T @ psi.amplitudes
        return float(min(1.0, np.vdot(overlaps, overlaps).real))


def _bond_matrices(spec: HamiltonianSpec) -> list:
    return [entangler_generator(*c) for c in spec.bond_couplings]


def _apply_h(psi: np.ndarray, bond_mats: list, n: int) -> np.ndarray:
    out = np.zeros_like(psi)
    for i, h in enumerate(bond_mats):
        shape = (1 << i, 4, 1 << (n - i - 2))
        out.reshape(shape)[...] += h @ psi.reshape(shape)
    return out


def apply_hamiltonian(spec: HamiltonianSpec, state: PureState) -> PureState:
    """Unnormalized ``H|psi>`` as a sum of two-site terms."""
    if state.n_qubits != spec.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, Hamiltonian {spec.n_qubits}")
    out = _apply_h(state.amplitudes, _bond_matrices(spec), spec.n_qubits)
    return PureState(spec.n_qubits, out)


def expectation_energy(spec: HamiltonianSpec, state: PureState) -> float:
    """``<psi|H|psi>`` for a normalized state."""
    if state.n_qubits != spec.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, Hamiltonian {spec.n_qubits}")
    norm = np.linalg.norm(state.amplitudes)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"state is not normalized (norm {norm:.3e})")
    h_psi = _apply_h(state.amplitudes, _bond_matrices(spec), spec.n_qubits)
    val = np.vdot(state.amplitudes, h_psi)
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"energy has imaginary part {val.imag:.3e}")
    return float(val.real)


def hamiltonian_matrix(spec: HamiltonianSpec) -> sp.csr_matrix:
    """Sparse ``2^n x 2^n`` matrix assembled from Kronecker products of Paulis."""
    n = spec.n_qubits
    dim = 1 << n
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for i, (jx, jy, jz) in enumerate(spec.bond_couplings):
        left = sp.identity(1 << i, format="csr")
        right = sp.identity(1 << (n - i - 2), format="csr")
        for j, p in ((jx, PAULI_X), (jy, PAULI_Y), (jz, PAULI_Z)):
            if j == 0:
                continue
            pair = sp.csr_matrix(np.kron(p, p))
            total = total + j * sp.kron(sp.kron(left, pair), right, format="csr")
    return total.tocsr()


def ground_state(spec: HamiltonianSpec, method: str = "auto", tol: float = 1e-9,
                 max_iter: int = 5000, degeneracy_tol: float = 1e-9) -> GroundStateResult:
    """Lowest eigenpair of ``spec``.

    ``method`` is ``"dense"`` (n <= 12), ``"iterative"`` (n <= 24, restarted
    Lanczos via ARPACK) or ``"auto"``.
    """
    n = spec.n_qubits
    if method == "auto":
        method = "dense" if n <= AUTO_DENSE_MAX else "iterative"
    if method == "dense":
        if n > DENSE_LIMIT:
            raise ValueError(f"dense ground state limited to n <= {DENSE_LIMIT}, got {n}")
        h = hamiltonian_matrix(spec).toarray()
        evals, evecs = np.linalg.eigh(h)
        k = 4 if len(evals) >= 4 else len(evals)
        evals, evecs = evals[:k], evecs[:, :k]
    elif method == "iterative":
        if n > ITERATIVE_LIMIT:
            raise ValueError(f"iterative ground state limited to n <= {ITERATIVE_LIMIT}, got {n}")
        bond_mats = _bond_matrices(spec)
        dim = 1 << n
        op = LinearOperator(
            (dim, dim), matvec=lambda v: _apply_h(np.asarray(v, complex).ravel(), bond_mats, n),
            dtype=complex,
        )
        rng = np.random.default_rng(12345)
        v0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        try:
            evals, evecs = eigsh(op, k=3, which="SA", tol=tol * 1e-3, maxiter=max_iter, v0=v0)
        except Exception as exc:  # ArpackNoConvergence
            raise RuntimeError(f"iterative eigensolver did not converge: {exc}") from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    e0 = float(evals[0])
    in_ground = np.abs(evals - e0) < degeneracy_tol
    space = evecs[:, in_ground]
    gap = float(evals[~in_ground][0] - e0) if (~in_ground).any() else 0.0
    psi = PureState(n, evecs[:, 0] / np.linalg.norm(evecs[:, 0]))
    residual = np.linalg.norm(apply_hamiltonian(spec, psi).amplitudes - e0 * psi.amplitudes)
    if residual > 1e-8:
        raise RuntimeError(f"ground state residual {residual:.2e} exceeds 1e-8")
    return GroundStateResult(
        energy=e0, state=psi, gap=gap, degenerate=bool(in_ground.sum() > 1), space=space
    )


def check_symmetries(spec: HamiltonianSpec, n_probe: int = 3, seed: int = 0,
                     threshold: float = 1e-9) -> dict:
    """Probe ``[H, S_z]`` and ``[H, M]`` on random states."""
    n = spec.n_qubits
    rng = np.random.default_rng(seed)
    bond_mats = _bond_matrices(spec)
    sz = sz_values(n)
    perm = mirror_permutation(n)
    worst_sz = worst_m = 0.0
    for _ in range(n_probe):
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        v /= np.linalg.norm(v)
        hv = _apply_h(v, bond_mats, n)
        worst_sz = max(worst_sz, np.linalg.norm(_apply_h(sz * v, bond_mats, n) - sz * hv))
        mv = np.empty_like(v)
        mv[perm] = v
        mhv = np.empty_like(hv)
        mhv[perm] = hv
        worst_m = max(worst_m, np.linalg.norm(_apply_h(mv, bond_mats, n) - mhv))
    return {"commutes_with_Sz": bool(worst_sz < threshold),
            "mirror_symmetric": bool(worst_m < threshold)}
