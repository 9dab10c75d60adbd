"""Exact finite-dimensional state algebra for small qubit registers.

Conventions fixed here and used everywhere else in the package:

* Basis ordering: qubit 0 is the most significant bit of the computational
  index, H maps to bit 0 and V to bit 1.  For four modes a,b,c,d this means
  ``|VVHH>`` sits at index 0b1100 = 12.
* Pauli labels are strings over the alphabet ``0xyz``, one character per
  qubit, e.g. ``"zz00"``.
* Collective spin ``J_u = (1/2) * sum_k sigma_u^(k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import combinations
from math import comb, sqrt
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "MAX_QUBITS",
    "CapacityError",
    "PureState",
    "DensityMatrix",
    "PAULI",
    "pauli_operator",
    "expectation",
    "fidelity_pure",
    "project_qubit",
    "project_qubit_density",
    "partial_trace",
    "collective_spin_operator",
    "collective_spin_squared",
    "dicke_state",
    "w_state",
    "w_bar_state",
    "g_state",
    "ghz_state",
    "bell_state",
    "basis_direction",
    "maximally_mixed",
    "random_density_matrix",
]

# Dense statevector simulation only; 2**20 amplitudes is the supported cap.
MAX_QUBITS = 20

NORM_TOL = 1e-12
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8

PAULI = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

COLLECTIVE_AXES = ("x", "y", "z")


class CapacityError(ValueError):
    """Register size exceeds the dense-simulation cap."""


def _check_n_qubits(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n_qubits must be a positive integer, got {n!r}")
    if n > MAX_QUBITS:
        raise CapacityError(f"n={n} exceeds the dense-simulation cap of {MAX_QUBITS} qubits")


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over the 2**n computational basis."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        _check_n_qubits(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**self.n_qubits:
            raise ValueError(
                f"amplitude vector of length {amps.shape[0]} does not match "
                f"2**{self.n_qubits} basis states"
            )
        norm = np.linalg.norm(amps)
        if norm < 1e-12:
            raise ValueError("cannot normalize a (near-)zero amplitude vector")
        if abs(norm - 1.0) > NORM_TOL:
            amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def density(self) -> "DensityMatrix":
        """Rank-one density matrix |psi><psi|."""
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> float:
        """|<self|other>|**2, insensitive to global phase."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on 2**n dimensions."""

    n_qubits: int
    elements: np.ndarray

    def __post_init__(self) -> None:
        _check_n_qubits(self.n_qubits)
        mat = np.asarray(self.elements, dtype=complex)
        dim = 2**self.n_qubits
        if mat.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValueError("matrix is not Hermitian within 1e-10")
        trace = np.trace(mat).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {trace} differs from 1 by more than 1e-10")
        min_eig = float(np.linalg.eigvalsh(mat)[0])
        if min_eig < EIGENVALUE_FLOOR:
            raise ValueError(f"minimum eigenvalue {min_eig:.3e} below physicality floor")
        mat = (mat + mat.conj().T) / 2.0
        mat.setflags(write=False)
        object.__setattr__(self, "elements", mat)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


def maximally_mixed(n_qubits: int) -> DensityMatrix:
    dim = 2**n_qubits
    return DensityMatrix(n_qubits, np.eye(dim, dtype=complex) / dim)


def pauli_operator(label: str | Sequence[str]) -> np.ndarray:
    """Tensor product of single-qubit Pauli/identity factors, qubit 0 leftmost."""
    chars = list(label)
    if not chars:
        raise ValueError("empty Pauli label")
    bad = [c for c in chars if c not in PAULI]
    if bad:
        raise ValueError(f"invalid Pauli characters {bad}; allowed: 0,x,y,z")
    _check_n_qubits(len(chars))
    return reduce(np.kron, (PAULI[c] for c in chars))


def _expectation_raw(rho: np.ndarray, observable: np.ndarray) -> float:
    # Tr(rho O) without the physicality checks; used on unconstrained matrices
    # such as linear-inversion estimates.
    return float(np.einsum("ij,ji->", rho, observable).real)


def expectation(rho: DensityMatrix, observable: np.ndarray) -> float:
    """Tr(rho O) for Hermitian O; the imaginary residue must sit below 1e-10."""
    obs = np.asarray(observable, dtype=complex)
    if obs.shape != (rho.dim, rho.dim):
        raise ValueError(f"observable shape {obs.shape} does not match dimension {rho.dim}")
    if np.max(np.abs(obs - obs.conj().T)) > HERMITICITY_TOL:
        raise ValueError("observable is not Hermitian within 1e-10")
    value = np.einsum("ij,ji->", rho.elements, obs)
    if abs(value.imag) >= 1e-10:
        raise ValueError(f"expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def fidelity_pure(rho: DensityMatrix, target: PureState) -> float:
    """<target|rho|target>, clamped to [0, 1]."""
    if target.n_qubits != rho.n_qubits:
        raise ValueError("qubit counts differ")
    vec = target.amplitudes
    value = np.vdot(vec, rho.elements @ vec)
    if abs(value.imag) >= 1e-10:
        raise ValueError(f"fidelity has imaginary residue {value.imag:.3e}")
    return float(min(1.0, max(0.0, value.real)))


def project_qubit(
    state: PureState, qubit: int, direction: PureState
) -> tuple[PureState | None, float]:
    """Project one qubit onto ``direction`` and drop it.

    Returns the renormalized post-measurement state of the remaining qubits
    together with the pre-normalization probability.  A zero-probability
    projection returns ``(None, 0.0)``.
    """
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {state.n_qubits} qubits")
    if direction.n_qubits != 1:
        raise ValueError("direction must be a single-qubit state")
    if state.n_qubits == 1:
        raise ValueError("cannot drop the only qubit")
    tensor = state.amplitudes.reshape((2,) * state.n_qubits)
    tensor = np.moveaxis(tensor, qubit, 0)
    remaining = np.tensordot(direction.amplitudes.conj(), tensor, axes=1).reshape(-1)
    probability = float(np.vdot(remaining, remaining).real)
    if probability <= 1e-24:
        return None, 0.0
    return PureState(state.n_qubits - 1, remaining / sqrt(probability)), probability


def project_qubit_density(
    rho: DensityMatrix, qubit: int, direction: PureState
) -> tuple[DensityMatrix | None, float]:
    """Mixed-state analogue of :func:`project_qubit`."""
    if not 0 <= qubit < rho.n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {rho.n_qubits} qubits")
    if direction.n_qubits != 1:
        raise ValueError("direction must be a single-qubit state")
    if rho.n_qubits == 1:
        raise ValueError("cannot drop the only qubit")
    n = rho.n_qubits
    tensor = rho.elements.reshape((2,) * (2 * n))
    tensor = np.moveaxis(tensor, (qubit, n + qubit), (0, 1))
    d = direction.amplitudes
    reduced = np.einsum("i,j,ij...->...", d.conj(), d, tensor)
    dim = 2 ** (n - 1)
    reduced = reduced.reshape(dim, dim)
    probability = float(np.trace(reduced).real)
    if probability <= 1e-24:
        return None, 0.0
    return DensityMatrix(n - 1, reduced / probability), probability


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every qubit not listed in ``keep`` (kept qubits keep their order)."""
    keep_list = sorted(set(int(q) for q in keep))
    n = rho.n_qubits
    if not keep_list:
        raise ValueError("keep set must not be empty")
    if keep_list[0] < 0 or keep_list[-1] >= n:
        raise ValueError(f"keep indices {keep_list} out of range for {n} qubits")
    tensor = rho.elements.reshape((2,) * (2 * n))
    row = list(range(n))
    col = list(range(n, 2 * n))
    for q in range(n):
        if q not in keep_list:
            col[q] = row[q]  # repeated index contracts the pair
    out = [row[q] for q in keep_list] + [col[q] for q in keep_list]
    reduced = np.einsum(tensor, row + col, out)
    dim = 2 ** len(keep_list)
    return DensityMatrix(len(keep_list), reduced.reshape(dim, dim))


@lru_cache(maxsize=64)
def collective_spin_operator(n_qubits: int, axis: str) -> np.ndarray:
    """J_axis = (1/2) sum_k sigma_axis^(k) as a dense matrix."""
    if axis not in COLLECTIVE_AXES:
        raise ValueError(f"axis must be one of {COLLECTIVE_AXES}, got {axis!r}")
    _check_n_qubits(n_qubits)
    dim = 2**n_qubits
    total = np.zeros((dim, dim), dtype=complex)
    for k in range(n_qubits):
        label = ["0"] * n_qubits
        label[k] = axis
        total += pauli_operator("".join(label))
    result = total / 2.0
    result.setflags(write=False)
    return result

def collective_spin_squared(rho: DensityMatrix, axis: str) -> float:
    """<J_axis**2>; lies in [0, (N/2)**2] for physical states."""
    j = collective_spin_operator(rho.n_qubits, axis)
    return expectation(rho, j @ j)


def _popcount(values: np.ndarray) -> np.ndarray:
    counts = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        counts += v & 1
        v >>= 1
    return counts


def dicke_state(n: int, m: int) -> PureState:
    """Equally weighted superposition of all n-qubit strings with m excitations (V's)."""
    _check_n_qubits(n)
    if not 0 <= m <= n:
        raise ValueError(f"excitation number m={m} must satisfy 0 <= m <= n={n}")
    indices = np.arange(2**n, dtype=np.int64)
    mask = _popcount(indices) == m
    amps = np.zeros(2**n, dtype=complex)
    amps[mask] = 1.0 / sqrt(comb(n, m))
    return PureState(n, amps)


def w_state(n: int = 3) -> PureState:
    return dicke_state(n, 1)


def w_bar_state(n: int = 3) -> PureState:
    """Global spin flip of the W state: one H among V's."""
    return dicke_state(n, n - 1)


def g_state() -> PureState:
    """Three-qubit GHZ-class state (|W3> - |W3bar>)/sqrt(2)."""
    amps = (w_state(3).amplitudes - w_bar_state(3).amplitudes) / sqrt(2.0)
    return PureState(3, amps)


def ghz_state(n: int = 3) -> PureState:
    _check_n_qubits(n)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1.0 / sqrt(2.0)
    return PureState(n, amps)


_BELL_AMPLITUDES = {
    "psi_plus": np.array([0, 1, 1, 0], dtype=complex) / sqrt(2.0),
    "psi_minus": np.array([0, 1, -1, 0], dtype=complex) / sqrt(2.0),
    "phi_plus": np.array([1, 0, 0, 1], dtype=complex) / sqrt(2.0),
    "phi_minus": np.array([1, 0, 0, -1], dtype=complex) / sqrt(2.0),
}


def bell_state(name: str) -> PureState:
    """psi_plus = (HV+VH)/sqrt2, psi_minus, phi_plus = (HH+VV)/sqrt2, phi_minus."""
    if name not in _BELL_AMPLITUDES:
        raise ValueError(f"unknown Bell state {name!r}; choose from {sorted(_BELL_AMPLITUDES)}")
    return PureState(2, _BELL_AMPLITUDES[name])


_DIRECTIONS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "plus": np.array([1, 1], dtype=complex) / sqrt(2.0),
    "minus": np.array([1, -1], dtype=complex) / sqrt(2.0),
    "L": np.array([1, 1j], dtype=complex) / sqrt(2.0),
    "R": np.array([1, -1j], dtype=complex) / sqrt(2.0),
}


def basis_direction(name: str) -> PureState:
    """Named single-qubit analysis directions: H, V, plus, minus, L, R."""
    if name not in _DIRECTIONS:
        raise ValueError(f"unknown direction {name!r}; choose from {sorted(_DIRECTIONS)}")
    return PureState(1, _DIRECTIONS[name])


def random_density_matrix(n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-sampled physical state, full rank unless ``rank`` is given."""
    dim = 2**n_qubits
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    mat = g @ g.conj().T
    return DensityMatrix(n_qubits, mat / np.trace(mat).real)
