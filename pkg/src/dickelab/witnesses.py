"""Entanglement witnesses with their biseparability bounds.

Three constructions: the fidelity-based generic witness, the two-setting
collective-spin witness for three and four qubits, and a locally filtered
GHZ witness whose filters are found by numerical optimization.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from ._concurrency import run_indexed
from .simulate import CountRecord
from .states import (
    DensityMatrix,
    PureState,
    collective_spin_operator,
    collective_spin_squared,
    dicke_state,
    fidelity_pure,
    ghz_state,
)
from .tomography import correlation_tensor, linear_inversion

__all__ = [
    "SPIN_WITNESS_BOUND_4",
    "SPIN_WITNESS_BOUND_3",
    "JZ_SQUARED_SYMMETRIC_MIN",
    "DICKE_FIDELITY_ALPHA",
    "GHZ3_FIDELITY_ALPHA",
    "WitnessVerdict",
    "LocalFilter",
    "fidelity_witness",
    "collective_spin_witness",
    "jz_squared_check",
    "filtered_ghz_witness",
    "bootstrap_errors",
]

# Biseparability bounds for <Jx^2> + <Jy^2>; exceeding them certifies
# genuine multipartite entanglement.
SPIN_WITNESS_BOUND_4 = 7.0 / 2.0 + sqrt(3.0)
SPIN_WITNESS_BOUND_3 = 2.0 + sqrt(5.0) / 2.0
# Equivalent form for symmetric states: <Jz^2> of biseparable symmetric
# four-qubit states cannot drop below 5/2 - sqrt(3).
JZ_SQUARED_SYMMETRIC_MIN = 5.0 / 2.0 - sqrt(3.0)

# Fidelity thresholds of the generic projector witnesses alpha*1 - |t><t|.
DICKE_FIDELITY_ALPHA = 2.0 / 3.0
GHZ3_FIDELITY_ALPHA = 3.0 / 4.0


@dataclass(frozen=True)
class WitnessVerdict:
    name: str
    value: float
    bound: float
    direction: str  # "below_is_entangled" | "above_is_entangled"
    entangled: bool
    statistical_error: float | None = None
    inconclusive_reason: str | None = None

    def __post_init__(self) -> None:
        if self.direction not in ("below_is_entangled", "above_is_entangled"):
            raise ValueError(f"unknown direction {self.direction!r}")


def _verdict(name: str, value: float, bound: float, direction: str, error: float | None = None,
             reason: str | None = None) -> WitnessVerdict:
    if direction == "below_is_entangled":
        entangled = value < bound
    else:
        entangled = value > bound
    if reason is not None:
        entangled = False
    return WitnessVerdict(name, value, bound, direction, entangled, error, reason)


def fidelity_witness(rho: DensityMatrix, target: PureState, alpha: float) -> WitnessVerdict:
    """alpha - <target|rho|target>; negative values certify entanglement."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    value = alpha - fidelity_pure(rho, target)
    return _verdict(f"fidelity_witness(alpha={alpha:.4g})", value, 0.0, "below_is_entangled")


def collective_spin_witness(rho: DensityMatrix, n: int) -> WitnessVerdict:
    """<Jx^2> + <Jy^2> against the n-qubit biseparability bound (n = 3 or 4)."""
    if n not in (3, 4):
        raise ValueError("the collective-spin bounds are tabulated for n = 3 and 4 only")
    if rho.n_qubits != n:
        raise ValueError(f"state has {rho.n_qubits} qubits, expected {n}")
    value = collective_spin_squared(rho, "x") + collective_spin_squared(rho, "y")
    bound = SPIN_WITNESS_BOUND_4 if n == 4 else SPIN_WITNESS_BOUND_3
    return _verdict(f"collective_spin_witness(n={n})", value, bound, "above_is_entangled")


def jz_squared_check(rho: DensityMatrix) -> float:
    """<Jz^2> of a four-qubit state.

    For symmetric states <Jx^2>+<Jy^2> = <J^2> - <Jz^2> with <J^2> = 6, so the
    four-qubit witness bound is equivalent to <Jz^2> >= 5/2 - sqrt(3) for
    biseparable symmetric states.
    """
    if rho.n_qubits != 4:
        raise ValueError("jz_squared_check expects a four-qubit state")
    return collective_spin_squared(rho, "z")


@dataclass(frozen=True)
class LocalFilter:
    """Tensor factors of an SLOCC filter, each with unit largest singular value."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            mat = np.asarray(getattr(self, name), dtype=complex)
            if mat.shape != (2, 2):
                raise ValueError(f"filter {name} must be 2x2")
            svals = np.linalg.svd(mat, compute_uv=False)
            if abs(svals[0] - 1.0) > 1e-8:
                raise ValueError(f"filter {name} largest singular value {svals[0]:.6f} != 1")
            if svals[-1] < 1e-8 or svals[0] / max(svals[-1], 1e-300) > 1e8:
                raise ValueError(f"filter {name} is numerically singular")
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)

    def matrix(self) -> np.ndarray:
        return np.kron(np.kron(self.a, self.b), self.c)


def _ghz_witness_operator() -> np.ndarray:
    ghz = ghz_state(3).amplitudes
    return 0.75 * np.eye(8, dtype=complex) - np.outer(ghz, ghz.conj())


def _pack(mats: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in mats])


def _unpack(params: np.ndarray) -> list[np.ndarray]:
    mats = []
    for i in range(3):
        block = params[8 * i : 8 * (i + 1)]
        mats.append((block[:4] + 1j * block[4:]).reshape(2, 2))
    return mats


def _filtered_value_and_grad(params: np.ndarray, rho: np.ndarray, w_op: np.ndarray):
    """Tr(rho F^dag W F) normalized by the product of squared top singular values."""
    mats = _unpack(params)
    filt = np.kron(np.kron(mats[0], mats[1]), mats[2])
    numerator = np.einsum("xy,yz,zw,wx->", filt, rho, filt.conj().T, w_op).real
    g_f = w_op @ filt @ rho  # dN/dF*
    g6 = g_f.reshape(2, 2, 2, 2, 2, 2)

    svd = [np.linalg.svd(m) for m in mats]
    s_sq = [sv[1][0] ** 2 for sv in svd]
    denom = s_sq[0] * s_sq[1] * s_sq[2]
    value = numerator / denom

    grads = []
    for i in range(3):
        others = [m.conj() for j, m in enumerate(mats) if j != i]
        if i == 0:
            gn = np.einsum("dbcDBC,bB,cC->dD", g6, others[0], others[1])
        elif i == 1:
            gn = np.einsum("dbcDBC,dD,cC->bB", g6, others[0], others[1])
        else:
            gn = np.einsum("dbcDBC,dD,bB->cC", g6, others[0], others[1])
        u, s, vh = svd[i]
        gd = (denom / s_sq[i]) * s[0] * np.outer(u[:, 0], vh[0])
        g_conj = (gn - value * gd) / denom  # d(value)/dM_i^* (Wirtinger)
        grads.append(np.concatenate([2.0 * g_conj.real.ravel(), 2.0 * g_conj.imag.ravel()]))
    return value, np.concatenate(grads)


def _normalized_filter(mats: Sequence[np.ndarray]) -> LocalFilter:
    scaled = []
    for m in mats:
        top = np.linalg.svd(m, compute_uv=False)[0]
        scaled.append(m / top)
    return LocalFilter(*scaled)


def filtered_ghz_witness(
    rho3: DensityMatrix,
    restarts: int = 16,
    seed: int = 0,
    max_iterations: int = 400,
    tolerance: float = 1e-12,
) -> tuple[WitnessVerdict, LocalFilter]:
    """Minimize Tr(rho F^dag (3/4 - |GHZ3><GHZ3|) F) over local filters.

    A negative optimum certifies GHZ-class entanglement (filtering is an
    SLOCC operation, so it cannot create it).  The unfiltered value at the
    identity is always kept as a candidate.  Each restart first maximizes
    the filtered GHZ overlap Tr(rho F^dag |GHZ><GHZ| F) -- this steers away
    from the spurious valley where the filters simply annihilate the state
    -- and then descends the witness objective from both that warm start and
    the raw start.  Restart i is deterministic given (seed, i), so
    concurrent evaluation cannot change the result.
    """
    if rho3.n_qubits != 3:
        raise ValueError("filtered_ghz_witness expects a three-qubit state")
    if restarts < 1:
        raise ValueError("need at least one restart")
    w_op = _ghz_witness_operator()
    ghz = ghz_state(3).amplitudes
    overlap_op = -np.outer(ghz, ghz.conj())
    rho = rho3.elements

    identity = [np.eye(2, dtype=complex)] * 3
    # The identity evaluation is exact and always kept as a candidate.
    id_value, _ = _filtered_value_and_grad(_pack(identity), rho, w_op)
    best_value, best_mats = id_value, identity

    opts = {"maxiter": max_iterations, "ftol": tolerance, "gtol": 1e-12}

    def one_restart(index: int):
        rng = np.random.Generator(np.random.PCG64((seed << 8) + index))
        if index == 0:
            start = [
                np.eye(2) + 0.05 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
                for _ in range(3)
            ]
        elif index % 2 == 1:
            # Symmetric triples help for permutation-symmetric states.
            t = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            start = [t.copy() for _ in range(3)]
        else:
            start = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3)]
        start = [m / np.linalg.svd(m, compute_uv=False)[0] for m in start]
        x_start = _pack(start)

        stage_a = minimize(
            _filtered_value_and_grad, x_start, args=(rho, overlap_op),
            jac=True, method="L-BFGS-B", options=opts,
        )
        outcomes = []
        for x0 in (stage_a.x, x_start):
            result = minimize(
                _filtered_value_and_grad, x0, args=(rho, w_op),
                jac=True, method="L-BFGS-B", options=opts,
            )
            outcomes.append((float(result.fun), _unpack(result.x), bool(result.success)))
        return outcomes

    results = [r for group in run_indexed(one_restart, range(restarts)) for r in group]
    any_converged = any(ok for _, _, ok in results)
    for value, mats, _ in results:
        conditioned = all(
            np.linalg.cond(m) < 1e8 and np.linalg.svd(m, compute_uv=False)[0] > 1e-8 for m in mats
        )
        if value < best_value and conditioned:
            best_value, best_mats = value, mats

    reason = None if any_converged else "no restart converged"
    verdict = _verdict("filtered_ghz_witness", best_value, 0.0, "below_is_entangled", reason=reason)
    return verdict, _normalized_filter(best_mats)


def _default_evaluators(n: int) -> dict[str, Callable[[np.ndarray], float]]:
    target = dicke_state(n, n // 2).amplitudes
    jx = collective_spin_operator(n, "x")
    jy = collective_spin_operator(n, "y")
    jz = collective_spin_operator(n, "z")

    def fidelity(rho: np.ndarray) -> float:
        return float(np.vdot(target, rho @ target).real)

    return {
        "fidelity": fidelity,
        "fidelity_witness": lambda rho: DICKE_FIDELITY_ALPHA - fidelity(rho),
        "collective_spin_witness": lambda rho: float(
            np.einsum("ij,ji->", rho, jx @ jx + jy @ jy).real
        ),
        "jz_squared": lambda rho: float(np.einsum("ij,ji->", rho, jz @ jz).real),
    }


def bootstrap_errors(
    records: Sequence[CountRecord],
    evaluators: dict[str, Callable[[np.ndarray], float]] | None = None,
    n_resamples: int = 200,
    seed: int = 0,
) -> dict[str, float]:
    """Parametric bootstrap standard deviations of witness-style functionals.

    Each resample redraws every outcome count from a Poisson distribution
    with the observed count as its mean, re-estimates the correlation tensor
    and evaluates the functionals on the linear-inversion matrix (physicality
    is irrelevant for these linear functionals).  Resample i derives its seed
    from (seed, i) only.
    """
    if n_resamples < 2:
        raise ValueError("need at least two resamples")
    n = records[0].n_qubits
    evals = evaluators if evaluators is not None else _default_evaluators(n)

    def one_resample(index: int) -> dict[str, float]:
        rng = np.random.Generator(np.random.PCG64((seed << 8) + 0x5D + index))
        resampled = [
            CountRecord(
                rec.setting,
                rng.poisson(rec.counts).astype(float),
                rec.efficiencies,
                rec.duration_tag,
            )
            for rec in records
        ]
        rho = linear_inversion(correlation_tensor(resampled))
        return {name: fn(rho) for name, fn in evals.items()}

    samples = run_indexed(one_resample, range(n_resamples))
    return {
        name: float(np.std([s[name] for s in samples], ddof=1)) for name in samples[0]
    }
