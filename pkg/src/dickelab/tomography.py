"""Density-matrix reconstruction from count data.

Correlators ``Tr[rho (sigma_i x sigma_j x ...)]`` are estimated from
efficiency-corrected rates, assembled into a correlation tensor, inverted
linearly, and refined by physicality-constrained maximum likelihood.

Likelihood model: each outcome count is Poissonian with an unknown
per-setting flux.  Profiling the flux out analytically reduces the
rho-dependent part to the multinomial form used below (the subtracted
Poisson mean terms become the constant total count and are dropped, so the
all-zero-data log-likelihood is exactly 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .simulate import CountRecord, efficiency_correct, enumerate_settings, outcome_efficiencies, setting_rotation
from .states import DensityMatrix, pauli_operator

__all__ = [
    "PROBABILITY_FLOOR",
    "CorrelationTensor",
    "MleReport",
    "correlation_tensor",
    "linear_inversion",
    "clipped_linear_inversion",
    "log_likelihood",
    "mle_fit",
    "mle_fit_fixed_point",
]

PROBABILITY_FLOOR = 1e-12

_AXIS_FOR_DIGIT = "0xyz"
_SETTING_FOR_AXIS = {"x": "X", "y": "Y", "z": "Z"}


@dataclass(frozen=True)
class CorrelationTensor:
    """All 4**n Pauli correlators, indexed by one base-4 digit per qubit.

    ``values`` has shape (4,) * n_qubits; digit meaning 0=identity, 1=x,
    2=y, 3=z, qubit 0 on the first axis.
    """

    n_qubits: int
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (4,) * self.n_qubits:
            raise ValueError(f"expected shape {(4,) * self.n_qubits}, got {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def value(self, label: str) -> float:
        """Correlator for a Pauli label string such as ``"zz00"``."""
        if len(label) != self.n_qubits:
            raise ValueError(f"label {label!r} does not match {self.n_qubits} qubits")
        idx = tuple(_AXIS_FOR_DIGIT.index(c) for c in label)
        return float(self.values[idx])


@dataclass(frozen=True)
class MleReport:
    rho: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    gradient_norm_final: float
    skipped_settings: tuple[str, ...] = ()


def _records_by_setting(records: Sequence[CountRecord]) -> dict[str, CountRecord]:
    if not records:
        raise ValueError("no count records given")
    n = records[0].n_qubits
    expected = enumerate_settings(n)
    seen: dict[str, CountRecord] = {}
    for rec in records:
        if rec.n_qubits != n:
            raise ValueError("records mix qubit counts")
        if rec.setting in seen:
            raise ValueError(f"duplicate setting {rec.setting!r}")
        seen[rec.setting] = rec
    missing = [s for s in expected if s not in seen]
    if missing:
        raise ValueError(f"missing settings, e.g. {missing[:3]} ({len(missing)} of {len(expected)})")
    return seen


def _setting_correlator(rates: np.ndarray, positions: tuple[int, ...], n: int) -> float:
    """Sign-weighted marginal of normalized rates over the given qubit positions."""
    total = rates.sum()
    if total <= 0:
        raise ValueError("setting has zero total rate")
    outcomes = np.arange(rates.shape[0])
    signs = np.ones(rates.shape[0])
    for k in positions:
        bits = (outcomes >> (n - 1 - k)) & 1
        signs = signs * (1.0 - 2.0 * bits)
    return float((signs * rates).sum() / total)


def correlation_tensor(records: Sequence[CountRecord]) -> CorrelationTensor:
    """Estimate every Pauli correlator from a complete set of count records.

    Labels containing identities are averaged over all compatible settings
    (every basis choice on the identity slots), which uses all available data.
    """
    by_setting = _records_by_setting(records)
    n = next(iter(by_setting.values())).n_qubits
    rates = {s: efficiency_correct(rec) for s, rec in by_setting.items()}
    for s, r in rates.items():
        if r.sum() <= 0:
            raise ValueError(f"setting {s!r} has zero total counts")

    values = np.zeros((4,) * n)
    for digits in product(range(4), repeat=n):
        label = "".join(_AXIS_FOR_DIGIT[d] for d in digits)
        positions = tuple(k for k, d in enumerate(digits) if d != 0)
        if not positions:
            values[digits] = 1.0
            continue
        free = [k for k in range(n) if k not in positions]
        acc = 0.0
        count = 0
        for fill in product("ZXY", repeat=len(free)):
            chars = [""] * n
            for k in positions:
                chars[k] = _SETTING_FOR_AXIS[label[k]]
            for k, c in zip(free, fill):
                chars[k] = c
            setting = "".join(chars)
            acc += _setting_correlator(rates[setting], positions, n)
            count += 1
        values[digits] = acc / count
    return CorrelationTensor(n, values)


def linear_inversion(tensor: CorrelationTensor) -> np.ndarray:
    """rho = 2**-n sum_labels T[label] sigma_label; may have negative eigenvalues."""
    n = tensor.n_qubits
    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    for digits in product(range(4), repeat=n):
        label = "".join(_AXIS_FOR_DIGIT[d] for d in digits)
        rho += tensor.values[digits] * pauli_operator(label)
    return rho / dim


def _likelihood_terms(records: Sequence[CountRecord]):
    """Per-setting rotation stacks, counts, and outcome efficiencies."""
    rotations = np.stack([setting_rotation(rec.setting) for rec in records])
    counts = np.stack([rec.counts for rec in records])
    effs = np.stack([outcome_efficiencies(rec.setting, rec.efficiencies) for rec in records])
    return rotations, counts, effs


def _log_likelihood_raw(rho: np.ndarray, rotations, counts, effs) -> float:
    probs = np.einsum("soi,ij,soj->so", rotations, rho, rotations.conj()).real
    probs = np.clip(probs, 0.0, None)
    weighted = effs * probs
    norms = weighted.sum(axis=1, keepdims=True)
    norms = np.where(norms <= 0, 1.0, norms)
    detected = np.clip(weighted / norms, PROBABILITY_FLOOR, None)
    terms = np.where(counts > 0, counts * np.log(detected), 0.0)
    return float(terms.sum())


def log_likelihood(rho: DensityMatrix, records: Sequence[CountRecord]) -> float:
    """Poisson log-likelihood with the per-setting flux profiled out.

    Outcome probabilities are weighted by detector efficiencies, renormalized
    per setting, and floored at 1e-12 inside the logarithm; terms with zero
    counts contribute exactly 0.
    """
    if any(rec.n_qubits != rho.n_qubits for rec in records):
        raise ValueError("records do not match the state dimension")
    rotations, counts, effs = _likelihood_terms(records)
    return _log_likelihood_raw(rho.elements, rotations, counts, effs)


def _ll_gradient_rho(rho: np.ndarray, rotations, counts, effs) -> np.ndarray:
    """Hermitian H with dLL = Tr(H drho)."""
    probs = np.einsum("soi,ij,soj->so", rotations, rho, rotations.conj()).real
    probs = np.clip(probs, 1e-300, None)
    weighted = effs * probs
    norms = np.clip(weighted.sum(axis=1), 1e-300, None)
    totals = counts.sum(axis=1)
    coeff = counts / probs - (totals / norms)[:, None] * effs
    return np.einsum("so,soi,soj->ij", coeff, rotations.conj(), rotations)


def _tril_indices(dim: int):
    diag = np.arange(dim)
    low_r, low_c = np.tril_indices(dim, k=-1)
    return diag, low_r, low_c


def _params_to_t(params: np.ndarray, dim: int) -> np.ndarray:
    diag, low_r, low_c = _tril_indices(dim)
    n_low = low_r.shape[0]
    t = np.zeros((dim, dim), dtype=complex)
    t[diag, diag] = params[:dim]
    t[low_r, low_c] = params[dim : dim + n_low] + 1j * params[dim + n_low :]
    return t


def _t_to_params(t: np.ndarray) -> np.ndarray:
    dim = t.shape[0]
    diag, low_r, low_c = _tril_indices(dim)
    return np.concatenate([t[diag, diag].real, t[low_r, low_c].real, t[low_r, low_c].imag])


def _rho_from_t(t: np.ndarray) -> np.ndarray:
    s = t.conj().T @ t
    return s / np.trace(s).real


def clipped_linear_inversion(records: Sequence[CountRecord]) -> np.ndarray:
    """Linear inversion projected onto the physical cone (negatives clipped, renormalized)."""
    rho_lin = linear_inversion(correlation_tensor(records))
    vals, vecs = np.linalg.eigh(rho_lin)
    vals = np.clip(vals, 0.0, None)
    if vals.sum() <= 0:
        vals = np.ones_like(vals)
    vals /= vals.sum()
    return (vecs * vals) @ vecs.conj().T


def _lower_triangular_factor(rho0: np.ndarray) -> np.ndarray:
    """Lower-triangular T with T^dag T = rho0 (Cholesky in the reversed basis)."""
    dim = rho0.shape[0]
    ridge = 1e-10
    for _ in range(8):
        try:
            chol = np.linalg.cholesky(rho0[::-1, ::-1] + ridge * np.eye(dim))
            break
        except np.linalg.LinAlgError:
            ridge *= 10
    else:
        raise np.linalg.LinAlgError("could not factor the MLE initializer")
    return chol[::-1, ::-1].conj().T


def mle_fit(
    records: Sequence[CountRecord],
    max_iterations: int = 1000,
    tolerance: float = 1e-10,
    seed: int = 0,
) -> MleReport:
    """Maximum-likelihood fit through the Cholesky-style T^dag T parameterization.

    Quasi-Newton (L-BFGS) ascent with the analytic gradient; converged means
    the relative log-likelihood improvement fell below ``tolerance`` or the
    gradient norm fell below 1e-8.  Settings with zero total counts are
    skipped and reported, never fatal.  The fit is deterministic; ``seed`` is
    accepted for interface stability only.
    """
    by_setting = _records_by_setting(records)
    usable = [rec for rec in by_setting.values() if rec.counts.sum() > 0]
    skipped = tuple(s for s, rec in by_setting.items() if rec.counts.sum() == 0)
    if not usable:
        raise ValueError("all settings have zero total counts")
    n = usable[0].n_qubits
    dim = 2**n
    rotations, counts, effs = _likelihood_terms(usable)

    def objective(params: np.ndarray):
        t = _params_to_t(params, dim)
        s = t.conj().T @ t
        trace = np.trace(s).real
        rho = s / trace
        ll = _log_likelihood_raw(rho, rotations, counts, effs)
        h = _ll_gradient_rho(rho, rotations, counts, effs)
        h_eff = (h - np.einsum("ij,ji->", h, rho).real * np.eye(dim)) / trace
        grad_t_conj = t @ h_eff  # dLL/dT* (Wirtinger)
        diag, low_r, low_c = _tril_indices(dim)
        grad = np.concatenate(
            [
                2.0 * grad_t_conj[diag, diag].real,
                2.0 * grad_t_conj[low_r, low_c].real,
                2.0 * grad_t_conj[low_r, low_c].imag,
            ]
        )
        return -ll, -grad

    rho0 = np.eye(dim) / dim if skipped else clipped_linear_inversion(records)
    t0 = _lower_triangular_factor(rho0)
    x0 = _t_to_params(t0)
    result = minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": max_iterations,
            "ftol": tolerance,
            "gtol": 1e-8,
            "maxcor": 20,
        },
    )
    rho_fit = _rho_from_t(_params_to_t(result.x, dim))
    grad_norm = float(np.linalg.norm(result.jac))
    converged = bool(result.success) or grad_norm < 1e-8
    return MleReport(
        rho=DensityMatrix(n, rho_fit),
        log_likelihood=float(-result.fun),
        iterations=int(result.nit),
        converged=converged,
        gradient_norm_final=grad_norm,
        skipped_settings=skipped,
    )


def mle_fit_fixed_point(
    records: Sequence[CountRecord],
    max_iterations: int = 20000,
    tolerance: float = 1e-12,
    seed: int = 0,
) -> MleReport:
    """Diluted R-rho-R fixed-point iteration; cross-check oracle for mle_fit.

    The update rho' = N[(1 + eps(R-1)) rho (1 + eps(R-1))] with R the scaled
    likelihood gradient is monotone for small eps; eps starts at 1 (the
    classic update) and is halved whenever the likelihood would decrease.
    """
    by_setting = _records_by_setting(records)
    usable = [rec for rec in by_setting.values() if rec.counts.sum() > 0]
    skipped = tuple(s for s, rec in by_setting.items() if rec.counts.sum() == 0)
    if not usable:
        raise ValueError("all settings have zero total counts")
    n = usable[0].n_qubits
    dim = 2**n
    rotations, counts, effs = _likelihood_terms(usable)

    rho0 = np.eye(dim) / dim if skipped else clipped_linear_inversion(records)
    rho = _rho_from_t(_lower_triangular_factor(rho0))
    ll = _log_likelihood_raw(rho, rotations, counts, effs)
    identity = np.eye(dim)
    total_counts = counts.sum()
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        h = _ll_gradient_rho(rho, rotations, counts, effs)
        # With unit efficiencies and eps=1 the step I + H/N is the classic
        # R/N operator of the R-rho-R iteration; dilution keeps it monotone.
        r_step = h / total_counts
        eps = 1.0
        improved = False
        while eps > 1e-6:
            step = identity + eps * r_step
            cand = step @ rho @ step.conj().T
            cand = (cand + cand.conj().T) / 2.0
            cand /= np.trace(cand).real
            cand_ll = _log_likelihood_raw(cand, rotations, counts, effs)
            if cand_ll >= ll:
                improved = cand_ll > ll
                rel = (cand_ll - ll) / max(1.0, abs(ll))
                rho, ll = cand, cand_ll
                if rel < tolerance:
                    converged = True
                break
            eps /= 2.0
        if converged or not improved:
            converged = converged or not improved
            break

    h = _ll_gradient_rho(rho, rotations, counts, effs)
    h_eff = h - np.einsum("ij,ji->", h, rho).real * np.eye(dim)
    grad_norm = float(np.linalg.norm(h_eff @ rho))
    return MleReport(
        rho=DensityMatrix(n, rho),
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        gradient_norm_final=grad_norm,
        skipped_settings=skipped,
    )
