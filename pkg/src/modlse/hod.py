"""Higher-order-difference recovery baseline.

Under the sampling condition dt <= 1/(2*omega*e) and difference order

    N >= ceil((log lam - log B) / log(dt*omega*e)),

folding commutes with N-th order differencing: fold(D^N z) == D^N y for
noiseless captures, so standard sparse recovery (OMP) applies on the
differenced dictionary.  Differencing amplifies measurement noise by
roughly 2^N, which is the method's known weakness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adc import ModuloCapture
from .core import Dictionary, apply_difference, fold_complex

__all__ = [
    "HodConfig",
    "RecoveryResult",
    "check_sampling_condition",
    "required_order",
    "min_sample_count",
    "hod_measurements",
    "omp",
    "recover_hod",
]


@dataclass(frozen=True)
class HodConfig:
    """Known signal bound B = ||y||_inf, max frequency, folding threshold."""

    lam: float
    b_bound: float
    omega_max: float
    order_override: int | None = None

    def __post_init__(self):
        if self.b_bound <= 0 or self.omega_max <= 0 or self.lam <= 0:
            raise ValueError("lam, B and omega must be positive")


@dataclass
class RecoveryResult:
    """Common output of all recovery methods."""

    alpha_hat: np.ndarray
    y_hat: np.ndarray
    method: str
    support: tuple[int, ...]
    diagnostics: dict = field(default_factory=dict)


class ConditionViolated(ValueError):
    """A theorem's sampling-rate precondition does not hold."""


def check_sampling_condition(delta_t: float, omega: float) -> bool:
    """True iff dt <= 1/(2*omega*e)."""
    if delta_t <= 0 or omega <= 0:
        raise ValueError("delta_t and omega must be positive")
    return delta_t <= 1.0 / (2.0 * omega * math.e)


def required_order(lam: float, b_bound: float, delta_t: float, omega: float) -> int:
    """Smallest valid difference order (floored at 1).

    Requires dt*omega*e < 1; otherwise the order formula is invalid.
    """
    x = delta_t * omega * math.e
    if x >= 1.0:
        raise ConditionViolated(
            f"dt*omega*e = {x:.4f} >= 1; no difference order can shrink the signal"
        )
    n = math.ceil((math.log(lam) - math.log(b_bound)) / math.log(x))
    return max(n, 1)


def min_sample_count(k: int, b_bound: float, lam: float) -> int:
    """Minimum sample count 2K + 7B/lam for reliable HOD recovery."""
    return math.ceil(2 * k + 7.0 * b_bound / lam)


def hod_measurements(z: np.ndarray, order: int, lam: float) -> np.ndarray:
    """fold(D^N z): the linear-model measurements once the order is valid."""
    return fold_complex(apply_difference(z, order), lam)


def omp(
    phi: np.ndarray,
    b: np.ndarray,
    max_sparsity: int,
    residual_tol: float = 0.0,
) -> tuple[np.ndarray, dict]:
    """Orthogonal matching pursuit.

    Greedy atom selection by normalized residual correlation with a
    least-squares refit on the support each iteration; stops at
    max_sparsity atoms or when the residual norm drops to residual_tol.
    Zero columns are never selected.  Returns (coefficients, diagnostics).
    """
    phi = np.asarray(phi)
    norms = np.linalg.norm(phi, axis=0)
    selectable = norms > 0
    if not selectable.any():
        raise ValueError("OMP needs at least one nonzero column")
    safe_norms = np.where(selectable, norms, 1.0)

    coef = np.zeros(phi.shape[1], dtype=complex)
    support: list[int] = []
    resid = b.astype(complex).copy()
    status = "ok"
    fit = np.zeros(0, dtype=complex)
    for _ in range(max_sparsity):
        if np.linalg.norm(resid) <= residual_tol:
            break
        corr = np.abs(phi.conj().T @ resid) / safe_norms
        corr[~selectable] = 0.0
        corr[support] = 0.0
        j = int(np.argmax(corr))
        if corr[j] <= 0.0:
            break
        support.append(j)
        sub = phi[:, support]
        fit, _, rank, _ = np.linalg.lstsq(sub, b, rcond=None)
        if rank < len(support):
            status = "numerical-failure"
            fit = np.linalg.pinv(sub) @ b
        resid = b - sub @ fit

    coef[support] = fit
    return coef, {
        "residual_norm": float(np.linalg.norm(resid)),
        "iterations": len(support),
        "solver_status": status,
    }


def recover_hod(
    capture: ModuloCapture, dictionary: Dictionary, config: HodConfig,
    max_sparsity: int | None = None,
) -> RecoveryResult:
    """OMP on (D^N A, fold(D^N z)) with N from the order formula."""
    dt = dictionary.sgrid.delta_t
    if not check_sampling_condition(dt, config.omega_max):
        raise ConditionViolated(
            f"dt={dt} violates the HOD sampling condition "
            f"{1.0 / (2.0 * config.omega_max * math.e):.6f}"
        )
    order = config.order_override or required_order(
        config.lam, config.b_bound, dt, config.omega_max
    )
    meas = hod_measurements(capture.z, order, config.lam)
    phi = apply_difference(dictionary.matrix, order)
    m_eff = meas.shape[0]
    if max_sparsity is None:
        max_sparsity = phi.shape[1]
        tol = 3.0 * capture.sigma * math.sqrt(m_eff)
    else:
        tol = 0.0
    alpha_hat, diag = omp(phi, meas, max_sparsity, tol)
    diag["order"] = order
    y_hat = dictionary.matrix @ alpha_hat
    return RecoveryResult(
        alpha_hat=alpha_hat,
        y_hat=y_hat,
        method="hod",
        support=tuple(np.flatnonzero(alpha_hat != 0).tolist()),
        diagnostics=diag,
    )
