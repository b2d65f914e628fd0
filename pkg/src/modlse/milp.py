"""MILP-based recovery on first-order differences.

The complex model D z = (D A) alpha + 2*lam*e_tilde + D v is lifted to
real variables (alpha_check = [Re alpha; Im alpha] split into
nonnegative xi - zeta) with ternary integer fold-difference variables
e_check in {0, +-1} (valid when dt < 2*lam/(omega*beta_bar)):

    min 1'(xi + zeta)
    s.t. -eps' <= z_check - A_check (xi - zeta) - 2*lam*e_check <= eps'.

The branch-and-bound engine gets two strong hints computed here:

* an incumbent from a phase-unwrap heuristic (Itoh unwrap of the folded
  first differences per real/imag part, sparse OMP fit with a constant
  column absorbing the unwrap offset, then refold/debias iterations) —
  on these instances the LP relaxation bound is always ~0, so a good
  incumbent, not bound pruning, is what produces the answer;
* a crash basis putting each e_check variable into the basis, which is
  feasible up to noise and lets the root LP finish in a few pivots.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .adc import ModuloCapture, quantization_sigma
from .core import Dictionary, apply_difference, fold_real
from .engine import LpProblem, MipProblem, solve_mip
from .hod import RecoveryResult, omp

__all__ = [
    "RealLifting",
    "build_milp",
    "realify",
    "choose_epsilon_prime",
    "max_sampling_interval_milp",
    "unwrap_heuristic",
    "recover_milp",
    "build_full_integer_reference",
]


@dataclass
class RealLifting:
    """Real-valued form: a_check (2n x 2p), z_check (2n)."""

    a_check: np.ndarray
    z_check: np.ndarray
    p: int
    n: int


def realify(a_tilde: np.ndarray, z_tilde: np.ndarray) -> RealLifting:
    n, p = a_tilde.shape
    if z_tilde.shape != (n,):
        raise ValueError("inconsistent lifting dimensions")
    a_check = np.block(
        [[a_tilde.real, -a_tilde.imag], [a_tilde.imag, a_tilde.real]]
    )
    z_check = np.concatenate([z_tilde.real, z_tilde.imag])
    return RealLifting(a_check=a_check, z_check=z_check, p=p, n=n)


def choose_epsilon_prime(sigma: float, m_count: int) -> float:
    """Default box tolerance: 4*sigma (rarely exceeded by the
    first-difference noise per real component), floored at 1e-6."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return max(4.0 * sigma, 1e-6)


def max_sampling_interval_milp(omega: float, beta_bar: float, lam: float) -> float:
    """Largest dt for which the fold differences are ternary."""
    if min(omega, beta_bar, lam) <= 0:
        raise ValueError("all inputs must be positive")
    return 2.0 * lam / (omega * beta_bar)


def build_milp(lifting: RealLifting, lam: float, epsilon_prime: float) -> MipProblem:
    """MILP instance: variables [xi (2p), zeta (2p), e_check (2n)].

    Row layout: for real component i, row 2i bounds the residual above
    (+eps') and row 2i+1 below (-eps'); all rows are '<='.
    """
    if epsilon_prime <= 0:
        raise ValueError("epsilon_prime must be positive")
    twop = 2 * lifting.p
    twon = 2 * lifting.n
    nvar = 2 * twop + twon
    nrow = 2 * twon

    a = np.zeros((nrow, nvar))
    b = np.zeros(nrow)
    ac = lifting.a_check
    for i in range(twon):
        # residual r_i = z_i - ac_i (xi - zeta) - 2 lam e_i
        # r_i <= eps'  ->  -ac_i xi + ac_i zeta - 2 lam e_i <= eps' - z_i
        a[2 * i, :twop] = -ac[i]
        a[2 * i, twop : 2 * twop] = ac[i]
        a[2 * i, 2 * twop + i] = -2.0 * lam
        b[2 * i] = epsilon_prime - lifting.z_check[i]
        # -r_i <= eps'  ->  ac_i xi - ac_i zeta + 2 lam e_i <= eps' + z_i
        a[2 * i + 1] = -a[2 * i]
        b[2 * i + 1] = epsilon_prime + lifting.z_check[i]

    c = np.concatenate([np.ones(2 * twop), np.zeros(twon)])
    lo = np.concatenate([np.zeros(2 * twop), -np.ones(twon)])
    hi = np.concatenate([np.full(2 * twop, np.inf), np.ones(twon)])
    lp = LpProblem(c, a, ("<=",) * nrow, b, lo, hi)
    return MipProblem(lp, tuple(range(2 * twop, nvar)))


def _crash_basis(lifting: RealLifting) -> np.ndarray:
    """Basis hint: each e_check variable basic plus the lower-row slack.

    Column indexing follows the engine's equality form: structural
    columns first (nvar of them), then one slack per row.
    """
    twop = 2 * lifting.p
    twon = 2 * lifting.n
    nvar = 2 * twop + twon
    basis = np.empty(2 * twon, dtype=int)
    for i in range(twon):
        basis[2 * i] = 2 * twop + i          # e_check_i
        basis[2 * i + 1] = nvar + 2 * i + 1  # slack of the lower row
    return basis


def _unwrap_1d(b: np.ndarray, lam: float) -> np.ndarray:
    out = b.copy()
    for i in range(1, b.size):
        out[i] = b[i] + 2.0 * lam * round((out[i - 1] - b[i]) / (2.0 * lam))
    return out


def unwrap_heuristic(
    a_tilde: np.ndarray,
    z_tilde: np.ndarray,
    lam: float,
    sigma_part: float,
    refold_iters: int = 4,
    support_thresh: float = 0.05,
) -> tuple[np.ndarray, np.ndarray]:
    """Primal heuristic: recover (alpha_hat, e_check complex) from z_tilde.

    sigma_part is the noise std per real sample component (Gaussian and
    quantization combined); it scales the OMP residual stopping rule.
    """
    n, p = a_tilde.shape
    fr = _unwrap_1d(fold_real(z_tilde.real, lam), lam)
    fi = _unwrap_1d(fold_real(z_tilde.imag, lam), lam)
    fh = fr + 1j * fi
    # sparse initial fit; the all-ones column absorbs the unwrap offset
    basis = np.concatenate([a_tilde, np.ones((n, 1))], axis=1)
    thr = 1.5 * max(sigma_part, 1e-9) * math.sqrt(2 * n)
    coef, _ = omp(basis, fh, max_sparsity=min(p, 8), residual_tol=thr)
    alpha = coef[:p]
    e = np.zeros(n, dtype=complex)
    for _ in range(refold_iters):
        r = z_tilde - a_tilde @ alpha
        e = np.clip(np.round(r.real / (2.0 * lam)), -1, 1) + 1j * np.clip(
            np.round(r.imag / (2.0 * lam)), -1, 1
        )
        unfolded = z_tilde - 2.0 * lam * e
        sup = np.flatnonzero(np.abs(alpha) > support_thresh)
        if sup.size == 0:
            break
        alpha = np.zeros(p, dtype=complex)
        alpha[sup] = np.linalg.lstsq(a_tilde[:, sup], unfolded, rcond=None)[0]
    return alpha, e


def _incumbent_vector(
    lifting: RealLifting, alpha: np.ndarray, e: np.ndarray
) -> np.ndarray:
    twop = 2 * lifting.p
    alpha_check = np.concatenate([alpha.real, alpha.imag])
    xi = np.maximum(alpha_check, 0.0)
    zeta = np.maximum(-alpha_check, 0.0)
    e_check = np.concatenate([e.real, e.imag])
    return np.concatenate([xi, zeta, e_check])


def recover_milp(
    capture: ModuloCapture,
    dictionary: Dictionary,
    epsilon_prime: float | None = None,
    node_limit: int | None = None,
    gap_tol: float = 1e-6,
    beta_bar: float | None = None,
    omega_max: float | None = None,
) -> RecoveryResult:
    """Build the MILP instance and solve it by branch and bound.

    When (beta_bar, omega_max) are supplied the ternary-validity
    sampling condition is checked and a warning (not an error) is
    emitted on violation.  node_limit defaults to 1 (root + incumbent)
    on large instances and full search on small ones; the LP bound of
    these instances is uninformative, so the unwrap incumbent is the
    de-facto solution unless the tree is small enough to exhaust.
    """
    lam = capture.config.lam
    dt = dictionary.sgrid.delta_t
    if beta_bar is not None and omega_max is not None:
        limit = max_sampling_interval_milp(omega_max, beta_bar, lam)
        if dt >= limit:
            warnings.warn(
                f"dt={dt} >= ternary-validity limit {limit:.4f}; "
                "solving with ternary bounds anyway",
                stacklevel=2,
            )

    z_tilde = apply_difference(capture.z, 1)
    a_tilde = apply_difference(dictionary.matrix, 1)
    lifting = realify(a_tilde, z_tilde)

    sigma_part = capture.sigma / math.sqrt(2.0)
    if capture.config.bits is not None:
        q_range = (
            capture.config.lam
            if capture.config.mode == "modulo"
            else capture.config.conventional_range
        )
        q_sigma = quantization_sigma(capture.config.bits, q_range) / math.sqrt(2.0)
        sigma_part = math.sqrt(sigma_part**2 + q_sigma**2)

    if epsilon_prime is None:
        epsilon_prime = choose_epsilon_prime(
            math.sqrt(2.0) * sigma_part, capture.z.shape[0]
        )
    instance = build_milp(lifting, lam, epsilon_prime)

    alpha_h, e_h = unwrap_heuristic(a_tilde, z_tilde, lam, sigma_part)
    incumbent = _incumbent_vector(lifting, alpha_h, e_h)

    if node_limit is None:
        node_limit = 1 if lifting.n > 30 else 5000

    sol = solve_mip(
        instance,
        gap_tol=gap_tol,
        node_limit=node_limit,
        basis_hint=_crash_basis(lifting),
        incumbent_hint=incumbent,
        rounding_heuristic=lifting.n <= 30,
    )

    diagnostics = {
        "solver_status": sol.status,
        "nodes": sol.nodes,
        "gap": sol.gap,
        "objective": sol.obj,
        "epsilon_prime": epsilon_prime,
    }
    if sol.x is not None:
        twop = 2 * lifting.p
        alpha_check = sol.x[:twop] - sol.x[twop : 2 * twop]
        alpha_hat = alpha_check[: lifting.p] + 1j * alpha_check[lifting.p :]
    else:
        # solver produced no incumbent (e.g. eps' infeasible for the
        # heuristic point under heavy noise): fall back to the heuristic
        alpha_hat = alpha_h
        diagnostics["fallback"] = "unwrap-heuristic"
        if sol.status == "infeasible":
            raise ValueError(
                "MILP infeasible at epsilon_prime="
                f"{epsilon_prime}; increase the tolerance"
            )

    y_hat = dictionary.matrix @ alpha_hat
    support = tuple(np.flatnonzero(np.abs(alpha_hat) > 0).tolist())
    return RecoveryResult(
        alpha_hat=alpha_hat,
        y_hat=y_hat,
        method="milp",
        support=support,
        diagnostics=diagnostics,
    )


def build_full_integer_reference(
    a_matrix: np.ndarray,
    z: np.ndarray,
    lam: float,
    epsilon_prime: float,
    b_bound: float,
) -> MipProblem:
    """Reference formulation on undifferenced samples with unbounded
    integer fold counts (bounded here via B: |e| <= ceil((B+lam)/2lam)).

    Only intended for tiny instances (M <= 12); demonstrates the search
    space blowup that motivates the differenced ternary formulation.
    """
    m = z.shape[0]
    if m > 12:
        raise ValueError("full-integer reference builder is limited to M <= 12")
    lifting = realify(np.asarray(a_matrix), np.asarray(z))
    inst = build_milp(lifting, lam, epsilon_prime)
    e_bound = math.ceil((b_bound + lam) / (2.0 * lam))
    lo = inst.lp.lo.copy()
    hi = inst.lp.hi.copy()
    nvar = lo.shape[0]
    twon = 2 * m
    lo[nvar - twon :] = -e_bound
    hi[nvar - twon :] = e_bound
    lp = LpProblem(inst.lp.c, inst.lp.a, inst.lp.relations, inst.lp.b, lo, hi)
    return MipProblem(lp, inst.integer_indices)
