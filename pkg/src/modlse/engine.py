"""Generic optimization back end: bounded-variable primal simplex and a
best-first branch-and-bound driver for mixed-integer linear programs.

The simplex works on the equality form obtained by appending one slack
per constraint row ('<=' slack in [0, inf), '>=' slack in (-inf, 0],
'=' slack fixed at 0).  It maintains an explicit dense basis inverse
with rank-1 eta updates and periodic refactorization, uses a composite
(infeasibility-cost) phase 1 so no artificial variables are needed, and
falls back to Bland's rule when the objective stalls, which guarantees
finite termination.

Branch and bound is best-first (node bound, then depth) with
most-fractional branching, an LP-rounding primal heuristic, and an
optional caller-supplied incumbent.  When the node limit is hit the
best incumbent is returned with a gap report — on large instances whose
LP relaxation is uninformative this is the intended operating mode.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LpProblem",
    "LpSolution",
    "MipProblem",
    "MipSolution",
    "solve_lp",
    "solve_mip",
    "dump_problem",
]

INF = math.inf


@dataclass
class LpProblem:
    """min c'x subject to row-wise linear constraints and variable boxes."""

    c: np.ndarray
    a: np.ndarray
    relations: tuple[str, ...]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        m, n = self.a.shape
        if not (self.c.shape == (n,) and self.b.shape == (m,) == (len(self.relations),)
                and self.lo.shape == (n,) and self.hi.shape == (n,)):
            raise ValueError("inconsistent LP dimensions")
        if np.any(self.lo > self.hi):
            raise ValueError("variable bounds must satisfy lo <= hi")
        for rel in self.relations:
            if rel not in ("<=", ">=", "="):
                raise ValueError(f"unknown relation {rel!r}")
        if not np.all(np.isfinite(self.a)) or not np.all(np.isfinite(self.b)):
            raise ValueError("constraint data must be finite")


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration-limit
    x: np.ndarray | None
    obj: float | None
    iterations: int = 0
    basis: np.ndarray | None = None


@dataclass
class MipProblem:
    lp: LpProblem
    integer_indices: tuple[int, ...]

    def __post_init__(self):
        for j in self.integer_indices:
            if not (np.isfinite(self.lp.lo[j]) and np.isfinite(self.lp.hi[j])):
                raise ValueError("integer variables must be finitely bounded")


@dataclass
class MipSolution:
    status: str  # optimal | infeasible | node-limit | no-incumbent
    x: np.ndarray | None
    obj: float | None
    nodes: int = 0
    gap: float = math.nan
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# simplex

_AT_LO, _AT_HI, _FREE = 0, 1, 2
_REFACTOR_EVERY = 120
_STALL_LIMIT = 60


class _Tableau:
    """Equality-form working state for the bounded-variable simplex."""

    def __init__(self, prob: LpProblem):
        m, n = prob.a.shape
        slack_cols = np.eye(m)
        self.a = np.hstack([prob.a, slack_cols])
        self.b = prob.b.copy()
        slo = np.empty(m)
        shi = np.empty(m)
        for i, rel in enumerate(prob.relations):
            if rel == "<=":
                slo[i], shi[i] = 0.0, INF
            elif rel == ">=":
                slo[i], shi[i] = -INF, 0.0
            else:
                slo[i], shi[i] = 0.0, 0.0
        self.lo = np.concatenate([prob.lo, slo])
        self.hi = np.concatenate([prob.hi, shi])
        self.c = np.concatenate([prob.c, np.zeros(m)])
        self.m, self.n_struct = m, n
        self.n = n + m

    def nonbasic_value(self, j: int, status: int) -> float:
        if status == _AT_LO:
            return self.lo[j]
        if status == _AT_HI:
            return self.hi[j]
        return 0.0


def _initial_state(tab: _Tableau, basis_hint):
    m = tab.m
    if basis_hint is not None:
        basis = np.asarray(basis_hint, dtype=int)
        if basis.shape != (m,) or len(set(basis.tolist())) != m:
            raise ValueError("basis hint must name m distinct columns")
    else:
        basis = np.arange(tab.n_struct, tab.n_struct + m)
    in_basis = np.zeros(tab.n, dtype=bool)
    in_basis[basis] = True
    status = np.empty(tab.n, dtype=np.int8)
    for j in range(tab.n):
        if np.isfinite(tab.lo[j]):
            status[j] = _AT_LO
        elif np.isfinite(tab.hi[j]):
            status[j] = _AT_HI
        else:
            status[j] = _FREE
    try:
        binv = np.linalg.inv(tab.a[:, basis])
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular basis hint") from exc
    return basis, in_basis, status, binv


def _basic_values(tab: _Tableau, basis, in_basis, status, binv):
    xn = np.array(
        [tab.nonbasic_value(j, status[j]) for j in range(tab.n)], dtype=float
    )
    xn[basis] = 0.0
    rhs = tab.b - tab.a @ xn
    return binv @ rhs


def _solve_core(prob: LpProblem, feas_tol, opt_tol, iter_limit, basis_hint):
    tab = _Tableau(prob)
    basis, in_basis, status, binv = _initial_state(tab, basis_hint)
    xb = _basic_values(tab, basis, in_basis, status, binv)
    m = tab.m
    iters = 0
    bland = False
    stall = 0
    best_meas = INF
    updates = 0

    def refactor():
        nonlocal binv, xb
        binv = np.linalg.inv(tab.a[:, basis])
        xb = _basic_values(tab, basis, in_basis, status, binv)

    while iters < iter_limit:
        lo_b = tab.lo[basis]
        hi_b = tab.hi[basis]
        below = xb < lo_b - feas_tol
        above = xb > hi_b + feas_tol
        infeasible = bool(below.any() or above.any())
        if infeasible:
            # composite phase 1: minimize total bound violation
            d = np.where(below, -1.0, 0.0) + np.where(above, 1.0, 0.0)
            y = d @ binv
            cost_b = d
            measure = float(np.sum(lo_b[below] - xb[below]) + np.sum(xb[above] - hi_b[above]))
        else:
            y = tab.c[basis] @ binv
            cost_b = tab.c[basis]
            measure = float(tab.c[basis] @ xb)

        # pricing: reduced costs of nonbasic columns
        nb = np.flatnonzero(~in_basis)
        rc = (0.0 if infeasible else tab.c[nb]) - y @ tab.a[:, nb]
        st = status[nb]
        # improving direction per nonbasic var: +1 means increase
        can_up = (st == _AT_LO) | (st == _FREE)
        can_dn = (st == _AT_HI) | (st == _FREE)
        score = np.where(can_up & (rc < -opt_tol), -rc, 0.0)
        score = np.maximum(score, np.where(can_dn & (rc > opt_tol), rc, 0.0))
        cand = np.flatnonzero(score > 0.0)
        if cand.size == 0:
            if infeasible:
                return LpSolution("infeasible", None, None, iters, basis.copy()), tab, status
            x = _assemble(tab, basis, status, xb)
            obj = float(tab.c[: tab.n_struct] @ x[: tab.n_struct])
            return LpSolution("optimal", x[: tab.n_struct], obj, iters, basis.copy()), tab, status

        if bland:
            enter_pos = cand[np.argmin(nb[cand])]
        else:
            enter_pos = cand[np.argmax(score[cand])]
        q = int(nb[enter_pos])
        direction = 1.0 if (can_up[enter_pos] and rc[enter_pos] < -opt_tol) else -1.0
        if infeasible:
            # in phase 1 the sign test above used rc computed with c=0 piece
            direction = 1.0 if (can_up[enter_pos] and rc[enter_pos] < 0) else -1.0

        w = binv @ tab.a[:, q]
        delta = direction * w  # xb changes by -t*delta as q moves by +t*direction

        # ratio test (composite: infeasible basics block at the violated bound)
        t_best = tab.hi[q] - tab.lo[q] if status[q] != _FREE else INF
        leave = -1  # -1 means bound flip
        for i in range(m):
            di = delta[i]
            if abs(di) <= 1e-11:
                continue
            v = xb[i]
            lo_i, hi_i = lo_b[i], hi_b[i]
            if di > 0:  # basic value decreases
                target = lo_i if v >= lo_i - feas_tol else -INF
                if v > hi_i + feas_tol:
                    target = hi_i  # currently above hi: block when it reaches hi
                if not np.isfinite(target):
                    continue
                t = (v - target) / di
            else:  # basic value increases
                target = hi_i if v <= hi_i + feas_tol else INF
                if v < lo_i - feas_tol:
                    target = lo_i
                if not np.isfinite(target):
                    continue
                t = (v - target) / di
            t = max(t, 0.0)
            if t < t_best - 1e-12 or (
                bland and abs(t - t_best) <= 1e-12 and leave >= 0 and basis[i] < basis[leave]
            ):
                t_best = t
                leave = i

        if not np.isfinite(t_best):
            if infeasible:
                # should not happen: phase-1 measure is bounded below; guard anyway
                return LpSolution("infeasible", None, None, iters, basis.copy()), tab, status
            return LpSolution("unbounded", None, None, iters, basis.copy()), tab, status

        # apply the step
        xb = xb - t_best * delta
        if leave < 0:
            # bound flip of the entering variable
            status[q] = _AT_HI if status[q] == _AT_LO else _AT_LO
        else:
            p = int(basis[leave])
            # leaving variable settles at the bound it hit
            val_p = xb[leave] + 0.0  # after step; classify to nearest bound
            if abs(val_p - tab.lo[p]) <= abs(val_p - tab.hi[p]) or not np.isfinite(tab.hi[p]):
                status[p] = _AT_LO if np.isfinite(tab.lo[p]) else _FREE
            else:
                status[p] = _AT_HI
            basis[leave] = q
            in_basis[p] = False
            in_basis[q] = True
            status[q] = _FREE  # basic; placeholder (status unused while basic)
            # entering variable's new value
            xq = tab.nonbasic_value(q, _AT_LO if np.isfinite(tab.lo[q]) else _FREE)
            # rank-1 update of the basis inverse
            piv = w[leave]
            if abs(piv) < 1e-10:
                refactor()
            else:
                row = binv[leave] / piv
                binv = binv - np.outer(w, row)
                binv[leave] = row
                updates += 1
                if updates % _REFACTOR_EVERY == 0:
                    refactor()
            # recompute xb entries exactly for the new basis
            xb[leave] = 0.0
            xb = _basic_values(tab, basis, in_basis, status, binv)

        iters += 1
        if measure < best_meas - 1e-12:
            best_meas = measure
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True

    return LpSolution("iteration-limit", None, None, iters, basis.copy()), tab, status


def _assemble(tab: _Tableau, basis, status, xb):
    x = np.array([tab.nonbasic_value(j, status[j]) for j in range(tab.n)], dtype=float)
    x[basis] = xb
    return x


def solve_lp(
    prob: LpProblem,
    feas_tol: float = 1e-7,
    opt_tol: float = 1e-7,
    iter_limit: int = 20000,
    basis_hint=None,
) -> LpSolution:
    """Bounded-variable primal simplex.  Never raises on solver outcomes;
    the status field reports optimal/infeasible/unbounded/iteration-limit."""
    sol, _, _ = _solve_core(prob, feas_tol, opt_tol, iter_limit, basis_hint)
    return sol


# ---------------------------------------------------------------------------
# branch and bound

def _fractionality(x, int_idx, tol):
    frac = np.abs(x[int_idx] - np.round(x[int_idx]))
    return frac


def _check_feasible(prob: LpProblem, x, feas_tol) -> bool:
    if np.any(x < prob.lo - feas_tol) or np.any(x > prob.hi + feas_tol):
        return False
    ax = prob.a @ x
    for i, rel in enumerate(prob.relations):
        if rel == "<=" and ax[i] > prob.b[i] + feas_tol:
            return False
        if rel == ">=" and ax[i] < prob.b[i] - feas_tol:
            return False
        if rel == "=" and abs(ax[i] - prob.b[i]) > feas_tol:
            return False
    return True


def solve_mip(
    prob: MipProblem,
    gap_tol: float = 1e-6,
    node_limit: int = 10000,
    feas_tol: float = 1e-7,
    opt_tol: float = 1e-7,
    int_tol: float = 1e-6,
    iter_limit: int = 20000,
    basis_hint=None,
    incumbent_hint: np.ndarray | None = None,
    rounding_heuristic: bool = True,
) -> MipSolution:
    """Best-first branch and bound over the integer variables.

    Nodes are ordered by (LP bound, -depth, counter); branching is on the
    most fractional integer variable with floor/ceil children.  Returns a
    proven-optimal incumbent when the tree exhausts, otherwise the best
    incumbent found with the remaining gap.
    """
    lp = prob.lp
    int_idx = np.asarray(prob.integer_indices, dtype=int)

    best_x = None
    best_obj = INF
    if incumbent_hint is not None:
        xh = np.asarray(incumbent_hint, dtype=float)
        if _check_feasible(lp, xh, feas_tol) and np.all(
            np.abs(xh[int_idx] - np.round(xh[int_idx])) <= int_tol
        ):
            best_x = xh.copy()
            best_obj = float(lp.c @ xh)

    def make_lp(lo, hi):
        return LpProblem(lp.c, lp.a, lp.relations, lp.b, lo, hi)

    counter = 0
    heap: list = []
    root = solve_lp(make_lp(lp.lo, lp.hi), feas_tol, opt_tol, iter_limit, basis_hint)
    nodes = 1
    lp_status = root.status
    open_bound = -INF
    if root.status == "optimal":
        heapq.heappush(heap, (root.obj, 0, counter, lp.lo.copy(), lp.hi.copy(), root))
        counter += 1
    elif root.status == "infeasible":
        if best_x is not None:
            return MipSolution("optimal", best_x, best_obj, nodes, 0.0)
        return MipSolution("infeasible", None, None, nodes)
    elif root.status == "unbounded":
        return MipSolution(
            "no-incumbent" if best_x is None else "node-limit",
            best_x,
            None if best_x is None else best_obj,
            nodes,
            INF,
            {"lp_status": "unbounded"},
        )

    hit_limit = False
    while heap:
        if nodes >= node_limit:
            hit_limit = True
            break
        bound, depth, _, lo, hi, sol = heapq.heappop(heap)
        if bound >= best_obj - gap_tol:
            continue
        x = sol.x
        frac = _fractionality(x, int_idx, int_tol)
        if np.all(frac <= int_tol):
            obj = sol.obj
            if obj < best_obj - 1e-12:
                best_obj, best_x = obj, x.copy()
            continue

        if rounding_heuristic and best_x is None:
            xr = x.copy()
            xr[int_idx] = np.clip(np.round(x[int_idx]), lo[int_idx], hi[int_idx])
            lo_fix = lo.copy()
            hi_fix = hi.copy()
            lo_fix[int_idx] = xr[int_idx]
            hi_fix[int_idx] = xr[int_idx]
            fix = solve_lp(make_lp(lo_fix, hi_fix), feas_tol, opt_tol, iter_limit)
            nodes += 1
            if fix.status == "optimal" and fix.obj < best_obj - 1e-12:
                best_obj, best_x = fix.obj, fix.x.copy()

        j = int(int_idx[int(np.argmax(frac))])
        v = x[j]
        for child in ("floor", "ceil"):
            clo, chi = lo.copy(), hi.copy()
            if child == "floor":
                chi[j] = math.floor(v)
            else:
                clo[j] = math.ceil(v)
            if clo[j] > chi[j]:
                continue
            csol = solve_lp(make_lp(clo, chi), feas_tol, opt_tol, iter_limit)
            nodes += 1
            if csol.status != "optimal":
                continue
            node_bound = max(csol.obj, bound)
            if node_bound >= best_obj - gap_tol:
                continue
            heapq.heappush(heap, (node_bound, -(depth + 1), counter, clo, chi, csol))
            counter += 1

    open_bound = heap[0][0] if heap else best_obj
    if best_x is None:
        status = "node-limit" if hit_limit else "infeasible"
        return MipSolution(
            "no-incumbent" if hit_limit else "infeasible", None, None, nodes,
            INF, {"lp_status": lp_status},
        )
    gap = max(0.0, best_obj - open_bound) if hit_limit else 0.0
    status = "node-limit" if hit_limit else "optimal"
    return MipSolution(status, best_x, best_obj, nodes, gap)


# ---------------------------------------------------------------------------
# plain-text dump for external cross-checks

def dump_problem(prob: MipProblem | LpProblem) -> str:
    """Serialize a problem in a documented plain-text format.

    Lines: 'min' + cost vector; one 'st' line per constraint
    (coefficients, relation, rhs); one 'bnd' line per variable
    (lo, hi); 'int' + integer index list.
    """
    lp = prob.lp if isinstance(prob, MipProblem) else prob
    out = ["min " + " ".join(f"{v:.17g}" for v in lp.c)]
    for row, rel, rhs in zip(lp.a, lp.relations, lp.b):
        out.append("st " + " ".join(f"{v:.17g}" for v in row) + f" {rel} {rhs:.17g}")
    for lo, hi in zip(lp.lo, lp.hi):
        out.append(f"bnd {lo:.17g} {hi:.17g}")
    if isinstance(prob, MipProblem):
        out.append("int " + " ".join(str(j) for j in prob.integer_indices))
    return "\n".join(out) + "\n"
