"""The two convex programs behind the shrinkage fit, with KKT certificates.

With l Walsh rows, m support points, f_hat the degree-<=d coefficient vector
of the true-data empirical density and u_hat = W_S 1/m the coefficients of
the uniform density on the support sequence:

  minimal-shrinkage LP   min lambda  over (lambda, h) in R^{m+1}
                         s.t. [f_hat - u_hat | W_S] (lambda, h)^T = f_hat
                              0 <= lambda <= 1
                              2 delta/m <= h_i <= (Delta - delta)/m

  proximal QP            min  h.h - 2 u.h   (u = uniform 1/m vector)
                         s.t. W_S h = (1 - lambda) f_hat + lambda u_hat
                              delta/m <= h_i <= Delta/m

The LP equality system is the cleared-denominator form of the shrinkage
constraint, so it stays valid at lambda = 1.  Both solvers report max-norm
KKT residuals (stationarity, primal equality, bound violation,
complementarity) that can be recomputed independently via kkt_residuals.

The LP is handed to scipy's HiGHS backend; the QP has an identity Hessian
(it is the projection of u onto box-intersect-affine) and is solved by a
semismooth Newton method on its dual, which is exact at machine precision
on nondegenerate instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "NUMERICAL_FAILURE",
    "LambdaLP",
    "ProximalQP",
    "Multipliers",
    "KKTResiduals",
    "SolveOutcome",
    "build_lambda_lp",
    "build_proximal_qp",
    "solve_lp",
    "solve_qp",
    "kkt_residuals",
    "dump_problem",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

DEFAULT_TOL = 1e-8


@dataclass
class LambdaLP:
    """min c.x with c = (1,0,...,0), equality rows E x = rhs and box bounds.

    Column 0 of E is the shrinkage column f_hat - u_hat; columns 1..m are the
    support Walsh matrix.  The selector matrices that express the shrinkage
    mix are folded in analytically and never materialized.
    """

    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_vars(self) -> int:
        return self.eq_matrix.shape[1]

    @property
    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        c[0] = 1.0
        return c

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.objective_vector

    def objective(self, x: np.ndarray) -> float:
        return float(x[0])


@dataclass
class ProximalQP:
    """min h.h - 2 target.h subject to eq_matrix h = eq_rhs and box bounds.

    The Hessian is 2I, so the minimizer is the Euclidean projection of
    ``target`` onto the feasible polytope and is unique whenever that
    polytope is nonempty.
    """

    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    target: np.ndarray

    @property
    def n_vars(self) -> int:
        return self.eq_matrix.shape[1]

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(x) - self.target)

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x)
        return float(x @ x - 2.0 * (self.target @ x))


@dataclass
class Multipliers:
    """Lagrange multipliers: equality duals and nonnegative bound duals."""

    equality: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class KKTResiduals:
    """Max-norm optimality residuals; all ~0 at a true optimum."""

    stationarity: float
    primal_equality: float
    bound_violation: float
    complementarity: float

    def max_residual(self) -> float:
        return max(self.stationarity, self.primal_equality, self.bound_violation, self.complementarity)

    def within(self, tol: float) -> bool:
        return self.max_residual() <= tol

    def to_json_dict(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "primal_equality": self.primal_equality,
            "bound_violation": self.bound_violation,
            "complementarity": self.complementarity,
        }


@dataclass
class SolveOutcome:
    status: str
    solution: np.ndarray | None = None
    objective: float | None = None
    residuals: KKTResiduals | None = None
    multipliers: Multipliers | None = None
    message: str = ""
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _check_box(delta: float, Delta: float) -> None:
    if not (0.0 < delta < Delta):
        raise ValueError(f"need 0 < delta < Delta, got delta={delta}, Delta={Delta}")


def build_lambda_lp(W_S, fn_coeffs, m: int, n: int, delta: float, Delta: float) -> LambdaLP:
    """Assemble the minimal-shrinkage LP from the support Walsh matrix.

    ``fn_coeffs`` is the degree-<=d coefficient vector of the true-data
    empirical density (its first entry must be 1); n is the true-data count,
    kept for validation of that aggregate.
    """
    _check_box(delta, Delta)
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    W_S = np.asarray(W_S, dtype=float)
    fn_coeffs = np.asarray(fn_coeffs, dtype=float)
    l = W_S.shape[0]
    if W_S.shape[1] != m:
        raise ValueError(f"W_S has {W_S.shape[1]} columns, expected m={m}")
    if fn_coeffs.shape != (l,):
        raise ValueError(f"coefficient vector has shape {fn_coeffs.shape}, expected ({l},)")
    if abs(fn_coeffs[0] - 1.0) > 1e-9:
        raise ValueError("empty-set coefficient of a density must be 1")

    u_hat = W_S.mean(axis=1)
    eq = np.empty((l, m + 1))
    eq[:, 0] = fn_coeffs - u_hat
    eq[:, 1:] = W_S
    lower = np.concatenate(([0.0], np.full(m, 2.0 * delta / m)))
    upper = np.concatenate(([1.0], np.full(m, (Delta - delta) / m)))
    return LambdaLP(eq_matrix=eq, eq_rhs=fn_coeffs.copy(), lower=lower, upper=upper)


def build_proximal_qp(
    W_S, fn_coeffs, lam: float, m: int, delta: float, Delta: float
) -> ProximalQP:
    """Assemble the proximal QP at a fixed shrinkage weight lambda."""
    _check_box(delta, Delta)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    W_S = np.asarray(W_S, dtype=float)
    fn_coeffs = np.asarray(fn_coeffs, dtype=float)
    if W_S.shape[1] != m:
        raise ValueError(f"W_S has {W_S.shape[1]} columns, expected m={m}")
    if fn_coeffs.shape != (W_S.shape[0],):
        raise ValueError("coefficient vector length does not match W_S rows")

    u_hat = W_S.mean(axis=1)
    rhs = (1.0 - lam) * fn_coeffs + lam * u_hat
    return ProximalQP(
        eq_matrix=W_S.copy(),
        eq_rhs=rhs,
        lower=np.full(m, delta / m),
        upper=np.full(m, Delta / m),
        target=np.full(m, 1.0 / m),
    )


def kkt_residuals(problem, solution, multipliers: Multipliers | None = None) -> KKTResiduals:
    """Max-norm KKT residuals of a candidate solution for either program.

    Pure function, usable against any solver's output.  When multipliers are
    not supplied, equality duals are recovered by least squares on the
    gradient over free coordinates and bound duals from the sign of the
    reduced gradient at active coordinates.
    """
    x = np.asarray(solution, dtype=float)
    A = problem.eq_matrix
    if x.shape != (problem.n_vars,):
        raise ValueError(f"solution has shape {x.shape}, expected ({problem.n_vars},)")
    grad = problem.gradient(x)
    lo, hi = problem.lower, problem.upper

    span = np.maximum(hi - lo, 1e-300)
    act_tol = 1e-7 * np.minimum(span, 1.0)
    at_lower = x <= lo + act_tol
    at_upper = x >= hi - act_tol

    if multipliers is None:
        free = ~(at_lower | at_upper)
        if free.any():
            nu = np.linalg.lstsq(A[:, free].T, -grad[free], rcond=None)[0]
        else:
            nu = np.linalg.lstsq(A.T, -grad, rcond=None)[0]
        g = grad + A.T @ nu
        mu_lo = np.where(at_lower, np.maximum(g, 0.0), 0.0)
        mu_hi = np.where(at_upper, np.maximum(-g, 0.0), 0.0)
        multipliers = Multipliers(equality=nu, lower=mu_lo, upper=mu_hi)

    nu, mu_lo, mu_hi = multipliers.equality, multipliers.lower, multipliers.upper
    stationarity = float(np.abs(grad + A.T @ nu - mu_lo + mu_hi).max())
    dual_violation = float(max(np.maximum(-mu_lo, 0.0).max(initial=0.0),
                               np.maximum(-mu_hi, 0.0).max(initial=0.0)))
    stationarity = max(stationarity, dual_violation)
    primal = float(np.abs(A @ x - problem.eq_rhs).max()) if A.size else 0.0
    bound = float(max(np.maximum(lo - x, 0.0).max(initial=0.0),
                      np.maximum(x - hi, 0.0).max(initial=0.0)))
    comp = float(max(
        (np.abs(mu_lo) * np.maximum(x - lo, 0.0)).max(initial=0.0),
        (np.abs(mu_hi) * np.maximum(hi - x, 0.0)).max(initial=0.0),
    ))
    return KKTResiduals(
        stationarity=stationarity,
        primal_equality=primal,
        bound_violation=bound,
        complementarity=comp,
    )


def solve_lp(problem: LambdaLP, tol: float = DEFAULT_TOL) -> SolveOutcome:
    """Solve the shrinkage LP with HiGHS and certify the result via KKT residuals.

    Infeasibility is a meaningful outcome (reported, not raised).  Redundant
    consistent equality rows are tolerated; inconsistent ones report as
    infeasible.
    """
    if np.any(problem.lower > problem.upper):
        return SolveOutcome(status=INFEASIBLE, message="empty bound box")
    res = linprog(
        problem.objective_vector,
        A_eq=problem.eq_matrix,
        b_eq=problem.eq_rhs,
        bounds=list(zip(problem.lower, problem.upper)),
        method="highs",
    )
    if res.status == 2:
        return SolveOutcome(status=INFEASIBLE, message=res.message)
    if res.status != 0:
        return SolveOutcome(status=NUMERICAL_FAILURE, message=res.message)

    x = np.asarray(res.x, dtype=float)
    nu = -np.asarray(res.eqlin.marginals, dtype=float)
    mu_lo = np.maximum(np.asarray(res.lower.marginals, dtype=float), 0.0)
    mu_hi = np.maximum(-np.asarray(res.upper.marginals, dtype=float), 0.0)
    multipliers = Multipliers(equality=nu, lower=mu_lo, upper=mu_hi)
    residuals = kkt_residuals(problem, x, multipliers)
    status = OPTIMAL if residuals.within(tol) else NUMERICAL_FAILURE
    return SolveOutcome(
        status=status,
        solution=x,
        objective=problem.objective(x),
        residuals=residuals,
        multipliers=multipliers,
        message=res.message,
        iterations=int(getattr(res, "nit", 0)),
    )


def solve_qp(problem: ProximalQP, tol: float = DEFAULT_TOL, max_iter: int = 500) -> SolveOutcome:
    """Solve the proximal QP by semismooth Newton on its dual.

    The primal minimizer is clip(target - W^T nu, lower, upper) at the dual
    root nu of the equality residual; Newton steps use the free-coordinate
    Gram matrix.  A feasibility probe runs first so that an empty polytope is
    reported as infeasible rather than as divergence.
    """
    lo, hi, u = problem.lower, problem.upper, problem.target
    W, b = problem.eq_matrix, problem.eq_rhs
    if np.any(lo > hi):
        return SolveOutcome(status=INFEASIBLE, message="empty bound box")

    probe = linprog(
        np.zeros(problem.n_vars),
        A_eq=W,
        b_eq=b,
        bounds=list(zip(lo, hi)),
        method="highs",
    )
    if probe.status == 2:
        return SolveOutcome(status=INFEASIBLE, message=probe.message)
    if probe.status != 0:
        return SolveOutcome(status=NUMERICAL_FAILURE, message=probe.message)

    l = W.shape[0]
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    inner_tol = min(1e-12 * scale, 0.01 * tol)

    nu = np.zeros(l)
    h = np.clip(u - W.T @ nu, lo, hi)
    r = W @ h - b
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if np.abs(r).max(initial=0.0) <= inner_tol:
            break
        z = u - W.T @ nu
        free = (z > lo) & (z < hi)
        Wf = W[:, free]
        J = Wf @ Wf.T
        J[np.diag_indices_from(J)] += 1e-12 * max(1.0, np.trace(J) / max(l, 1))
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, r, rcond=None)[0]

        base = float(r @ r)
        t = 1.0
        for _ in range(50):
            nu_try = nu + t * step
            h_try = np.clip(u - W.T @ nu_try, lo, hi)
            r_try = W @ h_try - b
            if float(r_try @ r_try) < base:
                break
            t *= 0.5
        else:
            nu_try = nu + 1e-3 * r / max(1.0, np.abs(r).max())
            h_try = np.clip(u - W.T @ nu_try, lo, hi)
            r_try = W @ h_try - b
        nu, h, r = nu_try, h_try, r_try

    nu, h = _polish(W, b, u, lo, hi, nu, h)
    g = 2.0 * (h - u) + W.T @ (2.0 * nu)
    at_lower = h <= lo + 1e-12 * np.maximum(np.abs(lo), 1.0)
    at_upper = h >= hi - 1e-12 * np.maximum(np.abs(hi), 1.0)
    mu_lo = np.where(at_lower, np.maximum(g, 0.0), 0.0)
    mu_hi = np.where(at_upper, np.maximum(-g, 0.0), 0.0)
    multipliers = Multipliers(equality=2.0 * nu, lower=mu_lo, upper=mu_hi)
    residuals = kkt_residuals(problem, h, multipliers)
    status = OPTIMAL if residuals.within(tol) else NUMERICAL_FAILURE
    return SolveOutcome(
        status=status,
        solution=h,
        objective=problem.objective(h),
        residuals=residuals,
        multipliers=multipliers,
        iterations=iterations,
    )


def _polish(W, b, u, lo, hi, nu, h):
    """Refine the dual on the identified active set by one exact solve."""
    z = u - W.T @ nu
    free = (z > lo) & (z < hi)
    clamped = ~free
    h_clamped = np.where(z <= lo, lo, hi)
    rhs = W[:, free] @ u[free] - b
    if clamped.any():
        rhs = rhs + W[:, clamped] @ h_clamped[clamped]
    Wf = W[:, free]
    try:
        nu_new = np.linalg.lstsq(Wf @ Wf.T, rhs, rcond=None)[0]
    except np.linalg.LinAlgError:
        return nu, h
    h_new = np.clip(u - W.T @ nu_new, lo, hi)
    if np.abs(W @ h_new - b).max(initial=0.0) <= np.abs(W @ h - b).max(initial=0.0):
        return nu_new, h_new
    return nu, h


def dump_problem(problem, path) -> None:
    """Write a dense plain-text dump of a problem for external cross-checks.

    Layout: one section per line group --
      PROBLEM lp|qp, VARS n, EQROWS l
      OBJECTIVE  (LP: the cost vector; QP: the projection target)
      EQ i a_i1 ... a_in  (one line per equality row, then RHS line)
      BOUNDS lower line, upper line
    """
    kind = "qp" if isinstance(problem, ProximalQP) else "lp"
    A, rhs = problem.eq_matrix, problem.eq_rhs
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"PROBLEM {kind} VARS {problem.n_vars} EQROWS {A.shape[0]}\n")
        obj = problem.target if kind == "qp" else problem.objective_vector
        handle.write("OBJECTIVE " + " ".join(f"{v:.17g}" for v in obj) + "\n")
        for i in range(A.shape[0]):
            handle.write(f"EQ {i} " + " ".join(f"{v:.17g}" for v in A[i]) + "\n")
        handle.write("RHS " + " ".join(f"{v:.17g}" for v in rhs) + "\n")
        handle.write("LOWER " + " ".join(f"{v:.17g}" for v in problem.lower) + "\n")
        handle.write("UPPER " + " ".join(f"{v:.17g}" for v in problem.upper) + "\n")
