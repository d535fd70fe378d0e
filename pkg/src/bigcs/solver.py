"""Fixed-point shrinkage solver for the l1-regularized least squares problem

    F(x) = lam * ||x||_1 + 0.5 * ||y - A x||_2^2

driven entirely through matrix-free operator applications.  One iteration
forms the shrinkage direction

    d = S(x - tau * A^T (A x - y), tau * lam) - x

where S(v, c) = v - clip(v, -c, c) is the soft threshold, then takes the
step x + sigma * d with sigma the largest value in {1, beta, beta^2, ...}
satisfying the sufficient-decrease test

    F(x + sigma d) - F(x) <= sigma * gamma * Delta,
    Delta = d^T A^T (A x - y) + lam * (||x + d||_1 - ||x||_1).

Delta < 0 away from fixed points, so accepted steps strictly decrease F.
For tau in (0, 2 / lam_max(A^T A)) the shrinkage map is nonexpansive and
the iteration converges to a minimizer.

Cost discipline: each iteration applies the operator exactly twice (one
adjoint for the gradient, one forward for A d).  The residual r = A x - y
is carried incrementally (r += sigma * A d) and the quadratic part of F
expands in sigma through three cached scalars, so backtracking costs no
operator applications at all.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, ShapeError


def soft_threshold(v, c):
    """Soft threshold: v - clip(v, -c, c), elementwise, c >= 0."""
    if c < 0:
        raise DomainError("threshold must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    return v - np.clip(v, -c, c)


@dataclass(frozen=True)
class LassoProblem:
    """One instance: operator A, data y, penalty lam > 0."""

    A: object
    y: np.ndarray
    lam: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != self.A.rows:
            raise ShapeError("data length must equal the operator row count")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise DomainError("penalty must be positive and finite")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class SolverConfig:
    """Step and stopping parameters.

    tau must lie in (0, 2 / lam_hat) where lam_hat is the largest-eigenvalue
    estimate of A^T A attached at construction; the default construction via
    `for_operator` sets tau = tau_safety / lam_hat with tau_safety = 1.9.
    """

    tau: float
    lam_hat: float
    beta: float = 0.5
    gamma: float = 0.1
    tol: float = 1e-6
    max_iter: int = 10000
    max_backtracks: int = 30

    def __post_init__(self):
        if not (np.isfinite(self.lam_hat) and self.lam_hat > 0):
            raise DomainError("eigenvalue estimate must be positive")
        if not 0 < self.tau < 2.0 / self.lam_hat:
            raise DomainError(
                f"tau must lie in (0, {2.0 / self.lam_hat}), got {self.tau}"
            )
        if not 0 < self.beta < 1:
            raise DomainError("beta must lie in (0, 1)")
        if not 0 < self.gamma < 1:
            raise DomainError("gamma must lie in (0, 1)")
        if self.tol <= 0 or self.max_iter < 1 or self.max_backtracks < 0:
            raise DomainError("tol must be positive, iteration limits positive")

    @classmethod
    def for_operator(cls, A, tau_safety=1.9, power_iters=30, power_seed=0, **kw):
        """Estimate lam_max(A^T A) by power iteration and set tau accordingly."""
        from .linop import power_iteration

        if not 0 < tau_safety < 2:
            raise DomainError("tau safety factor must lie in (0, 2)")
        lam_hat = power_iteration(A, iters=power_iters, seed=power_seed)
        if lam_hat <= 0:
            raise DomainError("operator appears to be zero; cannot set a step")
        return cls(tau=tau_safety / lam_hat, lam_hat=lam_hat, **kw)


@dataclass
class SolverTrace:
    """Per-iteration record of one solve.

    objectives[k] is F after k accepted steps (objectives[0] is F(x0));
    direction_norms[k] is ||d|| computed at iterate k.  sigmas, deltas and
    backtracks align with accepted steps 1..K.  n_forward/n_adjoint count
    operator applications; exhausted counts line searches that ran out of
    backtracks and accepted the smallest step anyway.
    """

    objectives: list = field(default_factory=list)
    direction_norms: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    termination: str = "max_iter"
    n_forward: int = 0
    n_adjoint: int = 0
    exhausted: int = 0

    @property
    def iterations(self):
        return len(self.sigmas)

    def normalized_errors(self):
        """(F(x_k) - F_final) / F(x_k) per iterate, the progress curve."""
        objs = np.asarray(self.objectives, dtype=np.float64)
        best = objs[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            curve = np.where(objs > 0, (objs - best) / objs, 0.0)
        return curve

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(
                ["iteration", "objective", "direction_norm", "sigma", "delta",
                 "backtracks"]
            )
            out.writerow([0, repr(self.objectives[0]),
                          repr(self.direction_norms[0]) if self.direction_norms
                          else "", "", "", ""])
            for k in range(self.iterations):
                out.writerow(
                    [k + 1, repr(self.objectives[k + 1]),
                     repr(self.direction_norms[k + 1])
                     if k + 1 < len(self.direction_norms) else "",
                     repr(self.sigmas[k]), repr(self.deltas[k]),
                     self.backtracks[k]]
                )


def objective(prob, x):
    """F(x), at the cost of one forward application."""
    r = prob.A.forward(x) - prob.y
    return prob.lam * float(np.sum(np.abs(x))) + 0.5 * float(r @ r)


def gradient_step(prob, x, tau):
    """x - tau * A^T (A x - y): one forward plus one adjoint application."""
    if tau <= 0:
        raise DomainError("step length must be positive")
    x = np.asarray(x, dtype=np.float64)
    return x - tau * prob.A.adjoint(prob.A.forward(x) - prob.y)


def delta(prob, x, x_trial, grad=None):
    """Predicted-decrease quantity Delta for the step d = x_trial - x.

    grad is A^T (A x - y); pass it when already at hand, otherwise it is
    recomputed here (one forward plus one adjoint).
    """
    x = np.asarray(x, dtype=np.float64)
    x_trial = np.asarray(x_trial, dtype=np.float64)
    if grad is None:
        grad = prob.A.adjoint(prob.A.forward(x) - prob.y)
    d = x_trial - x
    return float(d @ grad) + prob.lam * float(
        np.sum(np.abs(x_trial)) - np.sum(np.abs(x))
    )


def armijo_search(prob, x, d, delta_k, beta=0.5, gamma=0.1, max_backtracks=30,
                  residual=None, Ad=None):
    """Largest sigma in {1, beta, beta^2, ...} passing the decrease test.

    residual (A x - y) and Ad are computed here when not supplied (two
    applications); after that every candidate sigma is tested through the
    quadratic expansion of the residual norm, with no further operator work.

    Returns (sigma, x_next, n_backtracks, exhausted).  When every candidate
    fails, the smallest one is accepted and exhausted is True; the iteration
    carries on rather than aborting, since the test can fail on numerically
    flat stretches where any tiny step is harmless.
    """
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if residual is None:
        residual = prob.A.forward(x) - prob.y
    if Ad is None:
        Ad = prob.A.forward(d)
    rr = float(residual @ residual)
    rd = float(residual @ Ad)
    dd = float(Ad @ Ad)
    l1_x = float(np.sum(np.abs(x)))
    f_x = prob.lam * l1_x + 0.5 * rr

    sigma = 1.0
    for bt in range(max_backtracks + 1):
        x_next = x + sigma * d if sigma != 1.0 else x + d
        f_next = prob.lam * float(np.sum(np.abs(x_next))) + 0.5 * (
            rr + 2.0 * sigma * rd + sigma * sigma * dd
        )
        if f_next - f_x <= sigma * gamma * delta_k:
            return sigma, x_next, bt, False
        sigma *= beta
    sigma /= beta
    return sigma, x + sigma * d, max_backtracks, True


def solve_lasso(prob, cfg, x0=None, callback=None):
    """Run the shrinkage iteration to the stopping test; returns (x, trace).

    Stops when ||d||_2 <= tol * max(1, ||x||_2) (reported as "converged")
    or after max_iter steps ("max_iter").  Non-finite iterates raise
    DivergenceError.  callback(k, x), when given, sees every accepted
    iterate; it must not modify x in place.
    """
    n = prob.A.cols
    trace = SolverTrace()
    if x0 is None:
        x = np.zeros(n, dtype=np.float64)
        Ax = np.zeros(prob.A.rows, dtype=np.float64)
    else:
        x = np.array(x0, dtype=np.float64)
        if x.shape != (n,):
            raise ShapeError("warm start length must equal the column count")
        if np.any(x):
            Ax = prob.A.forward(x)
            trace.n_forward += 1
        else:
            Ax = np.zeros(prob.A.rows, dtype=np.float64)

    r = Ax - prob.y
    rr = float(r @ r)
    l1_x = float(np.sum(np.abs(x)))
    f_x = prob.lam * l1_x + 0.5 * rr
    if not np.isfinite(f_x):
        raise DivergenceError("objective is non-finite at the starting point")
    trace.objectives.append(f_x)
    if callback is not None:
        callback(0, x)

    tau_lam = cfg.tau * prob.lam
    for _ in range(cfg.max_iter):
        grad = prob.A.adjoint(r)
        trace.n_adjoint += 1
        x_trial = soft_threshold(x - cfg.tau * grad, tau_lam)
        d = x_trial - x
        dn = float(np.linalg.norm(d))
        if not np.isfinite(dn):
            raise DivergenceError("shrinkage direction is non-finite")
        trace.direction_norms.append(dn)
        if dn <= cfg.tol * max(1.0, float(np.linalg.norm(x))):
            trace.termination = "converged"
            return x, trace

        l1_trial = float(np.sum(np.abs(x_trial)))
        delta_k = float(d @ grad) + prob.lam * (l1_trial - l1_x)
        Ad = prob.A.forward(d)
        trace.n_forward += 1
        rd = float(r @ Ad)
        dd = float(Ad @ Ad)

        sigma = 1.0
        accepted = False
        for bt in range(cfg.max_backtracks + 1):
            l1_next = l1_trial if sigma == 1.0 else float(
                np.sum(np.abs(x + sigma * d))
            )
            f_next = prob.lam * l1_next + 0.5 * (
                rr + 2.0 * sigma * rd + sigma * sigma * dd
            )
            if f_next - f_x <= sigma * cfg.gamma * delta_k:
                accepted = True
                break
            sigma *= cfg.beta
        if not accepted:
            # Ran out of backtracks: accept the smallest candidate and
            # keep going, flagging it in the trace.
            sigma /= cfg.beta
            bt = cfg.max_backtracks
            l1_next = float(np.sum(np.abs(x + sigma * d)))
            f_next = prob.lam * l1_next + 0.5 * (
                rr + 2.0 * sigma * rd + sigma * sigma * dd
            )
            trace.exhausted += 1

        if sigma == 1.0:
            x = x_trial
        else:
            x = x + sigma * d
        if not np.all(np.isfinite(x)):
            raise DivergenceError("iterate is non-finite")
        r = r + sigma * Ad
        rr = rr + 2.0 * sigma * rd + sigma * sigma * dd
        l1_x = l1_next
        f_x = f_next

        k = len(trace.sigmas) + 1
        trace.objectives.append(f_x)
        trace.sigmas.append(sigma)
        trace.deltas.append(delta_k)
        trace.backtracks.append(bt)
        if callback is not None:
            callback(k, x)

    # One last direction evaluation so max_iter runs still report ||d||.
    grad = prob.A.adjoint(r)
    trace.n_adjoint += 1
    d = soft_threshold(x - cfg.tau * grad, tau_lam) - x
    trace.direction_norms.append(float(np.linalg.norm(d)))
    trace.termination = "max_iter"
    return x, trace


def default_lambda(A, y, factor=0.01):
    """Penalty rule lam = factor * ||A^T y||_inf (one adjoint application).

    Falls back to factor itself when y is all zeros, where any positive
    penalty yields the same (zero) solution.
    """
    if factor <= 0:
        raise DomainError("penalty factor must be positive")
    scale = float(np.max(np.abs(A.adjoint(np.asarray(y, dtype=np.float64)))))
    return factor * scale if scale > 0 else factor
