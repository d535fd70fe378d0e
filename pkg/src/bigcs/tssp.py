"""Tree-structured support pursuit: reweighted l1 recovery over the wavelet
quadtree.

Natural images put their large wavelet coefficients on connected subtrees
rooted in the coarsest detail bands.  This module exploits that by solving a
short sequence of weighted problems

    min_xhat  lam * ||xhat||_1 + 0.5 * ||y - Phi Psi W^{-1} xhat||^2,
    xhat = W x,

where W is diagonal and a weight below one makes a coefficient cheaper to
keep.  The schedule:

  1. approximation block gets weight 0.1, everything else 1; solve;
  2. truncate the solution to the approximation block, correlate the
     measurement residual back through the current operator (a single
     adjoint application), and tag the top p percent of coarsest-level
     detail positions as tree roots with weight 0.2;
  3. walk down one level at a time: tag the four children of every
     surviving tree node with weight 0.1 * (S - s + 1) at level s, solve,
     then prune tagged entries whose solved magnitude falls below epsilon
     (their weight returns to 1);
  4. one final solve under the finished weights.

That is S + 1 inner solves in total.  Warm starts carry each stage's
solution into the next after rescaling by the weight ratio, so the
underlying image-domain iterate is preserved across weight changes.  The
returned coefficients are unweighted (x = W^{-1} xhat).

Everything is deterministic: identical (y, operator, layout, config)
reproduce the weights and the solution bit for bit.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .linop import compose, diag_op
from .solver import LassoProblem, SolverConfig, default_lambda, solve_lasso
from .wavelet import wavelet_synthesis_op

LL_WEIGHT = 0.1
ROOT_WEIGHT = 0.2


def level_weight(levels, level):
    """Weight for detail level `level`: 0.2 at the roots (level S), then
    0.1 * (S - s + 1) one level down and deeper."""
    if level == levels:
        return ROOT_WEIGHT
    return 0.1 * (levels - level + 1)


@dataclass
class WeightVector:
    """Diagonal weights plus a provenance tag per coefficient.

    provenance[i] records why a weight was set: 0 means off-tree (weight 1),
    1..S the detail level whose growth stage tagged it, S + 1 the
    approximation block.  Pruning resets both fields.
    """

    values: np.ndarray
    provenance: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.provenance = np.asarray(self.provenance, dtype=np.int16)
        if self.values.ndim != 1 or self.values.shape != self.provenance.shape:
            raise ShapeError("weights and provenance must be matching vectors")
        if not np.all(self.values > 0):
            raise DomainError("weights must be positive")

    @property
    def n(self):
        return self.values.size


@dataclass(frozen=True)
class TsspConfig:
    """Knobs for the pursuit and its inner solves.

    epsilon=None selects the relative pruning rule
    epsilon = epsilon_scale * max_i |xhat_i| per stage; a float makes it
    absolute.  lambda_fixed=None selects the per-stage rule
    lam = lambda_factor * ||A^T y||_inf.  tau for each stage is
    tau_safety divided by a per-stage power-iteration estimate of
    lam_max(A^T A).
    """

    p_percent: float = 10.0
    epsilon: float | None = None
    epsilon_scale: float = 1e-3
    lambda_fixed: float | None = None
    lambda_factor: float = 0.01
    warm_start: bool = True
    tau_safety: float = 1.9
    beta: float = 0.5
    gamma: float = 0.1
    tol: float = 1e-6
    max_iter: int = 10000
    max_backtracks: int = 30
    power_iters: int = 30
    power_seed: int = 0

    def __post_init__(self):
        if not 0 < self.p_percent <= 100:
            raise DomainError("p_percent must lie in (0, 100]")
        if self.epsilon is not None and not self.epsilon >= 0:
            raise DomainError("epsilon must be nonnegative")
        if self.epsilon_scale < 0:
            raise DomainError("epsilon_scale must be nonnegative")
        if self.lambda_fixed is not None and not self.lambda_fixed > 0:
            raise DomainError("a fixed penalty must be positive")
        if self.lambda_factor <= 0:
            raise DomainError("lambda_factor must be positive")


@dataclass
class StageRecord:
    """One inner solve: its penalty, effort, and active-set size.

    support_size is the selected root count after the initial stage, the
    surviving (post-prune) set size for level stages, and the total number
    of weighted coefficients for the final stage.
    """

    stage: str
    lam: float
    iterations: int
    final_objective: float
    support_size: int
    trace: object


@dataclass
class TsspResult:
    """Unweighted coefficients, the final weights, and per-stage records."""

    x: np.ndarray
    weights: WeightVector
    stages: list = field(default_factory=list)

    def write_stage_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(
                ["stage", "lambda", "inner_iterations", "final_objective",
                 "support_size"]
            )
            for rec in self.stages:
                out.writerow([rec.stage, repr(rec.lam), rec.iterations,
                              repr(rec.final_objective), rec.support_size])


def init_weights(layout):
    """Starting weights: 0.1 on the approximation block, 1 elsewhere."""
    values = np.ones(layout.n, dtype=np.float64)
    provenance = np.zeros(layout.n, dtype=np.int16)
    ll = layout.ll_indices()
    values[ll] = LL_WEIGHT
    provenance[ll] = layout.levels + 1
    return WeightVector(values, provenance)


def correlations(A_hat, residual):
    """|A^T r|: how strongly each coefficient explains the residual.

    Costs exactly one adjoint application.
    """
    return np.abs(A_hat.adjoint(np.asarray(residual, dtype=np.float64)))


def select_roots(c, layout, p_percent):
    """Top ceil(p% of the coarsest detail positions) by correlation.

    The pool is the union of the three level-S bands; ties break toward the
    lower vector index.  Returns the chosen indices ascending.
    """
    if not 0 < p_percent <= 100:
        raise DomainError("p_percent must lie in (0, 100]")
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (layout.n,):
        raise ShapeError("correlation vector length must match the layout")
    pool = layout.detail_indices(layout.levels)
    k = math.ceil(p_percent / 100.0 * pool.size)
    order = np.argsort(-c[pool], kind="stable")
    chosen = pool[order[:k]]
    chosen.sort()
    return chosen


def grow_level(weights, layout, parent_indices, level):
    """Tag the children of every parent at `level` and weight them.

    Parents must sit at level + 1; the new set comes back ascending.  The
    weight vector is updated in place and also returned.
    """
    parent_indices = np.asarray(parent_indices, dtype=np.int64)
    if parent_indices.size == 0:
        return weights, np.empty(0, dtype=np.int64)
    kids = np.concatenate([layout.children(i) for i in parent_indices])
    kids.sort()
    weights.values[kids] = level_weight(layout.levels, level)
    weights.provenance[kids] = level
    return weights, kids


def prune(weights, indices, x_star, epsilon):
    """Drop tagged indices whose solved magnitude is below epsilon.

    Dropped entries get weight 1 and provenance 0 again.  Returns the
    updated weights and the surviving index set.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    if indices.size == 0:
        return weights, indices
    x_star = np.asarray(x_star, dtype=np.float64)
    dead = np.abs(x_star[indices]) < epsilon
    removed = indices[dead]
    weights.values[removed] = 1.0
    weights.provenance[removed] = 0
    return weights, indices[~dead]


def _stage_solve(y, phi, synth, weights, cfg, x0):
    """Build the weighted operator for the current W and run one solve."""
    A_hat = compose([phi, synth, diag_op(1.0 / weights.values)])
    scfg = SolverConfig.for_operator(
        A_hat,
        tau_safety=cfg.tau_safety,
        power_iters=cfg.power_iters,
        power_seed=cfg.power_seed,
        beta=cfg.beta,
        gamma=cfg.gamma,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        max_backtracks=cfg.max_backtracks,
    )
    if cfg.lambda_fixed is not None:
        lam = cfg.lambda_fixed
    else:
        lam = default_lambda(A_hat, y, cfg.lambda_factor)
    xhat, trace = solve_lasso(LassoProblem(A_hat, y, lam), scfg, x0=x0)
    return A_hat, lam, xhat, trace


def recover_tssp(y, phi, layout, cfg=None):
    """Run the full pursuit; returns a TsspResult with unweighted x.

    y are the measurements, phi the measurement operator (rows = len(y),
    cols = layout.n), layout the wavelet geometry, cfg a TsspConfig (the
    defaults are used when omitted).
    """
    if cfg is None:
        cfg = TsspConfig()
    y = np.asarray(y, dtype=np.float64)
    if phi.cols != layout.n:
        raise ShapeError("operator width must match the layout")
    if y.shape != (phi.rows,):
        raise ShapeError("measurement length must equal the operator rows")

    synth = wavelet_synthesis_op(layout)
    levels = layout.levels
    W = init_weights(layout)
    stages = []

    # Initial solve under the approximation-only weights.
    A_hat, lam, xhat, trace = _stage_solve(y, phi, synth, W, cfg, x0=None)
    w_solved = W.values.copy()

    # Keep only the approximation block, correlate the residual it leaves,
    # and pick the tree roots.
    ll = layout.ll_indices()
    x_trunc = np.zeros(layout.n, dtype=np.float64)
    x_trunc[ll] = xhat[ll]
    resid = y - A_hat.forward(x_trunc)
    c = correlations(A_hat, resid)
    active = select_roots(c, layout, cfg.p_percent)
    W.values[active] = ROOT_WEIGHT
    W.provenance[active] = levels
    stages.append(StageRecord("init", lam, trace.iterations,
                              trace.objectives[-1], active.size, trace))

    for level in range(levels - 1, 0, -1):
        W, active = grow_level(W, layout, active, level)
        x0 = xhat * (W.values / w_solved) if cfg.warm_start else None
        A_hat, lam, xhat, trace = _stage_solve(y, phi, synth, W, cfg, x0)
        w_solved = W.values.copy()
        if cfg.epsilon is not None:
            eps = cfg.epsilon
        else:
            eps = cfg.epsilon_scale * float(np.max(np.abs(xhat)))
        W, active = prune(W, active, xhat, eps)
        stages.append(StageRecord(f"level{level}", lam, trace.iterations,
                                  trace.objectives[-1], active.size, trace))

    # Final solve under the finished weights.
    x0 = xhat * (W.values / w_solved) if cfg.warm_start else None
    A_hat, lam, xhat, trace = _stage_solve(y, phi, synth, W, cfg, x0)
    stages.append(StageRecord("final", lam, trace.iterations,
                              trace.objectives[-1],
                              int(np.count_nonzero(W.provenance)), trace))

    return TsspResult(x=xhat / W.values, weights=W, stages=stages)
