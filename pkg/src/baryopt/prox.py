"""Entropy-regularized proximal step on R^m x int(simplex).

For a loss family l and step size lam > 0 the proximal map sends (x, q) to
the unique saddle point (x', q') of

    H(z, r) = r^T l(z) + ||z - x||^2 / (2 lam) - KL(r || q) / lam,

which is strongly convex in z and strongly concave in r.  Maximizing over r
in closed form (log r(z) = log q + lam * l(z), normalized) leaves the reduced
objective

    phi(z) = (1/lam) log sum_s q_s exp(lam l_s(z)) + ||z - x||^2 / (2 lam),

a (1/lam)-strongly convex function whose gradient is the barygradient under
the reweighted point r(z) plus (z - x)/lam.  The solver descends phi from the
warm start z = x with Armijo backtracking; when the family provides Hessians
it takes damped Newton directions (the plain gradient path remains available
via `ProxConfig.allow_newton=False`).

Stationarity of the returned pair:

    x = x' + lam J_l(x')^T q'          (x block)
    grad h(q') - lam l(x') = grad h(q) + c 1   for some scalar c   (q block)

Residuals of both blocks are returned with the result; the q block is exact
up to rounding because q' is computed in closed form from x'.
"""

import numpy as np
from scipy.special import log_softmax, logsumexp

from .errors import (
    DimensionMismatchError,
    InvalidDomainError,
    ProxNonConvergenceError,
)
from .objectives import ObjectiveFamily
from .simplex_geometry import HybridPoint, SimplexPoint, hybrid_bregman, kl

Array = np.ndarray

_ARMIJO_SLOPE = 1e-4
_ARMIJO_SHRINK = 0.5
_MAX_HALVINGS = 60
# Accept steps whose exact decrease is masked by rounding; without this the
# line search stalls once |phi| * eps exceeds the per-step decrease, well
# before tight gradient tolerances are reached.
_ROUNDOFF_SLACK = 1e-15


class ProxConfig:
    """Step size and inner-solver budget for the proximal map."""

    def __init__(self, lam=0.5, inner_tol=1e-10, inner_max_iter=10000, allow_newton=True):
        if not (np.isfinite(lam) and lam > 0):
            raise InvalidDomainError(f"lam must be positive and finite, got {lam}")
        if not (np.isfinite(inner_tol) and inner_tol > 0):
            raise InvalidDomainError(f"inner_tol must be positive, got {inner_tol}")
        if inner_max_iter < 1:
            raise InvalidDomainError("inner_max_iter must be at least 1")
        self.lam = float(lam)
        self.inner_tol = float(inner_tol)
        self.inner_max_iter = int(inner_max_iter)
        self.allow_newton = bool(allow_newton)


class ProxResult:
    """Proximal step output: the new pair plus solver certificates."""

    def __init__(self, x, q, inner_iterations, residual):
        self.x = x
        self.q = q
        self.inner_iterations = inner_iterations
        self.residual = residual  # (x-block, q-block) stationarity residuals

    @property
    def point(self) -> HybridPoint:
        return HybridPoint(self.x, self.q)

    def __repr__(self):
        return (
            f"ProxResult(x={self.x!r}, q={self.q!r}, "
            f"inner_iterations={self.inner_iterations}, residual={self.residual})"
        )


def _descend(value_grad, hess, z0, tol, max_iter, gd_step):
    """Armijo descent to ||grad|| <= tol, Newton directions when hess is given.

    value_grad(z) -> (value, grad); hess(z) -> SPD matrix or None.
    Returns (z, value, grad, steps); raises ProxNonConvergenceError with the
    best iterate attached when the budget runs out.
    """
    z = np.array(z0, dtype=float)
    value, grad = value_grad(z)
    steps = 0
    while True:
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= tol:
            return z, value, grad, steps
        if steps >= max_iter:
            raise ProxNonConvergenceError(
                f"inner solver: no convergence after {steps} steps "
                f"(|grad| = {grad_norm:.3e}, tol = {tol:.3e})",
                x=z,
                grad_norm=grad_norm,
                iterations=steps,
            )
        direction = None
        step0 = gd_step
        if hess is not None:
            H = hess(z)
            try:
                candidate = -np.linalg.solve(H, grad)
                if candidate @ grad < 0:
                    direction = candidate
                    step0 = 1.0
            except np.linalg.LinAlgError:
                pass
        if direction is None:
            direction = -grad
        slope = float(direction @ grad)
        t = step0
        slack = _ROUNDOFF_SLACK * (1.0 + abs(value))
        for _ in range(_MAX_HALVINGS):
            z_new = z + t * direction
            value_new, grad_new = value_grad(z_new)
            if value_new <= value + _ARMIJO_SLOPE * t * slope + slack:
                break
            t *= _ARMIJO_SHRINK
        else:
            raise ProxNonConvergenceError(
                f"inner solver: line search stalled at |grad| = {grad_norm:.3e}",
                x=z,
                grad_norm=grad_norm,
                iterations=steps,
            )
        z, value, grad = z_new, value_new, grad_new
        steps += 1


def prox(fam: ObjectiveFamily, x, q: SimplexPoint, cfg: ProxConfig = None) -> ProxResult:
    """Proximal step: the saddle point (x', q') of H at (x, q).

    Descends the reduced objective phi from z = x until
    ||grad phi(z)|| * max(1, lam) <= inner_tol, then recovers
    q' proportional to q * exp(lam * l(x')) in log space.  The returned
    residuals are the stationarity defects of the two blocks.
    """
    if cfg is None:
        cfg = ProxConfig()
    x = fam.check_point(x)
    if q.size != fam.S:
        raise DimensionMismatchError(f"q has {q.size} entries, family has {fam.S}")
    lam = cfg.lam
    lq = q.log_weights

    def value_grad(z):
        vals = fam.values(z)
        if not np.all(np.isfinite(vals)):
            raise InvalidDomainError("family returned non-finite loss values")
        shifted = lq + lam * vals
        r = np.exp(log_softmax(shifted))
        dz = z - x
        value = float(logsumexp(shifted)) / lam + 0.5 * float(dz @ dz) / lam
        grad = fam.jacobian(z).T @ r + dz / lam
        return value, grad

    hess = None
    if cfg.allow_newton and fam.hessians(x) is not None:

        def hess(z):
            vals = fam.values(z)
            r = np.exp(log_softmax(lq + lam * vals))
            jac = fam.jacobian(z)
            mean_grad = jac.T @ r
            curvature = np.einsum("s,sij->ij", r, fam.hessians(z))
            spread = (jac.T * r) @ jac - np.outer(mean_grad, mean_grad)
            return curvature + lam * spread + np.eye(fam.m) / lam

    tol = cfg.inner_tol / max(1.0, lam)
    try:
        z, _, _, steps = _descend(value_grad, hess, x, tol, cfg.inner_max_iter, gd_step=lam)
    except ProxNonConvergenceError as err:
        if err.x is not None and err.q is None:
            err.q = SimplexPoint(lq + lam * fam.values(err.x))
        raise

    vals = fam.values(z)
    q_out = SimplexPoint(lq + lam * vals)
    r_x = float(np.linalg.norm(x - z - lam * (fam.jacobian(z).T @ q_out.probs)))
    gauge = q_out.log_weights - lam * vals - lq
    r_q = 0.5 * float(gauge.max() - gauge.min())
    return ProxResult(x=z, q=q_out, inner_iterations=steps, residual=(r_x, r_q))


def saddle_objective(fam: ObjectiveFamily, x, q: SimplexPoint, z, r: SimplexPoint, lam: float) -> float:
    """H_{x,q}(z, r) = r^T l(z) + ||z - x||^2 / (2 lam) - KL(r||q) / lam."""
    x = fam.check_point(x)
    z = fam.check_point(z)
    dz = z - x
    return float(r.probs @ fam.values(z)) + 0.5 * float(dz @ dz) / lam - kl(r, q) / lam


def minimize_fixed_weights(fam: ObjectiveFamily, x, r: SimplexPoint, cfg: ProxConfig = None):
    """Minimizer of z -> r^T l(z) + ||z - x||^2 / (2 lam) for fixed weights r.

    Used to evaluate the min-then-max order of the saddle problem with the
    same descent machinery as the proximal map.
    """
    if cfg is None:
        cfg = ProxConfig()
    x = fam.check_point(x)
    lam = cfg.lam
    p = r.probs

    def value_grad(z):
        dz = z - x
        value = float(p @ fam.values(z)) + 0.5 * float(dz @ dz) / lam
        grad = fam.jacobian(z).T @ p + dz / lam
        return value, grad

    hess = None
    if cfg.allow_newton and fam.hessians(x) is not None:

        def hess(z):
            return np.einsum("s,sij->ij", p, fam.hessians(z)) + np.eye(fam.m) / lam

    tol = cfg.inner_tol / max(1.0, lam)
    z, _, _, _ = _descend(value_grad, hess, x, tol, cfg.inner_max_iter, gd_step=lam)
    return z


def monotone_operator(fam: ObjectiveFamily, p: HybridPoint):
    """The saddle operator A(x, q) = (J_l(x)^T q, -l(x)) of (x, q) -> q^T l(x)."""
    if p.q.size != fam.S:
        raise DimensionMismatchError(f"q has {p.q.size} entries, family has {fam.S}")
    x = fam.check_point(p.x)
    return fam.jacobian(x).T @ p.q.probs, -fam.values(x)


def monotonicity_gap(fam: ObjectiveFamily, u: HybridPoint, v: HybridPoint) -> float:
    """<(u - v), A(u) - A(v)> in R^m x R^S; nonnegative for every pair."""
    au_x, au_q = monotone_operator(fam, u)
    av_x, av_q = monotone_operator(fam, v)
    return float((u.x - v.x) @ (au_x - av_x) + (u.q.probs - v.q.probs) @ (au_q - av_q))


def bfne_gap(fam: ObjectiveFamily, u: HybridPoint, v: HybridPoint, cfg: ProxConfig = None) -> float:
    """Slack of the firm-nonexpansiveness inequality in the hybrid geometry.

    With T the proximal map and f(x, q) = ||x||^2/2 + h(q), returns

        <Tu - Tv, grad f(u) - grad f(v)> - <Tu - Tv, grad f(Tu) - grad f(Tv)>,

    which is nonnegative up to inner-solver error.  Gradient differences in
    the simplex block reduce to log-weight differences, so the gauge constant
    cancels exactly.
    """
    pu = prox(fam, u.x, u.q, cfg)
    pv = prox(fam, v.x, v.q, cfg)
    dx = pu.x - pv.x
    dq = pu.q.probs - pv.q.probs
    lhs = float(dx @ dx) + float(dq @ (pu.q.log_weights - pv.q.log_weights))
    rhs = float(dx @ (u.x - v.x)) + float(dq @ (u.q.log_weights - v.q.log_weights))
    return rhs - lhs


def resolvent_residual(fam: ObjectiveFamily, p: HybridPoint, result: ProxResult, lam: float) -> float:
    """Max-norm defect of the f-resolvent identity at a prox input/output pair.

    Checks grad f(x', q') + lam A(x', q'), gauge-shifted by
    LSE(xi) = log sum_s exp(xi_s - 1) in the simplex block, against the
    gauge-shifted grad f(x, q).  For exact solves both blocks agree exactly;
    note LSE(grad h(q)) = 0 for any simplex point q.
    """
    vals_out = fam.values(result.x)
    out_x = result.x + lam * (fam.jacobian(result.x).T @ result.q.probs)
    arg_out = (1.0 + result.q.log_weights) - lam * vals_out
    out_q = arg_out - logsumexp(arg_out - 1.0)
    in_q = (1.0 + p.q.log_weights) - logsumexp(p.q.log_weights)
    return float(
        max(np.abs(out_x - p.x).max(), np.abs(out_q - in_q).max())
    )


def fixed_point_residual(fam: ObjectiveFamily, p: HybridPoint, cfg: ProxConfig = None):
    """Fixed-point certificates (barygradient norm, loss spread, prox displacement).

    All three vanish exactly at fixed points of the proximal map: the
    weighted gradient J^T q, the spread max l - min l, and the hybrid
    Bregman divergence D_f(prox(x, q), (x, q)).
    """
    vals = fam.values(p.x)
    barygrad_norm = float(np.linalg.norm(fam.jacobian(p.x).T @ p.q.probs))
    spread = float(vals.max() - vals.min())
    displacement = hybrid_bregman(prox(fam, p.x, p.q, cfg).point, p)
    return barygrad_norm, spread, displacement
