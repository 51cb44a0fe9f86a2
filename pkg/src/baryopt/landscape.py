"""Joint objective landscape in the reduced chart (x, xi_bar).

The weighted objective F(x, q) = q^T l(x), expressed through the pinned
chart q = softargmax((xi_bar, 0)), becomes a smooth function f_bar on
R^m x R^{S-1}.  This module provides its gradient, its Euclidean and
Riemannian Hessians under the product metric

    M(x, xi_bar) = blockdiag(Id_m, I(xi_bar)),

and the resulting critical-point classification.  With sigma the pinned
probabilities, sb = sigma[:-1], lbar the loss vector relative to the last
loss, and I the Fisher information:

    grad f_bar = (J_l^T sigma,  I lbar)
    Euclidean Hessian = [[sum_s sigma_s H_s,   J_lbar^T I       ],
                         [I J_lbar,            (T(sb) x_2 lbar) I]]

where T is the covariance-derivative tensor.  The Riemannian Hessian differs
only in the xi_bar block, where the Christoffel correction replaces
(T x_2 lbar) I = 2H by

    H = (Diag(sb) D - D sb sb^T - sb sb^T D) / 2,   D = Diag(lbar - 1 sb^T lbar).

At a critical point the x block B1 is positive semidefinite and the Schur
complement B2 = H - I J_lbar B1^{-1} J_lbar^T I is negative semidefinite, so
interior critical points are saddles or degenerate, never local minima.
"""

import numpy as np

from .errors import (
    DegenerateMetricError,
    DimensionMismatchError,
    HessiansUnavailableError,
    InvalidDomainError,
)
from .objectives import ObjectiveFamily
from .prox import ProxConfig, prox
from .simplex_geometry import (
    HybridPoint,
    SimplexPoint,
    as_logits,
    christoffel,
    covariance_derivative_tensor,
    fisher_information,
    hybrid_bregman,
    logits_from_point,
    point_from_logits,
    sigma_pinned,
)

Array = np.ndarray

EPS_CRITICAL = 1e-8
EPS_EIG_SCALE = 1e-8

CLASS_SADDLE = "saddle"
CLASS_DEGENERATE = "degenerate"
CLASS_NOT_CRITICAL = "not-critical"


class LandscapePoint:
    """Chart point (x, xi_bar) with q = softargmax((xi_bar, 0))."""

    __slots__ = ("x", "xi_bar")

    def __init__(self, x, xi_bar):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise InvalidDomainError("x must be a finite 1-d vector")
        self.x = x.copy()
        self.xi_bar = as_logits(xi_bar).copy()

    @classmethod
    def from_hybrid(cls, p: HybridPoint) -> "LandscapePoint":
        return cls(p.x, logits_from_point(p.q))

    @property
    def q(self) -> SimplexPoint:
        return point_from_logits(self.xi_bar)

    def __repr__(self):
        return f"LandscapePoint(x={self.x!r}, xi_bar={self.xi_bar!r})"


def _check(fam: ObjectiveFamily, point: LandscapePoint):
    x = fam.check_point(point.x)
    if point.xi_bar.size != fam.S - 1:
        raise DimensionMismatchError(
            f"xi_bar has {point.xi_bar.size} entries, expected {fam.S - 1}"
        )
    return x, point.xi_bar


def f_bar(fam: ObjectiveFamily, point: LandscapePoint) -> float:
    """Objective sigma(xi)^T l(x) in the reduced chart."""
    x, xb = _check(fam, point)
    return float(sigma_pinned(xb) @ fam.values(x))


def grad_f_bar(fam: ObjectiveFamily, point: LandscapePoint) -> Array:
    """Gradient (J_l^T sigma, I(xi_bar) lbar), concatenated to length m + S - 1."""
    x, xb = _check(fam, point)
    sigma = sigma_pinned(xb)
    vals = fam.values(x)
    lbar = vals[:-1] - vals[-1]
    fim, _ = fisher_information(xb)
    return np.concatenate([fam.jacobian(x).T @ sigma, fim @ lbar])


def metric(point: LandscapePoint) -> Array:
    """Product metric blockdiag(Id_m, I(xi_bar))."""
    m = point.x.size
    fim, _ = fisher_information(point.xi_bar)
    n = fim.shape[0]
    out = np.zeros((m + n, m + n))
    out[:m, :m] = np.eye(m)
    out[m:, m:] = fim
    return out


def euclidean_hessian(fam: ObjectiveFamily, point: LandscapePoint) -> Array:
    """Euclidean Hessian of f_bar in the chart, assembled blockwise.

    The xi_bar block is the covariance-derivative contraction
    (T(sb) x_2 lbar) I; the cross block is J_lbar^T I.
    """
    x, xb = _check(fam, point)
    hess = fam.hessians(x)
    if hess is None:
        raise HessiansUnavailableError(
            "euclidean_hessian needs a family with second derivatives"
        )
    sigma = sigma_pinned(xb)
    sb = sigma[:-1]
    vals = fam.values(x)
    lbar = vals[:-1] - vals[-1]
    jac = fam.jacobian(x)
    jbar = jac[:-1] - jac[-1]
    fim, _ = fisher_information(xb)

    m = fam.m
    n = fam.S - 1
    out = np.zeros((m + n, m + n))
    out[:m, :m] = np.einsum("s,sij->ij", sigma, hess)
    cross = jbar.T @ fim
    out[:m, m:] = cross
    out[m:, :m] = cross.T
    tensor = covariance_derivative_tensor(sb)
    out[m:, m:] = np.einsum("ijk,j->ik", tensor, lbar) @ fim
    return out


def _riemannian_xi_block(xb, vals):
    sigma = sigma_pinned(xb)
    sb = sigma[:-1]
    lbar = vals[:-1] - vals[-1]
    d = lbar - float(sb @ lbar)
    v = sb * d
    return 0.5 * (np.diag(v) - np.outer(v, sb) - np.outer(sb, v))


class HessianReport:
    """Second-order audit of a chart point."""

    def __init__(self, euclidean, riemannian, metric_matrix, grad_norm,
                 inertia, schur_b2, classification):
        self.euclidean = euclidean
        self.riemannian = riemannian
        self.metric = metric_matrix
        self.grad_norm = grad_norm
        self.inertia = inertia  # (positive, negative, zero) eigenvalue counts
        self.schur_b2 = schur_b2
        self.classification = classification

    def __repr__(self):
        return (
            f"HessianReport(classification={self.classification!r}, "
            f"inertia={self.inertia}, grad_norm={self.grad_norm:.3e})"
        )


def riemannian_hessian(
    fam: ObjectiveFamily,
    point: LandscapePoint,
    eps_critical: float = EPS_CRITICAL,
    eps_eig_scale: float = EPS_EIG_SCALE,
) -> HessianReport:
    """Riemannian Hessian report under the product metric.

    Only the xi_bar block differs from the Euclidean Hessian: the Christoffel
    correction sum_k Gamma^k_ij (I lbar)_k equals exactly half the Euclidean
    block, leaving H.  The report includes the inertia of the Riemannian
    Hessian, the Schur complement B2 of its x block B1 (raises
    DegenerateMetricError when B1 is singular), and the classification:
    "saddle" when the point is critical, B1 is positive definite, and B2 has
    a negative eigenvalue; "degenerate" when critical with B2 vanishing to
    tolerance; "not-critical" otherwise.
    """
    x, xb = _check(fam, point)
    euclid = euclidean_hessian(fam, point)
    vals = fam.values(x)
    m = fam.m

    riem = euclid.copy()
    riem[m:, m:] = _riemannian_xi_block(xb, vals)

    grad_norm = float(np.linalg.norm(grad_f_bar(fam, point)))
    eigvals = np.linalg.eigvalsh(0.5 * (riem + riem.T))
    eps_eig = eps_eig_scale * (1.0 + float(np.abs(eigvals).max()))
    inertia = (
        int(np.sum(eigvals > eps_eig)),
        int(np.sum(eigvals < -eps_eig)),
        int(np.sum(np.abs(eigvals) <= eps_eig)),
    )

    b1 = riem[:m, :m]
    b1_eigs = np.linalg.eigvalsh(0.5 * (b1 + b1.T))
    if b1_eigs.min() <= 1e-12 * (1.0 + abs(b1_eigs.max())):
        raise DegenerateMetricError(
            "x block of the Hessian is singular; Schur complement unavailable"
        )
    fim, _ = fisher_information(xb)
    jac = fam.jacobian(x)
    jbar = jac[:-1] - jac[-1]
    coupling = fim @ jbar  # (S-1) x m
    b2 = riem[m:, m:] - coupling @ np.linalg.solve(b1, coupling.T)

    b2_eigs = np.linalg.eigvalsh(0.5 * (b2 + b2.T))
    critical = grad_norm <= eps_critical
    if critical and b1_eigs.min() > 0 and b2_eigs.min() < -eps_eig:
        classification = CLASS_SADDLE
    elif critical and np.abs(b2_eigs).max() <= eps_eig:
        classification = CLASS_DEGENERATE
    else:
        classification = CLASS_NOT_CRITICAL

    return HessianReport(
        euclidean=euclid,
        riemannian=riem,
        metric_matrix=metric(point),
        grad_norm=grad_norm,
        inertia=inertia,
        schur_b2=b2,
        classification=classification,
    )


def christoffel_correction(fam: ObjectiveFamily, point: LandscapePoint) -> Array:
    """Correction term sum_k Gamma^k_ij * (grad f_bar)_{xi_bar, k}.

    This is the exact difference between the Euclidean and Riemannian xi_bar
    blocks; exposed for cross-checks against the geometry module.
    """
    _, xb = _check(fam, point)
    grad_xi = grad_f_bar(fam, point)[fam.m:]
    return np.einsum("ijk,k->ij", christoffel(xb), grad_xi)


class CriticalValueReport:
    """Objective values over the critical subset of scanned points."""

    def __init__(self, n_points, n_critical, values, spread, threshold, passed, note):
        self.n_points = n_points
        self.n_critical = n_critical
        self.values = values
        self.spread = spread
        self.threshold = threshold
        self.passed = passed
        self.note = note

    def __repr__(self):
        return (
            f"CriticalValueReport(n_critical={self.n_critical}/{self.n_points}, "
            f"spread={self.spread:.3e}, passed={self.passed})"
        )


def critical_value_scan(fam: ObjectiveFamily, points, tol: float = 1e-6) -> CriticalValueReport:
    """Filter candidate points by ||grad f_bar|| <= tol and compare their values.

    All critical points of the same family share one objective value; the
    report passes when max - min <= tol * (1 + max |value|) over the filtered
    set (vacuously when the filtered set is empty).
    """
    values = []
    for point in points:
        grad_norm = float(np.linalg.norm(grad_f_bar(fam, point)))
        if grad_norm <= tol:
            values.append(f_bar(fam, point))
    values = np.array(values)
    if values.size == 0:
        return CriticalValueReport(
            n_points=len(points),
            n_critical=0,
            values=values,
            spread=0.0,
            threshold=tol,
            passed=True,
            note="no critical points among candidates",
        )
    spread = float(values.max() - values.min())
    threshold = tol * (1.0 + float(np.abs(values).max()))
    return CriticalValueReport(
        n_points=len(points),
        n_critical=int(values.size),
        values=values,
        spread=spread,
        threshold=threshold,
        passed=spread <= threshold,
        note="",
    )


def fix_equals_critical_check(
    fam: ObjectiveFamily,
    point: LandscapePoint,
    prox_cfg: ProxConfig = None,
    tol: float = 1e-6,
) -> bool:
    """True iff the critical-point and prox-fixed-point tests agree at point.

    Compares ||grad f_bar|| <= tol with the hybrid Bregman displacement of
    the proximal map D_f(prox(x, q), (x, q)) <= tol.
    """
    x, _ = _check(fam, point)
    is_critical = float(np.linalg.norm(grad_f_bar(fam, point))) <= tol
    state = HybridPoint(x, point.q)
    displacement = hybrid_bregman(prox(fam, state.x, state.q, prox_cfg).point, state)
    is_fixed = displacement <= tol
    return is_critical == is_fixed
