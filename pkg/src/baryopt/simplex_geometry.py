"""Geometry of the open probability simplex in log coordinates.

Interior points are stored as normalized log-probabilities (`SimplexPoint`);
boundary points are not representable, which keeps every divergence below
finite.  The reduced chart used by the landscape and flow modules pins the
last logit to zero: a vector ``xi_bar`` of S-1 free logits stands for the
full logit vector (xi_bar, 0), and ``sigma_bar`` denotes the first S-1
components of its softargmax.

Conventions:

    negentropy          h(q) = sum_s q_s log q_s,   grad h(q) = 1 + log q
    kl(r, q)            sum_s r_s (log r_s - log q_s)
    softargmax(xi)      (grad h)^{-1}(xi - LSE(xi) 1), LSE(xi) = log sum_s e^{xi_s - 1}
    fisher_information  I(xi_bar) = Diag(sigma_bar) - sigma_bar sigma_bar^T
    christoffel         Levi-Civita symbols of I in the xi_bar chart

All log-sum-exp work is max-shifted (scipy.special); linear-space
probabilities appear only at API boundaries.  Instances and return values
are immutable or freshly allocated, so everything here is safe to share
across threads.
"""

import numpy as np
from scipy.special import log_softmax, logsumexp

from .errors import DimensionMismatchError, InvalidDomainError

Array = np.ndarray

# Linear-space probabilities at or below this floor count as boundary points
# and are rejected; log-space representations stay finite instead.
PROB_FLOOR = 1e-300


def _frozen(values) -> Array:
    out = np.array(values, dtype=float)
    out.flags.writeable = False
    return out


class SimplexPoint:
    """Interior simplex point stored as normalized log-probabilities.

    The constructor accepts any finite logit vector and normalizes it in log
    space, so ``SimplexPoint(xi)`` realizes softargmax(xi); adding a constant
    to the input yields the same point.  Instances are immutable.
    """

    __slots__ = ("log_weights",)

    def __init__(self, log_weights):
        lw = np.asarray(log_weights, dtype=float)
        if lw.ndim != 1 or lw.size < 2:
            raise DimensionMismatchError(
                f"expected a 1-d logit vector with at least 2 entries, got shape {lw.shape}"
            )
        if not np.all(np.isfinite(lw)):
            raise InvalidDomainError("logit entries must be finite")
        self.log_weights = _frozen(log_softmax(lw))

    @classmethod
    def from_probs(cls, probs) -> "SimplexPoint":
        """Build from linear-space weights; boundary points are rejected."""
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise DimensionMismatchError(
                f"expected a 1-d probability vector with at least 2 entries, got shape {p.shape}"
            )
        if not np.all(np.isfinite(p)) or np.any(p <= PROB_FLOOR):
            raise InvalidDomainError(
                "probabilities must be finite and strictly positive"
            )
        return cls(np.log(p))

    @classmethod
    def uniform(cls, size: int) -> "SimplexPoint":
        return cls(np.zeros(size))

    @property
    def size(self) -> int:
        return self.log_weights.size

    @property
    def probs(self) -> Array:
        return np.exp(self.log_weights)

    def __repr__(self):
        return f"SimplexPoint(probs={self.probs!r})"


def softargmax(xi) -> SimplexPoint:
    """Map a finite logit vector to the simplex interior.

    Equals (grad h)^{-1}(xi - LSE(xi) 1) for the negentropy h and is
    invariant under adding a constant to xi.
    """
    return SimplexPoint(xi)


def negentropy(q: SimplexPoint):
    """Return h(q) = sum_s q_s log q_s and its gradient 1 + log q."""
    lw = q.log_weights
    value = float(np.exp(lw) @ lw)
    return value, 1.0 + lw


def negentropy_grad_inverse(y) -> Array:
    """(grad h)^{-1}(y) = exp(y - 1), as linear-space weights.

    Sums to one exactly when y lies in the image of grad h.
    """
    return np.exp(np.asarray(y, dtype=float) - 1.0)


def kl(r: SimplexPoint, q: SimplexPoint) -> float:
    """Kullback-Leibler divergence sum_s r_s log(r_s / q_s).

    Finite for all interior points; zero iff the points coincide.
    """
    if r.size != q.size:
        raise DimensionMismatchError(
            f"KL between points of different sizes: {r.size} vs {q.size}"
        )
    return float(np.exp(r.log_weights) @ (r.log_weights - q.log_weights))


class HybridPoint:
    """State (x, q) in R^m x int(simplex)."""

    __slots__ = ("x", "q")

    def __init__(self, x, q: SimplexPoint):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise DimensionMismatchError(f"x must be a 1-d vector, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidDomainError("x must be finite")
        if not isinstance(q, SimplexPoint):
            raise InvalidDomainError("q must be a SimplexPoint")
        self.x = _frozen(x)
        self.q = q

    @property
    def m(self) -> int:
        return self.x.size

    def __repr__(self):
        return f"HybridPoint(x={self.x!r}, q={self.q!r})"


def hybrid_bregman(u: HybridPoint, v: HybridPoint) -> float:
    """Bregman divergence of f(x, q) = ||x||^2/2 + h(q).

    D_f(u, v) = 0.5 ||x_u - x_v||^2 + KL(q_u || q_v); the Euclidean part in
    x and the entropic part on the simplex."""
    if u.m != v.m:
        raise DimensionMismatchError(f"x dimensions differ: {u.m} vs {v.m}")
    dx = u.x - v.x
    return 0.5 * float(dx @ dx) + kl(u.q, v.q)


def as_logits(xi_bar) -> Array:
    """Validate a reduced logit vector (finite, 1-d, at least one entry)."""
    xb = np.atleast_1d(np.asarray(xi_bar, dtype=float))
    if xb.ndim != 1 or xb.size < 1:
        raise DimensionMismatchError(
            f"expected a 1-d reduced logit vector, got shape {xb.shape}"
        )
    if not np.all(np.isfinite(xb)):
        raise InvalidDomainError("reduced logits must be finite")
    return xb


def sigma_pinned(xi_bar) -> Array:
    """Full probability vector of the pinned chart: softargmax((xi_bar, 0))."""
    xb = as_logits(xi_bar)
    return np.exp(log_softmax(np.append(xb, 0.0)))


def point_from_logits(xi_bar) -> SimplexPoint:
    """Inverse chart map: the simplex point with logits (xi_bar, 0)."""
    return SimplexPoint(np.append(as_logits(xi_bar), 0.0))


def logits_from_point(q: SimplexPoint) -> Array:
    """Chart map q -> xi_bar with xi_bar_s = log(q_s / q_S)."""
    lw = q.log_weights
    return lw[:-1] - lw[-1]


def covariance(q: SimplexPoint) -> Array:
    """Covariance matrix Diag(q) - q q^T of the categorical distribution q.

    Positive semidefinite with kernel spanned by the all-ones vector; equals
    the Jacobian of softargmax at any logit vector representing q.
    """
    p = q.probs
    return np.diag(p) - np.outer(p, p)


def fisher_information(xi_bar):
    """Fisher information of the pinned chart and its closed-form inverse.

    Returns (I, I_inv) with

        I     = Diag(sigma_bar) - sigma_bar sigma_bar^T,
        I_inv = Diag(1/sigma_bar) + (1/sigma_S) 1 1^T,

    where sigma = softargmax((xi_bar, 0)) and sigma_S is its last component.
    I is symmetric positive definite for every finite xi_bar.
    """
    sigma = sigma_pinned(xi_bar)
    sb, s_last = sigma[:-1], sigma[-1]
    mat = np.diag(sb) - np.outer(sb, sb)
    inv = np.diag(1.0 / sb) + 1.0 / s_last
    return mat, inv


def covariance_derivative_tensor(p) -> Array:
    """Derivative tensor of the covariance map p -> Diag(p) - p p^T.

    T[i, j, k] = d[Diag(p) - p p^T]_ij / dp_k
               = delta_ij delta_ik - p_j delta_ik - p_i delta_jk.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    n = p.size
    eye = np.eye(n)
    return (
        np.einsum("ij,ik->ijk", eye, eye)
        - np.einsum("ik,j->ijk", eye, p)
        - np.einsum("jk,i->ijk", eye, p)
    )


def christoffel(xi_bar) -> Array:
    """Levi-Civita symbols of the Fisher metric in the pinned chart.

    Returns gamma with ``gamma[i, j, k]`` = Gamma^k_{ij}
        = 1/2 (delta_ij delta_ik - delta_ik sigma_bar_j - delta_jk sigma_bar_i),
    symmetric in (i, j).  Lowering the raised index with the metric recovers
    the first-kind symbols (1/2) dI_ij / dxi_bar_k, which is the defining
    property (I is the Hessian of the log-partition of the chart, so the
    first-kind symbols are half its third derivatives).
    """
    sigma = sigma_pinned(xi_bar)
    return 0.5 * covariance_derivative_tensor(sigma[:-1])
