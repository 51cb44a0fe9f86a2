"""Families of smooth losses on R^m and their tensorized combinations.

An `ObjectiveFamily` evaluates S >= 2 smooth real losses jointly: `values`
returns the S loss values, `jacobian` the S x m matrix of gradients (one row
per loss), and `hessians` an (S, m, m) stack or None when second derivatives
are unavailable.  Tensorization combines two families on the same R^m into
the outer-sum family [l1 (+) l2]_{jk} = l1_j + l2_k, flattened row-major
(index (j, k) -> j * S2 + k), with the matching outer product of weights.
"""

import numpy as np

from .errors import DimensionMismatchError, InvalidDomainError
from .simplex_geometry import SimplexPoint

Array = np.ndarray


class ObjectiveFamily:
    """Base class: S >= 2 smooth real losses evaluated jointly on R^m."""

    m: int
    S: int

    def values(self, x) -> Array:
        """Vector of the S loss values at x."""
        raise NotImplementedError

    def jacobian(self, x) -> Array:
        """S x m matrix whose rows are the loss gradients at x."""
        raise NotImplementedError

    def hessians(self, x):
        """(S, m, m) stack of loss Hessians, or None when unavailable."""
        return None

    def check_point(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.m,):
            raise DimensionMismatchError(
                f"expected x of shape ({self.m},), got {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise InvalidDomainError("x must be finite")
        return x


class QuadraticFamily(ObjectiveFamily):
    """Losses l_s(x) = 0.5 x^T A_s x + b_s^T x + c_s with symmetric PSD A_s."""

    def __init__(self, A, b, c):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise DimensionMismatchError(f"A must have shape (S, m, m), got {A.shape}")
        S, m = A.shape[0], A.shape[1]
        if S < 2:
            raise DimensionMismatchError("a family needs at least 2 losses")
        if b.shape != (S, m) or c.shape != (S,):
            raise DimensionMismatchError(
                f"inconsistent shapes: A {A.shape}, b {b.shape}, c {c.shape}"
            )
        scale = 1.0 + np.abs(A).max()
        if np.abs(A - A.transpose(0, 2, 1)).max() > 1e-12 * scale:
            raise InvalidDomainError("each A_s must be symmetric")
        for s in range(S):
            if np.linalg.eigvalsh(A[s]).min() < -1e-10 * scale:
                raise InvalidDomainError(f"A[{s}] is not positive semidefinite")
        self.A, self.b, self.c = A, b, c
        self.S, self.m = S, m

    def values(self, x):
        x = self.check_point(x)
        return 0.5 * np.einsum("i,sij,j->s", x, self.A, x) + self.b @ x + self.c

    def jacobian(self, x):
        x = self.check_point(x)
        return np.einsum("sij,j->si", self.A, x) + self.b

    def hessians(self, x):
        self.check_point(x)
        return self.A.copy()


class ConstantFamily(ObjectiveFamily):
    """Losses that ignore x entirely: l_s(x) = c_s (zero gradients/Hessians)."""

    def __init__(self, c, m=1):
        c = np.asarray(c, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise DimensionMismatchError(
                f"expected at least 2 constants, got shape {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise InvalidDomainError("constants must be finite")
        if m < 1:
            raise DimensionMismatchError("m must be at least 1")
        self.c = c.copy()
        self.S = c.size
        self.m = int(m)

    def values(self, x):
        self.check_point(x)
        return self.c.copy()

    def jacobian(self, x):
        self.check_point(x)
        return np.zeros((self.S, self.m))

    def hessians(self, x):
        self.check_point(x)
        return np.zeros((self.S, self.m, self.m))


class OuterSumFamily(ObjectiveFamily):
    """Outer sum of two families on the same R^m, flattened row-major."""

    def __init__(self, first: ObjectiveFamily, second: ObjectiveFamily):
        if first.m != second.m:
            raise DimensionMismatchError(
                f"outer sum needs a common domain: m={first.m} vs m={second.m}"
            )
        self.first = first
        self.second = second
        self.m = first.m
        self.S = first.S * second.S

    def values(self, x):
        return np.add.outer(self.first.values(x), self.second.values(x)).ravel()

    def jacobian(self, x):
        j1 = self.first.jacobian(x)
        j2 = self.second.jacobian(x)
        return np.repeat(j1, self.second.S, axis=0) + np.tile(j2, (self.first.S, 1))

    def hessians(self, x):
        h1 = self.first.hessians(x)
        h2 = self.second.hessians(x)
        if h1 is None or h2 is None:
            return None
        return np.repeat(h1, self.second.S, axis=0) + np.tile(h2, (self.first.S, 1, 1))


def outer_sum(first: ObjectiveFamily, second: ObjectiveFamily) -> OuterSumFamily:
    """Tensorized family [l1 (+) l2]_{jk}(x) = l1_j(x) + l2_k(x)."""
    return OuterSumFamily(first, second)


def outer_product(q1: SimplexPoint, q2: SimplexPoint) -> SimplexPoint:
    """Product weights (q1 (x) q2)_{jk} = q1_j q2_k, flattened row-major.

    Computed in log space, so the result is exact and interior.
    """
    return SimplexPoint(np.add.outer(q1.log_weights, q2.log_weights).ravel())


def barygradient(fam: ObjectiveFamily, x, q: SimplexPoint) -> Array:
    """Weighted gradient J_l(x)^T q = sum_s q_s grad l_s(x)."""
    if q.size != fam.S:
        raise DimensionMismatchError(f"q has {q.size} entries, family has {fam.S}")
    return fam.jacobian(x).T @ q.probs


def rank_one_factor_check(q: SimplexPoint, s1: int, s2: int, tol: float = 1e-6):
    """Decide whether s1*s2 flattened weights factor as an outer product.

    Reshapes q row-major to (s1, s2) and tests the second singular value
    against tol times the first.  On success returns (True, (f1, f2)) where
    the marginal factors f1 (row sums) and f2 (column sums) satisfy
    f1 (x) f2 = q within tol; otherwise (False, None).
    """
    if s1 * s2 != q.size or s1 < 2 or s2 < 2:
        raise DimensionMismatchError(
            f"cannot reshape {q.size} weights to ({s1}, {s2})"
        )
    P = q.probs.reshape(s1, s2)
    svals = np.linalg.svd(P, compute_uv=False)
    if svals[1] > tol * svals[0]:
        return False, None
    f1 = SimplexPoint.from_probs(P.sum(axis=1))
    f2 = SimplexPoint.from_probs(P.sum(axis=0))
    return True, (f1, f2)


class DerivativeCheck:
    """Finite-difference audit of one point: worst deviations and a flag."""

    def __init__(self, x, jacobian_dev, hessian_dev, threshold):
        self.x = x
        self.jacobian_dev = jacobian_dev
        self.hessian_dev = hessian_dev
        self.threshold = threshold
        devs = [jacobian_dev] + ([hessian_dev] if hessian_dev is not None else [])
        self.flagged = max(devs) > threshold

    def __repr__(self):
        return (
            f"DerivativeCheck(jacobian_dev={self.jacobian_dev:.3e}, "
            f"hessian_dev={self.hessian_dev}, flagged={self.flagged})"
        )


def finite_diff_check(fam: ObjectiveFamily, points, step: float = 1e-5):
    """Check jacobian (and hessians, when available) against central differences.

    Returns one `DerivativeCheck` per point; a point is flagged when any
    deviation exceeds 1e-5 * (1 + Frobenius norm of the jacobian).
    """
    reports = []
    for x in points:
        x = fam.check_point(x)
        jac = fam.jacobian(x)
        fd_jac = np.zeros_like(jac)
        for i in range(fam.m):
            e = np.zeros(fam.m)
            e[i] = step
            fd_jac[:, i] = (fam.values(x + e) - fam.values(x - e)) / (2 * step)
        jac_dev = float(np.abs(jac - fd_jac).max())
        hess_dev = None
        hess = fam.hessians(x)
        if hess is not None:
            fd_hess = np.zeros_like(hess)
            for i in range(fam.m):
                e = np.zeros(fam.m)
                e[i] = step
                fd_hess[:, :, i] = (fam.jacobian(x + e) - fam.jacobian(x - e)) / (2 * step)
            hess_dev = float(np.abs(hess - fd_hess).max())
        threshold = 1e-5 * (1.0 + float(np.linalg.norm(jac)))
        reports.append(DerivativeCheck(x, jac_dev, hess_dev, threshold))
    return reports


def symmetric_quadratic() -> QuadraticFamily:
    """The two-well pair l_1 = (x-1)^2/2, l_2 = (x+1)^2/2 on R^1.

    Its unique equal-loss point is x = 0 with common value 1/2, where the
    weighted gradient vanishes only at the uniform weights.
    """
    return QuadraticFamily(
        A=np.ones((2, 1, 1)),
        b=np.array([[-1.0], [1.0]]),
        c=np.array([0.5, 0.5]),
    )


def random_quadratic(rng, m: int = 3, S: int = 4, min_curvature: float = 0.1) -> QuadraticFamily:
    """Random strictly convex quadratic family (A_s >= min_curvature * Id)."""
    G = rng.normal(size=(S, m, m))
    A = np.einsum("sij,skj->sik", G, G) / m + min_curvature * np.eye(m)
    b = rng.normal(size=(S, m))
    c = rng.normal(size=S)
    return QuadraticFamily(A, b, c)
