"""Coupled gradient flows on R^m x int(simplex) in the pinned chart.

Two continuous-time dynamics share the x equation dx/dt = -J_l(x)^T q and
differ in the weight equation, written for xi_bar with q = softargmax((xi_bar, 0)):

    min_max:  dxi_bar/dt = +lbar(x)      (ascent in the weights)
    min_min:  dxi_bar/dt = -lbar(x)      (descent in the weights)

with lbar = l[:-1] - l[-1].  Along either flow the objective F = q^T l(x)
satisfies

    dF/dt = (+/-) Var_q(l) - ||J_l^T q||^2,

and the Shannon entropy of q changes at rate -(+/-) xi^T Cov(q) l with
xi = (xi_bar, 0).  The weight equation is the gradient flow of F with respect
to the degenerate (pseudo-Riemannian) metric Cov(q) on logit space: any field
b with Cov(q) b = (+/-) Cov(q) l generates the same probability path, and the
pinned-chart field is one such representative.

Integration is classical fixed-step RK4.  A trajectory is declared diverged
when the state leaves float range or the logits exceed a cap (exp overflow
territory); min_min runs from generic starts are expected to diverge toward
a vertex of the simplex.
"""

import numpy as np

from .errors import ConfigError, DimensionMismatchError, InvalidDomainError
from .objectives import ObjectiveFamily
from .simplex_geometry import (
    SimplexPoint,
    as_logits,
    covariance,
    logits_from_point,
    sigma_pinned,
)

Array = np.ndarray

KIND_MIN_MAX = "min_max"
KIND_MIN_MIN = "min_min"
_KINDS = (KIND_MIN_MAX, KIND_MIN_MIN)

STATUS_COMPLETED = "completed"
STATUS_DIVERGED = "diverged"

_COV_EIG_FLOOR = 1e-12


def _sign(kind: str) -> float:
    if kind not in _KINDS:
        raise ConfigError(f"unknown flow kind {kind!r}; expected one of {_KINDS}")
    return 1.0 if kind == KIND_MIN_MAX else -1.0


class FlowConfig:
    """Fixed-step integration parameters."""

    __slots__ = ("t_end", "dt", "record_every", "xi_cap")

    def __init__(self, t_end=50.0, dt=0.01, record_every=1, xi_cap=700.0):
        if not (t_end > 0 and np.isfinite(t_end)):
            raise ConfigError("t_end must be positive and finite")
        if not (0 < dt <= t_end):
            raise ConfigError("dt must lie in (0, t_end]")
        if record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if xi_cap <= 0:
            raise ConfigError("xi_cap must be positive")
        self.t_end = float(t_end)
        self.dt = float(dt)
        self.record_every = int(record_every)
        self.xi_cap = float(xi_cap)


def flow_vector_field(fam: ObjectiveFamily, x: Array, xi_bar: Array, kind: str):
    """Right-hand side (dx/dt, dxi_bar/dt) of the chosen flow."""
    sgn = _sign(kind)
    x = fam.check_point(x)
    xi_bar = as_logits(xi_bar)
    if xi_bar.size != fam.S - 1:
        raise DimensionMismatchError(
            f"xi_bar has {xi_bar.size} entries, expected {fam.S - 1}"
        )
    sigma = sigma_pinned(xi_bar)
    vals = fam.values(x)
    dx = -(fam.jacobian(x).T @ sigma)
    dxi = sgn * (vals[:-1] - vals[-1])
    return dx, dxi


def df_dt_analytic(fam: ObjectiveFamily, x: Array, xi_bar: Array, kind: str) -> float:
    """Exact rate of F = q^T l along the flow: (+/-) Var_q(l) - ||J^T q||^2."""
    sgn = _sign(kind)
    xi_bar = as_logits(xi_bar)
    sigma = sigma_pinned(xi_bar)
    vals = fam.values(x)
    mean = float(sigma @ vals)
    var = float(sigma @ (vals - mean) ** 2)
    grad_x = fam.jacobian(x).T @ sigma
    return sgn * var - float(grad_x @ grad_x)


def entropy(q: SimplexPoint) -> float:
    """Shannon entropy -sum q log q."""
    return -float(q.probs @ q.log_weights)


def _entropy_from_logits(xi_bar: Array) -> float:
    # Tolerates near-vertex states (probabilities underflowing to zero),
    # which SimplexPoint deliberately rejects.
    log_sigma = np.concatenate([xi_bar, [0.0]])
    log_sigma -= np.logaddexp.reduce(log_sigma)
    sigma = np.exp(log_sigma)
    return -float(np.sum(np.where(sigma > 0.0, sigma * log_sigma, 0.0)))


def entropy_rate_analytic(fam: ObjectiveFamily, x: Array, xi_bar: Array, kind: str) -> float:
    """Exact entropy rate -(+/-) xi^T Cov(q) l with xi = (xi_bar, 0)."""
    sgn = _sign(kind)
    xi_bar = as_logits(xi_bar)
    xi = np.concatenate([xi_bar, [0.0]])
    p = sigma_pinned(xi_bar)
    vals = fam.values(x)
    cov_l = p * vals - p * float(p @ vals)  # Cov(q) l without forming Cov
    return -sgn * float(xi @ cov_l)


class FlowTrace:
    """Recorded trajectory of one flow run."""

    __slots__ = (
        "kind", "status", "t", "x", "xi_bar", "q",
        "objective", "objective_rate", "entropy", "entropy_rate",
    )

    def __init__(self, kind, status, t, x, xi_bar, q,
                 objective, objective_rate, entropy, entropy_rate):
        self.kind = kind
        self.status = status
        self.t = t
        self.x = x
        self.xi_bar = xi_bar
        self.q = q
        self.objective = objective
        self.objective_rate = objective_rate
        self.entropy = entropy
        self.entropy_rate = entropy_rate

    @property
    def final_x(self) -> Array:
        return self.x[-1]

    @property
    def final_xi_bar(self) -> Array:
        return self.xi_bar[-1]

    def __repr__(self):
        return (
            f"FlowTrace(kind={self.kind!r}, status={self.status!r}, "
            f"n_records={self.t.size}, t_final={self.t[-1]:.4g})"
        )


def _rk4_step(rhs, x, xi, dt):
    k1x, k1s = rhs(x, xi)
    k2x, k2s = rhs(x + 0.5 * dt * k1x, xi + 0.5 * dt * k1s)
    k3x, k3s = rhs(x + 0.5 * dt * k2x, xi + 0.5 * dt * k2s)
    k4x, k4s = rhs(x + dt * k3x, xi + dt * k3s)
    new_x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    new_xi = xi + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    return new_x, new_xi


def integrate_flow(
    fam: ObjectiveFamily,
    x0: Array,
    q0: SimplexPoint,
    kind: str,
    cfg: FlowConfig = None,
) -> FlowTrace:
    """Integrate the flow from (x0, q0) with fixed-step RK4.

    Records the state at t = 0, every `record_every`-th step, and the last
    valid state.  Divergence is declared when a step produces non-finite
    entries (that state is discarded), when the losses or rates at a
    recorded state leave float range (those rows are dropped), or when
    max |xi_bar| exceeds `xi_cap` (that state is kept; beyond the cap
    exp() would overflow anyway).
    """
    cfg = cfg or FlowConfig()
    x = fam.check_point(x0).copy()
    xi = logits_from_point(q0).copy()
    if xi.size != fam.S - 1:
        raise DimensionMismatchError(
            f"q0 has {q0.size} states, expected {fam.S}"
        )
    if np.abs(xi).max() > cfg.xi_cap:
        raise InvalidDomainError("initial weights are already past the logit cap")
    sign = _sign(kind)

    def rhs(xv, sv):
        sigma = sigma_pinned(sv)
        vals = fam.values(xv)
        return -(fam.jacobian(xv).T @ sigma), sign * (vals[:-1] - vals[-1])

    n_steps = int(round(cfg.t_end / cfg.dt))
    times = [0.0]
    xs = [x.copy()]
    xis = [xi.copy()]
    status = STATUS_COMPLETED

    for k in range(1, n_steps + 1):
        # A state can leave float range inside a single step (finite-time
        # blow-up), in which case the stage evaluations themselves trip the
        # domain validators; both outcomes mean divergence.
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                new_x, new_xi = _rk4_step(rhs, x, xi, cfg.dt)
        except InvalidDomainError:
            status = STATUS_DIVERGED
            break
        if not (np.all(np.isfinite(new_x)) and np.all(np.isfinite(new_xi))):
            status = STATUS_DIVERGED
            break
        x, xi = new_x, new_xi
        t = k * cfg.dt
        capped = np.abs(xi).max() > cfg.xi_cap
        if k % cfg.record_every == 0 or k == n_steps or capped:
            times.append(t)
            xs.append(x.copy())
            xis.append(xi.copy())
        if capped:
            status = STATUS_DIVERGED
            break

    if status == STATUS_DIVERGED and times[-1] < (k - 1) * cfg.dt:
        # the failed step discarded its state; keep the last accepted one
        times.append((k - 1) * cfg.dt)
        xs.append(x.copy())
        xis.append(xi.copy())

    t_arr = np.array(times)
    x_arr = np.array(xs)
    xi_arr = np.array(xis)
    n = t_arr.size
    q_arr = np.empty((n, fam.S))
    obj = np.empty(n)
    obj_rate = np.empty(n)
    ent = np.empty(n)
    ent_rate = np.empty(n)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            sigma = sigma_pinned(xi_arr[i])
            q_arr[i] = sigma
            vals = fam.values(x_arr[i])
            obj[i] = float(sigma @ vals)
            obj_rate[i] = df_dt_analytic(fam, x_arr[i], xi_arr[i], kind)
            ent[i] = _entropy_from_logits(xi_arr[i])
            ent_rate[i] = entropy_rate_analytic(fam, x_arr[i], xi_arr[i], kind)

    # Near a finite-time blow-up the state itself can stay in float range
    # while the losses or rates at it overflow; drop such trailing rows so
    # every recorded row is finite.
    finite = np.isfinite(obj) & np.isfinite(obj_rate) & np.isfinite(ent_rate)
    if not finite.all():
        keep = max(1, int(np.argmin(finite)))
        status = STATUS_DIVERGED
        t_arr, x_arr, xi_arr, q_arr = (
            t_arr[:keep],
            x_arr[:keep],
            xi_arr[:keep],
            q_arr[:keep],
        )
        obj, obj_rate, ent, ent_rate = (
            obj[:keep],
            obj_rate[:keep],
            ent[:keep],
            ent_rate[:keep],
        )

    return FlowTrace(
        kind=kind,
        status=status,
        t=t_arr,
        x=x_arr,
        xi_bar=xi_arr,
        q=q_arr,
        objective=obj,
        objective_rate=obj_rate,
        entropy=ent,
        entropy_rate=ent_rate,
    )


GAUGE_ZERO = "zero"
GAUGE_PIN_LAST = "pin_last"


def integrate_flow_full(
    fam: ObjectiveFamily,
    x0: Array,
    xi0: Array,
    kind: str,
    cfg: FlowConfig = None,
    gauge: str = GAUGE_ZERO,
):
    """Integrate the flow in unreduced logit coordinates xi in R^S.

    The weight equation dxi/dt = (+/-)(l + gamma * 1) is defined only up to
    a multiple of the ones vector; `gauge` picks the representative:
    "zero" uses gamma = 0, "pin_last" uses gamma = -l_S (freezing xi_S).
    Probability trajectories agree across gauges, which the checks module
    verifies.  Returns (t, xi, q) arrays recorded at every step.
    """
    cfg = cfg or FlowConfig()
    sgn = _sign(kind)
    if gauge not in (GAUGE_ZERO, GAUGE_PIN_LAST):
        raise ConfigError(f"unknown gauge {gauge!r}")
    x = fam.check_point(x0).copy()
    xi = np.asarray(xi0, dtype=float).copy()
    if xi.shape != (fam.S,):
        raise DimensionMismatchError(f"xi0 must have shape ({fam.S},)")

    def rhs(xv, xiv):
        probs = np.exp(xiv - np.logaddexp.reduce(xiv))
        vals = fam.values(xv)
        gamma = -vals[-1] if gauge == GAUGE_PIN_LAST else 0.0
        return -(fam.jacobian(xv).T @ probs), sgn * (vals + gamma)

    n_steps = int(round(cfg.t_end / cfg.dt))
    times = np.empty(n_steps + 1)
    xi_arr = np.empty((n_steps + 1, fam.S))
    q_arr = np.empty((n_steps + 1, fam.S))
    times[0] = 0.0
    xi_arr[0] = xi
    q_arr[0] = np.exp(xi - np.logaddexp.reduce(xi))
    for k in range(1, n_steps + 1):
        x, xi = _rk4_step(rhs, x, xi, cfg.dt)
        times[k] = k * cfg.dt
        xi_arr[k] = xi
        q_arr[k] = np.exp(xi - np.logaddexp.reduce(xi))
    return times, xi_arr, q_arr


def pseudo_riemannian_residual(fam: ObjectiveFamily, x: Array, q: SimplexPoint, kind: str) -> float:
    """Consistency gap between the logit field and its metric rewriting.

    The pin-last field a = (+/-)(l - l_S 1) should solve Cov(q) b = (+/-) Cov(q) l.
    Reconstructing b = (+/-) Cov^+ (Cov l) + [gamma (+/-) mean(l)] 1 with
    gamma = -(+/-) l_S via an explicit eigendecomposition pseudo-inverse
    (eigenvalues below 1e-12 zeroed) and returning ||Cov (a - b)||_inf, which
    vanishes exactly when the rewriting holds.
    """
    sgn = _sign(kind)
    x = fam.check_point(x)
    vals = fam.values(x)
    cov = covariance(q)

    field_a = sgn * (vals - vals[-1])

    eigvals, eigvecs = np.linalg.eigh(cov)
    inv = np.where(eigvals > _COV_EIG_FLOOR, 1.0 / np.where(eigvals > 0, eigvals, 1.0), 0.0)
    pinv = (eigvecs * inv) @ eigvecs.T
    gamma = -sgn * vals[-1]
    field_b = sgn * (pinv @ (cov @ vals)) + (gamma + sgn * vals.mean()) * np.ones_like(vals)

    return float(np.abs(cov @ (field_a - field_b)).max())
