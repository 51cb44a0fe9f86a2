"""Proximal point iteration on the hybrid space.

Repeats the entropy-regularized proximal step from a starting pair and stops
when the hybrid Bregman divergence between consecutive iterates falls below
`stop_tol` *and* the iterate certifies a fixed point (weighted-gradient norm
and loss spread below `fp_tol`).  The certification matters: on families with
no fixed point the consecutive-step divergence can still decay to zero while
the weights drift to a simplex vertex, and such runs must terminate as
`max_iter` with the drift flagged, not as converged.

Terminal statuses: "converged", "max_iter", "inner_failure" (the inner solver
gave up; the trace up to the last good iterate is preserved).
"""

import math

import numpy as np

from .objectives import ObjectiveFamily
from .prox import ProxConfig, prox
from .errors import ProxNonConvergenceError
from .simplex_geometry import HybridPoint, SimplexPoint, hybrid_bregman

Array = np.ndarray

STATUS_CONVERGED = "converged"
STATUS_MAX_ITER = "max_iter"
STATUS_INNER_FAILURE = "inner_failure"


class PpaConfig:
    """Outer-loop settings wrapped around a ProxConfig."""

    def __init__(
        self,
        prox_cfg: ProxConfig = None,
        stop_tol: float = 1e-12,
        max_outer_iter: int = 5000,
        fp_tol: float = 1e-5,
        record_every: int = 1,
    ):
        if stop_tol <= 0 or fp_tol <= 0:
            raise ValueError("tolerances must be positive")
        if max_outer_iter < 1 or record_every < 1:
            raise ValueError("iteration counts must be at least 1")
        self.prox_cfg = prox_cfg if prox_cfg is not None else ProxConfig()
        self.stop_tol = float(stop_tol)
        self.max_outer_iter = int(max_outer_iter)
        self.fp_tol = float(fp_tol)
        self.record_every = int(record_every)


class PpaRecord:
    """One recorded iterate: state, objective, and fixed-point certificates."""

    __slots__ = (
        "k",
        "x",
        "q",
        "objective",
        "barygrad_norm",
        "loss_spread",
        "prox_displacement",
        "step_bregman",
    )

    def __init__(self, k, x, q, objective, barygrad_norm, loss_spread,
                 prox_displacement, step_bregman):
        self.k = k
        self.x = x
        self.q = q
        self.objective = objective
        self.barygrad_norm = barygrad_norm
        self.loss_spread = loss_spread
        self.prox_displacement = prox_displacement
        self.step_bregman = step_bregman

    @property
    def point(self) -> HybridPoint:
        return HybridPoint(self.x, self.q)


class PpaTrace:
    """Recorded iterates plus the terminal status and drift diagnostic."""

    def __init__(self, records, status, iterations, no_fixed_point_suspected):
        self.records = records
        self.status = status
        self.iterations = iterations
        self.no_fixed_point_suspected = no_fixed_point_suspected

    @property
    def final(self) -> HybridPoint:
        return self.records[-1].point

    def __repr__(self):
        return (
            f"PpaTrace(status={self.status!r}, iterations={self.iterations}, "
            f"records={len(self.records)}, "
            f"no_fixed_point_suspected={self.no_fixed_point_suspected})"
        )


def _certificates(fam, x, q):
    vals = fam.values(x)
    barygrad_norm = float(np.linalg.norm(fam.jacobian(x).T @ q.probs))
    spread = float(vals.max() - vals.min())
    return barygrad_norm, spread


def run_ppa(fam: ObjectiveFamily, x0, q0: SimplexPoint, cfg: PpaConfig = None) -> PpaTrace:
    """Iterate the proximal map from (x0, q0) until convergence or a cap.

    Records state k = 0 and every `record_every`-th iterate plus the final
    one.  `prox_displacement` at a recorded state is the hybrid Bregman
    divergence to its own proximal image (for interior states this equals the
    next step's divergence; the final record costs one extra prox call).
    """
    if cfg is None:
        cfg = PpaConfig()
    x0 = fam.check_point(x0)
    state = HybridPoint(x0, q0)

    # Per-iterate history (cheap: scalars plus small vectors).
    points = [state]
    certs = [_certificates(fam, state.x, state.q)]
    steps = [math.nan]  # steps[k] = D_f(state_k, state_{k-1})

    status = STATUS_MAX_ITER
    iterations = 0
    inner_failed = False
    for k in range(1, cfg.max_outer_iter + 1):
        try:
            result = prox(fam, state.x, state.q, cfg.prox_cfg)
        except ProxNonConvergenceError:
            inner_failed = True
            status = STATUS_INNER_FAILURE
            iterations = k
            break
        new_state = result.point
        step = hybrid_bregman(new_state, state)
        points.append(new_state)
        certs.append(_certificates(fam, new_state.x, new_state.q))
        steps.append(step)
        state = new_state
        iterations = k
        barygrad_norm, spread = certs[-1]
        if step <= cfg.stop_tol and barygrad_norm <= cfg.fp_tol and spread <= cfg.fp_tol:
            status = STATUS_CONVERGED
            break

    last = len(points) - 1
    indices = sorted(set(range(0, last + 1, cfg.record_every)) | {last})

    # Displacement of the final state needs one extra prox evaluation unless
    # the inner solver already failed there.
    displacements = {}
    for idx in indices:
        if idx < last:
            displacements[idx] = steps[idx + 1]
        elif inner_failed:
            displacements[idx] = math.nan
        else:
            try:
                extra = prox(fam, points[idx].x, points[idx].q, cfg.prox_cfg)
                displacements[idx] = hybrid_bregman(extra.point, points[idx])
            except ProxNonConvergenceError:
                displacements[idx] = math.nan

    records = [
        PpaRecord(
            k=idx,
            x=points[idx].x,
            q=points[idx].q,
            objective=float(points[idx].q.probs @ fam.values(points[idx].x)),
            barygrad_norm=certs[idx][0],
            loss_spread=certs[idx][1],
            prox_displacement=displacements[idx],
            step_bregman=steps[idx],
        )
        for idx in indices
    ]

    no_fixed_point = False
    if status != STATUS_CONVERGED and len(records) >= 2:
        max_probs = np.array([r.q.probs.max() for r in records])
        drifting = bool(np.all(np.diff(max_probs) >= -1e-9))
        concentrated = max_probs[-1] >= 0.999
        stuck_spread = records[-1].loss_spread > cfg.fp_tol
        no_fixed_point = drifting and concentrated and stuck_spread

    return PpaTrace(records, status, iterations, no_fixed_point)


def fejer_diagnostic(trace: PpaTrace, anchor: HybridPoint) -> Array:
    """D_f(anchor, state_k) for every recorded iterate.

    Nonincreasing along the iteration whenever the anchor is a fixed point of
    the proximal map; for other anchors the values are informational only.
    """
    return np.array([hybrid_bregman(anchor, rec.point) for rec in trace.records])
