"""Acceptance gate: one test per release criterion.

Every test prints a `[PASS]`/`[FAIL]` line with the measured quantity and
the stated tolerance before asserting (run with `-s` to see all lines).
Criteria 9b and 10b assert properties that the rest of the suite shows to
be unattainable for this geometry — the descent-kind flow is not attracted
to the interior equilibrium, and contracting the connection symbols with
the probabilities does not vanish under the metric connection.  They are
kept exactly as stated and fail; see the README.
"""

import time

import numpy as np

from baryopt.flows import (
    KIND_MIN_MAX,
    KIND_MIN_MIN,
    FlowConfig,
    df_dt_analytic,
    entropy,
    entropy_rate_analytic,
    flow_vector_field,
    integrate_flow,
    pseudo_riemannian_residual,
)
from baryopt.landscape import (
    CLASS_SADDLE,
    LandscapePoint,
    euclidean_hessian,
    f_bar,
    fix_equals_critical_check,
    grad_f_bar,
    riemannian_hessian,
)
from baryopt.objectives import (
    ConstantFamily,
    outer_product,
    outer_sum,
    random_quadratic,
    rank_one_factor_check,
    symmetric_quadratic,
)
from baryopt.ppa import PpaConfig, fejer_diagnostic, run_ppa
from baryopt.prox import (
    ProxConfig,
    bfne_gap,
    prox,
    resolvent_residual,
)
from baryopt.simplex_geometry import (
    HybridPoint,
    SimplexPoint,
    christoffel,
    fisher_information,
    point_from_logits,
    sigma_pinned,
)


def _criterion(name, ok, measured, tol, detail=""):
    tag = "PASS" if ok else "FAIL"
    line = f"[{tag}] {name}: measured={measured:.3e} tol={tol:.3e}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def _rel_dev(analytic, reference):
    analytic = np.asarray(analytic, dtype=float)
    reference = np.asarray(reference, dtype=float)
    return float(
        (np.abs(analytic - reference) / (1.0 + np.abs(reference))).max()
    )


def _instances(rng):
    return [
        symmetric_quadratic(),
        random_quadratic(rng, m=2, S=3),
        random_quadratic(rng, m=3, S=4),
    ]


class TestDerivativeOracles:
    def test_criterion_1_closed_forms_match_finite_differences(self):
        """Gradient, blockwise Hessian, flow rates, and first-kind connection
        symbols against central differences; >= 50 points per oracle."""
        t0 = time.perf_counter()
        rng = np.random.default_rng(100)
        h = 1e-5
        worst = 0.0
        n_points = 0

        for fam in _instances(rng):
            m, n = fam.m, fam.S - 1
            for _ in range(17):
                x = rng.normal(size=m)
                xb = rng.normal(size=n)
                point = LandscapePoint(x, xb)
                n_points += 1

                # gradient of the weighted objective
                grad = grad_f_bar(fam, point)
                fd = np.empty(m + n)
                for i in range(m):
                    e = np.zeros(m)
                    e[i] = h
                    fd[i] = (
                        f_bar(fam, LandscapePoint(x + e, xb))
                        - f_bar(fam, LandscapePoint(x - e, xb))
                    ) / (2 * h)
                for j in range(n):
                    e = np.zeros(n)
                    e[j] = h
                    fd[m + j] = (
                        f_bar(fam, LandscapePoint(x, xb + e))
                        - f_bar(fam, LandscapePoint(x, xb - e))
                    ) / (2 * h)
                worst = max(worst, _rel_dev(grad, fd))

                # blockwise Hessian
                hess = euclidean_hessian(fam, point)
                fd_h = np.empty((m + n, m + n))
                for i in range(m):
                    e = np.zeros(m)
                    e[i] = h
                    fd_h[:, i] = (
                        grad_f_bar(fam, LandscapePoint(x + e, xb))
                        - grad_f_bar(fam, LandscapePoint(x - e, xb))
                    ) / (2 * h)
                for j in range(n):
                    e = np.zeros(n)
                    e[j] = h
                    fd_h[:, m + j] = (
                        grad_f_bar(fam, LandscapePoint(x, xb + e))
                        - grad_f_bar(fam, LandscapePoint(x, xb - e))
                    ) / (2 * h)
                worst = max(worst, _rel_dev(hess, fd_h))

                # flow rates as directional derivatives along the field
                for kind in (KIND_MIN_MAX, KIND_MIN_MIN):
                    dx, dxi = flow_vector_field(fam, x, xb, kind)
                    fd_f = (
                        f_bar(fam, LandscapePoint(x + h * dx, xb + h * dxi))
                        - f_bar(fam, LandscapePoint(x - h * dx, xb - h * dxi))
                    ) / (2 * h)
                    worst = max(
                        worst, _rel_dev(df_dt_analytic(fam, x, xb, kind), fd_f)
                    )
                    fd_e = (
                        entropy(point_from_logits(xb + h * dxi))
                        - entropy(point_from_logits(xb - h * dxi))
                    ) / (2 * h)
                    worst = max(
                        worst,
                        _rel_dev(entropy_rate_analytic(fam, x, xb, kind), fd_e),
                    )

        # first-kind connection symbols = half the metric derivative
        for size in (2, 3, 5):
            for _ in range(17):
                xb = rng.normal(size=size - 1)
                mat, _ = fisher_information(xb)
                lowered = np.einsum("ijl,lk->ijk", christoffel(xb), mat)
                for k in range(size - 1):
                    e = np.zeros(size - 1)
                    e[k] = h
                    d_mat = (
                        fisher_information(xb + e)[0]
                        - fisher_information(xb - e)[0]
                    ) / (2 * h)
                    worst = max(worst, _rel_dev(lowered[:, :, k], 0.5 * d_mat))
                n_points += 1

        elapsed = time.perf_counter() - t0
        _criterion(
            "criterion 1 (derivative oracles)",
            worst <= 1e-5 and elapsed < 10.0,
            worst,
            1e-5,
            f"{n_points} points, {elapsed:.1f}s",
        )


class TestProxOperator:
    def test_criterion_2_firm_nonexpansiveness(self):
        """Bregman firm-nonexpansiveness slack >= -1e-7 on >= 200 pairs."""
        t0 = time.perf_counter()
        rng = np.random.default_rng(200)
        fams = [
            random_quadratic(rng, m=1, S=2),
            random_quadratic(rng, m=2, S=3),
            random_quadratic(rng, m=3, S=4),
            random_quadratic(rng, m=2, S=2),
        ]
        worst = np.inf
        pairs = 0
        for fam in fams:
            for lam in (0.1, 0.5, 2.0):
                cfg = ProxConfig(lam=lam, inner_tol=1e-12)
                for _ in range(17):
                    u = HybridPoint(
                        rng.normal(size=fam.m), SimplexPoint(rng.normal(size=fam.S))
                    )
                    v = HybridPoint(
                        rng.normal(size=fam.m), SimplexPoint(rng.normal(size=fam.S))
                    )
                    worst = min(worst, bfne_gap(fam, u, v, cfg))
                    pairs += 1
        elapsed = time.perf_counter() - t0
        _criterion(
            "criterion 2 (firm nonexpansiveness)",
            worst >= -1e-7 and pairs >= 200 and elapsed < 30.0,
            worst,
            -1e-7,
            f"{pairs} pairs, {elapsed:.1f}s",
        )

    def test_criterion_3_stationarity_and_resolvent_residuals(self):
        """Residuals <= 10 * inner_tol on every call; the x-independent
        closed-form case is exact to 1e-12."""
        rng = np.random.default_rng(300)
        worst = 0.0
        calls = 0
        for fam in _instances(rng):
            for lam in (0.1, 0.5, 2.0):
                cfg = ProxConfig(lam=lam)
                for _ in range(5):
                    p = HybridPoint(
                        rng.normal(size=fam.m), SimplexPoint(rng.normal(size=fam.S))
                    )
                    res = prox(fam, p.x, p.q, cfg)
                    worst = max(worst, res.residual[0], res.residual[1])
                    worst = max(worst, resolvent_residual(fam, p, res, lam))
                    calls += 1
        bound = 10.0 * ProxConfig().inner_tol

        cfam = ConstantFamily(np.array([0.0, 0.4, 1.0]), m=2)
        cp = HybridPoint(np.array([1.5, -0.5]), SimplexPoint.from_probs([0.2, 0.3, 0.5]))
        cres = prox(cfam, cp.x, cp.q, ProxConfig(lam=2.0))
        exact = max(
            float(np.abs(cres.x - cp.x).max()),
            resolvent_residual(cfam, cp, cres, 2.0),
        )
        _criterion(
            "criterion 3 (stationarity/resolvent residuals)",
            worst <= bound and exact <= 1e-12,
            max(worst, exact),
            bound,
            f"{calls} random calls; closed-form case {exact:.1e} <= 1e-12",
        )

    def test_criterion_6_tensorized_closure(self):
        """Prox of an outer-sum family keeps outer-product weights rank-one."""
        rng = np.random.default_rng(600)
        n_ok = 0
        n_total = 10
        for i in range(n_total):
            m = 1 + i % 2
            s1, s2 = 2 + i % 2, 2 + (i // 2) % 2
            f1 = random_quadratic(rng, m=m, S=s1)
            f2 = random_quadratic(rng, m=m, S=s2)
            fam = outer_sum(f1, f2)
            q = outer_product(
                SimplexPoint(rng.normal(size=s1)), SimplexPoint(rng.normal(size=s2))
            )
            res = prox(fam, rng.normal(size=m), q, ProxConfig(lam=0.5))
            ok, _ = rank_one_factor_check(res.q, s1, s2, tol=1e-6)
            n_ok += ok
        _criterion(
            "criterion 6 (tensorized closure)",
            n_ok == n_total,
            float(n_total - n_ok),
            0.0,
            f"{n_ok}/{n_total} instances stayed rank-one at tol 1e-06",
        )


class TestFixedPointsAndPpa:
    def test_criterion_4_fixed_point_iff_critical(self):
        """Membership tests agree on >= 50 random points plus the known
        fixed point, at tolerance 1e-6."""
        rng = np.random.default_rng(400)
        n_agree = 0
        n_total = 0
        for fam in _instances(rng):
            for _ in range(17):
                point = LandscapePoint(
                    rng.normal(size=fam.m), rng.normal(size=fam.S - 1)
                )
                n_agree += fix_equals_critical_check(fam, point, tol=1e-6)
                n_total += 1
        sym = symmetric_quadratic()
        n_agree += fix_equals_critical_check(
            sym, LandscapePoint(np.zeros(1), np.zeros(1)), tol=1e-6
        )
        n_total += 1
        _criterion(
            "criterion 4 (fixed point iff critical)",
            n_agree == n_total,
            float(n_total - n_agree),
            0.0,
            f"{n_agree}/{n_total} points agree",
        )

    def test_criterion_5_ppa_convergence_and_diagnostics(self):
        """From (2, (0.3, 0.7)) the iteration lands within 1e-6 of the
        equilibrium; the divergence-to-anchor sequence never increases; the
        no-fixed-point family terminates cleanly with the drift flagged."""
        fam = symmetric_quadratic()
        tr = run_ppa(
            fam,
            np.array([2.0]),
            SimplexPoint.from_probs([0.3, 0.7]),
            PpaConfig(stop_tol=1e-14),
        )
        dist = max(
            float(np.abs(tr.final.x).max()),
            float(np.abs(tr.final.q.probs - 0.5).max()),
        )
        anchor = HybridPoint(np.zeros(1), SimplexPoint.uniform(2))
        fej_slack = float(np.diff(fejer_diagnostic(tr, anchor)).max())

        drift = run_ppa(
            ConstantFamily(np.array([0.0, 0.4, 1.0]), m=1),
            np.zeros(1),
            SimplexPoint.uniform(3),
            PpaConfig(max_outer_iter=300),
        )
        ok = (
            tr.status == "converged"
            and dist <= 1e-6
            and fej_slack <= 1e-10
            and drift.status == "max_iter"
            and drift.no_fixed_point_suspected
        )
        _criterion(
            "criterion 5 (outer iteration)",
            ok,
            dist,
            1e-6,
            f"k={tr.iterations}, fejer slack={fej_slack:.1e}, "
            f"drift run: {drift.status}/flagged={drift.no_fixed_point_suspected}",
        )

    def test_criterion_7_critical_values_agree(self):
        """Independent runs on one instance share the objective value 1/2."""
        fam = symmetric_quadratic()
        finals = []
        for x0, q1 in [(2.0, 0.3), (-1.3, 0.8)]:
            tr = run_ppa(
                fam,
                np.array([x0]),
                SimplexPoint.from_probs([q1, 1 - q1]),
                PpaConfig(stop_tol=1e-14),
            )
            finals.append(float(tr.final.q.probs @ fam.values(tr.final.x)))
        spread = abs(finals[0] - finals[1])
        dev_half = max(abs(v - 0.5) for v in finals)
        _criterion(
            "criterion 7 (critical values)",
            spread <= 1e-6 and dev_half <= 1e-6,
            max(spread, dev_half),
            1e-6,
            f"values {finals[0]:.9f}, {finals[1]:.9f}",
        )


class TestLandscapeClassification:
    def test_criterion_8_saddle_report(self):
        """Frozen second-order report at the symmetric equilibrium."""
        report = riemannian_hessian(
            symmetric_quadratic(), LandscapePoint(np.zeros(1), np.zeros(1))
        )
        expected = np.array([[1.0, -0.5], [-0.5, 0.0]])
        dev = max(
            float(np.abs(report.riemannian - expected).max()),
            float(np.abs(report.schur_b2 - (-0.25)).max()),
        )
        ok = (
            dev <= 1e-8
            and report.inertia == (1, 1, 0)
            and report.classification == CLASS_SADDLE
        )
        _criterion(
            "criterion 8 (saddle classification)",
            ok,
            dev,
            1e-8,
            f"inertia={report.inertia}, class={report.classification!r}",
        )


class TestFlows:
    def test_criterion_9a_descent_flow_objective_monotone(self):
        x0, q0 = np.array([0.3]), SimplexPoint.from_probs([0.3, 0.7])
        tr = integrate_flow(symmetric_quadratic(), x0, q0, KIND_MIN_MIN)
        slack = float(np.diff(tr.objective).max())
        _criterion(
            "criterion 9a (descent flow objective monotone)",
            slack <= 1e-8,
            slack,
            1e-8,
            f"status={tr.status}",
        )

    def test_criterion_9b_descent_flow_reaches_the_equilibrium(self):
        """Stated property: the descent-kind flow from (0.3, (0.3, 0.7))
        ends within 1e-4 of (0, uniform) at t = 50.  The linearization at
        the equilibrium has a negative-determinant Jacobian for this kind
        (a saddle of the dynamics), so the trajectory instead exits to a
        vertex; the ascent kind is the one attracted to the equilibrium
        (criterion 9a of the flows unit suite).  Kept as stated; fails."""
        x0, q0 = np.array([0.3]), SimplexPoint.from_probs([0.3, 0.7])
        tr = integrate_flow(symmetric_quadratic(), x0, q0, KIND_MIN_MIN)
        dist = max(
            float(np.abs(tr.final_x).max()), float(np.abs(tr.final_xi_bar).max())
        )
        _criterion(
            "criterion 9b (descent flow equilibrium)",
            dist <= 1e-4,
            dist,
            1e-4,
            f"final x={tr.final_x[0]:+.3f}, xi_bar={tr.final_xi_bar[0]:+.1f}",
        )

    def test_criterion_9c_ascent_rate_on_constant_losses(self):
        """For losses (0, 1) at uniform weights the ascent objective rate is
        the two-point variance 1/4 and the trace increases."""
        fam = ConstantFamily(np.array([0.0, 1.0]), m=1)
        rate = df_dt_analytic(fam, np.zeros(1), np.zeros(1), KIND_MIN_MAX)
        tr = integrate_flow(
            fam,
            np.zeros(1),
            SimplexPoint.uniform(2),
            KIND_MIN_MAX,
            FlowConfig(t_end=1.0, dt=0.01),
        )
        increasing = bool(np.all(np.diff(tr.objective) > 0))
        _criterion(
            "criterion 9c (rate on constant losses)",
            abs(rate - 0.25) <= 1e-12 and increasing,
            abs(rate - 0.25),
            1e-12,
            f"rate={rate:.12f}, trace increasing={increasing}",
        )

    def test_criterion_9d_analytic_rates_match_the_trace(self):
        """Analytic objective/entropy rates vs central differences of the
        recorded trace, within max(1e-5, 1e-3 |rate|)."""
        x0, q0 = np.array([0.3]), SimplexPoint.from_probs([0.3, 0.7])
        worst = 0.0
        for kind in (KIND_MIN_MAX, KIND_MIN_MIN):
            tr = integrate_flow(
                symmetric_quadratic(), x0, q0, kind, FlowConfig(t_end=2.0, dt=0.001)
            )
            dt = tr.t[1] - tr.t[0]
            for series, rates in (
                (tr.objective, tr.objective_rate),
                (tr.entropy, tr.entropy_rate),
            ):
                fd = (series[2:] - series[:-2]) / (2 * dt)
                dev = np.abs(fd - rates[1:-1])
                allowed = np.maximum(1e-5, 1e-3 * np.abs(rates[1:-1]))
                worst = max(worst, float((dev / allowed).max()))
        _criterion(
            "criterion 9d (rates match trace)",
            worst <= 1.0,
            worst,
            1.0,
            "worst deviation as a fraction of max(1e-5, 1e-3 |rate|)",
        )

    def test_criterion_9e_pseudo_riemannian_rewrite(self):
        rng = np.random.default_rng(900)
        fam = symmetric_quadratic()
        worst = 0.0
        for _ in range(25):
            q = SimplexPoint(rng.uniform(-2, 2, size=2))
            x = rng.normal(size=1)
            for kind in (KIND_MIN_MAX, KIND_MIN_MIN):
                worst = max(worst, pseudo_riemannian_residual(fam, x, q, kind))
        _criterion(
            "criterion 9e (pseudo-Riemannian rewrite)",
            worst <= 1e-8,
            worst,
            1e-8,
            "50 interior points",
        )


class TestGeometryLayer:
    def test_criterion_10a_information_matrix_inverse(self):
        rng = np.random.default_rng(1000)
        worst = 0.0
        for size in range(2, 9):
            for _ in range(10):
                mat, inv = fisher_information(rng.normal(size=size - 1))
                worst = max(
                    worst, float(np.abs(mat @ inv - np.eye(size - 1)).max())
                )
        _criterion(
            "criterion 10a (closed-form information inverse)",
            worst <= 1e-10,
            worst,
            1e-10,
            "sizes 2..8",
        )

    def test_criterion_10b_potential_correction_vanishes(self):
        """Stated property: contracting the connection symbols with the
        probability vector gives zero.  That holds for the flat connection
        whose symbols vanish in this chart, not for the metric connection
        implemented here (the contraction equals (Diag(sb) - 2 sb sb^T)/2,
        which is nonzero away from degenerate cases).  Kept as stated;
        fails."""
        rng = np.random.default_rng(1010)
        worst = 0.0
        for size in (2, 3, 5):
            for _ in range(10):
                xb = rng.normal(size=size - 1)
                sb = sigma_pinned(xb)[:-1]
                contraction = np.einsum("ijk,k->ij", christoffel(xb), sb)
                worst = max(worst, float(np.abs(contraction).max()))
        _criterion(
            "criterion 10b (potential correction)",
            worst <= 1e-10,
            worst,
            1e-10,
            "contraction of the symbols with the probabilities",
        )

    def test_criterion_10c_tensor_contraction_identity(self):
        """The covariance-derivative contraction equals twice the direct
        curvature block: (T x_2 lbar) I = 2 H, via two independent formulas."""
        rng = np.random.default_rng(1020)
        worst = 0.0
        for fam in _instances(rng):
            for _ in range(10):
                point = LandscapePoint(
                    rng.normal(size=fam.m), rng.normal(size=fam.S - 1)
                )
                report = riemannian_hessian(fam, point)
                m = fam.m
                worst = max(
                    worst,
                    float(
                        np.abs(
                            report.euclidean[m:, m:] - 2.0 * report.riemannian[m:, m:]
                        ).max()
                    ),
                )
        _criterion(
            "criterion 10c (tensor contraction identity)",
            worst <= 1e-10,
            worst,
            1e-10,
            "30 points across 3 instances",
        )
