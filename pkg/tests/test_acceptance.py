"""Acceptance suite: every quantitative claim at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line per
criterion.  Criterion 4 carries one documented expected failure (see the
strict xfail below): the certified first-order residual coefficient decays
like 1/p along the stationary graph, not at the 1/p^3 rate of the
mixed-bracket comparison variant from which that figure derives.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lattice_lab import (
    GeneratorSpec,
    Grid,
    JetPoint,
    LatticeParams,
    Scheme,
    SchemeConfig,
    adapted_coords,
    asymptotic_scan,
    classify_regime,
    closed_A,
    closed_a2,
    derive_params,
    evolve,
    extract_A,
    flow_map,
    gaussian_profile,
    init_state,
    l1_distance,
    moments,
    prolong_coeffs,
    stationary_profile,
    tail_exponent,
    tsallis_density,
    tsallis_profile,
    variation_integrals,
)
from lattice_lab.analysis import normalizable_variation
from lattice_lab.model import DerivedParams
from lattice_lab.symmetry import flow_blowup_parameter


def _report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


REF = LatticeParams(alpha=1.0, gamma0=0.1, gamma1=0.5, p_c=1.0)
ANOMALOUS = LatticeParams(alpha=1.0, gamma0=0.4, gamma1=0.1, p_c=1.0)  # q = 1.8


class TestCriterion1Stationarity:
    def test_stationary_start_and_relaxation(self):
        d = derive_params(REF)
        grid = Grid(50.0, 2000)
        cfg = SchemeConfig(dt=0.01)
        t0 = time.perf_counter()

        w0_state = init_state(grid, tsallis_profile(d))
        drift_run = evolve(w0_state, REF, cfg, t_end=100.0, observers=("mass", "l1_to_w0"))
        drift = l1_distance(drift_run.final, w0_state)

        gauss = init_state(grid, gaussian_profile(3.0))
        relax_run = evolve(gauss, REF, cfg, t_end=200.0, observers=("mass", "l1_to_w0"))
        l1 = relax_run.records[-1]["l1_to_w0"]

        runtime = time.perf_counter() - t0
        _report(
            "1 (stationarity)",
            drift < 1e-6 and l1 < 1e-3 and runtime < 30.0,
            f"w0-start L1 drift {drift:.2e} (< 1e-6), Gaussian-start L1 to w0 "
            f"{l1:.2e} (< 1e-3), runtime {runtime:.1f}s (< 30s)",
        )


class TestCriterion2SigmaSelection:
    def test_a2_large_p_limits(self):
        t0 = time.perf_counter()
        devs = {}
        for sigma in (-3.0, -1.0, 0.0, 1.0):
            a2 = closed_a2(1e6, REF, sigma)
            devs[sigma] = abs(a2 - (-REF.gamma0 * (2.0 + sigma)))
        a2_canonical = abs(closed_a2(1e6, REF, -2.0))
        runtime = time.perf_counter() - t0
        ok = max(devs.values()) < 1e-4 and a2_canonical < 1e-8 and runtime < 1.0
        _report(
            "2 (sigma selection)",
            ok,
            f"max |A2(1e6) + gamma0(2+sigma)| = {max(devs.values()):.2e} (< 1e-4), "
            f"|A2(1e6)| at sigma=-2 = {a2_canonical:.2e} (< 1e-8), runtime {runtime:.2f}s",
        )


class TestCriterion3ClosedFormCertification:
    def test_extraction_matches_closed_forms(self):
        rng = np.random.default_rng(42)
        worst_a2 = 0.0
        for _ in range(100):
            alpha = rng.uniform(0.3, 3.0)
            p_c = rng.uniform(0.5, 2.0)
            delta = rng.uniform(0.1, 1.8)
            params = LatticeParams(alpha, 0.5 * delta * alpha * p_c**2,
                                   rng.uniform(0.0, 1.0), p_c)
            d = derive_params(params)
            sigma = rng.uniform(-3.0, 1.0)
            gen = GeneratorSpec.canonical(d, sigma=sigma)
            p, w = rng.uniform(0.2, 8.0), rng.uniform(0.1, 2.0)
            got = extract_A(p, 0.0, w, params, gen).a2
            want = closed_a2(p, params, sigma)
            worst_a2 = max(worst_a2, abs(got - want) / max(abs(want), 1e-300))

        d = derive_params(REF)
        gen = GeneratorSpec.canonical(d)
        worst = dict.fromkeys(("a0", "a1", "a3"), 0.0)
        for _ in range(100):
            p = rng.uniform(0.1, 10.0) * rng.choice([-1.0, 1.0])
            w = rng.uniform(0.1, 2.0)
            ext = extract_A(p, 0.0, w, REF, gen)
            ref = closed_A(p, w, REF, -2.0)
            for name in worst:
                got, want = getattr(ext, name), getattr(ref, name)
                worst[name] = max(worst[name], abs(got - want) / max(abs(want), 1e-300))
        ok = worst_a2 < 1e-10 and worst["a1"] < 1e-8 and worst["a0"] < 1e-8
        _report(
            "3 (closed-form certification)",
            ok,
            f"rel dev: a2 {worst_a2:.1e} (< 1e-10), a1 {worst['a1']:.1e} (< 1e-8), "
            f"a0 {worst['a0']:.1e} (< 1e-8); erratum: the first-order closed form "
            "needs (p_c^2 + p^2)^2 in its gamma0 term, and the full residual also "
            f"carries a quadratic w_p^2 coefficient (certified here to {worst['a3']:.1e})",
        )


@pytest.fixture(scope="module")
def scan_report():
    d = derive_params(REF)
    gen = GeneratorSpec.canonical(d)
    return asymptotic_scan(REF, gen, stationary_profile(d)), d


class TestCriterion4AsymptoticVanishing:

    def test_a2_and_a0_decay_rates(self, scan_report):
        report, d = scan_report
        bound_a0 = -(2.0 * d.k + 2.0) * 0.9
        ok = report.slopes["a2"] <= -2.0 * 0.9 and report.slopes["a0"] <= bound_a0
        _report(
            "4 (asymptotic vanishing: A2, A0)",
            ok,
            f"slope A2 = {report.slopes['a2']:.3f} (<= -1.8), "
            f"slope A0 = {report.slopes['a0']:.3f} (<= {bound_a0:.1f})",
        )

    @pytest.mark.xfail(
        strict=True,
        reason=(
            "the certified first-order coefficient contains a term "
            "-4 gamma0 (1+delta) nu p w^delta that decays like 1/p along a "
            "k = 1/delta tail, so its log-log slope is -1, not <= -2.7; the "
            "-3 rate belongs to the mixed-bracket comparison variant, whose "
            "(p_c^2 + w^2)^2 factor suppresses that term (see criterion 3 and "
            "the decay-rate companion test below)"
        ),
    )
    def test_a1_decay_rate_as_stated(self, scan_report):
        report, _ = scan_report
        assert report.slopes["a1"] <= -3.0 * 0.9

    def test_a1_decay_rates_documented(self, scan_report):
        report, _ = scan_report
        true_slope = report.slopes["a1"]
        variant_slope = report.slopes["a1_mixed"]
        ok = (
            abs(true_slope - (-1.0)) < 0.1
            and variant_slope <= -3.0 * 0.9
            and report.abs_a1[-1] < 1e-4  # still vanishes asymptotically
        )
        _report(
            "4 (asymptotic vanishing: A1, documented rates)",
            ok,
            f"certified A1 slope = {true_slope:.3f} (1/p decay, still -> 0; the "
            f"stated -3 rate is an expected failure), mixed-bracket variant slope = "
            f"{variant_slope:.3f} (<= -2.7)",
        )


class TestCriterion5FlowInvariance:
    def test_stationary_graph_and_ode_oracle(self):
        d = derive_params(REF)
        gen = GeneratorSpec.canonical(d)
        rng = np.random.default_rng(5)
        worst_graph = 0.0
        for _ in range(100):
            p0 = rng.uniform(-6.0, 6.0)
            s = rng.uniform(-2.0, 2.0)
            p_s, w_s = flow_map(p0, tsallis_density(p0, d), s, gen)
            ref = tsallis_density(p_s, d)
            worst_graph = max(worst_graph, abs(w_s - ref) / ref)

        def rhs(_, y):
            p, w = y
            return [-p, gen.nu * p * p * w ** (1.0 + gen.delta)]

        worst_ode = 0.0
        for _ in range(25):
            p0, w0 = rng.uniform(-3.0, 3.0), rng.uniform(0.05, 1.0)
            s = rng.uniform(-1.5, 1.5)
            s_star = flow_blowup_parameter(p0, w0, gen)
            if s_star is not None and s > 0.8 * s_star:
                s = 0.8 * s_star
            sol = solve_ivp(rhs, (0.0, s), [p0, w0], method="DOP853", rtol=1e-13, atol=1e-16)
            _, w_s = flow_map(p0, w0, s, gen)
            worst_ode = max(worst_ode, abs(w_s - sol.y[1, -1]) / abs(sol.y[1, -1]))
        ok = worst_graph < 1e-10 and worst_ode < 1e-9
        _report(
            "5 (flow invariance)",
            ok,
            f"stationary-graph rel dev {worst_graph:.1e} (< 1e-10), "
            f"closed form vs ODE rel dev {worst_ode:.1e} (< 1e-9)",
        )


def _transport(func, p, t, eps, gen):
    p_src = p * math.exp(eps)
    t_src = t * math.exp(-gen.sigma * eps)
    return flow_map(p_src, func(p_src, t_src), eps, gen)[1]


class TestCriterion6Prolongation:
    def test_finite_difference_oracle(self):
        d = derive_params(REF)
        gen = GeneratorSpec.canonical(d)
        rng = np.random.default_rng(6)
        hp, eps0 = 2e-3, 2e-2

        def deriv5(f, x, h):
            return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)

        def deriv5_2(f, x, h):
            return (
                -f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)
            ) / (12 * h * h)

        worst = 0.0
        for _ in range(100):
            p0, t0 = rng.uniform(-2.0, 2.0), rng.uniform(0.5, 2.0)
            w0, wp0 = rng.uniform(0.5, 2.0), rng.uniform(-0.8, 0.8)
            wt0, wpp0 = rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)
            jet = JetPoint(p0, t0, w0, wp0, wt0, wpp0)

            def func(p, t):
                return w0 + wp0 * (p - p0) + wt0 * (t - t0) + 0.5 * wpp0 * (p - p0) ** 2

            def jet_derivs(eps):
                ph, th = p0 * math.exp(-eps), t0 * math.exp(gen.sigma * eps)
                f = lambda p, t: _transport(func, p, t, eps, gen)
                return np.array(
                    [
                        deriv5(lambda t: f(ph, t), th, hp),
                        deriv5(lambda p: f(p, th), ph, hp),
                        deriv5_2(lambda p: f(p, th), ph, hp),
                    ]
                )

            def central(eps):
                return (jet_derivs(eps) - jet_derivs(-eps)) / (2 * eps)

            c1, c2, c3 = central(eps0), central(eps0 / 2), central(eps0 / 4)
            r1, r2 = (4 * c2 - c1) / 3, (4 * c3 - c2) / 3
            rich = (16 * r2 - r1) / 15
            pr = prolong_coeffs(jet, gen)
            expected = np.array([pr.psi_t, pr.psi_p, pr.psi_pp])
            worst = max(worst, (np.abs(rich - expected) / np.maximum(np.abs(expected), 1.0)).max())
        _report(
            "6 (prolongation)",
            worst < 1e-6,
            f"finite-difference oracle rel dev {worst:.1e} (< 1e-6) at 100 random jets",
        )


class TestCriterion7AdaptedCoords:
    def test_invariants(self):
        d = derive_params(REF)
        gen = GeneratorSpec.canonical(d)
        z_pow = d.Z**d.delta
        worst_v = max(
            abs(adapted_coords(p, 2.0, float(tsallis_density(p, d)), d).v - z_pow) / z_pow
            for p in np.linspace(-20.0, 20.0, 81)
        )
        rng = np.random.default_rng(7)
        worst_y = worst_flow_v = 0.0
        count = 0
        while count < 100:
            p0 = rng.uniform(0.2, 4.0) * rng.choice([-1.0, 1.0])
            t0, w0 = rng.uniform(0.2, 4.0), rng.uniform(0.2, 1.5)
            s = rng.uniform(-1.0, 1.0)
            s_star = flow_blowup_parameter(p0, w0, gen)
            if s_star is not None and s > 0.8 * s_star:
                continue
            before = adapted_coords(p0, t0, w0, d)
            p_s, w_s = flow_map(p0, w0, s, gen)
            after = adapted_coords(p_s, gen.t_scale(t0, s), w_s, d)
            worst_y = max(worst_y, abs(after.y - before.y) / max(abs(before.y), 1e-12))
            worst_flow_v = max(worst_flow_v, abs(after.v - before.v) / abs(before.v))
            count += 1
        ok = worst_v < 1e-10 and worst_y < 1e-12 and worst_flow_v < 1e-12
        _report(
            "7 (adapted coordinates)",
            ok,
            f"v = Z^delta on the stationary graph to {worst_v:.1e} (< 1e-10); "
            f"orbit conservation: y to {worst_y:.1e}, v to {worst_flow_v:.1e} (< 1e-12)",
        )


class TestCriterion8NormalizationAnalysis:
    def test_variation_triple_and_tail_condition(self):
        d = derive_params(REF)
        state = init_state(Grid(50.0, 4000), tsallis_profile(d))
        rep = variation_integrals(state, REF, d)
        triple_ok = (
            abs(rep.i_phi - 1.0) < 1e-6
            and abs(rep.i_scale + 1.0) < 1e-6
            and abs(rep.i_flux) < 1e-6
        )

        kq_ok = all(
            normalizable_variation(1.0 / delta, 1.0 + delta).variation_ok
            for delta in (0.05, 0.2, 0.5, 0.8, 1.2, 1.5, 1.9)
        )

        worst_k = 0.0
        for delta in (0.2, 0.5, 0.8, 1.5):
            dd = DerivedParams.from_beta_delta(beta=12.0 / delta, delta=delta)
            p_max = min(10.0 ** (2.0 / delta), 1e6)
            fit = tail_exponent(init_state(Grid(p_max, 100000), tsallis_profile(dd)))
            worst_k = max(worst_k, abs(fit.k_hat - 1.0 / delta) * delta)
        ok = triple_ok and kq_ok and worst_k < 0.02
        _report(
            "8 (normalization analysis)",
            ok,
            f"(i_phi, i_scale, i_flux) = ({rep.i_phi:.8f}, {rep.i_scale:.8f}, "
            f"{rep.i_flux:.1e}) within 1e-6 of (1, -1, 0); k q > 3/2 for all tested "
            f"q < 3; tail exponent recovered within {100 * worst_k:.2f}% (< 2%)",
        )


class TestCriterion9ConservationAndOrder:
    def test_mass_drift_ten_thousand_steps(self):
        d = derive_params(REF)
        state = init_state(Grid(50.0, 2000), tsallis_profile(d))
        res = evolve(
            state, REF, SchemeConfig(dt=0.01), t_end=100.0, observers=("mass",)
        )
        assert res.n_steps == 10_000
        drift = max(abs(rec["mass"] - 1.0) for rec in res.records)
        _report(
            "9a (mass conservation)",
            drift < 1e-12,
            f"|mass - 1| = {drift:.2e} over 10^4 steps (< 1e-12)",
        )

    def test_spatial_convergence_order(self):
        d = derive_params(REF)
        errs = []
        for n in (150, 300, 600):
            grid = Grid(15.0, n)
            cfg = SchemeConfig(method=Scheme.CENTRAL_CRANK_NICOLSON, dt=0.05, theta=1.0)
            state = init_state(grid, gaussian_profile(1.0))
            final = evolve(state, REF, cfg, t_end=150.0, observers=("mass",)).final
            errs.append(l1_distance(final, tsallis_density(grid.centers, d)))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        _report(
            "9b (convergence order)",
            min(orders) >= 1.9,
            f"L1 errors {['%.3e' % e for e in errs]}, observed orders "
            f"{['%.2f' % o for o in orders]} (>= 1.9)",
        )


class TestCriterion10Regimes:
    def test_normal_regime_second_moment(self):
        d = derive_params(REF)
        assert classify_regime(d.q).label == "NormalDiffusion"
        state = init_state(Grid(200.0, 16000), tsallis_profile(d))
        (m2,) = moments(state, [2])
        _report(
            "10a (normal regime)",
            abs(m2 - 6.0 / 7.0) < 1e-4,
            f"q = 1.2: <p^2> = {m2:.6f} vs 6/7 = {6 / 7:.6f} (within 1e-4)",
        )

    def test_anomalous_regime_moment_growth(self):
        d = derive_params(ANOMALOUS)
        assert classify_regime(d.q).label == "AnomalousDiffusion"
        state = init_state(Grid(500.0, 4000), gaussian_profile(1.0))
        res = evolve(
            state,
            ANOMALOUS,
            SchemeConfig(dt=0.02, theta=1.0),
            t_end=50.0,
            observers=("mass", "m2"),
            sample_every=1.0,
        )
        m2 = np.array([rec["m2"] for rec in res.records])
        monotone = bool(np.all(np.diff(m2) > 0))
        growth = m2[-1] / m2[0]
        assert max(abs(rec["mass"] - 1.0) for rec in res.records) < 1e-12
        caveat_ok = (
            res.caveats["regime"] == "AnomalousDiffusion"
            and "note" in res.caveats
            and res.caveats["boundary_band_mass"] < 1e-12
        )
        _report(
            "10b (anomalous regime)",
            monotone and growth > 2.0 and caveat_ok,
            f"q = 1.8: m2 grows monotonically {m2[0]:.3f} -> {m2[-1]:.3f} over t in "
            f"[0, 50] without saturation; truncation caveat recorded "
            f"(boundary-band mass {res.caveats['boundary_band_mass']:.1e})",
        )
