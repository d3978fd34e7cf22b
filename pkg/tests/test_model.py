import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from lattice_lab import (
    DerivedParams,
    GaussianLimit,
    LatticeParams,
    Regime,
    classify_regime,
    derive_params,
    derived_to_dict,
    eval_coefficients,
    gaussian_limit,
    normalization_Z,
    params_from_dict,
    second_moment,
    tsallis_density,
)
from lattice_lab.errors import NonNormalizableError, ParameterError
from lattice_lab.model import log_stationary_potential

# frozen from the quadrature/closed-form oracle (they agree to < 1e-13):
#   Z = integral of (1 + p^2/6)^(-5) dp over the real line
Z_REF = 2.1041833151093083
W0_AT_0 = 0.47524376456147877  # 1/Z_REF
NU_REF = 1.9340400542152913  # 2 * (5/6) * Z_REF**0.2


class TestLatticeParams:
    def test_valid_construction(self):
        p = LatticeParams(1.0, 0.1, 0.5, 1.0)
        assert p.alpha == 1.0 and p.gamma1 == 0.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(alpha=0.0, gamma0=0.1, gamma1=0.5, p_c=1.0),
            dict(alpha=-1.0, gamma0=0.1, gamma1=0.5, p_c=1.0),
            dict(alpha=1.0, gamma0=0.0, gamma1=0.5, p_c=1.0),
            dict(alpha=1.0, gamma0=0.1, gamma1=-0.1, p_c=1.0),
            dict(alpha=1.0, gamma0=0.1, gamma1=0.5, p_c=0.0),
            dict(alpha=math.nan, gamma0=0.1, gamma1=0.5, p_c=1.0),
        ],
    )
    def test_invalid_construction(self, kwargs):
        with pytest.raises(ParameterError):
            LatticeParams(**kwargs)

    def test_json_round_trip(self, ref_params):
        blob = json.dumps(ref_params.to_dict())
        assert params_from_dict(json.loads(blob)) == ref_params

    def test_unknown_key_rejected(self):
        with pytest.raises(ParameterError, match="extra"):
            params_from_dict({"alpha": 1, "gamma0": 0.1, "gamma1": 0.5, "p_c": 1, "extra": 2})

    def test_missing_key_named(self):
        with pytest.raises(ParameterError, match="p_c"):
            params_from_dict({"alpha": 1, "gamma0": 0.1, "gamma1": 0.5})


class TestDeriveParams:
    def test_reference_hand_values(self, ref_derived):
        # hand evaluation: beta = 1/(2*0.6), q = 1 + 2*0.1/1
        assert ref_derived.beta == pytest.approx(5.0 / 6.0, rel=1e-15)
        assert ref_derived.q == pytest.approx(1.2, rel=1e-15)
        assert ref_derived.delta == pytest.approx(0.2, rel=1e-14)
        assert ref_derived.mu == pytest.approx(-5.0, rel=1e-13)
        assert ref_derived.k == pytest.approx(5.0, rel=1e-13)

    def test_non_normalizable_rejected(self):
        # q = 1 + 2*1.5 = 4 >= 3
        with pytest.raises(NonNormalizableError, match="physical range"):
            derive_params(LatticeParams(1.0, 1.5, 0.0, 1.0))

    def test_q_at_three_rejected(self):
        with pytest.raises(NonNormalizableError):
            derive_params(LatticeParams(1.0, 1.0, 0.0, 1.0))

    def test_nu_consistency(self, ref_derived):
        assert ref_derived.nu == pytest.approx(
            2 * ref_derived.beta * ref_derived.Z**ref_derived.delta, rel=1e-14
        )
        assert ref_derived.nu == pytest.approx(NU_REF, rel=1e-12)

    def test_from_beta_delta(self):
        d = DerivedParams.from_beta_delta(beta=5.0 / 6.0, delta=0.2)
        assert d.Z == pytest.approx(Z_REF, rel=1e-12)

    def test_gaussian_limit_approach(self):
        # gamma0 -> 0+: q -> 1+ and the density approaches exp(-beta p^2)
        params = LatticeParams(1.0, 1e-7, 0.5, 1.0)
        d = derive_params(params)
        assert d.q == pytest.approx(1.0, abs=1e-6)
        limit = gaussian_limit(alpha=1.0, gamma1=0.5 + 1e-7)
        p = np.linspace(-3, 3, 31)
        np.testing.assert_allclose(tsallis_density(p, d), limit.density(p), rtol=1e-4)
        assert d.Z == pytest.approx(limit.Z, rel=1e-4)


class TestCoefficients:
    def test_origin(self, ref_params):
        h, g, b = eval_coefficients(0.0, ref_params)
        assert h == 0.0
        assert g == pytest.approx(0.6)
        assert b == 1.0

    def test_hand_value_at_unit_momentum(self, ref_params):
        h, g, b = eval_coefficients(1.0, ref_params)
        assert b == pytest.approx(0.5, rel=1e-15)
        assert h == pytest.approx(-0.5, rel=1e-15)
        assert g == pytest.approx(0.35, rel=1e-15)

    def test_lorentzian_decay(self, ref_params):
        p = np.array([1e3, 1e4, 1e5])
        h, g, _ = eval_coefficients(p, ref_params)
        # h ~ -alpha p_c^2 / p, g -> gamma0
        np.testing.assert_allclose(h, -ref_params.alpha * ref_params.p_c**2 / p, rtol=1e-5)
        np.testing.assert_allclose(g, ref_params.gamma0, rtol=1e-5)

    @given(st.floats(-1e6, 1e6, allow_nan=False))
    def test_parity_and_restoring_drift(self, p):
        params = LatticeParams(1.0, 0.1, 0.5, 1.0)
        h_plus, g_plus, b_plus = eval_coefficients(p, params)
        h_minus, g_minus, b_minus = eval_coefficients(-p, params)
        assert h_plus == -h_minus  # odd
        assert g_plus == g_minus and b_plus == b_minus  # even
        assert h_plus * p <= 0.0  # restoring

    def test_potential_reproduces_density_ratio(self, ref_params, ref_derived):
        # exp(potential difference) must equal the stationary density ratio
        p1, p2 = 0.7, 2.9
        ratio = tsallis_density(p2, ref_derived) / tsallis_density(p1, ref_derived)
        lhs = math.exp(
            log_stationary_potential(p2, ref_params) - log_stationary_potential(p1, ref_params)
        )
        assert lhs == pytest.approx(ratio, rel=1e-13)


class TestNormalization:
    def test_closed_form_vs_quadrature_oracle(self, ref_params):
        # independent oracle: plain adaptive quadrature over the real line
        z = normalization_Z(ref_params)
        oracle, err = integrate.quad(
            lambda p: (1 + p * p / 6.0) ** (-5.0), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13
        )
        assert err < 1e-10
        assert z == pytest.approx(oracle, rel=1e-12)
        assert z == pytest.approx(Z_REF, rel=1e-12)

    def test_density_normalized(self, ref_derived):
        total, _ = integrate.quad(
            lambda p: tsallis_density(p, ref_derived), -np.inf, np.inf, epsabs=1e-13
        )
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_divergent_rejected(self):
        with pytest.raises(NonNormalizableError):
            DerivedParams.from_beta_delta(beta=1.0, delta=2.0)

    def test_small_delta_tends_to_gaussian_Z(self):
        d = DerivedParams.from_beta_delta(beta=2.0, delta=1e-6)
        assert d.Z == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-5)

    @pytest.mark.parametrize("delta", [0.2, 0.5, 0.8, 1.5, 1.9])
    def test_cross_check_across_range(self, delta):
        # construction itself enforces the 1e-10 closed-vs-quadrature agreement
        DerivedParams.from_beta_delta(beta=0.7, delta=delta)


class TestTsallisDensity:
    def test_peak_value(self, ref_derived):
        assert tsallis_density(0.0, ref_derived) == pytest.approx(W0_AT_0, rel=1e-12)

    @given(st.floats(-1e3, 1e3, allow_nan=False))
    def test_even(self, p):
        d = DerivedParams.from_beta_delta(beta=5.0 / 6.0, delta=0.2)
        assert tsallis_density(p, d) == tsallis_density(-p, d)

    def test_two_algebraic_forms_agree(self, ref_derived):
        # (1 + beta*delta*p^2)^(-1/delta) == [1 - (beta/mu) p^2]^mu
        p = np.linspace(-50, 50, 1001)
        d = ref_derived
        alt = (1.0 - (d.beta / d.mu) * p * p) ** d.mu / d.Z
        np.testing.assert_allclose(tsallis_density(p, d), alt, rtol=5e-15)

    def test_positive(self, ref_derived):
        p = np.geomspace(1e-3, 1e8, 200)
        assert (tsallis_density(p, ref_derived) > 0).all()

    def test_loglog_tail_slope(self, ref_derived):
        # numeric slope-fit oracle on p in [1e3, 1e6]: w ~ p^(-2k)
        p = np.geomspace(1e3, 1e6, 40)
        w = tsallis_density(p, ref_derived)
        slope = np.polyfit(np.log(p), np.log(w), 1)[0]
        assert slope == pytest.approx(-2 * ref_derived.k, rel=1e-3)


class TestSecondMoment:
    def test_reference_closed_form(self, ref_derived):
        assert second_moment(ref_derived) == pytest.approx(6.0 / 7.0, rel=1e-14)

    def test_quadrature_oracle(self, ref_derived):
        oracle, _ = integrate.quad(
            lambda p: p * p * tsallis_density(p, ref_derived), -np.inf, np.inf, epsabs=1e-12
        )
        assert second_moment(ref_derived) == pytest.approx(oracle, rel=1e-8)

    def test_divergent_in_anomalous_regime(self):
        d = DerivedParams.from_beta_delta(beta=1.0, delta=0.8)
        assert math.isinf(second_moment(d))


class TestRegime:
    @pytest.mark.parametrize(
        "q,expected",
        [
            (1.2, Regime.NORMAL_DIFFUSION),
            (1.5, Regime.NORMAL_DIFFUSION),
            (1.8, Regime.ANOMALOUS_DIFFUSION),
            (2.9, Regime.ANOMALOUS_DIFFUSION),
            (3.2, Regime.NON_NORMALIZABLE),
        ],
    )
    def test_classification(self, q, expected):
        result = classify_regime(q)
        assert result.regime is expected
        assert not result.is_boundary

    @pytest.mark.parametrize("q", [5.0 / 3.0, 3.0])
    def test_boundaries_flagged(self, q):
        result = classify_regime(q)
        assert result.is_boundary
        assert result.regime is None
        assert "boundary" in result.label

    def test_requires_q_above_one(self):
        with pytest.raises(ParameterError):
            classify_regime(1.0)

    def test_normal_regime_has_finite_second_moment(self, ref_derived):
        assert classify_regime(ref_derived.q).regime is Regime.NORMAL_DIFFUSION
        assert math.isfinite(second_moment(ref_derived))


class TestGaussianLimit:
    def test_density_normalized(self):
        lim = GaussianLimit(beta=0.8)
        total, _ = integrate.quad(lim.density, -np.inf, np.inf)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_constructor_validation(self):
        with pytest.raises(ParameterError):
            gaussian_limit(alpha=1.0, gamma1=0.0)


class TestJsonExport:
    def test_derived_keys_exact(self, ref_derived):
        data = derived_to_dict(ref_derived)
        assert set(data) == {"beta", "q", "delta", "mu", "nu", "Z", "k", "regime"}
        assert data["regime"] == "NormalDiffusion"
        assert data["q"] == pytest.approx(1.2)
        json.dumps(data)  # serializable
