import csv
import json
import math
import pytest
import numpy as np

from divbound.backend.services.divergences import csiszar_dual, make_divergence
from divbound.backend.services.vajda import (
    binary_cgf,
    binary_kl,
    height,
    height_curve,
    height_derivative,
    hoeffding_bound,
    kl_height,
    kl_tv_curve_point,
    pinsker_check,
    sublevel_width,
    vajda_bound,
    vajda_curve,
    vajda_parametric,
    write_height_csv,
    write_pinsker_json,
    write_vajda_csv,
)
from divbound.backend.utils.errors import BadParameter, DegenerateInterval, NotTwiceDifferentiable

OPTIMAL_ALPHAS = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
CRUDE_ALPHAS = [2.5, 3.0, 4.0]

class TestHeight:
    """Test suite for sublevel widths and the height-for-width function."""

    def test_kl_height_values(self, kl):
        assert 0.115 <= kl_height(1.0) <= 0.125
        assert kl_height(1.0) == pytest.approx(0.12331, abs=1e-5)
        assert 0.115 <= height(kl, 1.0)[0].value <= 0.125
        assert 1.005 <= height(kl, 3.0)[0].value <= 1.015

    @pytest.mark.parametrize("w", np.linspace(0.1, 10.0, 12))
    def test_kl_solver_matches_closed_form(self, kl, w):
        h, lam = height(kl, w)
        assert h.value == pytest.approx(kl_height(w), abs=1e-8)
        assert lam is not None

    def test_series_and_closed_form_join(self):
        below, above = kl_height(0.02 - 1e-12), kl_height(0.02 + 1e-12)
        assert below == pytest.approx(above, rel=1e-9)
        assert kl_height(0.0) == 0.0

    def test_zero_width(self, kl):
        assert height(kl, 0.0) == (0.0, 0.0)

    def test_negative_arguments_rejected(self, kl):
        with pytest.raises(BadParameter):
            height(kl, -1.0)
        with pytest.raises(BadParameter):
            sublevel_width(kl, -0.1)

    def test_sublevel_widths(self, kl, chi2):
        assert sublevel_width(kl, 0.0) < 1e-12
        assert sublevel_width(chi2, 0.25) == pytest.approx(2.0, abs=1e-12)
        assert sublevel_width(kl, kl_height(1.0)) == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("name", ["kl", "chi2", "squared_hellinger"])
    def test_width_and_height_are_inverse(self, name):
        spec = make_divergence(name)
        for w in (0.5, 2.0):
            h = height(spec, w)[0].value
            assert sublevel_width(spec, h) >= w - 1e-6
        width = sublevel_width(spec, 0.3)
        assert height(spec, width)[0].value <= 0.3 + 1e-8

    def test_total_variation_heights(self, tv):
        assert height(tv, 1.0) == (0.0, 0.0)
        h, lam = height(tv, 3.0)
        assert h.value == pytest.approx(1.0, abs=1e-9)
        assert lam is None

    def test_dagger_symmetry(self, kl):
        dual = csiszar_dual(kl)
        for w in (0.5, 1.0, 2.0, 4.0):
            assert height(dual, w)[0].value == pytest.approx(height(kl, w)[0].value, abs=1e-8)

    @pytest.mark.parametrize("name,alpha", [("chi2", None), ("alpha", 2.0), ("alpha", -0.5)])
    def test_dagger_symmetry_beyond_kl(self, name, alpha):
        spec = make_divergence(name, alpha)
        dual = csiszar_dual(spec)
        for w in (0.5, 1.0, 2.0):
            assert height(dual, w)[0].value == pytest.approx(height(spec, w)[0].value, abs=1e-6)

    def test_height_curve_csv(self, chi2, test_dir):
        curve = height_curve(chi2, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(curve.hs, [0.0, 1.0 / 16.0, 0.25], atol=1e-12)
        path = test_dir / "height_chi2.csv"
        write_height_csv(path, curve)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["w", "H", "lambda_w"]
        assert len(rows) == 3

class TestVajdaBound:
    """Test suite for the tight bound in terms of total variation."""

    @pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 2.0, 3.0])
    def test_kl_matches_parametric_curve(self, kl, t):
        eps, expected = kl_tv_curve_point(t)
        assert vajda_bound(kl, eps).value == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("t", [0.1, 1.0, 2.5])
    def test_parametric_points(self, kl, t):
        eps, value = vajda_parametric(kl, 2.0 * t)
        expected_eps, expected_value = kl_tv_curve_point(t)
        assert eps == pytest.approx(expected_eps, abs=1e-9)
        assert value == pytest.approx(expected_value, abs=1e-9)

    def test_kl_at_half(self, kl):
        value = vajda_bound(kl, 0.5).value
        assert 0.125 <= value <= binary_kl(0.75, 0.5)

    def test_chi2_is_square(self, chi2):
        for eps in (0.2, 0.5, 0.9):
            assert vajda_bound(chi2, eps).value == pytest.approx(eps * eps, abs=1e-6)

    def test_chi2_height_derivative(self, chi2):
        assert height_derivative(chi2, 2.0) == pytest.approx(0.25, abs=1e-9)
        eps, value = vajda_parametric(chi2, 2.0)
        assert eps == pytest.approx(0.5, abs=1e-9)
        assert value == pytest.approx(0.25, abs=1e-9)

    def test_edge_cases(self, kl):
        assert vajda_bound(kl, 0.0) == 0.0
        with pytest.raises(BadParameter):
            vajda_bound(kl, -0.1)
        with pytest.raises(BadParameter):
            kl_tv_curve_point(0.0)

    def test_fast_path_agrees_with_solver(self, kl):
        fast = vajda_bound(kl, 0.8).value
        solved = vajda_bound(kl, 0.8, use_fast_path=False).value
        assert solved == pytest.approx(fast, abs=1e-7)

    @pytest.mark.parametrize("alpha", [-1.0, 0.5, 2.0])
    def test_pinsker_constant_is_a_lower_bound(self, alpha):
        spec = make_divergence("alpha", alpha)
        for eps in (0.3, 1.0):
            assert vajda_bound(spec, eps).value >= 0.5 * eps * eps - 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha", OPTIMAL_ALPHAS)
    @pytest.mark.parametrize("eps", [0.0, 0.5, 1.0, 1.5, 1.9])
    def test_pinsker_constant_holds_across_tv_range(self, alpha, eps):
        spec = make_divergence("alpha", alpha)
        assert vajda_bound(spec, eps).value >= 0.5 * eps * eps - 1e-6

    def test_curve_csv(self, kl, test_dir):
        curve = vajda_curve(kl, [0.0, 0.5, 1.0])
        assert curve.provenance == "conjugate-of-cgf"
        assert np.all(np.diff(curve.values) > 0)
        path = test_dir / "vajda_kl.csv"
        write_vajda_csv(path, curve)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["eps", "L"]

class TestBinaryCgf:
    """Test suite for the supremum of K over centred two-point distributions."""

    @pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
    def test_kl_equals_height_at_twice_t(self, kl, t):
        assert binary_cgf(kl, t).value == pytest.approx(kl_height(2.0 * t), abs=1e-7)

    def test_chi2(self, chi2):
        assert binary_cgf(chi2, 0.5).value == pytest.approx(height(chi2, 1.0)[0].value, abs=1e-7)

class TestPinsker:
    """Test suite for Pinsker-type sufficient conditions."""

    @pytest.mark.parametrize("alpha", OPTIMAL_ALPHAS)
    def test_optimal_condition_for_alpha_family(self, alpha):
        report = pinsker_check(make_divergence("alpha", alpha), "optimal")
        assert report.holds
        assert report.constant == pytest.approx(0.5)
        assert report.violating_z is None

    @pytest.mark.parametrize("alpha", CRUDE_ALPHAS)
    def test_crude_condition_for_large_alpha(self, alpha):
        report = pinsker_check(make_divergence("alpha", alpha), "crude")
        assert report.holds
        assert report.constant == pytest.approx(0.125)

    def test_optimal_condition_fails_for_alpha_three(self):
        report = pinsker_check(make_divergence("alpha", 3.0), "optimal")
        assert not report.holds
        assert report.violating_z is not None

    def test_concave_condition(self, kl):
        assert pinsker_check(make_divergence("alpha", 1.5), "concave").holds
        assert pinsker_check(kl, "concave").holds
        assert not pinsker_check(make_divergence("alpha", 0.5), "concave").holds

    def test_verified_range(self, kl):
        report = pinsker_check(kl, "optimal", z_grid=[-2.0, -0.5, 0.0, 1.0, 5.0])
        assert report.verified_range == (-0.5, 5.0)

    def test_kinked_generator_rejected(self, tv):
        with pytest.raises(NotTwiceDifferentiable):
            pinsker_check(tv, "optimal")

    def test_unknown_kind(self, kl):
        with pytest.raises(BadParameter):
            pinsker_check(kl, "sharp")

    def test_json_report(self, kl, test_dir):
        path = test_dir / "pinsker_kl.json"
        write_pinsker_json(path, pinsker_check(kl, "optimal"))
        payload = json.loads(path.read_text())
        assert payload["holds"] is True
        assert payload["constant"] == 0.5
        assert payload["violating_z"] is None

class TestHoeffding:
    """Test suite for the refined Hoeffding lemma."""

    def test_refined_never_exceeds_classical(self, rng):
        for _ in range(200):
            m = float(rng.uniform(-3.0, 0.0))
            M = m + float(rng.uniform(0.1, 5.0))
            t = float(rng.uniform(-3.0, 3.0))
            bound = hoeffding_bound(m, M, t)
            assert bound.refined <= bound.classical * (1.0 + 1e-12)

    def test_span_two_at_one(self, kl):
        bound = hoeffding_bound(-1.0, 1.0, 1.0)
        assert bound.classical == 0.5
        assert bound.refined == pytest.approx(0.4745, abs=1e-4)
        assert bound.refined == pytest.approx(height(kl, 2.0)[0].value, abs=1e-8)

    def test_small_t_ratio(self):
        bound = hoeffding_bound(0.0, 1.0, 1e-3)
        assert bound.refined / bound.classical == pytest.approx(1.0, abs=1e-3)
        zero = hoeffding_bound(0.0, 1.0, 0.0)
        assert zero.refined == zero.classical == 0.0

    def test_degenerate_interval(self):
        with pytest.raises(DegenerateInterval):
            hoeffding_bound(1.0, 1.0, 0.5)

    def test_kl_height_symmetric_in_sign(self):
        assert kl_height(-2.0) == kl_height(2.0)
        assert math.isfinite(kl_height(1e4))
