import csv
import math
import pytest
import numpy as np

from divbound.backend.services.cgf import CgfQuery, cgf, cgf_curve, subexponential_probe, write_cgf_csv
from divbound.backend.services.divergences import make_divergence
from divbound.backend.utils.errors import PreconditionError
from divbound.backend.utils.measures import PushforwardDist, quadrature_dist
from tests.helpers import random_dist

LOG_COSH_1 = math.log(math.cosh(1.0))

class TestCgfPoint:
    """Test suite for single cgf evaluations."""

    def test_zero_at_origin(self, kl, coin):
        k, lam = cgf(CgfQuery(kl, coin), 0.0)
        assert k == 0.0
        assert lam == 0.0

    def test_kl_fast_path_is_log_cosh(self, kl, coin):
        k, _ = cgf(CgfQuery(kl, coin), 1.0)
        assert k.value == pytest.approx(LOG_COSH_1, abs=1e-12)

    def test_kl_generic_matches_fast_path(self, kl, coin):
        k, lam = cgf(CgfQuery(kl, coin), 1.0, use_fast_path=False)
        assert k.value == pytest.approx(LOG_COSH_1, abs=1e-9)
        assert lam == pytest.approx(-LOG_COSH_1, abs=1e-4)

    def test_chi2_quarter_variance(self, chi2, coin):
        k, lam = cgf(CgfQuery(chi2, coin), 0.5)
        assert k.value == pytest.approx(0.0625, abs=1e-12)
        assert lam == pytest.approx(0.0, abs=1e-6)

    def test_point_mass_is_zero(self, kl, tv):
        dist = PushforwardDist.point_mass(0.0)
        for spec in (kl, tv):
            k, _ = cgf(CgfQuery(spec, dist), 3.0)
            assert k.value == pytest.approx(0.0, abs=1e-12)

    def test_unbounded_override_with_finite_slope(self, tv, coin):
        query = CgfQuery(tv, coin, range_override=(-1.0, math.inf))
        k_pos, lam = cgf(query, 1.0)
        assert k_pos.is_pos_inf
        assert lam is None
        assert cgf(query, -1.0)[0].is_finite

    def test_override_checks(self, kl, coin):
        with pytest.raises(PreconditionError):
            CgfQuery(kl, coin, range_override=(-0.5, 1.0))
        with pytest.raises(PreconditionError):
            CgfQuery(kl, coin, range_override=(2.0, -2.0))
        with pytest.raises(PreconditionError):
            CgfQuery(kl, coin, range_override=(float("nan"), 1.0))
        assert CgfQuery(kl, coin, range_override=(-2.0, 3.0)).effective_range == (-2.0, 3.0)

class TestCgfProperties:
    """Test suite for structural properties of K."""

    def test_fast_and_generic_paths_agree(self, kl, rng):
        ts = np.linspace(-5.0, 5.0, 11)
        for _ in range(100):
            query = CgfQuery(kl, random_dist(rng, max_atoms=6))
            for t in ts:
                fast = cgf(query, t)[0].value
                generic = cgf(query, t, use_fast_path=False)[0].value
                assert generic == pytest.approx(fast, abs=1e-8)

    @pytest.mark.parametrize("name", ["chi2", "squared_hellinger"])
    def test_shift_invariance(self, name, rng):
        spec = make_divergence(name)
        dist = random_dist(rng)
        shifted = dist.shifted(0.37)
        for t in (-2.0, -0.5, 0.7, 1.5):
            base = cgf(CgfQuery(spec, dist), t)[0].value
            moved = cgf(CgfQuery(spec, shifted), t)[0].value
            assert moved == pytest.approx(base, abs=1e-10)

    @pytest.mark.parametrize("name", ["chi2", "squared_hellinger"])
    def test_scaling_covariance(self, name, rng):
        spec = make_divergence(name)
        dist = random_dist(rng)
        scaled = dist.scaled(2.0)
        for t in (-1.0, -0.25, 0.4, 0.8):
            direct = cgf(CgfQuery(spec, scaled), t)[0].value
            rescaled = cgf(CgfQuery(spec, dist), 2.0 * t)[0].value
            assert direct == pytest.approx(rescaled, abs=1e-10)

    def test_chi2_below_hcr_envelope(self, chi2, rng):
        for _ in range(10):
            dist = random_dist(rng)
            for t in (-3.0, -1.0, 0.5, 2.0, 4.0):
                envelope = t * t * dist.var / 4.0
                assert cgf(CgfQuery(chi2, dist), t)[0].value <= envelope + 1e-10 * (1.0 + envelope)

    def test_nonconstant_dist_has_positive_k(self, hellinger, rng):
        dist = random_dist(rng)
        for t in (-2.0, -1.0, 1.0, 2.0):
            assert cgf(CgfQuery(hellinger, dist), t)[0].value > 0.0

class TestCgfCurve:
    """Test suite for sampled cgf curves."""

    def test_grid_must_contain_zero(self, kl, coin):
        with pytest.raises(PreconditionError):
            cgf_curve(CgfQuery(kl, coin), [-1.0, 1.0])

    def test_grid_must_increase(self, kl, coin):
        with pytest.raises(PreconditionError):
            cgf_curve(CgfQuery(kl, coin), [0.0, 1.0, 0.5])

    def test_gaussian_quadrature_is_quadratic(self, kl):
        dist = quadrature_dist("gaussian", (0.0, 1.0), 40)
        ts = np.arange(-12, 13) * 0.25
        curve = cgf_curve(CgfQuery(kl, dist), ts)
        np.testing.assert_allclose(curve.ks, ts ** 2 / 2.0, atol=1e-2)
        assert curve.is_convex()

    def test_parallel_sweep_keeps_order(self, chi2, coin):
        ts = np.arange(-8, 9) * 0.25
        serial = cgf_curve(CgfQuery(chi2, coin), ts, max_workers=1)
        threaded = cgf_curve(CgfQuery(chi2, coin), ts, max_workers=4)
        np.testing.assert_array_equal(serial.ts, threaded.ts)
        np.testing.assert_allclose(serial.ks, threaded.ks, atol=1e-14)
        assert serial == threaded

    def test_digest_includes_override(self, kl, coin):
        plain = cgf_curve(CgfQuery(kl, coin), [0.0, 1.0])
        widened = cgf_curve(CgfQuery(kl, coin, range_override=(-2.0, 2.0)), [0.0, 1.0])
        assert plain.dist_digest == coin.digest
        assert widened.dist_digest != plain.dist_digest

    def test_csv_output(self, chi2, coin, test_dir):
        ts = np.arange(-4, 5) * 0.25
        path = test_dir / "cgf_chi2.csv"
        write_cgf_csv(path, cgf_curve(CgfQuery(chi2, coin), ts))
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["t", "K", "lambda_opt", "finite"]
        assert len(rows) == 9
        half = next(r for r in rows if float(r["t"]) == 0.5)
        assert float(half["K"]) == pytest.approx(0.0625, abs=1e-11)
        assert half["finite"] == "1"

class TestSubexponentialProbe:
    """Test suite for the finiteness probe."""

    def test_gaussian_kl_strongly_subexponential(self, kl):
        query = CgfQuery(kl, quadrature_dist("gaussian", (0.0, 1.0), 40))
        report = subexponential_probe(query)
        assert report.classification_hint == "looks-strongly-subexponential"
        assert report.finite_interval[1] > 0

    def test_finite_slope_with_unbounded_range(self, tv, coin):
        report = subexponential_probe(CgfQuery(tv, coin, range_override=(-1.0, math.inf)))
        assert report.classification_hint == "bounded-only-regime"
        assert all(t < 0 for t in report.finite_ts)
