import pytest

from divbound.backend.utils.csv_io import read_dist_csv, read_function_csv, read_measure_csv, write_dist_csv
from divbound.backend.utils.errors import (
    BadFamily,
    BadOrder,
    InputFormatError,
    InvalidMeasure,
    MismatchedUniverse,
    MissingValue,
)
from divbound.backend.utils.measures import (
    DiscreteMeasure,
    FunctionOnSupport,
    PushforwardDist,
    mean_deviation,
    merge_atoms,
    mixture,
    pushforward,
    quadrature_dist,
)

class TestDiscreteMeasure:
    """Test suite for finite measures and functions on their support."""

    def test_duplicate_ids_rejected(self):
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure((("a", 0.5), ("a", 0.5)))

    def test_probability_mass_checked(self):
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_dict({"a": 0.5, "b": 0.4}, probability=True)
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_dict({"a": 1.5, "b": -0.5}, probability=True)

    def test_signed_measure_allowed(self):
        mu = DiscreteMeasure.from_dict({"a": 1.2, "b": -0.2})
        assert mu.total_mass == pytest.approx(1.0)
        assert mu.weight_of("c") == 0.0

    def test_missing_function_value(self):
        g = FunctionOnSupport({"a": 1.0})
        with pytest.raises(MissingValue):
            g.value_of("b")

    def test_mean_deviation(self, two_point_space):
        nu, g = two_point_space
        mu = DiscreteMeasure.from_dict({"a": 0.25, "b": 0.75}, probability=True)
        assert mean_deviation(mu, nu, g) == pytest.approx(0.5)

    def test_mean_deviation_needs_same_universe(self, two_point_space):
        nu, g = two_point_space
        mu = DiscreteMeasure.from_dict({"a": 0.25, "b": 0.75}, universe_id="other")
        with pytest.raises(MismatchedUniverse):
            mean_deviation(mu, nu, g)

    def test_merge_atoms(self):
        mu = DiscreteMeasure.from_dict({"a": 0.2, "b": 0.3, "c": 0.5})
        merged = merge_atoms(mu, {"a": "x", "b": "x", "c": "y"})
        assert merged.as_dict() == pytest.approx({"x": 0.5, "y": 0.5})
        with pytest.raises(MissingValue):
            merge_atoms(mu, {"a": "x"})

    def test_mixture(self):
        m1 = DiscreteMeasure.from_dict({"a": 1.0})
        m2 = DiscreteMeasure.from_dict({"b": 1.0})
        mix = mixture(m1, m2, 0.25)
        assert mix.as_dict() == pytest.approx({"a": 0.25, "b": 0.75})

class TestPushforward:
    """Test suite for pushforward distributions."""

    def test_equal_values_merge(self):
        nu = DiscreteMeasure.from_dict({"a": 0.25, "b": 0.25, "c": 0.5}, probability=True)
        g = FunctionOnSupport({"a": 1.0, "b": 1.0, "c": -1.0})
        dist = pushforward(nu, g)
        assert dist.points == ((-1.0, 0.5), (1.0, 0.5))

    def test_moments(self, coin):
        assert coin.mean == 0.0
        assert coin.var == 1.0
        assert (coin.lo, coin.hi) == (-1.0, 1.0)
        assert not coin.is_point_mass
        assert PushforwardDist.point_mass(2.0).is_point_mass

    def test_weights_must_sum_to_one(self):
        with pytest.raises(InvalidMeasure):
            PushforwardDist.from_arrays([0.0, 1.0], [0.5, 0.6])

    def test_transformations(self, coin):
        shifted = coin.shifted(2.0)
        assert shifted.mean == pytest.approx(2.0)
        assert coin.scaled(3.0).var == pytest.approx(9.0)
        assert coin.mirrored().digest == coin.digest

    def test_digest_survives_csv_round_trip(self, test_dir):
        dist = PushforwardDist.from_arrays([0.1, 1.0 / 3.0, 2.5], [0.2, 0.3, 0.5])
        path = test_dir / "dist_roundtrip.csv"
        write_dist_csv(path, dist)
        assert read_dist_csv(path).digest == dist.digest

class TestQuadrature:
    """Test suite for Gauss quadrature constructors."""

    def test_gaussian_moments(self):
        dist = quadrature_dist("gaussian", (0.0, 1.0), 20)
        assert dist.ws.sum() == pytest.approx(1.0, abs=1e-12)
        assert dist.mean == pytest.approx(0.0, abs=1e-12)
        assert dist.var == pytest.approx(1.0, abs=1e-10)

    def test_gamma_moments(self):
        dist = quadrature_dist("gamma", (2.0, 1.5), 20)
        assert dist.mean == pytest.approx(3.0, rel=1e-8)
        assert dist.var == pytest.approx(4.5, rel=1e-8)

    def test_uniform_moments(self):
        dist = quadrature_dist("uniform", (0.0, 1.0), 10)
        assert dist.mean == pytest.approx(0.5, abs=1e-12)
        assert dist.var == pytest.approx(1.0 / 12.0, abs=1e-12)

    @pytest.mark.parametrize("order", [1, 0, 2.5, True])
    def test_bad_order(self, order):
        with pytest.raises(BadOrder):
            quadrature_dist("gaussian", (0.0, 1.0), order)

    def test_bad_family(self):
        with pytest.raises(BadFamily):
            quadrature_dist("cauchy", (0.0, 1.0), 10)
        with pytest.raises(BadFamily):
            quadrature_dist("gaussian", (0.0, -1.0), 10)

class TestCsvInputs:
    """Test suite for measure and function CSV readers."""

    def test_measure_and_function(self, test_dir):
        (test_dir / "nu.csv").write_text("point_id,weight\na,0.25\nb,0.75\n")
        (test_dir / "g.csv").write_text("point_id,value\na,-1\nb,2\n")
        nu = read_measure_csv(test_dir / "nu.csv")
        g = read_function_csv(test_dir / "g.csv")
        dist = pushforward(nu, g)
        assert dist.mean == pytest.approx(1.25)

    def test_wrong_header(self, test_dir):
        (test_dir / "bad_header.csv").write_text("id,weight\na,1\n")
        with pytest.raises(InputFormatError):
            read_measure_csv(test_dir / "bad_header.csv")

    def test_non_numeric_weight(self, test_dir):
        (test_dir / "bad_weight.csv").write_text("x,weight\n0,abc\n")
        with pytest.raises(InputFormatError):
            read_dist_csv(test_dir / "bad_weight.csv")

    def test_missing_file(self, test_dir):
        with pytest.raises(InputFormatError):
            read_dist_csv(test_dir / "does_not_exist.csv")

    def test_infinite_function_value(self, test_dir):
        (test_dir / "inf_g.csv").write_text("point_id,value\na,inf\n")
        with pytest.raises(InputFormatError):
            read_function_csv(test_dir / "inf_g.csv")
