"""Shift/correlation primitives, code generators, and the text format."""

import numpy as np
import pytest

from phasecode.codes import (
    ParseError,
    as_code,
    autocorrelation,
    cross_correlation,
    format_code,
    legendre_code,
    parse_code,
    random_code,
    random_codes,
    shifted,
)


def bipolar(*vals):
    return as_code(vals)


class TestShifted:
    def test_zero_lag_is_identity(self):
        s = bipolar(1, -1, 1)
        assert shifted(s, 0).tolist() == [1, -1, 1]

    def test_positive_lag_pulls_later_symbols(self):
        s = bipolar(1, -1, 1)
        assert shifted(s, 1).tolist() == [-1, 1, 0]

    def test_negative_lag_pushes_right(self):
        s = bipolar(1, -1, 1)
        assert shifted(s, -2).tolist() == [0, 0, 1]

    def test_lag_out_of_range(self):
        s = bipolar(1, -1, 1)
        with pytest.raises(ValueError):
            shifted(s, 3)
        with pytest.raises(ValueError):
            shifted(s, -3)

    def test_nonzero_count_is_length_minus_lag(self):
        rng = np.random.default_rng(7)
        for n in (2, 5, 59):
            s = random_code(n, rng)
            for lag in range(-(n - 1), n):
                assert np.count_nonzero(shifted(s, lag)) == n - abs(lag)


class TestCrossCorrelation:
    def test_zero_lag_autocorrelation_is_length(self):
        rng = np.random.default_rng(3)
        for n in (2, 7, 59):
            s = random_code(n, rng)
            assert cross_correlation(np.asarray(s, float), s, 0) == n

    def test_two_overlapping_terms(self):
        assert cross_correlation([1, 1, 1], bipolar(1, 1, 1), 1) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cross_correlation([1.0, 2.0], bipolar(1, 1, 1), 0)

    def test_adjoint_identity_exhaustive_small_n(self):
        # <x, shifted(s, i)> == <shifted(x, -i), s> over every bipolar s for N <= 8
        rng = np.random.default_rng(11)
        for n in range(2, 9):
            x = rng.normal(size=n)
            for bits in range(1 << n):
                s = as_code([1 if (bits >> k) & 1 else -1 for k in range(n)])
                for lag in range(-(n - 1), n):
                    lhs = float(x @ shifted(s, lag))
                    xs = np.zeros(n)
                    if lag <= 0:
                        xs[: n + lag] = x[-lag:]
                    else:
                        xs[lag:] = x[: n - lag]
                    rhs = float(xs @ np.asarray(s, float))
                    assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_adjoint_identity_random_bipolar_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 16))
            x = random_code(n, rng)
            s = random_code(n, rng)
            lag = int(rng.integers(-(n - 1), n))
            fwd = cross_correlation(np.asarray(x, float), s, lag)
            back = cross_correlation(np.asarray(s, float), x, -lag)
            assert fwd == pytest.approx(back, abs=1e-12)


class TestAutocorrelation:
    def test_matches_definition(self):
        rng = np.random.default_rng(2)
        s = random_code(13, rng)
        r = autocorrelation(s)
        for d in range(13):
            assert r[d] == pytest.approx(cross_correlation(np.asarray(s, float), s, d))


class TestRandomCode:
    def test_rejects_short_lengths(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            random_code(1, rng)

    def test_deterministic_for_fixed_seed(self):
        a = random_code(59, np.random.default_rng(42))
        b = random_code(59, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_consecutive_draws_differ(self):
        rng = np.random.default_rng(42)
        assert not np.array_equal(random_code(59, rng), random_code(59, rng))

    def test_symbol_mean_near_zero(self):
        # ~1e6 symbols; the mean has std 1e-3, so |mean| <= 0.005 is a 5-sigma band
        rng = np.random.default_rng(1234)
        total, count = 0.0, 0
        for _ in range(17_000):
            code = random_code(59, rng)
            total += int(code.sum())
            count += 59
        assert count >= 1_000_000
        assert abs(total / count) <= 0.005

    def test_batch_matches_symbol_distribution(self):
        rng = np.random.default_rng(99)
        batch = random_codes(1000, 31, rng)
        assert batch.shape == (1000, 31)
        assert set(np.unique(batch)) == {-1, 1}


class TestLegendreCode:
    def test_length_three(self):
        assert legendre_code(3).tolist() == [1, 1, -1]

    def test_length_seven(self):
        # quadratic residues mod 7 are {1, 2, 4}
        assert legendre_code(7).tolist() == [1, 1, 1, -1, 1, -1, -1]

    def test_rejects_non_prime_and_even(self):
        for bad in (1, 2, 4, 9, 15, 58):
            with pytest.raises(ValueError):
                legendre_code(bad)

    def test_matches_published_59_constant(self):
        from phasecode.baselines import known_code

        assert np.array_equal(legendre_code(59), known_code("legendre").code)


class TestParseFormat:
    def test_parse_basic(self):
        assert parse_code("+1,-1,+1").tolist() == [1, -1, 1]

    def test_format_basic(self):
        assert format_code(bipolar(1, -1)) == "+1,-1"

    def test_bare_one_token_accepted(self):
        assert parse_code("1, 1, -1").tolist() == [1, 1, -1]

    def test_whitespace_separated(self):
        assert parse_code(" +1  -1\t+1 ").tolist() == [1, -1, 1]

    def test_round_trip_random(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            s = random_code(int(rng.integers(2, 80)), rng)
            assert np.array_equal(parse_code(format_code(s)), s)

    def test_bad_token_reports_position(self):
        with pytest.raises(ParseError) as err:
            parse_code("+1, 2")
        assert err.value.token_index == 1

    def test_empty_input_rejected(self):
        with pytest.raises(ParseError):
            parse_code("   ")

    def test_single_symbol_rejected(self):
        with pytest.raises(ValueError):
            parse_code("+1")


class TestAsCode:
    def test_rejects_non_bipolar(self):
        with pytest.raises(ValueError):
            as_code([1, 0, -1])
        with pytest.raises(ValueError):
            as_code([1.5, -1.0])

    def test_rejects_matrix(self):
        with pytest.raises(ValueError):
            as_code([[1, -1], [1, 1]])
