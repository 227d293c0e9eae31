import io
import math

import numpy as np
import pytest

from satotate import lie_core as lc
from satotate import st_group as st
from satotate import vinogradov as vg
from satotate.errors import BelowThresholdError, InvalidInputError

G = st.catalog_lookup
I02 = st.IntervalQuery(0, 2)


def su2_exact_coefficient(m):
    """c_m of the indicator of (0,1/4) u (3/4,1)."""
    return 0.5 if m == 0 else math.sin(math.pi * m / 2) / (math.pi * m)


class TestFourierSeries:
    def test_zero_and_constant(self):
        z = vg.FourierSeries.zeros(1, 3)
        assert vg.evaluate_series(z, [0.3]) == 0
        one = vg.FourierSeries.from_dict(2, {(0, 0): 1.0})
        assert vg.evaluate_series(one, [0.1, 0.7]) == pytest.approx(1)

    def test_shape_checked(self):
        with pytest.raises(InvalidInputError):
            vg.FourierSeries(1, 2, np.zeros(4))

    def test_csv(self):
        s = vg.FourierSeries.from_dict(1, {(1,): 0.25, (-1,): 0.25})
        buf = io.StringIO()
        s.to_csv(buf)
        rows = buf.getvalue().strip().splitlines()
        # zero coefficients are not written
        assert rows == ["m1,coefficient", "-1,0.25", "1,0.25"]

    def test_truncate(self):
        s = vg.indicator_fourier(G("SU2"), I02, 10).truncate(3)
        assert s.M == 3 and s.coefficient((3,)) == pytest.approx(su2_exact_coefficient(3))


class TestIndicator:
    def test_su2_examples(self):
        s = vg.indicator_fourier(G("SU2"), I02, 50)
        assert s.c0 == pytest.approx(0.5, abs=1e-14)
        assert s.coefficient((1,)) == pytest.approx(1 / math.pi, abs=1e-14)
        for m in range(-50, 51):
            assert s.coefficient((m,)) == pytest.approx(su2_exact_coefficient(m), abs=1e-13)

    def test_full_range(self):
        s = vg.indicator_fourier(G("SU2"), st.IntervalQuery(-2, 2), 5)
        assert s.c0 == pytest.approx(1)
        assert np.allclose(np.delete(s.coeffs, 5), 0, atol=1e-14)

    def test_partial_sum_near_indicator(self):
        s = vg.indicator_fourier(G("SU2"), I02, 1000)
        assert abs(vg.evaluate_series(s, [0.125]) - 1) < 0.05

    @pytest.mark.parametrize("name", ["SU2", "U1", "USp4", "SU2xSU2", "U1_diag"])
    def test_c0_is_measure_of_preimage(self, name):
        d = G(name)
        I = st.IntervalQuery(-0.5, 1.3)
        s = vg.indicator_fourier(d, I, 2)
        n = 1000 if d.q == 2 else 10**6
        grid = (np.arange(n) + 0.5) / n
        th = np.stack(np.meshgrid(*[grid] * d.q, indexing="ij"), axis=-1).reshape(-1, d.q)
        T = st.trace_value(d, th)
        assert s.c0 == pytest.approx(np.mean((T >= I.lower) & (T <= I.upper)), abs=2e-3)

    @pytest.mark.parametrize("name", ["USp4", "SU2xU1"])
    def test_two_dim_coefficients_by_fft(self, name):
        d = G(name)
        I = st.IntervalQuery(-1.0, 1.5)
        M = 4
        s = vg.indicator_fourier(d, I, M)
        n = 2048
        grid = (np.arange(n) + 0.5) / n
        th = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1)
        T = st.trace_value(d, th)
        ind = ((T >= I.lower) & (T <= I.upper)).astype(float)
        # c_m = mean(f * exp(-2 pi i m.theta)); midpoint grid introduces a phase
        F = np.fft.fft2(ind) / n**2
        for m1 in range(-M, M + 1):
            for m2 in range(-M, M + 1):
                phase = np.exp(-2j * np.pi * (m1 + m2) * 0.5 / n)
                assert s.coefficient((m1, m2)) == pytest.approx((F[m1, m2] * phase).real, abs=2e-3)

    def test_two_dim_node_doubling_stable(self):
        d = G("USp4")
        I = st.IntervalQuery(-1.0, 1.5)
        a = vg.indicator_fourier(d, I, 6)
        b = vg.indicator_fourier(d, I, 30).truncate(6)
        assert np.allclose(a.coeffs, b.coeffs, atol=1e-10)

    def test_reality(self):
        s = vg.indicator_fourier(G("SU2xSU2"), st.IntervalQuery(0.3, 2.2), 5)
        assert np.allclose(s.coeffs, s.coeffs[::-1, ::-1], atol=1e-12)


class TestSmoothing:
    def test_box_multiplier(self):
        assert vg.box_multiplier(0, 0.3) == 1
        assert vg.box_multiplier(1, 0.25) == pytest.approx(2 / math.pi)
        assert vg.box_multiplier(2, 0.25) == pytest.approx(0, abs=1e-15)
        with pytest.raises(InvalidInputError):
            vg.box_multiplier(1, 1.0)

    def test_smooth(self):
        s = vg.indicator_fourier(G("SU2"), I02, 4)
        p0 = vg.SmoothingParams(1.0, 0, 0.25, 1.0, 4)
        assert np.array_equal(vg.smooth(s, p0).coeffs, s.coeffs)
        p2 = vg.SmoothingParams(1.0, 2, 0.25, 1.0, 4)
        out = vg.smooth(s, p2)
        assert out.c0 == s.c0
        assert out.coefficient((1,)) == pytest.approx(s.coefficient((1,)) * (2 / math.pi) ** 2)

    def test_make_params(self):
        p = vg.make_params(G("USp4"), 0.1, 3, 10)
        assert p.r * math.sqrt(2) * p.K * p.delta == pytest.approx(0.1)

    def test_default_parameters(self):
        with pytest.raises(BelowThresholdError):
            vg.default_parameters(G("SU2"), 1e6, 11, st.IntervalQuery(0, 2))
        p = vg.default_parameters(G("SU2"), 1e60, 11, st.IntervalQuery(0, 2))
        assert p.r == 1 and p.M == math.ceil(p.Delta**-2)
        p = vg.default_parameters(G("U1"), 1e20, 11, st.IntervalQuery(0, 2))
        assert p.r == 1 and p.M == math.ceil(p.Delta**-2)
        with pytest.raises(InvalidInputError):
            vg.default_parameters(G("SU2"), 1.5, 11, I02)


class TestSandwich:
    def test_su2_example(self):
        p = vg.make_params(G("SU2"), 0.1, 1, 100)
        assert vg.evaluate_direct(G("SU2"), I02, p, [0.125]) == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("name,I,Delta,r", [
        ("SU2", st.IntervalQuery(0, 2), 0.05, 1),
        ("SU2", st.IntervalQuery(-1, 0.5), 0.1, 2),
        ("U1", st.IntervalQuery(-1.9, 1.0), 0.1, 1),
        ("USp4", st.IntervalQuery(-1, 1.5), 0.2, 2),
        ("SU2xU1", st.IntervalQuery(0, 2), 0.2, 1),
    ])
    def test_regions_and_range(self, name, I, Delta, r):
        d = G(name)
        p = vg.make_params(d, Delta, r, 0)
        rng = np.random.default_rng(7)
        n = 200 if d.q == 1 else 40
        seen = set()
        for th in rng.random((n, d.q)):
            v = vg.evaluate_direct(d, I, p, th, tol=1e-9)
            assert -1e-9 <= v <= 1 + 1e-9
            label = vg.region_label(d, I, Delta, th)
            seen.add(label)
            if label == "R1":
                assert v == pytest.approx(1, abs=1e-6)
            elif label == "R0":
                assert v == pytest.approx(0, abs=1e-6)
        assert {"R0", "R1"} <= seen

    @pytest.mark.parametrize("name,I,Delta,r,M", [
        ("SU2", st.IntervalQuery(-0.5, 1.5), 0.1, 2, 400),
        ("SU2xSU2", st.IntervalQuery(-1, 1.5), 0.3, 2, 24),
    ])
    def test_series_matches_direct(self, name, I, Delta, r, M):
        d = G(name)
        p = vg.make_params(d, Delta, r, M)
        series = vg.smooth(vg.indicator_fourier(d, I, M), p)
        bound = vg.tail_bound(d, p)
        rng = np.random.default_rng(3)
        for th in rng.random((25, d.q)):
            direct = vg.evaluate_direct(d, I, p, th, tol=1e-9)
            assert abs(vg.evaluate_series(series, th) - direct) <= bound + 1e-6


class TestCoefficientBounds:
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_one_dim(self, r):
        d = G("SU2")
        p = vg.make_params(d, 0.05, r, 5000)
        s = vg.smooth(vg.indicator_fourier(d, I02, 5000), p)
        for m, c in s.items():
            assert abs(c) <= vg.coefficient_bound(d, p, s.c0, m) * (1 + 1e-9) + 1e-15

    def test_two_dim(self):
        d = G("USp4")
        I = st.IntervalQuery(-1, 1.5)
        p = vg.make_params(d, 0.3, 2, 20)
        s = vg.smooth(vg.indicator_fourier(d, I, 20), p)
        for m, c in s.items():
            assert abs(c) <= vg.coefficient_bound(d, p, s.c0, m) + 1e-9

    def test_tail_bound_one_dim(self):
        d = G("SU2")
        p = vg.make_params(d, 0.05, 2, 200)
        big = vg.smooth(vg.indicator_fourier(d, I02, 20000), vg.make_params(d, 0.05, 2, 20000))
        tail = sum(abs(c) for m, c in big.items() if abs(m[0]) > 200)
        assert tail <= vg.tail_bound(d, p)


class TestWeylAverage:
    def test_su2(self):
        s = vg.FourierSeries.from_dict(1, {(1,): 1.0})
        avg = vg.weyl_average(G("SU2"), s)
        assert avg.coefficient((1,)) == 0.5 and avg.coefficient((-1,)) == 0.5

    def test_idempotent(self):
        s = vg.indicator_fourier(G("USp4"), st.IntervalQuery(-1, 1.5), 6)
        once = vg.weyl_average(G("USp4"), s)
        assert np.allclose(vg.weyl_average(G("USp4"), once).coeffs, once.coeffs)

    def test_usp4_orbit(self):
        s = vg.FourierSeries.from_dict(2, {(1, 0): 1.0})
        avg = vg.weyl_average(G("USp4"), s)
        for m in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
            assert avg.coefficient(m) == pytest.approx(0.25)


class TestDecomposition:
    def test_constant(self):
        dec = vg.character_decomposition(G("SU2"), vg.FourierSeries.from_dict(1, {(0,): 0.7}))
        assert dec.delta == 0.7 and dec.coeffs == {}

    def test_standard_character(self):
        d = G("SU2")
        dec = vg.character_decomposition(d, vg.FourierSeries.from_dict(1, {(1,): 0.5, (-1,): 0.5}))
        assert dec.delta == 0
        assert dec.coeffs == {lc.Weight((1,), ()): 0.5}

    def test_cos_4pi(self):
        d = G("SU2")
        F = vg.FourierSeries.from_dict(1, {(2,): 0.5, (-2,): 0.5})
        dec = vg.character_decomposition(d, F)
        assert dec.delta == pytest.approx(-0.5)
        assert dec.coeffs == {lc.Weight((2,), ()): 0.5}
        th = np.random.default_rng(1).random((100, 1))
        assert np.allclose(dec.evaluate(th), vg.evaluate_series(F, th), atol=1e-12)

    def test_not_invariant(self):
        with pytest.raises(InvalidInputError):
            vg.character_decomposition(G("SU2"), vg.FourierSeries.from_dict(1, {(1,): 1.0}))

    @pytest.mark.parametrize("name,M", [("SU2", 60), ("U1", 30), ("USp4", 12), ("SU2xSU2", 10),
                                        ("SU2xU1", 10), ("U1_diag", 20)])
    def test_round_trip(self, name, M):
        d = G(name)
        I = st.IntervalQuery(-0.7, 1.1)
        p = vg.make_params(d, 0.2, d.q + d.phi - 1 or 1, M)
        F = vg.weyl_average(d, vg.smooth(vg.indicator_fourier(d, I, M), p))
        dec = vg.character_decomposition(d, F)
        th = np.random.default_rng(2).random((100, d.q))
        assert np.allclose(dec.evaluate(th), vg.evaluate_series(F, th), atol=1e-8)
        assert dec.virtual_dimension >= abs(dec.delta)

    @pytest.mark.parametrize("name,M", [("SU2", 400), ("U1", 400), ("USp4", 50), ("SU2xSU2", 50)])
    @pytest.mark.parametrize("Delta", [0.2, 0.1, 0.05])
    def test_delta_close_to_measure(self, name, M, Delta):
        d = G(name)
        I = st.IntervalQuery(-0.5, 1.0)
        p = vg.make_params(d, Delta, d.q + d.phi - 1 or 1, M)
        assert vg.delta_gap(d, I, p) <= 4 * Delta
