import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst
from scipy import integrate

from satotate import analytics as an
from satotate import frobenius as fr
from satotate import lie_core as lc
from satotate import st_group as st
from satotate.errors import InsufficientDataError, InvalidInputError, UnsupportedError

from conftest import trivial_multiplicity

G = st.catalog_lookup
E11, ECM = fr.curve_lookup("11a1"), fr.curve_lookup("y^2=x^3-x")


@pytest.fixture(scope="module")
def seq11():
    return fr.trace_sequence(E11, 20000)


@pytest.fixture(scope="module")
def seq_cm():
    return fr.trace_sequence(ECM, 10**5)


def W(*coords):
    return lc.Weight(tuple(coords), ())


class TestLi:
    @pytest.mark.parametrize("x", [2.5, 10.0, 1e3, 1e6])
    def test_against_quadrature(self, x):
        ref = integrate.quad(lambda t: 1 / math.log(t), 2, x, limit=200)[0]
        assert an.li(x) == pytest.approx(ref, rel=1e-10)

    def test_values(self):
        assert an.li(2) == 0
        assert an.li(1e6) == pytest.approx(78626.50399568, rel=1e-11)
        with pytest.raises(InvalidInputError):
            an.li(1.5)


class TestCounting:
    def test_interval_count_brute_force(self, seq11):
        I = st.IntervalQuery(-0.3, 1.1)
        for x in (100, 1234.5, 20000):
            ref = sum(1 for p, a in zip(seq11.norms, seq11.a) if p <= x and -0.3 <= a / math.sqrt(p) <= 1.1)
            assert an.interval_count(seq11, I, x) == ref

    def test_closed_endpoints(self):
        s = fr.TraceSequence("t", 1, (), [3, 5, 7], [0, 2, -1], 7)
        assert an.interval_count(s, st.IntervalQuery(0, 1), 7) == 2
        assert an.interval_count(s, st.IntervalQuery(-2, 0), 7) == 2

    def test_complement(self, seq11):
        x = 20000
        lo = an.interval_count(seq11, st.IntervalQuery(-2, 0.5), x)
        hi = an.interval_count(seq11, st.IntervalQuery(0.5, 2), x)
        on = int(np.count_nonzero(seq11.abar == 0.5))
        assert lo + hi - on == len(seq11)

    def test_monotone_and_additive(self, seq11):
        a, b = st.IntervalQuery(-1, 0.2), st.IntervalQuery(0.2, 1.5)
        both = st.IntervalQuery(-1, 1.5)
        on = int(np.count_nonzero(seq11.abar == 0.2))
        counts = [an.interval_count(seq11, both, x) for x in (100, 1000, 10000)]
        assert counts == sorted(counts)
        assert an.interval_count(seq11, a, 10000) + an.interval_count(seq11, b, 10000) - on == counts[-1]

    def test_complement_errors(self, seq11):
        d = G("SU2")
        x = [1e3, 2e4]
        inner = an.effective_st_report(seq11, d, st.IntervalQuery(-2, 0.7), x)
        outer = an.effective_st_report(seq11, d, st.IntervalQuery(0.7, 2), x)
        full = an.effective_st_report(seq11, d, st.IntervalQuery(-2, 2), x)
        for r1, r2, r3 in zip(inner.rows, outer.rows, full.rows):
            assert r1["error"] + r2["error"] == pytest.approx(r3["error"], abs=1e-6)
            assert r3["observed"] == an.character_sum(seq11, an.CharacterSpec("trivial"), r3["x"])

    def test_beyond_data(self, seq11):
        with pytest.raises(InsufficientDataError):
            an.interval_count(seq11, st.IntervalQuery(0, 1), 30000)

    def test_report(self, seq11):
        rep = an.effective_st_report(seq11, G("SU2"), st.IntervalQuery(-1, 1), [1e3, 1e4, 2e4])
        assert rep.column("x") == [1e3, 1e4, 2e4]
        for r in rep.rows:
            assert r["error"] == r["observed"] - r["main_term"]
            assert r["main_term"] == pytest.approx(r["li"] * st.measure_interval(G("SU2"), st.IntervalQuery(-1, 1)))
        assert rep.verdicts["within_envelope"]
        with pytest.raises(InvalidInputError):
            an.effective_st_report(seq11, G("SU2"), st.IntervalQuery(-1, 1), [1e4, 1e3])

    def test_envelope(self):
        assert an.st_envelope(0.25, 1e6, 11) == pytest.approx(1e6**0.75 * math.log(11e6) ** 0.5)


class TestLinnik:
    def test_first_hit(self, seq11):
        norm, bound = an.linnik_interval_search(seq11, st.IntervalQuery(0.4, 0.5), G("SU2"))
        ab = seq11.abar
        assert norm == next(int(p) for p, v in zip(seq11.norms, ab) if 0.4 <= v <= 0.5)
        assert norm == 5
        assert bound > norm

    def test_no_hit(self):
        s = fr.TraceSequence("t", 1, (), [3, 5], [0, 0], 5)
        assert an.linnik_interval_search(s, st.IntervalQuery(1, 2)) == (None, None)


class TestSign:
    @given(a=hst.floats(-1.99, 1.99), b=hst.floats(-1.99, 1.99))
    def test_psi_sign(self, a, b):
        if abs(a) < 1e-6 or abs(b) < 1e-6:
            return
        assert (an.psi_value(a, b) > 0) == (a * b < 0)

    def test_psi_sign_bulk(self):
        rng = np.random.default_rng(11)
        a, b = rng.uniform(-2, 2, 10**5), rng.uniform(-4, 4, 10**5)
        keep = (np.abs(a) > 1e-9) & (np.abs(b) > 1e-9) & (np.abs(a) < 2) & (np.abs(b) < 4)
        vals = an.psi_value(a[keep], b[keep], 1, 2)
        assert np.array_equal(vals > 0, a[keep] * b[keep] < 0)

    def test_example(self, seq11):
        other = fr.trace_sequence(fr.curve_lookup("37a1"), 1000)
        norm, bound = an.sign_search(seq11, other)
        assert norm == 5
        assert bound == pytest.approx(math.log(2 * 11 * 37) ** 2)

    def test_synthetic_twist(self, seq11):
        # twisting by the character mod 4 flips the sign at p = 3 mod 4
        s = seq11.upto(5000)
        flip = np.where(s.norms % 4 == 3, -1, 1)
        twist = fr.TraceSequence("tw", 1, s.bad_norms + (2,), s.norms[s.norms != 2],
                                 (s.a * flip)[s.norms != 2], s.max_norm)
        expect = next(int(p) for p, a in zip(s.norms, s.a) if p % 4 == 3 and a != 0)
        assert an.sign_search(s, twist)[0] == expect

    def test_same_curve_never(self, seq11):
        assert an.sign_search(seq11, seq11)[0] is None

    def test_disjoint(self):
        a = fr.TraceSequence("a", 1, (), [3], [1], 3)
        b = fr.TraceSequence("b", 1, (), [5], [1], 5)
        with pytest.raises(InsufficientDataError):
            an.sign_search(a, b)


class TestCharacters:
    def test_spec_validation(self):
        with pytest.raises(InvalidInputError):
            an.CharacterSpec("cubic")
        with pytest.raises(InvalidInputError):
            an.CharacterSpec("irreducible", G("SU2"))
        with pytest.raises(UnsupportedError):
            an.CharacterSpec("irreducible", G("U1_diag"), lc.Weight((), (1,)))
        with pytest.raises(InvalidInputError):
            an.CharacterSpec("psi_pair", G("SU2"))

    def test_su2_values(self, seq11):
        std = an.CharacterSpec("irreducible", G("SU2"), W(1))
        sym2 = an.CharacterSpec("irreducible", G("SU2"), W(2))
        _, v1 = an.character_values(seq11, std, 20000)
        _, v2 = an.character_values(seq11, sym2, 20000)
        assert np.allclose(v1, seq11.abar, atol=1e-12)
        assert np.allclose(v2, seq11.abar**2 - 1, atol=1e-12)

    def test_trivial_sum_is_count(self, seq11):
        assert an.character_sum(seq11, an.CharacterSpec("trivial"), 10000) == len(seq11.upto(10000))

    @pytest.mark.parametrize("name,weight,expected", [
        ("SU2", (1,), -1.0),
        ("SU2", (2,), 1.0),
        ("USp4", (1, 0), -1.0),
        ("USp4", (0, 1), 1.0),
        ("USp4", (2, 0), 1.0),
        ("SU2xSU2", (1, 1), 1.0),
    ])
    def test_squared_delta_is_frobenius_schur(self, name, weight, expected):
        assert an.CharacterSpec("squared", G(name), W(*weight)).delta() == pytest.approx(expected, abs=1e-9)

    def test_irreducible_delta(self):
        assert an.CharacterSpec("irreducible", G("USp4"), W(0, 0)).delta() == 1
        assert an.CharacterSpec("irreducible", G("USp4"), W(1, 0)).delta() == 0

    def test_delta_psi(self):
        assert an.delta_psi(G("SU2"), G("SU2")) == pytest.approx(1, abs=1e-7)
        assert an.delta_psi(G("U1"), G("U1")) == pytest.approx(4, abs=1e-7)
        assert an.delta_psi(G("USp4"), G("USp4")) == pytest.approx(1, abs=1e-7)

    @pytest.mark.parametrize("label", ["A1", "C2"])
    def test_delta_psi_against_lie_counts(self, label):
        rs = lc.root_system(label)
        name = {"A1": "SU2", "C2": "USp4"}[label]
        g = G(name).g
        m1, m2 = trivial_multiplicity(rs, 1), trivial_multiplicity(rs, 2)
        assert an.delta_psi(G(name), G(name)) == pytest.approx((-2 * g * m1 + m2) * (2 * g * m1 + m2), abs=1e-9)

    def test_report(self, seq11):
        std = an.CharacterSpec("irreducible", G("SU2"), W(1))
        rep = an.character_report(seq11, std, [1e3, 1e4])
        assert rep.parameters["delta"] == 0
        assert rep.verdicts["within_envelope"]
        assert rep.parameters["motivic_weight"] == 1

    def test_angles_from_local_factors(self, seq11):
        s = seq11.upto(500)
        lp = np.stack([-s.abar, np.ones(len(s))], axis=1)
        withlp = fr.TraceSequence(s.label, 1, s.bad_norms, s.norms, s.a, s.max_norm, lp)
        std = an.CharacterSpec("irreducible", G("SU2"), W(3))
        assert np.allclose(an.character_values(withlp, std, 500)[1], an.character_values(s, std, 500)[1])


class TestBach:
    def test_brute_force(self, seq11):
        x = 5000.0
        ref = sum(math.log(p) * (p / x) ** 0.25 * math.log(x / p) for p in seq11.norms.tolist() if p <= x)
        triv = an.CharacterSpec("trivial")
        assert an.bach_sum(seq11, triv, x) == pytest.approx(ref, rel=1e-12)
        sq = sum(math.log(p) * (p * p / x) ** 0.25 * math.log(x / (p * p))
                 for p in seq11.norms.tolist() if p * p <= x)
        assert an.bach_sum(seq11, triv, x, include_squares=True) == pytest.approx(ref + sq, rel=1e-12)

    def test_irreducible_with_squares(self, seq11):
        x = 5000.0
        std = an.CharacterSpec("irreducible", G("SU2"), W(1))
        base = sum(a / math.sqrt(p) * math.log(p) * (p / x) ** 0.25 * math.log(x / p)
                   for p, a in zip(seq11.norms.tolist(), seq11.a.tolist()) if p <= x)
        sq = sum((a * a / p - 2) * math.log(p) * (p * p / x) ** 0.25 * math.log(x / (p * p))
                 for p, a in zip(seq11.norms.tolist(), seq11.a.tolist()) if p * p <= x)
        assert an.bach_sum(seq11, std, x, include_squares=True) == pytest.approx(base + sq, rel=1e-9)

    def test_trivial_positive_and_increasing(self, seq11):
        triv = an.CharacterSpec("trivial")
        vals = [an.bach_sum(seq11, triv, x) for x in (10.0, 100.0, 1000.0, 20000.0)]
        assert vals[0] >= 0 and vals == sorted(vals)

    def test_empty(self):
        s = fr.TraceSequence("t", 1, (2,), [3], [0], 10)
        assert an.bach_sum(s, an.CharacterSpec("trivial"), 2.5) == 0.0

    def test_main_term(self, seq11):
        x = 20000.0
        ratio = an.bach_sum(seq11, an.CharacterSpec("trivial"), x) / x
        assert 0.55 <= ratio <= 0.7

    def test_psi_pair(self, seq11):
        other = fr.trace_sequence(fr.curve_lookup("37a1"), 1000)
        psi = an.CharacterSpec("psi_pair", G("SU2"), desc2=G("SU2"))
        assert an.bach_sum(seq11, psi, 1000, other=other) > 0
        with pytest.raises(InvalidInputError):
            an.bach_sum(seq11, psi, 1000)
        with pytest.raises(UnsupportedError):
            an.bach_sum(seq11, psi, 1000, other=other, include_squares=True)


class TestMaxTrace:
    def test_brute_force(self, seq_cm):
        rep = an.max_trace_stats(seq_cm, [1e3, 1e4, 1e5])
        for row in rep.rows:
            x = row["x"]
            ps = [(p, a) for p, a in zip(seq_cm.norms.tolist(), seq_cm.a.tolist()) if p <= x]
            assert row["observed"] == sum(1 for p, a in ps if a == math.isqrt(4 * p))
            assert row["R"] == sum(1 for p, a in ps if 2 - a / math.sqrt(p) < x**-0.5)
            assert row["R"] <= row["observed"] <= row["partition_bound"]
        assert rep.verdicts["sandwich"]

    def test_isqrt(self):
        n = np.array([0, 1, 3, 4, 15, 16, 4 * (10**8 + 7), 2**62 - 1], dtype=np.int64)
        assert an._isqrt_array(n).tolist() == [math.isqrt(int(v)) for v in n]

    def test_genus_check(self):
        s = fr.TraceSequence("t", 2, (), [3], [0], 3)
        with pytest.raises(InvalidInputError):
            an.max_trace_stats(s, [3])


class TestMoments:
    def test_values(self, seq11):
        assert an.empirical_moment(seq11, 0, 20000) == 1
        assert an.empirical_moment(seq11, 2, 20000) == pytest.approx(1, abs=0.03)
        assert an.empirical_moment(seq11, 4, 20000) == pytest.approx(2, abs=0.1)
        with pytest.raises(InvalidInputError):
            an.empirical_moment(seq11, 9, 20000)


class TestReport:
    def test_serialization(self):
        rep = an.AnalysisReport("demo", {"a": 1 / 3})
        rep.add_row(10, 4, 3.0, 0.5, flag=True)
        rep.add_row(20, 5, math.pi, 0.0)
        csv_text = rep.to_csv().splitlines()
        assert csv_text[0] == "x,observed,main_term,error,normalized_error,envelope,flag"
        assert csv_text[1] == "10,4,3,1,2,0.5,true"
        assert csv_text[2].split(",")[2] == "3.14159265359"
        doc = json.loads(rep.to_json())
        assert doc["schema"] == an.REPORT_SCHEMA
        assert doc["parameters"]["a"] == 0.333333333333
