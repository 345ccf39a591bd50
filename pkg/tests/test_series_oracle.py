from fractions import Fraction

import pytest

from ellf.path_space import classify
from ellf.series_oracle import (
    TruncatedSeries, compare, dp_weight_series, enumerate_paths, expand_closed_form,
    lerw_outcome_series, series_arith, verify_target, _v_exponent, _w_exponent,
)

U_GRID = [Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2)]


def test_series_arithmetic():
    L = 8
    one_minus_x = TruncatedSeries([1, -1], L)
    geo = TruncatedSeries([1] * (L + 1), L)
    assert series_arith("mul", one_minus_x, geo).c == [1] + [0] * L
    assert series_arith("div", TruncatedSeries([1], L), one_minus_x).c == geo.c
    assert series_arith("add", geo, -geo).c == [0] * (L + 1)
    with pytest.raises(ZeroDivisionError):
        TruncatedSeries([1], L) / TruncatedSeries([0, 1], L)
    with pytest.raises(ValueError):
        series_arith("pow", geo, geo)
    x = TruncatedSeries.variable(L)
    g = x / (1 - x)
    assert (1 / (1 - x)).compose(x * x).c == [1, 0, 1, 0, 1, 0, 1, 0, 1]
    assert g[3] == 1 and (x ** 3)[3] == 1


def test_expand_phi():
    for u in U_GRID:
        s = expand_closed_form("phi", u, 6)
        assert s[0] == 0 and s[1] == 0 and s[2] == 1 and s[3] == 1 + 2 * u
    assert series_arith("expand_closed_form", "Phi", 1, 3).c[2:] == [1, 3]
    assert expand_closed_form("xi", Fraction(1, 2), 4)[2] == 1
    with pytest.raises(ValueError):
        expand_closed_form("nope", 1, 3)


def test_dp_examples():
    u = Fraction(1, 3)
    w = dp_weight_series("W1", 5, u)
    assert w[2] == 1 and w[3] == 1 + 2 * u
    assert dp_weight_series("U1_half", 4, u)[2] == 2 * u
    for fam in ("W1", "V1", "U1_half"):
        assert all(c >= 0 for c in dp_weight_series(fam, 20, u).c)
    with pytest.raises(ValueError):
        dp_weight_series("X1", 5, u)
    with pytest.raises(ValueError):
        dp_weight_series("W1", 65, u)


def test_enumeration_counts():
    by_len = {}
    for vs in enumerate_paths("W1", 6):
        by_len[len(vs) - 1] = by_len.get(len(vs) - 1, 0) + 1
    assert by_len[2] == 1 and by_len[3] == 3
    seen = set()
    for fam, kinds in (("W1", {"W", "Gamma"}), ("V1", {"V", "Gamma"})):
        for vs in enumerate_paths(fam, 8):
            assert classify(vs, 1).kind in kinds
            assert vs not in seen
            seen.add(vs)
    with pytest.raises(MemoryError):
        list(enumerate_paths("W1", 15))


@pytest.mark.parametrize("fam,expo", [("W1", _w_exponent), ("V1", _v_exponent)])
def test_dp_matches_enumeration(fam, expo):
    L = 12
    u = Fraction(1, 2)
    c = [Fraction(0)] * (L + 1)
    for vs in enumerate_paths(fam, L):
        c[len(vs) - 1] += u ** expo(vs)
    assert compare(dp_weight_series(fam, L, u), TruncatedSeries(c, L, u)).equal


def test_lerw_outcome_examples():
    u = Fraction(1, 2)
    s = lerw_outcome_series(8, u)
    for i in (7, 8, 9):
        assert s["p"][i].c == [0] * 9
    assert s["p"][0][0] == 0 and s["p"][0][1] == 1
    phi_over_x = TruncatedSeries(dp_weight_series("W1", 9, u).c[1:], 8, u)
    total = s["p"][0]
    for t in s["p"][1:]:
        total = total + t
    assert compare(total, phi_over_x).equal
    with pytest.raises(MemoryError):
        lerw_outcome_series(13, u)


@pytest.mark.parametrize("u", U_GRID)
def test_sum_identities_as_series(u):
    L = 10
    s = lerw_outcome_series(L, u)
    r = expand_closed_form("phi", u, L + 1)
    r = TruncatedSeries(r.c[1:], L, u)
    sp, sq = s["p"][0], s["q"][0]
    for i in range(1, 10):
        sp, sq = sp + s["p"][i], sq + s["q"][i]
    assert compare(sp, r).equal
    assert compare(sq, r * r).equal


def test_compare_reports_first_mismatch():
    a = TruncatedSeries([1, 2, 3, 4], 3)
    b = TruncatedSeries([1, 2, 5, 4], 3)
    rep = compare(a, b)
    assert not rep.equal and rep.first_mismatch == 2
    assert compare(a, a).to_dict() == {"equal": True, "first_mismatch": None, "L": 3}
    with pytest.raises(ValueError):
        compare(TruncatedSeries([1], 2, Fraction(1)), TruncatedSeries([1], 2, Fraction(2)))


def test_printed_q2_fails_oracle():
    u = Fraction(1, 2)
    enum = lerw_outcome_series(10, u)["q"][1]
    assert compare(enum, expand_closed_form("q2", u, 10)).equal
    rep = compare(enum, expand_closed_form("q2_printed", u, 10))
    assert not rep.equal


def test_verify_target():
    rows = verify_target("phi", "1/2", 20)
    assert rows[0]["status"] == "equal" and rows[0]["first_mismatch"] is None
    rows = verify_target("q", 1, 8)
    assert len(rows) == 10 and all(r["status"] == "equal" for r in rows)
    with pytest.raises(ValueError):
        verify_target("zeta", 1, 5)
