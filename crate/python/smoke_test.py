"""Smoke test for the pysecbid extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python python/smoke_test.py` or `pytest python/smoke_test.py`.
"""

import math

import pysecbid as sb

I = 0.2


def test_families_and_utilities():
    debt = sb.SecurityFamily("debt")
    assert debt.name == "debt" and debt.bid_interval == (0.0, 1.0)
    assert debt.payoff(0.3, 0.5) == 0.3
    assert [f.name for f in sb.SecurityFamily.standard_set(1.0)] == ["cash", "debt", "equity", "call_option"]
    assert abs(sb.Utility.cara(2.0).evaluate(1.0) - (1 - math.exp(-2.0)) / 2.0) < 1e-15
    try:
        sb.Utility.cara(-1.0)
    except sb.SecbidError:
        pass
    else:
        raise AssertionError("negative risk aversion accepted")


def test_example1_bids_and_revenue():
    model = sb.Model.example1()
    assert abs(model.conditional_mean(0.5, 0.2) - (0.5 + 0.5 / 54)) < 1e-9
    auction = sb.Auction(model, sb.SecurityFamily("equity"), sb.Utility.linear(), I)
    curve = auction.bid_curve(101)
    assert len(curve) == 101 and curve.is_monotone()
    for y, b in zip(curve.signals, curve.bids):
        assert abs(b - (1 - I / (0.5 + y / 54))) < 1e-8
    revenue, error = auction.expected_revenue(curve)
    assert abs(revenue - 0.3099) < 5e-4 and error < 1e-6
    mc = auction.monte_carlo_revenue(curve, draws=200_000, seed=1)
    assert abs(mc["mean"] - revenue) < 4 * mc["std_error"]
    br = auction.best_response_gain(0.6, curve)
    assert br["gain"] <= 1e-6


def test_rank_and_checks():
    report = sb.rank(sb.Model.example1(), sb.Utility.linear(), sb.SecurityFamily.standard_set(1.0), investment=I)
    assert report["schema_version"] == 1
    assert report["ranking"] == ["debt", "equity", "call_option", "cash"]

    tilt = sb.Model.linear_tilt(2, 1.0)
    assert tilt.check_dependence("mlr", n=41)["verdict"]
    assert not sb.Model.example1().check_dependence("mlr", n=41)["verdict"]

    strong = sb.check_steepness(sb.SecurityFamily("call_option"), sb.SecurityFamily("debt"), "strong", 21, 201)
    assert not strong["verdict"] and strong["witnesses"]
    assert sb.check_steepness(sb.SecurityFamily("debt"), sb.SecurityFamily("cash"), "strong")["verdict"]

    gap = sb.example1_gap(0.8, 0.3, I)
    assert abs(gap - (-I / (0.5 + 0.3 / 54)) * 0.5 / 54) < 1e-9


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"{name} ok")
