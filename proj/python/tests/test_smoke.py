import math
from fractions import Fraction

import pytest

import balab


def test_triple_collision():
    out = balab.resolve("1 1 R; 2 2 B; 3 3 L")
    assert len(out["collisions"]) == 1
    assert out["collisions"][0]["kind"] == "triple"
    assert out["survivors"] == []


def test_naive_agrees():
    text = "1 1 R; 2 2 L; 3 4 B; 4 5 R; 5 7 L; 6 8 L"
    assert balab.resolve(text) == balab.resolve(text, naive=True)


def test_parse_error():
    with pytest.raises(ValueError):
        balab.resolve("1 1 Q")


def test_first_visitor_probability():
    table = balab.enumerate_exact(3, "1/4", "1/2")
    assert Fraction(table["probabilities"]["sigma=1"]) == Fraction(3, 8)
    assert Fraction(table["probabilities"]["sigma=2"]) == 0


def test_truncated_q_one_particle():
    assert Fraction(balab.exact_truncated_q(1, "1/4", "1/2")) == Fraction(3, 8)


def test_F_symmetric():
    assert balab.eval_F_exact("1/3", "1/2") == "1/4"
    assert balab.eval_F(0.2, 0.5)["value"] == 0.25


def test_fluctuation_system():
    s = balab.solve_fluctuation_system(0.36, 0.5)
    assert s["feasible"]
    assert math.isclose(float(s["qLeft"]), 2 / 3, abs_tol=1e-10)


def test_estimate_q_one_particle():
    e = balab.estimate_q("left", 0.3, 0.4, n=1, trials=20000, seed=7)
    assert e["boundDirection"] == "LowerBound"
    assert abs(e["value"] - 0.42) <= 4 * e["stderr"]


def test_seeded_runs_repeat():
    a = balab.estimate_mean_z("left", 0.3, 0.5, k=4, trials=2000, seed=11)
    b = balab.estimate_mean_z("left", 0.3, 0.5, k=4, trials=2000, seed=11, workers=3)
    assert a == b
