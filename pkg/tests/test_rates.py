import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssl_rate_lab.budgets import DEFAULT_EXP_CAP, UnlabeledBudget, parse_budget
from ssl_rate_lab.rates import FitError, fit_rate, loglog_fit

ELLS = [2**k for k in range(2, 11)]


class TestFitRate:
    def test_inverse_sqrt(self):
        s = fit_rate([(e, 1 / math.sqrt(e)) for e in ELLS])
        assert s.fitted_slope == pytest.approx(-0.5, abs=1e-12)
        assert s.residual == pytest.approx(0.0, abs=1e-12)
        assert s.band[0] == pytest.approx(s.band[1], abs=1e-10)

    def test_inverse_linear(self):
        s = fit_rate([(e, 3 / e) for e in ELLS])
        assert s.fitted_slope == pytest.approx(-1.0, abs=1e-12)
        assert math.exp(s.intercept) == pytest.approx(3.0)

    def test_super_polynomial(self):
        assert fit_rate([(e, math.exp(-e)) for e in range(2, 20, 2)]).super_polynomial
        assert not fit_rate([(e, 1 / e) for e in ELLS]).super_polynomial

    def test_drops_smallest_third(self):
        s = fit_rate([(e, 1 / e) for e in ELLS])
        assert s.fit_window == (3, len(ELLS))

    def test_window_floor(self):
        s = fit_rate([(2, 0.5), (4, 0.25), (8, 0.125)])
        assert s.fit_window == (0, 3)

    def test_too_few(self):
        with pytest.raises(FitError):
            fit_rate([(1, 1.0), (2, 0.5)])

    def test_nonpositive_rejected(self):
        with pytest.raises(FitError):
            fit_rate([(1, 1.0), (2, 0.0), (4, 0.0), (8, 0.0)])

    @given(st.floats(-3, -0.1), st.floats(0.1, 10))
    def test_recovers_power_law(self, a, c):
        assert fit_rate([(e, c * e**a) for e in ELLS]).fitted_slope == pytest.approx(a, abs=1e-9)

    def test_loglog_needs_two(self):
        with pytest.raises(FitError):
            loglog_fit([1], [1])


class TestBudgets:
    @pytest.mark.parametrize("text,ell,u", [
        ("zero", 10, 0), ("linear:2", 10, 20), ("linear:0.5", 9, 4), ("linear", 7, 7),
        ("square", 10, 100), ("quartic", 10, 10**4), ("exp", 3, math.floor(math.exp(3))),
    ])
    def test_values(self, text, ell, u):
        assert parse_budget(text)(ell) == u

    def test_exp_cap(self):
        b = parse_budget("exp")
        assert b(100) == DEFAULT_EXP_CAP
        assert b.capped(100) and not b.capped(5)
        assert parse_budget("exp:1000")(10) == 1000

    def test_monotone(self):
        for text in ("zero", "linear:3", "square", "quartic", "exp"):
            b = parse_budget(text)
            vals = [b(e) for e in range(0, 40)]
            assert all(y >= x for x, y in zip(vals, vals[1:]))

    @pytest.mark.parametrize("text", ["cubic", "linear:x", "square:2", "linear:-1", "exp:0"])
    def test_errors(self, text):
        with pytest.raises(ValueError):
            parse_budget(text)

    def test_labels(self):
        assert parse_budget("linear:2").label == "linear:2"
        assert UnlabeledBudget("exponential", cap=50).label == "exp:50"
        assert np.isscalar(parse_budget("square")(3))
