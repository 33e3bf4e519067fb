import math

import pytest

from povm_forge.tasks.eat import EatParams, eat_rate, g_eps, preset_params


def test_preset_values():
    p = preset_params()
    assert p.f_min(p.w_obs) == pytest.approx(3.022662, abs=1e-6)
    assert eat_rate(p).rate == pytest.approx(2.978664, abs=1e-5)


def test_default_alpha():
    p = preset_params(n_rounds=10_000)
    assert p.alpha == pytest.approx(1.01)


def test_rate_below_asymptotic():
    for n in (10**4, 10**5, 10**6, 10**8):
        res = eat_rate(preset_params(n_rounds=n))
        assert res.correction > 0
        assert res.rate < res.f_min_obs


def test_rate_approaches_asymptotic():
    rates = [eat_rate(preset_params(n_rounds=10**k)).rate for k in (5, 7, 9, 11)]
    assert all(b > a for a, b in zip(rates, rates[1:]))
    assert rates[-1] == pytest.approx(preset_params().f_min(0.2473), abs=1e-3)


def test_terms_add_up():
    res = eat_rate(preset_params())
    t = res.terms
    assert t["variance_term"] + t["epsilon_term"] + t["k_term"] == pytest.approx(res.correction)
    assert t["g"] == pytest.approx(-math.log2(1 - math.sqrt(1 - 1e-8)))


def test_g_eps_small_epsilon():
    # 1 - sqrt(1 - e^2) ~ e^2 / 2
    assert g_eps(1e-4) == pytest.approx(-math.log2(0.5e-8), rel=1e-6)


@pytest.mark.parametrize("bad", [dict(alpha=1.0), dict(alpha=2.5), dict(n_rounds=0),
                                 dict(epsilon=0.0), dict(prob_omega=0.0)])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        preset_params(**bad)


def test_explicit_alpha_used():
    p = EatParams(**{**preset_params().__dict__, "alpha": 1.001})
    assert eat_rate(p).terms["alpha"] == 1.001
