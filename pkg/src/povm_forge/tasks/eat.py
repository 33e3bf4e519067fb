"""Finite-size randomness rate from an affine min-tradeoff function."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class EatParams:
    """Inputs of the finite-size bound.

    ``f_min(W) = c_m + r_tilde + s_tilde * W``.  ``alpha`` defaults to
    ``1 + 1/sqrt(n_rounds)``.  Logarithms are base 2 except where noted.
    """

    c_m: float
    r_tilde: float
    s_tilde: float
    w_obs: float
    var_w: float
    n_rounds: int
    epsilon: float
    d_a: int
    prob_omega: float
    alpha: float | None = None

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("number of rounds must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0.0 < self.prob_omega <= 1.0:
            raise ValueError("Pr[Omega] must lie in (0, 1]")
        if self.alpha is None:
            self.alpha = 1.0 + 1.0 / math.sqrt(self.n_rounds)
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"alpha = {self.alpha} outside (1, 2)")

    def f_min(self, w: float) -> float:
        return self.c_m + self.r_tilde + self.s_tilde * w


PRESET = dict(c_m=9.2305, r_tilde=-65.2748, s_tilde=238.8474, w_obs=0.24730, var_w=5e-5,
              n_rounds=1196436, epsilon=1e-4, d_a=4, prob_omega=0.2)


def preset_params(**overrides) -> EatParams:
    return EatParams(**{**PRESET, **overrides})


@dataclass
class EatResult:
    rate: float
    f_min_obs: float
    correction: float
    terms: dict = field(default_factory=dict)


def g_eps(epsilon: float) -> float:
    return -math.log2(1 - math.sqrt(1 - epsilon**2))


def eat_rate(p: EatParams) -> EatResult:
    """Per-round smooth min-entropy rate: ``f_min(W_obs)`` minus three correction terms."""
    a = p.alpha
    f_obs = p.f_min(p.w_obs)
    f_max = p.f_min(p.w_obs + p.var_w)
    f_lo = p.f_min(p.w_obs - p.var_w)
    var_f = p.s_tilde**2 * p.var_w
    v = math.log2(2 * p.d_a**2 + 1) + math.sqrt(2 + var_f)
    spread = 2 * math.log2(p.d_a) + f_max - f_lo
    k_prime = ((2 - a) ** 3 / (6 * (3 - 2 * a) ** 3 * math.log(2))
               * 2 ** ((a - 1) / (2 - a) * spread)
               * math.log(2**spread + math.e**2) ** 3)
    r = (a - 1) / (2 - a)
    t1 = r * math.log(2) / 2 * v**2
    t2 = (g_eps(p.epsilon) + a * math.log2(1 / p.prob_omega)) / (p.n_rounds * (a - 1))
    t3 = r**2 * k_prime
    corr = t1 + t2 + t3
    return EatResult(f_obs - corr, f_obs, corr,
                     dict(alpha=a, V=v, K_prime=k_prime, g=g_eps(p.epsilon), var_f=var_f,
                          f_max=f_max, f_min_low=f_lo, variance_term=t1, epsilon_term=t2,
                          k_term=t3))
