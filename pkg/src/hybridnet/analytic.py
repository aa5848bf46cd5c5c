"""Closed forms for mean received power, power-outage bounds and scale constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

from hybridnet.errors import BoundInapplicableError, DivergentIntegralError, DomainError, InvalidParameterError

MODES = ("isotropic", "directed")

# Continued fraction settings for the large-argument branch.
_CF_TINY = 1e-300
_CF_EPS = 1e-16
_CF_MAX_ITER = 10_000


@dataclass(frozen=True)
class AnalyticValue:
    """A closed-form result tagged with the formula that produced it."""

    value: float
    formula_id: str

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise DomainError(f"{self.formula_id} produced {self.value}")

    def __float__(self):
        return self.value


def _check_beta(beta):
    if not beta > 2:
        raise DivergentIntegralError(f"mean power diverges for beta={beta} <= 2")


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not (v >= 0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")


def _check_pos(**kw):
    for name, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")


def _gamma_cf(a: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for the scaled Gamma(a, x); x >~ 1.
    b = x + 1.0 - a
    c = 1.0 / _CF_TINY
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = b + an / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return h


def _check_gamma_args(a: float, x: float):
    if math.isnan(a) or math.isnan(x):
        raise DomainError("upper_incomplete_gamma got NaN")
    if x < 0 or (x == 0 and a <= 0):
        raise DomainError(f"upper_incomplete_gamma undefined for a={a}, x={x}")


def scaled_upper_gamma(a: float, x: float) -> float:
    """``x**-a * exp(x) * Gamma(a, x)`` for ``x > 0``.

    Stays finite for tiny ``x`` when ``a <= 1``, where Gamma(a, x) itself can overflow.
    """
    a = float(a)
    x = float(x)
    _check_gamma_args(a, x)
    if x == 0 or math.isinf(x):
        raise DomainError(f"scaled_upper_gamma needs 0 < x < inf, got {x}")
    if x >= max(1.0, a + 1.0):
        return _gamma_cf(a, x)
    if a > 0:
        return float(special.gammaincc(a, x) * special.gamma(a)) * math.exp(x - a * math.log(x))
    # Lift the shape to a positive value (or to 0 for integer shapes) and recur down:
    # Gamma(s, x) = (Gamma(s + 1, x) - x**s * exp(-x)) / s, which in scaled form is
    # G(s) = (x * G(s + 1) - 1) / s.
    n = math.ceil(-a)
    if a == -n:
        s = 0.0
        g = float(special.exp1(x)) * math.exp(x)
    else:
        s = a + n
        g = float(special.gammaincc(s, x) * special.gamma(s)) * math.exp(x - s * math.log(x))
    while s > a + 0.5:
        s -= 1.0
        g = (x * g - 1.0) / s
    return g


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Upper incomplete gamma function, the integral of t**(a-1) * exp(-t) over [x, inf).

    Unlike ``scipy.special.gammaincc`` the shape ``a`` may be zero or negative.

    Args:
        a: Shape, any real number.
        x: Lower integration limit; must be positive unless ``a > 0``.

    Returns:
        The integral value.
    """
    a = float(a)
    x = float(x)
    _check_gamma_args(a, x)
    if x == 0:
        return math.gamma(a)
    if math.isinf(x):
        return 0.0
    if a > 0 and x < max(1.0, a + 1.0):
        return float(special.gammaincc(a, x) * special.gamma(a))
    return math.exp(a * math.log(x) - x) * scaled_upper_gamma(a, x)


def mean_power_isotropic(q: float, lambda_p: float, nu: float, beta: float) -> float:
    """Mean raw power at a mobile when every beacon radiates isotropically."""
    _check_beta(beta)
    _check_nonneg(q=q, lambda_p=lambda_p)
    _check_pos(nu=nu)
    return math.pi * beta * nu ** (2 - beta) * q * lambda_p / (beta - 2)


def psi(lambda_p: float, nu: float, beta: float) -> float:
    """Mean cut-off gain ``E[max(D, nu)**-beta]`` to the nearest beacon at distance D."""
    _check_beta(beta)
    _check_nonneg(lambda_p=lambda_p)
    _check_pos(nu=nu)
    if lambda_p == 0:
        return 0.0
    x = math.pi * lambda_p * nu * nu
    near = nu ** -beta * -math.expm1(-x)
    # (pi lambda_p)**(beta/2) Gamma(1 - beta/2, x), written so tiny x cannot overflow
    far = nu ** -beta * x * math.exp(-x) * scaled_upper_gamma(1 - beta / 2, x) if x < 700 else 0.0
    return near + far


def mean_power_directed(q: float, lambda_p: float, nu: float, beta: float,
                        z_m: float, z_s: float) -> float:
    """Mean raw power when the nearest beacon beams its main lobe at the mobile."""
    if not z_m >= z_s >= 0:
        raise InvalidParameterError(f"need z_m >= z_s >= 0, got z_m={z_m}, z_s={z_s}")
    near = psi(lambda_p, nu, beta)
    total = mean_power_isotropic(1.0, lambda_p, nu, beta)
    if z_m == z_s:
        return z_m * q * total
    return z_m * q * near + z_s * q * (total - near)


def power_outage_bound(p: float, q: float, lambda_p: float, beta: float, nu: float,
                       mode: str = "isotropic", z_m: float = 1.0) -> float:
    """Upper bound on Pr(raw power < p) from the nearest beacon alone.

    Valid only when the nearest beacon at the cut-off distance already delivers
    at least ``p``, i.e. ``q * nu**-beta >= p`` (times ``z_m`` when directed).
    """
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")
    _check_pos(p=p)
    _check_nonneg(q=q, lambda_p=lambda_p)
    gain = z_m if mode == "directed" else 1.0
    peak = gain * q * nu ** -beta
    if peak < p:
        raise BoundInapplicableError(
            f"bound needs {'z_m*' if mode == 'directed' else ''}q*nu**-beta >= p "
            f"({peak:.6g} < {p:.6g})")
    return math.exp(-math.pi * lambda_p * (gain * q / p) ** (2 / beta))


def mu_tilde(p_b: float, eta: float, alpha: float) -> float:
    """Interference-limited threshold from the received-signal constraint."""
    if not 0 < eta < 1:
        raise DomainError(f"eta must lie in (0, 1), got {eta}")
    _check_pos(p_b=p_b, alpha=alpha)
    return (2 * math.pi / math.log(1 / eta)) ** (alpha / 2) / p_b


def kappa(omega: float, sigma2: float, nu: float, beta: float, mu: float) -> float:
    """Composite constant ``omega * sigma2 * nu**beta / mu``."""
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    _check_nonneg(omega=omega, sigma2=sigma2)
    return omega * sigma2 * nu ** beta / mu


def nearest_distance_ccdf(lam: float, r: float) -> float:
    """Pr(nearest point of a PPP with density ``lam`` is farther than ``r``)."""
    _check_nonneg(lam=lam, r=r)
    return math.exp(-math.pi * lam * r * r)


FORMULAS = {
    "mean_power_isotropic": mean_power_isotropic,
    "mean_power_directed": mean_power_directed,
    "psi": psi,
    "power_outage_bound": power_outage_bound,
    "mu_tilde": mu_tilde,
    "kappa": kappa,
    "nearest_distance_ccdf": nearest_distance_ccdf,
}


def evaluate(formula_id: str, **kwargs) -> AnalyticValue:
    """Evaluate a named closed form and wrap the result."""
    try:
        fn = FORMULAS[formula_id]
    except KeyError:
        raise InvalidParameterError(f"unknown formula {formula_id!r}") from None
    return AnalyticValue(fn(**kwargs), formula_id)
