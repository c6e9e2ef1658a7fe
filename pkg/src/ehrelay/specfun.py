"""Special functions backing the closed-form outage expressions.

Both routines are evaluated from series with explicit truncation
control, so every returned value carries a known absolute error bound
instead of inheriting whatever a black-box library happens to provide.
Probability outputs are clamped to [0, 1] after convergence: the
battery transition matrix built downstream needs rows that sum to one
within tight tolerance and must not inherit last-ulp drift.
"""

import math
import operator
from dataclasses import dataclass

from .errors import NumericalError, ValidationError

__all__ = ["Tolerance", "DEFAULT_TOL", "marcum_q", "lower_incomplete_gamma"]


@dataclass(frozen=True)
class Tolerance:
    """Truncation control for the series evaluations in this module."""

    abs_tol: float = 1e-12  # bound on the neglected series tail
    max_terms: int = 10000  # iteration cap before declaring non-convergence

    def __post_init__(self):
        if not self.abs_tol > 0.0:
            raise ValidationError(f"abs_tol must be > 0, got {self.abs_tol!r}")
        if self.max_terms < 1:
            raise ValidationError(f"max_terms must be >= 1, got {self.max_terms!r}")


DEFAULT_TOL = Tolerance()


def _log_poisson_pmf(n: int, mu: float) -> float:
    # log of exp(-mu) mu^n / n!  for mu > 0
    return -mu + n * math.log(mu) - math.lgamma(n + 1.0)


def _poisson_cdf(k: int, mu: float) -> float:
    """Pr{Poisson(mu) <= k}, accurate in absolute terms for any mu >= 0.

    Summation starts at min(k, floor(mu)) so the largest term is visited
    first; far-tail terms below the 1e-20 cutoff contribute nothing at
    the accuracy this module targets.
    """
    if k < 0:
        return 0.0
    if mu <= 0.0:
        return 1.0
    start = min(k, int(mu))
    head = math.exp(_log_poisson_pmf(start, mu))
    total = head
    term, j = head, start
    while j > 0 and term > 1e-20:
        term *= j / mu
        j -= 1
        total += term
    term, j = head, start
    while j < k and term > 1e-20:
        j += 1
        term *= mu / j
        total += term
    return min(total, 1.0)


def marcum_q(order: int, a: float, b: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Generalized Marcum Q-function Q_order(a, b).

    Equals the upper tail at b^2 of a noncentral chi-square law with
    2*order degrees of freedom and noncentrality a^2. Evaluated as a
    Poisson mixture of central chi-square tails,

        Q_N(a, b) = sum_n pois(n; a^2/2) * Pr{chi2_{2(N+n)} > b^2},

    accumulated outward from the Poisson mode. Because every chi-square
    factor lies in [0, 1], the unaccounted Poisson mass bounds the
    neglected tail; iteration stops once that mass drops below
    tol.abs_tol. Working from the mode keeps the evaluation in range
    for arguments far beyond the overflow point of the Bessel series
    form.

    Raises ValidationError for order < 1 or negative/NaN arguments and
    NumericalError if the mass bound is not met within tol.max_terms.
    """
    try:
        order = operator.index(order)
    except TypeError:
        raise ValidationError(f"order must be an integer, got {order!r}") from None
    if order < 1:
        raise ValidationError(f"order must be >= 1, got {order}")
    a = float(a)
    b = float(b)
    if not a >= 0.0 or not b >= 0.0:
        raise ValidationError(f"arguments must be nonnegative, got a={a!r}, b={b!r}")
    if b == 0.0:
        return 1.0
    lam = 0.5 * a * a  # Poisson mean of the mixture
    x = 0.5 * b * b
    if lam == 0.0:
        return min(1.0, max(0.0, _poisson_cdf(order - 1, x)))

    n0 = int(lam)
    p0 = math.exp(_log_poisson_pmf(n0, lam))
    g0 = _poisson_cdf(order - 1 + n0, x)
    total = p0 * g0
    weight = p0

    # chi-square tails G_n = Pr{Poisson(x) <= order-1+n} are updated
    # incrementally in both directions from n0
    p_hi, g_hi, n_hi = p0, g0, n0
    t_hi = math.exp(_log_poisson_pmf(order + n0, x))
    p_lo, g_lo, n_lo = p0, g0, n0
    t_lo = math.exp(_log_poisson_pmf(order - 1 + n0, x))

    for _ in range(tol.max_terms):
        if 1.0 - weight < tol.abs_tol:
            return min(1.0, max(0.0, total))
        n_hi += 1
        p_hi *= lam / n_hi
        g_hi = min(g_hi + t_hi, 1.0)
        t_hi *= x / (order + n_hi)
        total += p_hi * g_hi
        weight += p_hi
        if n_lo > 0:
            p_lo *= n_lo / lam
            g_lo = max(g_lo - t_lo, 0.0)
            t_lo *= (order - 1 + n_lo) / x
            n_lo -= 1
            total += p_lo * g_lo
            weight += p_lo
    raise NumericalError(
        f"marcum_q(order={order}, a={a}, b={b}) did not reach the tail bound "
        f"{tol.abs_tol} within {tol.max_terms} terms"
    )


def lower_incomplete_gamma(alpha: float, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Lower incomplete gamma integral of exp(-t) t^(alpha-1) over [0, x].

    Uses the standard split: power series for x < alpha + 1, Lentz
    continued fraction for the complementary integral otherwise. Both
    converge to near machine precision well before tol.max_terms for
    any sane argument range; failure to do so raises NumericalError.
    """
    alpha = float(alpha)
    x = float(x)
    if not alpha > 0.0:
        raise ValidationError(f"alpha must be > 0, got {alpha!r}")
    if not x >= 0.0:
        raise ValidationError(f"x must be >= 0, got {x!r}")
    if x == 0.0:
        return 0.0
    return _regularized_lower_gamma(alpha, x, tol) * math.gamma(alpha)


def _regularized_lower_gamma(a: float, x: float, tol: Tolerance) -> float:
    if x < a + 1.0:
        # series: P(a,x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
        log_pref = a * math.log(x) - x - math.lgamma(a + 1.0)
        term = 1.0
        total = 1.0
        for n in range(1, tol.max_terms + 1):
            term *= x / (a + n)
            total += term
            if term < total * 1e-17:
                return min(1.0, max(0.0, math.exp(log_pref) * total))
        raise NumericalError(f"incomplete gamma series stalled at alpha={a}, x={x}")

    # Lentz continued fraction for the upper integral Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, tol.max_terms + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            q = math.exp(a * math.log(x) - x - math.lgamma(a)) * h
            return min(1.0, max(0.0, 1.0 - q))
    raise NumericalError(f"incomplete gamma continued fraction stalled at alpha={a}, x={x}")
