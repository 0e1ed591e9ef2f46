"""Special functions and combinatorics shared by the analytic formulas.

The lower incomplete gamma function follows the classic split: power series
below ``x = s + 1`` and a Lentz continued fraction for the upper tail above.
"""

from __future__ import annotations

import math
import sys
from collections.abc import Iterable

_EPS = 1e-16
_TINY = sys.float_info.min / _EPS
_MAX_ITER = 10_000

# Above this many digits an exact integer result is reported as a float.
COMPOSITION_EXACT_LIMIT = 10**300


def _gamma_series(s: float, x: float) -> float:
    """Return gamma(s, x) * exp(x) / x**s via the power series."""
    term = 1.0 / s
    total = term
    a = s
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
    raise ArithmeticError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _gamma_cf(s: float, x: float) -> float:
    """Return Gamma(s, x) * exp(x) / x**s via the modified Lentz method."""
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def lower_incomplete_gamma(s: float, x: float) -> float:
    """Lower incomplete gamma function ``gamma(s, x) = int_0^x t^(s-1) e^(-t) dt``.

    Accepts ``x = inf`` and returns ``Gamma(s)`` there.

    Raises
    ------
    ValueError
        If ``s <= 0`` or ``x < 0``.
    """
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    if not x >= 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.gamma(s)
    log_prefactor = s * math.log(x) - x
    if x < s + 1.0:
        return math.exp(log_prefactor) * _gamma_series(s, x)
    upper = math.exp(log_prefactor) * _gamma_cf(s, x)
    return math.gamma(s) - upper


def scaled_lower_incomplete_gamma(s: float, x: float) -> float:
    """Return ``s * gamma(s, x) / x**s``, the form that appears in the CDF.

    This stays accurate for tiny ``x`` where both ``gamma(s, x)`` and ``x**s``
    vanish; the limit at ``x -> 0`` is 1.
    """
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    if not x >= 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return s * math.exp(-x) * _gamma_series(s, x)
    return s * lower_incomplete_gamma(s, x) * math.exp(-s * math.log(x))


def binomial_coefficient(n: int, k: int) -> float:
    """``n choose k`` as a float, exact below 2**53.

    Values beyond the float range come back as ``inf``; use
    :func:`log_binomial_coefficient` for those.
    """
    if n < 0 or k < 0:
        raise ValueError(f"n and k must be non-negative, got n={n}, k={k}")
    if k > n:
        raise ValueError(f"k must not exceed n, got n={n}, k={k}")
    try:
        return float(math.comb(n, k))
    except OverflowError:
        return math.inf


def log_binomial_coefficient(n: int, k: int) -> float:
    if k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def composition_count(n_nodes: int, k: int) -> int | float:
    """Number of stage outcomes ``(S_1, ..., S_k)`` that finish ``n_nodes`` in exactly ``k`` slots.

    Equals ``(N + k - 2)! / ((N - 1)! (k - 1)!)``. Returned as an exact ``int``
    unless it exceeds ``COMPOSITION_EXACT_LIMIT``, in which case a float
    (possibly ``inf``) is returned.
    """
    if n_nodes < 1 or k < 1:
        raise ValueError(f"n_nodes and k must be positive, got {n_nodes}, {k}")
    count = math.comb(n_nodes + k - 2, k - 1)
    if count > COMPOSITION_EXACT_LIMIT:
        try:
            return float(count)
        except OverflowError:
            return math.inf
    return count


def log_binomial_pmf(n: int, s: int, p: float) -> float:
    """Log of ``C(n, s) p^s (1-p)^(n-s)``, with the ``p in {0, 1}`` edges handled exactly."""
    if s < 0 or s > n:
        return -math.inf
    if p <= 0.0:
        return 0.0 if s == 0 else -math.inf
    if p >= 1.0:
        return 0.0 if s == n else -math.inf
    return log_binomial_coefficient(n, s) + s * math.log(p) + (n - s) * math.log1p(-p)


def log_sum_exp(values: Iterable[float]) -> float:
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))
