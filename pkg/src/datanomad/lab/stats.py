"""Dependency-free normal/Student-t tails and two-group proportion tests.

``normal_cdf`` uses the Chebyshev-fitted erfc approximation from Numerical
Recipes (``erfcc``): fractional error below 1.2e-7 everywhere, so the absolute
error of the CDF stays under 6e-8. The t tail goes through the regularized
incomplete beta function, evaluated by its continued fraction (modified
Lentz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from datanomad.errors import UndefinedStatisticError

_ERFC_COEFFS = (
    -1.26551223,
    1.00002368,
    0.37409196,
    0.09678418,
    -0.18628806,
    0.27886807,
    -1.13520398,
    1.48851587,
    -0.82215223,
    0.17087277,
)


def erfc(x: float) -> float:
    z = abs(x)
    t = 1.0 / (1.0 + 0.5 * z)
    poly = 0.0
    for c in reversed(_ERFC_COEFFS[1:]):
        poly = c + t * poly
    ans = t * math.exp(-z * z + _ERFC_COEFFS[0] + t * poly)
    return ans if x >= 0.0 else 2.0 - ans


def normal_cdf(x: float) -> float:
    return 0.5 * erfc(-x / math.sqrt(2.0))


def normal_two_tailed(z: float) -> float:
    # 2 * (1 - Phi(|z|)) written as erfc to avoid cancellation in the tail
    return min(1.0, erfc(abs(z) / math.sqrt(2.0)))


def _betacf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-15) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x in (0.0, 1.0):
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_tailed(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    return betainc(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class TestResult:
    """Statistic and two-tailed p-value of a two-group comparison.

    ``z`` holds the test statistic; for ``method="t"`` it is Student's t with
    ``df`` degrees of freedom, for ``method="z"`` a standard normal deviate.
    """

    __test__ = False  # not a pytest class

    z: float
    p: float
    method: str = "z"
    df: int | None = None


def _check_counts(yes1: int, n1: int, yes2: int, n2: int) -> None:
    if n1 < 1 or n2 < 1:
        raise ValueError("group sizes must be >= 1")
    if not (0 <= yes1 <= n1 and 0 <= yes2 <= n2):
        raise ValueError("successes must lie in [0, n] for each group")


def two_proportion_z(yes1: int, n1: int, yes2: int, n2: int, method: str = "z") -> TestResult:
    """Compare the "yes" share of group 2 against group 1.

    ``method="z"``: pooled two-proportion z-test, normal reference.
    ``method="t"``: pooled-variance two-sample t-test on the 0/1 outcome with
    ``n1 + n2 - 2`` degrees of freedom; identical to the t-test of the
    treatment coefficient in an OLS regression of the outcome on a group
    dummy. This is the variant that matches the published worked p-values.
    """
    _check_counts(yes1, n1, yes2, n2)
    p1, p2 = yes1 / n1, yes2 / n2
    diff = p2 - p1
    if method == "z":
        pooled = (yes1 + yes2) / (n1 + n2)
        if pooled <= 0.0 or pooled >= 1.0:
            raise UndefinedStatisticError("pooled proportion is 0 or 1; z is undefined")
        z = diff / math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
        return TestResult(z=z, p=normal_two_tailed(z), method="z")
    if method == "t":
        df = n1 + n2 - 2
        if df < 1:
            raise UndefinedStatisticError("need at least 3 observations for a t-test")
        # within-group sums of squares of a 0/1 variable: y - y^2/n
        ss = (yes1 - yes1 * yes1 / n1) + (yes2 - yes2 * yes2 / n2)
        if ss <= 0.0:
            raise UndefinedStatisticError("zero within-group variance; t is undefined")
        se = math.sqrt(ss / df * (1.0 / n1 + 1.0 / n2))
        t = diff / se
        return TestResult(z=t, p=min(1.0, student_t_two_tailed(t, df)), method="t", df=df)
    raise ValueError(f"unknown method {method!r}")
