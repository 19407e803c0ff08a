"""Phase-2 size calibration by order statistics.

The calibrated set size is the i*-th smallest transformed Phase-2 value,
where i* is the smallest rank whose binomial tail clears the confidence
target:

    i* = min{ r : P(Bin(n2, 1-eps) <= r-1) >= 1-delta }.

Binomial terms are evaluated in log space (lgamma) and accumulated by
streaming summation so n2 up to 1e6 stays overflow-free. CDF comparisons
against 1-delta carry a 1e-12 slack to keep boundary cases (where the tail
equals the target exactly in real arithmetic) from flipping on rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleCalibrationError, InvalidArgumentError

__all__ = [
    "CalibResult",
    "min_phase2_size",
    "calib_index_upper",
    "calib_index_lower",
    "calibrate_size",
    "theoretical_confidence",
    "binom_cdf",
]

_BOUNDARY_SLACK = 1e-12


def _check_prob(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 < value < 1.0):
        raise InvalidArgumentError(f"{name} must lie strictly in (0,1), got {value}")
    return value


@dataclass(frozen=True)
class CalibResult:
    i_star: int
    s: float
    n2: int
    epsilon: float
    delta: float
    tie_warning: bool = False


def min_phase2_size(epsilon: float, delta: float) -> int:
    """Smallest n2 with 1 - (1-eps)^n2 >= 1 - delta."""
    epsilon = _check_prob(epsilon, "epsilon")
    delta = _check_prob(delta, "delta")
    n = max(1, math.ceil(math.log(delta) / math.log(1.0 - epsilon)))
    # guard the ceil against representation error on either side
    while (1.0 - epsilon) ** n > delta * (1.0 + 1e-15):
        n += 1
    while n > 1 and (1.0 - epsilon) ** (n - 1) <= delta * (1.0 + 1e-15):
        n -= 1
    return n


def _log_pmf(k: int, n: int, p: float) -> float:
    """log C(n,k) p^k (1-p)^(n-k); assumes 0 < p < 1 and 0 <= k <= n."""
    return (
        math.lgamma(n + 1)
        - math.lgamma(k + 1)
        - math.lgamma(n - k + 1)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )


def binom_cdf(k: int, n: int, p: float) -> float:
    """P(Bin(n, p) <= k) by streaming log-space summation.

    Terms are summed from 0 upward; individually underflowing terms far in
    the left tail contribute nothing, which is exactly their weight.
    """
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    total = 0.0
    lp = _log_pmf(0, n, p)
    ratio_p = math.log(p) - math.log1p(-p)
    total += math.exp(lp)
    for j in range(1, k + 1):
        lp += math.log((n - j + 1) / j) + ratio_p
        total += math.exp(lp)
    return min(total, 1.0)


def _upper_tail(r: int, n: int, p: float) -> float:
    """P(Bin(n, p) >= r), summed from the top so a p-near-1 tail keeps precision."""
    if r <= 0:
        return 1.0
    if r > n:
        return 0.0
    total = 0.0
    lp = _log_pmf(n, n, p)
    ratio = math.log1p(-p) - math.log(p)
    total += math.exp(lp)
    for j in range(n - 1, r - 1, -1):
        # move from pmf(j+1) to pmf(j)
        lp += math.log((j + 1) / (n - j)) + ratio
        total += math.exp(lp)
    return min(total, 1.0)


def calib_index_upper(n2: int, epsilon: float, delta: float) -> int:
    """Rank of the order statistic giving a 1-delta upper confidence bound
    on the (1-eps) quantile."""
    epsilon = _check_prob(epsilon, "epsilon")
    delta = _check_prob(delta, "delta")
    n2 = int(n2)
    required = min_phase2_size(epsilon, delta)
    if n2 < required:
        raise InfeasibleCalibrationError(
            f"n2={n2} is below the minimum {required} required for "
            f"(epsilon={epsilon}, delta={delta})",
            required_min=required,
        )
    target = (1.0 - delta) - _BOUNDARY_SLACK
    p = 1.0 - epsilon
    r0 = min(max(1, math.ceil(n2 * p)), n2)
    # CDF at r0 - 1, then walk incrementally in whichever direction applies
    cdf = binom_cdf(r0 - 1, n2, p)
    if cdf >= target:
        # can happen for large delta; walk down to the smallest valid rank
        r = r0
        lp = _log_pmf(r0 - 1, n2, p) if r0 >= 1 else -math.inf
        ratio = math.log1p(-p) - math.log(p)
        while r > 1:
            nxt = cdf - math.exp(lp)
            if nxt >= target:
                cdf = nxt
                lp += math.log(r - 1) - math.log(n2 - r + 2) + ratio
                r -= 1
            else:
                break
        return r
    r = r0
    lp = _log_pmf(r0 - 1, n2, p)
    ratio = math.log(p) - math.log1p(-p)
    while r < n2:
        lp += math.log((n2 - r + 1) / r) + ratio
        cdf += math.exp(lp)
        r += 1
        if cdf >= target:
            return r
    return n2


def calib_index_lower(n2: int, epsilon: float, delta: float) -> int:
    """Largest rank whose order statistic lower-bounds the (1-eps) quantile
    with confidence 1-delta."""
    epsilon = _check_prob(epsilon, "epsilon")
    delta = _check_prob(delta, "delta")
    n2 = int(n2)
    # validity: P(Bin(n2, 1-eps) >= 1) = 1 - eps^n2 must reach 1 - delta
    if 1.0 - epsilon**n2 < (1.0 - delta) - _BOUNDARY_SLACK:
        raise InfeasibleCalibrationError(
            f"n2={n2} cannot produce a lower confidence bound at "
            f"(epsilon={epsilon}, delta={delta})",
            required_min=min_phase2_size(1.0 - epsilon, delta),
        )
    target = (1.0 - delta) - _BOUNDARY_SLACK
    p = 1.0 - epsilon
    best = 1
    # upper tail is nonincreasing in r; scan up from 1 would be O(n2^2) with
    # naive tails, so walk once with an incremental tail from the top rank down
    r = n2
    tail = _upper_tail(r, n2, p)
    lp = _log_pmf(n2, n2, p)
    ratio = math.log1p(-p) - math.log(p)
    while r > 1 and tail < target:
        lp += math.log(r / (n2 - r + 1)) + ratio
        tail += math.exp(lp)
        r -= 1
    if tail >= target:
        best = r
    return best


def calibrate_size(t_values, epsilon: float, delta: float) -> CalibResult:
    """Pick the calibrated size s as the i*-th smallest transformed value."""
    arr = np.asarray(t_values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise InfeasibleCalibrationError(
            "no Phase-2 values supplied",
            required_min=min_phase2_size(epsilon, delta),
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("t_values contain non-finite entries")
    n2 = arr.size
    i_star = calib_index_upper(n2, epsilon, delta)
    ordered = np.sort(arr, kind="stable")
    s = float(ordered[i_star - 1])
    ties = bool(np.unique(arr).size < n2)
    return CalibResult(
        i_star=i_star,
        s=s,
        n2=n2,
        epsilon=float(epsilon),
        delta=float(delta),
        tie_warning=ties,
    )


def theoretical_confidence(n2: int, epsilon: float, delta: float) -> float:
    """Achieved confidence 1 - delta_theoretical at the chosen rank i*."""
    i_star = calib_index_upper(n2, epsilon, delta)
    return binom_cdf(i_star - 1, int(n2), 1.0 - float(epsilon))
