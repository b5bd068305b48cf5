"""
Bessel functions of the first kind for walker-lab.

J_n(x) for integer n >= 0 and real x >= 0, evaluated with the ascending
power series for small arguments and Miller's backward recurrence,
normalized by the Neumann sum J0 + 2 sum J_2k = 1, elsewhere. One backward
sweep yields every order 0..n_max at once, which is what the modal
decomposition needs.

The per-bounce inner loop only needs J0 and J1 on a few hundred arguments
per bounce; it uses the compiled kernels from scipy.special.
"""

import math

import numpy as np
from scipy import special

from src.common.exceptions import DomainError

MAX_ORDER = 64

# Series is used below this argument (cancellation stays under 1e-14 there).
SERIES_LIMIT = 1.0
SERIES_TERMS = 30

_RESCALE_AT = 1e250
_RESCALE_BY = 1e-250

ZERO_SCAN_STEP = 0.5


def _check_order(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"Bessel order must be a non-negative integer, got {n!r}")
    if n > MAX_ORDER:
        raise DomainError(f"Bessel order must be <= {MAX_ORDER}, got {n}")


def _check_arguments(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    if np.any(x < 0):
        raise DomainError("Bessel argument must be >= 0")


def _series(n_max: int, x: np.ndarray) -> np.ndarray:
    """Ascending series J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)."""
    half = 0.5 * x
    q = -(half * half)
    out = np.empty((n_max + 1, len(x)))
    # (x/2)^n / n!, built incrementally
    lead = np.ones_like(x)
    for n in range(n_max + 1):
        if n > 0:
            lead = lead * half / n
        term = lead.copy()
        total = term.copy()
        for k in range(1, SERIES_TERMS):
            term = term * q / (k * (k + n))
            total += term
        out[n] = total
    return out


def _start_order(n_max: int, x_max: float) -> int:
    """Even starting order for the backward recurrence."""
    top = max(n_max, int(math.ceil(x_max)))
    start = top + 20 + int(math.sqrt(40.0 * max(top, 1)))
    return start + (start % 2)


def _miller(n_max: int, x: np.ndarray) -> np.ndarray:
    """Backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalized by the Neumann sum."""
    start = _start_order(n_max, float(x.max()))
    out = np.zeros((n_max + 1, len(x)))
    inv = 2.0 / x
    j_next = np.zeros_like(x)
    j_curr = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        j_prev = k * inv * j_curr - j_next
        j_next, j_curr = j_curr, j_prev
        # j_curr now holds J_{k-1}
        order = k - 1
        if order <= n_max:
            out[order] = j_curr
        if order % 2 == 0 and order > 0:
            norm += 2.0 * j_curr
        big = np.abs(j_curr) > _RESCALE_AT
        if np.any(big):
            j_curr[big] *= _RESCALE_BY
            j_next[big] *= _RESCALE_BY
            norm[big] *= _RESCALE_BY
            out[:, big] *= _RESCALE_BY
    norm += out[0]
    return out / norm


def bessel_j_orders(n_max: int, x: np.ndarray | float) -> np.ndarray:
    """
    J_0..J_n_max at every argument.

    Args:
        n_max: Highest order (<= 64)
        x: Non-negative finite argument(s)

    Returns:
        Array of shape (n_max + 1, len(x))

    Raises:
        DomainError: On a bad order or a negative / non-finite argument
    """
    _check_order(n_max)
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    _check_arguments(x)
    out = np.zeros((n_max + 1, len(x)))
    if len(x) == 0:
        return out

    small = x <= SERIES_LIMIT
    if np.any(small):
        out[:, small] = _series(n_max, x[small])
    large = ~small
    if np.any(large):
        out[:, large] = _miller(n_max, x[large])
    return out


def bessel_j(n: int, x: float) -> float:
    """
    J_n(x) for a single order and argument.

    Raises:
        DomainError: On a bad order or a negative / non-finite argument
    """
    _check_order(n)
    if not math.isfinite(x):
        raise DomainError(f"Bessel argument must be finite, got {x}")
    if x < 0:
        raise DomainError(f"Bessel argument must be >= 0, got {x}")
    if x == 0:
        return 1.0 if n == 0 else 0.0
    return float(bessel_j_orders(n, x)[n, 0])


def bessel_j0_zero(k: int) -> float:
    """
    k-th positive zero of J0.

    Sign changes are located on a grid of spacing 0.5, then bisected down
    to adjacent floating-point numbers.
    """
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"zero index must be a positive integer, got {k!r}")

    found = 0
    lo = 0.0
    f_lo = 1.0
    while True:
        hi = lo + ZERO_SCAN_STEP
        f_hi = bessel_j(0, hi)
        if f_hi == 0.0:
            found += 1
            if found == k:
                return hi
        elif f_lo * f_hi < 0:
            found += 1
            if found == k:
                return _bisect_j0(lo, hi, f_lo)
        lo, f_lo = hi, f_hi


def _bisect_j0(lo: float, hi: float, f_lo: float) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = bessel_j(0, mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def j0_kernel(x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Compiled J0 for the bounce-map inner loop."""
    return special.j0(x, out=out)


def j1_kernel(x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Compiled J1 for the bounce-map inner loop; writes into `out` when given."""
    return special.j1(x, out=out)
